# magweyl/fields.py

"""
magweyl - Coefficient fields

Holds the coefficients g^{jk}, (A1, A2) and V of the magnetic Schroedinger
operator on a square computational grid and derives the geometric quantities
the asymptotics need: the scalar intensity F, the area density sqrt(g), V/F,
the scalar curvature and Laplace-Beltrami operator of the metric F^{-1} g^{jk},
and the omega_1 coefficient.

Every coefficient is a vectorized callback (``Field``). Analytic derivatives
are used when the field carries them (polynomial tables always do); otherwise
derivatives come from fourth-order central stencils. Grid-only data
(``ScalarField`` without a callback) is differentiated with fourth-order
stencils that turn one-sided at the boundary.
"""
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import RectBivariateSpline

from .errors import ValidationError

logger = logging.getLogger("magweyl.fields")

# --- Constants ---
MIN_GRID_NODES = 8
DERIVATIVE_STEP = 1e-2
CALLBACK_AGREEMENT_TOL = 1e-12
SPACING_RTOL = 1e-12
DEFAULT_EPSILON = 1e-3
DEFAULT_EPSILON0 = 1e-3
CONTRAVARIANT = "contravariant"
COVARIANT = "covariant"
METRIC_READINGS = (CONTRAVARIANT, COVARIANT)

_D1_OFFSETS = (-2, -1, 1, 2)
_D1_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)
_D2_OFFSETS = (-2, -1, 0, 1, 2)
_D2_WEIGHTS = (-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0)

Callback = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _broadcast(value, x, y) -> np.ndarray:
    shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
    return np.asarray(value, dtype=float) + np.zeros(shape)


def _is_constant(field: "Field") -> bool:
    if field.coeffs is None:
        return False
    return not np.any(field.coeffs.ravel()[1:])


def _poly_sub(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    shape = (max(p.shape[0], q.shape[0]), max(p.shape[1], q.shape[1]))
    out = np.zeros(shape)
    out[: p.shape[0], : p.shape[1]] += p
    out[: q.shape[0], : q.shape[1]] -= q
    return out


def _stencil_d1(func: Callback, x, y, step: float, axis: int) -> np.ndarray:
    acc = 0.0
    for k, w in zip(_D1_OFFSETS, _D1_WEIGHTS):
        if axis == 0:
            acc = acc + w * func(x + k * step, y)
        else:
            acc = acc + w * func(x, y + k * step)
    return _broadcast(acc, x, y) / step


def _stencil_d2(func: Callback, x, y, step: float, axis: int) -> np.ndarray:
    acc = 0.0
    for k, w in zip(_D2_OFFSETS, _D2_WEIGHTS):
        if axis == 0:
            acc = acc + w * func(x + k * step, y)
        else:
            acc = acc + w * func(x, y + k * step)
    return _broadcast(acc, x, y) / step**2


# --- Fields ---
class Field:
    """A smooth real coefficient given by a vectorized callback ``func(x, y)``.

    ``grad`` returns ``(f_x, f_y)`` and ``hess`` returns ``(f_xx, f_xy, f_yy)``;
    both are optional.
    """

    def __init__(
        self,
        func: Callback,
        grad: Optional[Callable] = None,
        hess: Optional[Callable] = None,
        name: str = "field",
        coeffs: Optional[np.ndarray] = None,
        step: float = DERIVATIVE_STEP,
    ):
        self.func = func
        self._grad = grad
        self._hess = hess
        self.name = name
        self.coeffs = coeffs
        self.step = step

    def __repr__(self):
        kind = "polynomial" if self.coeffs is not None else "callback"
        return f"Field(name='{self.name}', {kind})"

    def __call__(self, x, y) -> np.ndarray:
        return _broadcast(self.func(x, y), x, y)

    @property
    def has_analytic_derivatives(self) -> bool:
        return self._grad is not None and self._hess is not None

    @classmethod
    def polynomial(cls, coeffs, name: str = "poly") -> "Field":
        """Field from a table ``c[i][j]`` of ``x**i * y**j`` coefficients."""
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if c.ndim != 2 or not np.all(np.isfinite(c)):
            raise ValidationError(
                f"Polynomial table for '{name}' must be a finite 2-D array."
            )
        cx = npoly.polyder(c, axis=0)
        cy = npoly.polyder(c, axis=1)
        cxx = npoly.polyder(cx, axis=0)
        cxy = npoly.polyder(cx, axis=1)
        cyy = npoly.polyder(cy, axis=1)

        def value(table):
            def evaluate(x, y):
                xb, yb = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
                return npoly.polyval2d(xb, yb, table)

            return evaluate

        fx, fy = value(cx), value(cy)
        fxx, fxy, fyy = value(cxx), value(cxy), value(cyy)
        return cls(
            value(c),
            grad=lambda x, y: (fx(x, y), fy(x, y)),
            hess=lambda x, y: (fxx(x, y), fxy(x, y), fyy(x, y)),
            name=name,
            coeffs=c,
        )

    @classmethod
    def constant(cls, value: float, name: str = "const") -> "Field":
        return cls.polynomial([[float(value)]], name=name)

    def gradient(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        if self._grad is not None:
            fx, fy = self._grad(x, y)
            return _broadcast(fx, x, y), _broadcast(fy, x, y)
        return (
            _stencil_d1(self, x, y, self.step, 0),
            _stencil_d1(self, x, y, self.step, 1),
        )

    def hessian(self, x, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._hess is not None:
            fxx, fxy, fyy = self._hess(x, y)
            return (
                _broadcast(fxx, x, y),
                _broadcast(fxy, x, y),
                _broadcast(fyy, x, y),
            )
        if self._grad is not None:

            def gx(xx, yy):
                return self.gradient(xx, yy)[0]

            def gy(xx, yy):
                return self.gradient(xx, yy)[1]

            fxx = _stencil_d1(gx, x, y, self.step, 0)
            fyy = _stencil_d1(gy, x, y, self.step, 1)
            fxy = 0.5 * (
                _stencil_d1(gx, x, y, self.step, 1)
                + _stencil_d1(gy, x, y, self.step, 0)
            )
            return fxx, fxy, fyy

        def fy_stencil(xx, yy):
            return _stencil_d1(self, xx, yy, self.step, 1)

        return (
            _stencil_d2(self, x, y, self.step, 0),
            _stencil_d1(fy_stencil, x, y, self.step, 0),
            _stencil_d2(self, x, y, self.step, 1),
        )


class Grid2D:
    """Uniform node grid on a rectangle with equal spacing in both axes."""

    def __init__(
        self,
        nx: int,
        ny: int,
        x_min: float = -1.0,
        x_max: float = 1.0,
        y_min: float = -1.0,
        y_max: float = 1.0,
    ):
        if nx < MIN_GRID_NODES or ny < MIN_GRID_NODES:
            raise ValidationError(
                f"Grid too coarse for fourth-order stencils: got {nx}x{ny}, "
                f"need at least {MIN_GRID_NODES} nodes per axis."
            )
        if not (x_max > x_min and y_max > y_min):
            raise ValidationError("Grid bounds must satisfy min < max on both axes.")
        ax = (x_max - x_min) / (nx - 1)
        ay = (y_max - y_min) / (ny - 1)
        if abs(ax - ay) > SPACING_RTOL * max(ax, ay):
            raise ValidationError(
                f"Grid spacing must be equal in both axes (got {ax!r} and {ay!r})."
            )
        self.nx, self.ny = int(nx), int(ny)
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)
        self.a = ax
        self._mesh = None

    @classmethod
    def square(cls, nodes: int, half_width: float = 1.0) -> "Grid2D":
        return cls(nodes, nodes, -half_width, half_width, -half_width, half_width)

    def __repr__(self):
        return (
            f"Grid2D({self.nx}x{self.ny}, [{self.x_min}, {self.x_max}]x"
            f"[{self.y_min}, {self.y_max}], a={self.a:.6g})"
        )

    def __eq__(self, other):
        return isinstance(other, Grid2D) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self) -> Tuple:
        return (self.nx, self.ny, self.x_min, self.x_max, self.y_min, self.y_max)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates with ``indexing='ij'`` (first index runs along x)."""
        if self._mesh is None:
            self._mesh = np.meshgrid(self.xs, self.ys, indexing="ij")
        return self._mesh

    def node(self, i: int, j: int) -> Tuple[float, float]:
        return float(self.xs[i]), float(self.ys[j])

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return (
            self.x_min + margin <= x <= self.x_max - margin
            and self.y_min + margin <= y <= self.y_max - margin
        )

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask


class ScalarField:
    """Real values on the nodes of a grid, optionally backed by a callback."""

    def __init__(
        self,
        grid: Grid2D,
        values,
        callback: Optional[Callback] = None,
        name: str = "",
    ):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValidationError(
                f"ScalarField '{name}' has shape {values.shape}, grid is {grid.shape}."
            )
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            i, j = bad[0]
            x, y = grid.node(i, j)
            raise ValidationError(
                f"ScalarField '{name}' is not finite at node ({i}, {j}) = ({x:.6g}, {y:.6g})."
            )
        self.grid = grid
        self.values = values
        self.callback = callback
        self.name = name
        self._spline = None

    def __repr__(self):
        return f"ScalarField(name='{self.name}', grid={self.grid!r})"

    @classmethod
    def from_callback(cls, grid: Grid2D, callback: Callback, name: str = ""):
        X, Y = grid.mesh()
        return cls(grid, _broadcast(callback(X, Y), X, Y), callback=callback, name=name)

    def check_callback(self, tol: float = CALLBACK_AGREEMENT_TOL) -> float:
        """Largest node deviation between callback and samples; raises above ``tol``."""
        if self.callback is None:
            return 0.0
        X, Y = self.grid.mesh()
        deviation = float(np.max(np.abs(_broadcast(self.callback(X, Y), X, Y) - self.values)))
        if deviation > tol:
            raise ValidationError(
                f"Callback of '{self.name}' disagrees with its samples by {deviation:.3g}."
            )
        return deviation

    def at(self, x, y) -> np.ndarray:
        if self.callback is not None:
            return _broadcast(self.callback(x, y), x, y)
        if self._spline is None:
            self._spline = RectBivariateSpline(
                self.grid.xs, self.grid.ys, self.values, kx=3, ky=3
            )
        return _broadcast(self._spline.ev(x, y), x, y)

    def as_field(self) -> Field:
        if self.callback is None:
            return Field(self.at, name=self.name)
        return Field(self.callback, name=self.name)


# --- Grid stencils ---
def grid_derivative(values: np.ndarray, a: float, axis: int, order: int) -> np.ndarray:
    """Fourth-order derivative along ``axis`` with one-sided boundary stencils."""
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if f.shape[0] < MIN_GRID_NODES:
        raise ValidationError(
            f"Grid too coarse for fourth-order stencils ({f.shape[0]} < {MIN_GRID_NODES})."
        )
    out = np.empty_like(f)
    if order == 1:
        out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * a)
        out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12.0 * a)
        out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12.0 * a)
        out[-1] = -(
            -25 * f[-1] + 48 * f[-2] - 36 * f[-3] + 16 * f[-4] - 3 * f[-5]
        ) / (12.0 * a)
        out[-2] = -(-3 * f[-1] - 10 * f[-2] + 18 * f[-3] - 6 * f[-4] + f[-5]) / (
            12.0 * a
        )
    elif order == 2:
        a2 = 12.0 * a * a
        out[2:-2] = (
            -f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]
        ) / a2
        out[0] = (
            45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]
        ) / a2
        out[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / a2
        out[-1] = (
            45 * f[-1]
            - 154 * f[-2]
            + 214 * f[-3]
            - 156 * f[-4]
            + 61 * f[-5]
            - 10 * f[-6]
        ) / a2
        out[-2] = (
            10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]
        ) / a2
    else:
        raise ValueError(f"Unsupported derivative order {order}")
    return np.moveaxis(out, 0, axis)


def grid_gradient(values: np.ndarray, a: float) -> Tuple[np.ndarray, np.ndarray]:
    return grid_derivative(values, a, 0, 1), grid_derivative(values, a, 1, 1)


def grid_hessian(values: np.ndarray, a: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    fx = grid_derivative(values, a, 0, 1)
    return (
        grid_derivative(values, a, 0, 2),
        grid_derivative(fx, a, 1, 1),
        grid_derivative(values, a, 1, 2),
    )


# --- Coefficient set ---
class CoefficientSet:
    """The fields g^{jk}, (A1, A2), V of one scenario on its computational grid."""

    FIELD_NAMES = ("g11", "g12", "g22", "A1", "A2", "V")

    def __init__(
        self,
        grid: Grid2D,
        g11: Field,
        g12: Field,
        g22: Field,
        A1: Field,
        A2: Field,
        V: Field,
        epsilon: float = DEFAULT_EPSILON,
        epsilon0: float = DEFAULT_EPSILON0,
        metric_reading: str = CONTRAVARIANT,
        name: str = "custom",
    ):
        if metric_reading not in METRIC_READINGS:
            raise ValidationError(
                f"metric_reading must be one of {', '.join(METRIC_READINGS)}; "
                f"got '{metric_reading}'."
            )
        if epsilon <= 0 or epsilon0 <= 0:
            raise ValidationError("epsilon and epsilon0 must be positive.")
        self.grid = grid
        self.g11, self.g12, self.g22 = g11, g12, g22
        self.A1, self.A2, self.V = A1, A2, V
        self.epsilon = float(epsilon)
        self.epsilon0 = float(epsilon0)
        self.metric_reading = metric_reading
        self.name = name
        self._samples: Dict[str, np.ndarray] = {}
        self._derived: Dict[str, Field] = {}

    def __repr__(self):
        return f"CoefficientSet(name='{self.name}', grid={self.grid!r})"

    def replace(self, **changes) -> "CoefficientSet":
        """Copy with some fields or settings swapped; caches are not shared."""
        kwargs = {name: getattr(self, name) for name in self.FIELD_NAMES}
        kwargs.update(
            grid=self.grid,
            epsilon=self.epsilon,
            epsilon0=self.epsilon0,
            metric_reading=self.metric_reading,
            name=self.name,
        )
        kwargs.update(changes)
        return CoefficientSet(**kwargs)

    # --- pointwise quantities ---
    def inverse_metric(self, x, y):
        return self.g11(x, y), self.g12(x, y), self.g22(x, y)

    def metric_det(self, x, y) -> np.ndarray:
        """det(g^{jk}); the area density is its inverse square root."""
        g11, g12, g22 = self.inverse_metric(x, y)
        return g11 * g22 - g12 * g12

    def f12(self, x, y) -> np.ndarray:
        dA2_dx, _ = self.A2.gradient(x, y)
        _, dA1_dy = self.A1.gradient(x, y)
        return dA2_dx - dA1_dy

    def intensity(self, x, y) -> np.ndarray:
        """F = |F12| g^{-1/2} with g = det(g^{jk})^{-1}."""
        return np.abs(self.f12(x, y)) * np.sqrt(self.metric_det(x, y))

    def sqrt_g(self, x, y) -> np.ndarray:
        return 1.0 / np.sqrt(self.metric_det(x, y))

    def v_over_f(self, x, y) -> np.ndarray:
        return self.V(x, y) / self.intensity(x, y)

    def effective_inverse_metric(self, x, y):
        """Contravariant components G^{jk} of the metric built from F^{-1} g^{jk}."""
        g11, g12, g22 = self.inverse_metric(x, y)
        F = self.intensity(x, y)
        if self.metric_reading == CONTRAVARIANT:
            return g11 / F, g12 / F, g22 / F
        det = g11 * g22 - g12 * g12
        return F * g22 / det, -F * g12 / det, F * g11 / det

    def effective_metric(self, x, y):
        """Covariant components G_{jk} of the same metric."""
        g11, g12, g22 = self.inverse_metric(x, y)
        F = self.intensity(x, y)
        if self.metric_reading == COVARIANT:
            return g11 / F, g12 / F, g22 / F
        det = g11 * g22 - g12 * g12
        return F * g22 / det, -F * g12 / det, F * g11 / det

    def derived_field(self, name: str) -> Field:
        """Cached ``Field`` wrappers of derived quantities.

        F and V/F carry analytic derivatives when the inputs allow it; the
        metric-derived fields always use stencils.
        """
        if name not in self._derived:
            if name == "F":
                self._derived[name] = self._intensity_field()
                return self._derived[name]
            if name == "vf":
                self._derived[name] = self._vf_field()
                return self._derived[name]
            builders = {
                "sqrt_g": self.sqrt_g,
                "Ginv11": lambda x, y: self.effective_inverse_metric(x, y)[0],
                "Ginv12": lambda x, y: self.effective_inverse_metric(x, y)[1],
                "Ginv22": lambda x, y: self.effective_inverse_metric(x, y)[2],
                "G11": lambda x, y: self.effective_metric(x, y)[0],
                "G12": lambda x, y: self.effective_metric(x, y)[1],
                "G22": lambda x, y: self.effective_metric(x, y)[2],
                "log_area": self._log_area,
            }
            if name not in builders:
                raise KeyError(name)
            self._derived[name] = Field(builders[name], name=name)
        return self._derived[name]

    def _intensity_field(self) -> Field:
        metric = (self.g11, self.g12, self.g22)
        if not (
            all(_is_constant(f) for f in metric)
            and self.A1.coeffs is not None
            and self.A2.coeffs is not None
        ):
            return Field(self.intensity, name="F")
        det = float(self.g11.coeffs[0, 0] * self.g22.coeffs[0, 0] - self.g12.coeffs[0, 0] ** 2)
        if det <= 0:
            return Field(self.intensity, name="F")
        table = _poly_sub(
            npoly.polyder(self.A2.coeffs, axis=0), npoly.polyder(self.A1.coeffs, axis=1)
        )
        f12 = Field.polynomial(table * np.sqrt(det), name="F12")

        def grad(x, y):
            s = np.sign(f12(x, y))
            fx, fy = f12.gradient(x, y)
            return s * fx, s * fy

        def hess(x, y):
            s = np.sign(f12(x, y))
            return tuple(s * d for d in f12.hessian(x, y))

        return Field(lambda x, y: np.abs(f12(x, y)), grad=grad, hess=hess, name="F")

    def _vf_field(self) -> Field:
        F = self.derived_field("F")
        V = self.V
        if not (V.has_analytic_derivatives and F.has_analytic_derivatives):
            return Field(self.v_over_f, name="vf")

        def value(x, y):
            return V(x, y) / F(x, y)

        def grad(x, y):
            v, f = V(x, y), F(x, y)
            vx, vy = V.gradient(x, y)
            fx, fy = F.gradient(x, y)
            return (vx * f - v * fx) / f**2, (vy * f - v * fy) / f**2

        def hess(x, y):
            v, f = V(x, y), F(x, y)
            vx, vy = V.gradient(x, y)
            fx, fy = F.gradient(x, y)
            vxx, vxy, vyy = V.hessian(x, y)
            fxx, fxy, fyy = F.hessian(x, y)
            hxx = vxx / f - 2.0 * vx * fx / f**2 - v * fxx / f**2 + 2.0 * v * fx * fx / f**3
            hyy = vyy / f - 2.0 * vy * fy / f**2 - v * fyy / f**2 + 2.0 * v * fy * fy / f**3
            hxy = (
                vxy / f
                - (vx * fy + vy * fx) / f**2
                - v * fxy / f**2
                + 2.0 * v * fx * fy / f**3
            )
            return hxx, hxy, hyy

        return Field(value, grad=grad, hess=hess, name="vf")

    def _log_area(self, x, y) -> np.ndarray:
        G11, G12, G22 = self.effective_metric(x, y)
        return 0.5 * np.log(G11 * G22 - G12 * G12)

    def sample(self, name: str) -> np.ndarray:
        """Node samples of a coefficient or derived quantity, computed once."""
        if name not in self._samples:
            X, Y = self.grid.mesh()
            if name in self.FIELD_NAMES:
                values = getattr(self, name)(X, Y)
            else:
                values = self.derived_field(name)(X, Y)
            values.setflags(write=False)
            self._samples[name] = values
        return self._samples[name]

    # --- validation ---
    def check_metric(self):
        g11 = self.sample("g11")
        det = g11 * self.sample("g22") - self.sample("g12") ** 2
        bad = np.argwhere((g11 <= 0) | (det <= 0))
        if bad.size:
            i, j = bad[0]
            x, y = self.grid.node(i, j)
            raise ValidationError(
                f"Metric g^jk is not positive definite at node ({i}, {j}) = ({x:.6g}, {y:.6g})."
            )

    def validate(self, require_positive_potential: bool = True):
        """Check ellipticity, F >= epsilon0 and, unless disabled, V >= epsilon0 on the grid."""
        self.check_metric()
        g11, g12, g22 = self.sample("g11"), self.sample("g12"), self.sample("g22")
        lam_min = 0.5 * (g11 + g22 - np.sqrt((g11 - g22) ** 2 + 4.0 * g12**2))
        self._require(lam_min >= self.epsilon, "ellipticity sum g^jk xi_j xi_k >= epsilon|xi|^2")
        self._require(self.sample("F") >= self.epsilon0, "F >= epsilon0 (F ≥ ε₀)")
        if require_positive_potential:
            self._require(self.sample("V") >= self.epsilon0, "V >= epsilon0 (V ≥ ε₀)")

    def _require(self, ok: np.ndarray, condition: str):
        bad = np.argwhere(~ok)
        if bad.size:
            i, j = bad[0]
            x, y = self.grid.node(i, j)
            raise ValidationError(
                f"Condition {condition} violated at node ({i}, {j}) = ({x:.6g}, {y:.6g}) "
                f"and {len(bad) - 1} other node(s)."
            )


# --- Pointwise geometry ---
def laplace_beltrami_at(coeffs: CoefficientSet, u: Field, x, y) -> np.ndarray:
    """(|G|^{-1/2} d_j |G|^{1/2} G^{jk} d_k) u evaluated pointwise."""
    u_x, u_y = u.gradient(x, y)
    u_xx, u_xy, u_yy = u.hessian(x, y)
    return _laplace_beltrami_from_derivatives(coeffs, x, y, u_x, u_y, u_xx, u_xy, u_yy)


def _laplace_beltrami_from_derivatives(coeffs, x, y, u_x, u_y, u_xx, u_xy, u_yy):
    Gi11 = coeffs.derived_field("Ginv11")
    Gi12 = coeffs.derived_field("Ginv12")
    Gi22 = coeffs.derived_field("Ginv22")
    G11, G12, G22 = Gi11(x, y), Gi12(x, y), Gi22(x, y)
    dG11_dx, _ = Gi11.gradient(x, y)
    dG12_dx, dG12_dy = Gi12.gradient(x, y)
    _, dG22_dy = Gi22.gradient(x, y)
    l_x, l_y = coeffs.derived_field("log_area").gradient(x, y)
    drift_x = dG11_dx + dG12_dy + G11 * l_x + G12 * l_y
    drift_y = dG12_dx + dG22_dy + G12 * l_x + G22 * l_y
    return G11 * u_xx + 2.0 * G12 * u_xy + G22 * u_yy + drift_x * u_x + drift_y * u_y


def curvature_at(coeffs: CoefficientSet, x, y) -> np.ndarray:
    """Scalar curvature (twice the Gaussian curvature, Brioschi formula)."""
    E_f = coeffs.derived_field("G11")
    F_f = coeffs.derived_field("G12")
    G_f = coeffs.derived_field("G22")
    E, Fm, G = E_f(x, y), F_f(x, y), G_f(x, y)
    E_u, E_v = E_f.gradient(x, y)
    F_u, F_v = F_f.gradient(x, y)
    G_u, G_v = G_f.gradient(x, y)
    _, _, E_vv = E_f.hessian(x, y)
    _, F_uv, _ = F_f.hessian(x, y)
    G_uu, _, _ = G_f.hessian(x, y)

    m1 = np.stack(
        [
            np.stack([-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v], -1),
            np.stack([F_v - 0.5 * G_u, E, Fm], -1),
            np.stack([0.5 * G_v, Fm, G], -1),
        ],
        -2,
    )
    zero = np.zeros_like(E)
    m2 = np.stack(
        [
            np.stack([zero, 0.5 * E_v, 0.5 * G_u], -1),
            np.stack([0.5 * E_v, E, Fm], -1),
            np.stack([0.5 * G_u, Fm, G], -1),
        ],
        -2,
    )
    gauss = (np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - Fm * Fm) ** 2
    return 2.0 * gauss


def omega1_at(coeffs: CoefficientSet, x, y) -> np.ndarray:
    vf_field = coeffs.derived_field("vf")
    vf = vf_field(x, y)
    kappa = curvature_at(coeffs, x, y)
    lap = laplace_beltrami_at(coeffs, vf_field, x, y)
    return 0.125 * kappa * vf * vf - 0.25 * vf * lap


# --- Operations ---
def compute_F(coeffs: CoefficientSet, with_sqrt_g: bool = False):
    """Scalar intensity F on the grid; with ``with_sqrt_g`` also the area density."""
    coeffs.check_metric()
    F = ScalarField(coeffs.grid, coeffs.sample("F"), callback=coeffs.intensity, name="F")
    if not with_sqrt_g:
        return F
    sqrt_g = ScalarField(
        coeffs.grid, coeffs.sample("sqrt_g"), callback=coeffs.sqrt_g, name="sqrt_g"
    )
    return F, sqrt_g


def scalar_curvature(coeffs: CoefficientSet) -> ScalarField:
    _require_stencil_grid(coeffs.grid)
    coeffs.check_metric()
    return ScalarField.from_callback(
        coeffs.grid, lambda x, y: curvature_at(coeffs, x, y), name="kappa"
    )


def laplace_beltrami(coeffs: CoefficientSet, u: ScalarField) -> ScalarField:
    _require_stencil_grid(coeffs.grid)
    coeffs.check_metric()
    if u.callback is not None:
        u_field = u.as_field()
        return ScalarField.from_callback(
            coeffs.grid,
            lambda x, y: laplace_beltrami_at(coeffs, u_field, x, y),
            name=f"L({u.name})",
        )
    if u.grid != coeffs.grid:
        raise ValidationError("Grid-only field must live on the coefficient grid.")
    a = coeffs.grid.a
    u_x, u_y = grid_gradient(u.values, a)
    u_xx, u_xy, u_yy = grid_hessian(u.values, a)
    X, Y = coeffs.grid.mesh()
    values = _laplace_beltrami_from_derivatives(coeffs, X, Y, u_x, u_y, u_xx, u_xy, u_yy)
    return ScalarField(coeffs.grid, values, name=f"L({u.name})")


def compute_omega1(coeffs: CoefficientSet) -> ScalarField:
    _require_stencil_grid(coeffs.grid)
    coeffs.check_metric()
    return ScalarField.from_callback(
        coeffs.grid, lambda x, y: omega1_at(coeffs, x, y), name="omega1"
    )


def _require_stencil_grid(grid: Grid2D):
    if grid.nx < MIN_GRID_NODES or grid.ny < MIN_GRID_NODES:
        raise ValidationError(
            f"Grid too coarse for curvature stencils: {grid.nx}x{grid.ny} < {MIN_GRID_NODES}."
        )
