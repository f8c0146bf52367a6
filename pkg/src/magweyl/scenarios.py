# magweyl/scenarios.py

"""
magweyl - Scenario registry

Built-in coefficient sets and polynomial scenarios from config tables. With
level_shift the potential takes the superstrong form V = (2 nbar + 1) mu h F + W.
"""
import logging
import math
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.integrate import quad

from .config import DEFAULT_PSI_RADIUS, ConstantsSection, ScenarioSection
from .errors import ScenarioLoadError, ValidationError
from .fields import CoefficientSet, Field, Grid2D, ScalarField

logger = logging.getLogger("magweyl.scenarios")

# --- Constants ---
PSI_SUPPORT_LIMIT = 0.5


class Scenario:
    def __init__(
        self,
        name: str,
        builtin: str,
        coeffs: CoefficientSet,
        psi: ScalarField,
        nbar: Optional[int] = None,
        params: Optional[Dict[str, Any]] = None,
    ):
        self.name = name
        self.builtin = builtin
        self.coeffs = coeffs
        self.psi = psi
        self.nbar = nbar
        self.params = params or {}

    def __repr__(self):
        mode = f", level_shift nbar={self.nbar}" if self.level_shift_mode else ""
        return f"Scenario(name='{self.name}', builtin='{self.builtin}'{mode})"

    @property
    def level_shift_mode(self) -> bool:
        return self.nbar is not None


# --- Cutoff ---
def bump(center=(0.0, 0.0), radius: float = DEFAULT_PSI_RADIUS) -> Callable:
    """exp(1 - 1/(1 - (r/R)^2)) inside the disc of radius R, 0 outside."""
    cx, cy = (float(v) for v in center)

    def psi(x, y):
        s = ((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2) / radius**2
        inside = s < 1.0
        safe = np.where(inside, s, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)

    return psi


def bump_integral(radius: float = DEFAULT_PSI_RADIUS) -> float:
    value, _ = quad(lambda s: math.exp(1.0 - 1.0 / (1.0 - s * s)) * s if s < 1 else 0.0, 0.0, 1.0)
    return 2.0 * math.pi * radius**2 * value


def make_psi(grid: Grid2D, center=(0.0, 0.0), radius: float = DEFAULT_PSI_RADIUS) -> ScalarField:
    reach = math.hypot(*center) + radius
    if reach > PSI_SUPPORT_LIMIT + 1e-12:
        raise ValidationError(
            f"psi must be supported in B(0, 1/2): |center| + radius = {reach:.4g}."
        )
    return ScalarField.from_callback(grid, bump(center, radius), name="psi")


# --- Field helpers ---
def _table(entries: Dict, shape=(5, 5)) -> np.ndarray:
    c = np.zeros(shape)
    for (i, j), value in entries.items():
        c[i, j] = value
    return c


def _symmetric_gauge(F: float):
    return (
        Field.polynomial(_table({(0, 1): -0.5 * F}, (1, 2)), name="A1"),
        Field.polynomial(_table({(1, 0): 0.5 * F}, (2, 1)), name="A2"),
    )


def _euclidean():
    return Field.constant(1.0, "g11"), Field.constant(0.0, "g12"), Field.constant(1.0, "g22")


def _constant_field(p):
    A1, A2 = _symmetric_gauge(p.get("F", 1.0))
    return (*_euclidean(), A1, A2, Field.constant(p.get("V", 1.0), "V"))


def _radial(p):
    A1, A2 = _symmetric_gauge(p.get("F", 1.0))
    c = p.get("c", 0.1)
    V = Field.polynomial(_table({(0, 0): p.get("V0", 1.0), (2, 0): c, (0, 2): c}, (3, 3)), "V")
    return (*_euclidean(), A1, A2, V)


def _saddle(p):
    A1, A2 = _symmetric_gauge(p.get("F", 1.0))
    V = Field.polynomial(
        _table(
            {
                (0, 0): p.get("V0", 1.0),
                (2, 0): p.get("axx", 0.2),
                (1, 1): p.get("axy", 0.0),
                (0, 2): p.get("ayy", -0.4),
            },
            (3, 3),
        ),
        "V",
    )
    return (*_euclidean(), A1, A2, V)


def _saddle_family(p):
    A1, A2 = _symmetric_gauge(p.get("F", 1.0))
    V0, amp, f = p.get("V0", 1.0), p.get("amp", 0.3), p.get("freq", math.pi)

    def value(x, y):
        return V0 + amp * np.cos(f * x) * np.cos(f * y)

    def grad(x, y):
        return (
            -amp * f * np.sin(f * x) * np.cos(f * y),
            -amp * f * np.cos(f * x) * np.sin(f * y),
        )

    def hess(x, y):
        cc = amp * f * f * np.cos(f * x) * np.cos(f * y)
        return -cc, amp * f * f * np.sin(f * x) * np.sin(f * y), -cc

    return (*_euclidean(), A1, A2, Field(value, grad, hess, name="V"))


def _sphere(p):
    conformal = _table({(0, 0): 1.0, (2, 0): 0.5, (0, 2): 0.5, (4, 0): 1 / 16, (2, 2): 1 / 8, (0, 4): 1 / 16})
    g11 = Field.polynomial(conformal, "g11")
    g22 = Field.polynomial(conformal, "g22")

    def A1(x, y):
        return -2.0 * y / (4.0 + x * x + y * y)

    def A2(x, y):
        return 2.0 * x / (4.0 + x * x + y * y)

    def A1_grad(x, y):
        d = 4.0 + x * x + y * y
        return 4.0 * x * y / d**2, -2.0 / d + 4.0 * y * y / d**2

    def A2_grad(x, y):
        d = 4.0 + x * x + y * y
        return 2.0 / d - 4.0 * x * x / d**2, -4.0 * x * y / d**2

    return (
        g11,
        Field.constant(0.0, "g12"),
        g22,
        Field(A1, A1_grad, name="A1"),
        Field(A2, A2_grad, name="A2"),
        Field.constant(p.get("V0", 1.0), "V"),
    )


def _bowl_field(p):
    A1 = Field.constant(0.0, "A1")
    A2 = Field.polynomial(_table({(1, 0): 1.0, (3, 0): 1.0 / 3.0, (1, 2): 1.0}), "A2")
    return (*_euclidean(), A1, A2, Field.constant(p.get("V0", 1.0), "V"))


def _tilted(p):
    A1, A2 = _symmetric_gauge(p.get("F", 1.0))
    V = Field.polynomial(_table({(0, 0): p.get("V0", 1.0), (1, 0): p.get("slope", 0.2)}, (2, 1)), "V")
    return (*_euclidean(), A1, A2, V)


def _polynomial(p, tables):
    defaults = {"g11": [[1.0]], "g12": [[0.0]], "g22": [[1.0]], "A1": [[0.0]], "A2": [[0.0]], "V": [[1.0]]}
    defaults.update(tables or {})
    return tuple(Field.polynomial(defaults[key], key) for key in ("g11", "g12", "g22", "A1", "A2", "V"))


BUILDERS = {
    "constant_field": _constant_field,
    "radial": _radial,
    "saddle": _saddle,
    "saddle_family": _saddle_family,
    "sphere": _sphere,
    "bowl_field": _bowl_field,
    "tilted": _tilted,
}


# --- Potential transforms ---
def add_polynomial(V: Field, table: np.ndarray, name: str = "V") -> Field:
    """V + polynomial, keeping analytic derivatives when V has them."""
    extra = Field.polynomial(table)
    if V.coeffs is not None:
        shape = (max(V.coeffs.shape[0], extra.coeffs.shape[0]), max(V.coeffs.shape[1], extra.coeffs.shape[1]))
        total = np.zeros(shape)
        total[: V.coeffs.shape[0], : V.coeffs.shape[1]] += V.coeffs
        total[: extra.coeffs.shape[0], : extra.coeffs.shape[1]] += extra.coeffs
        return Field.polynomial(total, name)
    grad = hess = None
    if V.has_analytic_derivatives:

        def grad(x, y):
            return tuple(a + b for a, b in zip(V.gradient(x, y), extra.gradient(x, y)))

        def hess(x, y):
            return tuple(a + b for a, b in zip(V.hessian(x, y), extra.hessian(x, y)))

    return Field(lambda x, y: V(x, y) + extra(x, y), grad, hess, name=name)


def seeded_perturbation(seed: int, amplitude: float) -> np.ndarray:
    """Quadratic table amplitude * (q20 x^2 + q11 x y + q02 y^2), q ~ N(0, 1)."""
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(3) * amplitude
    return _table({(2, 0): q[0], (1, 1): q[1], (0, 2): q[2]}, (3, 3))


def level_shift_potential(base: CoefficientSet, nbar: int, W: Field, mu: float, h: float) -> Field:
    """V = (2 nbar + 1) mu h F + W."""
    F = base.derived_field("F")
    scale = (2 * nbar + 1) * mu * h
    grad = hess = None
    if F.has_analytic_derivatives and W.has_analytic_derivatives:

        def grad(x, y):
            return tuple(scale * a + b for a, b in zip(F.gradient(x, y), W.gradient(x, y)))

        def hess(x, y):
            return tuple(scale * a + b for a, b in zip(F.hessian(x, y), W.hessian(x, y)))

    return Field(lambda x, y: scale * F(x, y) + W(x, y), grad, hess, name="V")


# --- Construction ---
def build_scenario(
    section: ScenarioSection,
    grid: Grid2D,
    mu: float,
    h: float,
    constants: Optional[ConstantsSection] = None,
    seed: Optional[int] = None,
) -> Scenario:
    """Coefficient set, cutoff and validation for one scenario on ``grid``."""
    constants = constants or ConstantsSection()
    if section.builtin == "polynomial":
        fields = _polynomial(section.params, section.polynomials)
    elif section.builtin in BUILDERS:
        fields = BUILDERS[section.builtin](section.params)
    else:
        raise ScenarioLoadError(f"FATAL: Unknown builtin '{section.builtin}'.")
    g11, g12, g22, A1, A2, V = fields
    coeffs = CoefficientSet(
        grid,
        g11,
        g12,
        g22,
        A1,
        A2,
        V,
        epsilon=constants.epsilon,
        epsilon0=constants.epsilon0,
        metric_reading=section.metric_reading,
        name=section.name,
    )

    nbar = None
    if section.level_shift is not None:
        nbar = int(section.level_shift.get("nbar", 0))
        W = Field.polynomial(section.level_shift.get("W", [[0.0]]), "W")
        coeffs = coeffs.replace(V=level_shift_potential(coeffs, nbar, W, mu, h))
    if section.perturbation and seed is not None:
        table = seeded_perturbation(seed, section.perturbation)
        coeffs = coeffs.replace(V=add_polynomial(coeffs.V, table))
        logger.info(f"Applied seeded perturbation (seed={seed}) to V of '{section.name}'")

    coeffs.validate(require_positive_potential=nbar is None)
    psi = make_psi(grid, section.psi.get("center", (0.0, 0.0)), section.psi.get("radius", DEFAULT_PSI_RADIUS))
    return Scenario(section.name, section.builtin, coeffs, psi, nbar, dict(section.params))


def scenario_grid(n_interior: int, half_width: float = 1.0) -> Grid2D:
    """Computational grid with ``n_interior`` unknowns per axis plus the boundary."""
    return Grid2D.square(n_interior + 2, half_width)
