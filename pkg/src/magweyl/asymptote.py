# magweyl/asymptote.py

"""
magweyl - Asymptotic prediction

Localized magnetic Weyl integral plus one logarithmic correction per saddle of
V/F. Which terms enter depends on the (mu, h) regime.
"""
import logging
import math
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from .critpoints import NONDEG_TOL, CriticalPoint, Kind
from .errors import ValidationError
from .fields import CoefficientSet, Field, ScalarField

logger = logging.getLogger("magweyl.asymptote")

# --- Constants ---
C_I = 1.0
C_II = 1.0
C_LOG = 1.0
EPS_SS = 1.0
CORRECTION_THRESHOLD = 2.0
KAPPA0 = 0.0
MAX_H = 0.5
QUAD_REFINE = 4

BELOW_THRESHOLD = "below-correction-threshold"
CORR2_INACTIVE = "corr2-inactive"


class Regime(Enum):
    WEAK = "weak"
    INTERMEDIATE = "intermediate"
    INTERMEDIATE_CORR2 = "intermediate_corr2"
    SUPERSTRONG = "superstrong"

    @property
    def is_intermediate(self) -> bool:
        return self in (Regime.INTERMEDIATE, Regime.INTERMEDIATE_CORR2)

    @property
    def has_corrections(self) -> bool:
        return self is not Regime.WEAK

    @property
    def has_corr2(self) -> bool:
        return self is Regime.INTERMEDIATE_CORR2


Varsigma = Union[float, Field, Callable]


class RegimeParams:
    def __init__(
        self,
        mu: float,
        h: float,
        C_i: float = C_I,
        C_ii: float = C_II,
        C_log: float = C_LOG,
        eps_ss: float = EPS_SS,
        kappa2: Optional[float] = None,
        varsigma: Optional[Varsigma] = None,
        correction_threshold: float = CORRECTION_THRESHOLD,
    ):
        if not mu >= 1.0:
            raise ValidationError(f"mu must be >= 1, got {mu}.")
        if not 0.0 < h <= MAX_H:
            raise ValidationError(f"h must lie in (0, {MAX_H}], got {h}.")
        for name, value in (
            ("C_i", C_i),
            ("C_ii", C_ii),
            ("C_log", C_log),
            ("eps_ss", eps_ss),
            ("correction_threshold", correction_threshold),
        ):
            if not value > 0:
                raise ValidationError(f"Threshold {name} must be positive, got {value}.")
        self.mu = float(mu)
        self.h = float(h)
        self.C_i = float(C_i)
        self.C_ii = float(C_ii)
        self.C_log = float(C_log)
        self.eps_ss = float(eps_ss)
        self.kappa2 = None if kappa2 is None else float(kappa2)
        self.varsigma = varsigma
        self.correction_threshold = float(correction_threshold)

    def __repr__(self):
        return f"RegimeParams(mu={self.mu:g}, h={self.h:g})"

    @property
    def hbar(self) -> float:
        return self.h / self.mu

    @property
    def mu_h(self) -> float:
        return self.mu * self.h


def classify_regime(rp: RegimeParams) -> Regime:
    """Regime label of (mu, h); a point on a boundary gets the lower label."""
    if rp.mu * rp.h > rp.eps_ss:
        return Regime.SUPERSTRONG
    if rp.mu > rp.C_i * rp.h ** (-1.0 / 3.0):
        if rp.mu > rp.C_ii / rp.h:
            logger.debug(f"{rp!r} lies beyond C_ii/h but below eps_ss/h; kept intermediate")
        if rp.mu > rp.C_log / (rp.h * abs(math.log(rp.h))):
            return Regime.INTERMEDIATE_CORR2
        return Regime.INTERMEDIATE
    return Regime.WEAK


# --- Landau levels ---
def nearest_level(V, F, mu_h) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized (sigma, nbar) with sigma = min_n |V - (2n+1) F mu h|."""
    V = np.asarray(V, dtype=float)
    step = np.asarray(F, dtype=float) * mu_h
    t = 0.5 * (V / step - 1.0)
    low = np.maximum(np.floor(t), 0.0)
    high = low + 1.0
    d_low = np.abs(V - (2.0 * low + 1.0) * step)
    d_high = np.abs(V - (2.0 * high + 1.0) * step)
    take_high = d_high < d_low
    nbar = np.where(take_high, high, low).astype(np.int64)
    sigma = np.where(take_high, d_high, d_low)
    return sigma, nbar


def sigma_gap(V_val: float, F_val: float, mu: float, h: float) -> Tuple[float, int]:
    sigma, nbar = nearest_level(V_val, F_val, mu * h)
    return float(sigma), int(nbar)


def level_count(V, F, mu_h, tau: float = 0.0) -> np.ndarray:
    """#{n >= 0 : (2n+1) mu h F <= V + 2 tau}, vectorized."""
    top = np.asarray(V, dtype=float) + 2.0 * tau
    step = np.asarray(F, dtype=float) * mu_h
    count = np.maximum(np.floor(0.5 * (top / step - 1.0)) + 1.0, 0.0)
    count = np.where((2.0 * count + 1.0) * step <= top, count + 1.0, count)
    count = np.where((count > 0) & ((2.0 * count - 1.0) * step > top), count - 1.0, count)
    return count.astype(np.int64)


def magnetic_weyl_density(coeffs: CoefficientSet, x, tau: float, mu: float, h: float):
    """(2 pi)^-1 mu h^-1 F sqrt(g) times the number of admissible Landau levels."""
    px, py = x
    F = coeffs.derived_field("F")(px, py)
    count = level_count(coeffs.V(px, py), F, mu * h, tau)
    density = (mu / h) / (2.0 * np.pi) * F * coeffs.sqrt_g(px, py) * count
    return float(density) if np.ndim(density) == 0 else density


class QuadratureMesh(NamedTuple):
    """Simpson nodes obtained by splitting every grid cell ``refine`` times per axis."""

    xs: np.ndarray
    ys: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    @classmethod
    def refining(cls, grid, refine: int = QUAD_REFINE) -> "QuadratureMesh":
        if refine < 1:
            raise ValidationError(f"Quadrature refinement must be >= 1, got {refine}.")
        xs = np.linspace(grid.x_min, grid.x_max, (grid.nx - 1) * refine + 1)
        ys = np.linspace(grid.y_min, grid.y_max, (grid.ny - 1) * refine + 1)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return cls(xs, ys, X, Y)

    def sample(self, f) -> np.ndarray:
        return np.broadcast_to(np.asarray(f(self.X, self.Y), dtype=float), self.X.shape)

    def integrate(self, values: np.ndarray) -> float:
        inner = simpson(values, x=self.ys, axis=1)
        return float(simpson(inner, x=self.xs))


def _check_psi(coeffs: CoefficientSet, psi: ScalarField):
    if psi.grid != coeffs.grid:
        raise ValidationError("psi must be sampled on the coefficient grid.")
    edge = psi.values[coeffs.grid.boundary_mask()]
    if np.any(edge != 0.0):
        raise ValidationError(
            "psi support touches the grid boundary; shrink its radius below the half-width."
        )


def _one_level_density(mesh: QuadratureMesh, coeffs: CoefficientSet, psi: ScalarField, mu, h):
    """(V, F, (2 pi)^-1 mu h^-1 F sqrt(g) psi) on the quadrature mesh."""
    V = mesh.sample(coeffs.V)
    F = mesh.sample(coeffs.derived_field("F"))
    one_level = (mu / h) / (2.0 * np.pi) * F * mesh.sample(coeffs.sqrt_g) * mesh.sample(psi.at)
    return V, F, one_level


def integrate_weyl(
    coeffs: CoefficientSet,
    psi: ScalarField,
    tau: float,
    mu: float,
    h: float,
    refine: int = QUAD_REFINE,
) -> float:
    """Composite Simpson quadrature of the Weyl density times psi.

    Coefficients and psi are evaluated through their callbacks on the grid
    refined ``refine`` times per cell.
    """
    _check_psi(coeffs, psi)
    mesh = QuadratureMesh.refining(coeffs.grid, refine)
    V, F, one_level = _one_level_density(mesh, coeffs, psi, mu, h)
    return mesh.integrate(one_level * level_count(V, F, mu * h, tau))


class LevelContribution(NamedTuple):
    level: int
    value: float


def superstrong_levels(
    coeffs: CoefficientSet,
    psi: ScalarField,
    mu: float,
    h: float,
    tau: float = 0.0,
    refine: int = QUAD_REFINE,
) -> List[LevelContribution]:
    """Per-Landau-level split of the Weyl integral.

    Level n contributes (2 pi)^-1 mu h^-1 int F psi sqrt(g) over the region where
    (2n+1) F mu h <= V + 2 tau. At tau = 0 these are the levels below the
    nearest level nbar(x) plus nbar itself where it lies under V. The levels
    sum to ``integrate_weyl`` on the same mesh.
    """
    _check_psi(coeffs, psi)
    mesh = QuadratureMesh.refining(coeffs.grid, refine)
    V, F, one_level = _one_level_density(mesh, coeffs, psi, mu, h)
    top = int(np.max(level_count(V, F, mu * h, tau)))
    levels = []
    for n in range(top):
        admissible = ((2.0 * n + 1.0) * F * mu * h <= V + 2.0 * tau).astype(float)
        levels.append(LevelContribution(n, mesh.integrate(one_level * admissible)))
    return levels


# --- Saddle corrections ---
def varkappa_coeff(cp: CriticalPoint) -> float:
    if cp.kind is not Kind.SADDLE:
        raise ValidationError(
            f"varkappa is defined at saddle points only; got a {cp.kind.value} at {cp.location}."
        )
    bracket = (
        0.125 * cp.curvature_value * cp.V_value**2 / cp.F_value
        - 0.25 * cp.V_value * cp.lap_vf_value
    )
    return -bracket * cp.sqrt_g_value / (4.0 * np.pi * cp.k)


class CorrectionTerm(NamedTuple):
    value: float
    flags: Tuple[str, ...] = ()


def corr_term_value(kappa: float, sigma: float, mu: float, h: float) -> float:
    return kappa / (mu * h) * math.log((sigma + mu**-2) * (1.0 + 1.0 / (mu * h)))


def corr2_term_value(kappa2: float, sigma: float, mu: float, h: float) -> float:
    return kappa2 * mu * h * math.log((sigma + h * h) * (1.0 + 1.0 / (mu * h)))


def corr_term(cp: CriticalPoint, rp: RegimeParams) -> CorrectionTerm:
    if rp.mu**3 * rp.h < rp.correction_threshold:
        return CorrectionTerm(0.0, (BELOW_THRESHOLD,))
    sigma, _ = sigma_gap(cp.V_value, cp.F_value, rp.mu, rp.h)
    return CorrectionTerm(corr_term_value(varkappa_coeff(cp), sigma, rp.mu, rp.h))


def corr2_term(cp: CriticalPoint, rp: RegimeParams) -> CorrectionTerm:
    if not classify_regime(rp).has_corr2:
        return CorrectionTerm(0.0, (CORR2_INACTIVE,))
    if rp.kappa2 is None:
        raise ValidationError(
            "corr2 coefficient required: set regime.kappa2 for mu above C_log (h|log h|)^-1."
        )
    sigma, _ = sigma_gap(cp.V_value, cp.F_value, rp.mu, rp.h)
    return CorrectionTerm(corr2_term_value(rp.kappa2, sigma, rp.mu, rp.h))


class SaddleCorrection(NamedTuple):
    point: CriticalPoint
    sigma: float
    w: float
    corr_term: float
    corr2_term: float
    psi_value: float
    corr_value: float
    corr2_value: float
    flags: Tuple[str, ...]

    def to_dict(self) -> Dict:
        return {
            "point": self.point.to_dict(),
            "sigma": self.sigma,
            "w": self.w,
            "varkappa": varkappa_coeff(self.point),
            "corr_term": self.corr_term,
            "corr2_term": self.corr2_term,
            "psi_value": self.psi_value,
            "corr_value": self.corr_value,
            "corr2_value": self.corr2_value,
            "flags": list(self.flags),
        }


class Prediction:
    def __init__(
        self,
        weyl_integral: float,
        saddle_corrections: List[SaddleCorrection],
        regime: Regime,
        nbar_field: np.ndarray,
        kappa0_term: float = 0.0,
        varsigma_term: float = 0.0,
        levels: Optional[List[LevelContribution]] = None,
    ):
        self.weyl_integral = float(weyl_integral)
        self.saddle_corrections = list(saddle_corrections)
        self.regime = regime
        self.nbar_field = nbar_field
        self.kappa0_term = float(kappa0_term)
        self.varsigma_term = float(varsigma_term)
        self.levels = levels or []
        self.total = (
            self.weyl_integral
            + self.corr_sum
            + self.corr2_sum
            + self.kappa0_term
            + self.varsigma_term
        )

    def __repr__(self):
        return (
            f"Prediction(regime={self.regime.value}, weyl={self.weyl_integral:.6g}, "
            f"saddles={len(self.saddle_corrections)}, total={self.total:.6g})"
        )

    @property
    def corr_sum(self) -> float:
        return float(sum(sc.corr_value for sc in self.saddle_corrections))

    @property
    def corr2_sum(self) -> float:
        return float(sum(sc.corr2_value for sc in self.saddle_corrections))

    def to_dict(self) -> Dict:
        return {
            "regime": self.regime.value,
            "weyl_integral": self.weyl_integral,
            "corr_sum": self.corr_sum,
            "corr2_sum": self.corr2_sum,
            "kappa0_term": self.kappa0_term,
            "varsigma_term": self.varsigma_term,
            "total": self.total,
            "saddle_corrections": [sc.to_dict() for sc in self.saddle_corrections],
            "superstrong_levels": [list(level) for level in self.levels],
            "nbar_range": [int(self.nbar_field.min()), int(self.nbar_field.max())],
        }


def _varsigma_values(mesh: QuadratureMesh, varsigma: Varsigma) -> np.ndarray:
    if callable(varsigma):
        return mesh.sample(varsigma)
    return np.full(mesh.X.shape, float(varsigma))


def predict(
    coeffs: CoefficientSet,
    psi: ScalarField,
    rp: RegimeParams,
    saddles: Sequence[CriticalPoint],
    tau: float = 0.0,
) -> Prediction:
    """Weyl integral plus the saddle corrections the regime of (mu, h) calls for."""
    regime = classify_regime(rp)
    weyl = integrate_weyl(coeffs, psi, tau, rp.mu, rp.h)
    _, nbar = nearest_level(coeffs.sample("V"), coeffs.sample("F"), rp.mu_h)

    corrections = []
    for cp in saddles:
        if abs(cp.det_hessian) < NONDEG_TOL:
            raise ValidationError(
                f"degenerate critical point at {cp.location}: |det Hess(V/F)| = "
                f"{abs(cp.det_hessian):.3g}"
            )
        if cp.kind is not Kind.SADDLE or cp.boundary_unreliable:
            continue
        sigma, n = sigma_gap(cp.V_value, cp.F_value, rp.mu, rp.h)
        w = -cp.vf_value + (2 * n + 1) * rp.mu_h
        psi_value = float(psi.at(*cp.location))
        flags: Tuple[str, ...] = ()
        c1 = c2 = 0.0
        if regime.has_corrections:
            term = corr_term(cp, rp)
            c1, flags = term.value, term.flags
        if regime.has_corr2:
            term2 = corr2_term(cp, rp)
            c2, flags = term2.value, flags + term2.flags
        corrections.append(
            SaddleCorrection(cp, sigma, w, c1, c2, psi_value, c1 * psi_value, c2 * psi_value, flags)
        )

    kappa0_term = KAPPA0 / (rp.mu * rp.h) ** 2 if regime.has_corrections else 0.0
    varsigma_term = 0.0
    levels = None
    if regime is Regime.SUPERSTRONG:
        levels = superstrong_levels(coeffs, psi, rp.mu, rp.h, tau)
        if rp.varsigma is not None:
            mesh = QuadratureMesh.refining(coeffs.grid)
            values = _varsigma_values(mesh, rp.varsigma)
            varsigma_term = rp.mu_h * mesh.integrate(values * mesh.sample(psi.at))
    return Prediction(
        weyl, corrections, regime, nbar, kappa0_term, varsigma_term, levels
    )
