# magweyl/model1d.py

"""
magweyl - One-dimensional effective operators

Leading effective symbols of the Landau-level reduction, their Weyl
quantization by Fourier collocation, phase-space counting inside the diamond
|x| + |xi| <= rho, and the saddle model x xi + k^-1 (w + mu^-2 omega_1) whose
sublevel area carries the logarithmic correction.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import GuardViolation, ValidationError

logger = logging.getLogger("magweyl.model1d")

# --- Constants ---
MAX_MODES = 2048
AREA_TOL = 1e-9
QUAD_LIMIT = 500
INNER_SAMPLES = 257
PERTURBATIVE_RATIO = 0.1
SADDLE = "saddle"
EXTREMUM = "extremum"

SymbolFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Symbol1D:
    def __init__(self, a: SymbolFunc, hbar: float, Lx: float, Lxi: float, rho: float):
        if hbar <= 0:
            raise ValidationError(f"hbar must be positive, got {hbar}.")
        if rho > min(Lx, Lxi):
            raise ValidationError(f"rho={rho} exceeds the symbol box min(Lx, Lxi)={min(Lx, Lxi)}.")
        self.a = a
        self.hbar = float(hbar)
        self.Lx = float(Lx)
        self.Lxi = float(Lxi)
        self.rho = float(rho)

    def __repr__(self):
        return f"Symbol1D(hbar={self.hbar:g}, Lx={self.Lx:g}, Lxi={self.Lxi:g}, rho={self.rho:g})"

    def __call__(self, x, xi) -> np.ndarray:
        x, xi = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float))
        return np.asarray(self.a(x, xi), dtype=float) + np.zeros(x.shape)


class SaddleModelParams:
    def __init__(self, w: float, k: float, omega1: float, mu: float, hbar: float):
        if k <= 0:
            raise ValidationError(f"Saddle model needs k > 0, got {k}.")
        self.w = float(w)
        self.k = float(k)
        self.omega1 = float(omega1)
        self.mu = float(mu)
        self.hbar = float(hbar)

    def __repr__(self):
        return f"SaddleModelParams(w={self.w:g}, k={self.k:g}, omega1={self.omega1:g})"

    @property
    def shift(self) -> float:
        """mu^-2 omega_1 / k, the perturbation of the level offset."""
        return self.omega1 / (self.mu**2 * self.k)


class SectionProfile:
    """V/F, F and omega_1 as functions of the canonical coordinates (x, xi)."""

    def __init__(self, vf: SymbolFunc, F: SymbolFunc, omega1: SymbolFunc):
        self.vf = vf
        self.F = F
        self.omega1 = omega1

    @classmethod
    def constant(cls, vf: float, F: float = 1.0, omega1: float = 0.0) -> "SectionProfile":
        return cls(
            lambda x, xi: np.full(np.shape(x), float(vf)),
            lambda x, xi: np.full(np.shape(x), float(F)),
            lambda x, xi: np.full(np.shape(x), float(omega1)),
        )

    @classmethod
    def saddle(cls, vf0: float, k: float, F: float = 1.0, omega1: float = 0.0):
        """V/F = vf0 - k x xi, the normal form of a non-degenerate saddle."""
        return cls(
            lambda x, xi: vf0 - k * x * xi,
            lambda x, xi: np.full(np.shape(x), float(F)),
            lambda x, xi: np.full(np.shape(x), float(omega1)),
        )


def landau_symbol(
    profile: Optional[SectionProfile],
    n: int,
    mu: float,
    h: float,
    Lx: float = 1.0,
    Lxi: float = 1.0,
    rho: Optional[float] = None,
) -> Symbol1D:
    """a_n = F (-(V/F) + (2n+1) mu h + mu^-2 omega_1) with hbar = h / mu."""
    if profile is None:
        raise ValidationError("landau_symbol needs a section profile (V/F, F, omega1).")
    if n < 0:
        raise ValidationError(f"Landau index must be nonnegative, got {n}.")
    level = (2 * n + 1) * mu * h

    def a(x, xi):
        return profile.F(x, xi) * (
            -profile.vf(x, xi) + level + profile.omega1(x, xi) / mu**2
        )

    return Symbol1D(a, h / mu, Lx, Lxi, min(Lx, Lxi) if rho is None else rho)


# --- Quantization ---
def _collocation_grid(sym: Symbol1D, n_modes: int):
    dx = 2.0 * sym.Lx / n_modes
    xs = -sym.Lx + (np.arange(n_modes) + 0.5) * dx
    xis = sym.hbar * 2.0 * np.pi * np.fft.fftfreq(n_modes, d=dx)
    return xs, xis, dx


def _weyl_matrix(sym: Symbol1D, n_modes: int) -> np.ndarray:
    xs, xis, dx = _collocation_grid(sym, n_modes)
    mids = -sym.Lx + (np.arange(2 * n_modes - 1) + 1.0) * 0.5 * dx
    X, XI = np.meshgrid(mids, xis, indexing="ij")
    table = sym(X, XI).astype(complex)
    if n_modes % 2 == 0:
        nyq = n_modes // 2
        table[:, nyq] = 0.5 * (sym(mids, xis[nyq]) + sym(mids, -xis[nyq]))
    kernel = np.fft.ifft(table, axis=1)
    j = np.arange(n_modes)[:, None]
    l = np.arange(n_modes)[None, :]
    return kernel[j + l, (j - l) % n_modes]


def quantization_asymmetry(sym: Symbol1D, n_modes: int) -> float:
    """||M - M^H||_F / ||M||_F before symmetrization."""
    M = _weyl_matrix(sym, n_modes)
    return float(np.linalg.norm(M - M.conj().T) / max(np.linalg.norm(M), 1e-300))


def check_edge_ellipticity(sym: Symbol1D, n_modes: int, level: float):
    xs, xis, _ = _collocation_grid(sym, n_modes)
    xi_edge = float(np.max(np.abs(xis)))
    edge = np.concatenate(
        [
            sym(np.full_like(xis, -sym.Lx), xis),
            sym(np.full_like(xis, sym.Lx), xis),
            sym(xs, np.full_like(xs, -xi_edge)),
            sym(xs, np.full_like(xs, xi_edge)),
        ]
    )
    gap = float(np.min(np.abs(edge - level)))
    if gap <= sym.hbar:
        raise GuardViolation(
            f"level set touches box boundary: min |a - {level:g}| on the edge is {gap:.3g}; "
            f"enlarge Lx or n_modes."
        )


def weyl_quantize(sym: Symbol1D, n_modes: int, level: Optional[float] = None) -> np.ndarray:
    """Hermitian Weyl quantization on a periodic grid of ``n_modes`` points."""
    if not 2 <= n_modes <= MAX_MODES:
        raise ValidationError(f"n_modes must lie in [2, {MAX_MODES}], got {n_modes}.")
    if level is not None:
        check_edge_ellipticity(sym, n_modes, level)
    M = _weyl_matrix(sym, n_modes)
    logger.debug(f"Quantized {sym!r} on {n_modes} modes")
    return 0.5 * (M + M.conj().T)


def quantized_count(sym: Symbol1D, n_modes: int, level: float) -> int:
    values = np.linalg.eigvalsh(weyl_quantize(sym, n_modes, level))
    return int(np.sum(values <= level))


# --- Phase-space counting ---
def _sublevel_measure(sym: Symbol1D, x: float, level: float) -> float:
    c = sym.rho - abs(x)
    if c <= 0:
        return 0.0
    xi = np.linspace(-c, c, INNER_SAMPLES)
    f = sym(np.full_like(xi, x), xi) - level
    s = np.sign(f)
    # exact zeros on a sample are crossings too
    crossings = [-c, c, *(float(t) for t in xi[1:-1][s[1:-1] == 0])]
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):

        def g(t):
            return float(sym(x, t)) - level

        crossings.append(brentq(g, xi[i], xi[i + 1], xtol=1e-14))
    crossings.sort()
    measure = 0.0
    for lo, hi in zip(crossings[:-1], crossings[1:]):
        if float(sym(x, 0.5 * (lo + hi))) - level <= 0.0:
            measure += hi - lo
    return measure


def sublevel_area(sym: Symbol1D, level: float, breakpoints: Sequence[float] = ()) -> float:
    """Area of {|x| + |xi| <= rho, a <= level} by adaptive quadrature in x."""
    rho = sym.rho
    points = sorted({0.0, *(p for p in breakpoints if -rho < p < rho)})
    edges = [-rho, *points, rho]
    area = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = quad(
            lambda x: _sublevel_measure(sym, x, level),
            lo,
            hi,
            epsabs=AREA_TOL / len(edges),
            epsrel=0.0,
            limit=QUAD_LIMIT,
        )
        area += value
    return area


def phasespace_count(sym: Symbol1D, level: float, breakpoints: Sequence[float] = ()) -> float:
    """(2 pi hbar)^-1 times the sublevel area inside the diamond."""
    return sublevel_area(sym, level, breakpoints) / (2.0 * np.pi * sym.hbar)


def _hyperbola_breakpoints(offset: float, rho: float) -> List[float]:
    if offset == 0 or 4.0 * abs(offset) > rho * rho:
        return []
    s = math.sqrt(rho * rho - 4.0 * abs(offset))
    x1, x2 = 0.5 * (rho - s), 0.5 * (rho + s)
    return [-x2, -x1, x1, x2]


def saddle_area(w: float, rho: float) -> float:
    """Closed form of area{|x| + |xi| <= rho, x xi + w <= 0} for |w| <= rho^2/4."""
    if 4.0 * abs(w) > rho * rho:
        raise ValidationError(f"Closed form needs |w| <= rho^2/4 (w={w}, rho={rho}).")
    if w == 0:
        return rho * rho
    s = math.sqrt(rho * rho - 4.0 * abs(w))
    x1, x2 = 0.5 * (rho - s), 0.5 * (rho + s)
    branch = rho * s - 2.0 * abs(w) * math.log(x2 / x1)
    return branch if w > 0 else 2.0 * rho * rho - branch


def saddle_area_expansion(w: float, rho: float) -> float:
    """Small-w expansion of saddle_area(w) - saddle_area(0) for w > 0."""
    return -2.0 * w * math.log(1.0 / w) - w * (2.0 + 4.0 * math.log(rho)) + 2.0 * w * w / rho**2


def saddle_symbol(offset: float, hbar: float, rho: float) -> Symbol1D:
    return Symbol1D(lambda x, xi: x * xi + offset, hbar, rho, rho, rho)


def extremum_symbol(offset: float, hbar: float, rho: float) -> Symbol1D:
    return Symbol1D(lambda x, xi: x * x + xi * xi + offset, hbar, rho, rho, rho)


def model_count(model: str, offset: float, hbar: float, rho: float) -> float:
    if model == SADDLE:
        sym = saddle_symbol(offset, hbar, rho)
        return phasespace_count(sym, 0.0, _hyperbola_breakpoints(offset, rho))
    if model == EXTREMUM:
        sym = extremum_symbol(offset, hbar, rho)
        r = math.sqrt(-offset) if offset < 0 else 0.0
        return phasespace_count(sym, 0.0, [-r, r] if r else [])
    raise ValidationError(f"Unknown model '{model}'; use '{SADDLE}' or '{EXTREMUM}'.")


def saddle_log_coefficient(
    p: SaddleModelParams, rho: float, model: str = SADDLE
) -> Tuple[float, float]:
    """(measured, predicted) coefficient of the mu^-2 omega_1 k^-1 perturbation.

    measured is the count difference divided by the perturbation;
    predicted is (2 pi hbar)^-1 log(rho / (|w|^1/2 + mu^-1)).
    """
    predicted = math.log(rho / (math.sqrt(abs(p.w)) + 1.0 / p.mu)) / (2.0 * math.pi * p.hbar)
    if p.omega1 == 0.0:
        return 0.0, predicted
    base = p.w / p.k
    if 4.0 * abs(base) > rho * rho:
        raise GuardViolation(f"Saddle model needs |w|/k <= rho^2/4 (w={p.w}, k={p.k}, rho={rho}).")
    if abs(p.omega1) / p.mu**2 > PERTURBATIVE_RATIO * abs(p.w):
        raise GuardViolation(
            f"Perturbative precondition violated: mu^-2|omega1| = {abs(p.omega1) / p.mu**2:.3g} "
            f"> {PERTURBATIVE_RATIO}*|w| = {PERTURBATIVE_RATIO * abs(p.w):.3g}."
        )
    unperturbed = model_count(model, base, p.hbar, rho)
    perturbed = model_count(model, base + p.shift, p.hbar, rho)
    return (perturbed - unperturbed) / p.shift, predicted


class SweepRow(NamedTuple):
    w: float
    count_unperturbed: float
    count_perturbed: float
    measured_coeff: float
    predicted_coeff: float
    branch_factor: float


def saddle_sweep(
    ws: Sequence[float],
    k: float,
    omega1: float,
    mu: float,
    hbar: float,
    rho: float,
    model: str = SADDLE,
    workers: int = 1,
) -> List[SweepRow]:
    """Per-w counts and coefficients, sorted by w."""

    def one(w: float) -> SweepRow:
        p = SaddleModelParams(w, k, omega1, mu, hbar)
        measured, predicted = saddle_log_coefficient(p, rho, model)
        unperturbed = model_count(model, w / k, hbar, rho)
        perturbed = model_count(model, w / k + p.shift, hbar, rho)
        factor = measured / predicted if predicted else math.nan
        return SweepRow(w, unperturbed, perturbed, measured, predicted, factor)

    ordered = sorted(float(w) for w in ws)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(one, ordered))
    return [one(w) for w in ordered]


def log_signature_deltas(ws: Sequence[float], hbar: float, rho: float) -> np.ndarray:
    """count(x xi + w) - count(x xi) by phase-space quadrature."""
    reference = model_count(SADDLE, 0.0, hbar, rho)
    return np.array([model_count(SADDLE, float(w), hbar, rho) - reference for w in ws])


def fit_log_signature(ws: Sequence[float], deltas: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares fit deltas ~ c1 w log(1/w) + c2 w; returns (c1, c2, relative residual)."""
    w = np.asarray(ws, dtype=float)
    d = np.asarray(deltas, dtype=float)
    if w.size < 3 or np.any(w <= 0):
        raise ValidationError("Log-signature fit needs at least 3 positive w values.")
    design = np.column_stack([w * np.log(1.0 / w), w])
    (c1, c2), *_ = np.linalg.lstsq(design, d, rcond=None)
    residual = float(np.linalg.norm(design @ np.array([c1, c2]) - d) / np.linalg.norm(d))
    return float(c1), float(c2), residual


def sweep_rows_as_dicts(rows: Sequence[SweepRow]) -> List[Dict[str, float]]:
    return [row._asdict() for row in rows]
