# magweyl/critpoints.py

"""
magweyl - Critical points of V/F

Seeds Newton runs from the grid cells where both components of grad(V/F)
change sign. Refined points are merged within the dedup radius and classified
by their Hessian. Each point carries the local data the correction terms need.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .fields import CoefficientSet, curvature_at, laplace_beltrami_at, omega1_at

logger = logging.getLogger("magweyl.critpoints")

# --- Constants ---
NEWTON_TOL = 1e-10
NONDEG_TOL = 1e-6
DEDUP_RADIUS = 1e-4
MAX_ITER = 50
DEFAULT_SEARCH_RADIUS = 1.0
FLAT_TOL = 1e-8


class Kind(Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    SADDLE = "saddle"
    NONE = "none"


class CriticalPoint:
    def __init__(
        self,
        location,
        kind: Kind,
        hessian,
        vf_value: float,
        omega1_value: float,
        sqrt_g_value: float,
        F_value: float,
        V_value: float,
        curvature_value: float,
        lap_vf_value: float,
        gradient_norm: float,
    ):
        self.location = np.asarray(location, dtype=float)
        self.kind = kind
        self.hessian = np.asarray(hessian, dtype=float)
        self.det_hessian = float(np.linalg.det(self.hessian))
        self.k = float(np.sqrt(abs(self.det_hessian)))
        self.vf_value = float(vf_value)
        self.omega1_value = float(omega1_value)
        self.sqrt_g_value = float(sqrt_g_value)
        self.F_value = float(F_value)
        self.V_value = float(V_value)
        self.curvature_value = float(curvature_value)
        self.lap_vf_value = float(lap_vf_value)
        self.gradient_norm = float(gradient_norm)
        self.boundary_unreliable = False
        self.newton_iterations = 0

    def __repr__(self):
        x, y = self.location
        flag = ", boundary-unreliable" if self.boundary_unreliable else ""
        return f"CriticalPoint(({x:.6g}, {y:.6g}), {self.kind.value}, k={self.k:.6g}{flag})"

    @property
    def is_saddle(self) -> bool:
        return self.kind is Kind.SADDLE

    def to_dict(self) -> Dict:
        return {
            "location": [float(v) for v in self.location],
            "kind": self.kind.value,
            "hessian": self.hessian.tolist(),
            "det_hessian": self.det_hessian,
            "k": self.k,
            "vf_value": self.vf_value,
            "omega1_value": self.omega1_value,
            "sqrt_g_value": self.sqrt_g_value,
            "F_value": self.F_value,
            "V_value": self.V_value,
            "curvature_value": self.curvature_value,
            "lap_vf_value": self.lap_vf_value,
            "gradient_norm": self.gradient_norm,
            "boundary_unreliable": self.boundary_unreliable,
        }


def _classify(hxx: float, det: float, gradient_norm: float, newton_tol: float) -> Kind:
    if gradient_norm > newton_tol:
        return Kind.NONE
    if det < 0:
        return Kind.SADDLE
    return Kind.MINIMUM if hxx > 0 else Kind.MAXIMUM


def hessian_data(
    coeffs: CoefficientSet, location, newton_tol: float = NEWTON_TOL
) -> CriticalPoint:
    """All CriticalPoint fields at ``location`` without any Newton step."""
    x, y = (float(v) for v in location)
    grid = coeffs.grid
    if not grid.contains(x, y, margin=grid.a):
        raise ValidationError(
            f"Location ({x:.6g}, {y:.6g}) is not in the grid interior {grid!r}; "
            f"keep it one cell away from the boundary."
        )
    vf = coeffs.derived_field("vf")
    gx, gy = (float(v) for v in vf.gradient(x, y))
    hxx, hxy, hyy = (float(v) for v in vf.hessian(x, y))
    det = hxx * hyy - hxy * hxy
    gradient_norm = float(np.hypot(gx, gy))
    return CriticalPoint(
        location=(x, y),
        kind=_classify(hxx, det, gradient_norm, newton_tol),
        hessian=[[hxx, hxy], [hxy, hyy]],
        vf_value=float(vf(x, y)),
        omega1_value=float(omega1_at(coeffs, x, y)),
        sqrt_g_value=float(coeffs.sqrt_g(x, y)),
        F_value=float(coeffs.derived_field("F")(x, y)),
        V_value=float(coeffs.V(x, y)),
        curvature_value=float(curvature_at(coeffs, x, y)),
        lap_vf_value=float(laplace_beltrami_at(coeffs, vf, x, y)),
        gradient_norm=gradient_norm,
    )


def newton_refine(
    coeffs: CoefficientSet,
    seed,
    newton_tol: float = NEWTON_TOL,
    max_iter: int = MAX_ITER,
) -> Tuple[Optional[np.ndarray], int]:
    """Newton iteration on grad(V/F) = 0; returns (point or None, iterations)."""
    vf = coeffs.derived_field("vf")
    p = np.array(seed, dtype=float)
    for iteration in range(max_iter + 1):
        g = np.array([float(v) for v in vf.gradient(p[0], p[1])])
        if not np.all(np.isfinite(g)):
            return None, iteration
        if np.hypot(g[0], g[1]) <= newton_tol:
            return p, iteration
        if iteration == max_iter:
            break
        hxx, hxy, hyy = (float(v) for v in vf.hessian(p[0], p[1]))
        try:
            step = np.linalg.solve(np.array([[hxx, hxy], [hxy, hyy]]), g)
        except np.linalg.LinAlgError:
            return None, iteration
        p = p - step
        if not coeffs.grid.contains(p[0], p[1]):
            return None, iteration
    return None, max_iter


def _sign_change_seeds(coeffs: CoefficientSet, search_radius: float) -> List[Tuple[float, float]]:
    grid = coeffs.grid
    X, Y = grid.mesh()
    vf = coeffs.derived_field("vf")
    gx, gy = (np.asarray(g, dtype=float) + np.zeros(grid.shape) for g in vf.gradient(X, Y))
    scale = max(1.0, float(np.max(np.abs(vf(X, Y)))))
    if float(np.max(np.hypot(gx, gy))) <= FLAT_TOL * scale:
        logger.debug(f"V/F is constant on the grid of {coeffs.name}; no isolated critical points")
        return []

    def changes(g):
        corners = np.stack([g[:-1, :-1], g[1:, :-1], g[:-1, 1:], g[1:, 1:]])
        return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)

    cells = changes(gx) & changes(gy)
    cx = 0.5 * (X[:-1, :-1] + X[1:, 1:])
    cy = 0.5 * (Y[:-1, :-1] + Y[1:, 1:])
    reach = search_radius + grid.a * np.sqrt(2.0)
    cells &= np.hypot(cx, cy) <= reach
    return [(float(cx[i, j]), float(cy[i, j])) for i, j in np.argwhere(cells)]


def find_critical_points(
    coeffs: CoefficientSet,
    search_radius: float = DEFAULT_SEARCH_RADIUS,
    newton_tol: float = NEWTON_TOL,
    nondeg_tol: float = NONDEG_TOL,
    dedup_radius: float = DEDUP_RADIUS,
    max_iter: int = MAX_ITER,
    workers: int = 1,
    log: Optional[logging.Logger] = None,
) -> List[CriticalPoint]:
    """Complete list of non-degenerate critical points of V/F in the search disc."""
    log = log or logger
    if not 0 < search_radius <= 1.0:
        raise ValidationError(f"search_radius must lie in (0, 1], got {search_radius}.")
    seeds = _sign_change_seeds(coeffs, search_radius)
    log.debug(f"{len(seeds)} sign-change seed(s) for {coeffs.name}")

    def refine(seed):
        return newton_refine(coeffs, seed, newton_tol, max_iter)

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(refine, seeds))
    else:
        outcomes = [refine(seed) for seed in seeds]

    converged = []
    for seed, (point, iterations) in zip(seeds, outcomes):
        if point is None:
            log.warning(
                f"Newton did not converge from seed ({seed[0]:.4g}, {seed[1]:.4g}) "
                f"after {iterations} iteration(s); seed discarded."
            )
            continue
        if np.hypot(point[0], point[1]) > search_radius + dedup_radius:
            continue
        converged.append((point, iterations))

    converged.sort(key=lambda item: (round(item[0][0], 12), round(item[0][1], 12)))
    merged: List[Tuple[np.ndarray, int]] = []
    for point, iterations in converged:
        if all(np.hypot(*(point - kept)) >= 2.0 * dedup_radius for kept, _ in merged):
            merged.append((point, iterations))

    points = []
    for point, iterations in merged:
        if not coeffs.grid.contains(point[0], point[1], margin=coeffs.grid.a):
            log.warning(
                f"Critical point ({point[0]:.4g}, {point[1]:.4g}) lies in the boundary cell; discarded."
            )
            continue
        cp = hessian_data(coeffs, point, newton_tol)
        if abs(cp.det_hessian) < nondeg_tol:
            raise ValidationError(
                f"degenerate critical point at ({point[0]:.6g}, {point[1]:.6g}): "
                f"|det Hess(V/F)| = {abs(cp.det_hessian):.3g} < {nondeg_tol:g}"
            )
        cp.newton_iterations = iterations
        if np.hypot(point[0], point[1]) >= search_radius - dedup_radius:
            cp.boundary_unreliable = True
            log.warning(f"{cp!r} lies on the search boundary; excluded from corrections.")
        points.append(cp)
    return points


def interior_saddles(points: Sequence[CriticalPoint]) -> List[CriticalPoint]:
    return [cp for cp in points if cp.is_saddle and not cp.boundary_unreliable]
