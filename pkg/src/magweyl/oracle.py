# magweyl/oracle.py

"""
magweyl - Discretized-operator oracle

Gauge-covariant finite-difference realization of
    A = 1/2 (sum_jk P_j g^jk P_k - V),  P_j = -i h d_j - mu A_j,
on the interior nodes of a square grid (Dirichlet truncation), its dense
Hermitian eigendecomposition and the localized spectral counting functional.

The operator is assembled from its quadratic form: every grid edge carries a
hopping term with a Peierls link phase exp(-i (mu/h) A(mid) . dl), and the
g^12 cross term is spread symmetrically over the four corners of each cell.
Only one entry of each conjugate pair is accumulated, so the assembled matrix
is Hermitian bitwise.
"""
import logging
import math
import struct
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ConvergenceError, GuardViolation, ValidationError
from .fields import CoefficientSet, Field, Grid2D, ScalarField

logger = logging.getLogger("magweyl.oracle")

# --- Constants ---
MAX_FLUX_PER_PLAQUETTE = 0.3
MIN_MAGNETIC_LENGTH_CELLS = 2.5
DESK_SCALE_MAX_N = 4500
RESIDUAL_TOL = 1e-8
ORTHONORMALITY_TOL = 1e-10
CACHE_MAGIC = b"LAEV"
CACHE_VERSION = 1
CACHE_HEADER = struct.Struct("<4sIQ")


class DiscreteOperator:
    def __init__(
        self,
        matrix: scipy.sparse.csr_matrix,
        grid: Grid2D,
        mu: float,
        h: float,
        link_phases: Dict[str, np.ndarray],
        interior_index: np.ndarray,
        guard_margins: Dict[str, float],
    ):
        self.matrix = matrix
        self.grid = grid
        self.mu = float(mu)
        self.h = float(h)
        self.link_phases = link_phases
        self.interior_index = interior_index
        self.guard_margins = guard_margins

    def __repr__(self):
        return f"DiscreteOperator(N={self.dimension}, mu={self.mu:g}, h={self.h:g}, grid={self.grid!r})"

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def max_asymmetry(self) -> float:
        dense = self.to_dense()
        return float(np.max(np.abs(dense - dense.conj().T)))


class SpectralData:
    def __init__(
        self,
        eigenvalues: np.ndarray,
        eigenvectors: np.ndarray,
        a: float,
        grid: Optional[Grid2D] = None,
        residual: float = 0.0,
    ):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        self.a = float(a)
        self.grid = grid
        self.residual = float(residual)

    def __repr__(self):
        return f"SpectralData(N={len(self.eigenvalues)}, residual={self.residual:.2g})"

    def orthonormality_error(self) -> float:
        gram = self.a**2 * (self.eigenvectors.conj().T @ self.eigenvectors)
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


# --- Guards ---
def minimal_interior_nodes(width: float, mu: float, h: float, F_max: float) -> int:
    """Smallest interior node count per axis that satisfies both resolution guards."""
    if mu * F_max <= 0:
        return 0
    a_flux = math.sqrt(MAX_FLUX_PER_PLAQUETTE * h / (mu * F_max))
    a_length = math.sqrt(h / (mu * F_max)) / MIN_MAGNETIC_LENGTH_CELLS
    return int(math.ceil(width / min(a_flux, a_length))) - 1


def check_guards(grid: Grid2D, mu: float, h: float, F_max: float) -> Dict[str, float]:
    """Guard margins (value / limit, <= 1 passes) or GuardViolation."""
    a = grid.a
    flux = mu * F_max * a * a / h
    length_cells = math.sqrt(h / (mu * F_max)) / a if mu * F_max > 0 else math.inf
    margins = {
        "flux_per_plaquette": flux / MAX_FLUX_PER_PLAQUETTE,
        "magnetic_length": MIN_MAGNETIC_LENGTH_CELLS / length_cells,
    }
    need = minimal_interior_nodes(grid.x_max - grid.x_min, mu, h, F_max)
    if flux > MAX_FLUX_PER_PLAQUETTE:
        raise GuardViolation(
            f"Flux per plaquette mu*F_max*a^2/h = {flux:.4g} exceeds {MAX_FLUX_PER_PLAQUETTE}; "
            f"use at least {need} interior nodes per axis."
        )
    if length_cells < MIN_MAGNETIC_LENGTH_CELLS:
        raise GuardViolation(
            f"Magnetic length sqrt(h/(mu*F_max)) spans {length_cells:.3g} cells "
            f"(< {MIN_MAGNETIC_LENGTH_CELLS}); use at least {need} interior nodes per axis."
        )
    return margins


# --- Assembly ---
def _link_phases(coeffs: CoefficientSet, grid: Grid2D, mu: float, h: float):
    xs, ys, a = grid.xs, grid.ys, grid.a
    xm = 0.5 * (xs[:-1] + xs[1:])
    ym = 0.5 * (ys[:-1] + ys[1:])
    Xe, Ye = np.meshgrid(xm, ys, indexing="ij")
    Xn, Yn = np.meshgrid(xs, ym, indexing="ij")
    ux = np.exp(-1j * (mu / h) * coeffs.A1(Xe, Ye) * a)
    uy = np.exp(-1j * (mu / h) * coeffs.A2(Xn, Yn) * a)
    return ux, uy, (Xe, Ye), (Xn, Yn)


class _PairAccumulator:
    """Collects L[p, q] += v for p != q once per conjugate pair, plus the diagonal."""

    def __init__(self, size: int):
        self.size = size
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []
        self.diag = np.zeros(size)

    def add_pair(self, p: np.ndarray, q: np.ndarray, v: np.ndarray):
        keep = (p >= 0) & (q >= 0)
        p, q, v = p[keep], q[keep], v[keep]
        upper = p < q
        self.rows.append(np.where(upper, p, q))
        self.cols.append(np.where(upper, q, p))
        self.vals.append(np.where(upper, v, np.conj(v)))

    def add_diag(self, p: np.ndarray, v: np.ndarray):
        keep = p >= 0
        np.add.at(self.diag, p[keep], v[keep])

    def build(self) -> scipy.sparse.csr_matrix:
        rows = np.concatenate(self.rows) if self.rows else np.zeros(0, dtype=np.int64)
        cols = np.concatenate(self.cols) if self.cols else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(self.vals) if self.vals else np.zeros(0, dtype=complex)
        upper = scipy.sparse.coo_matrix(
            (vals, (rows, cols)), shape=(self.size, self.size), dtype=complex
        ).tocsr()
        diag = scipy.sparse.diags(self.diag.astype(complex), format="csr")
        return (upper + upper.conj().T.tocsr() + diag).tocsr()


def assemble(coeffs: CoefficientSet, grid: Grid2D, mu: float, h: float) -> DiscreteOperator:
    """Dirichlet discretization of the magnetic Schroedinger operator on ``grid``."""
    if h <= 0 or mu < 0:
        raise ValidationError(f"Need h > 0 and mu >= 0 (got mu={mu}, h={h}).")
    X, Y = grid.mesh()
    F_max = float(np.max(coeffs.derived_field("F")(X, Y)))
    margins = check_guards(grid, mu, h, F_max)

    nx, ny, a = grid.nx, grid.ny, grid.a
    index = -np.ones((nx, ny), dtype=np.int64)
    index[1:-1, 1:-1] = np.arange((nx - 2) * (ny - 2)).reshape(nx - 2, ny - 2)
    size = (nx - 2) * (ny - 2)
    ux, uy, (Xe, Ye), (Xn, Yn) = _link_phases(coeffs, grid, mu, h)

    g_x = coeffs.g11(Xe, Ye)
    g_y = coeffs.g22(Xn, Yn)
    if np.any(g_x <= 0) or np.any(g_y <= 0):
        raise GuardViolation("Metric edge weights must be positive on every grid edge.")
    Xc, Yc = np.meshgrid(
        0.5 * (grid.xs[:-1] + grid.xs[1:]), 0.5 * (grid.ys[:-1] + grid.ys[1:]), indexing="ij"
    )
    g12c = coeffs.g12(Xc, Yc)
    if np.any(g12c**2 >= coeffs.g11(Xc, Yc) * coeffs.g22(Xc, Yc)):
        raise GuardViolation("Metric is not positive definite at a cell centre.")

    acc = _PairAccumulator(size)
    # x-edges (i, j) -> (i+1, j)
    p, q = index[:-1, :].ravel(), index[1:, :].ravel()
    acc.add_diag(p, g_x.ravel())
    acc.add_diag(q, g_x.ravel())
    acc.add_pair(p, q, -(g_x * ux).ravel())
    # y-edges (i, j) -> (i, j+1)
    p, q = index[:, :-1].ravel(), index[:, 1:].ravel()
    acc.add_diag(p, g_y.ravel())
    acc.add_diag(q, g_y.ravel())
    acc.add_pair(p, q, -(g_y * uy).ravel())

    # g^12 cross term, one quarter per cell corner
    for di in (0, 1):
        for dj in (0, 1):
            s1 = 1.0 if di == 0 else -1.0
            s2 = 1.0 if dj == 0 else -1.0
            c = 0.25 * g12c * s1 * s2
            corner = index[di : nx - 1 + di, dj : ny - 1 + dj]
            n1 = index[1 - di : nx - di, dj : ny - 1 + dj]
            n2 = index[di : nx - 1 + di, 1 - dj : ny - dj]
            link_x = ux[:, dj : ny - 1 + dj]
            link_y = uy[di : nx - 1 + di, :]
            u1 = link_x if di == 0 else np.conj(link_x)
            u2 = link_y if dj == 0 else np.conj(link_y)
            acc.add_pair(n1.ravel(), n2.ravel(), (c * np.conj(u1) * u2).ravel())
            acc.add_pair(n1.ravel(), corner.ravel(), (-c * np.conj(u1)).ravel())
            acc.add_pair(corner.ravel(), n2.ravel(), (-c * u2).ravel())
            acc.add_diag(corner.ravel(), (2.0 * c).ravel())

    L = acc.build()
    potential = coeffs.V(X, Y)[1:-1, 1:-1].ravel()
    matrix = (h * h / (2.0 * a * a)) * L - scipy.sparse.diags(0.5 * potential, format="csr")
    logger.debug(f"Assembled N={size} operator, guard margins {margins}")
    return DiscreteOperator(
        matrix.tocsr(), grid, mu, h, {"x": ux, "y": uy}, index, margins
    )


# --- Spectrum ---
def eigensolve(op: Union[DiscreteOperator, np.ndarray]) -> SpectralData:
    """All eigenpairs by dense Hermitian decomposition.

    Eigenvectors are normalized in the discrete inner product a^2 sum conj(u) v.
    """
    if isinstance(op, DiscreteOperator):
        dense, a, grid = op.to_dense(), op.grid.a, op.grid
    else:
        dense, a, grid = np.asarray(op, dtype=complex), 1.0, None
    n = dense.shape[0]
    if n > DESK_SCALE_MAX_N:
        raise GuardViolation(
            f"Dense eigensolve of N={n} exceeds the desk-scale cap {DESK_SCALE_MAX_N}; "
            f"use at most {int(math.isqrt(DESK_SCALE_MAX_N))} interior nodes per axis."
        )
    try:
        values, vectors = scipy.linalg.eigh(dense)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(f"Hermitian eigensolver failed for N={n}: {e}") from e

    norm = float(np.max(np.abs(values))) if n else 0.0
    residuals = np.linalg.norm(dense @ vectors - vectors * values, axis=0)
    worst = int(np.argmax(residuals)) if n else 0
    residual = float(residuals[worst]) if n else 0.0
    if residual > RESIDUAL_TOL * max(norm, 1.0):
        raise ConvergenceError(
            f"Eigenpair {worst} has residual {residual:.3g} > {RESIDUAL_TOL:g}*||A||."
        )
    return SpectralData(values, vectors / a, a, grid, residual)


def _interior_weights(sd: SpectralData, psi) -> np.ndarray:
    if isinstance(psi, ScalarField):
        if sd.grid is None or psi.grid != sd.grid:
            raise ValidationError("psi must be sampled on the operator grid.")
        return psi.values[1:-1, 1:-1].ravel()
    return np.full(sd.eigenvectors.shape[0], float(psi))


def spectral_count(sd: SpectralData, psi, tau: float) -> float:
    """sum over eigenvalues <= tau of a^2 sum_nodes psi |u|^2."""
    weights = _interior_weights(sd, psi)
    below = sd.eigenvalues <= tau
    if not np.any(below):
        return 0.0
    u = sd.eigenvectors[:, below]
    return float(sd.a**2 * np.sum(weights @ (np.abs(u) ** 2)))


def gauge_check(
    coeffs: CoefficientSet, grid: Grid2D, mu: float, h: float, chi: Union[Field, ScalarField]
) -> float:
    """max |lambda - lambda'| / max |lambda| between A and A + grad(chi)."""
    chi_field = chi.as_field() if isinstance(chi, ScalarField) else chi

    def shifted(component: int, base: Field) -> Field:
        return Field(
            lambda x, y: base(x, y) + chi_field.gradient(x, y)[component],
            name=f"{base.name}+dchi",
        )

    gauged = coeffs.replace(A1=shifted(0, coeffs.A1), A2=shifted(1, coeffs.A2))
    reference = eigensolve(assemble(coeffs, grid, mu, h)).eigenvalues
    moved = eigensolve(assemble(gauged, grid, mu, h)).eigenvalues
    scale = float(np.max(np.abs(reference)))
    return float(np.max(np.abs(reference - moved)) / scale) if scale else 0.0


# --- Landau diagnostics ---
def landau_levels(V: float, F: float, mu: float, h: float, count: int) -> np.ndarray:
    """Constant-field eigenvalues 1/2 ((2n+1) mu h F - V), n = 0..count-1."""
    n = np.arange(count)
    return 0.5 * ((2 * n + 1) * mu * h * F - V)


def lattice_level_shift(n: int, mu: float, h: float, F: float, a: float) -> float:
    """Leading relative shift of Landau level n under the second-order Peierls stencil."""
    ell2 = h / (mu * F)
    return -(a * a / ell2) * (6 * n * n + 6 * n + 3) / (24.0 * (2 * n + 1))


def cluster_centres(
    eigenvalues: np.ndarray, levels: np.ndarray, spacing: float, width_fraction: float = 0.25
) -> Tuple[np.ndarray, np.ndarray]:
    """Centre and size of the densest run of eigenvalues near each level."""
    values = np.sort(np.asarray(eigenvalues, dtype=float))
    width = width_fraction * spacing
    centres, sizes = [], []
    for level in levels:
        window = values[(values >= level - 0.5 * spacing) & (values < level + 0.5 * spacing)]
        if window.size == 0:
            centres.append(np.nan)
            sizes.append(0)
            continue
        ends = np.searchsorted(window, window + width, side="right")
        counts = ends - np.arange(window.size)
        best = int(np.argmax(counts))
        centres.append(float(np.median(window[best : ends[best]])))
        sizes.append(int(counts[best]))
    return np.array(centres), np.array(sizes)


def lowest_cluster_count(eigenvalues: np.ndarray, V: float, F: float, mu: float, h: float) -> int:
    """Eigenvalues below the midpoint between the two lowest Landau levels."""
    first, second = landau_levels(V, F, mu, h, 2)
    return int(np.sum(np.asarray(eigenvalues) < 0.5 * (first + second)))


def effective_degeneracy(width: float, mu: float, h: float, F: float) -> float:
    """mu F Area_eff / (2 pi h) with one magnetic length trimmed off the side."""
    ell = math.sqrt(h / (mu * F))
    return (width - ell) ** 2 * mu * F / (2.0 * math.pi * h)


def observed_order(error_coarse: float, error_fine: float) -> float:
    """Convergence order under a -> a/2."""
    return math.log2(abs(error_coarse) / abs(error_fine))


# --- Eigenvalue cache ---
def save_eigenvalues(path: Union[str, Path], eigenvalues: np.ndarray):
    values = np.ascontiguousarray(eigenvalues, dtype="<f8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp = path.with_suffix(path.suffix + ".tmp")
    with open(temp, "wb") as f:
        f.write(CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, values.size))
        f.write(values.tobytes())
    temp.replace(path)


def load_eigenvalues(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < CACHE_HEADER.size:
        raise ValidationError(f"Eigenvalue cache {path} is truncated.")
    magic, version, n = CACHE_HEADER.unpack_from(data)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValidationError(f"Eigenvalue cache {path} has an unknown header.")
    body = data[CACHE_HEADER.size :]
    if len(body) != 8 * n:
        raise ValidationError(f"Eigenvalue cache {path} holds {len(body)} bytes, expected {8 * n}.")
    return np.frombuffer(body, dtype="<f8").astype(float)
