# magweyl/runner.py

"""
magweyl - Run pipeline

One run chains fields -> critical points -> asymptotic prediction and
assemble -> eigensolve -> spectral count of the oracle, and records the
comparison as a RunReport. Sweeps run their points on a worker pool and
re-solve each one on a coarser grid to detect discretization-limited remainders
before fitting the remainder scaling law.
"""
import csv
import hashlib
import io
import json
import logging
import logging.handlers
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .asymptote import nearest_level, predict
from .config import RunConfig, config_hash
from .critpoints import find_critical_points, interior_saddles
from .errors import GuardViolation, ValidationError
from .oracle import (
    assemble,
    cluster_centres,
    effective_degeneracy,
    eigensolve,
    landau_levels,
    load_eigenvalues,
    lowest_cluster_count,
    save_eigenvalues,
    spectral_count,
)
from .scenarios import build_scenario, scenario_grid

logger = logging.getLogger("magweyl.runner")

# --- Constants ---
RUN_LOG_CAPACITY = 200
MANIFEST_NAME = "manifest.json"
RUNS_DIR = "runs"
CACHE_DIR = "cache"
MIN_SWEEP_POINTS = 4
MIN_COARSE_INTERIOR = 6
LANDAU_CLUSTERS = 4
CSV_COLUMNS = (
    "scenario",
    "mu",
    "h",
    "regime",
    "N_exact",
    "N_weyl",
    "corr_sum",
    "corr2_sum",
    "N_pred",
    "remainder",
    "grid",
    "seconds",
)
DISCRETIZATION_LIMITED = "discretization-limited"
DISCRETIZATION_UNCHECKED = "discretization-unchecked"
MIN_CLEAN_FIT_POINTS = 3


def _num(value: float) -> str:
    return format(float(value), ".12g")


# --- Records ---
class RunReport:
    def __init__(
        self,
        run_id: str,
        scenario: str,
        mu: float,
        h: float,
        regime: str,
        N_exact: float,
        N_weyl: float,
        N_pred: float,
        corr_sum: float,
        corr2_sum: float,
        corrections: List[Dict],
        critical_points: List[Dict],
        grid: int,
        guard_margins: Dict[str, float],
        prediction: Optional[Dict] = None,
        diagnostics: Optional[Dict] = None,
        log: Optional[List[str]] = None,
        sweep_id: Optional[str] = None,
        sweep_value: Optional[float] = None,
        seconds: Optional[float] = None,
    ):
        self.run_id = run_id
        self.scenario = scenario
        self.mu = float(mu)
        self.h = float(h)
        self.regime = regime
        self.N_exact = float(N_exact)
        self.N_weyl = float(N_weyl)
        self.N_pred = float(N_pred)
        self.corr_sum = float(corr_sum)
        self.corr2_sum = float(corr2_sum)
        self.remainder = self.N_exact - self.N_pred
        if not math.isfinite(self.remainder):
            raise ValidationError(f"Run {run_id[:8]} produced a non-finite remainder.")
        self.corrections = corrections
        self.critical_points = critical_points
        self.grid = int(grid)
        self.guard_margins = guard_margins
        self.prediction = prediction or {}
        self.diagnostics = diagnostics or {}
        self.log = log or []
        self.sweep_id = sweep_id
        self.sweep_value = sweep_value
        self.seconds = seconds

    def __repr__(self):
        return (
            f"RunReport(scenario='{self.scenario}', mu={self.mu:g}, h={self.h:g}, "
            f"regime={self.regime}, remainder={self.remainder:.6g})"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": __version__,
            "run_id": self.run_id,
            "scenario": self.scenario,
            "mu": self.mu,
            "h": self.h,
            "regime": self.regime,
            "N_exact": self.N_exact,
            "N_weyl": self.N_weyl,
            "corr_sum": self.corr_sum,
            "corr2_sum": self.corr2_sum,
            "N_pred": self.N_pred,
            "remainder": self.remainder,
            "grid": self.grid,
            "guard_margins": self.guard_margins,
            "corrections": self.corrections,
            "critical_points": self.critical_points,
            "prediction": self.prediction,
            "diagnostics": self.diagnostics,
            "sweep_id": self.sweep_id,
            "sweep_value": self.sweep_value,
            "seconds": self.seconds,
            "log": self.log,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        return cls(
            run_id=data["run_id"],
            scenario=data["scenario"],
            mu=data["mu"],
            h=data["h"],
            regime=data["regime"],
            N_exact=data["N_exact"],
            N_weyl=data["N_weyl"],
            N_pred=data["N_pred"],
            corr_sum=data["corr_sum"],
            corr2_sum=data["corr2_sum"],
            corrections=data.get("corrections", []),
            critical_points=data.get("critical_points", []),
            grid=data["grid"],
            guard_margins=data.get("guard_margins", {}),
            prediction=data.get("prediction"),
            diagnostics=data.get("diagnostics"),
            log=data.get("log"),
            sweep_id=data.get("sweep_id"),
            sweep_value=data.get("sweep_value"),
            seconds=data.get("seconds"),
        )

    def csv_row(self, timings: bool = False) -> List[str]:
        seconds = _num(self.seconds) if timings and self.seconds is not None else ""
        return [
            self.scenario,
            _num(self.mu),
            _num(self.h),
            self.regime,
            _num(self.N_exact),
            _num(self.N_weyl),
            _num(self.corr_sum),
            _num(self.corr2_sum),
            _num(self.N_pred),
            _num(self.remainder),
            str(self.grid),
            seconds,
        ]


def csv_text(reports: Sequence[RunReport], timings: bool = False, header: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow(report.csv_row(timings))
    return buffer.getvalue()


# --- Persistence ---
_STORE_LOCK = threading.RLock()


def atomic_write_json(path: Path, data: Any):
    """Write JSON via a temp file and os.rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file_path = path.with_suffix(path.suffix + ".tmp")
    try:
        with temp_file_path.open("w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
        os.rename(str(temp_file_path), str(path))
    except (IOError, OSError):
        if temp_file_path.exists():
            temp_file_path.unlink()
        raise


class ResultsStore:
    """manifest.json, runs/<run_id>.json and sweep_<id>.csv under one directory."""

    def __init__(self, root):
        self.root = Path(root)
        # one lock for every store in the process
        self.lock = _STORE_LOCK

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def load_manifest(self) -> Dict[str, Any]:
        if not self.manifest_path.exists():
            return {"version": __version__, "runs": {}, "sweeps": {}}
        with self.manifest_path.open("r", encoding="utf-8") as f:
            return json.load(f)

    def _update_manifest(self, section: str, key: str, entry: Dict[str, Any]):
        with self.lock:
            manifest = self.load_manifest()
            manifest["version"] = __version__
            manifest.setdefault(section, {})[key] = entry
            atomic_write_json(self.manifest_path, manifest)

    def write_run(self, report: RunReport, config_digest: str):
        with self.lock:
            atomic_write_json(self.root / RUNS_DIR / f"{report.run_id}.json", report.to_dict())
            self._update_manifest(
                "runs",
                report.run_id,
                {
                    "config_hash": config_digest,
                    "scenario": report.scenario,
                    "sweep_id": report.sweep_id,
                    "finished": time.strftime("%Y-%m-%dT%H:%M:%S"),
                    "seconds": report.seconds,
                },
            )

    def append_row(self, sweep_id: str, report: RunReport, timings: bool = False):
        path = self.root / f"sweep_{sweep_id}.csv"
        with self.lock:
            self.root.mkdir(parents=True, exist_ok=True)
            new = not path.exists()
            with path.open("a", encoding="utf-8", newline="") as f:
                f.write(csv_text([report], timings, header=new))

    def write_sweep(self, sweep_id: str, summary: Dict[str, Any]):
        with self.lock:
            atomic_write_json(self.root / f"sweep_{sweep_id}.json", summary)
            self._update_manifest(
                "sweeps",
                sweep_id,
                {"axis": summary.get("axis"), "points": len(summary.get("runs", []))},
            )

    def load_runs(self) -> List[RunReport]:
        run_dir = self.root / RUNS_DIR
        if not run_dir.is_dir():
            return []
        reports = []
        for path in sorted(run_dir.glob("*.json")):
            with path.open("r", encoding="utf-8") as f:
                reports.append(RunReport.from_dict(json.load(f)))
        return reports

    def load_sweeps(self) -> Dict[str, Dict[str, Any]]:
        sweeps = {}
        for path in sorted(self.root.glob("sweep_*.json")):
            with path.open("r", encoding="utf-8") as f:
                sweeps[path.stem[len("sweep_") :]] = json.load(f)
        return sweeps

    def cache_path(self, key: str) -> Path:
        return self.root / CACHE_DIR / f"{key}.laev"


def eigenvalue_cache_key(cfg: RunConfig) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(cfg.to_dict()["scenario"], sort_keys=True).encode("utf-8"))
    h.update(f"{cfg.grid.n}:{cfg.grid.half_width!r}:{cfg.regime.mu!r}:{cfg.regime.h!r}".encode())
    if cfg.seed is not None:
        h.update(f"seed:{cfg.seed}".encode())
    return h.hexdigest()


# --- Logging ---
def _run_logger(run_id: str) -> Tuple[logging.Logger, logging.handlers.MemoryHandler]:
    run_logger = logging.getLogger(f"magweyl.run.{run_id[:8]}")
    run_logger.propagate = False
    run_logger.setLevel(logging.DEBUG)
    for old in list(run_logger.handlers):
        run_logger.removeHandler(old)
    handler = logging.handlers.MemoryHandler(capacity=RUN_LOG_CAPACITY)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    run_logger.addHandler(handler)
    return run_logger, handler


def _drain(handler: logging.handlers.MemoryHandler) -> List[str]:
    lines = [handler.format(record) for record in handler.buffer][-RUN_LOG_CAPACITY:]
    handler.buffer.clear()
    return lines


# --- Single run ---
def _landau_diagnostics(cfg: RunConfig, eigenvalues: np.ndarray) -> Dict[str, Any]:
    params = cfg.scenario.params
    V, F = float(params.get("V", 1.0)), float(params.get("F", 1.0))
    mu, h = cfg.regime.mu, cfg.regime.h
    levels = landau_levels(V, F, mu, h, LANDAU_CLUSTERS)
    centres, sizes = cluster_centres(eigenvalues, levels, mu * h * F)
    return {
        "landau_levels": levels.tolist(),
        "cluster_centres": [None if math.isnan(c) else float(c) for c in centres],
        "cluster_sizes": sizes.tolist(),
        "lowest_cluster_count": lowest_cluster_count(eigenvalues, V, F, mu, h),
        "effective_degeneracy": effective_degeneracy(2.0 * cfg.grid.half_width, mu, h, F),
    }


def oracle_count(cfg: RunConfig, n_interior: Optional[int] = None) -> Tuple[float, Any, Any]:
    """(N_exact, operator, spectral data) for ``cfg`` on an optionally different grid."""
    grid = scenario_grid(n_interior or cfg.grid.n, cfg.grid.half_width)
    scenario = build_scenario(
        cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed
    )
    op = assemble(scenario.coeffs, grid, cfg.regime.mu, cfg.regime.h)
    sd = eigensolve(op)
    return spectral_count(sd, scenario.psi, 0.0), op, sd


def run_scenario(
    cfg: RunConfig,
    out_dir=None,
    workers: int = 1,
    sweep_id: Optional[str] = None,
    sweep_value: Optional[float] = None,
    timings: bool = False,
) -> RunReport:
    """Prediction vs oracle for one (scenario, mu, h); persisted when ``out_dir`` is set."""
    start = time.perf_counter()
    digest = config_hash(cfg)
    run_id = digest
    run_logger, handler = _run_logger(run_id)
    try:
        grid = scenario_grid(cfg.grid.n, cfg.grid.half_width)
        scenario = build_scenario(
            cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed
        )
        coeffs = scenario.coeffs
        c = cfg.constants
        points = find_critical_points(
            coeffs,
            search_radius=c.search_radius,
            newton_tol=c.newton_tol,
            nondeg_tol=c.nondeg_tol,
            dedup_radius=c.dedup_radius,
            max_iter=c.max_iter,
            workers=workers,
            log=run_logger,
        )
        run_logger.info(
            f"{len(points)} critical point(s), {len(interior_saddles(points))} interior saddle(s)"
        )
        rp = cfg.regime_params()
        prediction = predict(coeffs, scenario.psi, rp, points)
        run_logger.info(f"{prediction!r}")

        op = assemble(coeffs, grid, rp.mu, rp.h)
        sd = eigensolve(op)
        N_exact = spectral_count(sd, scenario.psi, 0.0)
        run_logger.info(f"Oracle N={op.dimension}, N_exact={N_exact:.10g}")

        diagnostics = {}
        if cfg.scenario.builtin == "constant_field" and scenario.nbar is None:
            diagnostics = _landau_diagnostics(cfg, sd.eigenvalues)
        report = RunReport(
            run_id=run_id,
            scenario=scenario.name,
            mu=rp.mu,
            h=rp.h,
            regime=prediction.regime.value,
            N_exact=N_exact,
            N_weyl=prediction.weyl_integral,
            N_pred=prediction.total,
            corr_sum=prediction.corr_sum,
            corr2_sum=prediction.corr2_sum,
            corrections=[sc.to_dict() for sc in prediction.saddle_corrections],
            critical_points=[cp.to_dict() for cp in points],
            grid=cfg.grid.n,
            guard_margins=op.guard_margins,
            prediction=prediction.to_dict(),
            diagnostics=diagnostics,
            sweep_id=sweep_id,
            sweep_value=sweep_value,
        )
        if out_dir is not None:
            store = ResultsStore(out_dir)
            save_eigenvalues(store.cache_path(eigenvalue_cache_key(cfg)), sd.eigenvalues)
    finally:
        log_lines = _drain(handler)
    report.log = log_lines
    report.seconds = time.perf_counter() - start
    if out_dir is not None:
        store.write_run(report, digest)
        if sweep_id is None:
            store.append_row(run_id[:12], report, timings)
    return report


def cached_eigenvalues(cfg: RunConfig, out_dir) -> Optional[np.ndarray]:
    """Eigenvalues from the on-disk cache, or None."""
    path = ResultsStore(out_dir).cache_path(eigenvalue_cache_key(cfg))
    if not path.exists():
        return None
    try:
        values = load_eigenvalues(path)
    except ValidationError as e:
        logger.warning(f"Ignoring eigenvalue cache {path.name}: {e}")
        return None
    logger.info(f"Eigenvalue cache hit {path.name}")
    return values


# --- Sweeps ---
def mu_for_sigma(V: float, F: float, h: float, nbar: int, sigma: float, above: bool) -> float:
    """mu with |V - (2 nbar + 1) F mu h| = sigma on the chosen side of level nbar."""
    target = V - sigma if above else V + sigma
    return target / ((2 * nbar + 1) * F * h)


def sweep_point_configs(cfg: RunConfig, axis: str, points: Sequence[float]) -> List[RunConfig]:
    sw = cfg.sweep
    if axis == "h":
        configs = []
        for h in points:
            mu = cfg.regime.mu if sw.mu_exponent is None else sw.mu_scale * h**sw.mu_exponent
            configs.append(cfg.with_regime(h=float(h), mu=float(mu)))
        return configs
    if axis == "mu":
        return [cfg.with_regime(mu=float(mu)) for mu in points]
    if axis == "sigma":
        grid = scenario_grid(cfg.grid.n, cfg.grid.half_width)
        scenario = build_scenario(cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed)
        c = cfg.constants
        saddles = interior_saddles(
            find_critical_points(
                scenario.coeffs, c.search_radius, c.newton_tol, c.nondeg_tol, c.dedup_radius, c.max_iter
            )
        )
        if not saddles:
            raise ValidationError("A sigma sweep needs an interior saddle of V/F.")
        cp = saddles[0]
        _, nbar = nearest_level(cp.V_value, cp.F_value, cfg.regime.mu * cfg.regime.h)
        nbar = int(nbar)
        above = (2 * nbar + 1) * cp.F_value * cfg.regime.mu * cfg.regime.h <= cp.V_value
        return [
            cfg.with_regime(mu=mu_for_sigma(cp.V_value, cp.F_value, cfg.regime.h, nbar, s, above))
            for s in points
        ]
    raise ValidationError(f"Unknown sweep axis '{axis}'.")


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Slope and RMS residual of a straight-line fit of log|y| against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.abs(np.asarray(y, dtype=float)))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), residual


def linear_residual(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Slope and RMS residual of y against x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))


def law_residual(z: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Coefficient and RMS residual of y against c * z through the origin."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    c = float(np.dot(z, y) / np.dot(z, z))
    return c, float(np.sqrt(np.mean((y - c * z) ** 2)))


class SweepSummary:
    def __init__(self, sweep_id: str, axis: str, points: List[float], reports: List[RunReport]):
        self.sweep_id = sweep_id
        self.axis = axis
        self.points = points
        self.reports = reports
        self.fits: Dict[str, Any] = {}
        self.flags: Dict[float, List[str]] = {p: [] for p in points}
        self.coarse_N_exact: Dict[float, Optional[float]] = {}

    def __repr__(self):
        return f"SweepSummary(axis={self.axis}, points={len(self.points)}, fits={sorted(self.fits)})"

    @property
    def discretization_limited(self) -> List[float]:
        return [p for p in self.points if DISCRETIZATION_LIMITED in self.flags[p]]

    @property
    def discretization_unchecked(self) -> List[float]:
        return [p for p in self.points if DISCRETIZATION_UNCHECKED in self.flags[p]]

    @property
    def clean_points(self) -> List[float]:
        return [p for p in self.points if not self.flags[p]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sweep_id": self.sweep_id,
            "axis": self.axis,
            "points": self.points,
            "runs": [r.run_id for r in self.reports],
            "fits": self.fits,
            "flags": {_num(p): flags for p, flags in self.flags.items()},
            "coarse_N_exact": {_num(p): v for p, v in self.coarse_N_exact.items()},
        }


def _sweep_id(cfg: RunConfig, axis: str, points: Sequence[float]) -> str:
    h = hashlib.sha256()
    h.update(config_hash(cfg).encode("utf-8"))
    h.update(json.dumps([axis, [float(p) for p in points]]).encode("utf-8"))
    return h.hexdigest()[:12]


def _discretization_check(summary: SweepSummary, configs: List[RunConfig], ratio: float, log):
    for point, cfg, report in zip(summary.points, configs, summary.reports):
        coarse_n = max(MIN_COARSE_INTERIOR, int(round(cfg.grid.n * ratio)))
        try:
            coarse, _, _ = oracle_count(cfg, coarse_n)
        except GuardViolation as e:
            log.warning(f"Coarse re-solve at {summary.axis}={point:g} refused: {e}")
            summary.coarse_N_exact[point] = None
            summary.flags[point].append(DISCRETIZATION_UNCHECKED)
            continue
        summary.coarse_N_exact[point] = coarse
        change = abs(report.N_exact - coarse)
        if abs(report.remainder) <= 2.0 * change:
            summary.flags[point].append(DISCRETIZATION_LIMITED)
            log.warning(
                f"{summary.axis}={point:g}: |remainder| {abs(report.remainder):.3g} within twice "
                f"the grid-to-grid change {change:.3g}; flagged {DISCRETIZATION_LIMITED}"
            )


def _model_comparison(summary: SweepSummary, x: np.ndarray) -> Dict[str, Any]:
    """Both remainders regressed on the law mu^-1 h^-1; drift measured along ``x``."""
    exact = np.array([r.N_exact for r in summary.reports])
    with_corr = exact - np.array([r.N_pred for r in summary.reports])
    without = exact - np.array([r.N_weyl for r in summary.reports])
    law = np.array([1.0 / (r.mu * r.h) for r in summary.reports])
    _, res_with = law_residual(law, with_corr)
    _, res_without = law_residual(law, without)
    drift, _ = linear_residual(x, without)
    if res_with < res_without:
        verdict = "with-corrections"
    elif res_without < res_with:
        verdict = "without-corrections"
    else:
        verdict = "indistinguishable"
    return {
        "residual_with_corrections": res_with,
        "residual_without_corrections": res_without,
        "verdict": verdict,
        "drift_slope": drift,
    }


def _clean_fits(summary: SweepSummary) -> Dict[str, Any]:
    """Power-law fits restricted to the points without discretization flags."""
    clean = summary.clean_points
    by_point = dict(zip(summary.points, summary.reports))
    reports = [by_point[p] for p in clean if by_point[p].remainder != 0]
    fits: Dict[str, Any] = {"clean_points": clean}
    if len(reports) < MIN_CLEAN_FIT_POINTS:
        if len(clean) < len(summary.points):
            logger.warning(
                f"Only {len(reports)} unflagged point(s); clean fits need {MIN_CLEAN_FIT_POINTS}."
            )
        fits["exponent_vs_inverse_h_clean"] = None
        fits["exponent_vs_law_clean"] = None
        return fits
    remainders = [r.remainder for r in reports]
    if summary.axis == "h":
        fits["exponent_vs_inverse_h_clean"], _ = fit_power_law([1.0 / r.h for r in reports], remainders)
    else:
        fits["exponent_vs_inverse_h_clean"] = None
    fits["exponent_vs_law_clean"], _ = fit_power_law([1.0 / (r.mu * r.h) for r in reports], remainders)
    return fits


def _varkappa_sign(report: RunReport) -> int:
    for correction in report.corrections:
        if not correction["point"]["boundary_unreliable"]:
            return int(np.sign(correction["varkappa"]))
    return 0


def _fit_kappa2(reports: Sequence[RunReport]) -> Optional[float]:
    """Least-squares kappa2 from the points whose regime carries the corr2 term."""
    basis, target = [], []
    for r in reports:
        if r.regime != "intermediate_corr2" or not r.corrections:
            continue
        log_factor = 1.0 + 1.0 / (r.mu * r.h)
        basis.append(
            sum(
                c["psi_value"] * r.mu * r.h * math.log((c["sigma"] + r.h**2) * log_factor)
                for c in r.corrections
            )
        )
        target.append(r.N_exact - (r.N_pred - r.corr2_sum))
    if not basis or not np.any(basis):
        return None
    b = np.array(basis)
    return float(np.dot(b, target) / np.dot(b, b))


def sweep_and_fit(
    cfg: RunConfig,
    axis: Optional[str] = None,
    points: Optional[Sequence[float]] = None,
    out_dir=None,
    workers: int = 1,
    timings: bool = False,
) -> SweepSummary:
    """Run every sweep point, flag discretization-limited ones and fit the remainder law."""
    axis = axis or cfg.sweep.axis
    points = sorted(float(p) for p in (points if points is not None else cfg.sweep.points))
    if len(points) < MIN_SWEEP_POINTS:
        raise ValidationError(
            f"insufficient points: a sweep needs at least {MIN_SWEEP_POINTS}, got {len(points)}."
        )
    sweep_id = _sweep_id(cfg, axis, points)
    configs = sweep_point_configs(cfg, axis, points)

    def one(item):
        point, point_cfg = item
        return run_scenario(point_cfg, out_dir, 1, sweep_id, point, timings)

    items = list(zip(points, configs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(one, items))
    else:
        reports = [one(item) for item in items]

    summary = SweepSummary(sweep_id, axis, points, reports)
    if cfg.sweep.refine_check:
        _discretization_check(summary, configs, cfg.sweep.coarse_ratio, logger)

    mu = np.array([r.mu for r in reports])
    h = np.array([r.h for r in reports])
    remainders = np.array([r.remainder for r in reports])
    if np.all(remainders != 0):
        slope_h, res_h = fit_power_law(1.0 / h, remainders) if axis == "h" else (None, None)
        slope_law, res_law = fit_power_law(1.0 / (mu * h), remainders)
        summary.fits["exponent_vs_inverse_h"] = slope_h
        summary.fits["residual_vs_inverse_h"] = res_h
        summary.fits["exponent_vs_law"] = slope_law
        summary.fits["residual_vs_law"] = res_law
    else:
        logger.warning("A remainder is exactly zero; power-law fits skipped.")
    summary.fits.update(_clean_fits(summary))

    x = np.log(np.asarray(points)) if axis == "sigma" else np.log(1.0 / (mu * h))
    comparison = _model_comparison(summary, x)
    if axis == "sigma":
        kappa_sign = _varkappa_sign(reports[0])
        comparison["varkappa_sign"] = kappa_sign
        comparison["drift_sign"] = int(np.sign(comparison["drift_slope"]))
        comparison["drift_matches_varkappa"] = comparison["drift_sign"] == kappa_sign
    summary.fits["model_comparison"] = comparison
    kappa2 = _fit_kappa2(reports)
    if kappa2 is not None:
        summary.fits["kappa2_fitted"] = {"value": kappa2, "note": "fitted, not from theory"}
    if out_dir is not None:
        store = ResultsStore(out_dir)
        for report in reports:
            store.append_row(sweep_id, report, timings)
        store.write_sweep(sweep_id, summary.to_dict())
    return summary
