"""Grid-sweep experiment harness writing figure data as CSV.

An experiment is a list of parameter points times a sample count.  Each
(point, sample) cell generates one graph with its own derived seed,
solves the eigenproblem, and records the measured quantities next to
the analytic curves for that point.  Rows are emitted in deterministic
(point, sample) order regardless of worker completion order, and the
CSV is written atomically.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ema import gaussian_fraction_correct, ncut_ema, ratiocut_ema
from .eigen import ipr, overlap, second_smallest_eigenpair
from .errors import InvalidGrid, InvalidSpec, UnequalModulesUnsupported
from .graphs import (
    Bimodal,
    BlockParams,
    Poisson,
    Regular,
    mean_degree,
    sample_graph,
)
from .localization import DefectTree, Ema, Kind, defect_degree, localized_mode_ema
from .operators import LaplacianKind, build_laplacian, zero_mode

__all__ = [
    "ExperimentConfig",
    "COLUMNS",
    "splitmix64",
    "derive_seed",
    "run_experiment",
    "write_csv",
    "emit_phase_diagram",
    "figure_preset",
    "FIGURE_PRESETS",
]

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """Deterministic 64-bit mixer used to derive per-cell seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(base_seed: int, *indices: int) -> int:
    """base_seed XOR a mixed hash of the grid indices, so any single row
    can be reproduced in isolation."""
    h = 0
    for i in indices:
        h = splitmix64(h ^ splitmix64(int(i)))
    return (int(base_seed) ^ h) & _MASK


@dataclass
class ExperimentConfig:
    experiment: str
    points: list
    n: int
    samples: int
    base_seed: int = 0
    out: str | None = None
    include_pd: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidSpec("samples must be at least 1")
        if not self.points:
            raise InvalidSpec("experiment needs a nonempty point grid")


COLUMNS = [
    "experiment",
    "point",
    "sample",
    "n",
    "spec",
    "p1",
    "gamma",
    "delta",
    "laplacian",
    "seed",
    "lambda2",
    "ipr",
    "overlap",
    "ema_lambda2",
    "localized_lambda",
    "fraction_correct_ema",
    "pd_lambda2",
    "error",
]


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _spec_name(spec) -> str:
    if isinstance(spec, Regular):
        return "regular:%d" % spec.c
    if isinstance(spec, Bimodal):
        return "bimodal:%d,%d,%.17g" % (spec.c1, spec.c2, spec.b1)
    if isinstance(spec, Poisson):
        return "poisson:%.17g" % spec.cbar
    return type(spec).__name__


def _point_analytics(point: dict) -> dict:
    """Analytic columns computed once per grid point."""
    spec = point["spec"]
    p1 = point["p1"]
    gamma = point["gamma"]
    lap = point["laplacian"]
    out = {"ema_lambda2": None, "localized_lambda": None, "fraction_correct_ema": None}
    if lap is LaplacianKind.UNNORMALIZED:
        sol, _ = ratiocut_ema(spec, p1, gamma)
        out["ema_lambda2"] = sol.lambda2
        model = "regular_L" if isinstance(spec, Regular) else None
    else:
        out["ema_lambda2"] = ncut_ema(spec, p1, gamma).lambda2
        model = "ncut"
    if isinstance(spec, Bimodal):
        kind = Kind.L if lap is LaplacianKind.UNNORMALIZED else Kind.NCUT
        c_d = defect_degree(spec.c1, spec.c2, spec.b1)
        best = None
        for g in range(4):
            mode = localized_mode_ema(
                kind, DefectTree(c_d, g, Ema(spec, p1, gamma))
            )
            if mode is not None and (best is None or mode.lam < best):
                best = mode.lam
        out["localized_lambda"] = best
    try:
        if model == "regular_L":
            out["fraction_correct_ema"] = gaussian_fraction_correct(
                "regular_L", spec.c, p1, gamma
            )
        elif lap is LaplacianKind.NORMALIZED:
            out["fraction_correct_ema"] = gaussian_fraction_correct(
                "ncut", spec, p1, gamma
            )
    except UnequalModulesUnsupported:
        pass
    return out


def _measure_cell(point: dict, n: int, seed: int) -> dict:
    spec = point["spec"]
    params = BlockParams(n=n, p1=point["p1"], gamma=point["gamma"])
    graph = sample_graph(spec, params, seed)
    lap = build_laplacian(graph, point["laplacian"])
    res = second_smallest_eigenpair(
        lap, zero_mode(graph, point["laplacian"]), seed=seed & 0x7FFFFFFF
    )
    return {
        "lambda2": res.lambda2,
        "ipr": ipr(res.vector),
        "overlap": overlap(res.vector, graph.labels),
    }


def _pd_lambda2(point: dict, seed: int) -> float:
    from .replica import Model, PdConfig, run_population_dynamics

    spec = point["spec"]
    if point["laplacian"] is LaplacianKind.NORMALIZED:
        model = Model.GENERAL_NCUT
    elif isinstance(spec, Regular):
        model = Model.REGULAR_L
    else:
        model = Model.GENERAL_L
    cfg = PdConfig(
        model=model,
        spec=spec,
        p1=point["p1"],
        gamma=point["gamma"],
        seed=seed & 0x7FFFFFFF,
        population_size=10000,
        equilibration_sweeps=40,
        measurement_sweeps=20,
        phi_bisection_tolerance=1e-4,
    )
    return run_population_dynamics(cfg).lambda2


def _worker_count() -> int:
    env = os.environ.get("SPECDETECT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_experiment(config: ExperimentConfig):
    """Execute the grid and return (records, summary).

    Records are dicts keyed by COLUMNS in deterministic (point, sample)
    order.  Per-cell failures keep their row with the error column set.
    The summary aggregates measured lambda2 per point.
    """
    analytics = []
    pd_vals = []
    for pi, point in enumerate(config.points):
        try:
            analytics.append(_point_analytics(point))
        except Exception as exc:  # analytic curves are best effort
            analytics.append(
                {
                    "ema_lambda2": None,
                    "localized_lambda": None,
                    "fraction_correct_ema": None,
                    "error": "%s: %s" % (type(exc).__name__, exc),
                }
            )
        if config.include_pd:
            try:
                pd_vals.append(_pd_lambda2(point, derive_seed(config.base_seed, pi)))
            except Exception:
                pd_vals.append(None)
        else:
            pd_vals.append(None)

    cells = [
        (pi, si)
        for pi in range(len(config.points))
        for si in range(config.samples)
    ]

    def work(cell):
        pi, si = cell
        seed = derive_seed(config.base_seed, pi, si)
        try:
            return seed, _measure_cell(config.points[pi], config.n, seed), None
        except Exception as exc:
            return seed, None, "%s: %s" % (type(exc).__name__, exc)

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        outcomes = list(pool.map(work, cells))

    records = []
    for (pi, si), (seed, measured, err) in zip(cells, outcomes):
        point = config.points[pi]
        ana = analytics[pi]
        row = {
            "experiment": config.experiment,
            "point": pi,
            "sample": si,
            "n": config.n,
            "spec": _spec_name(point["spec"]),
            "p1": point["p1"],
            "gamma": point["gamma"],
            "delta": point.get("delta"),
            "laplacian": (
                "L" if point["laplacian"] is LaplacianKind.UNNORMALIZED else "ncut"
            ),
            "seed": seed,
            "lambda2": measured["lambda2"] if measured else None,
            "ipr": measured["ipr"] if measured else None,
            "overlap": measured["overlap"] if measured else None,
            "ema_lambda2": ana.get("ema_lambda2"),
            "localized_lambda": ana.get("localized_lambda"),
            "fraction_correct_ema": ana.get("fraction_correct_ema"),
            "pd_lambda2": pd_vals[pi],
            "error": err or ana.get("error") or "",
        }
        records.append(row)

    summary = []
    for pi, point in enumerate(config.points):
        vals = [
            r["lambda2"]
            for r in records
            if r["point"] == pi and r["lambda2"] is not None
        ]
        if vals:
            arr = np.array(vals, dtype=float)
            stderr = (
                float(arr.std(ddof=1)) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
            )
            summary.append(
                {
                    "point": pi,
                    "gamma": point["gamma"],
                    "mean_lambda2": float(arr.mean()),
                    "stderr_lambda2": stderr,
                    "count": len(arr),
                }
            )
        else:
            summary.append(
                {
                    "point": pi,
                    "gamma": point["gamma"],
                    "mean_lambda2": None,
                    "stderr_lambda2": None,
                    "count": 0,
                }
            )

    if config.out:
        write_csv(records, config.out)
    return records, summary


def write_csv(records, path, columns=None) -> None:
    """Atomic CSV write: temp file in the target directory, then rename."""
    columns = columns or COLUMNS
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_fmt(rec.get(col)) for col in columns])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


PHASE_COLUMNS = ["cbar", "delta_ema", "delta_ultimate", "delta_max"]


def emit_phase_diagram(cbar_grid, out=None):
    """Threshold curves versus mean degree: the spectral (effective
    medium) threshold, the information-theoretic reference, and the
    largest representable degree difference."""
    grid = np.asarray(list(cbar_grid), dtype=float)
    if grid.size == 0 or np.any(grid <= 1.0):
        raise InvalidGrid("cbar grid must be nonempty with every entry > 1")
    rows = []
    for cbar in grid:
        rows.append(
            {
                "cbar": cbar,
                "delta_ema": 2.0 * cbar / math.sqrt(cbar - 1.0),
                "delta_ultimate": 2.0 * math.sqrt(cbar),
                "delta_max": 2.0 * cbar,
            }
        )
    if out:
        write_csv(rows, out, columns=PHASE_COLUMNS)
    return rows


def _points(entries):
    return [
        {
            "spec": spec,
            "p1": p1,
            "gamma": gamma,
            "laplacian": lap,
            "delta": delta,
        }
        for (spec, p1, gamma, lap, delta) in entries
    ]


def figure_preset(name: str, n=None, samples=None, base_seed=0, out=None):
    """Build the ExperimentConfig for one of the named figure sweeps."""
    L, NC = LaplacianKind.UNNORMALIZED, LaplacianKind.NORMALIZED
    if name == "fig2_eigvec_dist":
        entries = [
            (Regular(3), 0.7, 0.1, L, None),
            (Regular(4), 0.6, 0.1, L, None),
        ]
        default_n, default_samples = 10**4, 100
    elif name == "fig3_regular_lambda2":
        gammas = np.linspace(0.03, 0.36, 12)
        entries = [
            (Regular(c), 0.5, float(g), L, None) for c in (3, 4) for g in gammas
        ]
        default_n, default_samples = 10**4, 100
    elif name == "fig5_regular_overlap":
        # gamma multiples of 0.01 keep round(gamma n) even at n = 10^4
        gammas = np.linspace(0.02, 0.35, 12)
        entries = [(Regular(3), 0.5, float(g), L, None) for g in gammas]
        default_n, default_samples = 10**4, 100
    elif name in ("fig6_bimodal_L", "fig8_bimodal_ncut"):
        lap = L if name == "fig6_bimodal_L" else NC
        entries = []
        for (c1, c2) in ((3, 6), (3, 9)):
            for b1 in (0.1, 0.5, 0.9):
                spec = Bimodal(c1, c2, b1)
                cap = mean_degree(spec) * 0.6 * 0.4
                gs = np.round(np.linspace(0.05, 0.95, 10) * cap / 0.02) * 0.02
                for g in np.clip(gs, 0.02, None):
                    entries.append((spec, 0.6, float(g), lap, None))
        default_n, default_samples = 10**4, 10
    elif name == "fig10_sbm":
        entries = []
        for cbar in (6.0, 8.0):
            cap = cbar * 0.25
            for gamma in np.linspace(0.08 * cap, 0.96 * cap, 12):
                gamma = round(gamma / 0.02) * 0.02
                delta = 2.0 * (cbar - 4.0 * gamma)
                entries.append((Poisson(cbar), 0.5, gamma, NC, delta))
        default_n, default_samples = 10**4, 10
    else:
        raise InvalidSpec("unknown figure preset: %r" % name)
    return ExperimentConfig(
        experiment=name,
        points=_points(entries),
        n=n if n is not None else default_n,
        samples=samples if samples is not None else default_samples,
        base_seed=base_seed,
        out=out,
    )


FIGURE_PRESETS = (
    "fig2_eigvec_dist",
    "fig3_regular_lambda2",
    "fig5_regular_overlap",
    "fig6_bimodal_L",
    "fig8_bimodal_ncut",
    "fig9_phase_diagram",
    "fig10_sbm",
    "custom",
)
