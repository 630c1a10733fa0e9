"""Command-line front end.

Subcommands cover the whole pipeline: graph generation, direct
eigensolves, population dynamics, closed-form curves, localization
analysis, figure-style experiment sweeps, and the phase-diagram table.
Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .ema import (
    detectability_threshold,
    ncut_ema,
    ratiocut_ema,
    regular_solution,
)
from .eigen import ipr, overlap, second_smallest_eigenpair
from .errors import InvalidGrid, InvalidSpec, SpecDetectError
from .experiments import (
    FIGURE_PRESETS,
    ExperimentConfig,
    emit_phase_diagram,
    figure_preset,
    run_experiment,
)
from .graphs import (
    Bimodal,
    BlockParams,
    Poisson,
    Regular,
    sample_graph,
    save_edge_list,
    save_labels,
)
from .localization import (
    DefectTree,
    Ema,
    Kind,
    Uniform,
    localization_compare,
    localized_mode_ema,
    localized_mode_uniform,
)
from .operators import LaplacianKind, build_laplacian, zero_mode
from .replica import (
    Model,
    PdConfig,
    element_distribution,
    run_population_dynamics,
)

__all__ = ["main", "parse_spec", "parse_config_file"]


def parse_spec(text: str):
    """Degree spec from its compact form: regular:3, bimodal:3,9,0.1,
    poisson:6."""
    try:
        kind, _, rest = text.partition(":")
        if kind == "regular":
            return Regular(int(rest))
        if kind == "bimodal":
            c1, c2, b1 = rest.split(",")
            return Bimodal(int(c1), int(c2), float(b1))
        if kind == "poisson":
            return Poisson(float(rest))
    except (ValueError, TypeError) as exc:
        raise InvalidSpec("cannot parse degree spec %r: %s" % (text, exc))
    raise InvalidSpec("unknown degree spec kind in %r" % text)


def parse_config_file(path: str) -> dict:
    """Flat key=value config format; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidSpec("%s:%d: expected key=value" % (path, lineno))
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _parse_grid(text: str):
    """Either start:stop:count or a comma-separated list."""
    if ":" in text:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    return np.array([float(v) for v in text.split(",")])


def _lap_kind(text: str) -> LaplacianKind:
    if text == "L":
        return LaplacianKind.UNNORMALIZED
    if text == "ncut":
        return LaplacianKind.NORMALIZED
    raise InvalidSpec("laplacian must be 'L' or 'ncut', got %r" % text)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return "NA"
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_generate(args) -> int:
    spec = parse_spec(args.spec)
    params = BlockParams(n=args.n, p1=args.p1, gamma=args.gamma)
    graph = sample_graph(spec, params, args.seed)
    save_edge_list(graph, args.out, p1=args.p1, gamma=args.gamma, seed=args.seed)
    save_labels(graph, args.out + ".labels")
    return 0


def _cmd_spectrum(args) -> int:
    spec = parse_spec(args.spec)
    kind = _lap_kind(args.laplacian)
    params = BlockParams(n=args.n, p1=args.p1, gamma=args.gamma)
    graph = sample_graph(spec, params, args.seed)
    lap = build_laplacian(graph, kind)
    res = second_smallest_eigenpair(lap, zero_mode(graph, kind), seed=args.seed)
    lines = [
        "lambda2,ipr,overlap,iterations,residual",
        ",".join(
            _fmt(v)
            for v in (
                res.lambda2,
                ipr(res.vector),
                overlap(res.vector, graph.labels),
                res.iterations,
                res.residual,
            )
        ),
    ]
    _emit(lines, args.out)
    return 0


def _cmd_pd(args) -> int:
    cfg = PdConfig(
        model=Model(args.model),
        spec=parse_spec(args.spec),
        p1=args.p1,
        gamma=args.gamma,
        seed=args.seed,
        population_size=args.population,
        equilibration_sweeps=args.equilibration,
        measurement_sweeps=args.measurement,
        phi_bisection_tolerance=args.tol,
    )
    res = run_population_dynamics(cfg)
    dist = element_distribution(res, bins=args.bins)
    lines = [
        "phi,psi,lambda2,fraction_correct,residual_orthogonality,"
        "residual_normalization",
        ",".join(
            _fmt(v)
            for v in (
                res.phi,
                res.psi,
                res.lambda2,
                res.fraction_correct,
                res.residual_orthogonality,
                res.residual_normalization,
            )
        ),
        "module,bin_center,density",
    ]
    for module in (1, 2):
        centers, dens = dist["module_%d" % module]
        for c, d in zip(centers, dens):
            lines.append("%d,%s,%s" % (module, _fmt(c), _fmt(d)))
    _emit(lines, args.out)
    return 0


def _cmd_ema(args) -> int:
    spec = parse_spec(args.spec)
    if args.model == "ncut":
        sol = ncut_ema(spec, args.p1, args.gamma)
        thr = detectability_threshold("ncut", _mean(spec), args.p1)
    elif isinstance(spec, Regular):
        sol = regular_solution(spec.c, args.p1, args.gamma)
        thr = detectability_threshold("regular_L", spec.c, args.p1)
    else:
        sol, _ = ratiocut_ema(spec, args.p1, args.gamma)
        thr = None
    lines = ["lambda2,detectable,m11_sq,gamma_c,delta_c,ultimate_delta"]
    lines.append(
        ",".join(
            _fmt(v)
            for v in (
                sol.lambda2,
                sol.detectable,
                sol.m11_sq,
                thr.gamma_c if thr else None,
                thr.delta_c if thr else None,
                thr.ultimate_delta if thr else None,
            )
        )
    )
    _emit(lines, args.out)
    return 0


def _mean(spec):
    from .graphs import mean_degree

    return mean_degree(spec)


def _cmd_localize(args) -> int:
    kind = Kind.L if args.kind == "L" else Kind.NCUT
    if args.background.startswith("uniform:"):
        background = Uniform(int(args.background.split(":", 1)[1]))
        solver = localized_mode_uniform
    elif args.background == "ema":
        background = Ema(parse_spec(args.spec), args.p1, args.gamma)
        solver = localized_mode_ema
    else:
        raise InvalidSpec("background must be 'uniform:<c_B>' or 'ema'")
    gs = [args.g] if args.g is not None else [0, 1, 2, 3]
    lines = ["kind,c_D,background,g,lambda,kappa,finite_norm,winner"]
    best = None
    for g in gs:
        mode = solver(kind, DefectTree(args.c_d, g, background))
        if mode is not None and (best is None or mode.lam < best.lam):
            best = mode
        winner = None
        if args.community_lambda2 is not None:
            winner = localization_compare(args.community_lambda2, mode)["winner"]
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    args.kind,
                    args.c_d,
                    args.background,
                    g,
                    mode.lam if mode else None,
                    mode.kappa if mode else None,
                    mode.finite_norm if mode else None,
                    winner,
                )
            )
        )
    if args.community_lambda2 is not None:
        verdict = localization_compare(args.community_lambda2, best)
        lines.append(
            "min,%s,%s,%s,%s,%s,%s,%s"
            % (
                args.c_d,
                args.background,
                "0-3" if args.g is None else args.g,
                _fmt(best.lam if best else None),
                _fmt(best.kappa if best else None),
                _fmt(best.finite_norm if best else None),
                verdict["winner"],
            )
        )
    _emit(lines, args.out)
    return 0


def _custom_experiment(cfg_map: dict, args) -> ExperimentConfig:
    spec = parse_spec(cfg_map["spec"])
    p1 = float(cfg_map.get("p1", 0.5))
    lap = _lap_kind(cfg_map.get("laplacian", "L"))
    grid_key = "gamma_grid" if "gamma_grid" in cfg_map else "gammas"
    if grid_key not in cfg_map:
        raise InvalidSpec("custom experiment needs gamma_grid or gammas")
    gammas = _parse_grid(cfg_map[grid_key])
    if gammas.size == 0 or np.any(np.diff(gammas) < 0):
        raise InvalidSpec("gamma grid must be nonempty and sorted")
    points = [
        {"spec": spec, "p1": p1, "gamma": float(g), "laplacian": lap, "delta": None}
        for g in gammas
    ]
    return ExperimentConfig(
        experiment="custom",
        points=points,
        n=args.n or int(cfg_map.get("n", 10**4)),
        samples=args.samples or int(cfg_map.get("samples", 10)),
        base_seed=args.seed if args.seed is not None else int(cfg_map.get("seed", 0)),
        out=args.out or cfg_map.get("out"),
    )


def _cmd_experiment(args) -> int:
    cfg_map = parse_config_file(args.config) if args.config else {}
    name = args.experiment or cfg_map.get("experiment")
    if name is None:
        raise InvalidSpec("an experiment name is required (flag or config)")
    if name not in FIGURE_PRESETS:
        raise InvalidSpec(
            "unknown experiment %r; choose from %s" % (name, ", ".join(FIGURE_PRESETS))
        )
    if name == "fig9_phase_diagram":
        grid = _parse_grid(cfg_map.get("cbar_grid", "2:20:37"))
        rows = emit_phase_diagram(grid, out=args.out or cfg_map.get("out"))
        if not (args.out or cfg_map.get("out")):
            _print_phase(rows)
        return 0
    if name == "custom":
        config = _custom_experiment(cfg_map, args)
    else:
        config = figure_preset(
            name,
            n=args.n or (int(cfg_map["n"]) if "n" in cfg_map else None),
            samples=args.samples
            or (int(cfg_map["samples"]) if "samples" in cfg_map else None),
            base_seed=(
                args.seed
                if args.seed is not None
                else int(cfg_map.get("seed", 0))
            ),
            out=args.out or cfg_map.get("out"),
        )
    records, summary = run_experiment(config)
    if not config.out:
        from .experiments import COLUMNS, _fmt as _fmt_cell

        sys.stdout.write(",".join(COLUMNS) + "\n")
        for rec in records:
            sys.stdout.write(
                ",".join(_fmt_cell(rec.get(col)) for col in COLUMNS) + "\n"
            )
    for row in summary:
        sys.stderr.write(
            "point %d gamma %s lambda2 %s +- %s (%d samples)\n"
            % (
                row["point"],
                _fmt(row["gamma"]),
                _fmt(row["mean_lambda2"]),
                _fmt(row["stderr_lambda2"]),
                row["count"],
            )
        )
    return 0


def _print_phase(rows):
    sys.stdout.write("cbar,delta_ema,delta_ultimate,delta_max\n")
    for r in rows:
        sys.stdout.write(
            ",".join(
                _fmt(r[k]) for k in ("cbar", "delta_ema", "delta_ultimate", "delta_max")
            )
            + "\n"
        )


def _cmd_phase_diagram(args) -> int:
    grid = _parse_grid(args.grid)
    rows = emit_phase_diagram(grid, out=args.out)
    if not args.out:
        _print_phase(rows)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specdetect",
        description="Spectral detectability laboratory for two-block random graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0):
        p.add_argument("--spec", required=True, help="regular:C | bimodal:C1,C2,B1 | poisson:CBAR")
        p.add_argument("--p1", type=float, default=0.5)
        p.add_argument("--gamma", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", default=None)

    p = sub.add_parser("generate", help="sample a graph, write edge list and labels")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("spectrum", help="second eigenpair of a sampled graph")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--laplacian", choices=("L", "ncut"), default="L")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("pd", help="population-dynamics saddle-point solve")
    common(p)
    p.add_argument(
        "--model",
        choices=tuple(m.value for m in Model),
        default="regular_L",
    )
    p.add_argument("--population", type=int, default=10**5)
    p.add_argument("--equilibration", type=int, default=200)
    p.add_argument("--measurement", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--bins", type=int, default=101)
    p.set_defaults(func=_cmd_pd)

    p = sub.add_parser("ema", help="closed-form effective-medium curves")
    common(p)
    p.add_argument("--model", choices=("L", "ncut"), default="L")
    p.set_defaults(func=_cmd_ema)

    p = sub.add_parser("localize", help="defect-tree localized modes")
    p.add_argument("--kind", choices=("L", "ncut"), default="L")
    p.add_argument("--c-d", dest="c_d", type=int, required=True)
    p.add_argument("--g", type=int, default=None, help="shell radius; default sweeps 0..3")
    p.add_argument("--background", required=True, help="uniform:<c_B> | ema")
    p.add_argument("--spec", default=None)
    p.add_argument("--p1", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--community-lambda2", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("experiment", help="figure-style grid sweep to CSV")
    p.add_argument("--experiment", default=None, choices=FIGURE_PRESETS)
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("phase-diagram", help="threshold curves vs mean degree")
    p.add_argument("--grid", default="2:20:37", help="start:stop:count or comma list")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase_diagram)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (InvalidSpec, InvalidGrid, FileNotFoundError, ValueError, KeyError) as exc:
        sys.stderr.write("configuration error: %s\n" % exc)
        return 1
    except (SpecDetectError, OSError) as exc:
        sys.stderr.write("runtime error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
