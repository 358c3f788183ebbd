"""Command-line interface: configuration-driven dimension solvers, cloud
samplers, covering constructions, and the inequality verdicts, all emitting
a deterministic ``report.json`` plus optional CSV series.

Exit codes: 0 success, 2 pass with warnings (wide brackets or probe-only
suprema), 3 an inequality verdict failed beyond tolerance, 4 configuration
error.
"""

import argparse
import json
import math
import os
import sys as _sys

import numpy as np

from .config import (
    build_measure,
    build_system,
    geometric_grid,
    load_config,
    potential_values,
)
from .ergodic import (
    entropy,
    local_dims,
    lyapunov_dimension,
    lyapunov_exponents,
    ShiftMeasure,
)
from .errors import ConfigError, IfsdimError
from .geometry import box_dimension, cover_word
from .pressure import pressure, solve_dim_s, solve_tn, theta_series, theta_slope
from .systems import chaos_game, save_points_csv

EXIT_OK = 0
EXIT_WARN = 2
EXIT_FAIL = 3
EXIT_CONFIG = 4


def _py(obj):
    """Convert numpy scalars/arrays to plain Python for stable JSON."""
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [
                f"{v:.17g}" if isinstance(v, float) else str(v) for v in row
            ]
            fh.write(",".join(cells) + "\n")


def _delta_grid(cfg, sys_obj):
    diam = sys_obj.domain.diameter
    return geometric_grid(
        cfg["solver"]["delta_grid"], diam / 4.0, 2.0 ** -0.5, 13, "solver.delta_grid"
    )


def _r_grid(cfg, sys_obj):
    diam = sys_obj.domain.diameter
    return geometric_grid(
        cfg["solver"]["r_grid"], diam / 8.0, 0.5, 8, "solver.r_grid"
    )


def _sample_cloud(sys_obj, measure, n_points, cfg, prefix=()):
    solver = cfg["solver"]
    return chaos_game(
        sys_obj,
        measure,
        n_points,
        solver["burn_in"],
        solver["seed"],
        prefix=tuple(prefix),
    )


def _solve_dim(cfg, sys_obj):
    solver = cfg["solver"]
    return solve_dim_s(
        sys_obj.subshift,
        sys_obj,
        tol_s=solver["tol_s"],
        n_list=solver["n_list"],
        probes=solver["probes"],
        seed=solver["seed"],
        budget=solver["budget"],
    )


def _dim_l(cfg, sys_obj, measure):
    solver = cfg["solver"]
    spec = lyapunov_exponents(
        sys_obj,
        measure,
        n_orbit=solver["n_orbit"],
        n_samples=solver["n_samples"],
        seed=solver["seed"],
    )
    h = entropy(measure)
    return h, spec, lyapunov_dimension(h, spec.lam)


# ---------------------------------------------------------------------------
# subcommands

def cmd_dim_s(cfg, sys_obj, args, outdir):
    res = _solve_dim(cfg, sys_obj)
    warnings = []
    if not sys_obj.is_affine:
        warnings.append("cylinder suprema are probe-approximated; brackets are empirical")
    if args.series:
        est = pressure(
            sys_obj.subshift,
            sys_obj,
            res.s_star,
            n_list=cfg["solver"]["n_list"],
            probes=cfg["solver"]["probes"],
            seed=cfg["solver"]["seed"],
            budget=cfg["solver"]["budget"],
        )
        _write_csv(
            os.path.join(outdir, "pressure_series.csv"),
            ["n", "word_count", "Pn", "elapsed_ms"],
            [
                (n, c, float(p), float(ms))
                for n, c, p, ms in zip(est.n_list, est.word_counts, est.Pn, est.elapsed_ms)
            ],
        )
    results = {
        "dim_s": res.s_star,
        "pressure_at_root": res.pressure_at_root,
        "iterations": res.iterations,
        "s_bracket": list(res.s_bracket),
        "n_used": res.n_used,
        "s_conservative": res.s_conservative,
        "degenerate": res.degenerate,
        "sup_exact": sys_obj.is_affine,
    }
    return results, [], warnings


def cmd_dim_l(cfg, sys_obj, args, outdir):
    measure = build_measure(cfg, sys_obj.subshift)
    h, spec, dim_l = _dim_l(cfg, sys_obj, measure)
    results = {
        "entropy": h,
        "lyapunov_exponents": spec.lam,
        "ci_half_width": spec.ci_half_width,
        "n_orbit": spec.n_orbit,
        "n_samples": spec.n_samples,
        "dim_l": dim_l,
    }
    return results, [], []


def cmd_box_dim(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    cloud, err = _sample_cloud(
        sys_obj, ShiftMeasure.uniform(sys_obj.subshift), solver["n_points"], cfg
    )
    series = box_dimension(
        cloud,
        _delta_grid(cfg, sys_obj),
        origin=sys_obj.domain.lo,
        resolution=err,
        threads=args.threads,
    )
    if args.series:
        _write_csv(
            os.path.join(outdir, "box_series.csv"),
            ["delta", "N"],
            [(float(d), int(n)) for d, n in series.entries],
        )
    if solver["save_points"]:
        save_points_csv(os.path.join(outdir, "points.csv"), cloud)
    results = {
        "box_dim": series.slope,
        "residual": series.residual,
        "fit_window": list(series.fit_window),
        "entries": [[float(d), int(n)] for d, n in series.entries],
        "n_points": solver["n_points"],
        "cloud_error_bound": err,
    }
    return results, [], []


def cmd_pack_dim(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    measure = build_measure(cfg, sys_obj.subshift)
    cloud, err = _sample_cloud(sys_obj, measure, solver["pack_points"], cfg)
    dims = local_dims(
        cloud,
        _r_grid(cfg, sys_obj),
        q=solver["quantile"],
        n_probes=solver["pack_probes"],
        resolution=err,
        seed=solver["seed"],
    )
    if args.series:
        _write_csv(
            os.path.join(outdir, "local_dims.csv"),
            ["point_index", "slope", "fit_r_min", "fit_r_max"],
            [
                (int(i), float(s), dims.fit_r_min, dims.fit_r_max)
                for i, s in zip(dims.probe_indices, dims.slopes)
            ],
        )
    results = {
        "pack_dim": dims.estimate,
        "quantile": dims.quantile,
        "fit_r": [dims.fit_r_min, dims.fit_r_max],
        "n_probes": int(dims.probe_indices.size),
        "n_points": solver["pack_points"],
        "cloud_error_bound": err,
    }
    return results, [], []


def cmd_tn_bound(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    tn_cfg = solver["tn"] or {}
    n_list = tn_cfg.get("n_list") or [5, 10, 20, 40]
    k_list = tn_cfg.get("k_list")
    if k_list is None:
        k_list = list(range(sys_obj.d))
    table = []
    for n in n_list:
        for k in k_list:
            t = solve_tn(
                sys_obj.subshift,
                sys_obj,
                int(n),
                int(k),
                probes=solver["probes"],
                seed=solver["seed"],
                budget=solver["budget"],
            )
            table.append({"n": int(n), "k": int(k), "t": t})
    min_per_n = {}
    for row in table:
        key = str(row["n"])
        if key not in min_per_n or row["t"] < min_per_n[key]:
            min_per_n[key] = row["t"]
    if args.series:
        _write_csv(
            os.path.join(outdir, "tn_table.csv"),
            ["n", "k", "t"],
            [(r["n"], r["k"], float(r["t"])) for r in table],
        )
    results = {
        "table": table,
        "min_per_n": min_per_n,
        "overall_min": min(r["t"] for r in table),
    }
    return results, [], []


def cmd_theta_slope(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    theta_cfg = solver["theta"]
    if not theta_cfg:
        raise ConfigError("solver.theta: required for the theta-slope subcommand")
    ell = sys_obj.subshift.ell
    g = potential_values(theta_cfg.get("g", 0.0), ell, "solver.theta.g")
    h = potential_values(theta_cfg.get("h"), ell, "solver.theta.h")
    r_grid = geometric_grid(
        theta_cfg.get("r_grid"), 2.0 ** -5, 0.5, 14, "solver.theta.r_grid"
    )
    t = theta_slope(sys_obj.subshift, g, h, r_grid)
    logs = theta_series(sys_obj.subshift, g, h, np.sort(r_grid)[::-1])
    if args.series:
        _write_csv(
            os.path.join(outdir, "theta_series.csv"),
            ["r", "log_theta"],
            [(float(r), float(v)) for r, v in zip(np.sort(r_grid)[::-1], logs)],
        )
    results = {
        "t": t,
        "r_grid": np.sort(r_grid)[::-1],
        "log_theta": logs,
        "dropped_largest": 2,
    }
    return results, [], []


def cmd_pressure_curve(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    grid = solver["s_grid"]
    s_values = np.linspace(
        float(grid["lo"]), float(grid["hi"]), int(grid["count"])
    )
    values, uppers = [], []
    for s in s_values:
        est = pressure(
            sys_obj.subshift,
            sys_obj,
            float(s),
            n_list=solver["n_list"],
            probes=solver["probes"],
            seed=solver["seed"],
            budget=solver["budget"],
        )
        values.append(est.value)
        uppers.append(est.upper)
    if args.series:
        _write_csv(
            os.path.join(outdir, "pressure_curve.csv"),
            ["s", "pressure", "upper"],
            list(zip(map(float, s_values), map(float, values), map(float, uppers))),
        )
    results = {"s_grid": s_values, "pressure": values, "upper": uppers}
    return results, [], []


def cmd_cover(cfg, sys_obj, args, outdir):
    cover_cfg = cfg["solver"]["cover"]
    if not cover_cfg:
        raise ConfigError("solver.cover: required for the cover subcommand")
    word = tuple(int(s) for s in cover_cfg.get("word", ()))
    k = int(cover_cfg.get("k", 0))
    cover = cover_word(sys_obj, word, k, r0=cover_cfg.get("r0"))
    _write_csv(
        os.path.join(outdir, "cover.csv"),
        [f"c{i}" for i in range(sys_obj.d)] + ["radius"],
        [tuple(map(float, c)) + (cover.radius,) for c in cover.centers],
    )
    results = {
        "word": list(word),
        "k": k,
        "count": len(cover),
        "radius": cover.radius,
        "certified_count_bound": cover.certified_count_bound,
        "log_count_bound": cover.log_count_bound,
        "base_count": cover.base_count,
        "base_radius": cover.base_radius,
    }
    return results, [], []


def cmd_verify(cfg, sys_obj, args, outdir):
    solver = cfg["solver"]
    tol = float(solver["verify_tol"])
    overrides = cfg.get("overrides") or {}
    warnings = []
    verdicts = []

    dim_res = _solve_dim(cfg, sys_obj)
    dim_s = float(overrides.get("dim_s", dim_res.s_star))
    if "dim_s" in overrides:
        warnings.append("dim_s overridden by configuration; verdicts use the override")
    if not sys_obj.is_affine:
        warnings.append("cylinder suprema are probe-approximated; brackets are empirical")

    cloud, err = _sample_cloud(
        sys_obj, ShiftMeasure.uniform(sys_obj.subshift), solver["n_points"], cfg
    )
    box = box_dimension(
        cloud,
        _delta_grid(cfg, sys_obj),
        origin=sys_obj.domain.lo,
        resolution=err,
        threads=args.threads,
    )
    verdicts.append(
        {
            "check": "box-dimension-vs-singularity-dimension",
            "lhs": box.slope,
            "rhs": dim_s + tol,
            "slack": dim_s + tol - box.slope,
            "tolerance": tol,
            "verdict": "PASS" if box.slope <= dim_s + tol else "FAIL",
        }
    )

    measure = build_measure(cfg, sys_obj.subshift)
    h, spec, dim_l = _dim_l(cfg, sys_obj, measure)
    dim_l_used = float(overrides.get("dim_l", dim_l))
    if "dim_l" in overrides:
        warnings.append("dim_l overridden by configuration; verdicts use the override")
    pack_cloud, pack_err = _sample_cloud(sys_obj, measure, solver["pack_points"], cfg)
    dims = local_dims(
        pack_cloud,
        _r_grid(cfg, sys_obj),
        q=solver["quantile"],
        n_probes=solver["pack_probes"],
        resolution=pack_err,
        seed=solver["seed"],
    )
    verdicts.append(
        {
            "check": "packing-dimension-vs-lyapunov-dimension",
            "lhs": dims.estimate,
            "rhs": dim_l_used + tol,
            "slack": dim_l_used + tol - dims.estimate,
            "tolerance": tol,
            "verdict": "PASS" if dims.estimate <= dim_l_used + tol else "FAIL",
        }
    )

    if spec.ci_half_width.max() > 0.05:
        warnings.append("Lyapunov exponent confidence intervals are wide")

    results = {
        "dim_s": dim_res.s_star,
        "dim_s_used": dim_s,
        "s_conservative": dim_res.s_conservative,
        "box_dim": box.slope,
        "entropy": h,
        "lyapunov_exponents": spec.lam,
        "dim_l": dim_l,
        "dim_l_used": dim_l_used,
        "pack_dim": dims.estimate,
        "tolerance": tol,
        "system_kind": sys_obj.kind,
    }
    return results, verdicts, warnings


_COMMANDS = {
    "dim-s": cmd_dim_s,
    "dim-l": cmd_dim_l,
    "box-dim": cmd_box_dim,
    "pack-dim": cmd_pack_dim,
    "tn-bound": cmd_tn_bound,
    "theta-slope": cmd_theta_slope,
    "pressure-curve": cmd_pressure_curve,
    "cover": cmd_cover,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ifsdim",
        description="Dimension estimates for contracting IFS attractors and expanding repellers",
    )
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory for report.json and CSV series")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for point-partitioned reductions")
    parser.add_argument("--series", action="store_true", help="also write CSV series")
    parser.add_argument("--seed", type=int, default=None, help="override solver.seed")
    parser.add_argument("--tol-s", type=float, default=None, help="override solver.tol_s")
    parser.add_argument("--budget", type=int, default=None, help="override solver.budget")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["solver"]["seed"] = args.seed
        if args.tol_s is not None:
            cfg["solver"]["tol_s"] = args.tol_s
        if args.budget is not None:
            cfg["solver"]["budget"] = args.budget
        sys_obj = build_system(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    try:
        results, verdicts, warnings = _COMMANDS[args.subcommand](cfg, sys_obj, args, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except IfsdimError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG

    report = {
        "schema_version": 1,
        "subcommand": args.subcommand,
        "results": _py(results),
        "verdicts": _py(verdicts),
        "warnings": list(warnings),
    }
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    failed = [v for v in verdicts if v["verdict"] == "FAIL"]
    for v in verdicts:
        print(
            f"{v['verdict']}: {v['check']} (lhs={v['lhs']:.6g}, rhs={v['rhs']:.6g})"
        )
    for w in warnings:
        print(f"warning: {w}")
    print(f"report written to {report_path}")
    if failed:
        return EXIT_FAIL
    if warnings:
        return EXIT_WARN
    return EXIT_OK


if __name__ == "__main__":
    _sys.exit(main())
