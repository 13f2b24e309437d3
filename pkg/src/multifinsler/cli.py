"""Command-line interface: validate, check, measure, geodesic, sample.

Reports are byte-stable for a fixed config and seed: keys are sorted and
floating-point values are printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, SpaceConfig, load_config
from .dim2 import invariant_I, invariants_JK
from .finsler import TangentSample, finsler_state
from .geodesic import integrate_geodesic, path_action, path_to_csv
from .measure import busemann_hausdorff, holmes_thompson
from .suites import run_suite


def _fmt_float(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        return '"non-finite"'
    s = format(v, ".17g")
    # keep the token a valid JSON number
    return s if any(c in s for c in ".eE") else s + ".0"


def dumps_stable(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad_in}"{k}": {dumps_stable(obj[k], indent + 1)}' for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad_in}{dumps_stable(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, np.floating):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    s = str(obj)
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit(obj, fmt: str, dest) -> None:
    """Write a report (json) or a row table (csv) to dest ('-' for stdout)."""
    if fmt == "json":
        text = dumps_stable(obj) + "\n"
        if dest in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(dest).write_text(text)
        return
    if fmt == "csv":
        header, rows = obj
        out = sys.stdout if dest in (None, "-") else open(dest, "w", newline="")
        try:
            writer = csv.writer(out)
            writer.writerow(header)
            for row in rows:
                writer.writerow([
                    format(v, ".17g") if isinstance(v, float) else v for v in row
                ])
        finally:
            if out is not sys.stdout:
                out.close()
        return
    raise ValueError(f"unknown format '{fmt}'")


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    emit({"valid": True, "config": cfg.to_dict()}, "json", args.out)
    return 0


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = run_suite(cfg, args.suite, tol_scale=args.tol_scale, seed=args.seed)
    emit(report, "json", args.out)
    return 0 if report["passed"] else 1


def _cmd_measure(args) -> int:
    cfg = load_config(args.config)
    space = cfg.build_space()
    x = cfg.box_center() if args.at is None else np.array([float(v) for v in args.at.split(",")])
    ht_closed = holmes_thompson(space, x, "closed")
    ht_disc = holmes_thompson(space, x, "disc_oracle")
    bh = busemann_hausdorff(space, x, "auto")
    report = {
        "point": [float(v) for v in x],
        "holmes_thompson": {
            "value": ht_closed.value,
            "diagonal_terms": list(ht_closed.diagonal_terms),
            "cross_terms": list(ht_closed.cross_terms),
            "disc_oracle": ht_disc.value,
            "abs_deviation": abs(ht_closed.value - ht_disc.value),
            "rel_deviation": abs(ht_closed.value - ht_disc.value) / abs(ht_closed.value),
        },
        "busemann_hausdorff": {
            "value": bh.value,
            "method": bh.method,
            "fallback": bh.fallback,
            "parts": bh.parts,
        },
    }
    emit(report, "json", args.out)
    return 0


def _cmd_geodesic(args) -> int:
    cfg = load_config(args.config)
    space = cfg.build_space()
    x0 = cfg.box_center() if args.x0 is None else np.array([float(v) for v in args.x0.split(",")])
    if args.y0 is None:
        y0 = np.zeros(cfg.dimension)
        y0[0] = 1.0
    else:
        y0 = np.array([float(v) for v in args.y0.split(",")])
    path = integrate_geodesic(space, x0, y0, args.t_end, args.step)
    if args.format == "csv":
        if args.out in (None, "-"):
            rows = [[path.t[k], *path.x[k], *path.y[k], path.F[k]] for k in range(len(path.t))]
            header = ["t", *[f"x{i+1}" for i in range(cfg.dimension)],
                      *[f"y{i+1}" for i in range(cfg.dimension)], "F"]
            emit((header, [[float(v) for v in r] for r in rows]), "csv", args.out)
        else:
            path_to_csv(path, args.out, cfg.coordinates)
    else:
        act = path_action(space, path)
        emit({
            "t_end": args.t_end, "step": path.step,
            "start": {"x": list(map(float, path.x[0])), "y": list(map(float, path.y[0]))},
            "end": {"x": list(map(float, path.x[-1])), "y": list(map(float, path.y[-1]))},
            "norm_initial": float(path.F[0]),
            "norm_drift": float(np.max(np.abs(path.F - path.F[0]))),
            "action": act.total,
            "action_per_sector": [float(v) for v in act.sector_totals],
        }, "json", args.out)
    return 0


def _cmd_sample(args) -> int:
    cfg = load_config(args.config)
    space = cfg.build_space()
    lo = np.array([b[0] for b in cfg.sampling.box])
    hi = np.array([b[1] for b in cfg.sampling.box])
    grid = [np.linspace(lo[i], hi[i], args.grid) for i in range(cfg.dimension)]
    thetas = np.linspace(0.0, 2.0 * math.pi, args.directions, endpoint=False)

    is2d = cfg.dimension == 2
    header = [*cfg.coordinates, "theta", "F", "det_g"] + (["I", "J", "K"] if is2d else [])
    rows = []
    mesh = np.meshgrid(*grid, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    for x in points:
        for th in thetas:
            y = np.zeros(cfg.dimension)
            y[0], y[1 % cfg.dimension] = math.cos(th), math.sin(th)
            st = finsler_state(space, TangentSample(x, y))
            row = [*map(float, x), float(th), st.F, st.det_g]
            if is2d:
                s = TangentSample(x, y)
                j_val, k_val = invariants_JK(space, s)
                row += [invariant_I(space, s, "compact"), j_val, k_val]
            rows.append(row)
    emit((header, rows), "csv", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="multifinsler",
        description="Multimetric Finsler geometry: identity checks, measures, geodesics.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON space configuration")
        sp.add_argument("--out", default=None, help="output path ('-' for stdout)")

    v = sub.add_parser("validate", help="validate a configuration file")
    common(v)
    v.set_defaults(func=_cmd_validate)

    c = sub.add_parser("check", help="run a verification suite")
    common(c)
    c.add_argument("--suite", default="all", choices=["identities", "measures", "geodesics", "all"])
    c.add_argument("--seed", type=int, default=None, help="override the config seed")
    c.add_argument("--tol-scale", type=float, default=1.0, help="scale all tolerances")
    c.set_defaults(func=_cmd_check)

    m = sub.add_parser("measure", help="measure densities at a point")
    common(m)
    m.add_argument("--at", default=None, help="evaluation point, comma-separated")
    m.set_defaults(func=_cmd_measure)

    g = sub.add_parser("geodesic", help="integrate a geodesic")
    common(g)
    g.add_argument("--x0", default=None, help="start point, comma-separated")
    g.add_argument("--y0", default=None, help="start velocity, comma-separated")
    g.add_argument("--t-end", type=float, default=1.0)
    g.add_argument("--step", type=float, default=1e-3)
    g.add_argument("--format", default="csv", choices=["csv", "json"])
    g.set_defaults(func=_cmd_geodesic)

    s = sub.add_parser("sample", help="grid evaluation of norm and invariants")
    common(s)
    s.add_argument("--grid", type=int, default=8, help="grid points per axis")
    s.add_argument("--directions", type=int, default=16, help="fiber directions per point")
    s.set_defaults(func=_cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # infrastructure fault: diagnostics, nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
