"""Command line entry point: `horolab <subcommand> [options]`.

Exit codes: 0 ok, 1 property failure, 2 configuration error, 3 numeric
non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import automorphic, groups, horosphere, sums, verify
from .config import ConfigError, ExperimentConfig, config_dict, load
from .mobius import UpperHalfPoint

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (horosphere.QuadratureError, automorphic.TailBoundError, automorphic.ExtractionError,
                  sums.QuadratureError, sums.DecayError, groups.ReductionError, groups.SaturationError)


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def _group(selector: str) -> groups.GroupSpec:
    if selector in ("psl2z", "picard"):
        return groups.get_group(selector)
    if os.path.exists(selector):
        return groups.load_group(selector)
    raise ConfigError(f"unknown group {selector!r} (builtin name or path)")


def _config(args) -> ExperimentConfig:
    cfg = load(args.config) if getattr(args, "config", None) else ExperimentConfig().validate()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _out_dir(cfg: ExperimentConfig, args) -> str:
    d = args.out or cfg.output_dir()
    os.makedirs(d, exist_ok=True)
    return d


def build_test_function(G: groups.GroupSpec, cfg: ExperimentConfig) -> horosphere.TestFunction:
    if cfg.tf_kind == "constant":
        return horosphere.constant_function(G)
    if cfg.tf_kind == "pointpair":
        if len(cfg.tf_center) != G.n + 1:
            raise ConfigError(f"center needs {G.n + 1} coordinates for {G.name}")
        Q0 = UpperHalfPoint(np.array(cfg.tf_center[:-1]), cfg.tf_center[-1])
        return horosphere.build_pointpair_test_function(G, Q0, cfg.tf_radius)
    if G.n != 1:
        raise ConfigError("eisenstein test functions are available for n = 1")
    ex = automorphic.eisenstein_expansion_n1(0.5 + 1j * cfg.tf_T, 80)
    return horosphere.eigen_test_function(G, ex)


# -- svg -------------------------------------------------------------------------


def loglog_svg(xs, ys, fit: tuple[float, float] | None, title: str) -> str:
    W, H, pad = 480, 360, 50
    pts = [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        pts = [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1, y1 = (x1 if x1 > x0 else x0 + 1), (y1 if y1 > y0 else y0 + 1)

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (W - 2 * pad)

    def sy(v):
        return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
             f'<text x="{W / 2:.0f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
             f'<text x="{W / 2:.0f}" y="{H - 12}" text-anchor="middle" font-size="11">log10 y</text>',
             f'<text x="14" y="{H / 2:.0f}" font-size="11" transform="rotate(-90 14 {H / 2:.0f})">log10 error</text>']
    for v in (x0, x1):
        parts.append(f'<text x="{sx(v):.1f}" y="{H - pad + 15}" text-anchor="middle" font-size="10">{v:.2f}</text>')
    for v in (y0, y1):
        parts.append(f'<text x="{pad - 5}" y="{sy(v):.1f}" text-anchor="end" font-size="10">{v:.2f}</text>')
    for px, py in pts:
        parts.append(f'<circle cx="{sx(px):.1f}" cy="{sy(py):.1f}" r="3" fill="steelblue"/>')
    if fit is not None and all(math.isfinite(t) for t in fit) and fit[1] > 0:
        rho, C = fit
        ly = [math.log10(C) + rho * v for v in (x0, x1)]
        parts.append(f'<line x1="{sx(x0):.1f}" y1="{sy(ly[0]):.1f}" x2="{sx(x1):.1f}" y2="{sy(ly[1]):.1f}" '
                     f'stroke="firebrick" stroke-dasharray="4 3"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- subcommands -----------------------------------------------------------------


def cmd_verify(args, out) -> int:
    try:
        results = verify.run(args.scope, seed=args.seed or 0)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    failed = [r for r in results if not r.ok]
    for r in results:
        out(f"{'PASS' if r.ok else 'FAIL'}  {r.module:12s} {r.name}: {r.detail}")
    out(f"{len(results) - len(failed)}/{len(results)} properties passed")
    report = {"scope": args.scope, "seed": args.seed or 0, "total": len(results), "failed": len(failed),
              "properties": [{"module": r.module, "name": r.name, "ok": r.ok, "detail": r.detail} for r in results]}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verify.json"), "w") as fh:
            json.dump(report, fh, indent=2)
    if args.json:
        print(json.dumps(report, indent=2))
    return EXIT_PROPERTY if failed else EXIT_OK


def cmd_horosphere(args, out) -> int:
    cfg = _config(args)
    G = _group(cfg.group)
    if len(cfg.gamma) != G.n:
        raise ConfigError(f"gamma needs {G.n} entries")
    f = build_test_function(G, cfg)
    res = horosphere.run_equidistribution(G, f, cfg.cutoff_kind, cfg.y_grid(), cfg.alpha, cfg.kappa, cfg.gamma,
                                          cfg.h if cfg.cutoff_kind == "mollified" else None, cfg.q, cfg.quad_res)
    d = _out_dir(cfg, args)
    stem = os.path.join(d, cfg.stem)
    with open(stem + ".csv", "w") as fh:
        fh.write("\n".join(res.csv_rows()) + "\n")
    report = res.report()
    report["runtime_s"] = round(report["runtime_s"], 3)
    report["config"] = config_dict(cfg)
    with open(stem + ".json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    if cfg.svg:
        with open(stem + ".svg", "w") as fh:
            fh.write(loglog_svg(res.y, res.errors, (res.rho, res.constant), f"{G.name} {cfg.cutoff_kind} alpha={cfg.alpha}"))
    flag = " (inconclusive: residual above cap)" if res.inconclusive else ""
    out(f"fitted exponent {res.rho:.4f}, predicted {res.predicted:.4f}, residual {res.residual:.3f}{flag}")
    out(f"wrote {stem}.csv")
    return EXIT_OK


def cmd_escape(args, out) -> int:
    cfg = _config(args)
    G = _group(cfg.group)
    eta = args.eta if args.eta is not None else [0.0] * G.n
    if len(eta) != G.n:
        raise ConfigError(f"eta needs {G.n} coordinates")
    ys = args.y or [10.0**-k for k in range(1, 7)]
    rows = horosphere.escape_demo(G, args.c_box, ys, eta)
    d = _out_dir(cfg, args)
    path = os.path.join(d, "escape.csv")
    with open(path, "w") as fh:
        fh.write("y,min_height\n")
        for y, h in rows:
            fh.write(f"{y:.12e},{h:.12e}\n")
    for y, h in rows:
        out(f"y={y:.3e}  min height {h:.6g}")
    out(f"wrote {path}")
    return EXIT_OK


def cmd_eisenstein(args, out) -> int:
    s = complex(args.s)
    if args.action == "evaluate":
        G = _group(args.group)
        x = np.array(args.x if args.x is not None else [0.0] * G.n, float)
        if len(x) != G.n:
            raise ConfigError(f"x needs {G.n} coordinates")
        v = automorphic.eisenstein_direct(G, 0, UpperHalfPoint(x, args.y), s, tail_tol=args.tol)
        out(f"E = {v.value:.12g}  (tail bound {v.tail_bound:.2e}, c_max {v.c_max:g})")
        return EXIT_OK
    if args.action == "extract":
        G = _group(args.group)
        if G.n != 1:
            raise ConfigError("extraction from the command line is wired for psl2z")

        def ev(X, Y):
            return np.array([automorphic.eisenstein_direct(G, 0, UpperHalfPoint(x, y), s, tail_tol=args.tol).value
                             for x, y in zip(X, Y)])

        ex = automorphic.fourier_extract(G, ev, s, (0.8, 1.3), args.m_max)
        out(f"delta = {ex.delta:.10g}")
        out(f"phi   = {ex.phi:.10g}  (closed form {automorphic.scattering_phi_n1(s):.10g})")
        for m in sorted(ex.coeffs):
            out(f"a{m} = {ex.coeffs[m]:.10g}")
        return EXIT_OK
    r = automorphic.maass_selberg_check_n1(s, args.B, resolution=args.resolution)
    out(f"lhs {r.lhs:.12g}  rhs {r.rhs:.12g}  residual {r.residual:.3e}")
    return EXIT_OK if r.residual <= 1e-3 else EXIT_PROPERTY


def cmd_sums(args, out) -> int:
    try:
        ex = automorphic.ingest_coefficients(args.coeffs)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    rng = np.random.default_rng(args.seed or 0)
    alphas = rng.uniform(0, 1, size=(args.samples, ex.n))
    top = ex.index_range()
    grid = [(int(M),) * ex.n for M in np.unique(np.geomspace(1, top, min(12, top)).astype(int))]
    prof = sums.bound_profile(ex, grid, alphas, law=args.law, s=ex.s.real if args.law == "noncuspidal" else None)
    for M, worst, env, ratio in prof.rows:
        out(f"M={M}  max|sum| {worst:.6g}  envelope {env:.6g}  ratio {ratio:.4f}")
    out("bounded" if prof.bounded else "ratio grows: not bounded on this grid")
    return EXIT_OK if prof.bounded else EXIT_PROPERTY


def cmd_groups(args, out) -> int:
    if args.action == "list":
        for name in ("psl2z", "picard"):
            G = groups.get_group(name)
            out(f"{name}: n={G.n} cusps={G.kappa} B0={G.B0} sigma1={G.sigma1} covolume={G.covolume:.10g}")
        return EXIT_OK
    G = _group(args.group)
    box = None
    if args.box is not None:
        if len(args.box) != 2 * G.n:
            raise ConfigError(f"box needs {2 * G.n} numbers (lows then highs)")
        box = (np.array(args.box[: G.n]), np.array(args.box[G.n :]))
    cos = groups.enumerate_cosets(G, 0, args.cmax, box)
    for c in sorted(cos, key=lambda t: (t.c_norm, tuple(np.round(t.point, 12)))):
        out(f"|c|={c.c_norm:.6g}  point={np.array2string(c.point, precision=6)}")
    out(f"{len(cos)} cosets")
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="horolab", description="Horosphere equidistribution laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run invariant suites")
    v.add_argument("scope", nargs="?", default="all")
    v.add_argument("--json", action="store_true", help="print the JSON report")

    sub.add_parser("horosphere", parents=[common], help="equidistribution rate experiment")

    e = sub.add_parser("escape", parents=[common], help="cusp escape table")
    e.add_argument("--c-box", type=float, default=0.1)
    e.add_argument("--eta", type=float, nargs="+")
    e.add_argument("--y", type=float, nargs="+")

    z = sub.add_parser("eisenstein", parents=[common], help="Eisenstein series tools")
    z.add_argument("action", choices=("evaluate", "extract", "maass-selberg"))
    z.add_argument("--group", default="psl2z")
    z.add_argument("--s", default="2")
    z.add_argument("--x", type=float, nargs="+")
    z.add_argument("--y", type=float, default=1.0)
    z.add_argument("--tol", type=float, default=1e-7)
    z.add_argument("--m-max", type=int, default=3)
    z.add_argument("--B", type=float, default=2.0)
    z.add_argument("--resolution", type=int, default=400)

    s = sub.add_parser("sums", parents=[common], help="twisted-sum bound profile of a coefficient file")
    s.add_argument("coeffs")
    s.add_argument("--law", choices=("cuspidal", "noncuspidal"), default="cuspidal")
    s.add_argument("--samples", type=int, default=64)

    g = sub.add_parser("groups", parents=[common], help="built-in groups and coset enumeration")
    g.add_argument("action", choices=("list", "enumerate"))
    g.add_argument("--group", default="psl2z")
    g.add_argument("--cmax", type=float, default=5.0)
    g.add_argument("--box", type=float, nargs="+")
    return p


COMMANDS = {"verify": cmd_verify, "horosphere": cmd_horosphere, "escape": cmd_escape,
            "eisenstein": cmd_eisenstein, "sums": cmd_sums, "groups": cmd_groups}


def main(argv=None) -> int:
    warnings.simplefilter("ignore")
    try:
        args = parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = _Out(args.quiet)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
