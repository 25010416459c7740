"""Command-line front end: ``lips <subcommand> [options]``.

Every subcommand reads an optional TOML config (flat keys plus one ``[f]``
table for the model function); command-line flags override config keys.
Output files start with a header naming the config hash and tolerances.
Exit codes: 0 success, 1 domain or degeneracy error, 2 argument or config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .blowup import BlownParams, blow_down, blow_up, horn_asymptotics, select_domain_D, DomainD
from .curves import (SLOPE_TOL, RESIDUAL_TOL, all_curves, endpoint_tangency, find_cusps, find_flips,
                     find_self_intersections)
from .cyclicity import TOLERANCE as CYCLICITY_TOL, cyclicity_bound, default_q_radius
from .errors import LipsError
from .jets import from_spec
from .normalform import NormalFormConfig, Params, classify_stratum, verify_transition_ode
from .oracle import diagram_consistency, scan_grid
from .poincare import ROOT_TOL, ReturnSystem, find_period2_roots

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

MAX_GRID = 2000
MAX_SAMPLES = 100_000

TOLERANCES = {
    "root": ROOT_TOL,
    "curve_residual": RESIDUAL_TOL,
    "slope": SLOPE_TOL,
    "cyclicity": CYCLICITY_TOL,
}


class ConfigError(Exception):
    """Malformed config file or out-of-range option."""


@dataclass
class RunConfig:
    f_spec: dict
    domain: DomainD | None = None
    resolution: tuple[int, int] = (400, 400)
    samples: int = 801
    seeds: int = 20
    grid_n: int = 4001
    out: Path = Path(".")
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        n1, n2 = self.resolution
        if not (50 <= n1 <= MAX_GRID and 50 <= n2 <= MAX_GRID):
            raise ConfigError(f"resolution must be within 50..{MAX_GRID} per axis")
        if not 2 <= self.samples <= MAX_SAMPLES:
            raise ConfigError(f"samples must be within 2..{MAX_SAMPLES}")
        if not 100 <= self.grid_n <= MAX_SAMPLES:
            raise ConfigError(f"grid_n must be within 100..{MAX_SAMPLES}")

    def canonical(self) -> dict:
        d = self.domain
        return {
            "f": self.f_spec,
            "domain": None if d is None else [d.p0, d.p1, d.qmax],
            "resolution": list(self.resolution),
            "samples": self.samples,
            "seeds": self.seeds,
            "grid_n": self.grid_n,
            "options": self.options,
            "tolerances": TOLERANCES,
        }

    @property
    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def header(self, comment: str = "#") -> str:
        tol = " ".join(f"{k}={v:.3g}" for k, v in sorted(TOLERANCES.items()))
        return f"{comment} lips config-sha256={self.digest}\n{comment} tolerances {tol}\n"


# model function spec on the command line ------------------------------------

def parse_f(text: str) -> dict:
    """``reference``, ``identity-affine``, ``poly:c0,c1,...`` or ``sine:a,b``."""
    if text in ("reference", "identity-affine", "identity"):
        return {"kind": "identity" if text.startswith("identity") else "reference"}
    kind, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ConfigError(f"bad numbers in function spec {text!r}") from exc
    if kind == "poly" and len(vals) >= 2:
        return {"kind": "poly", "coeffs": vals}
    if kind == "sine" and len(vals) == 2:
        return {"kind": "sine", "a": vals[0], "b": vals[1]}
    raise ConfigError(f"unrecognised function spec {text!r}")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for k, v in data.items():
        if isinstance(v, dict) and k != "f":
            raise ConfigError(f"config key {k!r}: only the [f] table may be nested")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config(args.config)
    pick = lambda name, default=None: (getattr(args, name, None) if getattr(args, name, None)
                                       is not None else raw.get(name, default))
    if args.f is not None:
        f_spec = parse_f(args.f)
    elif "f" in raw:
        f_spec = raw["f"] if isinstance(raw["f"], dict) else parse_f(str(raw["f"]))
    else:
        f_spec = {"kind": "reference"}
    domain = None
    box = [pick("p_min"), pick("p_max"), pick("q_max")]
    if any(v is not None for v in box):
        if any(v is None for v in box):
            raise ConfigError("domain override needs p_min, p_max and q_max together")
        if not 0 < box[0] < box[1] or box[2] <= 0:
            raise ConfigError("domain override must satisfy 0 < p_min < p_max and q_max > 0")
        domain = DomainD(float(box[0]), float(box[1]), float(box[2]))
    res = pick("resolution", [400, 400])
    if isinstance(res, int):
        res = [res, res]
    skip = {"config", "f", "p_min", "p_max", "q_max", "resolution", "samples", "seeds",
            "grid_n", "out", "command", "handler", "seed"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    try:
        return RunConfig(f_spec, domain, (int(res[0]), int(res[1])), int(pick("samples", 801)),
                         int(pick("seeds", 20)), int(pick("grid_n", 4001)),
                         Path(pick("out", ".")), options)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc


# output helpers -----------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, cfg: RunConfig, columns: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(cfg.header())
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_text(path: Path, cfg: RunConfig, body: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfg.header() + body.rstrip("\n") + "\n")


CURVE_COLOURS = {
    "L0": "#1f77b4", "Lambda0_offdiagonal": "#d62728", "l_plus": "#2ca02c",
    "l_minus": "#9467bd", "fixed_escape_plus": "#8c564b", "fixed_escape_minus": "#e377c2",
}


def render_svg(cfg: RunConfig, d: DomainD, curves, points=(), grid=None, size=(800, 600)) -> str:
    """Deterministic SVG of the curves in the box D, optionally over the count heat map."""
    w, h = size
    sx = lambda p: (p - d.p0) / (d.p1 - d.p0) * w
    sy = lambda q: (d.qmax - q) / (2 * d.qmax) * h
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">',
           f"<!-- lips version {__version__} -->",
           *[f"<!-- {line[2:]} -->" for line in cfg.header().splitlines()],
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>']
    if grid is not None:
        top = max(int(grid.counts.max()), 1)
        cw, ch = w / grid.resolution[0], h / grid.resolution[1]
        for i in range(grid.resolution[0]):
            col = grid.counts[i]
            j = 0
            while j < len(col):
                k = j
                while k + 1 < len(col) and col[k + 1] == col[j]:
                    k += 1
                c = int(col[j])
                shade = "#ffcccc" if c < 0 else _grey(c / top)
                y0 = sy(grid.q[k] + 0.5 * (grid.q[1] - grid.q[0]))
                out.append(f'<rect x="{i * cw:.3f}" y="{y0:.3f}" width="{cw:.3f}" '
                           f'height="{(k - j + 1) * ch:.3f}" fill="{shade}"/>')
                j = k + 1
    for c in curves:
        colour = CURVE_COLOURS[c.kind]
        for idx in c.branches():
            keep = d.contains(c.p[idx], c.q[idx])
            if np.count_nonzero(keep) < 2:
                continue
            pts = " ".join(f"{sx(p):.3f},{sy(q):.3f}" for p, q in zip(c.p[idx][keep], c.q[idx][keep]))
            out.append(f'<polyline class="{c.kind}" fill="none" stroke="{colour}" '
                       f'stroke-width="1.5" points="{pts}"/>')
    for sp in points:
        if d.contains(sp.p, sp.q):
            out.append(f'<circle class="{sp.kind}" cx="{sx(sp.p):.3f}" cy="{sy(sp.q):.3f}" r="4" '
                       f'fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _grey(t: float) -> str:
    v = int(round(245 - 120 * t))
    return f"#{v:02x}{v:02x}{v:02x}"


# pipeline pieces ------------------------------------------------------------------

def _setup(cfg: RunConfig):
    f = from_spec(cfg.f_spec)
    d = cfg.domain or select_domain_D(f)
    return f, d


def _curves_and_points(cfg: RunConfig, f, d):
    curves = all_curves(f, (d.p0, d.p1), cfg.samples, cfg.seeds)
    lam = curves[1]
    points = list(find_flips(f)) + find_cusps(f, lam)
    points += endpoint_tangency(f, lam, curves[2]) + endpoint_tangency(f, lam, curves[3])
    points += find_self_intersections(curves[:2], f)
    return curves, points


def _emit_curves(cfg: RunConfig, curves, points) -> list[Path]:
    rows = []
    for c in curves:
        for k in range(len(c)):
            rows.append((c.kind, int(c.branch[k]), c.p[k], c.q[k], c.y[k], c.w[k]))
    cols = ["kind", "branch", "p", "q", "y", "w"]
    paths = [cfg.out / "curves.csv", cfg.out / "singular_points.csv"]
    write_csv(paths[0], cfg, cols, rows)
    for c in curves:
        path = cfg.out / f"curve_{c.kind}.csv"
        write_csv(path, cfg, cols, [r for r in rows if r[0] == c.kind])
        paths.append(path)
    prow = [(sp.kind, sp.p, sp.q, *(list(sp.preimage) + [float("nan")] * 2)[:2], sp.warning or "")
            for sp in points]
    write_csv(paths[1], cfg, ["kind", "p", "q", "y", "w", "warning"], prow)
    return paths


def _emit_grid(cfg: RunConfig, grid) -> Path:
    rows = []
    for i, p in enumerate(grid.p):
        for j, q in enumerate(grid.q):
            rows.append((p, q, int(grid.counts[i, j]), bool(grid.fixed_flags[i, j]),
                         bool(grid.escape_flags[i, j])))
    path = cfg.out / "grid.csv"
    write_csv(path, cfg, ["p", "q", "count", "fixed", "escape"], rows)
    return path


# subcommands ------------------------------------------------------------------------

def cmd_curves(args, cfg: RunConfig) -> int:
    f, d = _setup(cfg)
    curves, points = _curves_and_points(cfg, f, d)
    paths = _emit_curves(cfg, curves, points)
    svg = cfg.out / "curves.svg"
    svg.write_text(render_svg(cfg, d, curves, points))
    for sp in points:
        print(f"{sp.kind}: p={fmt(sp.p)} q={fmt(sp.q)}" + (f" warning: {sp.warning}" if sp.warning else ""))
    print("wrote " + " ".join(str(p) for p in paths + [svg]))
    return 0


def cmd_oracle(args, cfg: RunConfig) -> int:
    f, d = _setup(cfg)
    grid = scan_grid(f, d, *cfg.resolution, grid_n=cfg.grid_n)
    curves = all_curves(f, (d.p0, d.p1), cfg.samples, cfg.seeds)
    rep = diagram_consistency(grid, curves, f, grid_n=cfg.grid_n)
    path = _emit_grid(cfg, grid)
    write_text(cfg.out / "consistency.txt", cfg, rep.summary())
    if args.overlay:
        (cfg.out / "oracle.svg").write_text(render_svg(cfg, d, curves, grid=grid))
    print(rep.summary())
    print(f"wrote {path}")
    return 0


def cmd_roots(args, cfg: RunConfig) -> int:
    f = from_spec(cfg.f_spec)
    if args.p is not None and args.q is not None:
        p, q, delta = args.p, args.q, 0.0
    elif None not in (args.eps, args.delta, args.lam):
        bp = blow_up(Params(args.eps, args.delta, args.lam))
        p, q, delta = bp.p, bp.q, bp.delta
    else:
        raise ConfigError("roots needs --p and --q, or --eps, --delta and --lambda")
    rep = find_period2_roots(ReturnSystem.at(f, p, q, delta), grid_n=cfg.grid_n)
    print(cfg.header(), end="")
    print(f"p: {fmt(p)}")
    print(f"q: {fmt(q)}")
    fx = "none" if rep.fixed_root is None else fmt(rep.fixed_root.y)
    print(f"fixed point: {fx}")
    print(f"limit cycles: {rep.cycles}")
    print("y,multiplicity,fixed,escape")
    for r in rep.period2_roots:
        print(f"{fmt(r.y)},{r.multiplicity_label},{int(r.is_fixed)},{int(r.escape)}")
    return 0


def read_triples(path: str, names: tuple[str, str, str]) -> list[tuple[float, float, float]]:
    """Rows of a CSV with the three named columns; ``#`` lines are comments."""
    try:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
        rows = list(csv.DictReader(lines))
        return [tuple(float(r[n]) for n in names) for r in rows]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read {path} with columns {','.join(names)}: {exc}") from exc


def cmd_strata(args, cfg: RunConfig) -> int:
    if args.input is not None:
        print("label,description")
        for eps, delta, lam in read_triples(args.input, ("eps", "delta", "lambda")):
            st = classify_stratum(Params(eps, delta, lam))
            print(f"{st.label},{st.description}")
        return 0
    if None in (args.eps, args.delta, args.lam):
        raise ConfigError("strata needs --eps, --delta and --lambda, or --input")
    print(classify_stratum(Params(args.eps, args.delta, args.lam)))
    return 0


def cmd_blowup(args, cfg: RunConfig) -> int:
    if args.input is not None:
        if args.direction == "down":
            print("eps,delta,lambda")
            for delta, p, q in read_triples(args.input, ("delta", "p", "q")):
                nu = blow_down(BlownParams(delta, p, q))
                print(",".join(fmt(v) for v in (nu.eps, nu.delta, nu.lam)))
        else:
            print("delta,p,q")
            for eps, delta, lam in read_triples(args.input, ("eps", "delta", "lambda")):
                bp = blow_up(Params(eps, delta, lam))
                print(",".join(fmt(v) for v in (bp.delta, bp.p, bp.q)))
        return 0
    if args.p is not None:
        if args.q is None or args.delta is None:
            raise ConfigError("blow-down needs --p, --q and --delta")
        nu = blow_down(BlownParams(args.delta, args.p, args.q))
        print(f"eps={fmt(nu.eps)} delta={fmt(nu.delta)} lambda={fmt(nu.lam)}")
        return 0
    if args.eps is None or args.delta is None or args.lam is None:
        raise ConfigError("blow-up needs --eps, --delta and --lambda (or --p, --q, --delta)")
    bp = blow_up(Params(args.eps, args.delta, args.lam))
    print(f"delta={fmt(bp.delta)} p={fmt(bp.p)} q={fmt(bp.q)}")
    if args.horn:
        print("delta,eps,eps_ratio,opening,scaled_lambda")
        for row in horn_asymptotics(bp.p, bp.q, [10.0 ** -k for k in range(1, 6)]):
            print(",".join(fmt(v) for v in (row.delta, row.eps, row.eps_ratio, row.opening,
                                            row.scaled_lambda)))
    return 0


def cmd_transition_verify(args, cfg: RunConfig) -> int:
    chk = verify_transition_ode(args.eps, args.y0, NormalFormConfig(a1=args.a1))
    print("eps,a1,y0,empirical,analytic,rel_err")
    print(",".join(fmt(v) for v in (chk.eps, chk.a1, chk.y0, chk.empirical, chk.analytic, chk.rel_err)))
    return 0 if chk.rel_err < args.rtol else 1


def cmd_cyclicity(args, cfg: RunConfig) -> int:
    f = from_spec(cfg.f_spec)
    q_radius = args.q_radius if args.q_radius is not None else default_q_radius(f)
    rep = cyclicity_bound(f, args.y0, (args.cyc_p_min, args.cyc_p_max), q_radius)
    print(cfg.header(), end="")
    print(rep.summary())
    write_csv(cfg.out / "cyclicity_witnesses.csv", cfg, ["m", "p", "q", "max_abs_h"],
              [(w.m, w.p, w.q, w.residual) for w in rep.witnesses])
    return 0


def cmd_flips(args, cfg: RunConfig) -> int:
    f = from_spec(cfg.f_spec)
    print("y,p,q,flip_function,nondegeneracy,warning")
    for sp in find_flips(f):
        r = sp.residuals
        print(",".join([fmt(sp.preimage[0]), fmt(sp.p), fmt(sp.q), fmt(r.get("flip", np.nan)),
                        fmt(r.get("nondegeneracy", np.nan)), sp.warning or ""]))
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    f, d = _setup(cfg)
    curves, points = _curves_and_points(cfg, f, d)
    paths = _emit_curves(cfg, curves, points)
    grid = scan_grid(f, d, *cfg.resolution, grid_n=cfg.grid_n)
    rep = diagram_consistency(grid, curves, f, grid_n=cfg.grid_n)
    paths.append(_emit_grid(cfg, grid))
    svg = cfg.out / "curves.svg"
    svg.write_text(render_svg(cfg, d, curves, points, grid=grid if args.overlay else None))
    paths.append(svg)
    kinds = {}
    for sp in points:
        kinds[sp.kind] = kinds.get(sp.kind, 0) + 1
    lines = [f"model function: {json.dumps(cfg.f_spec, sort_keys=True)}",
             f"domain D: p in [{fmt(d.p0)}, {fmt(d.p1)}], |q| <= {fmt(d.qmax)}",
             f"grid: {grid.resolution[0]} x {grid.resolution[1]}, "
             f"distinct counts {grid.distinct_counts()}",
             "singular points: " + (", ".join(f"{k} {n}" for k, n in sorted(kinds.items())) or "none"),
             f"kernel backend: {kernels.BACKEND}",
             "consistency:", rep.summary()]
    summary = cfg.out / "summary.txt"
    write_text(summary, cfg, "\n".join(lines))
    paths += [summary]
    print("\n".join(lines))
    print("wrote " + " ".join(str(p) for p in paths))
    return 0 if not rep.violations else 1


# argument parsing ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file; flags override its keys")
    common.add_argument("--f", help="model function: reference, identity-affine, "
                                    "poly:c0,c1,... or sine:a,b (default reference)")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--p-min", dest="p_min", type=float, help="domain override")
    common.add_argument("--p-max", dest="p_max", type=float, help="domain override")
    common.add_argument("--q-max", dest="q_max", type=float, help="domain override")
    common.add_argument("--resolution", type=int, nargs=2, metavar=("NP", "NQ"))
    common.add_argument("--samples", type=int, help="samples per traced one-parameter curve")
    common.add_argument("--seeds", type=int, help="seed lines for contour tracing")
    common.add_argument("--grid-n", dest="grid_n", type=int, help="root scan points per cell")
    common.add_argument("--seed", type=int, help="reserved; every algorithm is deterministic")

    ap = argparse.ArgumentParser(prog="lips", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lips {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("curves", parents=[common], help="trace all bifurcation curves")
    s.set_defaults(handler=cmd_curves)

    s = sub.add_parser("oracle", parents=[common], help="brute-force count grid and consistency")
    s.add_argument("--overlay", action="store_true", help="write the count heat map SVG")
    s.set_defaults(handler=cmd_oracle)

    s = sub.add_parser("roots", parents=[common], help="limit-cycle roots at one (p, q)")
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--eps", type=float, help="with --delta and --lambda, blown up to (p, q)")
    s.add_argument("--delta", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.set_defaults(handler=cmd_roots)

    s = sub.add_parser("strata", parents=[common], help="phase-portrait stratum")
    s.add_argument("--eps", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--input", help="CSV with columns eps,delta,lambda")
    s.set_defaults(handler=cmd_strata)

    s = sub.add_parser("blowup", parents=[common], help="blow-up or blow-down of parameters")
    s.add_argument("--eps", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--horn", action="store_true", help="print the horn preimage table")
    s.add_argument("--input", help="CSV of eps,delta,lambda (up) or delta,p,q (down)")
    s.add_argument("--direction", choices=("up", "down"), default="up")
    s.set_defaults(handler=cmd_blowup)

    s = sub.add_parser("transition-verify", parents=[common],
                       help="RK4 transition through a saddle-node against the closed form")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--y0", type=float, required=True)
    s.add_argument("--a1", type=float, default=0.0)
    s.add_argument("--rtol", type=float, default=1e-6)
    s.set_defaults(handler=cmd_transition_verify)

    s = sub.add_parser("cyclicity", parents=[common], help="cyclicity bound at y0")
    s.add_argument("--y0", type=float, default=0.0)
    s.add_argument("--cyc-p-min", dest="cyc_p_min", type=float, default=0.25)
    s.add_argument("--cyc-p-max", dest="cyc_p_max", type=float, default=4.0)
    s.add_argument("--q-radius", dest="q_radius", type=float)
    s.set_defaults(handler=cmd_cyclicity)

    s = sub.add_parser("flips", parents=[common], help="codimension-two flips of the contour")
    s.set_defaults(handler=cmd_flips)

    s = sub.add_parser("report", parents=[common], help="full pipeline with summary")
    s.add_argument("--overlay", action="store_true", help="draw the count heat map under the curves")
    s.set_defaults(handler=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
        return args.handler(args, cfg)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"lips: error: {exc}", file=sys.stderr)
        return 2
    except LipsError as exc:
        print(f"lips: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
