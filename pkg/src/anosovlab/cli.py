"""Command-line experiment runner.

Every artifact (JSON, CSV, SVG) carries the tool version and an echo of the
parsed configuration, and contains no timestamps, so identical invocations
produce byte-identical files.  Exit codes: 0 ok, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnosovLabError
from .fileio import atomic_write_text

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---- input parsing --------------------------------------------------------

def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.replace(" ", "").split(",") if x], dtype=float)
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from exc


def _matrix(args):
    from .matgeo import matrix_from_json, random_sl

    if args.matrix is not None:
        try:
            return matrix_from_json(_json_arg(args.matrix))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed matrix JSON: {exc}") from exc
    if args.random_dim is not None:
        return random_sl(args.random_dim, np.random.default_rng(args.seed))
    raise UsageError("pass --matrix or --random-dim")


# ---- output -----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if np.isnan(x) or np.isinf(x):
            return str(x)
        return x
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def config_echo(args) -> dict:
    skip = {"func", "out", "default_format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def render_json(args, payload) -> str:
    doc = {"tool": "anosovlab", "version": __version__, "config": config_echo(args),
           "result": payload}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _meta_line(args) -> str:
    meta = json.dumps(_jsonable({"tool": "anosovlab", "version": __version__,
                                 "config": config_echo(args)}), sort_keys=True)
    return f"# {meta}\n"


def render_csv(args, header, rows) -> str:
    buf = io.StringIO()
    buf.write(_meta_line(args))
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(r[h]) for h in header])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class Result:
    """What a subcommand produced: a payload, a one-line summary and optional table."""

    def __init__(self, payload, text: str, ok: bool = True, table=None, svg: str | None = None):
        self.payload = payload
        self.text = text
        self.ok = ok
        self.table = table
        self.svg = svg


def emit(args, res: Result) -> None:
    fmt = args.format or args.default_format
    if fmt == "csv":
        if res.table is None:
            raise UsageError("this subcommand has no tabular output")
        body = render_csv(args, *res.table)
    elif fmt == "svg":
        if res.svg is None:
            raise UsageError("this subcommand has no SVG output")
        body = res.svg
    elif fmt == "json":
        body = render_json(args, res.payload)
    else:
        body = res.text + "\n"
        if args.out:
            body = _meta_line(args) + body
    if args.out:
        atomic_write_text(args.out, body)
        print(res.text)
    else:
        sys.stdout.write(body)


# ---- subcommands ------------------------------------------------------------

def cmd_svd_diag(args) -> Result:
    from .matgeo import eigenvalue_moduli, is_weakly_unipotent, singular_values

    g = _matrix(args)
    sd = singular_values(g)
    lam = eigenvalue_moduli(g)
    d = g.shape[0]
    ratios = [sd.ratio(k) for k in range(1, d)]
    payload = {"singular_values": sd.mu, "gap_indices": sorted(sd.gap_indices),
               "ratios": ratios, "eigenvalue_moduli": lam,
               "weakly_unipotent": is_weakly_unipotent(g, args.tol or 1e-9)}
    text = "mu=" + ",".join(f"{x:.12g}" for x in sd.mu) + " gaps=" + \
        ",".join(map(str, sorted(sd.gap_indices)))
    return Result(payload, text)


def cmd_flags_sdp(args) -> Result:
    from .flagdyn import FlagPoint, proximal_fixed_data, sdp_test

    g = _matrix(args)
    fixed = proximal_fixed_data(g, args.k)
    x = FlagPoint(fixed["attracting"], fixed["repelling"])
    seq = [np.linalg.matrix_power(g, n) for n in range(1, args.powers + 1)]
    rep = sdp_test(seq, x, x, gap_threshold=args.gap_threshold, dist_tol=args.tol or 1e-4,
                   seed=args.seed)
    text = f"clause_a={rep['clause_a']} clause_b={rep['clause_b']} clause_c={rep['clause_c']} " \
           f"agree={rep['agree']}"
    return Result(rep, text, ok=rep["agree"])


def _domain(text: str):
    from .hilbert import Ellipsoid, Polytope, domain_from_json

    if text.startswith("klein"):
        dim = int(text.split(":")[1]) if ":" in text else 3
        return Ellipsoid.klein_ball(dim)
    if text == "square":
        return Polytope.square()
    return domain_from_json(_json_arg(text))


def _homogeneous(text: str, dim: int) -> np.ndarray:
    v = _floats(text)
    if len(v) == dim - 1:
        v = np.append(v, 1.0)
    if len(v) != dim:
        raise UsageError(f"point needs {dim - 1} affine or {dim} homogeneous coordinates")
    return v


def cmd_hilbert_dist(args) -> Result:
    from .hilbert import hilbert_distance

    dom = _domain(args.domain)
    p, q = _homogeneous(args.p, dom.dim), _homogeneous(args.q, dom.dim)
    d = hilbert_distance(dom, p, q)
    return Result({"distance": d}, f"{d:.12f}")


def cmd_hilbert_klein_check(args) -> Result:
    from .hilbert import Ellipsoid, hilbert_distance

    rng = np.random.default_rng(args.seed)
    dom = Ellipsoid.klein_ball(3)
    center = np.array([0.0, 0.0, 1.0])
    worst = 0.0
    for _ in range(args.count):
        x = rng.normal(size=2)
        x *= rng.uniform(0, args.max_radius) / np.linalg.norm(x)
        d = hilbert_distance(dom, center, np.append(x, 1.0))
        worst = max(worst, abs(d - np.arctanh(np.linalg.norm(x))))
    tol = args.tol or 1e-10
    return Result({"count": args.count, "max_error": worst, "tol": tol, "ok": worst <= tol},
                  f"max_error={worst:.3e} ok={worst <= tol}", ok=worst <= tol)


def cmd_hilbert_hausdorff(args) -> Result:
    from .hilbert import Ellipsoid, Polytope, segment_hausdorff_check

    rng = np.random.default_rng(args.seed)
    domains = {"ball": Ellipsoid.klein_ball(3), "square": Polytope.square()}

    def draw(kind):
        if kind == "ball":
            x = rng.normal(size=2)
            x *= 0.95 * np.sqrt(rng.uniform()) / np.linalg.norm(x)
        else:
            x = rng.uniform(-0.95, 0.95, size=2)
        return np.append(x, 1.0)

    out = {}
    for kind, dom in domains.items():
        viol, worst = 0, -np.inf
        for _ in range(args.count):
            r = segment_hausdorff_check(dom, *(draw(kind) for _ in range(4)), samples=args.samples)
            viol += not r["ok"]
            worst = max(worst, r["hausdorff_est"] - r["bound"] - r["slack"])
        out[kind] = {"quadruples": args.count, "violations": viol, "worst_excess": worst}
    ok = all(v["violations"] == 0 for v in out.values())
    out["ok"] = ok
    text = " ".join(f"{k}:violations={v['violations']}" for k, v in out.items() if k != "ok")
    return Result(out, text, ok=ok)


def _horo_vertex(text: str, base: str):
    c = _ints(text)
    rank = 1 if base == "z" else 2
    if len(c) != rank + 1:
        raise UsageError(f"vertex needs {rank} base coordinates and a level")
    return (c[:rank], c[rank])


def cmd_horoball_dist(args) -> Result:
    from .cuspgraph import (BaseGroupBall, bfs_distance, build_horoball, geodesic_shape,
                            horoball_distance_fast)

    u, v = _horo_vertex(args.source, args.base), _horo_vertex(args.target, args.base)
    radius = args.radius or max(1, max(abs(c) for c in u[0] + v[0]))
    H = build_horoball(BaseGroupBall(args.base, radius), args.depth)
    fast = horoball_distance_fast(H, u, v)
    payload = {"distance": fast, "shape": geodesic_shape(H, u, v).as_dict()}
    if args.bfs:
        r = bfs_distance(H, u, v)
        payload["bfs"] = {"distance": r.distance, "may_be_overestimate": r.may_be_overestimate}
    return Result(payload, str(fast))


def cmd_horoball_sweep(args) -> Result:
    from .cuspgraph import gm_lower_bound_table, z_sweep

    sweep = z_sweep(args.radius, tuple(range(1, args.levels + 1)))
    rows = [{"k": k, "n": n, "lower_bound": lb, "distance": d}
            for k, n, lb, d in gm_lower_bound_table(args.kmax)]
    lb_ok = all(r["lower_bound"] <= r["distance"] for r in rows)
    ok = lb_ok and sweep["mismatches"] == 0 and sweep["template_failures"] == 0
    payload = {"z_sweep": sweep, "lower_bound_rows": rows, "lower_bound_ok": lb_ok, "ok": ok}
    text = (f"pairs={sweep['pairs']} mismatches={sweep['mismatches']} "
            f"template_failures={sweep['template_failures']} lower_bound_ok={lb_ok}")
    return Result(payload, text, ok=ok,
                  table=(["k", "n", "lower_bound", "distance"], rows))


def cmd_heisenberg_distortion(args) -> Result:
    from .reps import fitted_slope, heisenberg_distortion_table

    rows = heisenberg_distortion_table(args.kmax, args.nmax, args.nprobe)
    probe = [r for r in rows if r["probe"] == "u(2^(n-1),0)"]
    slope = fitted_slope([r["n"] for r in probe], [r["symspace_displacement"] for r in probe])
    cusp_one = all(r["cusp_distance"] == 1 for r in probe)
    ok = cusp_one and slope > np.log(2)
    header = ["probe", "k", "n", "cusp_distance", "symspace_displacement", "lower_bound"]
    payload = {"rows": rows, "probe_slope": slope, "probe_cusp_distance_one": cusp_one, "ok": ok}
    text = f"rows={len(rows)} probe_slope={slope:.6f} cusp_distance_one={cusp_one}"
    return Result(payload, text, ok=ok, table=(header, rows))


def cmd_pingpong_certify(args) -> Result:
    from .pingpong import (PingPongSystem, alternating_boundary_word, boundary_point_agreement,
                           certify, default_system, freeness_sweep)

    if args.system:
        system = PingPongSystem.from_json(_json_arg(args.system))
    else:
        system = default_system(args.eps)
    cert = certify(system, args.eps, args.net, args.nmax, args.seed)
    ok = cert["ok"]
    if ok and (args.words or args.boundary_length):
        sys_n = system.with_power(cert["N"])
        if args.words:
            cert["freeness"] = freeness_sweep(sys_n, args.words, args.max_len, args.seed)
            ok = ok and cert["freeness"]["ok"]
        if args.boundary_length:
            word = alternating_boundary_word(args.boundary_length)
            cert["boundary_agreement"] = boundary_point_agreement(sys_n, word)
            ok = ok and cert["boundary_agreement"]["ok"]
    cert["ok"] = bool(ok)
    text = f"ok={ok} N={cert['N']} epsilon={cert['epsilon']}"
    return Result(cert, text, ok=ok)


def _box(text: str):
    from .pappus import MarkedBox, standard_box

    if text == "std":
        return standard_box()
    return MarkedBox.from_json(_json_arg(text))


def cmd_pappus_render(args) -> Result:
    from .pappus import render_regions, render_svg

    box = _box(args.box)
    svg = render_svg(box, args.depth, size=args.size,
                     config={"tool": "anosovlab", "version": __version__,
                             "config": config_echo(args)})
    regions, skipped = render_regions(box, args.depth)
    payload = {"regions": len(regions), "skipped_unbounded": skipped}
    return Result(payload, f"regions={len(regions)} skipped_unbounded={skipped}", svg=svg)


def cmd_pappus_orbit(args) -> Result:
    from .pappus import normal_form_count, orbit

    box = _box(args.box)
    if not args.exact:
        box = box.to_float()
    items = orbit(box, args.maxlen)
    residual = max(float(B.max_residual()) for _, B in items)
    counts = {str(L): sum(1 for w, _ in items if len(w) == L) for L in range(args.maxlen + 1)}
    expected = {str(L): normal_form_count(L) for L in range(args.maxlen + 1)}
    payload = {"count": len(items), "counts_by_length": counts,
               "expected_counts": expected, "max_residual": residual,
               "boxes": [{"word": w.letters, "box": B.to_json()} for w, B in items]}
    return Result(payload, f"boxes={len(items)} max_residual={residual:.3e}",
                  ok=counts == expected)


def cmd_pappus_relations(args) -> Result:
    from .pappus import apply_word, orbit, random_rational_box, standard_box

    rng = np.random.default_rng(args.seed)
    boxes = [standard_box()] + [random_rational_box(rng) for _ in range(args.random)]
    a3 = sum(apply_word(B, "aaa").key() != B.key() for B in boxes)
    d2 = sum(apply_word(B, "dd").key() != B.key() for B in boxes)
    exact_res = max(max(apply_word(B, w).max_residual() for w in ("aaa", "dd")) for B in boxes)
    float_res = max(float(B.max_residual()) for _, B in orbit(standard_box(False), args.depth))
    tol = args.tol or 1e-9
    ok = a3 == 0 and d2 == 0 and exact_res == 0 and float_res < tol
    payload = {"boxes": len(boxes), "a_cubed_failures": a3, "d_squared_failures": d2,
               "exact_max_residual": float(exact_res), "float_depth": args.depth,
               "float_max_residual": float_res, "ok": ok}
    return Result(payload, f"a3_failures={a3} d2_failures={d2} float_residual={float_res:.3e}",
                  ok=ok)


def cmd_reps_ss_limit(args) -> Result:
    from .reps import ss_collapse_limit_check, ss_gap_sequence

    x = _floats(args.x)
    if len(x) != 4:
        raise UsageError("--x needs four coordinates")
    rep = ss_collapse_limit_check(x, args.n)
    gaps = ss_gap_sequence(args.jmax)
    increasing = bool(np.all(np.diff(gaps) > 0))
    tol = args.tol or 1e-5
    ok = rep["limit_distance"] <= tol and rep["rate_ok"] and increasing
    payload = dict(rep, gap_sequence=gaps, gaps_strictly_increasing=increasing, ok=ok)
    text = (f"limit_distance={rep['limit_distance']:.6e} rate_exponent={rep['rate_exponent']:.4f} "
            f"gaps_increasing={increasing}")
    return Result(payload, text, ok=ok)


def cmd_reps_tau_eig(args) -> Result:
    from .reps import random_hyperbolic_sl2, tau_eigenvalue_error, tau_eigenvalue_prediction

    if args.random:
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.random):
            g = random_hyperbolic_sl2(rng)
            for d in range(2, args.d + 1):
                worst = max(worst, tau_eigenvalue_error(g, d, dps=args.dps or None))
        tol = args.tol or 1e-7
        payload = {"samples": args.random, "d_max": args.d, "max_relative_error": worst,
                   "ok": worst <= tol}
        return Result(payload, f"max_relative_error={worst:.3e}", ok=worst <= tol)
    pred = tau_eigenvalue_prediction(args.lambda1, args.d)
    return Result({"eigenvalue_moduli": pred}, ",".join(format(float(v), "g") for v in pred))


def cmd_reps_norm_contraction(args) -> Result:
    from .reps import equivariant_norm_contraction

    rows = {}
    worst, ok = 0.0, True
    for d in range(2, args.d + 1):
        r = equivariant_norm_contraction(d, seed=args.seed)
        rows[str(d)] = r
        worst = max(worst, r["max_normalized_ratio"])
        ok = ok and r["ok"]
    payload = {"by_dimension": rows, "max_normalized_ratio": worst, "ok": ok}
    return Result(payload, f"max_normalized_ratio={worst:.12f} ok={ok}", ok=ok)


def cmd_reps_heisenberg_law(args) -> Result:
    from .reps import heisenberg_law_sweep

    r = heisenberg_law_sweep(args.bound, args.partners, args.seed)
    ok = r["failures"] == 0
    return Result(dict(r, ok=ok), f"checked={r['checked']} failures={r['failures']}", ok=ok)


def cmd_reps_weak_unipotence(args) -> Result:
    from .matgeo import eigenvalue_moduli
    from .reps import B_TILDE, heisenberg_batch

    vals = np.arange(-args.bound, args.bound + 1)
    m, n = (a.ravel() for a in np.meshgrid(vals, vals, indexing="ij"))
    dev = float(np.max(np.abs(np.abs(np.linalg.eigvals(heisenberg_batch(m, n))) - 1)))
    dev_b = float(np.max(np.abs(eigenvalue_moduli(B_TILDE) - 1)))
    tol = args.tol or 1e-9
    ok = max(dev, dev_b) <= tol
    payload = {"heisenberg_max_deviation": dev, "peripheral_max_deviation": dev_b, "ok": ok}
    return Result(payload, f"max_deviation={max(dev, dev_b):.3e} ok={ok}", ok=ok)


def cmd_bps_sweep(args) -> Result:
    from .flagdyn import batch_bps_sweep

    r = batch_bps_sweep(args.count, args.d, args.k, args.seed)
    ok = bool(np.isfinite(r["max_ratio"]))
    return Result(dict(r, ok=ok), f"pairs={r['count']} max_ratio={r['max_ratio']:.6f}", ok=ok)


# ---- parser -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, fmt: str, seed: int = 0) -> None:
    p.add_argument("--out", help="write the artifact here (atomically)")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--format", choices=("text", "json", "csv", "svg"), default=None)
    p.set_defaults(default_format=fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anosovlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"anosovlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(subparsers, name, func, fmt="text", **kw):
        p = subparsers.add_parser(name, **kw)
        _common(p, fmt)
        p.set_defaults(func=func)
        return p

    def matrix_args(p):
        p.add_argument("--matrix", help="matrix JSON (inline or file)")
        p.add_argument("--random-dim", type=int, help="use a random SL(d,R) matrix")

    p = leaf(sub, "svd-diag", cmd_svd_diag, help="singular values, gaps, eigenvalue moduli")
    matrix_args(p)
    p = leaf(sub, "flags-sdp", cmd_flags_sdp, help="strong dynamics clauses along powers")
    matrix_args(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--powers", type=int, default=40)
    p.add_argument("--gap-threshold", type=float, default=1e6)

    hil = sub.add_parser("hilbert").add_subparsers(dest="action", required=True)
    p = leaf(hil, "dist", cmd_hilbert_dist, help="Hilbert distance of two points")
    p.add_argument("--domain", default="klein:3", help="klein[:dim], square, or domain JSON")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p = leaf(hil, "klein-check", cmd_hilbert_klein_check, help="distance from the ball center")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-radius", type=float, default=0.99)
    p = leaf(hil, "hausdorff", cmd_hilbert_hausdorff, help="segment Hausdorff estimate sweep")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--samples", type=int, default=48)

    hor = sub.add_parser("horoball").add_subparsers(dest="action", required=True)
    p = leaf(hor, "dist", cmd_horoball_dist, help="distance in a combinatorial horoball")
    p.add_argument("--base", choices=("z", "z2"), default="z2")
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--from", dest="source", required=True, help="base coords then level")
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--bfs", action="store_true", help="also run the BFS oracle")
    p = leaf(hor, "sweep", cmd_horoball_sweep, help="BFS oracle sweep and lower-bound table")
    p.add_argument("--radius", type=int, default=1024)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--kmax", type=int, default=12)

    exp = sub.add_parser("experiment").add_subparsers(dest="action", required=True)
    p = leaf(exp, "heisenberg-distortion", cmd_heisenberg_distortion, fmt="csv")
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--nprobe", type=int, default=12)

    pp = sub.add_parser("pingpong").add_subparsers(dest="action", required=True)
    p = leaf(pp, "certify", cmd_pingpong_certify, fmt="json")
    p.add_argument("--system", help="system JSON (default: the shipped SL(3,R) system)")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--net", type=int, default=4096)
    p.add_argument("--nmax", type=int, default=64)
    p.add_argument("--words", type=int, default=1000)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--boundary-length", type=int, default=20)

    pap = sub.add_parser("pappus").add_subparsers(dest="action", required=True)
    p = leaf(pap, "render", cmd_pappus_render, fmt="svg")
    p.add_argument("--box", default="std")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--size", type=int, default=800)
    p = leaf(pap, "orbit", cmd_pappus_orbit, fmt="json")
    p.add_argument("--box", default="std")
    p.add_argument("--maxlen", type=int, default=8)
    p.add_argument("--exact", action=argparse.BooleanOptionalAction, default=True)
    p = leaf(pap, "relations", cmd_pappus_relations)
    p.add_argument("--random", type=int, default=100)
    p.add_argument("--depth", type=int, default=6)

    rep = sub.add_parser("reps").add_subparsers(dest="action", required=True)
    p = leaf(rep, "ss-limit", cmd_reps_ss_limit)
    p.add_argument("--x", default="1,1,1,1")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--jmax", type=int, default=20)
    p = leaf(rep, "tau-eig", cmd_reps_tau_eig)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--lambda1", type=float, default=2.0)
    p.add_argument("--random", type=int, default=0, help="check this many random elements")
    p.add_argument("--dps", type=int, default=40, help="working digits; 0 for float64")
    p = leaf(rep, "norm-contraction", cmd_reps_norm_contraction)
    p.add_argument("--d", type=int, default=6)
    p = leaf(rep, "heisenberg-law", cmd_reps_heisenberg_law)
    p.add_argument("--bound", type=int, default=100)
    p.add_argument("--partners", type=int, default=64)
    p = leaf(rep, "weak-unipotence", cmd_reps_weak_unipotence)
    p.add_argument("--bound", type=int, default=100)

    p = leaf(sub, "bps-sweep", cmd_bps_sweep, fmt="json")
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--k", type=int, default=1)
    return parser


def _error(payload: dict) -> None:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        res = args.func(args)
        emit(args, res)
    except UsageError as exc:
        _error({"error": "usage", "message": str(exc)})
        return EXIT_USAGE
    except AnosovLabError as exc:
        _error(exc.to_dict())
        return EXIT_DOMAIN
    except OSError as exc:
        _error({"error": "io_error", "message": str(exc)})
        return EXIT_DOMAIN
    return EXIT_OK if res.ok else EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
