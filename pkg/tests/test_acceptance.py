"""Acceptance criteria 1-13, each at its stated tolerance and time budget."""

import csv
import io
import json
import time
from pathlib import Path

import numpy as np
import pytest

from anosovlab.cli import main
from anosovlab.cuspgraph import gm_lower_bound_table, z_sweep
from anosovlab.flagdyn import batch_bps_sweep
from anosovlab.hilbert import Ellipsoid, Polytope, hilbert_distance, segment_hausdorff_check
from anosovlab.matgeo import eigenvalue_moduli
from anosovlab.pappus import apply_word, orbit, random_rational_box, standard_box
from anosovlab.pingpong import (
    FLAG_DIAMETER,
    alternating_boundary_word,
    boundary_point_agreement,
    certify,
    default_system,
    freeness_sweep,
)
from anosovlab.reps import (
    equivariant_norm_contraction,
    fitted_slope,
    heisenberg_batch,
    heisenberg_law_sweep,
    random_hyperbolic_sl2,
    semisimplification_pair,
    ss_collapse_limit_check,
    ss_gap_sequence,
    tau_eigenvalue_error,
)

README = Path(__file__).resolve().parents[1] / "README.md"


def uniform_ball(rng, count, max_radius):
    x = rng.normal(size=(count, 2))
    x /= np.linalg.norm(x, axis=1)[:, None]
    x *= max_radius * np.sqrt(rng.uniform(size=count))[:, None]
    return x


def test_criterion_01_heisenberg_law(criterion):
    start = time.perf_counter()
    r = heisenberg_law_sweep(bound=100, partners=64, seed=0)
    elapsed = time.perf_counter() - start
    ok = r["failures"] == 0 and elapsed < 1.0
    assert criterion(1, ok, f"{r['checked']} products, {r['failures']} failures, {elapsed:.2f} s")


def test_criterion_02_weak_unipotence(criterion):
    vals = np.arange(-100, 101)
    m, n = (a.ravel() for a in np.meshgrid(vals, vals, indexing="ij"))
    dev = float(np.max(np.abs(np.abs(np.linalg.eigvals(heisenberg_batch(m, n))) - 1)))
    rho, _ = semisimplification_pair()
    dev_b = float(np.max(np.abs(eigenvalue_moduli(rho.image("b")) - 1)))
    worst = max(dev, dev_b)
    assert criterion(2, worst <= 1e-9, f"max |modulus - 1| = {worst:.2e}")


def test_criterion_03_tau_eigenvalue_law(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        g = random_hyperbolic_sl2(rng)
        for d in range(2, 9):
            worst = max(worst, tau_eigenvalue_error(g, d, dps=40))
    assert criterion(3, worst <= 1e-7, f"max relative error {worst:.2e} over 100 elements, d <= 8")


def test_criterion_04_klein_ball(criterion):
    rng = np.random.default_rng(4)
    ball = Ellipsoid.klein_ball(3)
    worst = 0.0
    for x in uniform_ball(rng, 1000, 0.99):
        d = hilbert_distance(ball, [0.0, 0.0, 1.0], np.append(x, 1.0))
        worst = max(worst, abs(d - np.arctanh(np.linalg.norm(x))))
    assert criterion(4, worst <= 1e-10, f"max error {worst:.2e} over 1000 points")


def test_criterion_05_segment_hausdorff(criterion):
    rng = np.random.default_rng(5)
    violations = 0
    for dom in (Ellipsoid.klein_ball(3), Polytope.square()):
        for _ in range(1000):
            if isinstance(dom, Ellipsoid):
                pts = uniform_ball(rng, 4, 0.95)
            else:
                pts = rng.uniform(-0.95, 0.95, size=(4, 2))
            pts = [np.append(p, 1.0) for p in pts]
            violations += not segment_hausdorff_check(dom, *pts)["ok"]
    assert criterion(5, violations == 0, f"{violations} violations over 2000 quadruples")


@pytest.fixture(scope="module")
def oracle_sweep():
    start = time.perf_counter()
    rep = z_sweep(radius=1024, levels=(1, 2, 3, 4))
    return rep, time.perf_counter() - start


def test_criterion_06_horoball_lower_bound_and_oracle(criterion, oracle_sweep):
    rep, elapsed = oracle_sweep
    rows = gm_lower_bound_table(12, n_min=1)
    bound_fail = sum(d < lower for _, _, lower, d in rows)
    ok = (bound_fail == 0 and rep["mismatches"] == 0 and elapsed < 60
          and rep["pairs"] == 4 * 2049 ** 2)
    assert criterion(6, ok, f"{len(rows)} bound rows ({bound_fail} failures); "
                            f"{rep['pairs']} oracle pairs, {rep['mismatches']} mismatches, "
                            f"BFS {elapsed:.1f} s")


def test_criterion_07_geodesic_template(criterion, oracle_sweep):
    rep, _ = oracle_sweep
    ok = rep["template_failures"] == 0
    assert criterion(7, ok, f"{rep['template_failures']} pairs without a template "
                            f"of at most 3 horizontal edges")


def test_criterion_08_distortion(criterion, tmp_path, capsys):
    out = tmp_path / "table.csv"
    code = main(["experiment", "heisenberg-distortion", "--kmax", "12", "--nmax", "8",
                 "--out", str(out)])
    capsys.readouterr()
    text = out.read_text()
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    probe = [r for r in rows if r["probe"] == "u(2^(n-1),0)"]
    ns = [int(r["n"]) for r in probe]
    ones = all(int(r["cusp_distance"]) == 1 for r in probe)
    slope = fitted_slope(ns, [float(r["symspace_displacement"]) for r in probe])
    ok = code == 0 and ns == list(range(2, 13)) and ones and slope > np.log(2)
    assert criterion(8, ok, f"cusp distance 1 for n = 2..12: {ones}; "
                            f"displacement slope {slope:.3f} > {np.log(2):.3f}")


def test_criterion_09_pingpong(criterion):
    start = time.perf_counter()
    system = default_system()
    report = certify(system, eps=0.05, net_size=4096, N_max=64)
    certified = system.with_power(report["N"]) if report["ok"] else None
    free = freeness_sweep(certified, 1000, 12) if certified else {"failures": None, "ok": False}
    agree = (boundary_point_agreement(certified, alternating_boundary_word(20))
             if certified else {"distance": np.nan, "ok": False})
    elapsed = time.perf_counter() - start
    bound = 2 * 0.05 ** 20 * FLAG_DIAMETER
    ok = (report["ok"] and report["N"] <= 64 and free["ok"] and agree["ok"]
          and agree["distance"] <= bound and elapsed < 300)
    assert criterion(9, ok, f"N = {report['N']}, freeness failures {free['failures']}, "
                            f"two-seed distance {agree['distance']:.1e} <= {bound:.1e}, "
                            f"{elapsed:.1f} s")


def test_criterion_10_semisimplification(criterion):
    r = ss_collapse_limit_check([1.0, 1.0, 1.0, 1.0], 10**6)
    gaps = ss_gap_sequence(20)
    increasing = bool(np.all(np.diff(gaps) > 0))
    ok = r["limit_distance"] <= 1e-5 and 0.8 <= r["rate_exponent"] <= 1.2 and increasing
    assert criterion(10, ok, f"distance {r['limit_distance']:.2e}, rate exponent "
                             f"{r['rate_exponent']:.3f}, gaps increasing: {increasing}")


def test_criterion_11_pappus(criterion):
    rng = np.random.default_rng(11)
    boxes = [standard_box()] + [random_rational_box(rng) for _ in range(100)]
    failures = sum(apply_word(B, "aaa") != B or apply_word(B, "dd") != B for B in boxes)
    exact_res = max(apply_word(B, w).max_residual() for B in boxes for w in ("aaa", "dd"))
    float_res = max(float(B.max_residual()) for _, B in orbit(standard_box(exact=False), 6))
    ok = failures == 0 and exact_res == 0 and float_res < 1e-9
    assert criterion(11, ok, f"{failures} relation failures on {len(boxes)} boxes, exact residual "
                             f"{float(exact_res)}, depth-6 float residual {float_res:.1e}")


def test_criterion_12_norm_contraction(criterion):
    worst = 0.0
    for d in range(2, 7):
        r = equivariant_norm_contraction(d, t_samples=(0.5, 1.0, 2.0, 4.0, 8.0))
        worst = max(worst, r["max_normalized_ratio"])
    ok = worst <= 1 + 1e-9
    assert criterion(12, ok, f"max ratio(t) / (exp(-lambda t) ratio(0)) = {worst:.12f}")


def test_criterion_13_bps_sweep(criterion, tmp_path, capsys):
    r = batch_bps_sweep(10_000, 4, 1, 0)
    out = tmp_path / "bps.json"
    code = main(["bps-sweep", "--count", "10000", "--out", str(out)])
    capsys.readouterr()
    artifact = json.loads(out.read_text())["result"]
    reported = f"{r['max_ratio']:.6f}" in README.read_text()
    ok = (code == 0 and np.isfinite(r["max_ratio"]) and artifact["max_ratio"] == r["max_ratio"]
          and reported)
    assert criterion(13, ok, f"{r['count']} pairs, max ratio {r['max_ratio']:.6f}, "
                             f"reported in README: {reported}")
