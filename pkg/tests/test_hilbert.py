import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anosovlab.errors import (
    ChartVanishes,
    InvalidDomain,
    NotOnBoundary,
    PointNotInterior,
)
from anosovlab.hilbert import (
    Ellipsoid,
    Polytope,
    ProjSegment,
    chord_endpoints,
    chords_interior,
    convex_hull_chart,
    cross_ratio,
    domain_from_json,
    dual_domain,
    hilbert_distance,
    klein_sphere_lifts,
    positivity_check,
    projectively_equal,
    same_projective_sets,
    segment_hausdorff_check,
    support_data,
    to_chart,
)
from anosovlab.matgeo import random_sl

seeds = st.integers(min_value=0, max_value=2**32 - 1)
BALL = Ellipsoid.klein_ball(3)
SQUARE = Polytope.unit_square()
CENTER = np.array([0.0, 0.0, 1.0])


def ball_point(rng, radius=0.95):
    x = rng.normal(size=2)
    x *= radius * np.sqrt(rng.uniform()) / np.linalg.norm(x)
    return np.append(x, 1.0)


def gift_wrap(points):
    """Jarvis march: indices of hull vertices in counter-clockwise order."""
    pts = np.asarray(points)
    start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    hull, cur = [], start
    while True:
        hull.append(cur)
        cand = (cur + 1) % len(pts)
        for j in range(len(pts)):
            a, b = pts[cand] - pts[cur], pts[j] - pts[cur]
            cross = a[0] * b[1] - a[1] * b[0]
            if cross < 0 or (cross == 0 and b @ b > a @ a):
                cand = j
        cur = cand
        if cur == start:
            return hull


def test_klein_center_example():
    d = hilbert_distance(BALL, CENTER, [0.5, 0.0, 1.0])
    assert d == pytest.approx(0.5 * np.log(3), abs=1e-15)
    assert hilbert_distance(BALL, [0.3, 0.1, 1.0], [0.3, 0.1, 1.0]) == 0


def test_square_against_explicit_cross_ratio():
    p, q = np.array([0.2, 0.5, 1.0]), np.array([0.8, 0.5, 1.0])
    a, b = np.array([0.0, 0.5, 1.0]), np.array([1.0, 0.5, 1.0])
    # affine parameters along y = 0.5: (q - a)(b - p) / ((p - a)(b - q))
    brute = 0.8 * 0.8 / (0.2 * 0.2)
    assert cross_ratio(a, p, q, b) == pytest.approx(brute)
    assert hilbert_distance(SQUARE, p, q) == pytest.approx(0.5 * np.log(brute))
    ea, eb = chord_endpoints(SQUARE, p, q)
    np.testing.assert_allclose(ea / ea[2], a, atol=1e-12)
    np.testing.assert_allclose(eb / eb[2], b, atol=1e-12)


def test_ellipsoid_chord_endpoints_on_boundary(rng):
    for _ in range(50):
        p, q = ball_point(rng), ball_point(rng)
        a, b = chord_endpoints(BALL, p, q)
        for x in (a, b):
            assert np.linalg.norm(x[:2] / x[2]) == pytest.approx(1.0, abs=1e-10)
        d = 0.5 * np.log(cross_ratio(a, p, q, b))
        assert d == pytest.approx(hilbert_distance(BALL, p, q), abs=1e-10)


def test_klein_beltrami_radial_formula(rng):
    for _ in range(1000):
        x = ball_point(rng, 0.99)
        want = np.arctanh(np.linalg.norm(x[:2]))
        assert hilbert_distance(BALL, CENTER, x) == pytest.approx(want, abs=1e-10)


def test_interior_required():
    with pytest.raises(PointNotInterior):
        hilbert_distance(BALL, CENTER, [1.5, 0.0, 1.0])
    with pytest.raises(PointNotInterior):
        hilbert_distance(SQUARE, [0.5, 0.5, 1.0], [0.0, 0.5, 1.0])


@given(seeds)
def test_projective_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_sl(3, rng)
    for dom in (BALL, Polytope.square()):
        p, q = ball_point(rng, 0.6), ball_point(rng, 0.6)
        moved = dom.transform(g)
        assert hilbert_distance(moved, g @ p, g @ q) == pytest.approx(
            hilbert_distance(dom, p, q), rel=1e-8, abs=1e-10)


@given(seeds)
def test_symmetry_and_triangle(seed):
    rng = np.random.default_rng(seed)
    for dom in (BALL, Polytope.square()):
        p, q, r = (ball_point(rng, 0.9) for _ in range(3))
        assert hilbert_distance(dom, p, q) == pytest.approx(hilbert_distance(dom, q, p), abs=1e-12)
        assert hilbert_distance(dom, p, r) <= hilbert_distance(dom, p, q) + hilbert_distance(dom, q, r) + 1e-9


@given(seeds, st.floats(0.05, 0.95))
def test_geodesic_additivity(seed, t):
    rng = np.random.default_rng(seed)
    for dom in (BALL, Polytope.square()):
        p, q = ball_point(rng, 0.9), ball_point(rng, 0.9)
        m = (1 - t) * p + t * q
        total = hilbert_distance(dom, p, m) + hilbert_distance(dom, m, q)
        assert total == pytest.approx(hilbert_distance(dom, p, q), abs=1e-9)


def test_pairwise_matches_scalar(rng):
    for dom in (BALL, Polytope.square()):
        A = np.array([ball_point(rng, 0.8) for _ in range(12)])
        B = np.array([ball_point(rng, 0.8) for _ in range(9)])
        want = np.array([[dom.distance(a, b) for b in B] for a in A])
        np.testing.assert_allclose(dom.pairwise(A, B), want, atol=1e-13)


def test_hausdorff_examples():
    p, q = np.array([-0.3, 0.1, 1.0]), np.array([0.4, 0.2, 1.0])
    r = segment_hausdorff_check(BALL, p, q, p, q)
    assert r["hausdorff_est"] == pytest.approx(0.0, abs=1e-12) and r["ok"]
    # parallel chords
    r = segment_hausdorff_check(BALL, [-0.5, 0, 1], [0.5, 0, 1], [-0.5, 0.2, 1], [0.5, 0.2, 1])
    assert r["ok"]
    # shared endpoint: the estimate stays below the other endpoint distance
    p2 = np.array([-0.2, -0.4, 1.0])
    r = segment_hausdorff_check(BALL, p, q, p2, q)
    assert r["bound"] == pytest.approx(hilbert_distance(BALL, p, p2))
    assert r["hausdorff_est"] <= r["bound"] + r["slack"]


def test_hausdorff_random_quadruples(rng):
    for dom in (BALL, Polytope.square()):
        for _ in range(200):
            assert segment_hausdorff_check(dom, *(ball_point(rng, 0.9) for _ in range(4)), samples=32)["ok"]


def test_proj_segment_samples_stay_inside(rng):
    seg = ProjSegment(ball_point(rng), ball_point(rng), BALL)
    assert all(BALL.contains(x) for x in seg.sample(64)[1:-1])


def test_dual_of_square_is_square():
    sq = Polytope.square()
    dual = dual_domain(sq)
    # facets x = +-1, y = +-1 of the square become the vertices (+-1, 0), (0, +-1)
    expected = np.array([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]], dtype=float)
    assert same_projective_sets(dual.vertices, expected, 1e-8)
    assert projectively_equal(dual_domain(dual), sq)


def test_dual_of_simplex_and_functoriality(rng):
    simplex = Polytope(np.eye(3), np.ones(3))
    assert len(dual_domain(simplex).vertices) == 3
    for _ in range(5):
        g = random_sl(3, rng)
        sq = Polytope.square()
        moved = dual_domain(sq.transform(g))
        # the dual of g Omega is g^-T applied to the dual of Omega
        want = dual_domain(sq).transform(np.linalg.inv(g).T)
        assert projectively_equal(moved, want, 1e-7)


def test_dual_involution_random_polygons(rng):
    for _ in range(10):
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=7))
        pts = np.column_stack([np.cos(ang), np.sin(ang), np.ones(7)])
        P = convex_hull_chart(pts, [0.0, 0.0, 1.0])
        assert projectively_equal(dual_domain(dual_domain(P)), P)


def test_invalid_polytopes():
    with pytest.raises(InvalidDomain):
        Polytope.from_affine([[1.0, 0.0]], [1.0])
    with pytest.raises(InvalidDomain):
        domain_from_json({"model": "torus"})


def test_hull_triangle_and_circle(rng):
    tri = np.array([[0, 0, 1], [1, 0, 1], [0, 1, 1], [0.2, 0.2, 1]], dtype=float)
    P = convex_hull_chart(tri, [0, 0, 1.0])
    assert same_projective_sets(P.vertices, tri[:3])
    ang = rng.uniform(0, 2 * np.pi, size=40)
    circle = np.column_stack([np.cos(ang), np.sin(ang), np.ones(40)])
    inner = np.column_stack([0.5 * rng.uniform(-1, 1, (20, 2)), np.ones(20)])
    cloud = np.vstack([circle, inner])
    hull = convex_hull_chart(cloud, [0, 0, 1.0])
    oracle = cloud[gift_wrap(cloud[:, :2])]
    assert same_projective_sets(hull.vertices, oracle)


def test_hull_equivariance(rng):
    cloud = np.column_stack([rng.uniform(-1, 1, (30, 2)), np.ones(30)])
    for _ in range(5):
        g = random_sl(3, rng)
        gX = cloud @ g.T
        chart = np.linalg.inv(g).T @ np.array([0, 0, 1.0])
        a = convex_hull_chart(gX, chart)
        b = convex_hull_chart(cloud, [0, 0, 1.0])
        assert same_projective_sets(a.vertices, b.vertices @ g.T, 1e-7)


def test_hull_rejects_vanishing_chart():
    with pytest.raises(ChartVanishes):
        convex_hull_chart(np.array([[1, 0, 0], [0, 1, 1], [1, 1, 1]], dtype=float), [0, 0, 1.0])
    with pytest.raises(ChartVanishes):
        to_chart([[1.0, 0.0, 0.0]], [0, 0, 1.0])


def test_support_data_examples(rng):
    f = support_data(BALL, [1.0, 0.0, 1.0])
    np.testing.assert_allclose(f, np.array([-1.0, 0.0, 1.0]) / np.sqrt(2))
    with pytest.raises(NotOnBoundary):
        support_data(BALL, CENTER)
    # rotated ellipsoid: gradient of the quadratic form
    E = Ellipsoid.from_center_shape([0.2, -0.1], [[2.0, 0.3], [0.3, 0.5]])
    for _ in range(10):
        p = np.linalg.solve(E.to_ball, np.append(ball_point(rng, 0.5)[:2], 1.0))
        a, _ = chord_endpoints(E, p, E.center())
        f = support_data(E, a)
        g = E.form @ a
        assert abs(abs(f @ g) - np.linalg.norm(g)) < 1e-9 * np.linalg.norm(g)
        assert f @ E.center() > 0


def test_support_is_limit_of_secants():
    x = np.array([np.cos(0.7), np.sin(0.7), 1.0])
    f = support_data(BALL, x)
    for h in (1e-2, 1e-3, 1e-4):
        y = np.array([np.cos(0.7 + h), np.sin(0.7 + h), 1.0])
        secant = np.cross(x, y)
        secant /= np.linalg.norm(secant)
        err = min(np.linalg.norm(secant - f), np.linalg.norm(secant + f))
        assert err < 2 * h


def test_chords_interior():
    assert chords_interior(BALL, [1, 0, 1], [0, 1, 1]) is True
    assert chords_interior(SQUARE, [0, 0.5, 1], [1, 0.5, 1]) == "unknown"


def test_positivity_check():
    lifts = klein_sphere_lifts(30, seed=4)
    assert positivity_check(lifts)["ok"]
    x, f = lifts[0]
    flipped = [(-x, f)] + lifts[1:]
    assert not positivity_check(flipped)["ok"]
    # the diagonal pairing f(x) for the same index is never used
    r = positivity_check(lifts[:1])
    assert r["ok"]


def test_domain_json_roundtrip(rng):
    E = Ellipsoid.from_center_shape([0.1, 0.0], [[1.0, 0.2], [0.2, 0.7]])
    F = domain_from_json(E.to_json())
    p, q = E.center(), np.linalg.solve(E.to_ball, np.array([0.3, 0.2, 1.0]))
    assert hilbert_distance(F, p, q) == pytest.approx(hilbert_distance(E, p, q))
    S = domain_from_json(Polytope.square().to_json())
    assert projectively_equal(S, Polytope.square())
