import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anosovlab.cuspgraph import (
    BaseGroupBall,
    bfs_distance,
    build_horoball,
    fast_distance_array,
    geodesic_shape,
    gm_lower_bound_table,
    horoball_distance_fast,
    multi_source_bfs_z,
    path_is_valid,
    sample_triples,
    z_sweep,
)
from anosovlab.errors import DepthOverflow, DimMismatch, TruncationTooShallow, VertexOutOfRange

Z16 = build_horoball(BaseGroupBall("z", 64), 9)
Z2 = build_horoball(BaseGroupBall("z2", 12), 6)


def test_horizontal_neighbours_example():
    H = build_horoball(BaseGroupBall("z", 4), 2)
    assert sorted(H.horizontal_neighbors(((0,), 2))) == [((-2,), 2), ((-1,), 2), ((1,), 2), ((2,), 2)]
    H1 = build_horoball(BaseGroupBall("z", 4), 1)
    assert sorted(H1.neighbors(((0,), 1))) == [((-1,), 1), ((1,), 1)]


def test_neighbour_sets_symmetric():
    for H in (build_horoball(BaseGroupBall("z", 10), 4), build_horoball(BaseGroupBall("z2", 5), 3)):
        for v in H.base.elements():
            for n in range(1, H.depth + 1):
                for w in H.neighbors((v, n)):
                    assert (v, n) in H.neighbors(w)
                    assert H.adjacent((v, n), w)


def test_vertical_edges_always_present():
    for n in range(1, Z2.depth):
        assert ((3, -2), n + 1) in Z2.neighbors(((3, -2), n))


@pytest.mark.parametrize("radius", [1, 5, 17, 64])
def test_word_length_matches_cayley_bfs(radius):
    for group in ("z", "z2"):
        ball = BaseGroupBall(group, radius)
        lengths = ball.cayley_bfs_lengths()
        assert lengths[(0,) * ball.rank] == 0
        assert set(lengths) == set(ball.elements())
        assert all(ball.word_length(v) == d for v, d in lengths.items())


def test_generators_symmetric():
    for group in ("z", "z2"):
        gens = set(BaseGroupBall(group, 3).generators)
        assert {tuple(-c for c in g) for g in gens} == gens


def test_bfs_examples():
    assert bfs_distance(Z16, ((0,), 1), ((0,), 1)).distance == 0
    assert bfs_distance(Z16, ((0,), 1), ((1,), 1)).distance == 1
    r = bfs_distance(Z16, ((0,), 1), ((16,), 1))
    assert 4 <= r.distance <= 12
    assert not r.may_be_overestimate


def test_fast_examples():
    assert horoball_distance_fast(Z16, ((0,), 1), ((0,), 5)) == 4
    for n in range(2, 6):
        H = build_horoball(BaseGroupBall("z2", 1 << n), n + 2)
        assert horoball_distance_fast(H, ((0, 0), n), ((1 << (n - 1), 0), n)) == 1
    for k in range(1, 8):
        H = build_horoball(BaseGroupBall("z2", 1 << k), k + 3)
        for n in range(1, k + 1):
            assert horoball_distance_fast(H, ((0, 0), n), ((0, 1 << k), n)) >= 2 * k - 2 * n - 2


def test_fast_equals_bfs_on_samples(rng):
    for H in (Z16, Z2):
        for u, v, _ in sample_triples(H, 60, rng):
            r = bfs_distance(H, u, v)
            assert horoball_distance_fast(H, u, v) == r.distance


def test_untruncated_fast_agrees_when_deep_enough():
    for L in range(0, 64):
        assert horoball_distance_fast(None, ((0,), 1), ((L,), 1)) == horoball_distance_fast(
            Z16, ((0,), 1), ((L,), 1))


def test_metric_on_sampled_triples(rng):
    for H in (Z16, Z2):
        for a, b, c in sample_triples(H, 400, rng):
            dab = horoball_distance_fast(H, a, b)
            assert dab == horoball_distance_fast(H, b, a)
            assert (dab == 0) == (a == b)
            assert horoball_distance_fast(H, a, c) <= dab + horoball_distance_fast(H, b, c)


@given(st.integers(-64, 64))
def test_monotone_in_level(g):
    values = [horoball_distance_fast(Z16, ((0,), n), ((g,), n)) for n in range(1, Z16.depth + 1)]
    assert all(x >= y for x, y in zip(values, values[1:]))


def test_geodesic_shape_examples():
    s = geodesic_shape(Z16, ((0,), 2), ((1,), 2))
    assert (s.m_up, s.h_horizontal, s.m_down) == (0, 1, 0)
    s = geodesic_shape(Z16, ((5,), 1), ((5,), 4))
    assert (s.m_up, s.h_horizontal, s.m_down) == (3, 0, 0)
    s = geodesic_shape(Z16, ((-30,), 1), ((31,), 1))
    assert s.m_up == s.m_down and s.h_horizontal <= 3


def test_geodesic_shape_paths_valid_and_optimal(rng):
    for H in (Z16, Z2):
        for u, v, _ in sample_triples(H, 200, rng):
            s = geodesic_shape(H, u, v)
            assert path_is_valid(H, s.path)
            assert len(s.path) - 1 == s.total == horoball_distance_fast(H, u, v)
            assert s.h_horizontal <= 3


def test_geodesic_shape_truncation():
    shallow = build_horoball(BaseGroupBall("z", 64), 2)
    with pytest.raises(TruncationTooShallow):
        geodesic_shape(shallow, ((-32,), 1), ((32,), 1))


def test_truncation_flag_is_honest():
    shallow = build_horoball(BaseGroupBall("z", 64), 3)
    r = bfs_distance(shallow, ((-30,), 1), ((30,), 1))
    assert r.may_be_overestimate
    assert r.distance > horoball_distance_fast(None, ((-30,), 1), ((30,), 1))


def test_multi_source_matches_hash_bfs():
    H = build_horoball(BaseGroupBall("z", 20), 5)
    srcs = [-20, -3, 0, 7, 20]
    for level in (1, 3):
        dist, _ = multi_source_bfs_z(20, 5, srcs, level)
        for i, s in enumerate(srcs):
            for x in range(-20, 21, 3):
                for n in (1, 2, 5):
                    want = bfs_distance(H, ((s,), level), ((x,), n)).distance
                    assert dist[i, n - 1, x + 20] == want


def test_small_sweep_has_no_mismatch():
    rep = z_sweep(radius=64, levels=(1, 2, 3, 4))
    assert rep["pairs"] == 4 * 129 ** 2
    assert rep["mismatches"] == rep["template_failures"] == 0
    # flagged pairs are only possible overestimates; the depth makes them exact
    L = np.arange(0, 129)
    for level in (1, 2, 3, 4):
        want = [horoball_distance_fast(None, ((0,), level), ((int(x),), level)) for x in L]
        assert fast_distance_array(L, level, level, rep["depth"]).tolist() == want


def test_fast_distance_array_vectorises():
    L = np.arange(0, 300)
    got = fast_distance_array(L, 2, 3, 12)
    H = build_horoball(BaseGroupBall("z", 300), 12)
    want = [horoball_distance_fast(H, ((0,), 2), ((int(x),), 3)) for x in L]
    assert got.tolist() == want


def test_lower_bound_table():
    rows = gm_lower_bound_table(12)
    assert len(rows) == 12 * 13 // 2
    for k, n, lower, d in rows:
        assert lower == 2 * k - 2 * n - 2
        assert d >= lower
        # the Z^2 distance is exact: up k-n+1, two horizontal hops, down
        assert d == 2 * k - 2 * n + 2
    assert all(n >= 3 for _, n, _, _ in gm_lower_bound_table(6, n_min=3))


def test_errors():
    with pytest.raises(DepthOverflow):
        build_horoball(BaseGroupBall("z", 4), 0)
    with pytest.raises(DepthOverflow):
        build_horoball(BaseGroupBall("z", 4), 80)
    with pytest.raises(DimMismatch):
        BaseGroupBall("f2", 3)
    with pytest.raises(VertexOutOfRange):
        bfs_distance(Z16, ((0,), 1), ((100,), 1))
    with pytest.raises(VertexOutOfRange):
        bfs_distance(Z16, ((0,), 0), ((1,), 1))
