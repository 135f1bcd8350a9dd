"""Combinatorial horoballs over Z and Z^2 with truncated distances.

Vertices are pairs ``(v, n)`` where ``v`` is a tuple of integers and ``n >= 1``
is the level.  Levels are joined vertically; at level ``n`` two base points
are joined when their word distance is at most ``2**(n-1)``.

Three routes to the distance are provided:

* ``bfs_distance``: a hash-set breadth-first search on the implicit graph.
* ``multi_source_bfs_z``: an array BFS over Z running many sources at once,
  used for exhaustive sweeps.
* ``horoball_distance_fast``: a closed-form minimum over ascent heights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DepthOverflow, DimMismatch, TruncationTooShallow, VertexOutOfRange

_MAX_DEPTH = 62

GENERATORS = {
    "z": ((1,), (-1,)),
    "z2": ((1, 0), (-1, 0), (0, 1), (0, -1)),
}


@dataclass(frozen=True)
class BaseGroupBall:
    """Ball of radius ``radius`` in Z or Z^2 with the standard generators."""

    group: str
    radius: int

    def __post_init__(self):
        if self.group not in GENERATORS:
            raise DimMismatch(f"unknown base group {self.group!r}; use 'z' or 'z2'")
        if self.radius < 1:
            raise DimMismatch("radius must be positive")

    @property
    def rank(self) -> int:
        return 1 if self.group == "z" else 2

    @property
    def generators(self):
        return GENERATORS[self.group]

    @staticmethod
    def word_length(v) -> int:
        return sum(abs(int(x)) for x in v)

    def word_distance(self, v, w) -> int:
        return sum(abs(int(a) - int(b)) for a, b in zip(v, w))

    def contains(self, v) -> bool:
        return len(v) == self.rank and self.word_length(v) <= self.radius

    def elements(self):
        r = self.radius
        if self.rank == 1:
            return [(x,) for x in range(-r, r + 1)]
        return [(x, y) for x in range(-r, r + 1) for y in range(-(r - abs(x)), r - abs(x) + 1)]

    def sphere(self, center, radius: int):
        """Base points within ``radius`` of ``center`` that lie in the ball."""
        r = self.radius
        if self.rank == 1:
            c = center[0]
            lo, hi = max(-r, c - radius), min(r, c + radius)
            return [(x,) for x in range(lo, hi + 1)]
        cx, cy = center
        out = []
        for x in range(max(-r, cx - radius), min(r, cx + radius) + 1):
            span = radius - abs(x - cx)
            room = r - abs(x)
            for y in range(max(-room, cy - span), min(room, cy + span) + 1):
                out.append((x, y))
        return out

    def cayley_bfs_lengths(self) -> dict:
        """Word lengths by BFS on the Cayley graph restricted to the ball."""
        ident = (0,) * self.rank
        dist = {ident: 0}
        queue = deque([ident])
        while queue:
            v = queue.popleft()
            for g in self.generators:
                w = tuple(a + b for a, b in zip(v, g))
                if w not in dist and self.contains(w):
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist


@dataclass(frozen=True)
class HoroballGraph:
    base: BaseGroupBall
    depth: int

    def threshold(self, level: int) -> int:
        return 1 << (level - 1)

    def contains(self, vertex) -> bool:
        v, n = vertex
        return 1 <= n <= self.depth and self.base.contains(tuple(v))

    def _check(self, vertex):
        if not self.contains(vertex):
            raise VertexOutOfRange(f"vertex {vertex!r} is outside the truncated horoball")

    def horizontal_neighbors(self, vertex):
        v, n = vertex
        return [(w, n) for w in self.base.sphere(v, self.threshold(n)) if w != v]

    def neighbors(self, vertex):
        v, n = vertex
        out = []
        if n > 1:
            out.append((v, n - 1))
        if n < self.depth:
            out.append((v, n + 1))
        out.extend(self.horizontal_neighbors(vertex))
        return out

    def adjacent(self, x, y) -> bool:
        (v, n), (w, m) = x, y
        if v == w:
            return abs(n - m) == 1
        return n == m and self.base.word_distance(v, w) <= self.threshold(n)

    @cached_property
    def max_threshold(self) -> int:
        return self.threshold(self.depth)


def build_horoball(base: BaseGroupBall, depth: int) -> HoroballGraph:
    if depth < 1:
        raise DepthOverflow("depth must be at least 1")
    if depth - 1 > _MAX_DEPTH:
        raise DepthOverflow(f"2^(depth-1) exceeds 64-bit range at depth {depth}")
    return HoroballGraph(base, depth)


def _vertex(x):
    v, n = x
    return (tuple(int(c) for c in v), int(n))


@dataclass(frozen=True)
class BfsResult:
    distance: int
    may_be_overestimate: bool

    def __int__(self):
        return self.distance


def bfs_distance(H: HoroballGraph, u, v) -> BfsResult:
    """Exact distance in the truncated graph.

    ``may_be_overestimate`` is set when a vertex on the bottom of the
    truncation (level ``depth``) was reached strictly before the target, so a
    deeper graph could offer a shortcut.
    """
    u, v = _vertex(u), _vertex(v)
    H._check(u)
    H._check(v)
    if u == v:
        return BfsResult(0, False)
    dist = {u: 0}
    frontier = [u]
    touched = u[1] == H.depth
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            for y in H.neighbors(x):
                if y in dist:
                    continue
                dist[y] = d
                if y == v:
                    return BfsResult(d, touched)
                nxt.append(y)
        if any(y[1] == H.depth for y in nxt):
            touched = True
        frontier = nxt
    raise VertexOutOfRange("target unreachable")  # graph is connected; defensive


def _ascent_costs(L: int, n1: int, n2: int, top: int):
    lo = max(n1, n2)
    for M in range(lo, top + 1):
        h = -(-L // (1 << (M - 1)))
        yield M, 2 * M - n1 - n2 + h, h


def _top_level(H: HoroballGraph | None, L: int, n1: int, n2: int) -> int:
    if H is not None:
        return H.depth
    # beyond this height the horizontal count is already 1 and cost only grows
    return max(n1, n2, L.bit_length() + 1)


def horoball_distance_fast(H: HoroballGraph | None, u, v) -> int:
    """min over M of (2M - n - n') + ceil(L / 2^(M-1)), L the base word distance.

    With ``H`` the ascent is capped at the truncation depth; with ``H=None``
    the untruncated horoball is used.
    """
    (a, n1), (b, n2) = _vertex(u), _vertex(v)
    if H is not None:
        H._check((a, n1))
        H._check((b, n2))
    L = sum(abs(x - y) for x, y in zip(a, b))
    top = _top_level(H, L, n1, n2)
    return min(c for _, c, _ in _ascent_costs(L, n1, n2, top))


@dataclass(frozen=True)
class GeodesicShape:
    m_up: int
    h_horizontal: int
    m_down: int
    total: int
    path: tuple

    def as_dict(self) -> dict:
        return {"m_up": self.m_up, "h_horizontal": self.h_horizontal,
                "m_down": self.m_down, "total": self.total}


def _l1_waypoints(a, b, steps: int, stride: int):
    """Points along an L1 geodesic from a to b, at most ``stride`` apart.

    Moves toward the origin come first so intermediate points never leave
    the smallest L1 ball containing both ends.
    """
    moves = []
    for i, (x, y) in enumerate(zip(a, b)):
        if x == y:
            continue
        sgn = 1 if y > x else -1
        if x * y < 0 or (x != 0 and abs(y) < abs(x)):
            inward = min(abs(x), abs(x - y))
            moves.append((0, i, sgn, inward))
            if abs(x - y) > inward:
                moves.append((1, i, sgn, abs(x - y) - inward))
        else:
            moves.append((1, i, sgn, abs(x - y)))
    moves.sort(key=lambda m: m[0])
    unit = []
    for _, i, sgn, count in moves:
        unit.extend([(i, sgn)] * count)
    cur = list(a)
    pts = []
    pos = 0
    for _ in range(steps):
        for i, sgn in unit[pos:pos + stride]:
            cur[i] += sgn
        pos += stride
        pts.append(tuple(cur))
    return pts


def geodesic_shape(H: HoroballGraph, u, v) -> GeodesicShape:
    """Template path (up, at most three horizontal edges, down) of optimal length.

    The largest optimal ascent height is chosen, which forces at most three
    horizontal edges unless the truncation cuts the ascent short.
    """
    u, v = _vertex(u), _vertex(v)
    H._check(u)
    H._check(v)
    (a, n1), (b, n2) = u, v
    L = H.base.word_distance(a, b)
    best = None
    for M, cost, h in _ascent_costs(L, n1, n2, H.depth):
        if best is None or cost <= best[1]:
            best = (M, cost, h)
    M, cost, h = best
    if h > 3:
        raise TruncationTooShallow(f"optimal template needs {h} horizontal edges at depth {H.depth}")
    path = [(a, k) for k in range(n1, M + 1)]
    path += [(w, M) for w in _l1_waypoints(a, b, h, H.threshold(M))]
    path += [(b, k) for k in range(M - 1, n2 - 1, -1)]
    return GeodesicShape(M - n1, h, M - n2, cost, tuple(path))


def path_is_valid(H: HoroballGraph, path) -> bool:
    return all(H.contains(x) for x in path) and all(
        H.adjacent(x, y) for x, y in zip(path, path[1:]))


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Boolean dilation along the last axis by an interval of given radius."""
    W = mask.shape[-1]
    if radius >= W:
        return np.broadcast_to(mask.any(axis=-1, keepdims=True), mask.shape).copy()
    c = np.cumsum(mask, axis=-1, dtype=np.int32)
    c = np.concatenate([np.zeros(mask.shape[:-1] + (1,), dtype=np.int32), c], axis=-1)
    idx = np.arange(W)
    hi = np.minimum(idx + radius, W - 1) + 1
    lo = np.maximum(idx - radius, 0)
    return (c[..., hi] - c[..., lo]) > 0


def multi_source_bfs_z(radius: int, depth: int, sources, level: int):
    """BFS distances over the Z horoball from many sources at one level.

    Returns ``(dist, touched)``: ``dist[s, n-1, x + radius]`` is the truncated
    distance from ``(sources[s], level)`` to ``(x, n)``; ``touched[s, x]``
    marks targets at ``level`` reached no earlier than some bottom vertex.
    """
    W = 2 * radius + 1
    src = np.asarray(sources, dtype=np.int64) + radius
    S = len(src)
    dist = np.full((S, depth, W), -1, dtype=np.int32)
    visited = np.zeros((S, depth, W), dtype=bool)
    frontier = np.zeros_like(visited)
    frontier[np.arange(S), level - 1, src] = True
    visited |= frontier
    dist[frontier] = 0
    step = 0
    while frontier.any():
        step += 1
        nxt = np.zeros_like(frontier)
        nxt[:, 1:, :] |= frontier[:, :-1, :]
        nxt[:, :-1, :] |= frontier[:, 1:, :]
        for n in range(1, depth + 1):
            nxt[:, n - 1, :] |= _dilate(frontier[:, n - 1, :], 1 << (n - 1))
        nxt &= ~visited
        visited |= nxt
        dist[nxt] = step
        frontier = nxt
    bottom = dist[:, depth - 1, :]
    first_bottom = np.where(bottom >= 0, bottom, np.iinfo(np.int32).max).min(axis=1)
    touched = first_bottom[:, None] < dist[:, level - 1, :]
    return dist, touched


def fast_distance_array(L: np.ndarray, n1: int, n2: int, depth: int) -> np.ndarray:
    """Vectorised ``horoball_distance_fast`` over an array of base distances."""
    L = np.asarray(L, dtype=np.int64)
    best = None
    for M in range(max(n1, n2), depth + 1):
        cost = 2 * M - n1 - n2 + -(-L // (1 << (M - 1)))
        best = cost if best is None else np.minimum(best, cost)
    return best


def template_exists_array(L: np.ndarray, n: int, depth: int, target: np.ndarray) -> np.ndarray:
    """Whether a same-level template path of length ``target`` exists for each L."""
    L = np.asarray(L, dtype=np.int64)
    ok = np.zeros(L.shape, dtype=bool)
    for M in range(n, depth + 1):
        h = -(-L // (1 << (M - 1)))
        ok |= (h <= 3) & (2 * (M - n) + h == target)
    return ok


def z_sweep(radius: int = 1024, levels=(1, 2, 3, 4), depth: int | None = None,
            chunk: int = 128) -> dict:
    """Exhaustive same-level comparison of the array BFS against the fast routine.

    Every ordered pair of base points in [-radius, radius] is compared at each
    level.  Returns counts of pairs, mismatches, template failures and pairs
    flagged as possibly truncated.
    """
    if depth is None:
        depth = (2 * radius).bit_length() + 2
    W = 2 * radius + 1
    xs = np.arange(-radius, radius + 1)
    report = {"radius": radius, "depth": depth, "levels": list(levels), "pairs": 0,
              "mismatches": 0, "template_failures": 0, "flagged": 0, "max_distance": 0}
    for level in levels:
        for start in range(0, W, chunk):
            srcs = xs[start:start + chunk]
            dist, touched = multi_source_bfs_z(radius, depth, srcs, level)
            got = dist[:, level - 1, :]
            L = np.abs(srcs[:, None] - xs[None, :])
            fast = fast_distance_array(L, level, level, depth)
            report["pairs"] += got.size
            report["mismatches"] += int(np.count_nonzero(got != fast))
            report["template_failures"] += int(np.count_nonzero(
                ~template_exists_array(L, level, depth, got)))
            report["flagged"] += int(np.count_nonzero(touched))
            report["max_distance"] = max(report["max_distance"], int(got.max()))
    return report


def gm_lower_bound_table(k_max: int = 12, n_min: int = 1, depth: int | None = None):
    """Rows (k, n, lower_bound, distance) for (id, n) to (u(0, 2^k), n) over Z^2."""
    rows = []
    for k in range(n_min, k_max + 1):
        for n in range(n_min, k + 1):
            D = depth if depth is not None else k + 3
            H = build_horoball(BaseGroupBall("z2", 1 << k), D)
            d = horoball_distance_fast(H, ((0, 0), n), ((0, 1 << k), n))
            rows.append((k, n, 2 * k - 2 * n - 2, d))
    return rows


def sample_triples(H: HoroballGraph, count: int, rng: np.random.Generator):
    elems = H.base.elements()
    out = []
    for _ in range(count):
        trip = []
        for _ in range(3):
            v = elems[int(rng.integers(len(elems)))]
            trip.append((v, int(rng.integers(1, H.depth + 1))))
        out.append(tuple(trip))
    return out

