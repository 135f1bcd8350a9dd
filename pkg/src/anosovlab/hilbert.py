"""Hilbert geometry of properly convex domains in P(R^d).

Two domain models are supported:

* ``Ellipsoid`` -- the projective image of the round ball, stored by a map
  ``to_ball`` sending it onto the Klein ball {|y| < 1} in the chart x_d = 1.
* ``Polytope`` -- the projectivisation of the open cone {x : h_i(x) > 0},
  together with a chart functional that is positive on that cone.

Distances use closed forms: the Klein-model formula for ellipsoids and
max/min ratios of facet values for polytopes.  Neither needs a root finder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    ChartVanishes,
    DimMismatch,
    InvalidDomain,
    LineBoundaryIntersectionFailure,
    NotOnBoundary,
    PointNotInterior,
    UnboundedDual,
)
from .flagdyn import ProjPoint

INTERIOR_MARGIN = 1e-9


def _vec(p) -> np.ndarray:
    if isinstance(p, ProjPoint):
        return np.asarray(p.vector, dtype=float)
    v = np.asarray(p, dtype=float).ravel()
    if not np.any(v):
        raise DimMismatch("zero vector has no projective class")
    return v


def projective_key(v: np.ndarray) -> np.ndarray:
    """Unit representative with the largest-modulus coordinate positive."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    i = int(np.argmax(np.abs(v)))
    return v if v[i] > 0 else -v


def chart_basis(chart: np.ndarray):
    """(x0, B): x0 with chart(x0) = 1 and an orthonormal basis B of ker(chart)."""
    f = np.asarray(chart, dtype=float)
    if not np.any(f):
        raise ChartVanishes("chart functional is zero")
    x0 = f / np.dot(f, f)
    B = scipy.linalg.null_space(f[None, :])
    return x0, B


def to_chart(points, chart) -> np.ndarray:
    """Affine coordinates of homogeneous points in the chart {chart = 1}."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(chart, dtype=float)
    vals = X @ f
    if np.any(np.abs(vals) <= 1e-14 * np.linalg.norm(X, axis=1) * np.linalg.norm(f)):
        raise ChartVanishes("a point lies on the hyperplane at infinity of the chart")
    x0, B = chart_basis(f)
    Xn = X / vals[:, None]
    return (Xn - x0) @ B


def from_chart(coords, chart) -> np.ndarray:
    x0, B = chart_basis(chart)
    Y = np.atleast_2d(np.asarray(coords, dtype=float))
    return x0 + Y @ B.T


class ConvexDomain:
    """Common interface of the domain models."""

    dim: int

    def contains(self, p, margin: float = INTERIOR_MARGIN) -> bool:
        raise NotImplementedError

    def chord_parameters(self, p, q):
        raise NotImplementedError

    def transform(self, g) -> "ConvexDomain":
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def _require_interior(self, *points):
        for x in points:
            if not self.contains(x):
                raise PointNotInterior(f"point {np.round(_vec(x), 6).tolist()} is not interior")


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexDomain):
    """Projective ellipsoid given by a map onto the Klein ball.

    ``to_ball`` is a d x d invertible matrix M; the domain is
    {[x] : |(Mx)_{<d}| < |(Mx)_d|}.
    """

    to_ball: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.to_ball, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise DimMismatch("ellipsoid map must be a square matrix of size >= 2")
        if abs(np.linalg.det(m)) < 1e-300:
            raise InvalidDomain("ellipsoid map is singular")
        m.setflags(write=False)
        object.__setattr__(self, "to_ball", m)

    @classmethod
    def from_center_shape(cls, center, shape) -> "Ellipsoid":
        """{y : (y - c)^T A (y - c) < 1} in the standard chart x_d = 1."""
        c = np.asarray(center, dtype=float).ravel()
        A = np.asarray(shape, dtype=float)
        n = c.size
        if A.shape != (n, n):
            raise DimMismatch("shape matrix does not match center")
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise InvalidDomain("shape matrix is not positive definite") from exc
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = L.T
        M[:n, n] = -L.T @ c
        M[n, n] = 1.0
        return cls(M)

    @classmethod
    def klein_ball(cls, d: int) -> "Ellipsoid":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.to_ball.shape[0]

    @cached_property
    def form(self) -> np.ndarray:
        """Quadratic form negative exactly on the domain."""
        J = np.eye(self.dim)
        J[-1, -1] = -1.0
        return self.to_ball.T @ J @ self.to_ball

    def ball_coords(self, p) -> np.ndarray:
        w = self.to_ball @ _vec(p)
        if w[-1] == 0:
            raise PointNotInterior("point lies at infinity of the ball chart")
        return w[:-1] / w[-1]

    def contains(self, p, margin: float = INTERIOR_MARGIN) -> bool:
        w = self.to_ball @ _vec(p)
        if w[-1] == 0:
            return False
        return bool(np.linalg.norm(w[:-1] / w[-1]) < 1.0 - margin)

    def center(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[-1] = 1.0
        return np.linalg.solve(self.to_ball, e)

    def transform(self, g) -> "Ellipsoid":
        return Ellipsoid(self.to_ball @ np.linalg.inv(np.asarray(g, dtype=float)))

    def chord_parameters(self, p, q):
        """Roots s of Q(p + s q) = 0 for the chord through p and q.

        Returns (s_a, s_b) with a = p + s_a q adjacent to p and b = p + s_b q
        adjacent to q, so that [a, p, q, b] = s_b / s_a.
        """
        Q = self.form
        pv, qv = _vec(p), _vec(q)
        qp, qq, bpq = pv @ Q @ pv, qv @ Q @ qv, pv @ Q @ qv
        disc = bpq * bpq - qp * qq
        if qp >= 0 or qq >= 0 or disc <= 0:
            raise LineBoundaryIntersectionFailure("line does not cross the ellipsoid in two points")
        # qp, qq < 0; with bpq < 0 both roots are negative.
        if bpq > 0:
            qv = -qv
            bpq = -bpq
        r = np.sqrt(disc)
        s_far = (-bpq + r) / qq
        s_near = qp / (qq * s_far)
        return float(s_near), float(s_far), pv, qv

    def distance(self, p, q) -> float:
        x, y = self.ball_coords(p), self.ball_coords(q)
        delta = y - x
        n = x.size
        wedge = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                w = x[i] * delta[j] - x[j] * delta[i]
                wedge += w * w
        num = np.dot(delta, delta) - wedge
        den = (1.0 - np.dot(x, x)) * (1.0 - np.dot(y, y))
        return float(np.arcsinh(np.sqrt(max(num, 0.0) / den)))

    def pairwise(self, A, B) -> np.ndarray:
        """Distance matrix between two point lists (rows are homogeneous vectors)."""
        W = np.asarray(A, dtype=float) @ self.to_ball.T
        V = np.asarray(B, dtype=float) @ self.to_ball.T
        x = W[:, :-1] / W[:, -1:]
        y = V[:, :-1] / V[:, -1:]
        delta = y[None, :, :] - x[:, None, :]
        xx = np.einsum("ij,ij->i", x, x)[:, None]
        yy = np.einsum("ij,ij->i", y, y)[None, :]
        dd = np.einsum("ijk,ijk->ij", delta, delta)
        xd = np.einsum("ik,ijk->ij", x, delta)
        # |delta|^2 - |x ^ delta|^2 = |delta|^2 (1 - |x|^2) + (x . delta)^2
        num = dd * (1.0 - xx) + xd * xd
        return np.arcsinh(np.sqrt(np.maximum(num, 0.0) / ((1.0 - xx) * (1.0 - yy))))

    def to_json(self) -> dict:
        return {"model": "ellipsoid", "dim": self.dim, "to_ball": self.to_ball.tolist()}


def _cheb_center(A: np.ndarray, b: np.ndarray):
    """Chebyshev center of {y : A y <= b}; returns (center, radius)."""
    norms = np.linalg.norm(A, axis=1)
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b,
                  bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status == 3:
        return None, np.inf
    if res.status != 0:
        raise InvalidDomain(f"Chebyshev-center LP failed: {res.message}")
    return res.x[:n], float(res.x[-1])


@dataclass(frozen=True, eq=False)
class Polytope(ConvexDomain):
    """P({x : h_i(x) > 0 for all i}) with a chart functional positive on the cone."""

    halfspaces: np.ndarray
    chart: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.halfspaces, dtype=float))
        f = np.asarray(self.chart, dtype=float).ravel()
        if H.shape[1] != f.size:
            raise DimMismatch("halfspace covectors and chart have different lengths")
        if f.size < 3:
            raise DimMismatch("polytope domains need d >= 3")
        H = H / np.linalg.norm(H, axis=1)[:, None]
        H.setflags(write=False)
        f = f / np.linalg.norm(f)
        f.setflags(write=False)
        object.__setattr__(self, "halfspaces", H)
        object.__setattr__(self, "chart", f)
        A, b = self._affine_system()
        center, radius = _cheb_center(A, b)
        if center is None or not np.isfinite(radius):
            raise InvalidDomain("polytope is unbounded in its chart")
        if radius <= 1e-9:
            raise InvalidDomain("polytope has empty interior")
        n = A.shape[1]
        for i in range(n):
            for sgn in (1.0, -1.0):
                c = np.zeros(n)
                c[i] = sgn
                res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
                if res.status == 3:
                    raise InvalidDomain("polytope is unbounded in its chart")
        self._cache["center_affine"] = center
        self._cache["radius"] = radius

    def _affine_system(self):
        x0, B = chart_basis(self.chart)
        # h(x0 + B y) >= 0  <=>  -(h B) y <= h(x0)
        return -(self.halfspaces @ B), self.halfspaces @ x0

    @classmethod
    def from_affine(cls, A, b) -> "Polytope":
        """{y : A y <= b} in the standard chart x_d = 1."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        H = np.hstack([-A, b[:, None]])
        f = np.zeros(A.shape[1] + 1)
        f[-1] = 1.0
        return cls(H, f)

    @classmethod
    def square(cls, half_width: float = 1.0) -> "Polytope":
        A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
        return cls.from_affine(A, np.full(4, half_width))

    @classmethod
    def unit_square(cls) -> "Polytope":
        A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
        return cls.from_affine(A, np.array([1.0, 0, 1, 0]))

    @property
    def dim(self) -> int:
        return self.chart.size

    def _lift(self, p) -> np.ndarray:
        v = _vec(p)
        fv = v @ self.chart
        if fv == 0:
            raise PointNotInterior("point lies at infinity of the chart")
        return v if fv > 0 else -v

    def contains(self, p, margin: float = INTERIOR_MARGIN) -> bool:
        v = _vec(p)
        fv = v @ self.chart
        if fv == 0:
            return False
        v = v / fv
        vals = self.halfspaces @ v
        return bool(np.all(vals > margin * max(1.0, np.linalg.norm(v))))

    def center(self) -> np.ndarray:
        return from_chart(self._cache["center_affine"], self.chart)[0]

    @property
    def chebyshev_radius(self) -> float:
        return self._cache["radius"]

    def transform(self, g) -> "Polytope":
        gi = np.linalg.inv(np.asarray(g, dtype=float))
        return Polytope(self.halfspaces @ gi, self.chart @ gi)

    def chord_parameters(self, p, q):
        pv, qv = self._lift(p), self._lift(q)
        hp, hq = self.halfspaces @ pv, self.halfspaces @ qv
        if np.any(hp <= 0) or np.any(hq <= 0):
            raise PointNotInterior("chord endpoints must be interior")
        ratios = hp / hq
        return float(-ratios.min()), float(-ratios.max()), pv, qv

    def distance(self, p, q) -> float:
        pv, qv = self._lift(p), self._lift(q)
        ratios = (self.halfspaces @ pv) / (self.halfspaces @ qv)
        return float(0.5 * (np.log(ratios.max()) - np.log(ratios.min())))

    def pairwise(self, A, B) -> np.ndarray:
        """Distance matrix between two point lists (rows are homogeneous vectors)."""
        def logh(P):
            P = np.asarray(P, dtype=float)
            P = P * np.sign(P @ self.chart)[:, None]
            return np.log(P @ self.halfspaces.T)

        r = logh(A)[:, None, :] - logh(B)[None, :, :]
        return 0.5 * (r.max(axis=2) - r.min(axis=2))

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertices as homogeneous vectors with chart value 1."""
        A, b = self._affine_system()
        hs = np.hstack([A, -b[:, None]])
        hi = HalfspaceIntersection(hs, self._cache["center_affine"])
        pts = hi.intersections
        hull = ConvexHull(pts)
        pts = pts[np.sort(hull.vertices)]
        return from_chart(pts, self.chart)

    def to_json(self) -> dict:
        return {"model": "polytope", "dim": self.dim, "chart": self.chart.tolist(),
                "halfspaces": self.halfspaces.tolist()}


def domain_from_json(obj) -> ConvexDomain:
    if isinstance(obj, str):
        obj = json.loads(obj)
    model = obj.get("model")
    if model == "ellipsoid":
        if "to_ball" in obj:
            return Ellipsoid(np.array(obj["to_ball"], dtype=float))
        return Ellipsoid.from_center_shape(obj["center"], obj["shape"])
    if model == "klein_ball":
        return Ellipsoid.klein_ball(int(obj["dim"]))
    if model == "polytope":
        if "halfspaces" in obj:
            return Polytope(np.array(obj["halfspaces"]), np.array(obj["chart"]))
        return Polytope.from_affine(obj["A"], obj["b"])
    raise InvalidDomain(f"unknown domain model {model!r}")


def cross_ratio(a, p, q, b) -> float:
    """[a, p, q, b] for four collinear points, from 2x2 minors.

    With affine parameters this is (q - a)(b - p) / ((p - a)(b - q)).
    """
    A = np.column_stack([_vec(p), _vec(q)])
    coords = [np.linalg.lstsq(A, _vec(x), rcond=None)[0] for x in (a, p, q, b)]
    ca, cp, cq, cb = coords

    def det(u, v):
        return u[0] * v[1] - u[1] * v[0]

    return float(det(cq, ca) * det(cb, cp) / (det(cp, ca) * det(cb, cq)))


def chord_endpoints(domain: ConvexDomain, p, q):
    """Boundary points (a, b) of the chord through p, q, ordered a, p, q, b."""
    domain._require_interior(p, q)
    s_a, s_b, pv, qv = domain.chord_parameters(p, q)
    return pv + s_a * qv, pv + s_b * qv


def hilbert_distance(domain: ConvexDomain, p, q) -> float:
    """Half the log of the cross ratio [a, p, q, b]; zero when p = q."""
    domain._require_interior(p, q)
    if isinstance(domain, (Ellipsoid, Polytope)):
        return domain.distance(p, q)
    s_a, s_b, _, _ = domain.chord_parameters(p, q)
    return float(0.5 * np.log(s_b / s_a))


def segment_points(p, q, samples: int, chart=None) -> np.ndarray:
    """Evenly spaced points of the segment [p, q] in an affine chart."""
    pv, qv = _vec(p), _vec(q)
    if chart is None:
        chart = pv / np.dot(pv, pv) + qv / np.dot(qv, qv)
    fp, fq = pv @ chart, qv @ chart
    if fp == 0 or fq == 0:
        raise ChartVanishes("segment endpoint at infinity of the chart")
    pv, qv = pv / fp, qv / fq
    t = np.linspace(0.0, 1.0, samples)[:, None]
    return (1 - t) * pv + t * qv


@dataclass(frozen=True, eq=False)
class ProjSegment:
    p: np.ndarray
    q: np.ndarray
    domain: ConvexDomain

    def __post_init__(self):
        pts = segment_points(self.p, self.q, 66, getattr(self.domain, "chart", None))
        for x in pts[1:-1]:
            if not self.domain.contains(x, margin=0.0):
                raise PointNotInterior("open segment leaves the domain")

    def sample(self, n: int) -> np.ndarray:
        return segment_points(self.p, self.q, n, getattr(self.domain, "chart", None))


def _pairwise_distances(domain: ConvexDomain, A, B) -> np.ndarray:
    if hasattr(domain, "pairwise"):
        return domain.pairwise(A, B)
    return np.array([[domain.distance(a, b) for b in B] for a in A])


def segment_hausdorff_check(domain: ConvexDomain, p1, q1, p2, q2, samples: int = 64) -> dict:
    """Sampled Hausdorff distance of two segments against the endpoint bound.

    The slack is twice the largest Hilbert length of one sampling cell on
    either segment; sampling can only inflate the estimate by that much.
    """
    domain._require_interior(p1, q1, p2, q2)
    chart = getattr(domain, "chart", None)
    S1 = segment_points(p1, q1, samples, chart)
    S2 = segment_points(p2, q2, samples, chart)
    D = _pairwise_distances(domain, S1, S2)
    est = float(max(D.min(axis=1).max(), D.min(axis=0).max()))
    cell = max(max(domain.distance(S[i], S[i + 1]) for i in range(samples - 1)) for S in (S1, S2))
    bound = max(domain.distance(p1, p2), domain.distance(q1, q2))
    slack = 2.0 * cell
    return {"hausdorff_est": est, "bound": float(bound), "slack": float(slack),
            "ok": bool(est <= bound + slack)}


def dual_domain(domain: Polytope) -> Polytope:
    """Polar dual: covectors positive on the closed cone over the domain.

    Facets of the dual are the vertices of the domain; the dual chart is the
    Chebyshev center, which is positive on every dual covector.
    """
    if not isinstance(domain, Polytope):
        raise InvalidDomain("dual_domain needs a polytope")
    try:
        V = domain.vertices
        c = domain.center()
        return Polytope(V, c)
    except InvalidDomain as exc:
        raise UnboundedDual(str(exc)) from exc


def same_projective_sets(X, Y, tol: float = 1e-8) -> bool:
    X = np.array([projective_key(v) for v in np.atleast_2d(X)])
    Y = np.array([projective_key(v) for v in np.atleast_2d(Y)])
    if X.shape != Y.shape:
        return False
    used = np.zeros(len(Y), dtype=bool)
    for x in X:
        d = np.linalg.norm(Y - x, axis=1)
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        used[j] = True
    return True


def projectively_equal(P1: Polytope, P2: Polytope, tol: float = 1e-8) -> bool:
    return same_projective_sets(P1.vertices, P2.vertices, tol)


def _hull_in_chart(X: np.ndarray, chart: np.ndarray):
    Y = to_chart(X, chart)
    hull = ConvexHull(Y)
    verts = X[np.sort(hull.vertices)]
    x0, B = chart_basis(chart)
    covs = []
    for eq in hull.equations:
        nrm, off = eq[:-1], eq[-1]
        # n . B^T (x - x0) + off <= 0 on the chart, written as h(x) >= 0
        h = -(B @ nrm + (off - nrm @ (B.T @ x0)) * np.asarray(chart, dtype=float))
        covs.append(h)
    return verts, np.array(covs)


def convex_hull_chart(X, chart, second_chart=None, tol: float = 1e-7) -> Polytope:
    """Convex hull of a point cloud computed in the affine chart {chart != 0}.

    The hull is recomputed in a second chart positive on the same lifts and
    the two vertex sets must agree; a mismatch raises ``ChartVanishes``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(chart, dtype=float).ravel()
    vals = X @ f
    if np.any(np.abs(vals) <= 1e-12 * np.linalg.norm(X, axis=1) * np.linalg.norm(f)):
        raise ChartVanishes("chart vanishes on a point of the cloud")
    lifts = X / vals[:, None]
    verts, covs = _hull_in_chart(lifts, f)
    if second_chart is None:
        rng = np.random.default_rng(0)
        pert = rng.normal(size=f.size)
        pv = lifts @ pert
        # keep the perturbed chart positive on every lift
        scale = 0.5 / max(np.max(np.abs(pv)) * np.dot(f, f), 1e-300)
        second_chart = f / np.dot(f, f) + scale * pert
    f2 = np.asarray(second_chart, dtype=float)
    if np.any(lifts @ f2 <= 0):
        raise ChartVanishes("second chart is not positive on the lifted cloud")
    verts2, _ = _hull_in_chart(lifts, f2)
    if not same_projective_sets(verts, verts2, tol):
        raise ChartVanishes("hull depends on the chart; the cloud does not lie in a common chart")
    poly = Polytope(covs, f)
    poly._cache["hull_vertices"] = verts
    return poly


def support_data(domain: Ellipsoid, x, tol: float = 1e-9) -> np.ndarray:
    """Unit covector of the tangent hyperplane at a boundary point, positive on the domain."""
    if not isinstance(domain, Ellipsoid):
        raise InvalidDomain("support_data is implemented for ellipsoids")
    v = _vec(x)
    y = domain.ball_coords(v)
    if abs(np.linalg.norm(y) - 1.0) > tol:
        raise NotOnBoundary(f"point is at ball radius {np.linalg.norm(y)!r}")
    f = domain.form @ v
    f = f / np.linalg.norm(f)
    c = domain.center()
    fc = f @ c
    if abs(fc) <= 1e-12 * np.linalg.norm(c):
        raise NotOnBoundary("tangent hyperplane passes through the center")
    return f if fc > 0 else -f


def chords_interior(domain: ConvexDomain, x, y):
    """Whether the open chord between two boundary points lies in the domain.

    Ellipsoids are strictly convex with C^1 boundary, so the answer is
    ``True`` for distinct points.  Polytopes report ``"unknown"``.
    """
    if isinstance(domain, Ellipsoid):
        xv, yv = projective_key(_vec(x)), projective_key(_vec(y))
        return bool(min(np.linalg.norm(xv - yv), np.linalg.norm(xv + yv)) > 1e-12)
    return "unknown"


def positivity_check(pairs) -> dict:
    """Minimum of f_j(x_i) over ordered pairs i != j of lifted (point, covector) pairs."""
    if len(pairs) < 2:
        return {"min_pairing": float("inf"), "ok": True}
    X = np.array([np.asarray(p[0], dtype=float) for p in pairs])
    F = np.array([np.asarray(p[1], dtype=float) for p in pairs])
    M = F @ X.T
    np.fill_diagonal(M, np.inf)
    m = float(M.min())
    return {"min_pairing": m, "ok": bool(m > 0)}


def klein_sphere_lifts(n: int, dim: int = 3, seed: int = 0, rng=None):
    """Lifted boundary points of the Klein ball with their positive tangent covectors."""
    rng = rng or np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u = rng.normal(size=dim - 1)
        u /= np.linalg.norm(u)
        x = np.append(u, 1.0) / np.sqrt(2.0)
        f = np.append(-u, 1.0) / np.sqrt(2.0)
        out.append((x, f))
    return out
