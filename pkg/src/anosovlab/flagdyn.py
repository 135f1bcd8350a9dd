"""Projective spaces, Grassmannians and partial flags with angle metrics.

All distances are the angle metric: for lines, the angle between
representatives; for k-planes, the angle between Plücker vectors in the
exterior power with its orthonormal wedge basis.  Angles are evaluated with
``atan2(sin, cos)`` rather than ``arccos`` so tiny distances stay accurate.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg

from .errors import DimMismatch, NoSingularGap, NotProximal
from .matgeo import DEFAULT_GAP_TOL, as_array, eigenvalue_moduli, singular_values

PLUCKER_MAX_D = 8
PLUCKER_MAX_K = 3


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ANOSOVLAB_THREADS", "1")))
    except ValueError:
        return 1


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise DimMismatch("zero vector has no projective class")
    return v / n


def _angle_between_unit(v: np.ndarray, w: np.ndarray) -> float:
    c = np.vdot(v, w)
    rej = w - c * v
    return float(np.arctan2(np.linalg.norm(rej), abs(c)))


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of P(K^d) stored as a unit vector (defined up to phase)."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        v = _unit(v.ravel())
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.vector) else "real"


def orthonormal_frame(cols) -> np.ndarray:
    a = np.asarray(cols)
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    if a.ndim == 1:
        a = a[:, None]
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[-1] <= 1e-13 * s[0]:
        raise DimMismatch("frame columns are linearly dependent")
    q, _ = np.linalg.qr(a)
    return q


class GrassPoint:
    """A k-plane in K^d stored by an orthonormal frame (d x k)."""

    def __init__(self, cols):
        f = orthonormal_frame(cols)
        f.setflags(write=False)
        self.frame = f

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.frame) else "real"

    @property
    def stores_plucker(self) -> bool:
        return self.k <= PLUCKER_MAX_K or self.dim <= PLUCKER_MAX_D

    @cached_property
    def plucker(self) -> np.ndarray:
        """Wedge of the frame columns in the basis e_I, I increasing."""
        if not self.stores_plucker:
            raise ValueError(f"Plücker vector of size C({self.dim},{self.k}) is not stored")
        return plucker_vector(self.frame)

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    def __repr__(self):
        return f"GrassPoint(d={self.dim}, k={self.k})"


def plucker_vector(frame: np.ndarray) -> np.ndarray:
    d, k = frame.shape
    rows = list(combinations(range(d), k))
    out = np.empty(len(rows), dtype=frame.dtype)
    for idx, rset in enumerate(rows):
        out[idx] = np.linalg.det(frame[list(rset), :])
    return out


def span(*vectors) -> GrassPoint:
    return GrassPoint(np.column_stack(vectors))


def basis_span(d: int, indices, dtype=float) -> GrassPoint:
    """span(e_i : i in indices) with 1-based indices."""
    e = np.eye(d, dtype=dtype)
    return GrassPoint(e[:, [i - 1 for i in indices]])


@dataclass(frozen=True, eq=False)
class FlagPoint:
    """A pair (inner k-plane, outer (d-k)-plane); ``nested`` asks inner ⊂ outer."""

    inner: GrassPoint
    outer: GrassPoint
    nested: bool = False

    def __post_init__(self):
        if self.inner.dim != self.outer.dim:
            raise DimMismatch("inner and outer planes live in different dimensions")
        if self.nested:
            if self.inner.k > self.outer.k:
                raise DimMismatch("nested flag needs dim(inner) <= dim(outer)")
            resid = self.inner.frame - self.outer.projector() @ self.inner.frame
            if np.linalg.norm(resid, 2) > 1e-9:
                raise DimMismatch("inner plane is not contained in outer plane")

    @property
    def dim(self) -> int:
        return self.inner.dim

    def to_json(self) -> dict:
        def frame_json(f):
            if np.iscomplexobj(f):
                return [[[float(z.real), float(z.imag)] for z in row] for row in f]
            return [[float(x) for x in row] for row in f]

        return {
            "dim": self.dim,
            "inner": frame_json(self.inner.frame),
            "outer": frame_json(self.outer.frame),
            "nested": self.nested,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FlagPoint":
        def parse(rows):
            a = np.array(rows)
            if a.ndim == 3:
                a = a[..., 0] + 1j * a[..., 1]
            return GrassPoint(a)

        return cls(parse(obj["inner"]), parse(obj["outer"]), bool(obj.get("nested", False)))


def angle_distance_proj(p, q) -> float:
    v = p.vector if isinstance(p, ProjPoint) else _unit(np.asarray(p, dtype=complex if np.iscomplexobj(p) else float))
    w = q.vector if isinstance(q, ProjPoint) else _unit(np.asarray(q, dtype=complex if np.iscomplexobj(q) else float))
    if v.shape != w.shape:
        raise DimMismatch(f"points in P^{v.size - 1} and P^{w.size - 1}")
    return _angle_between_unit(v, w)


def principal_angle_sines(V: GrassPoint, W: GrassPoint) -> np.ndarray:
    """Sines of the principal angles between two planes of equal dimension."""
    resid = W.frame - V.frame @ (V.frame.conj().T @ W.frame)
    s = np.linalg.svd(resid, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def principal_angles(V: GrassPoint, W: GrassPoint) -> np.ndarray:
    c = np.linalg.svd(V.frame.conj().T @ W.frame, compute_uv=False)
    s = principal_angle_sines(V, W)
    return np.sort(np.arctan2(np.sort(s), np.sort(c)[::-1]))


def grassmann_distance(V: GrassPoint, W: GrassPoint) -> float:
    """Angle between the Plücker lines of V and W.

    When Plücker vectors are not stored, the same number is obtained from
    principal angles through |<P_V, P_W>| = prod cos(theta_i).
    """
    if V.dim != W.dim or V.k != W.k:
        raise DimMismatch(f"Gr({V.k},{V.dim}) vs Gr({W.k},{W.dim})")
    if V.stores_plucker and W.stores_plucker:
        return _angle_between_unit(V.plucker, W.plucker)
    s = principal_angle_sines(V, W)
    # 1 - prod(1 - s_i^2), evaluated without cancellation.
    sin2 = -np.expm1(np.sum(np.log1p(-(s * s))))
    cos = np.prod(np.sqrt(np.clip(1.0 - s * s, 0.0, 1.0)))
    return float(np.arctan2(np.sqrt(max(sin2, 0.0)), cos))


def transversality_gap(V: GrassPoint, W: GrassPoint) -> float:
    if V.dim != W.dim or V.k + W.k != V.dim:
        raise DimMismatch(f"planes of dimension {V.k} and {W.k} are not complementary in K^{V.dim}")
    return float(abs(np.linalg.det(np.hstack([V.frame, W.frame]))))


def act(g, V):
    """Image of a plane (or projective point) under g."""
    a = as_array(g)
    if isinstance(V, ProjPoint):
        if a.shape[0] != V.dim:
            raise DimMismatch("matrix and point dimensions differ")
        return ProjPoint(a @ V.vector)
    if a.shape[0] != V.dim:
        raise DimMismatch("matrix and plane dimensions differ")
    return GrassPoint(a @ V.frame)


def act_flag(g, F: FlagPoint) -> FlagPoint:
    return FlagPoint(act(g, F.inner), act(g, F.outer), F.nested)


def flag_distance(F1: FlagPoint, F2: FlagPoint) -> float:
    """Sum of the inner and outer Grassmann distances."""
    return grassmann_distance(F1.inner, F2.inner) + grassmann_distance(F1.outer, F2.outer)


def _real_basis(frame: np.ndarray) -> np.ndarray:
    """Real orthonormal basis of a conjugation-invariant complex subspace."""
    k = frame.shape[1]
    u, s, _ = np.linalg.svd(np.hstack([frame.real, frame.imag]), full_matrices=False)
    return u[:, :k]


def _invariant_subspace(a: np.ndarray, select, count: int) -> np.ndarray:
    real = not np.iscomplexobj(a)
    if real:
        t, z, sdim = scipy.linalg.schur(a, output="real", sort=lambda re, im: select(abs(complex(re, im))))
    else:
        t, z, sdim = scipy.linalg.schur(a, output="complex", sort=lambda x: select(abs(x)))
    if sdim != count:
        raise NotProximal(f"ordered Schur form selected {sdim} eigenvalues, expected {count}")
    return z[:, :count]


def proximal_fixed_data(g, k: int, gap_tol: float = DEFAULT_GAP_TOL) -> dict:
    """Attracting k-plane and repelling (d-k)-plane of a P_k-proximal g."""
    a = as_array(g)
    lam = eigenvalue_moduli(a)
    d = len(lam)
    if not 1 <= k < d or lam[k] == 0 or lam[k - 1] / lam[k] <= 1.0 + gap_tol:
        raise NotProximal(f"matrix is not P_{k}-proximal")
    thr = np.sqrt(lam[k - 1] * lam[k])
    att = _invariant_subspace(a, lambda m: m > thr, k)
    rep = _invariant_subspace(a, lambda m: m < thr, d - k)
    return {"attracting": GrassPoint(att), "repelling": GrassPoint(rep)}


def random_frames(d: int, k: int, count: int, rng: np.random.Generator, complex_field: bool = False):
    out = []
    for _ in range(count):
        z = rng.normal(size=(d, k))
        if complex_field:
            z = z + 1j * rng.normal(size=(d, k))
        out.append(GrassPoint(z))
    return out


@dataclass
class SdpRow:
    index: int
    gap_ratio: float
    dist_attractor: float
    dist_repeller: float
    dist_transverse: float
    no_gap: bool

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "gap_ratio": self.gap_ratio,
            "dist_attractor": self.dist_attractor,
            "dist_repeller": self.dist_repeller,
            "dist_transverse": self.dist_transverse,
            "no_gap": self.no_gap,
        }


def sdp_test(
    seq,
    x: FlagPoint,
    y: FlagPoint,
    gap_threshold: float = 1e6,
    dist_tol: float = 1e-4,
    samples: int = 32,
    min_transversality: float = 0.1,
    seed: int = 0,
) -> dict:
    """Check the three equivalent strong-dynamics clauses along a sequence.

    Clause (a): the gap mu_k/mu_{k+1} at the last index exceeds ``gap_threshold``.
    Clause (b): U_k(g_n) is within ``dist_tol`` of x.inner and U_{d-k}(g_n^-1)
    within ``dist_tol`` of y.outer at the last index.
    Clause (c): g_n V is within ``dist_tol`` of x.inner for sampled V
    transverse to y.outer.  These are trend reports, not proofs.
    """
    mats = [as_array(g) for g in seq]
    if not mats:
        raise ValueError("empty sequence")
    d = mats[0].shape[0]
    k = x.inner.k
    if x.inner.dim != d or y.outer.k != d - k:
        raise DimMismatch("flags do not match the sequence dimension")
    rng = np.random.default_rng(seed)
    cplx = any(np.iscomplexobj(m) for m in mats)
    probes = []
    while len(probes) < samples:
        (V,) = random_frames(d, k, 1, rng, cplx)
        if transversality_gap(V, y.outer) >= min_transversality:
            probes.append(V)

    def row(n):
        g = mats[n]
        sd = singular_values(g)
        sdi = singular_values(np.linalg.inv(g))
        no_gap = k not in sd.gap_indices or (d - k) not in sdi.gap_indices
        if no_gap:
            da = dr = np.nan
        else:
            da = grassmann_distance(GrassPoint(sd.frame(k)), x.inner)
            dr = grassmann_distance(GrassPoint(sdi.frame(d - k)), y.outer)
        dc = max(grassmann_distance(act(g, V), x.inner) for V in probes)
        return SdpRow(n, sd.ratio(k), da, dr, dc, no_gap)

    with ThreadPoolExecutor(max_workers=thread_count()) as ex:
        rows = list(ex.map(row, range(len(mats))))
    last = rows[-1]
    clause_a = bool(last.gap_ratio > gap_threshold)
    clause_b = bool(not last.no_gap and last.dist_attractor < dist_tol and last.dist_repeller < dist_tol)
    clause_c = bool(last.dist_transverse < dist_tol)
    return {
        "k": k,
        "rows": [r.as_dict() for r in rows],
        "no_gap_indices": [r.index for r in rows if r.no_gap],
        "clause_a": clause_a,
        "clause_b": clause_b,
        "clause_c": clause_c,
        "agree": clause_a == clause_b == clause_c,
        "final_distances": {
            "attractor": last.dist_attractor,
            "repeller": last.dist_repeller,
            "transverse": last.dist_transverse,
        },
        "thresholds": {"gap": gap_threshold, "dist": dist_tol},
    }


def bps_gap_bound_check(g, h, k: int) -> dict:
    """Compare d(U_k(gh), U_k(g)) with (mu_1/mu_d)(h) * (mu_{k+1}/mu_k)(g)."""
    a, b = as_array(g), as_array(h)
    sg = singular_values(a)
    sgh = singular_values(a @ b)
    sh = singular_values(b)
    if k not in sg.gap_indices:
        raise NoSingularGap(k, f"g has no singular gap at {k}")
    if k not in sgh.gap_indices:
        raise NoSingularGap(k, f"gh has no singular gap at {k}")
    lhs = grassmann_distance(GrassPoint(sgh.frame(k)), GrassPoint(sg.frame(k)))
    rhs = float(sh.mu[0] / sh.mu[-1] * sg.mu[k] / sg.mu[k - 1])
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}


def batch_bps_sweep(count: int, d: int, k: int, seed: int) -> dict:
    """Random SL(d, R) pairs through ``bps_gap_bound_check`` (batched SVDs)."""
    from .matgeo import batch_singular_values, random_sl

    rng = np.random.default_rng(seed)
    G = np.stack([random_sl(d, rng) for _ in range(count)])
    H = np.stack([random_sl(d, rng) for _ in range(count)])
    GH = G @ H
    mu_g, u_g = batch_singular_values(G)
    mu_gh, u_gh = batch_singular_values(GH)
    mu_h, _ = batch_singular_values(H)
    ratios = []
    skipped = 0
    for i in range(count):
        if not (mu_g[i, k - 1] / mu_g[i, k] > 1 + DEFAULT_GAP_TOL and mu_gh[i, k - 1] / mu_gh[i, k] > 1 + DEFAULT_GAP_TOL):
            skipped += 1
            continue
        lhs = grassmann_distance(GrassPoint(u_gh[i][:, :k]), GrassPoint(u_g[i][:, :k]))
        rhs = mu_h[i, 0] / mu_h[i, -1] * mu_g[i, k] / mu_g[i, k - 1]
        ratios.append(lhs / rhs)
    r = np.array(ratios)
    return {
        "count": int(r.size),
        "skipped_no_gap": skipped,
        "max_ratio": float(r.max()),
        "mean_ratio": float(r.mean()),
        "quantiles": {str(q): float(np.quantile(r, q)) for q in (0.5, 0.9, 0.99)},
        "violations_above_1": int(np.sum(r > 1.0)),
        "seed": seed,
        "d": d,
        "k": k,
    }
