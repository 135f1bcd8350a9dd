"""Cartan and Jordan data of matrices in SL(d, R) and SL(d, C).

Singular values come from a one-sided (Hestenes) Jacobi SVD, which keeps
small singular values of badly scaled near-unipotent powers accurate.  The
routine is vectorised over stacks of matrices so random sweeps stay cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    DimMismatch,
    EigenFailure,
    NoSingularGap,
    NonFiniteEntries,
    NotSpecialLinear,
    SvdFailure,
)

DEFAULT_GAP_TOL = 1e-6
_MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class SquareMatrix:
    """A d x d real or complex matrix, optionally asserted to lie in SL(d)."""

    entries: np.ndarray
    det_tol: float = 1e-9
    projective_only: bool = False

    def __post_init__(self):
        a = np.array(self.entries)
        if a.dtype.kind not in "fc":
            a = a.astype(float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 2:
            raise DimMismatch("dimension must be at least 2")
        if not np.all(np.isfinite(a)):
            raise NonFiniteEntries("matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if not self.projective_only:
            det = abs(np.linalg.det(a))
            if abs(det - 1.0) > self.det_tol:
                raise NotSpecialLinear(f"|det| = {det!r} is not 1 within {self.det_tol}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.entries) else "real"

    @cached_property
    def singular_data(self) -> "SingularData":
        return singular_values(self.entries)

    @cached_property
    def eigen_moduli(self) -> np.ndarray:
        return eigenvalue_moduli(self.entries)

    def __matmul__(self, other):
        o = other.entries if isinstance(other, SquareMatrix) else np.asarray(other)
        return SquareMatrix(self.entries @ o, self.det_tol, self.projective_only)

    def inverse(self) -> "SquareMatrix":
        return SquareMatrix(np.linalg.inv(self.entries), self.det_tol, self.projective_only)

    def to_json(self) -> dict:
        return matrix_to_json(self.entries)

    @classmethod
    def from_json(cls, obj: dict | str, **kwargs) -> "SquareMatrix":
        return cls(matrix_from_json(obj), **kwargs)


def as_array(g) -> np.ndarray:
    if isinstance(g, SquareMatrix):
        return g.entries
    a = np.asarray(g)
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    return a


def matrix_to_json(a) -> dict:
    a = as_array(a)
    if np.iscomplexobj(a):
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in a]
        fld = "complex"
    else:
        rows = [[float(x) for x in row] for row in a]
        fld = "real"
    return {"dim": int(a.shape[0]), "field": fld, "rows": rows}


def matrix_from_json(obj: dict | list | str) -> np.ndarray:
    """Read ``{"dim", "field", "rows"}`` or a bare list of real rows."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if isinstance(obj, list):
        obj = {"dim": len(obj), "rows": obj}
    d = int(obj["dim"])
    rows = obj["rows"]
    if obj.get("field", "real") == "complex":
        a = np.array([[complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z)
                       for z in row] for row in rows])
    else:
        a = np.array(rows, dtype=float)
    if a.shape != (d, d):
        raise DimMismatch(f"declared dim {d} but rows have shape {a.shape}")
    return a


@dataclass(frozen=True)
class SingularData:
    """Singular values (descending) with the left singular frame.

    ``left`` holds left singular vectors as columns, in the same order as
    ``mu``.  ``gap_indices`` are the 1-based k with mu_k / mu_{k+1} > 1 + gap_tol.
    """

    mu: np.ndarray
    left: np.ndarray
    gap_indices: frozenset = field(default_factory=frozenset)

    def frame(self, k: int) -> np.ndarray:
        if k not in self.gap_indices:
            raise NoSingularGap(k)
        return self.left[:, :k]

    @property
    def left_frames(self) -> dict:
        return {k: self.left[:, :k] for k in sorted(self.gap_indices)}

    def ratio(self, k: int) -> float:
        """mu_k / mu_{k+1} with 1-based k."""
        lo = self.mu[k]
        return np.inf if lo == 0 else float(self.mu[k - 1] / lo)


def _jacobi_sweeps(work: np.ndarray, tol: float) -> np.ndarray:
    """Orthogonalise the columns of every matrix in ``work`` in place."""
    b, _, d = work.shape
    active = np.ones(b, dtype=bool)
    for _ in range(_MAX_SWEEPS):
        rotated = np.zeros(b, dtype=bool)
        for i in range(d - 1):
            for j in range(i + 1, d):
                ci = work[:, :, i]
                cj = work[:, :, j]
                alpha = np.einsum("bk,bk->b", ci.conj(), ci).real
                beta = np.einsum("bk,bk->b", cj.conj(), cj).real
                gamma = np.einsum("bk,bk->b", ci.conj(), cj)
                agam = np.abs(gamma)
                need = active & (agam > tol * np.sqrt(alpha * beta)) & (agam > 0)
                if not need.any():
                    continue
                rotated |= need
                g = agam[need]
                zeta = (beta[need] - alpha[need]) / (2.0 * g)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                xi = ci[need]
                xj = cj[need]
                # Absorb the phase (sign) of gamma so the rotation is real.
                xj = xj * (gamma[need].conj() / g)[:, None]
                work[need, :, i] = c[:, None] * xi - s[:, None] * xj
                work[need, :, j] = s[:, None] * xi + c[:, None] * xj
        active &= rotated
        if not active.any():
            return work
    raise SvdFailure(f"one-sided Jacobi did not converge in {_MAX_SWEEPS} sweeps")


def _complete_frame(u: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace columns not flagged ``good`` by an orthonormal completion."""
    if good.all():
        return u
    d = u.shape[0]
    keep = u[:, good]
    q, _ = np.linalg.qr(np.hstack([keep, np.eye(d, dtype=u.dtype)]))
    out = u.copy()
    out[:, ~good] = q[:, keep.shape[1]:d][:, : int((~good).sum())]
    return out


def batch_singular_values(mats, gap_tol: float = DEFAULT_GAP_TOL):
    """Singular values and left frames for a stack of square matrices.

    Returns ``(mu, left)`` with shapes (b, d) and (b, d, d).
    """
    a = np.asarray(mats)
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimMismatch(f"expected a stack of square matrices, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries("matrix has non-finite entries")
    d = a.shape[1]
    # Pre-scaling keeps entries far from overflow during the rotations.
    scale = np.max(np.abs(a), axis=(1, 2))
    scale[scale == 0] = 1.0
    work = a / scale[:, None, None]
    tol = d * np.finfo(float).eps
    work = _jacobi_sweeps(work.copy(), tol)
    norms = np.linalg.norm(work, axis=1)
    order = np.argsort(-norms, axis=1, kind="stable")
    mu = np.take_along_axis(norms, order, axis=1)
    work = np.take_along_axis(work, order[:, None, :], axis=2)
    left = np.empty_like(work)
    for idx in range(work.shape[0]):
        nz = mu[idx] > 0
        u = np.zeros_like(work[idx])
        u[:, nz] = work[idx][:, nz] / mu[idx][nz]
        left[idx] = _complete_frame(u, nz)
    return mu * scale[:, None], left


def _gaps(mu: np.ndarray, gap_tol: float) -> frozenset:
    d = len(mu)
    out = []
    for k in range(1, d):
        lo = mu[k]
        if lo == 0 or mu[k - 1] / lo > 1.0 + gap_tol:
            out.append(k)
    return frozenset(out)


def singular_values(g, gap_tol: float = DEFAULT_GAP_TOL) -> SingularData:
    a = as_array(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    mu, left = batch_singular_values(a[None], gap_tol)
    return SingularData(mu=mu[0], left=left[0], gap_indices=_gaps(mu[0], gap_tol))


def cartan_attractor(g, k: int, gap_tol: float = DEFAULT_GAP_TOL):
    """U_k(g): the span of the k longest axes of g applied to the unit sphere."""
    from .flagdyn import GrassPoint

    sd = singular_values(g, gap_tol)
    return GrassPoint(sd.frame(k))


def eigenvalue_moduli(g) -> np.ndarray:
    """Moduli of the eigenvalues, descending, via complex Schur form."""
    a = as_array(g)
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries("matrix has non-finite entries")
    if not np.any(np.tril(a, -1)):
        ev = np.diag(a)
    else:
        try:
            t, _ = scipy.linalg.schur(a.astype(complex), output="complex")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigenFailure(str(exc)) from exc
        ev = np.diag(t)
    return np.sort(np.abs(ev))[::-1]


def is_proximal(g, k: int, gap_tol: float = DEFAULT_GAP_TOL) -> dict:
    lam = eigenvalue_moduli(g)
    if not 1 <= k < len(lam):
        return {"proximal": False, "gap": float("nan")}
    lo = lam[k]
    gap = np.inf if lo == 0 else float(lam[k - 1] / lo)
    return {"proximal": bool(gap > 1.0 + gap_tol), "gap": gap}


def is_weakly_unipotent(g, tol: float = 1e-9) -> bool:
    lam = eigenvalue_moduli(g)
    return bool(np.all(np.abs(lam - 1.0) <= tol))


def symmetric_space_distance(g, h) -> float:
    """Distance between gK and hK in SL(d)/SU(d): sqrt(sum_j log(mu_j(g^-1 h))^2)."""
    a, b = as_array(g), as_array(h)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    mu = singular_values(np.linalg.solve(a, b)).mu
    return float(np.sqrt(np.sum(np.log(mu) ** 2)))


def log_gap(g, k: int) -> float:
    """log(mu_k / mu_{k+1})(g) with 1-based k."""
    mu = singular_values(g).mu
    return float(np.log(mu[k - 1]) - np.log(mu[k]))


def random_sl(d: int, rng: np.random.Generator, complex_field: bool = False, scale: float = 1.0) -> np.ndarray:
    """A random element of SL(d): Gaussian entries, rescaled to |det| = 1."""
    a = rng.normal(scale=scale, size=(d, d))
    if complex_field:
        a = a + 1j * rng.normal(scale=scale, size=(d, d))
    det = np.linalg.det(a)
    if complex_field:
        a = a / det ** (1.0 / d)
    else:
        if det < 0:
            a[:, 0] = -a[:, 0]
            det = -det
        a = a / det ** (1.0 / d)
    return a


def random_unitary(d: int, rng: np.random.Generator, complex_field: bool = False) -> np.ndarray:
    if complex_field:
        z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    else:
        z = rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
