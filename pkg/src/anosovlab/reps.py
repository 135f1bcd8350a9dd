"""Explicit representations: symmetric powers of SL(2,R), the Heisenberg
subgroup of SL(3,C), a reducible representation of a free group with its
semisimplification, and the norm contraction of a diagonal flow."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .cuspgraph import horoball_distance_fast
from .errors import DegenerateInput, DimMismatch, NotHyperbolic, NotSpecialLinear
from .flagdyn import angle_distance_proj
from .matgeo import eigenvalue_moduli, singular_values, symmetric_space_distance


@dataclass(frozen=True, eq=False)
class Sl2Element:
    matrix: np.ndarray
    tol: float = 1e-9

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise DimMismatch("SL(2) elements are 2x2")
        if abs(np.linalg.det(m) - 1.0) > 1e-10:
            raise NotSpecialLinear(f"det = {np.linalg.det(m)!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def kind(self) -> str:
        tr = abs(np.trace(self.matrix))
        if tr > 2 + self.tol:
            return "hyperbolic"
        if tr < 2 - self.tol:
            return "elliptic"
        return "parabolic"


def _as2(g) -> np.ndarray:
    return g.matrix if isinstance(g, Sl2Element) else np.asarray(g, dtype=float)


def sl2_symmetric_power(g, d: int) -> np.ndarray:
    """d-dimensional irreducible representation of SL(2,R).

    Acts on degree d-1 binary forms in the basis sqrt(C(d-1,j)) x^(d-1-j) y^j,
    which makes the image of SO(2) orthogonal and sends diag(s, 1/s) to
    diag(s^(d-1), s^(d-3), ..., s^(1-d)).
    """
    if d < 2:
        raise DimMismatch("symmetric power dimension must be at least 2")
    (a, b), (c, e) = _as2(g)
    n = d - 1
    # column j: coefficients of (a x + c y)^(n-j) (b x + e y)^j
    first = [np.array([1.0])]
    for _ in range(n):
        first.append(np.convolve(first[-1], [a, c]))
    second = [np.array([1.0])]
    for _ in range(n):
        second.append(np.convolve(second[-1], [b, e]))
    scale = np.sqrt([comb(n, j) for j in range(d)])
    M = np.empty((d, d))
    for j in range(d):
        M[:, j] = np.convolve(first[n - j], second[j])
    return M * scale[None, :] / scale[:, None]


def diagonal_flow(t: float) -> np.ndarray:
    return np.diag([np.exp(t / 2), np.exp(-t / 2)])


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_sl2(rng: np.random.Generator, max_log_sv: float = 1.5) -> np.ndarray:
    """k1 a_s k2 with uniform rotations and log singular value s in [0, max_log_sv]."""
    th1, th2 = rng.uniform(0, 2 * np.pi, size=2)
    s = rng.uniform(0, max_log_sv)
    return _rotation(th1) @ np.diag([np.exp(s), np.exp(-s)]) @ _rotation(th2)


def random_hyperbolic_sl2(rng: np.random.Generator, min_trace: float = 2.1) -> np.ndarray:
    while True:
        g = random_sl2(rng)
        if abs(np.trace(g)) > min_trace:
            return g


def tau_eigenvalue_prediction(lambda1: float, d: int) -> np.ndarray:
    """lambda_k(tau_d(g)) = lambda_1(g)^(d+1-2k), k = 1..d."""
    return np.array([lambda1 ** (d + 1 - 2 * k) for k in range(1, d + 1)])


def sl2_symmetric_power_mp(g, d: int, dps: int = 60):
    """``sl2_symmetric_power`` evaluated in mpmath at ``dps`` digits."""
    import mpmath

    with mpmath.workdps(dps):
        (a, b), (c, e) = [[mpmath.mpf(float(x)) for x in row] for row in _as2(g)]
        n = d - 1

        def mul(p, q):
            out = [mpmath.mpf(0)] * (len(p) + len(q) - 1)
            for i, x in enumerate(p):
                for j, y in enumerate(q):
                    out[i + j] += x * y
            return out

        first, second = [[mpmath.mpf(1)]], [[mpmath.mpf(1)]]
        for _ in range(n):
            first.append(mul(first[-1], [a, c]))
            second.append(mul(second[-1], [b, e]))
        M = mpmath.matrix(d, d)
        for j in range(d):
            col = mul(first[n - j], second[j])
            for i in range(d):
                M[i, j] = col[i] * mpmath.sqrt(comb(n, j)) / mpmath.sqrt(comb(n, i))
        return M


def _mp_eigen_moduli(M, dps: int):
    import mpmath

    with mpmath.workdps(dps):
        ev = mpmath.eig(M, left=False, right=False)
        return sorted((abs(z) for z in ev), reverse=True)


def tau_eigenvalue_error(g, d: int, dps: int | None = None) -> float:
    """Largest relative error between eigenvalue moduli of tau_d(g) and the power law.

    With ``dps`` the matrix and its spectrum are computed in mpmath; the small
    eigenvalues of a non-normal power are otherwise limited by rounding.
    """
    if dps is None:
        lam1 = eigenvalue_moduli(_as2(g))[0]
        got = eigenvalue_moduli(sl2_symmetric_power(g, d))
        want = tau_eigenvalue_prediction(lam1, d)
        return float(np.max(np.abs(got - want) / want))
    import mpmath

    with mpmath.workdps(dps):
        lam1 = _mp_eigen_moduli(mpmath.matrix([[float(x) for x in r] for r in _as2(g)]), dps)[0]
        got = _mp_eigen_moduli(sl2_symmetric_power_mp(g, d, dps), dps)
        errs = [abs(got[k - 1] - lam1 ** (d + 1 - 2 * k)) / lam1 ** (d + 1 - 2 * k)
                for k in range(1, d + 1)]
        return float(max(errs))


# ---- Heisenberg subgroup -------------------------------------------------

def heisenberg(m: int, n: int) -> np.ndarray:
    """u(m, n) in SL(3,C).  Entries are dyadic, so float products stay exact for moderate m, n."""
    return np.array([[1, m, m * m / 2 + 1j * n], [0, 1, m], [0, 0, 1]], dtype=complex)


def heisenberg_exact(m: int, n: int):
    """u(m, n) with entries as (real, imaginary) pairs of Fractions."""
    z, one = (Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))
    return ((one, (Fraction(m), Fraction(0)), (Fraction(m * m, 2), Fraction(n))),
            (z, one, (Fraction(m), Fraction(0))),
            (z, z, one))


def gaussian_matmul(A, B):
    """Exact product of square matrices with (re, im) Fraction entries."""
    size = len(A)
    out = []
    for i in range(size):
        row = []
        for j in range(size):
            re = im = Fraction(0)
            for k in range(size):
                (ar, ai), (br, bi) = A[i][k], B[k][j]
                re += ar * br - ai * bi
                im += ar * bi + ai * br
            row.append((re, im))
        out.append(tuple(row))
    return tuple(out)


def heisenberg_batch(ms, ns) -> np.ndarray:
    ms = np.asarray(ms, dtype=float)
    ns = np.asarray(ns, dtype=float)
    out = np.zeros(ms.shape + (3, 3), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = out[..., 2, 2] = 1
    out[..., 0, 1] = out[..., 1, 2] = ms
    out[..., 0, 2] = ms * ms / 2 + 1j * ns
    return out


def heisenberg_law_sweep(bound: int = 100, partners: int = 256, seed: int = 0) -> dict:
    """Check u(m,n) u(m',n') = u(m+m', n+n') for every (m, n) in the grid.

    Each grid point meets ``partners`` partners drawn from the same grid.
    Comparison is exact equality of floating entries (all values are small
    dyadic rationals).
    """
    rng = np.random.default_rng(seed)
    vals = np.arange(-bound, bound + 1)
    m, n = np.meshgrid(vals, vals, indexing="ij")
    m, n = m.ravel(), n.ravel()
    left = heisenberg_batch(m, n)
    stacked_rows = left.reshape(-1, 3)  # row-stacked batch: one matmul covers every product
    failures = 0
    checked = 0
    for _ in range(partners):
        mp = rng.integers(-bound, bound + 1)
        np_ = rng.integers(-bound, bound + 1)
        lhs = (stacked_rows @ heisenberg(int(mp), int(np_))).reshape(left.shape)
        rhs = heisenberg_batch(m + mp, n + np_)
        failures += int(np.count_nonzero(np.any(lhs != rhs, axis=(1, 2))))
        checked += m.size
    return {"checked": checked, "failures": failures}


def realify(g) -> np.ndarray:
    """SL(d,C) -> SL(2d,R), z -> [[Re, -Im], [Im, Re]]."""
    g = np.asarray(g, dtype=complex)
    return np.block([[g.real, -g.imag], [g.imag, g.real]])


def symspace_displacement(g, realified: bool = False) -> float:
    g = np.asarray(g)
    if realified:
        # the realified metric doubles every log singular value multiplicity
        return symmetric_space_distance(np.eye(2 * g.shape[0]), realify(g)) / np.sqrt(2.0)
    return symmetric_space_distance(np.eye(g.shape[0], dtype=complex), g)


def heisenberg_distortion_table(k_max: int = 12, n_max: int = 8, n_probe_max: int = 12):
    """Rows comparing cusp distances with symmetric-space displacement.

    Two probes are tabulated: u(0, 2^k) against level n for n <= min(k, n_max),
    and u(2^(n-1), 0) at level n for 2 <= n <= n_probe_max.
    """
    if k_max > 14:
        raise DimMismatch("k_max must be at most 14")
    rows = []
    for k in range(1, k_max + 1):
        disp = symspace_displacement(heisenberg(0, 1 << k))
        for n in range(1, min(k, n_max) + 1):
            cusp = horoball_distance_fast(None, ((0, 0), n), ((0, 1 << k), n))
            rows.append({"probe": "u(0,2^k)", "k": k, "n": n, "cusp_distance": cusp,
                         "symspace_displacement": disp, "lower_bound": 2 * k - 2 * n - 2})
    for n in range(2, n_probe_max + 1):
        m = 1 << (n - 1)
        cusp = horoball_distance_fast(None, ((0, 0), n), ((m, 0), n))
        rows.append({"probe": "u(2^(n-1),0)", "k": n - 1, "n": n, "cusp_distance": cusp,
                     "symspace_displacement": symspace_displacement(heisenberg(m, 0)),
                     "lower_bound": ""})
    return rows


def fitted_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


# ---- representation tables and the semisimplification example ------------

def _inverse_letter(ch: str) -> str:
    return ch.lower() if ch.isupper() else ch.upper()


@dataclass(frozen=True, eq=False)
class RepresentationTable:
    """Generator images; upper-case letters in words denote inverses."""

    generators: dict
    relations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for w in self.relations:
            M = self.evaluate(w)
            scal = M[0, 0]
            if abs(abs(scal) - 1) > 1e-8 or np.max(np.abs(M - scal * np.eye(M.shape[0]))) > 1e-8:
                raise DegenerateInput(f"relation {w!r} does not evaluate to a scalar identity")

    @property
    def dim(self) -> int:
        return next(iter(self.generators.values())).shape[0]

    def image(self, letter: str) -> np.ndarray:
        if letter in self.generators:
            return self.generators[letter]
        return np.linalg.inv(self.generators[_inverse_letter(letter)])

    def evaluate(self, word: str) -> np.ndarray:
        M = np.eye(self.dim)
        for ch in word:
            M = M @ self.image(ch)
        return M


B_TILDE = np.array([[1.0, 1.0], [0.0, 1.0]])


def _blocks(x, y) -> np.ndarray:
    out = np.zeros((4, 4))
    out[:2, :2] = x
    out[2:, 2:] = y
    return out


def semisimplification_pair(a_tilde=None):
    """(rho, rho_ss) on the free group <a, b> in SL(4,R)."""
    at = np.diag([2.0, 0.5]) if a_tilde is None else np.asarray(a_tilde, dtype=float)
    if Sl2Element(at).kind != "hyperbolic":
        raise NotHyperbolic("the SL(2) block of a must be hyperbolic")
    rho_a = _blocks(np.eye(2), at)
    rho = RepresentationTable({"a": rho_a, "b": _blocks(B_TILDE, B_TILDE)})
    rho_ss = RepresentationTable({"a": rho_a, "b": _blocks(np.eye(2), B_TILDE)})
    return rho, rho_ss


def rho_b_power(n: int, semisimple: bool = False) -> np.ndarray:
    bn = np.array([[1.0, float(n)], [0.0, 1.0]])
    return _blocks(np.eye(2) if semisimple else bn, bn)


def collapse_target(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([x[1], 0.0, x[3], 0.0])


def ss_collapse_limit_check(x, n: int = 10**6, fit_from: int = 100) -> dict:
    """Distance from rho(b^n)[x] to [x2 : 0 : x4 : 0] and its decay exponent."""
    x = np.asarray(x, dtype=float)
    if x[1] == 0 and x[3] == 0:
        raise DegenerateInput("x2 and x4 both vanish")
    target = collapse_target(x)

    def dist(k):
        return angle_distance_proj(rho_b_power(k) @ x, target)

    final = dist(n)
    ns = np.unique(np.geomspace(fit_from, max(n, fit_from * 10), 9).astype(np.int64))
    ds = np.array([dist(int(k)) for k in ns])
    if np.all(ds == 0):
        return {"limit_distance": final, "constant": 0.0, "rate_exponent": float("nan"),
                "rate_ok": True}
    slope, icpt = np.polyfit(np.log(ns), np.log(ds), 1)
    return {"limit_distance": float(final), "constant": float(np.exp(icpt)),
            "rate_exponent": float(-slope), "rate_ok": bool(0.8 <= -slope <= 1.2)}


def peripheral_limit_directions(inputs, n: int = 10**6) -> dict:
    """Limits of rho(b^n) applied to each input and the largest pairwise angle."""
    lims = [rho_b_power(n) @ np.asarray(x, dtype=float) for x in inputs]
    lims = [v / np.linalg.norm(v) for v in lims]
    spread = max(angle_distance_proj(u, v) for i, u in enumerate(lims) for v in lims[i + 1:])
    return {"limits": [v.tolist() for v in lims], "max_angle": float(spread)}


def ss_gap_sequence(j_max: int = 20) -> np.ndarray:
    """mu_1 / mu_2 of rho_ss(b^(2^j)) for j = 0..j_max."""
    return np.array([singular_values(rho_b_power(1 << j, semisimple=True)).ratio(1)
                     for j in range(j_max + 1)])


# ---- norm contraction along the diagonal flow ----------------------------

def _weight_gap(d: int, k: int) -> float:
    lam = eigenvalue_moduli(sl2_symmetric_power(diagonal_flow(1.0), d))
    return float(np.log(lam[k - 1] / lam[k]))


def _flow_ratio(d: int, y, z, t: float) -> float:
    a = sl2_symmetric_power(diagonal_flow(-t), d)
    return float(np.linalg.norm(a @ y) / np.linalg.norm(a @ z))


def _conjugated_flow_ratio(g, d: int, y, z, t: float, dps: int = 50) -> float:
    """||tau(a_-t g^-1) Y|| / ||tau(a_-t g^-1) Z|| with Y = tau(g) y, Z = tau(g) z, in mpmath."""
    import mpmath

    with mpmath.workdps(dps):
        tg = sl2_symmetric_power_mp(g, d, dps)
        Y = tg * mpmath.matrix([float(v) for v in y])
        Z = tg * mpmath.matrix([float(v) for v in z])
        m = sl2_symmetric_power_mp(diagonal_flow(-t), d, dps) * mpmath.inverse(tg)
        return float(mpmath.norm(m * Y) / mpmath.norm(m * Z))


def equivariant_norm_contraction(d: int, t_samples=(0.5, 1.0, 2.0, 4.0, 8.0), k: int | None = None,
                                 samples: int = 64, conjugated_samples: int = 4,
                                 seed: int = 0) -> dict:
    """Norm ratio ||Y|| / ||Z|| along the diagonal flow in the norms ||tau(h)^-1 .||_2.

    At the base point Y ranges over span(e_1..e_k) and Z over
    span(e_{k+1}..e_d); the worst value of ratio(t) / (e^{-lambda t} ratio(0))
    must not exceed 1.  Moving the base point by a random g must leave the
    ratios unchanged; that comparison runs in extended precision because the
    flow amplifies rounding in the repelling directions by up to e^{(d-1)t}.
    """
    if d < 2:
        raise DimMismatch("d must be at least 2")
    rng = np.random.default_rng(seed)
    ks = [k] if k is not None else list(range(1, d))
    worst = 0.0
    equiv_err = 0.0
    rows = []
    for kk in ks:
        lam = _weight_gap(d, kk)
        for i in range(samples):
            y = np.zeros(d)
            y[:kk] = rng.normal(size=kk)
            z = np.zeros(d)
            z[kk:] = rng.normal(size=d - kk)
            r0 = _flow_ratio(d, y, z, 0.0)
            g = random_sl2(rng) if i < conjugated_samples else None
            for t in t_samples:
                rt = _flow_ratio(d, y, z, t)
                worst = max(worst, rt / (np.exp(-lam * t) * r0))
                if g is not None:
                    rg = _conjugated_flow_ratio(g, d, y, z, t)
                    equiv_err = max(equiv_err, abs(rg - rt) / rt)
        rows.append({"k": kk, "lambda": lam})
    return {"d": d, "t_samples": list(t_samples), "indices": rows,
            "max_normalized_ratio": float(worst), "equivariance_error": float(equiv_err),
            "ok": bool(worst <= 1 + 1e-9)}
