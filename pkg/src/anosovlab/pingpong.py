"""Sampled ping-pong certificates for a proximal element and a unipotent group.

Flags in F_{1,2}(R^3) are stored as pairs (line, normal): a unit vector
spanning the line and a unit covector whose kernel is the plane.  The flag
distance is the angle between lines plus the angle between planes, and the
plane angle equals the angle between normals.  Everything here is sampled
numerical evidence on finite nets, never a proof.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import mpmath
import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DimMismatch,
    EmptyNet,
    NotBiproximal,
    PowerNotFound,
    SeedNotInGoodRegion,
    ULimitNotConverged,
)
from .flagdyn import FlagPoint, GrassPoint, proximal_fixed_data
from .matgeo import is_proximal, singular_values

FLAG_DIAMETER = np.pi


def _unit_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def _proj_angle(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise angle between projective points given by unit rows."""
    c = np.abs(np.sum(A * B, axis=-1))
    cross = np.linalg.norm(np.cross(A, B), axis=-1)
    return np.arctan2(cross, c)


@dataclass(frozen=True, eq=False)
class Flags:
    """A batch of flags (line, normal) with line . normal = 0."""

    lines: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        L = _unit_rows(np.atleast_2d(np.asarray(self.lines, dtype=float)))
        N = _unit_rows(np.atleast_2d(np.asarray(self.normals, dtype=float)))
        if L.shape != N.shape or L.shape[1] != 3:
            raise DimMismatch("flags need matching (n, 3) line and normal arrays")
        object.__setattr__(self, "lines", L)
        object.__setattr__(self, "normals", N)

    def __len__(self):
        return self.lines.shape[0]

    def __getitem__(self, idx) -> "Flags":
        return Flags(self.lines[idx], self.normals[idx])

    def act(self, g) -> "Flags":
        g = np.asarray(g, dtype=float)
        return Flags(self.lines @ g.T, self.normals @ np.linalg.inv(g))

    def distance(self, other: "Flags") -> np.ndarray:
        return _proj_angle(self.lines, other.lines) + _proj_angle(self.normals, other.normals)

    def nesting_residual(self) -> float:
        return float(np.max(np.abs(np.sum(self.lines * self.normals, axis=1))))

    def to_flag_point(self, i: int = 0) -> FlagPoint:
        line = self.lines[i]
        plane = np.linalg.svd(self.normals[i][None, :])[2][1:].T
        return FlagPoint(GrassPoint(line[:, None]), GrassPoint(plane), nested=True)

    @classmethod
    def from_flag_point(cls, F: FlagPoint) -> "Flags":
        plane = F.outer.frame
        normal = np.cross(plane[:, 0], plane[:, 1])
        return cls(F.inner.frame[:, 0], normal)

    @classmethod
    def single(cls, line, normal) -> "Flags":
        return cls(np.asarray(line, dtype=float)[None], np.asarray(normal, dtype=float)[None])


def standard_flag() -> Flags:
    return Flags.single([1, 0, 0], [0, 0, 1])


def distance_to_nontransverse(F: Flags, center: Flags) -> np.ndarray:
    """Upper bound on the distance from each flag to those not transverse to ``center``.

    A flag (l, n) fails transversality to (l0, n0) when n0(l) = 0 or n(l0) = 0.
    For the first case, move l to its projection l' on ker n0 and then n to
    the nearest covector killing l'; the second case is symmetric.  The
    returned value is the cheaper of the two moves, so the true distance is
    never larger and the excluded neighbourhood is never underestimated.
    """
    l0, n0 = center.lines[0], center.normals[0]
    L, N = F.lines, F.normals
    # move the line into ker n0
    s1 = np.clip(np.abs(L @ n0), 0, 1)
    Lp = L - np.outer(L @ n0, n0)
    Lp_norm = np.linalg.norm(Lp, axis=1)
    Lp = np.where(Lp_norm[:, None] > 1e-15, Lp / np.maximum(Lp_norm, 1e-300)[:, None], L)
    move_a = np.arcsin(s1) + np.arcsin(np.clip(np.abs(np.sum(N * Lp, axis=1)), 0, 1))
    # move the plane to contain l0
    s2 = np.clip(np.abs(N @ l0), 0, 1)
    Np = N - np.outer(N @ l0, l0)
    Np_norm = np.linalg.norm(Np, axis=1)
    Np = np.where(Np_norm[:, None] > 1e-15, Np / np.maximum(Np_norm, 1e-300)[:, None], N)
    move_b = np.arcsin(s2) + np.arcsin(np.clip(np.abs(np.sum(L * Np, axis=1)), 0, 1))
    return np.minimum(move_a, move_b)


def transversality_margin(F: Flags, G: Flags) -> np.ndarray:
    """min(|n_G(l_F)|, |n_F(l_G)|) row-wise; zero exactly on non-transverse pairs."""
    return np.minimum(np.abs(np.sum(F.lines * G.normals, axis=1)),
                      np.abs(np.sum(G.lines * F.normals, axis=1)))


def fibonacci_hemisphere(count: int) -> np.ndarray:
    """Nearly uniform unit vectors with z >= 0, one per projective class."""
    i = np.arange(count) + 0.5
    z = 1.0 - i / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def flag_net(size: int, seed: int = 0) -> Flags:
    """Net of about ``size`` flags: lines on a Fibonacci hemisphere times normal angles.

    For each line, normals are spread over the circle of covectors killing it,
    with a seeded rotation so nets of different seeds interleave.
    """
    n_angles = max(4, int(round(np.sqrt(size / 16.0))))
    n_lines = max(1, size // n_angles)
    rng = np.random.default_rng(seed)
    L = fibonacci_hemisphere(n_lines)
    R = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    L = L @ R.T
    a = np.cross(L, np.where(np.abs(L[:, [0]]) < 0.9, [[1.0, 0, 0]], [[0, 1.0, 0]]))
    a = _unit_rows(a)
    b = np.cross(L, a)
    theta = (np.arange(n_angles) + rng.uniform()) * np.pi / n_angles
    lines = np.repeat(L, n_angles, axis=0)
    normals = (np.repeat(a, n_angles, axis=0) * np.tile(np.cos(theta), n_lines)[:, None]
               + np.repeat(b, n_angles, axis=0) * np.tile(np.sin(theta), n_lines)[:, None])
    return Flags(lines, normals)


def _embedding(F: Flags) -> np.ndarray:
    """Sign-free Euclidean embedding used only to find candidate neighbours."""
    lo = np.einsum("ni,nj->nij", F.lines, F.lines).reshape(len(F), -1)
    no = np.einsum("ni,nj->nij", F.normals, F.normals).reshape(len(F), -1)
    return np.hstack([lo, no])


def _neighbour_pairs(F: Flags, k: int = 8):
    tree = cKDTree(_embedding(F))
    _, idx = tree.query(_embedding(F), k=min(k + 1, len(F)))
    i = np.repeat(np.arange(len(F)), idx.shape[1] - 1)
    j = idx[:, 1:].ravel()
    keep = i < j
    return i[keep], j[keep]


@dataclass(frozen=True)
class ContractionReport:
    lipschitz_est: float
    image_radius: float
    ok: bool
    net_points: int
    net_resolution: float
    epsilon: float

    def as_dict(self) -> dict:
        return {"lipschitz_est": self.lipschitz_est, "image_radius": self.image_radius,
                "ok": self.ok, "net_points": self.net_points,
                "net_resolution": self.net_resolution, "epsilon": self.epsilon}


def certify_contraction(g, excluded: Flags, target: Flags, eps: float, net_size: int = 4096,
                        seed: int = 0, neighbours: int = 8) -> ContractionReport:
    """Sampled check that g is eps-Lipschitz off the eps-neighbourhood of the
    flags not transverse to ``excluded`` and maps that region into B(target, eps)."""
    net = flag_net(net_size, seed)
    keep = distance_to_nontransverse(net, excluded) > eps
    region = net[keep]
    if len(region) < 2:
        raise EmptyNet("no net flag lies outside the excluded neighbourhood")
    img = region.act(g)
    radius = float(np.max(img.distance(Flags(np.repeat(target.lines, len(img), 0),
                                              np.repeat(target.normals, len(img), 0)))))
    i, j = _neighbour_pairs(region, neighbours)
    d0 = region[i].distance(region[j])
    good = d0 > 1e-12
    d1 = img[i[good]].distance(img[j[good]])
    lip = float(np.max(d1 / d0[good])) if good.any() else 0.0
    resolution = float(np.median(d0[good])) if good.any() else 0.0
    return ContractionReport(lip, radius, bool(lip <= eps and radius <= eps), len(region),
                             resolution, eps)


# ---- the system ----------------------------------------------------------

def jordan_block(d: int = 3) -> np.ndarray:
    return np.eye(d) + np.eye(d, k=1)


def _rotation_zyz(a: float, b: float, c: float) -> np.ndarray:
    def rz(t):
        return np.array([[np.cos(t), -np.sin(t), 0], [np.sin(t), np.cos(t), 0], [0, 0, 1]])

    ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    return rz(a) @ ry @ rz(c)


DEFAULT_CONJUGATOR_ANGLES = (0.9, 1.9, 2.3)
DEFAULT_UNIPOTENT_POWER = 1024


@dataclass(frozen=True, eq=False)
class PingPongSystem:
    gamma: np.ndarray
    u_gens: tuple
    epsilon: float = 0.05
    N: int = 1
    exceptions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (3, 3):
            raise DimMismatch("the shipped certificate works in SL(3,R)")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "u_gens", tuple(np.asarray(u, dtype=float) for u in self.u_gens))
        if not (is_proximal(g, 1)["proximal"] and is_proximal(np.linalg.inv(g), 1)["proximal"]):
            raise NotBiproximal("gamma must be proximal together with its inverse")

    @cached_property
    def fixed_flags(self) -> dict:
        return fixed_flag_data(self)

    def gamma_power(self, sign: int = 1) -> np.ndarray:
        g = np.linalg.matrix_power(self.gamma, self.N)
        return g if sign > 0 else np.linalg.inv(g)

    def with_power(self, N: int) -> "PingPongSystem":
        out = PingPongSystem(self.gamma, self.u_gens, self.epsilon, N, self.exceptions)
        out.__dict__["fixed_flags"] = self.fixed_flags
        return out

    def to_json(self) -> dict:
        return {"gamma": self.gamma.tolist(), "u_gens": [u.tolist() for u in self.u_gens],
                "epsilon": self.epsilon, "N": self.N}

    @classmethod
    def from_json(cls, obj) -> "PingPongSystem":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(np.array(obj["gamma"]), tuple(np.array(u) for u in obj["u_gens"]),
                   float(obj.get("epsilon", 0.05)), int(obj.get("N", 1)))


def default_system(epsilon: float = 0.05, unipotent_power: int = DEFAULT_UNIPOTENT_POWER) -> PingPongSystem:
    """Conjugated diag(4, 1, 1/4) against a power of the 3x3 Jordan block."""
    h = _rotation_zyz(*DEFAULT_CONJUGATOR_ANGLES)
    gamma = h @ np.diag([4.0, 1.0, 0.25]) @ h.T
    u = np.linalg.matrix_power(jordan_block(3), unipotent_power)
    return PingPongSystem(gamma, (u,), epsilon)


def _flag_from_frames(line: np.ndarray, plane: np.ndarray) -> Flags:
    return Flags.single(line[:, 0].real, np.cross(plane[:, 0].real, plane[:, 1].real))


def fixed_flag_data(system: PingPongSystem, tol: float = 1e-8, max_iter: int = 64) -> dict:
    """Attracting flags of gamma, gamma^-1 and the limit flag of the unipotent group."""
    g = system.gamma
    gi = np.linalg.inv(g)
    plus1, plus2 = proximal_fixed_data(g, 1)["attracting"], proximal_fixed_data(g, 2)["attracting"]
    minus1, minus2 = proximal_fixed_data(gi, 1)["attracting"], proximal_fixed_data(gi, 2)["attracting"]
    out = {"gamma_plus": _flag_from_frames(plus1.frame, plus2.frame),
           "gamma_minus": _flag_from_frames(minus1.frame, minus2.frame)}
    # limit of the Cartan attractors along powers of the first generator; the
    # plane comes from the dual action, since the third singular direction of
    # a large unipotent power is lost to rounding
    u = system.u_gens[0]
    prev = None
    for n, power, dual in _unipotent_powers(u, max_iter):
        cur = Flags.single(singular_values(power).left[:, 0], singular_values(dual).left[:, 0])
        if prev is not None and float(cur.distance(prev)[0]) < tol:
            out["U"] = cur
            return out
        prev = cur
    raise ULimitNotConverged("Cartan attractors of the unipotent powers did not settle")


def _unipotent_powers(u: np.ndarray, count: int):
    """(n, u^n, u^-Tn) for n = 2^k, each rescaled to unit max entry.

    A unipotent u is expanded as sum_k C(n, k) (u - I)^k, which keeps every
    power as accurate as u itself; repeated squaring would compound rounding.
    """
    d = u.shape[0]
    eye = np.eye(d)
    nil, nil_dual = u - eye, np.linalg.inv(u).T - eye
    scale = 1.0 + np.linalg.norm(nil) ** d
    unipotent = (np.linalg.norm(np.linalg.matrix_power(nil, d)) <= 1e-10 * scale
                 and np.linalg.norm(np.linalg.matrix_power(nil_dual, d)) <= 1e-10 * scale)
    power, dual = u.copy(), np.linalg.inv(u).T
    for k in range(count):
        n = 1 << k
        if unipotent:
            power = sum(np.linalg.matrix_power(nil, j) * comb(n, j) for j in range(d))
            dual = sum(np.linalg.matrix_power(nil_dual, j) * comb(n, j) for j in range(d))
        elif k:
            power = power @ power
            dual = dual @ dual
        yield n, power / np.max(np.abs(power)), dual / np.max(np.abs(dual))


def epsilon_admissible(system: PingPongSystem, eps: float | None = None, net_size: int = 512,
                       seed: int = 0) -> dict:
    """Disjointness of the 2 eps balls and sampled cross-transversality."""
    eps = system.epsilon if eps is None else eps
    ff = system.fixed_flags
    names = ["U", "gamma_plus", "gamma_minus"]
    centers = [ff[n] for n in names]
    min_center = min(float(centers[a].distance(centers[b])[0])
                     for a in range(3) for b in range(a + 1, 3))
    disjoint = min_center > 4 * eps
    side = max(8, int(np.sqrt(net_size)))
    balls = [_ball_samples(c, 2 * eps, side, seed + i) for i, c in enumerate(centers)]
    min_gap = np.inf
    for a in range(3):
        for b in range(a + 1, 3):
            A, B = balls[a], balls[b]
            ia, ib = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
            gap = transversality_margin(A[ia.ravel()], B[ib.ravel()])
            min_gap = min(min_gap, float(gap.min()))
    return {"ok": bool(disjoint and min_gap > 1e-6), "min_center_distance": min_center,
            "min_cross_gap": min_gap, "epsilon": eps}


def _ball_samples(center: Flags, radius: float, count: int, seed: int) -> Flags:
    """Flags within ``radius`` of ``center``, including the boundary of the ball."""
    rng = np.random.default_rng(seed)
    l0, n0 = center.lines[0], center.normals[0]
    out_l, out_n = [l0], [n0]
    while len(out_l) < count:
        # tilt the line, take the nearest normal killing it, then spend the
        # remaining budget rotating the normal about the line
        r1 = rng.uniform(0, radius / 2)
        v = rng.normal(size=3)
        v -= (v @ l0) * l0
        v /= np.linalg.norm(v)
        line = np.cos(r1) * l0 + np.sin(r1) * v
        nrm = n0 - (n0 @ line) * line
        nrm /= np.linalg.norm(nrm)
        budget = radius - r1 - float(_proj_angle(nrm[None], n0[None])[0])
        if budget < 0:
            continue
        r2 = budget if len(out_l) % 4 == 0 else rng.uniform(0, budget)
        w = np.cross(line, nrm)
        nrm = np.cos(r2) * nrm + np.sin(r2) * w * rng.choice([-1.0, 1.0])
        out_l.append(line)
        out_n.append(nrm)
    return Flags(np.array(out_l), np.array(out_n))


def certify_gamma(system: PingPongSystem, N: int, eps: float, net_size: int, seed: int = 0) -> dict:
    ff = system.fixed_flags
    gN = np.linalg.matrix_power(system.gamma, N)
    plus = certify_contraction(gN, ff["gamma_minus"], ff["gamma_plus"], eps, net_size, seed)
    minus = certify_contraction(np.linalg.inv(gN), ff["gamma_plus"], ff["gamma_minus"], eps,
                                net_size, seed)
    return {"plus": plus, "minus": minus, "ok": plus.ok and minus.ok}


def choose_power_N(system: PingPongSystem, eps: float | None = None, net_size: int = 4096,
                   N_max: int = 64, seed: int = 0) -> int:
    """Smallest N <= N_max whose gamma^{+-N} certificates pass; doubling then bisection."""
    eps = system.epsilon if eps is None else eps
    N = 1
    while not certify_gamma(system, N, eps, net_size, seed)["ok"]:
        if N >= N_max:
            raise PowerNotFound(f"no power up to {N_max} certifies at eps = {eps}")
        N = min(2 * N, N_max)
    lo, hi = N // 2, N
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if certify_gamma(system, mid, eps, net_size, seed)["ok"]:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def unipotent_letters(system: PingPongSystem, max_exponent: int = 3):
    """Sampled non-identity elements of U': powers u^s, 0 < |s| <= max_exponent, per generator."""
    out = []
    for gen in system.u_gens:
        for s in range(1, max_exponent + 1):
            p = np.linalg.matrix_power(gen, s)
            out.append((f"u^{s}", p))
            out.append((f"u^-{s}", np.linalg.inv(p)))
    return out


def certify_unipotent(system: PingPongSystem, eps: float, net_size: int, seed: int = 0,
                      max_exponent: int = 3) -> dict:
    ff = system.fixed_flags
    reports = {name: certify_contraction(m, ff["U"], ff["U"], eps, net_size, seed)
               for name, m in unipotent_letters(system, max_exponent)}
    return {"letters": reports, "ok": all(r.ok for r in reports.values())}


def good_region_margin(system: PingPongSystem, F: Flags) -> np.ndarray:
    """Smallest distance from each flag to the three excluded neighbourhoods, minus eps."""
    ff = system.fixed_flags
    d = np.minimum.reduce([distance_to_nontransverse(F, ff[n])
                           for n in ("U", "gamma_plus", "gamma_minus")])
    return d - system.epsilon


def default_seed(system: PingPongSystem, index: int = 0, net_size: int = 4096) -> Flags:
    """A net flag deep inside the good region O (largest margin, then by index)."""
    net = flag_net(net_size, 1)
    margin = good_region_margin(system, net)
    order = np.argsort(-margin, kind="stable")
    F = net[order[index:index + 1]]
    if margin[order[index]] <= 0:
        raise SeedNotInGoodRegion("no net flag lies in the good region")
    return F


def certify(system: PingPongSystem, eps: float | None = None, net_size: int = 4096,
            N_max: int = 64, seed: int = 0) -> dict:
    """Full certificate: admissibility, the power N, and both contraction lemmas."""
    eps = system.epsilon if eps is None else eps
    adm = epsilon_admissible(system, eps, seed=seed)
    if not adm["ok"]:
        return {"ok": False, "epsilon": eps, "admissible": adm, "N": None, "net": net_size,
                "seed": seed}
    N = choose_power_N(system, eps, net_size, N_max, seed)
    gam = certify_gamma(system, N, eps, net_size, seed)
    uni = certify_unipotent(system, eps, net_size, seed)
    ok = gam["ok"] and uni["ok"]
    return {
        "ok": bool(ok),
        "label": "numerical evidence",
        "epsilon": eps,
        "N": N,
        "net": net_size,
        "seed": seed,
        "admissible": adm,
        "gamma_plus": gam["plus"].as_dict(),
        "gamma_minus": gam["minus"].as_dict(),
        "unipotent": {k: v.as_dict() for k, v in uni["letters"].items()},
        "margins": {
            "lipschitz": eps - max([gam["plus"].lipschitz_est, gam["minus"].lipschitz_est]
                                   + [v.lipschitz_est for v in uni["letters"].values()]),
            "image_radius": eps - max([gam["plus"].image_radius, gam["minus"].image_radius]
                                      + [v.image_radius for v in uni["letters"].values()]),
            "cross_gap": adm["min_cross_gap"],
        },
    }


# ---- words ---------------------------------------------------------------

@dataclass(frozen=True)
class Letter:
    """gamma^{sign N} (kind 'g') or u^s for a unipotent generator (kind 'u')."""

    kind: str
    exponent: int
    generator: int = 0

    def label(self) -> str:
        if self.kind == "g":
            return "g" if self.exponent > 0 else "G"
        return f"u{self.generator}^{self.exponent}"

    def inverse(self) -> "Letter":
        return Letter(self.kind, -self.exponent, self.generator)


@dataclass(frozen=True)
class ReducedWord:
    letters: tuple
    is_boundary_word: bool = False

    def __post_init__(self):
        for a, b in zip(self.letters, self.letters[1:]):
            if a.kind == "u" and b.kind == "u":
                raise DimMismatch("consecutive unipotent letters are not reduced")
            if a == b.inverse():
                raise DimMismatch("a letter is followed by its inverse")
        for x in self.letters:
            if x.exponent == 0:
                raise DimMismatch("identity letters are not allowed")
        if self.is_boundary_word and self.letters and self.letters[-1].kind == "u":
            raise DimMismatch("boundary words do not end in U")

    def __len__(self):
        return len(self.letters)

    def label(self) -> str:
        return " ".join(x.label() for x in self.letters)


def letter_matrix(system: PingPongSystem, x: Letter) -> np.ndarray:
    if x.kind == "g":
        return system.gamma_power(1 if x.exponent > 0 else -1)
    return np.linalg.matrix_power(system.u_gens[x.generator], x.exponent) if x.exponent > 0 \
        else np.linalg.inv(np.linalg.matrix_power(system.u_gens[x.generator], -x.exponent))


def random_reduced_word(rng: np.random.Generator, length: int, n_gens: int = 1,
                        max_exponent: int = 3) -> ReducedWord:
    letters = []
    while len(letters) < length:
        prev = letters[-1] if letters else None
        if (prev is None or prev.kind != "u") and rng.random() < 0.5:
            s = int(rng.integers(1, max_exponent + 1)) * (1 if rng.random() < 0.5 else -1)
            x = Letter("u", s, int(rng.integers(n_gens)))
        else:
            x = Letter("g", 1 if rng.random() < 0.5 else -1)
        if prev is not None and x == prev.inverse():
            continue
        letters.append(x)
    return ReducedWord(tuple(letters))


def act_word(system: PingPongSystem, word: ReducedWord, F: Flags) -> Flags:
    """x_1 ... x_n (F), applying the last letter first and renormalising each step."""
    out = F
    for x in reversed(word.letters):
        out = out.act(letter_matrix(system, x))
    return out


def _ball_label(system: PingPongSystem, F: Flags) -> str | None:
    ff = system.fixed_flags
    for name in ("gamma_plus", "gamma_minus", "U"):
        if float(F.distance(ff[name])[0]) < system.epsilon:
            return name
    return None


def freeness_witness(system: PingPongSystem, word: ReducedWord, seed_flag: Flags | None = None) -> dict:
    """Evaluate the word on a flag of the good region and report which ball it lands in."""
    if len(word) == 0:
        raise DimMismatch("freeness witnesses need a nonempty word")
    F = default_seed(system) if seed_flag is None else seed_flag
    if good_region_margin(system, F)[0] <= 0:
        raise SeedNotInGoodRegion("seed flag is not in the good region")
    img = act_word(system, word, F)
    label = _ball_label(system, img)
    left = bool(good_region_margin(system, img)[0] <= 0)
    first = word.letters[0]
    expected = "U" if first.kind == "u" else ("gamma_plus" if first.exponent > 0 else "gamma_minus")
    return {"moved_to": label, "expected": expected, "is_nontrivial": left and label is not None}


def freeness_sweep(system: PingPongSystem, count: int = 1000, max_len: int = 12,
                   seed: int = 0) -> dict:
    """Random nonempty reduced words of length <= max_len, each checked for a witness."""
    rng = np.random.default_rng(seed)
    F = default_seed(system)
    failures = 0
    misplaced = 0
    for _ in range(count):
        w = random_reduced_word(rng, int(rng.integers(1, max_len + 1)), len(system.u_gens))
        r = freeness_witness(system, w, F)
        failures += not r["is_nontrivial"]
        misplaced += r["moved_to"] != r["expected"]
    return {"words": count, "failures": failures, "misplaced": misplaced,
            "ok": failures == 0}


# ---- boundary points in extended precision ------------------------------

def _mp_flag_distance(l1, n1, l2, n2) -> mpmath.mpf:
    def ang(a, b):
        c = abs(sum(x * y for x, y in zip(a, b)))
        cr = mpmath.sqrt((a[1] * b[2] - a[2] * b[1]) ** 2 + (a[2] * b[0] - a[0] * b[2]) ** 2
                         + (a[0] * b[1] - a[1] * b[0]) ** 2)
        return mpmath.atan2(cr, c)

    return ang(l1, l2) + ang(n1, n2)


def _mp_unit(v):
    n = mpmath.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def boundary_point(system: PingPongSystem, word: ReducedWord, seed_flag: Flags | None = None,
                   dps: int = 60) -> dict:
    """x_1 ... x_n (F_seed) in extended precision with the error bound eps^n diam / (1 - eps)."""
    F = default_seed(system) if seed_flag is None else seed_flag
    if good_region_margin(system, F)[0] <= 0:
        raise SeedNotInGoodRegion("seed flag is not in the good region")
    eps = system.epsilon
    with mpmath.workdps(dps):
        line = [mpmath.mpf(float(x)) for x in F.lines[0]]
        normal = [mpmath.mpf(float(x)) for x in F.normals[0]]
        for x in reversed(word.letters):
            g = mpmath.matrix(letter_matrix_mp(system, x, dps))
            gi = mpmath.inverse(g)
            line = _mp_unit([sum(g[i, j] * line[j] for j in range(3)) for i in range(3)])
            normal = _mp_unit([sum(normal[i] * gi[i, j] for i in range(3)) for j in range(3)])
        n = len(word)
        bound = eps ** n * FLAG_DIAMETER / (1 - eps)
        return {"line": line, "normal": normal, "error_bound": bound,
                "flag": Flags.single([float(v) for v in line], [float(v) for v in normal])}


def letter_matrix_mp(system: PingPongSystem, x: Letter, dps: int):
    """Exact-as-possible letter matrix: powers are formed in mpmath from the float generators."""
    with mpmath.workdps(dps):
        if x.kind == "g":
            base = mpmath.matrix(system.gamma.tolist())
            e = system.N * (1 if x.exponent > 0 else -1)
        else:
            base = mpmath.matrix(system.u_gens[x.generator].tolist())
            e = x.exponent
        M = base ** abs(e)
        return M if e > 0 else mpmath.inverse(M)


def boundary_point_agreement(system: PingPongSystem, word: ReducedWord, dps: int | None = None) -> dict:
    """Distance between boundary_point images of two different good seeds."""
    if dps is None:
        dps = 40 + 8 * len(word)
    a = boundary_point(system, word, default_seed(system, 0), dps)
    b = boundary_point(system, word, default_seed(system, 7), dps)
    with mpmath.workdps(dps):
        dist = _mp_flag_distance(a["line"], a["normal"], b["line"], b["normal"])
        bound = system.epsilon ** len(word) * FLAG_DIAMETER
        return {"distance": float(dist), "bound": float(2 * bound),
                "ok": bool(dist <= 2 * bound)}


def alternating_boundary_word(length: int, pattern: str = "gu") -> ReducedWord:
    """A boundary word alternating gamma^N and u^1, ending in a gamma letter."""
    letters = []
    for i in range(length):
        if pattern[i % len(pattern)] == "g" or i == length - 1:
            letters.append(Letter("g", 1))
        else:
            letters.append(Letter("u", 1))
    fixed = []
    for x in letters:
        if fixed and fixed[-1].kind == "u" and x.kind == "u":
            x = Letter("g", 1)
        fixed.append(x)
    return ReducedWord(tuple(fixed), is_boundary_word=True)
