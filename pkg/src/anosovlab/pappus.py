"""Marked boxes and the action of the modular group on them.

A box is six points (p, q, r, s, t, b) and six lines (P, Q, R, S, T, B)
with t on pq, b on sr, s and t on P, t and r on Q, p and b on S, b and q on R.
Points and lines are homogeneous triples.  Exact mode keeps Fractions
normalised so the first nonzero entry is 1; floating mode uses unit vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import CoincidentArguments, DegenerateConfiguration, IncidenceViolated

POINT_NAMES = ("p", "q", "r", "s", "t", "b")
LINE_NAMES = ("P", "Q", "R", "S", "T", "B")
_FLIP = (1, 0, 3, 2, 4, 5)
# (line, point) incidences
INCIDENCES = (
    ("T", "p"), ("T", "t"), ("T", "q"),
    ("B", "s"), ("B", "b"), ("B", "r"),
    ("P", "s"), ("P", "t"),
    ("Q", "t"), ("Q", "r"),
    ("S", "p"), ("S", "b"),
    ("R", "b"), ("R", "q"),
)
FLOAT_TOL = 1e-9


def cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _is_exact(v) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in v)


def normalize(v):
    """Projective normal form: first nonzero entry 1 (exact) or unit with that entry positive."""
    if _is_exact(v):
        lead = next((x for x in v if x != 0), None)
        if lead is None:
            raise CoincidentArguments("zero vector")
        return tuple(Fraction(x) / lead for x in v)
    a = np.asarray(v, dtype=float)
    n = np.linalg.norm(a)
    if n == 0 or not np.isfinite(n):
        raise CoincidentArguments("zero vector")
    a = a / n
    lead = a[np.argmax(np.abs(a) > 1e-12)]
    return tuple(float(x) for x in (a if lead > 0 else -a))


def _join(u, v, what: str):
    w = cross(u, v)
    if all(x == 0 for x in w) if _is_exact(w) else np.linalg.norm(w) < 1e-14:
        raise CoincidentArguments(f"{what} of dependent arguments")
    return normalize(w)


def line_through(p, q):
    """Covector of the line through two points."""
    return _join(p, q, "line_through")


def meet(P, Q):
    """Intersection point of two lines."""
    return _join(P, Q, "meet")


def _flip_tuples(points, lines):
    return tuple(points[i] for i in _FLIP), tuple(lines[i] for i in _FLIP)


def to_float(v):
    return normalize(tuple(float(x) for x in v))


@dataclass(frozen=True)
class MarkedBox:
    points: tuple
    lines: tuple

    def __post_init__(self):
        if len(self.points) != 6 or len(self.lines) != 6:
            raise IncidenceViolated("a box has six points and six lines")
        pts = tuple(normalize(p) for p in self.points)
        lines = tuple(normalize(L) for L in self.lines)
        fpts, flines = _flip_tuples(pts, lines)
        if fpts + flines < pts + lines:
            pts, lines = fpts, flines
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lines", lines)

    @property
    def exact(self) -> bool:
        return all(_is_exact(v) for v in self.points + self.lines)

    def point(self, name: str):
        return self.points[POINT_NAMES.index(name)]

    def line(self, name: str):
        return self.lines[LINE_NAMES.index(name)]

    def residuals(self) -> list:
        out = []
        for L, p in INCIDENCES:
            r = dot(self.line(L), self.point(p))
            out.append(abs(r) if self.exact else abs(float(r)))
        return out

    def max_residual(self):
        return max(self.residuals())

    def verify(self, tol: float = FLOAT_TOL) -> "MarkedBox":
        res = self.max_residual()
        if (res != 0) if self.exact else (res > tol):
            raise IncidenceViolated(f"incidence residual {float(res):.3e}")
        return self

    def flipped_tuples(self) -> tuple:
        """The other representative, as raw (points, lines); constructing a box re-canonicalizes."""
        return _flip_tuples(self.points, self.lines)

    def key(self) -> tuple:
        return self.points + self.lines

    def same_as(self, other: "MarkedBox", tol: float = 1e-9) -> bool:
        """Equality of marked boxes, i.e. up to the flip."""
        if self.exact and other.exact:
            return self.key() == other.key()
        fp, fl = other.flipped_tuples()
        return min(box_distance(self.key(), other.key()), box_distance(self.key(), fp + fl)) <= tol

    def to_float(self) -> "MarkedBox":
        return MarkedBox(tuple(to_float(p) for p in self.points),
                         tuple(to_float(L) for L in self.lines))

    def to_json(self) -> dict:
        def enc(v):
            if _is_exact(v):
                return [str(Fraction(x)) for x in v]
            return [float(x) for x in v]

        return {"points": {n: enc(p) for n, p in zip(POINT_NAMES, self.points)},
                "lines": {n: enc(L) for n, L in zip(LINE_NAMES, self.lines)}}

    @classmethod
    def from_json(cls, obj) -> "MarkedBox":
        if isinstance(obj, str):
            obj = json.loads(obj)

        def dec(v):
            if all(isinstance(x, (int, str)) for x in v):
                return tuple(Fraction(x) for x in v)
            return tuple(float(x) for x in v)

        pts = tuple(dec(obj["points"][n]) for n in POINT_NAMES)
        if "lines" in obj:
            lines = tuple(dec(obj["lines"][n]) for n in LINE_NAMES)
            return cls(pts, lines).verify()
        return box_from_points(*pts)


def box_from_points(p, q, r, s, t, b) -> MarkedBox:
    """Box whose lines are derived from the six points; t must lie on pq and b on sr."""
    T, B = line_through(p, q), line_through(s, r)
    P, Q = line_through(s, t), line_through(t, r)
    S, R = line_through(p, b), line_through(b, q)
    return MarkedBox((p, q, r, s, t, b), (P, Q, R, S, T, B)).verify()


def standard_box(exact: bool = True) -> MarkedBox:
    F = Fraction
    pts = [(0, 1, 1), (1, 1, 1), (1, 0, 1), (0, 0, 1), (1, 2, 2), (1, 0, 2)]
    box = box_from_points(*[tuple(F(x) for x in v) for v in pts])
    return box if exact else box.to_float()


def random_rational_box(rng: np.random.Generator, size: int = 9) -> MarkedBox:
    """Random box with small integer points; t and b are rational points on pq and sr."""
    while True:
        p, q, r, s = (tuple(Fraction(int(x)) for x in rng.integers(-size, size + 1, size=3))
                      for _ in range(4))
        lam, mu = (Fraction(int(rng.integers(1, size + 1)), int(rng.integers(1, size + 1)))
                   for _ in range(2))
        t = tuple(a + lam * c for a, c in zip(p, q))
        b = tuple(a + mu * c for a, c in zip(s, r))
        try:
            box = box_from_points(p, q, r, s, t, b)
        except (CoincidentArguments, IncidenceViolated):
            continue
        if _generic(box):
            return box


def _generic(box: MarkedBox) -> bool:
    """All six points and six lines distinct, and every meet used by the cycle defined."""
    if len(set(box.points)) < 6 or len(set(box.lines)) < 6:
        return False
    try:
        a_cycle(a_cycle(box))
    except (CoincidentArguments, DegenerateConfiguration, IncidenceViolated):
        return False
    return True


def box_distance(A, B) -> float:
    """Largest projective angle between corresponding entries of two point-and-line tuples."""
    worst = 0.0
    for u, v in zip(A, B):
        a, b = np.asarray(to_float(u)), np.asarray(to_float(v))
        c = abs(float(a @ b))
        worst = max(worst, float(np.arctan2(np.linalg.norm(np.cross(a, b)), c)))
    return worst


def point_set_distance(A: MarkedBox, B: MarkedBox) -> float:
    """Distance between the point tuples, minimised over the flip."""
    flipped = B.flipped_tuples()[0]
    return min(box_distance(A.points, B.points), box_distance(A.points, flipped))


def dual_box(box: MarkedBox) -> MarkedBox:
    """The exterior box ((s,r,p,q,b,t),(R,S,Q,P,B,T))."""
    box.verify()
    p, q, r, s, t, b = box.points
    P, Q, R, S, T, B = box.lines
    return MarkedBox((s, r, p, q, b, t), (R, S, Q, P, B, T)).verify()


def a_cycle(box: MarkedBox) -> MarkedBox:
    """((PS, QR, p, q, (qs)(pr), t), (qs, pr, Q, P, (QR)(PS), T))."""
    box.verify()
    p, q, r, s, t, b = box.points
    P, Q, R, S, T, B = box.lines
    try:
        PS, QR = meet(P, S), meet(Q, R)
        qs, pr = line_through(q, s), line_through(p, r)
        mid = meet(qs, pr)
        top = line_through(QR, PS)
    except CoincidentArguments as exc:
        raise DegenerateConfiguration(str(exc)) from exc
    out = MarkedBox((PS, QR, p, q, mid, t), (qs, pr, Q, P, top, T))
    try:
        return out.verify()
    except IncidenceViolated as exc:
        raise DegenerateConfiguration(str(exc)) from exc


def a_inverse(box: MarkedBox) -> MarkedBox:
    return a_cycle(a_cycle(box))


LETTER_ACTIONS = {"a": a_cycle, "A": a_inverse, "d": dual_box}


def apply_word(box: MarkedBox, word: str) -> MarkedBox:
    """Box of the word x1...xn: the letter maps are applied left to right."""
    for ch in str(getattr(word, "letters", word)):
        box = LETTER_ACTIONS[ch](box)
    return box


@dataclass(frozen=True)
class BoxWord:
    """Reduced word in <a, d | a^3 = d^2 = 1>; ``A`` stands for the inverse of ``a``."""

    letters: str = ""

    def __post_init__(self):
        if not is_normal_form(self.letters):
            raise ValueError(f"not a reduced word: {self.letters!r}")

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return self.letters.replace("A", "a^-1") or "e"


def is_normal_form(word: str) -> bool:
    for x, y in zip(word, word[1:]):
        if (x == "d") == (y == "d"):
            return False
    return all(ch in LETTER_ACTIONS for ch in word)


def normal_form_words(length: int):
    """Reduced words of exactly this length in Z/3 * Z/2, in a fixed order."""
    if length == 0:
        return [""]
    out = []
    for start_d in (False, True):
        slots = [(i % 2 == 0) == start_d for i in range(length)]
        n_a = slots.count(False)
        for choice in product("aA", repeat=n_a):
            it = iter(choice)
            out.append("".join("d" if is_d else next(it) for is_d in slots))
    return out


def normal_form_count(length: int) -> int:
    if length == 0:
        return 1
    return 2 ** ((length + 1) // 2) + 2 ** (length // 2)


def orbit(box: MarkedBox, max_len: int):
    """(word, box) for every normal-form word up to ``max_len``, by extension of shorter words."""
    if max_len > 12:
        raise DegenerateConfiguration("max_len is limited to 12")
    out = [("", box)]
    layer = [("", box)]
    for _ in range(max_len):
        nxt = []
        for word, B in layer:
            last = word[-1:] if word else ""
            letters = "aAd" if not word else ("d" if last in "aA" else "aA")
            for ch in letters:
                nxt.append((word + ch, LETTER_ACTIONS[ch](B)))
        out.extend(nxt)
        layer = nxt
    return [(BoxWord(w), B) for w, B in out]


# ---- convex interiors and rendering -------------------------------------

@dataclass(frozen=True)
class ConvexInterior:
    """Open convex cone over the quadrilateral p, q, r, s whose pq side holds t and rs side holds b."""

    vertices: np.ndarray  # lifted p, q, r, s
    normals: np.ndarray  # inward side normals

    def contains(self, x, tol: float = 0.0) -> bool:
        v = np.asarray(to_float(x))
        s = self.normals @ v
        return bool(np.all(s > -tol) or np.all(s < tol))

    def contains_cone(self, other: "ConvexInterior", tol: float = 1e-9) -> bool:
        """Closure containment of another interior."""
        return all(self.contains(v, tol) for v in other.vertices)

    def chart_vertices(self):
        """Affine vertices in the chart z = 1, or ``None`` when the region meets the line at infinity."""
        z = self.vertices[:, 2]
        if not (np.all(z > 1e-12) or np.all(z < -1e-12)):
            return None
        return self.vertices[:, :2] / z[:, None]


def _positive_pair(x, y, mid):
    """Signs making ``mid`` a positive combination of the lifts of x and y."""
    coef, *_ = np.linalg.lstsq(np.column_stack([x, y]), mid, rcond=None)
    if np.any(np.abs(coef) < 1e-14):
        raise DegenerateConfiguration("marked point coincides with a corner")
    return np.sign(coef[0]) * x, np.sign(coef[1]) * y


def convex_interior(box: MarkedBox) -> ConvexInterior:
    p, q, r, s, t, b = (np.asarray(to_float(v)) for v in box.points)
    p, q = _positive_pair(p, q, t)
    r, s = _positive_pair(r, s, b)
    for eps in (1.0, -1.0):
        V = np.array([p, q, eps * r, eps * s])
        dets = np.array([np.linalg.det(V[[i, (i + 1) % 4, (i + 2) % 4]]) for i in range(4)])
        if np.all(dets > 0) or np.all(dets < 0):
            sign = np.sign(dets[0])
            normals = np.array([sign * np.cross(V[i], V[(i + 1) % 4]) for i in range(4)])
            normals /= np.linalg.norm(normals, axis=1)[:, None]
            return ConvexInterior(V, normals)
    raise DegenerateConfiguration("p, q, r, s do not bound a convex quadrilateral")


def interiors_disjoint(A: ConvexInterior, B: ConvexInterior) -> bool:
    """True when no projective point lies in both open interiors."""
    from scipy.optimize import linprog

    for sign in (1.0, -1.0):
        rows = np.vstack([A.normals, sign * B.normals])
        res = linprog(np.zeros(3), A_ub=-rows, b_ub=-np.ones(len(rows)),
                      bounds=[(None, None)] * 3, method="highs")
        if res.status == 0:
            return False
    return True


def visible_region(box: MarkedBox):
    """(kind, chart vertices) of the box interior, or of its dual when only that is bounded."""
    for kind, B in (("box", box), ("dual", dual_box(box))):
        P = convex_interior(B).chart_vertices()
        if P is not None:
            return kind, P
    return None, None


def point_in_convex(P: np.ndarray, x, tol: float = 1e-12) -> bool:
    """Planar point-in-convex-polygon test."""
    x = np.asarray(x, dtype=float)
    n = len(P)
    s = [(P[(i + 1) % n][0] - P[i][0]) * (x[1] - P[i][1])
         - (P[(i + 1) % n][1] - P[i][1]) * (x[0] - P[i][0]) for i in range(n)]
    return all(v >= -tol for v in s) or all(v <= tol for v in s)


def diameter(P: np.ndarray) -> float:
    return float(max(np.linalg.norm(a - b) for a in P for b in P))


def area(P: np.ndarray) -> float:
    x, y = P[:, 0], P[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2)


_PALETTE = ("#1b4f72", "#2874a6", "#3498db", "#5dade2", "#85c1e9", "#aed6f1", "#d6eaf8",
            "#ebf5fb")


def render_regions(box: MarkedBox, depth: int):
    """Visible bounded regions of the orbit up to ``depth``, deduplicated, in word order.

    Returns (regions, skipped) where each region is (word, kind, vertices) and
    ``skipped`` counts boxes whose interior and dual both meet the line at infinity.
    """
    regions, seen, skipped = [], set(), 0
    for word, B in orbit(box.to_float(), depth):
        kind, P = visible_region(B)
        if P is None:
            skipped += 1
            continue
        key = tuple(sorted(tuple(np.round(v, 9)) for v in P))
        if key in seen:
            continue
        seen.add(key)
        regions.append((word.letters, kind, P))
    return regions, skipped


def render_svg(box: MarkedBox, depth: int, size: int = 800, config: dict | None = None) -> str:
    """SVG of the orbit's bounded convex interiors, shaded by word length."""
    regions, skipped = render_regions(box, depth)
    allpts = np.vstack([P for _, _, P in regions])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * span
    scale = size / (span + 2 * pad)

    def xy(v):
        return f"{(v[0] - lo[0] + pad) * scale:.4f},{size - (v[1] - lo[1] + pad) * scale:.4f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
    ]
    meta = dict(config or {}, regions=len(regions), skipped_unbounded=skipped)
    out.append("<!-- " + json.dumps(meta, sort_keys=True).replace("--", "- -") + " -->")
    for word, kind, P in regions:
        color = _PALETTE[min(len(word), len(_PALETTE) - 1)]
        pts = " ".join(xy(v) for v in P)
        out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.35" stroke="#000" '
                   f'stroke-width="0.5" data-word="{word or "e"}" data-kind="{kind}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_limit(box: MarkedBox, depth: int, out, config: dict | None = None) -> str:
    """Write the SVG atomically to ``out`` and return its text."""
    from .fileio import atomic_write_text

    text = render_svg(box, depth, config=config)
    atomic_write_text(out, text)
    return text
