"""Interface points and the vee-line triangle representation.

With ``+`` boundary conditions a configuration has an even number of
interfaces, placed at half-integers ``x + 1/2`` whenever ``s_x != s_{x+1}``.
From each interface two lines grow at equal speed; when lines from two
neighbouring points meet, those points are paired into a triangle and
removed.  Collisions therefore happen in order of the gap between
neighbouring active points, and the pairing is computed by repeatedly taking
the adjacent pair with the smallest gap.  Exact ties are broken by taking the
leftmost pair, which fixes one admissible collision order.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..exceptions import DomainError, InvalidFamilyError
from ..model import SpinWindow, Window


@dataclass(frozen=True, order=True)
class Triangle:
    """A triangle whose basis covers the sites ``start..end``."""

    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start:
            raise DomainError(f"triangle support [{self.start}, {self.end}] is empty")

    @property
    def mass(self) -> int:
        return self.end - self.start + 1

    @property
    def left(self) -> float:
        return self.start - 0.5

    @property
    def right(self) -> float:
        return self.end + 0.5

    @property
    def support(self) -> tuple[int, int]:
        return self.start, self.end

    def contains(self, other: "Triangle") -> bool:
        return self.start <= other.start and other.end <= self.end

    def disjoint(self, other: "Triangle") -> bool:
        return self.end < other.start or other.end < self.start

    def covers(self, site: int) -> bool:
        return self.start <= site <= self.end

    def to_dict(self) -> dict:
        return {"support": [self.start, self.end], "mass": self.mass}


def triangle_distance(t: Triangle, u: Triangle) -> int:
    """Lattice distance between two triangles.

    Disjoint supports: ``min |i - j|`` over support sites.  Nested supports:
    distance from the inner support to the complement of the outer one,
    ``min(inner.start - outer.start, outer.end - inner.end) + 1``.  Crossing
    supports (never produced by the construction) are at distance 0.
    """
    if t.disjoint(u):
        return max(u.start - t.end, t.start - u.end)
    if u.contains(t):
        inner, outer = t, u
    elif t.contains(u):
        inner, outer = u, t
    else:
        return 0
    return min(inner.start - outer.start, outer.end - inner.end) + 1


@dataclass(frozen=True)
class TriangleFamily:
    """Triangles sorted by support, with the window they were built on."""

    triangles: tuple[Triangle, ...]
    lo: int | None = None
    hi: int | None = None
    boundary: int = 1

    def __post_init__(self):
        object.__setattr__(self, "triangles", tuple(sorted(self.triangles)))
        if self.triangles:
            first = min(t.start for t in self.triangles)
            last = max(t.end for t in self.triangles)
            if self.lo is None:
                object.__setattr__(self, "lo", first)
            if self.hi is None:
                object.__setattr__(self, "hi", last)
            if first < self.lo or last > self.hi:
                raise DomainError("triangle supports leave the family window")
        elif self.lo is None or self.hi is None:
            object.__setattr__(self, "lo", 0 if self.lo is None else self.lo)
            object.__setattr__(self, "hi", self.lo if self.hi is None else self.hi)

    def __len__(self):
        return len(self.triangles)

    def __iter__(self):
        return iter(self.triangles)

    @property
    def window(self) -> Window:
        return Window(self.lo, self.hi, self.boundary)

    @property
    def masses(self) -> list[int]:
        return [t.mass for t in self.triangles]

    def with_triangles(self, triangles: Iterable[Triangle]) -> "TriangleFamily":
        return TriangleFamily(tuple(triangles), self.lo, self.hi, self.boundary)

    def without(self, removed: Iterable[Triangle]) -> "TriangleFamily":
        removed = set(removed)
        return self.with_triangles(t for t in self.triangles if t not in removed)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(t.to_dict()) + "\n" for t in self.triangles)


def interface_sites(spins: SpinWindow) -> list[int]:
    """Sites ``x`` such that ``(x, x+1)`` is an interface, boundary included."""
    ext = np.concatenate([[spins.boundary], spins.spins, [spins.boundary]])
    cut = np.flatnonzero(ext[1:] != ext[:-1])
    return [int(c) + spins.lo - 1 for c in cut]


def _pair_interfaces(points: list[int]) -> list[tuple[int, int]]:
    """Collision pairing of interface sites (interface ``x`` sits at ``x + 1/2``)."""
    k = len(points)
    if k % 2:
        raise AssertionError(f"odd number of interfaces ({k}); boundary must be homogeneous")
    prev = list(range(-1, k - 1))
    nxt = list(range(1, k + 1))
    alive = [True] * k
    heap = [(points[i + 1] - points[i], points[i], i, i + 1) for i in range(k - 1)]
    heapq.heapify(heap)
    pairs = []
    while heap:
        _, _, i, j = heapq.heappop(heap)
        if not (alive[i] and alive[j] and nxt[i] == j):
            continue
        pairs.append((points[i], points[j]))
        alive[i] = alive[j] = False
        p, q = prev[i], nxt[j]
        if p >= 0:
            nxt[p] = q
        if q < k:
            prev[q] = p
        if p >= 0 and q < k:
            heapq.heappush(heap, (points[q] - points[p], points[p], p, q))
    return pairs


def triangles_from_spins(spins: SpinWindow) -> TriangleFamily:
    """Triangle family of a ``+``-boundary configuration."""
    if spins.boundary != 1:
        raise DomainError("the triangle representation is defined for + boundary conditions")
    pairs = _pair_interfaces(interface_sites(spins))
    tris = tuple(Triangle(a + 1, b) for a, b in pairs)
    return TriangleFamily(tris, spins.lo, spins.hi, 1)


def check_disjoint_or_nested(triangles: Iterable[Triangle]) -> None:
    """Raise :class:`InvalidFamilyError` on duplicate or crossing supports."""
    ordered = sorted(triangles, key=lambda t: (t.start, -t.end))
    stack: list[Triangle] = []
    for t in ordered:
        while stack and stack[-1].end < t.start:
            stack.pop()
        if stack:
            top = stack[-1]
            if top == t:
                raise InvalidFamilyError(f"duplicate triangle {t.support}")
            if top.end < t.end:
                raise InvalidFamilyError(f"supports {top.support} and {t.support} cross")
        stack.append(t)


def spins_from_triangles(family: TriangleFamily, window: Window | None = None) -> SpinWindow:
    """Configuration whose spin at ``i`` is ``(-1)**(number of supports covering i)``."""
    window = window if window is not None else family.window
    if window.boundary != 1:
        raise DomainError("the triangle representation is defined for + boundary conditions")
    check_disjoint_or_nested(family.triangles)
    diff = np.zeros(window.size + 1, dtype=np.int64)
    for t in family.triangles:
        if t.start < window.lo or t.end > window.hi:
            raise DomainError(f"triangle {t.support} leaves window [{window.lo}, {window.hi}]")
        diff[t.start - window.lo] += 1
        diff[t.end - window.lo + 1] -= 1
    depth = np.cumsum(diff[:-1])
    spins = np.where(depth % 2 == 0, 1, -1).astype(np.int8)
    return SpinWindow(window.lo, window.hi, spins, 1)


def is_valid_family(family: TriangleFamily) -> bool:
    """Whether ``family`` is the image of some configuration."""
    try:
        sigma = spins_from_triangles(family)
    except InvalidFamilyError:
        return False
    return triangles_from_spins(sigma).triangles == family.triangles


def compatible(family: TriangleFamily | Iterable[Triangle]) -> bool:
    """Pairwise separation ``dist(T, T') >= min(|T|, |T'|)`` for disjoint supports.

    Nested pairs are not distance-checked here; they are validated through
    the spins/triangles roundtrip (:func:`is_valid_family`).
    """
    tris = list(family.triangles if isinstance(family, TriangleFamily) else family)
    for a_idx, t in enumerate(tris):
        for u in tris[a_idx + 1:]:
            if t.disjoint(u) and triangle_distance(t, u) < min(t.mass, u.mass):
                return False
    return True
