"""Clustering of triangles into contours.

Clusters start as singletons and are merged while some pair of clusters
violates the separation rules, until a fixed point is reached.  For two
clusters with covering triangles ``T(G)``, ``T(G')``:

* disjoint covers must satisfy ``dist(G, G') > C * min(|G|**3, |G'|**3)``;
* intersecting covers must be nested, every member of the outer cluster must
  either contain the inner cover or be disjoint from it, and
  ``dist(G, G') > C * |G_inner|**3``.

``dist`` between clusters is the minimum :func:`triangle_distance` over member
pairs and ``|G|`` is the total mass.  Merging only makes clusters larger and
closer, so a violating pair stays violating after any other merge; the fixed
point does not depend on the merge order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .triangles import Triangle, TriangleFamily, triangle_distance


def min_separation_constant(max_terms: int = 100_000) -> int:
    """Smallest integer ``C`` with ``sum_{m>=1} 4m / floor(C m)**3 <= 1/2``."""
    C = 1
    while True:
        lower, upper = separation_series(C, max_terms)
        if upper <= 0.5:
            return C
        if lower > 0.5:
            C += 1
            continue
        raise ArithmeticError(f"series bracket for C={C} straddles 1/2; raise max_terms")


def separation_series(C: float, max_terms: int = 100_000) -> tuple[float, float]:
    """Rigorous bracket on ``sum_{m>=1} 4m / floor(C m)**3``.

    Terms up to ``max_terms`` are summed exactly; the tail is bounded using
    ``floor(C m) >= C m - 1`` and ``floor(C m) <= C m``.
    """
    if C < 1:
        return math.inf, math.inf
    m = np.arange(1, max_terms + 1, dtype=np.float64)
    head = math.fsum(4.0 * m / np.floor(C * m) ** 3)
    M = float(max_terms)
    # m > M: 4/(C^3 m^2) <= term <= 4/(C^3 m^2) * (1 - 1/(C(M+1)))^-3
    # and 1/(M+1) <= sum_{m>M} 1/m^2 <= 1/M
    tail_low = 4.0 / C**3 / (M + 1.0)
    shrink = (1.0 - 1.0 / (C * (M + 1.0))) ** 3
    tail_high = 4.0 / C**3 / M / shrink
    return head + tail_low, head + tail_high


@dataclass(frozen=True)
class Contour:
    """A cluster of triangles."""

    triangles: tuple[Triangle, ...]

    def __post_init__(self):
        if not self.triangles:
            raise ValueError("a contour has at least one triangle")
        object.__setattr__(self, "triangles", tuple(sorted(self.triangles)))

    @property
    def mass(self) -> int:
        return sum(t.mass for t in self.triangles)

    @property
    def span(self) -> tuple[int, int]:
        return min(t.start for t in self.triangles), max(t.end for t in self.triangles)

    @property
    def cover(self) -> Triangle:
        return Triangle(*self.span)

    def to_dict(self) -> dict:
        return {
            "triangles": [t.to_dict() for t in self.triangles],
            "mass": self.mass,
            "span": list(self.span),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def contour_distance(a: Iterable[Triangle], b: Iterable[Triangle]) -> int:
    b = list(b)
    return min(triangle_distance(t, u) for t in a for u in b)


def _span(tris) -> tuple[int, int]:
    return min(t.start for t in tris), max(t.end for t in tris)


def separation_violated(a: list[Triangle], b: list[Triangle], C: float) -> bool:
    """Whether clusters ``a`` and ``b`` must be merged."""
    (a0, a1), (b0, b1) = _span(a), _span(b)
    ma, mb = sum(t.mass for t in a), sum(t.mass for t in b)
    if a1 < b0 or b1 < a0:
        return contour_distance(a, b) <= C * min(ma, mb) ** 3
    if b0 <= a0 and a1 <= b1:
        inner, outer, m_inner, cover = a, b, ma, Triangle(a0, a1)
    elif a0 <= b0 and b1 <= a1:
        inner, outer, m_inner, cover = b, a, mb, Triangle(b0, b1)
    else:
        return True
    if any(not (t.contains(cover) or t.disjoint(cover)) for t in outer):
        return True
    return contour_distance(inner, outer) <= C * m_inner**3


def _cluster(triangles: list[Triangle], C: float, rng: np.random.Generator | None = None):
    clusters = [[t] for t in sorted(triangles)]
    while True:
        bad = [
            (i, j)
            for i in range(len(clusters))
            for j in range(i + 1, len(clusters))
            if separation_violated(clusters[i], clusters[j], C)
        ]
        if not bad:
            return clusters
        i, j = bad[0] if rng is None else bad[int(rng.integers(len(bad)))]
        clusters[i] = clusters[i] + clusters[j]
        del clusters[j]


def decompose_contours(family: TriangleFamily | Iterable[Triangle], C: float = 3,
                       rng: np.random.Generator | None = None) -> list[Contour]:
    """Partition a triangle family into contours.

    ``rng``, when given, picks a random violating pair at every merge step
    instead of the first one; the result is the same either way.
    """
    tris = list(family.triangles if isinstance(family, TriangleFamily) else family)
    clusters = _cluster(tris, C, rng)
    return sorted((Contour(tuple(c)) for c in clusters), key=lambda g: (g.span, g.triangles))


@dataclass
class ContourReport:
    partition_ok: bool = True
    mass_ok: bool = True
    separation_ok: bool = True
    idempotent: bool = True
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.partition_ok and self.mass_ok and self.separation_ok and self.idempotent

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "partition_ok": self.partition_ok,
            "mass_ok": self.mass_ok,
            "separation_ok": self.separation_ok,
            "idempotent": self.idempotent,
            "failures": list(self.failures),
        }


def verify_contours(contours: list[Contour], C: float = 3,
                    family: TriangleFamily | Iterable[Triangle] | None = None) -> ContourReport:
    """Audit a contour decomposition.

    Checks that contours partition ``family`` (when given) with conserved
    mass, that every pair satisfies the separation rules, and that
    re-decomposing the union, or any single contour on its own, changes
    nothing.
    """
    rep = ContourReport()
    members = [t for g in contours for t in g.triangles]
    if family is not None:
        source = list(family.triangles if isinstance(family, TriangleFamily) else family)
        if sorted(members) != sorted(source):
            rep.partition_ok = False
            rep.failures.append("contours do not partition the family")
        if sum(g.mass for g in contours) != sum(t.mass for t in source):
            rep.mass_ok = False
            rep.failures.append("mass not conserved")
    if len(set(members)) != len(members):
        rep.partition_ok = False
        rep.failures.append("a triangle belongs to two contours")
    for i, g in enumerate(contours):
        if g.mass != sum(t.mass for t in g.triangles):
            rep.mass_ok = False
        for h in contours[i + 1:]:
            if separation_violated(list(g.triangles), list(h.triangles), C):
                rep.separation_ok = False
                rep.failures.append(f"contours {g.span} and {h.span} are not separated")
    if contours and decompose_contours(members, C) != sorted(contours, key=lambda g: (g.span, g.triangles)):
        rep.idempotent = False
        rep.failures.append("re-decomposition changed the contours")
    for g in contours:
        if decompose_contours(g.triangles, C) != [g]:
            rep.idempotent = False
            rep.failures.append(f"contour {g.span} splits when decomposed alone")
    return rep


def independence_holds(first: Iterable[Triangle], second: Iterable[Triangle], C: float = 3) -> bool:
    """Decomposing a union of mutually separated families equals the union of decompositions."""
    first, second = list(first), list(second)
    parts = decompose_contours(first, C) + decompose_contours(second, C)
    for g in decompose_contours(first, C):
        for h in decompose_contours(second, C):
            if separation_violated(list(g.triangles), list(h.triangles), C):
                raise ValueError("the two families are not mutually separated")
    joint = decompose_contours(first + second, C)
    return joint == sorted(parts, key=lambda g: (g.span, g.triangles))
