"""Enumeration of small contours through the origin and their weight sums."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from ..exceptions import EnumerationSizeError
from .contours import decompose_contours
from .peierls import mass_cost
from .triangles import Triangle, TriangleFamily, compatible, is_valid_family

MAX_ENTROPY_MASS = 4
ORIGIN_CONVENTIONS = ("cover", "member")


def contour_weight(contour, b: float, alpha: float) -> float:
    """``prod_T exp(-b |T|^alpha)``; at ``alpha = 0`` the exponent is ``b (log|T| + 4)``."""
    tris = contour.triangles if hasattr(contour, "triangles") else tuple(contour)
    if not tris:
        raise ValueError("a contour has at least one triangle")
    return math.exp(-b * math.fsum(mass_cost(t.mass, alpha) for t in tris))


def _partitions(m: int, largest: int | None = None):
    largest = m if largest is None else largest
    if m == 0:
        yield ()
        return
    for k in range(min(m, largest), 0, -1):
        for rest in _partitions(m - k, k):
            yield (k,) + rest


def _chain_gap(m: int, C: float) -> float:
    # two disjoint clusters merge only when dist <= C * min(mass)^3 <= C * (m // 2)^3
    return C * (m // 2) ** 3


@lru_cache(maxsize=None)
def enumerate_contours(m: int, C: float = 3, origin: str = "cover") -> tuple[tuple[Triangle, ...], ...]:
    """All single contours of total mass ``m`` through the origin.

    Triangles are confined to ``[-(C m^3 + m), C m^3 + m]``.  With
    ``origin="cover"`` the covering triangle must contain site 0; with
    ``origin="member"`` some member support must.  Candidates are generated
    left to right with gaps bounded by the largest possible merge distance,
    then kept only if they form a compatible, realizable family that
    decomposes into a single contour.
    """
    if m < 1:
        raise ValueError("contour mass must be positive")
    if m > MAX_ENTROPY_MASS:
        raise EnumerationSizeError(f"contour enumeration is capped at mass {MAX_ENTROPY_MASS}")
    if origin not in ORIGIN_CONVENTIONS:
        raise ValueError(f"origin convention must be one of {ORIGIN_CONVENTIONS}")
    half = int(C * m**3 + m)
    gap = _chain_gap(m, C)
    found = []

    def accept(chosen):
        lo = min(t.start for t in chosen)
        hi = max(t.end for t in chosen)
        if origin == "cover" and not lo <= 0 <= hi:
            return
        if origin == "member" and not any(t.covers(0) for t in chosen):
            return
        family = TriangleFamily(tuple(chosen))
        if not (compatible(family) and is_valid_family(family)):
            return
        if len(decompose_contours(family, C)) == 1:
            found.append(tuple(sorted(chosen)))

    def extend(chosen, remaining: Counter, maxend):
        if not remaining:
            accept(chosen)
            return
        last = chosen[-1]
        for mass in sorted(remaining):
            left = remaining.copy()
            left[mass] -= 1
            if not left[mass]:
                del left[mass]
            for start in range(last.start, int(maxend + gap) + 1):
                t = Triangle(start, start + mass - 1)
                if t <= last or t.end > half:
                    continue
                extend(chosen + [t], left, max(maxend, t.end))

    for parts in _partitions(m):
        span_limit = m + (len(parts) - 1) * gap
        for first_mass in sorted(set(parts)):
            rest = Counter(parts)
            rest[first_mass] -= 1
            if not rest[first_mass]:
                del rest[first_mass]
            for start in range(max(-half, -int(span_limit)), 1):
                t = Triangle(start, start + first_mass - 1)
                if t.end > half:
                    continue
                extend([t], rest, t.end)
    return tuple(sorted(set(found)))


@dataclass
class EntropyResult:
    m: int
    b: float
    alpha: float
    C: float
    total: float
    bound: float
    count: int
    counts_by_masses: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.total <= self.bound

    def to_dict(self) -> dict:
        return {
            "m": self.m, "b": self.b, "alpha": self.alpha, "C": self.C,
            "sum": self.total, "bound": self.bound, "count": self.count,
            "holds": self.holds, "counts_by_masses": self.counts_by_masses,
        }


def entropy_sum(m: int, b: float, alpha: float, C: float = 3, origin: str = "cover",
                c0: float = 6.0) -> EntropyResult:
    """Sum of contour weights over contours of mass ``m`` through the origin.

    Returns the sum with the bound ``2 m exp(-b m^alpha)`` (``alpha = 0``:
    ``2 m exp(-b (log m + 4))``).  For ``b >= c0`` the bound is asserted.
    """
    contours = enumerate_contours(m, C, origin)
    weights = [contour_weight(g, b, alpha) for g in contours]
    by_masses = Counter(",".join(str(t.mass) for t in sorted(g, key=lambda t: -t.mass)) for g in contours)
    res = EntropyResult(
        m, b, alpha, C,
        total=math.fsum(weights),
        bound=2.0 * m * math.exp(-b * mass_cost(m, alpha)),
        count=len(contours),
        counts_by_masses=dict(sorted(by_masses.items())),
    )
    if b >= c0 and not res.holds:
        raise AssertionError(f"entropy bound fails: m={m}, b={b}, alpha={alpha}: {res.total} > {res.bound}")
    return res
