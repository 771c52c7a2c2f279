"""Erasure energies of triangles and the Peierls lower bounds they satisfy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DomainError
from ..model import CouplingTable
from .contours import decompose_contours
from .triangles import TriangleFamily, spins_from_triangles

ZETA_ALPHA_MAX = math.log(3) / math.log(2) - 1.0


def zeta(alpha: float) -> float:
    """``1 - 2 (2**alpha - 1)``, positive for ``0 <= alpha < log3/log2 - 1``."""
    if not 0.0 <= alpha < ZETA_ALPHA_MAX:
        raise DomainError(f"alpha must lie in [0, {ZETA_ALPHA_MAX:.6f}), got {alpha}")
    return 1.0 - 2.0 * (2.0**alpha - 1.0)


def mass_cost(mass: float, alpha: float) -> float:
    """``mass**alpha``, or ``log(mass) + 4`` when ``alpha == 0``."""
    if alpha == 0.0:
        return math.log(mass) + 4.0
    return float(mass) ** alpha


def erase_energy(removed, family: TriangleFamily, table: CouplingTable) -> float:
    """``H0(family) - H0(family without removed)`` with ``+`` boundary on all of Z.

    Spins outside the family window equal the boundary, so the exterior
    interaction is exactly the tail-sum term and no padding is needed.
    """
    removed = list(removed.triangles if isinstance(removed, TriangleFamily) else removed)
    if not set(removed) <= set(family.triangles):
        raise DomainError("erased triangles must belong to the family")
    if not removed:
        return 0.0
    window = family.window
    s = spins_from_triangles(family, window).spins.astype(np.float64)
    flip = np.zeros(window.size, dtype=bool)
    for t in removed:
        flip[t.start - window.lo: t.end - window.lo + 1] ^= True
    mat = table.matrix(window.size)
    ext = table.exterior(window.size)
    keep = np.where(flip, 0.0, s)
    inner = mat[flip] @ keep + ext[flip]
    return float(-2.0 * s[flip] @ inner)


@dataclass
class PeierlsReport:
    """Margins ``lhs - rhs`` of the erasure lower bounds; all must be >= 0."""

    alpha: float
    smallest_margin: float | None = None
    iterated_margins: list[float] = field(default_factory=list)
    contour_margins: list[float] = field(default_factory=list)

    @property
    def margins(self) -> list[float]:
        head = [] if self.smallest_margin is None else [self.smallest_margin]
        return head + self.iterated_margins + self.contour_margins

    @property
    def violations(self) -> int:
        return sum(1 for m in self.margins if m < 0.0)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf


def peierls_check(family: TriangleFamily, table: CouplingTable, alpha: float | None = None,
                  C: float = 3) -> PeierlsReport:
    """Evaluate the erasure bounds on ``family``.

    * smallest triangle: ``H0(T1 | rest) >= zeta |T1|^alpha``;
    * the ``i`` smallest together: ``H0(T1..Ti | rest) >= zeta sum |Tl|^alpha``;
    * each contour ``G``: ``H0(G | rest) >= (zeta / 2) sum_{T in G} |T|^alpha``,

    with ``|T|^alpha`` replaced by ``log|T| + 4`` at ``alpha = 0``.
    """
    alpha = table.alpha if alpha is None else alpha
    z = zeta(alpha)
    rep = PeierlsReport(alpha)
    ordered = sorted(family.triangles, key=lambda t: (t.mass, t.start))
    if not ordered:
        return rep
    costs = [mass_cost(t.mass, alpha) for t in ordered]
    for i in range(1, len(ordered) + 1):
        margin = erase_energy(ordered[:i], family, table) - z * math.fsum(costs[:i])
        if i == 1:
            rep.smallest_margin = margin
        else:
            rep.iterated_margins.append(margin)
    for g in decompose_contours(family, C):
        lhs = erase_energy(g.triangles, family, table)
        rhs = 0.5 * z * math.fsum(mass_cost(t.mass, alpha) for t in g.triangles)
        rep.contour_margins.append(lhs - rhs)
    return rep
