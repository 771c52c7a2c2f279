"""Run decomposition of a configuration around the origin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DomainError
from ..model import SpinWindow


@dataclass(frozen=True)
class Run:
    start: int
    end: int
    sign: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, site: int) -> bool:
        return self.start <= site <= self.end


@dataclass(frozen=True)
class RunDecomposition:
    """Maximal constant blocks of a configuration restricted to ``V``.

    Runs are indexed so that run 1 contains the origin; run ``j + 1`` is the
    right neighbour of run ``j``.  ``b_V`` and ``e_V`` are the indices of the
    leftmost and rightmost runs.
    """

    origin_sign: int
    runs: tuple[Run, ...]
    b_V: int
    e_V: int

    def run(self, j: int) -> Run:
        if not self.b_V <= j <= self.e_V:
            raise DomainError(f"run index {j} outside [{self.b_V}, {self.e_V}]")
        return self.runs[j - self.b_V]

    @property
    def origin_run(self) -> Run:
        return self.run(1)

    def indexed(self):
        """Iterate ``(j, run)`` from ``b_V`` to ``e_V``."""
        return zip(range(self.b_V, self.e_V + 1), self.runs)

    def lengths(self) -> np.ndarray:
        return np.array([r.length for r in self.runs], dtype=np.int64)


def block_bounds(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start and end offsets of the maximal constant blocks of ``values``."""
    values = np.asarray(values)
    cuts = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts - 1, [values.size - 1]])
    return starts, ends


def runs(spins: SpinWindow, V: tuple[int, int] | None = None) -> RunDecomposition:
    """Decompose ``spins`` on ``V`` (default: the whole window) into runs."""
    a, b = (spins.lo, spins.hi) if V is None else V
    if not (a <= 0 <= b):
        raise DomainError(f"origin outside V = [{a}, {b}]")
    if a < spins.lo or b > spins.hi:
        raise DomainError(f"V = [{a}, {b}] not inside window [{spins.lo}, {spins.hi}]")
    vals = spins.spins[a - spins.lo: b - spins.lo + 1]
    starts, ends = block_bounds(vals)
    origin_block = int(np.searchsorted(starts, -a, side="right") - 1)
    blocks = tuple(
        Run(int(s) + a, int(e) + a, int(vals[s])) for s, e in zip(starts, ends)
    )
    b_V = 1 - origin_block
    return RunDecomposition(int(vals[-a]), blocks, b_V, b_V + len(blocks) - 1)
