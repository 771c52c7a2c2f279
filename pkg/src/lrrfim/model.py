"""Model definition: couplings, disorder, spin windows and energy functionals.

The chain lives on the integers with pair coupling ``J(1) = j1`` and
``J(n) = n**(alpha - 2)`` for ``n >= 2``.  A finite window ``[lo, hi]`` carries
explicit spins; everything outside it is frozen to a homogeneous boundary
sign, and the infinite interaction with that exterior is evaluated through the
tail sums ``K(d) = sum_{n >= d} J(n)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .exceptions import CoverageError, DivergentSeriesError, DomainError

DISORDER_KINDS = ("bernoulli", "gaussian", "uniform")

DEFAULT_J1 = 10.0
DEFAULT_TAIL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Quenched model parameters.

    Parameters
    ----------
    alpha : float
        Decay exponent in ``[0, 1)``; ``J(n) = n**(alpha - 2)`` for ``n > 1``.
    j1 : float
        Nearest-neighbour coupling ``J(1)``, must exceed 1.
    beta : float
        Inverse temperature.  ``beta = 0`` is accepted (uniform measure).
    theta : float
        Random-field strength.
    disorder : str
        One of ``"bernoulli"``, ``"gaussian"``, ``"uniform"``.  The uniform
        law is ``X / a`` with ``X`` uniform on ``[-a, a]``.
    uniform_a : float
        The ``a`` of the uniform law; ignored by the other kinds.
    """

    alpha: float
    j1: float = DEFAULT_J1
    beta: float = 1.0
    theta: float = 0.0
    disorder: str = "bernoulli"
    uniform_a: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.j1 > 1.0:
            raise DomainError(f"j1 must exceed 1, got {self.j1}")
        if not self.beta >= 0.0:
            raise DomainError(f"beta must be non-negative, got {self.beta}")
        if not self.theta >= 0.0:
            raise DomainError(f"theta must be non-negative, got {self.theta}")
        if self.disorder not in DISORDER_KINDS:
            raise DomainError(f"unknown disorder kind {self.disorder!r}")
        if not self.uniform_a > 0.0:
            raise DomainError("uniform_a must be positive")


@dataclass(frozen=True)
class Window:
    """Integer interval ``[lo, hi]`` with a homogeneous boundary sign."""

    lo: int
    hi: int
    boundary: int = 1

    def __post_init__(self):
        if self.hi < self.lo:
            raise DomainError(f"empty window [{self.lo}, {self.hi}]")
        if self.boundary not in (1, -1):
            raise DomainError("boundary sign must be +1 or -1")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, i: int) -> bool:
        return self.lo <= i <= self.hi

    @classmethod
    def parse(cls, text: str, boundary: int = 1) -> "Window":
        """Parse ``"lo..hi"``."""
        try:
            lo, hi = text.split("..")
            return cls(int(lo), int(hi), boundary)
        except ValueError as exc:
            raise DomainError(f"cannot parse window {text!r}; expected 'lo..hi'") from exc


@dataclass(eq=False)
class SpinWindow:
    """Spins on ``[lo, hi]`` plus the boundary sign outside.

    Only the spin array is mutable; samplers update it in place.
    """

    lo: int
    hi: int
    spins: np.ndarray
    boundary: int = 1

    def __post_init__(self):
        self.spins = np.ascontiguousarray(self.spins, dtype=np.int8)
        if self.spins.ndim != 1 or self.spins.size != self.hi - self.lo + 1:
            raise DomainError("spin array length must equal hi - lo + 1")
        if not np.all(np.abs(self.spins) == 1):
            raise DomainError("spins must be +1 or -1")
        if self.boundary not in (1, -1):
            raise DomainError("boundary sign must be +1 or -1")

    @classmethod
    def constant(cls, window: Window, sign: int | None = None) -> "SpinWindow":
        s = window.boundary if sign is None else sign
        return cls(window.lo, window.hi, np.full(window.size, s, dtype=np.int8), window.boundary)

    @classmethod
    def from_string(cls, text: str, lo: int = 0, boundary: int = 1) -> "SpinWindow":
        """Build from ``"++--+"`` or ``"+,+,-,-,+"``."""
        chars = [c for c in text if c in "+-"]
        if not chars or len(chars) != len(text.replace(",", "").replace(" ", "")):
            raise DomainError(f"cannot parse spin string {text!r}")
        spins = np.array([1 if c == "+" else -1 for c in chars], dtype=np.int8)
        return cls(lo, lo + len(spins) - 1, spins, boundary)

    @property
    def window(self) -> Window:
        return Window(self.lo, self.hi, self.boundary)

    @property
    def size(self) -> int:
        return self.spins.size

    def __getitem__(self, site: int) -> int:
        if not self.lo <= site <= self.hi:
            raise DomainError(f"site {site} outside window [{self.lo}, {self.hi}]")
        return int(self.spins[site - self.lo])

    def spin_or_boundary(self, site: int) -> int:
        if self.lo <= site <= self.hi:
            return int(self.spins[site - self.lo])
        return self.boundary

    def copy(self) -> "SpinWindow":
        return SpinWindow(self.lo, self.hi, self.spins.copy(), self.boundary)

    def flipped(self, site: int) -> "SpinWindow":
        out = self.copy()
        if not self.lo <= site <= self.hi:
            raise DomainError(f"site {site} outside window [{self.lo}, {self.hi}]")
        out.spins[site - self.lo] *= -1
        return out

    def negated(self) -> "SpinWindow":
        return SpinWindow(self.lo, self.hi, -self.spins, -self.boundary)

    def to_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.spins)

    def __eq__(self, other):
        if not isinstance(other, SpinWindow):
            return NotImplemented
        return (
            self.lo == other.lo
            and self.hi == other.hi
            and self.boundary == other.boundary
            and np.array_equal(self.spins, other.spins)
        )

    def __repr__(self):
        return f"SpinWindow(lo={self.lo}, hi={self.hi}, spins='{self.to_string()}', boundary={self.boundary:+d})"


@dataclass(frozen=True, eq=False)
class DisorderField:
    """A frozen realization of the random field on ``[lo, hi]``."""

    lo: int
    hi: int
    values: np.ndarray = field(repr=False)
    seed: int | None = None
    kind: str = "bernoulli"

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size != self.hi - self.lo + 1:
            raise DomainError("disorder length must equal hi - lo + 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def restrict(self, lo: int, hi: int) -> np.ndarray:
        """Field values on ``[lo, hi]``; raises when not covered."""
        if not self.covers(lo, hi):
            raise CoverageError(
                f"disorder on [{self.lo}, {self.hi}] does not cover [{lo}, {hi}]"
            )
        return self.values[lo - self.lo: hi - self.lo + 1]

    def negated(self) -> "DisorderField":
        return DisorderField(self.lo, self.hi, -self.values, self.seed, self.kind)

    def __eq__(self, other):
        if not isinstance(other, DisorderField):
            return NotImplemented
        return (
            (self.lo, self.hi, self.seed, self.kind) == (other.lo, other.hi, other.seed, other.kind)
            and np.array_equal(self.values, other.values)
        )

    def to_csv(self) -> str:
        """Serialize as a ``site,h`` CSV with a comment header."""
        buf = io.StringIO()
        buf.write(f"# kind={self.kind} seed={self.seed} window={self.lo}..{self.hi}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["site", "h"])
        for site, h in zip(range(self.lo, self.hi + 1), self.values):
            writer.writerow([site, repr(float(h))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DisorderField":
        kind, seed = "bernoulli", None
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, val = token.partition("=")
                    if key == "kind":
                        kind = val
                    elif key == "seed" and val != "None":
                        seed = int(val)
                continue
            if line.strip():
                rows.append(line)
        reader = csv.reader(rows)
        header = next(reader)
        if header != ["site", "h"]:
            raise DomainError(f"unexpected disorder CSV header {header}")
        pairs = [(int(s), float(h)) for s, h in reader]
        sites = [s for s, _ in pairs]
        if sites != list(range(sites[0], sites[0] + len(sites))):
            raise DomainError("disorder CSV sites must be consecutive")
        return cls(sites[0], sites[-1], np.array([h for _, h in pairs]), seed, kind)


def sample_disorder(kind: str, window, seed: int, uniform_a: float = 1.0) -> DisorderField:
    """Draw i.i.d. symmetric field values on ``window``.

    ``window`` may be a :class:`Window` or an ``(lo, hi)`` pair.  The draw is a
    deterministic function of ``(kind, window, seed)``.
    """
    lo, hi = (window.lo, window.hi) if isinstance(window, Window) else window
    n = hi - lo + 1
    if n < 1:
        raise DomainError("empty disorder window")
    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "bernoulli":
        values = 2.0 * rng.integers(0, 2, size=n) - 1.0
    elif kind == "gaussian":
        values = rng.standard_normal(n)
    elif kind == "uniform":
        values = rng.uniform(-uniform_a, uniform_a, size=n) / uniform_a
    else:
        raise DomainError(f"unknown disorder kind {kind!r}")
    return DisorderField(lo, hi, values, seed, kind)


# ---------------------------------------------------------------------------
# Couplings and tail sums
# ---------------------------------------------------------------------------

def coupling(params: ModelParams, n: int) -> float:
    """Pair coupling ``J(n)``."""
    if n < 1:
        raise DomainError(f"coupling distance must be >= 1, got {n}")
    if n == 1:
        return float(params.j1)
    return float(n) ** (params.alpha - 2.0)


def tail_bracket(alpha: float, j1: float, d: int, horizon: int) -> tuple[float, float]:
    """Rigorous bracket on ``K(d)`` from truncation at ``horizon``.

    The partial sum over ``d <= n < horizon`` is exact up to rounding; the
    remainder ``sum_{n >= horizon} n**(alpha-2)`` lies between the integrals of
    ``x**(alpha-2)`` over ``[horizon, inf)`` and ``[horizon - 1, inf)``.
    """
    if alpha >= 1.0:
        raise DivergentSeriesError("tail sum diverges for alpha >= 1")
    if d < 1:
        raise DomainError("tail index must be >= 1")
    horizon = max(int(horizon), d, 2)
    n = np.arange(max(d, 2), horizon, dtype=np.float64)
    partial = math.fsum(n ** (alpha - 2.0))
    if d == 1:
        partial += j1
    lower = (horizon) ** (alpha - 1.0) / (1.0 - alpha)
    upper = (horizon - 1.0) ** (alpha - 1.0) / (1.0 - alpha)
    return partial + lower, partial + upper


class CouplingTable:
    """Cached couplings and tail sums ``K(d) = sum_{n >= d} J(n)``.

    Tail sums come from the Hurwitz zeta function, ``K(d) = zeta(2 - alpha, d)``
    for ``d >= 2`` and ``K(1) = j1 + zeta(2 - alpha, 2)``; the truncation
    bracket in :func:`tail_bracket` is kept as an independent check.

    Tables are read-only after construction apart from the lazily grown cache
    and are safe to share between workers.
    """

    def __init__(self, alpha: float, j1: float = DEFAULT_J1,
                 tail_tolerance: float = DEFAULT_TAIL_TOLERANCE, horizon: int = 1024):
        if alpha >= 1.0:
            raise DivergentSeriesError("tail sum diverges for alpha >= 1")
        if alpha < 0.0:
            raise DomainError("alpha must be non-negative")
        if not j1 > 1.0:
            raise DomainError("j1 must exceed 1")
        self.alpha = float(alpha)
        self.j1 = float(j1)
        self.tail_tolerance = float(tail_tolerance)
        self._tails = np.empty(0)
        self._matrices: dict[int, np.ndarray] = {}
        self._grow(horizon)

    @property
    def horizon(self) -> int:
        return self._tails.size

    def _grow(self, horizon: int) -> None:
        horizon = max(int(horizon), 2)
        if horizon <= self._tails.size:
            return
        d = np.arange(1, horizon + 1, dtype=np.float64)
        tails = hurwitz_zeta(2.0 - self.alpha, np.maximum(d, 2.0))
        tails[0] += self.j1
        tails.setflags(write=False)
        self._tails = tails

    def coupling(self, n: int) -> float:
        if n < 1:
            raise DomainError(f"coupling distance must be >= 1, got {n}")
        return self.j1 if n == 1 else float(n) ** (self.alpha - 2.0)

    def couplings(self, n: np.ndarray) -> np.ndarray:
        """Vectorized ``J(n)``; entries with ``n == 0`` map to 0."""
        n = np.asarray(n, dtype=np.float64)
        out = np.zeros_like(n)
        far = n >= 2
        out[far] = n[far] ** (self.alpha - 2.0)
        out[n == 1] = self.j1
        return out

    def tail(self, d: int) -> float:
        if d < 1:
            raise DomainError(f"tail index must be >= 1, got {d}")
        if d > self._tails.size:
            self._grow(max(d, 2 * self._tails.size))
        return float(self._tails[d - 1])

    def tails(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=np.int64)
        if d.size and d.min() < 1:
            raise DomainError("tail indices must be >= 1")
        if d.size and d.max() > self._tails.size:
            self._grow(max(int(d.max()), 2 * self._tails.size))
        return self._tails[d - 1]

    def matrix(self, size: int) -> np.ndarray:
        """``J(|i-j|)`` on ``size`` consecutive sites, zero diagonal (read-only)."""
        mat = self._matrices.get(size)
        if mat is None:
            idx = np.arange(size)
            mat = self.couplings(np.abs(idx[:, None] - idx[None, :]))
            mat.setflags(write=False)
            self._matrices[size] = mat
        return mat

    def exterior(self, size: int) -> np.ndarray:
        """Per-site coupling to the complement of a window of ``size`` sites.

        Entry ``k`` is ``K(k + 1) + K(size - k)``.
        """
        k = np.arange(size)
        return self.tails(k + 1) + self.tails(size - k)


@lru_cache(maxsize=64)
def _cached_table(alpha: float, j1: float) -> CouplingTable:
    return CouplingTable(alpha, j1)


def table_for(params: ModelParams) -> CouplingTable:
    """Shared coupling table for ``params``."""
    return _cached_table(float(params.alpha), float(params.j1))


def tail_sum(table: CouplingTable, d: int) -> float:
    """``K(d) = sum_{n >= d} J(n)``."""
    return table.tail(d)


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def bulk_energy(spins: SpinWindow, table: CouplingTable) -> float:
    """``(1/2) sum_{i,j in window} J(|i-j|) (1 - s_i s_j)``."""
    # only disagreeing pairs contribute, each ordered pair with 2 J
    minus = spins.spins < 0
    mat = table.matrix(minus.size)
    return 2.0 * float(mat[minus][:, ~minus].sum())


def field_energy(spins: SpinWindow, disorder: DisorderField, theta: float) -> float:
    """``-theta * sum_i h_i s_i`` over the window."""
    if theta == 0.0:
        return 0.0
    h = disorder.restrict(spins.lo, spins.hi)
    return -theta * float(h @ spins.spins.astype(np.float64))


def boundary_energy(spins: SpinWindow, table: CouplingTable) -> float:
    """Interaction of the window with the homogeneous exterior."""
    s = spins.spins.astype(np.float64)
    return float((1.0 - s * spins.boundary) @ table.exterior(s.size))


def total_energy(spins: SpinWindow, disorder: DisorderField, params: ModelParams,
                 table: CouplingTable | None = None) -> float:
    """Full Hamiltonian with boundary term."""
    table = table if table is not None else table_for(params)
    return (
        bulk_energy(spins, table)
        + field_energy(spins, disorder, params.theta)
        + boundary_energy(spins, table)
    )


def local_fields(spins: SpinWindow, disorder: DisorderField, params: ModelParams,
                 table: CouplingTable | None = None) -> np.ndarray:
    """Effective field on each site: couplings to the window, the exterior and ``theta h``.

    The energy change of flipping site ``k`` is ``2 s_k * local[k]``.
    """
    table = table if table is not None else table_for(params)
    s = spins.spins.astype(np.float64)
    out = table.matrix(s.size) @ s + spins.boundary * table.exterior(s.size)
    if params.theta != 0.0:
        out = out + params.theta * disorder.restrict(spins.lo, spins.hi)
    return out


def flip_delta(spins: SpinWindow, disorder: DisorderField, params: ModelParams, i: int,
               table: CouplingTable | None = None) -> float:
    """``H(spins with site i negated) - H(spins)``."""
    if not spins.lo <= i <= spins.hi:
        raise DomainError(f"site {i} outside window [{spins.lo}, {spins.hi}]")
    table = table if table is not None else table_for(params)
    k = i - spins.lo
    s = spins.spins.astype(np.float64)
    row = table.matrix(s.size)[k]
    field_ = float(row @ s) + spins.boundary * (table.tail(k + 1) + table.tail(s.size - k))
    if params.theta != 0.0:
        field_ += params.theta * float(disorder.restrict(i, i)[0])
    return 2.0 * s[k] * field_
