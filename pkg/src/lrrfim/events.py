"""Cylinder events on spin configurations.

Every event family used by the run-length bounds is available both as a
predicate on a single :class:`~lrrfim.model.SpinWindow` (:func:`evaluate_event`)
and as a vectorized mask over a batch of configurations (:func:`event_mask`).
The two are written independently and cross-checked in the tests.

Event kinds
-----------
``spin_at(i, tau)``
    spin ``i`` equals ``tau``.
``run_equals(I, tau)``
    every spin of the interval ``I`` equals ``tau``.
``run_any(I)``
    ``I`` is constant (either sign).
``long_run(V, L)``
    some sub-interval of ``V`` of length at least ``L`` is constant.
``well(D, tau)``
    spins equal ``tau`` on ``D`` and ``-tau`` on both neighbours of ``D``
    (a neighbour outside the window takes the boundary sign).
``small_well_at(i, L, tau)``
    some ``well(D, tau)`` with ``i`` in ``D`` and ``|D| <= L``.
``any_small_well(V, L)``
    ``small_well_at(i, L, +)`` or ``small_well_at(i, L, -)`` for some ``i`` in ``V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .model import SpinWindow, Window

KINDS = (
    "spin_at",
    "run_equals",
    "run_any",
    "long_run",
    "well",
    "small_well_at",
    "any_small_well",
)


@dataclass(frozen=True)
class EventSpec:
    """An event, tagged by ``kind``.

    ``interval`` is an inclusive ``(a, b)`` pair, ``site`` a single site,
    ``length`` the ``L`` of the run/well families and ``tau`` a sign.
    """

    kind: str
    interval: tuple[int, int] | None = None
    site: int | None = None
    length: int | None = None
    tau: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown event kind {self.kind!r}")
        if self.tau is not None and self.tau not in (1, -1):
            raise DomainError("tau must be +1 or -1")
        if self.interval is not None and self.interval[1] < self.interval[0]:
            raise DomainError(f"empty interval {self.interval}")
        if self.length is not None and self.length < 1:
            raise DomainError("length must be >= 1")

    # constructors -----------------------------------------------------
    @classmethod
    def spin_at(cls, i: int, tau: int) -> "EventSpec":
        return cls("spin_at", site=i, tau=tau)

    @classmethod
    def run_equals(cls, interval: tuple[int, int], tau: int) -> "EventSpec":
        return cls("run_equals", interval=tuple(interval), tau=tau)

    @classmethod
    def run_any(cls, interval: tuple[int, int]) -> "EventSpec":
        return cls("run_any", interval=tuple(interval))

    @classmethod
    def long_run(cls, interval: tuple[int, int], length: int) -> "EventSpec":
        return cls("long_run", interval=tuple(interval), length=length)

    @classmethod
    def well(cls, interval: tuple[int, int], tau: int) -> "EventSpec":
        return cls("well", interval=tuple(interval), tau=tau)

    @classmethod
    def small_well_at(cls, i: int, length: int, tau: int) -> "EventSpec":
        return cls("small_well_at", site=i, length=length, tau=tau)

    @classmethod
    def any_small_well(cls, interval: tuple[int, int], length: int) -> "EventSpec":
        return cls("any_small_well", interval=tuple(interval), length=length)

    def conjugate(self) -> "EventSpec":
        """The same event with every sign reversed."""
        if self.tau is None:
            return self
        return EventSpec(self.kind, self.interval, self.site, self.length, -self.tau)

    # text form --------------------------------------------------------
    @classmethod
    def parse(cls, text: str) -> "EventSpec":
        """Parse ``kind:arg:arg``; intervals are ``a..b``, signs ``+``/``-``.

        Examples: ``spin_at:0:+``, ``run_equals:-2..2:-``, ``long_run:-5..5:3``,
        ``well:0..1:+``, ``small_well_at:0:4:-``, ``any_small_well:-5..5:2``.
        """
        parts = text.split(":")
        kind, args = parts[0], parts[1:]

        def interval(tok):
            a, b = tok.split("..")
            return int(a), int(b)

        def sign(tok):
            if tok in ("+", "+1", "1"):
                return 1
            if tok in ("-", "-1"):
                return -1
            raise ValueError(tok)

        try:
            if kind == "spin_at":
                return cls.spin_at(int(args[0]), sign(args[1]))
            if kind in ("run_equals", "well"):
                return cls(kind, interval=interval(args[0]), tau=sign(args[1]))
            if kind == "run_any":
                return cls.run_any(interval(args[0]))
            if kind in ("long_run", "any_small_well"):
                return cls(kind, interval=interval(args[0]), length=int(args[1]))
            if kind == "small_well_at":
                return cls.small_well_at(int(args[0]), int(args[1]), sign(args[2]))
        except (IndexError, ValueError) as exc:
            raise DomainError(f"cannot parse event {text!r}") from exc
        raise DomainError(f"unknown event kind in {text!r}")

    def __str__(self):
        sgn = {1: "+", -1: "-"}
        iv = f"{self.interval[0]}..{self.interval[1]}" if self.interval else None
        if self.kind == "spin_at":
            return f"spin_at:{self.site}:{sgn[self.tau]}"
        if self.kind in ("run_equals", "well"):
            return f"{self.kind}:{iv}:{sgn[self.tau]}"
        if self.kind == "run_any":
            return f"run_any:{iv}"
        if self.kind in ("long_run", "any_small_well"):
            return f"{self.kind}:{iv}:{self.length}"
        return f"small_well_at:{self.site}:{self.length}:{sgn[self.tau]}"

    def check_inside(self, window: Window) -> None:
        """Raise :class:`DomainError` unless every referenced site is in ``window``."""
        if self.interval is not None:
            a, b = self.interval
            if a < window.lo or b > window.hi:
                raise DomainError(f"event interval {self.interval} outside window [{window.lo}, {window.hi}]")
        if self.site is not None and not window.contains(self.site):
            raise DomainError(f"event site {self.site} outside window [{window.lo}, {window.hi}]")


# ---------------------------------------------------------------------------
# single-configuration predicate
# ---------------------------------------------------------------------------

def _run_around(spins: SpinWindow, i: int) -> tuple[float, float]:
    """Extent of the maximal constant block through ``i``, extended into the exterior.

    An end that reaches the window edge with the same sign as the boundary
    continues forever and is reported as +/- infinity.
    """
    s = spins[i]
    a = i
    while a - 1 >= spins.lo and spins[a - 1] == s:
        a -= 1
    b = i
    while b + 1 <= spins.hi and spins[b + 1] == s:
        b += 1
    left = -np.inf if (a == spins.lo and spins.boundary == s) else a
    right = np.inf if (b == spins.hi and spins.boundary == s) else b
    return left, right


def _small_well_at(spins: SpinWindow, i: int, length: int, tau: int) -> bool:
    if spins[i] != tau:
        return False
    a, b = _run_around(spins, i)
    return (b - a + 1) <= length


def evaluate_event(spins: SpinWindow, event: EventSpec) -> bool:
    """Whether ``spins`` realizes ``event``."""
    event.check_inside(spins.window)
    kind = event.kind
    if kind == "spin_at":
        return spins[event.site] == event.tau
    if kind in ("run_equals", "run_any", "well"):
        a, b = event.interval
        block = [spins[k] for k in range(a, b + 1)]
        constant = all(v == block[0] for v in block)
        if kind == "run_any":
            return constant
        if not (constant and block[0] == event.tau):
            return False
        if kind == "run_equals":
            return True
        return (spins.spin_or_boundary(a - 1) == -event.tau
                and spins.spin_or_boundary(b + 1) == -event.tau)
    if kind == "long_run":
        a, b = event.interval
        best = cur = 1
        for k in range(a + 1, b + 1):
            cur = cur + 1 if spins[k] == spins[k - 1] else 1
            best = max(best, cur)
        return best >= event.length
    if kind == "small_well_at":
        return _small_well_at(spins, event.site, event.length, event.tau)
    # any_small_well
    a, b = event.interval
    return any(
        _small_well_at(spins, i, event.length, spins[i]) for i in range(a, b + 1)
    )


# ---------------------------------------------------------------------------
# vectorized masks
# ---------------------------------------------------------------------------

def _padded(configs: np.ndarray, boundary: int) -> np.ndarray:
    m = configs.shape[0]
    pad = np.full((m, 1), boundary, dtype=configs.dtype)
    return np.hstack([pad, configs, pad])


def _run_lengths_through(configs: np.ndarray, boundary: int) -> np.ndarray:
    """Length of the maximal constant block through each site (inf if it reaches a same-sign boundary)."""
    m, n = configs.shape
    p = _padded(configs, boundary)
    # pads stand for the infinite exterior
    left = np.zeros((m, n + 2))
    left[:, 0] = np.inf
    for k in range(1, n + 2):
        same = p[:, k] == p[:, k - 1]
        left[:, k] = np.where(same, left[:, k - 1] + 1, 0)
    right = np.zeros((m, n + 2))
    right[:, n + 1] = np.inf
    for k in range(n, -1, -1):
        same = p[:, k] == p[:, k + 1]
        right[:, k] = np.where(same, right[:, k + 1] + 1, 0)
    return (left + right + 1)[:, 1:n + 1]


def event_mask(configs: np.ndarray, window: Window, event: EventSpec) -> np.ndarray:
    """Boolean mask over the rows of ``configs`` (shape ``(m, window.size)``)."""
    event.check_inside(window)
    configs = np.asarray(configs)
    lo = window.lo
    kind = event.kind
    if kind == "spin_at":
        return configs[:, event.site - lo] == event.tau
    if kind in ("run_equals", "run_any", "well"):
        a, b = event.interval
        block = configs[:, a - lo: b - lo + 1]
        if kind == "run_any":
            return np.all(block == block[:, :1], axis=1)
        mask = np.all(block == event.tau, axis=1)
        if kind == "run_equals":
            return mask
        p = _padded(configs, window.boundary)
        return mask & (p[:, a - lo] == -event.tau) & (p[:, b - lo + 2] == -event.tau)
    if kind == "long_run":
        a, b = event.interval
        block = configs[:, a - lo: b - lo + 1]
        cur = np.ones(block.shape[0])
        best = cur.copy()
        for k in range(1, block.shape[1]):
            cur = np.where(block[:, k] == block[:, k - 1], cur + 1, 1)
            best = np.maximum(best, cur)
        return best >= event.length
    lengths = _run_lengths_through(configs, window.boundary)
    if kind == "small_well_at":
        k = event.site - lo
        return (configs[:, k] == event.tau) & (lengths[:, k] <= event.length)
    a, b = event.interval
    return np.any(lengths[:, a - lo: b - lo + 1] <= event.length, axis=1)
