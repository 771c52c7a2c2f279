"""Single-site Markov chain Monte Carlo for the window Gibbs measure.

Each site keeps a cached local field ``local[k] = sum_j J(|k-j|) s_j +
eta * ext[k] + theta * h[k]``, so a proposal costs O(1) and an accepted flip
O(n).  The cache is rebuilt from scratch every ``refresh_every`` sweeps.

Both update rules use random-scan order.  The random draws of a sweep (a
permutation and one uniform per step) are taken from a numpy ``Generator``
before the kernel runs, so the numba kernel and the pure-Python reference
kernel follow identical sample paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .events import EventSpec, event_mask
from .exceptions import DomainError, InsufficientSamplesError
from .model import (
    CouplingTable,
    DisorderField,
    ModelParams,
    SpinWindow,
    Window,
    local_fields,
    table_for,
    total_energy,
)

UPDATE_RULES = ("metropolis", "heat_bath")
INITIAL_STATES = ("all_boundary", "random")
MIN_BATCHES = 20


@dataclass(frozen=True)
class ChainConfig:
    sweeps: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    update_rule: str = "heat_bath"
    initial: str = "all_boundary"
    n_batches: int = MIN_BATCHES
    refresh_every: int = 1000

    def __post_init__(self):
        if self.sweeps < 1:
            raise DomainError("sweeps must be positive")
        if not 0 <= self.burn_in < self.sweeps:
            raise DomainError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.thinning < 1:
            raise DomainError("thinning must be positive")
        if self.update_rule not in UPDATE_RULES:
            raise DomainError(f"unknown update rule {self.update_rule!r}")
        if self.initial not in INITIAL_STATES:
            raise DomainError(f"unknown initial state {self.initial!r}")
        if self.n_batches < MIN_BATCHES:
            raise DomainError(f"at least {MIN_BATCHES} batches are required")

    @property
    def n_samples(self) -> int:
        return (self.sweeps - self.burn_in) // self.thinning


@dataclass(frozen=True)
class EventEstimate:
    """Frequency estimate of an event with a batch-means error bar.

    ``std_error`` is the batch-means standard error, floored at the binomial
    resolution of the sample (see :func:`batch_means`); the raw batch-means
    value is kept in ``batch_std_error``.
    """

    mean: float
    std_error: float
    effective_samples: float
    n_samples: int
    batch_std_error: float


@njit(cache=True)
def _sweep_numba(spins, local, jmat, beta, heat_bath, order, uniforms):
    n = spins.size
    accepted = 0.0
    for t in range(order.size):
        k = order[t]
        s = spins[k]
        delta = 2.0 * s * local[k]
        if heat_bath:
            p_plus = 1.0 / (1.0 + math.exp(-2.0 * beta * local[k]))
            new = 1 if uniforms[t] < p_plus else -1
            flip = new != s
        else:
            flip = delta <= 0.0 or uniforms[t] < math.exp(-beta * delta)
        if flip:
            spins[k] = -s
            accepted += delta
            for j in range(n):
                local[j] -= 2.0 * s * jmat[k, j]
    return accepted


def _sweep_python(spins, local, jmat, beta, heat_bath, order, uniforms):
    accepted = 0.0
    for t, k in enumerate(order):
        s = int(spins[k])
        delta = 2.0 * s * local[k]
        if heat_bath:
            x = -2.0 * beta * local[k]
            p_plus = 0.0 if x > 700 else 1.0 / (1.0 + math.exp(x))
            flip = (1 if uniforms[t] < p_plus else -1) != s
        else:
            flip = delta <= 0.0 or uniforms[t] < math.exp(-beta * delta)
        if flip:
            spins[k] = -s
            accepted += delta
            local -= 2.0 * s * jmat[k]
    return accepted


class Chain:
    """A seed-reproducible single-site chain on one window.

    Parameters
    ----------
    window : Window
    disorder : DisorderField or None
    params : ModelParams
    config : ChainConfig
    backend : {"numba", "python"}
        Kernel used for sweeps; both give identical paths.
    """

    def __init__(self, window: Window, disorder: DisorderField | None, params: ModelParams,
                 config: ChainConfig, backend: str = "numba",
                 table: CouplingTable | None = None, spins: SpinWindow | None = None):
        self.window = window
        self.disorder = disorder
        self.params = params
        self.config = config
        self.table = table if table is not None else table_for(params)
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        if backend not in ("numba", "python"):
            raise DomainError(f"unknown backend {backend!r}")
        self._kernel = _sweep_numba if backend == "numba" else _sweep_python
        if spins is not None:
            self.spins = spins.copy()
        elif config.initial == "random":
            values = (2 * self.rng.integers(0, 2, size=window.size) - 1).astype(np.int8)
            self.spins = SpinWindow(window.lo, window.hi, values, window.boundary)
        else:
            self.spins = SpinWindow.constant(window)
        self._jmat = self.table.matrix(window.size)
        self.refresh()
        self.energy = total_energy(self.spins, disorder, params, self.table)
        self.n_sweeps = 0

    def refresh(self) -> None:
        """Recompute the cached local fields from scratch."""
        self.local = local_fields(self.spins, self.disorder, self.params, self.table)

    def sweep(self) -> float:
        """One random-scan sweep; returns the sum of accepted energy changes."""
        n = self.window.size
        order = self.rng.permutation(n).astype(np.int64)
        uniforms = self.rng.random(n)
        accepted = self._kernel(
            self.spins.spins, self.local, self._jmat, float(self.params.beta),
            self.config.update_rule == "heat_bath", order, uniforms,
        )
        self.energy += accepted
        self.n_sweeps += 1
        if self.n_sweeps % self.config.refresh_every == 0:
            self.refresh()
        return accepted

    def samples(self):
        """Yield copies of the thinned post-burn-in states."""
        cfg = self.config
        for t in range(1, cfg.sweeps + 1):
            self.sweep()
            if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thinning == 0:
                yield self.spins.spins.copy()

    def sample_array(self) -> np.ndarray:
        """All thinned post-burn-in states as an ``(n_samples, n)`` int8 array."""
        rows = list(self.samples())
        if not rows:
            return np.empty((0, self.window.size), dtype=np.int8)
        return np.vstack(rows)

    def telescoping_error(self) -> float:
        """``|tracked energy - recomputed energy|``."""
        return abs(self.energy - total_energy(self.spins, self.disorder, self.params, self.table))


def sweep(spins: SpinWindow, disorder: DisorderField | None, params: ModelParams,
          rule: str, rng: np.random.Generator, table: CouplingTable | None = None) -> SpinWindow:
    """One random-scan sweep of ``spins`` in place; returns ``spins``."""
    if rule not in UPDATE_RULES:
        raise DomainError(f"unknown update rule {rule!r}")
    table = table if table is not None else table_for(params)
    local = local_fields(spins, disorder, params, table)
    n = spins.size
    order = rng.permutation(n).astype(np.int64)
    uniforms = rng.random(n)
    _sweep_numba(spins.spins, local, table.matrix(n), float(params.beta),
                 rule == "heat_bath", order, uniforms)
    return spins


def batch_means(indicator: np.ndarray, n_batches: int = MIN_BATCHES) -> tuple[float, float, float]:
    """Mean, floored standard error and raw batch-means standard error.

    Trailing samples that do not fill a batch are dropped from the error
    estimate but kept in the mean.  The floor ``sqrt(p(1-p)/n)`` with
    ``p = (k + 1/2) / (n + 1)`` keeps the error bar honest when the event was
    seen in every sample or in none.
    """
    x = np.asarray(indicator, dtype=np.float64)
    n = x.size
    if n < n_batches or n_batches < MIN_BATCHES:
        raise InsufficientSamplesError(
            f"{n} samples cannot fill {max(n_batches, MIN_BATCHES)} batches"
        )
    size = n // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    raw = float(means.std(ddof=1) / math.sqrt(n_batches))
    p = (x.sum() + 0.5) / (n + 1.0)
    floor = math.sqrt(p * (1.0 - p) / n)
    return float(x.mean()), max(raw, floor), raw


def _estimate(indicator: np.ndarray, n_batches: int) -> EventEstimate:
    mean, se, raw = batch_means(indicator, n_batches)
    var = mean * (1.0 - mean)
    ess = var / se**2 if var > 0.0 else float(indicator.size)
    return EventEstimate(mean, se, float(ess), int(indicator.size), raw)


def estimate_events(window: Window, disorder: DisorderField | None, params: ModelParams,
                    events: list[EventSpec], config: ChainConfig,
                    backend: str = "numba") -> list[EventEstimate]:
    """Estimate several events from one chain (shared sample path)."""
    for ev in events:
        ev.check_inside(window)
    if config.n_samples < config.n_batches:
        raise InsufficientSamplesError(
            f"{config.n_samples} samples cannot fill {config.n_batches} batches"
        )
    chain = Chain(window, disorder, params, config, backend=backend)
    samples = chain.sample_array()
    return [_estimate(event_mask(samples, window, ev), config.n_batches) for ev in events]


def estimate_event(window: Window, disorder: DisorderField | None, params: ModelParams,
                   event: EventSpec, config: ChainConfig) -> EventEstimate:
    """Frequency of ``event`` along the chain with a batch-means error bar."""
    return estimate_events(window, disorder, params, [event], config)[0]


def format_snapshots(window: Window, configs: np.ndarray) -> str:
    """Render samples as ``+``/``-`` lines under a window header comment."""
    sign = "+" if window.boundary > 0 else "-"
    lines = [f"# window {window.lo}..{window.hi} boundary {sign}"]
    for row in np.asarray(configs):
        lines.append("".join("+" if v > 0 else "-" for v in row))
    return "\n".join(lines) + "\n"


def parse_snapshots(text: str) -> tuple[Window, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# window"):
        raise DomainError("snapshot text must start with a '# window lo..hi boundary s' header")
    _, _, span, _, sign = lines[0].split()
    window = Window.parse(span, boundary=1 if sign == "+" else -1)
    rows = [[1 if c == "+" else -1 for c in ln.strip()] for ln in lines[1:]]
    configs = np.array(rows, dtype=np.int8).reshape(len(rows), window.size)
    return window, configs
