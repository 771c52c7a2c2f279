"""Exact finite-volume Gibbs measure by brute-force enumeration.

All ``2**n`` configurations of the window are streamed in chunks; weights
stay in the log domain and are reduced with a running log-sum-exp, so large
``beta * H`` never overflows.  Configuration ``code`` maps bit ``k`` to site
``lo + k`` with a set bit meaning spin ``-1``.
"""

from __future__ import annotations

import numpy as np

from .events import EventSpec, event_mask
from .exceptions import EnumerationSizeError
from .model import CouplingTable, DisorderField, ModelParams, Window, table_for

MAX_SITES = 22
_CHUNK_BITS = 16


def configs_from_codes(codes: np.ndarray, n: int) -> np.ndarray:
    """Spin rows (int8, +/-1) for integer configuration codes."""
    bits = (codes[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_energies(configs: np.ndarray, window: Window, disorder: DisorderField | None,
                    params: ModelParams, table: CouplingTable | None = None) -> np.ndarray:
    """Hamiltonian with boundary term for each row of ``configs``."""
    table = table if table is not None else table_for(params)
    s = configs.astype(np.float64)
    mat = table.matrix(window.size)
    minus = (configs < 0).astype(np.float64)
    bulk = 2.0 * np.einsum("ij,ij->i", minus @ mat, 1.0 - minus)
    bnd = (1.0 - s * window.boundary) @ table.exterior(window.size)
    out = bulk + bnd
    if params.theta != 0.0:
        out -= params.theta * (s @ disorder.restrict(window.lo, window.hi))
    return out


def _logaddexp_reduce(acc: tuple[float, float], logw: np.ndarray) -> tuple[float, float]:
    """Fold ``logw`` into a (max, scaled-sum) accumulator."""
    if logw.size == 0:
        return acc
    m_old, s_old = acc
    m_new = max(m_old, float(logw.max()))
    s_new = s_old * np.exp(m_old - m_new) + float(np.exp(logw - m_new).sum())
    return m_new, s_new


def _finish(acc: tuple[float, float]) -> float:
    m, s = acc
    return -np.inf if s == 0.0 else m + float(np.log(s))


class ExactMeasure:
    """Gibbs measure on a window, evaluated by exhaustive enumeration.

    Parameters
    ----------
    window : Window
        Sites and boundary sign.
    disorder : DisorderField or None
        Field realization covering the window (may be ``None`` when
        ``params.theta == 0``).
    params : ModelParams
    max_sites : int
        Enumeration guard.
    energy_offset : float
        Constant added to every energy; only shifts ``log Z``.
    """

    def __init__(self, window: Window, disorder: DisorderField | None, params: ModelParams,
                 max_sites: int = MAX_SITES, energy_offset: float = 0.0,
                 table: CouplingTable | None = None):
        if window.size > max_sites:
            raise EnumerationSizeError(
                f"window has {window.size} sites; enumeration is capped at {max_sites}"
            )
        if params.theta != 0.0:
            disorder.restrict(window.lo, window.hi)
        self.window = window
        self.disorder = disorder
        self.params = params
        self.energy_offset = float(energy_offset)
        self.table = table if table is not None else table_for(params)
        self._log_z: float | None = None

    @property
    def n_configs(self) -> int:
        return 1 << self.window.size

    def chunks(self):
        """Yield ``(configs, log_weights)`` over the full configuration space."""
        n = self.window.size
        step = 1 << min(_CHUNK_BITS, n)
        for start in range(0, self.n_configs, step):
            codes = np.arange(start, min(start + step, self.n_configs), dtype=np.int64)
            configs = configs_from_codes(codes, n)
            energies = config_energies(configs, self.window, self.disorder, self.params, self.table)
            yield configs, -self.params.beta * (energies + self.energy_offset)

    @property
    def log_partition(self) -> float:
        if self._log_z is None:
            acc = (-np.inf, 0.0)
            for _, logw in self.chunks():
                acc = _logaddexp_reduce(acc, logw)
            self._log_z = _finish(acc)
        return self._log_z

    def log_probability(self, event: EventSpec) -> float:
        event.check_inside(self.window)
        acc = (-np.inf, 0.0)
        for configs, logw in self.chunks():
            acc = _logaddexp_reduce(acc, logw[event_mask(configs, self.window, event)])
        return _finish(acc) - self.log_partition

    def probability(self, event: EventSpec) -> float:
        return float(min(1.0, np.exp(self.log_probability(event))))

    def probabilities(self) -> np.ndarray:
        """Normalized probability of every configuration, indexed by code."""
        logw = np.concatenate([lw for _, lw in self.chunks()])
        return np.exp(logw - self.log_partition)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Exact i.i.d. draws by inverse CDF over the enumerated weights."""
        cdf = np.cumsum(self.probabilities())
        u = rng.random(size) * cdf[-1]
        codes = np.searchsorted(cdf, u, side="right")
        codes = np.minimum(codes, self.n_configs - 1)
        return configs_from_codes(codes.astype(np.int64), self.window.size)


def log_partition(window: Window, disorder: DisorderField | None, params: ModelParams,
                  max_sites: int = MAX_SITES) -> float:
    """``log Z`` of the window's Gibbs measure."""
    return ExactMeasure(window, disorder, params, max_sites).log_partition


def event_probability(window: Window, disorder: DisorderField | None, params: ModelParams,
                      event: EventSpec, max_sites: int = MAX_SITES) -> float:
    """Exact Gibbs probability of ``event``."""
    return ExactMeasure(window, disorder, params, max_sites).probability(event)
