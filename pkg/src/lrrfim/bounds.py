"""Explicit bound formulas and parameter plans for run-length estimates.

Every proof constant is exposed as a plan field; the free parameters are
``B`` and ``g1`` for the upper plan and ``D`` and ``g2`` for the lower plan.
Very large quantities (``alpha = 1/2`` grows like ``exp(c / theta**2)``) are
carried as natural logarithms next to their values; a value that does not fit
in a float is reported as ``inf`` while its ``log_`` companion stays exact.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

from scipy.special import log_ndtr, ndtr

from .exceptions import DomainError, RegimeError
from .geometry.peierls import zeta
from .model import CouplingTable

EXP_MAX = 709.0
CONSTRAINT_RTOL = 1e-12


def _exp(logx: float) -> float:
    return math.exp(logx) if logx < EXP_MAX else math.inf


def _ceil_exp(logx: float) -> float:
    """``ceil(exp(logx))`` as an int, or ``inf`` when it overflows."""
    return math.ceil(math.exp(logx)) if logx < EXP_MAX else math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def regime(alpha: float) -> str:
    if alpha == 0.0:
        return "alpha=0"
    if 0.0 < alpha < 0.5:
        return "0<alpha<1/2"
    if alpha == 0.5:
        return "alpha=1/2"
    raise DomainError(f"plans cover alpha in [0, 1/2], got {alpha}")


def g_theorem(theta: float) -> float:
    """``log(1/theta) * log(log(1/theta))``."""
    if not 0.0 < theta < 1.0 / math.e:
        raise DomainError(f"g(theta) needs 0 < theta < 1/e, got {theta}")
    return math.log(1.0 / theta) * math.log(math.log(1.0 / theta))


def g_hat(theta: float) -> float:
    """``log(log(1/theta) / theta)``, the ``alpha = 0`` replacement for ``g``."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"g_hat(theta) needs 0 < theta < 1, got {theta}")
    return math.log(math.log(1.0 / theta) / theta)


def default_g(alpha: float) -> Callable[[float], float]:
    return g_hat if alpha == 0.0 else g_theorem


# ---------------------------------------------------------------------------
# elementary bounds


def e_alpha(alpha: float, j1: float, delta_size: float) -> float:
    """``2(j1-1) + 2|D|**alpha / (alpha(1-alpha))``; ``2(j1-1) + 2 log|D| + 4`` at ``alpha = 0``."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if delta_size < 1:
        raise DomainError(f"block size must be >= 1, got {delta_size}")
    if alpha == 0.0:
        return 2.0 * (j1 - 1.0) + 2.0 * math.log(delta_size) + 4.0
    return 2.0 * (j1 - 1.0) + 2.0 * delta_size**alpha / (alpha * (1.0 - alpha))


def exterior_sum(alpha: float, j1: float, delta_size: int, table: CouplingTable | None = None) -> float:
    """``sum_{i in D} sum_{j not in D} J(|i-j|)`` for a block ``D`` of ``delta_size`` sites.

    Site ``k`` of the block sees the tails ``K(k)`` on the left and
    ``K(n - k + 1)`` on the right, so the sum is ``2 sum_{d=1}^{n} K(d)``.
    """
    if delta_size < 1:
        raise DomainError(f"block size must be >= 1, got {delta_size}")
    table = table if table is not None else CouplingTable(alpha, j1)
    return 2.0 * math.fsum(table.tails(range(1, int(delta_size) + 1)))


def censored_moment(kind: str, tau: float, uniform_a: float = 1.0) -> float:
    """``E[min(1, (h/tau)**2)]`` for the supported disorder laws."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    if kind == "bernoulli":
        return min(1.0, 1.0 / tau**2)
    if kind == "gaussian":
        phi = math.exp(-0.5 * tau * tau) / math.sqrt(2.0 * math.pi)
        inside = 2.0 * ndtr(tau) - 1.0
        return float((inside - 2.0 * tau * phi) / tau**2 + (1.0 - inside))
    if kind == "uniform":
        t = tau / uniform_a
        return 1.0 / (3.0 * t * t) if t >= 1.0 else 1.0 - 2.0 * t / 3.0
    raise DomainError(f"unknown disorder kind {kind!r}")


def lecam_bound(n: int, tau: float, censored_moment: float) -> float:
    """Concentration bound ``2 sqrt(pi) / sqrt(n m)`` on ``sup_x P[sum h in [x, x + tau]]``."""
    if n < 1 or tau <= 0:
        raise DomainError("need n >= 1 and tau > 0")
    if not 0.0 < censored_moment <= 1.0:
        raise DomainError(f"censored moment must lie in (0, 1], got {censored_moment}")
    return 2.0 * math.sqrt(math.pi) / math.sqrt(n * censored_moment)


def gaussian_concentration(n: int, tau: float) -> float:
    """``tau / sqrt(2 pi n)``, the interval bound for standard Gaussian fields."""
    if n < 1 or tau <= 0:
        raise DomainError("need n >= 1 and tau > 0")
    return tau / math.sqrt(2.0 * math.pi * n)


@dataclass(frozen=True)
class BerryEsseen:
    value: float
    normal_tail: float
    correction: float
    minorant: float

    def to_dict(self) -> dict:
        return asdict(self)


def berry_esseen_lower(theta: float, delta_size: float) -> BerryEsseen:
    """``Phi(-8/theta) - 7.5/sqrt(Delta)`` with the analytic minorant of ``Phi(-8/theta)``."""
    if theta <= 0 or delta_size < 1:
        raise DomainError("need theta > 0 and Delta >= 1")
    tail = float(ndtr(-8.0 / theta))
    corr = 7.5 / math.sqrt(delta_size)
    minorant = math.exp(-32.0 / theta**2) / (math.sqrt(2.0 * math.pi) * (1.0 + 8.0 / theta))
    return BerryEsseen(tail - corr, tail, corr, minorant)


def b_bar(beta: float, theta: float, alpha: float) -> float:
    """``min(beta zeta / 4, zeta**2 / (2**10 theta**2))``."""
    z = zeta(alpha)
    return min(beta * z / 4.0, z * z / (2**10 * theta**2))


def saturating_beta(theta: float, alpha: float) -> float:
    """Smallest admissible inverse temperature ``zeta / (2**8 theta**2)``."""
    return zeta(alpha) / (2**8 * theta**2)


# ---------------------------------------------------------------------------
# upper plan


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


@dataclass(frozen=True)
class UpperBoundPlan:
    alpha: float
    regime: str
    theta: float
    beta: float
    j1: float
    B: float
    g1: float
    delta: float
    log_delta: float
    M: float
    log_M: float
    N: float
    L_max: float
    log_L_max: float
    diamV: float
    log_diamV: float
    E_alpha: float
    gibbs_bound: float
    log_gibbs_bound: float
    prob_bound: float
    covering_prob_bound: float
    p1_proxy: float | None
    tau: float | None
    berry_esseen: float | None
    log_berry_esseen: float | None
    covering_valid: bool

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in asdict(self).items()}


def _as_fn(g, default):
    if g is None:
        return default
    if callable(g):
        return g
    return lambda _x, _g=float(g): _g


def plan_upper(alpha: float, theta: float, j1: float = 10.0, beta: float | None = None,
               B: float = 0.5, g1_fn=None) -> UpperBoundPlan:
    """Block size, block count and window for the upper run-length bound.

    ``g1_fn`` is a function of ``theta`` or a constant (default ``g``; ``g_hat``
    at ``alpha = 0``).  ``beta`` defaults to the saturating value.  The plan is
    re-substituted into its own consistency conditions (``p1 <= B`` and
    ``tau >= 1`` below ``alpha = 1/2``, a positive Berry-Esseen bound at
    ``alpha = 1/2``); failure raises :class:`RegimeError`.
    """
    tag = regime(alpha)
    if not 0.0 < B < 1.0:
        raise DomainError(f"B must lie in (0, 1), got {B}")
    if theta <= 0:
        raise DomainError("theta must be positive")
    beta = saturating_beta(theta, alpha) if beta is None else beta
    g1 = float(_as_fn(g1_fn, default_g(alpha))(theta))
    if g1 < 1.0:
        raise DomainError(f"g1(theta) must be >= 1, got {g1}")

    if tag == "alpha=1/2":
        log_delta = math.log(256.0 * 2.0 * math.pi) + 2.0 * math.log1p(8.0 / theta) + 64.0 / theta**2
        log_M_real = (math.log(2.0 * math.sqrt(2.0 * math.pi)) + math.log1p(8.0 / theta)
                      + 32.0 / theta**2 + g1)
        log_2N1_real = 0.5 * math.exp(g1)
    else:
        if tag == "alpha=0":
            base, power = 64.0 * math.sqrt(math.pi) * math.log(1.0 / theta) / (B * theta), 2.0
        else:
            base, power = 32.0 / (B * theta * alpha * (1.0 - alpha)), 2.0 / (1.0 - 2.0 * alpha)
        log_delta = power * math.log(base)
        log_M_real = math.log(math.ceil(2.0 * g1 / math.log(2.0 / (1.0 + B))))
        log_2N1_real = g1 + math.log((1.0 + B) / 2.0)

    if tag != "alpha=1/2" and log_delta < EXP_MAX:
        # direct power avoids an ulp error from exp(log(.)) under the ceiling
        delta = math.ceil(base**power)
    else:
        delta = _ceil_exp(log_delta)
    log_delta = math.log(delta) if math.isfinite(delta) else log_delta
    M = _ceil_exp(log_M_real)
    log_M = math.log(M) if math.isfinite(M) else log_M_real
    two_n1 = _ceil_exp(log_2N1_real)
    if math.isfinite(two_n1):
        N = max(0, math.ceil((two_n1 - 1) / 2))
        log_2N1 = math.log(2 * N + 1)
        log_2N = math.log(2 * N) if N > 0 else -math.inf
    else:
        N = math.inf
        log_2N1 = log_2N = log_2N1_real

    # E_alpha through logs so it stays finite when Delta overflows
    if alpha == 0.0:
        E = 2.0 * (j1 - 1.0) + 2.0 * log_delta + 4.0
    else:
        E = 2.0 * (j1 - 1.0) + 2.0 * _exp(alpha * log_delta) / (alpha * (1.0 - alpha))
    log_gibbs = log_2N1 - 2.0 * beta * E

    diag = {"alpha": alpha, "theta": theta, "B": B, "g1": g1, "log_delta": log_delta}
    p1 = tau = be = log_be = None
    if tag == "alpha=1/2":
        # both terms underflow for small theta; compare them through logs
        log_tail = float(log_ndtr(-8.0 / theta))
        log_corr = math.log(7.5) - 0.5 * log_delta
        diag.update(log_normal_tail=log_tail, log_correction=log_corr)
        if not log_tail > log_corr:
            raise RegimeError("Berry-Esseen lower bound is not positive", diag)
        log_be = log_tail + math.log(-math.expm1(log_corr - log_tail))
        be = _exp(log_be)
        prob = 1.0 - math.exp(-0.5 * math.exp(g1))
        # (2N+1) (1 - q)^(M-1) with q the Berry-Esseen bound
        if math.isfinite(M) and be > 1e-12:
            log_cov_fail = log_2N1 + (M - 1) * math.log1p(-be)
        else:
            log_cov_fail = log_2N1 - _exp(log_M + log_be)
    else:
        tau = 2.0 * E / theta
        p1 = 8.0 * E * math.sqrt(math.pi) / (theta * math.exp(0.5 * log_delta))
        diag.update(p1_proxy=p1, tau=tau)
        if p1 > B:
            raise RegimeError(f"p1 proxy {p1:.6g} exceeds B = {B}", diag)
        if tau < 1.0:
            raise RegimeError(f"tau = {tau:.6g} < 1", diag)
        prob = 1.0 - 2.0 * math.exp(-g1)
        log_cov_fail = log_2N1 + (M - 1) * math.log((1.0 + B) / 2.0)

    return UpperBoundPlan(
        alpha=alpha, regime=tag, theta=theta, beta=beta, j1=j1, B=B, g1=g1,
        delta=delta, log_delta=log_delta, M=M, log_M=log_M, N=N,
        L_max=_exp(log_M + log_delta) if math.isfinite(M * 1.0) else math.inf,
        log_L_max=log_M + log_delta,
        diamV=_exp(log_2N + log_delta), log_diamV=log_2N + log_delta,
        E_alpha=E, gibbs_bound=_exp(log_gibbs), log_gibbs_bound=log_gibbs,
        prob_bound=prob, covering_prob_bound=1.0 - _exp(log_cov_fail),
        p1_proxy=p1, tau=tau, berry_esseen=be, log_berry_esseen=log_be,
        covering_valid=bool(log_2N >= math.log1p(M) if math.isfinite(M) else log_2N >= log_M),
    )


# ---------------------------------------------------------------------------
# lower plan


@dataclass(frozen=True)
class LowerBoundPlan:
    alpha: float
    regime: str
    theta: float
    beta: float
    D: float
    g2: float
    b_bar: float
    L_min_real: float
    log_L_min_real: float
    L_min: float
    V_min: float
    log_V_min: float
    measure_bound: float
    prob_bound: float
    constraint_lhs: float
    constraint_rhs: float
    constraint_at_ceiling: bool

    @property
    def constraint_ok(self) -> bool:
        return self.constraint_lhs >= self.constraint_rhs * (1.0 - CONSTRAINT_RTOL)

    def to_dict(self) -> dict:
        d = {k: _json_float(v) for k, v in asdict(self).items()}
        d["constraint_ok"] = self.constraint_ok
        return d


def lower_constraint(alpha: float, b: float, D: float, g2: float, L: float) -> tuple[float, float]:
    """``(lhs, rhs)`` of the planning constraint at run length ``L``."""
    tag = regime(alpha)
    logL = math.log(L)
    if tag == "alpha=0":
        return b * (4.0 + logL) / L, D * g2
    if tag == "alpha=1/2":
        return b / (2.0 * (4.0 + logL)), D
    return b / (math.exp((1.0 - 2.0 * alpha) * logL) * (4.0 + logL)), D * g2


def plan_lower(alpha: float, theta: float, beta: float | None = None, D: float = 2.0,
               g2_fn=None) -> LowerBoundPlan:
    """Minimal run length, window and measure bound for the lower run-length bound.

    ``g2_fn`` is a function of ``b_bar`` or a constant; by default it returns
    ``g(theta)`` (``g_hat`` at ``alpha = 0``) for the given ``theta``.  The
    planning constraint is checked at the real-valued ``L_min``; the integer
    ceiling is reported with a flag saying whether the constraint also holds
    there.  When the real ``L_min`` is below 1 the constraint is checked at
    ``L = 1`` instead, and a failure there raises :class:`RegimeError`.
    """
    tag = regime(alpha)
    if D <= 1:
        raise DomainError(f"D must exceed 1, got {D}")
    if theta <= 0:
        raise DomainError("theta must be positive")
    beta = saturating_beta(theta, alpha) if beta is None else beta
    b = b_bar(beta, theta, alpha)
    if g2_fn is None:
        g_theta = default_g(alpha)(theta)
        g2 = g_theta
    else:
        g2 = float(_as_fn(g2_fn, None)(b))
    if g2 < 1.0:
        raise DomainError(f"g2(b_bar) must be >= 1, got {g2}")
    diag = {"alpha": alpha, "theta": theta, "beta": beta, "D": D, "g2": g2, "b_bar": b}

    if tag == "alpha=0":
        x = b / (D * g2)
        if 4.0 + math.log(x) <= 0.0:
            raise RegimeError("4 + log(b_bar / (D g2)) is not positive", diag)
        log_L = math.log(x) + math.log(4.0 + math.log(x))
        log_V = g2 + log_L
        measure = 5.0 * (b / (8.0 * D * g2)) ** 2 * (4.0 + math.log(b / (D * g2))) ** 2 * math.exp(-(4.0 * D - 1.0) * g2)
        prob = 1.0 - 5.0 * (b / g2) ** 2 * (4.0 + math.log(b / (8.0 * g2))) ** 2 * math.exp(-(4.0 * D - 1.0) * g2)
    elif tag == "alpha=1/2":
        log_L = b / (2.0 * D) - 4.0
        log_V = 0.5 * b * (1.0 - 1.0 / D) - 2.0 * g2 - math.log(20.0)
        measure = math.exp(-g2)
        prob = 1.0 - math.exp(-g2)
    else:
        p = 1.0 / (1.0 - 2.0 * alpha)
        inner = 4.0 + p * math.log(b)
        if inner <= 0.0:
            raise RegimeError("4 + log(b_bar**(1/(1-2alpha))) is not positive", diag)
        log_L = p * (math.log(b / (D * g2)) - math.log(inner))
        log_V = g2 + p * math.log(b)
        measure = 5.0 * math.exp(2.0 * p * math.log(b) - (4.0 * D - 1.0) * g2)
        prob = 1.0 - measure

    L_real = _exp(log_L)
    if log_L < 0.0:
        L_check, L_min = 1.0, 1
    else:
        L_check, L_min = L_real, _ceil_exp(log_L)
    if math.isinf(L_check):
        # only the log form is available; the constraint is exact there
        lhs, rhs = lower_constraint_log(alpha, b, D, g2, log_L)
    else:
        lhs, rhs = lower_constraint(alpha, b, D, g2, L_check)
    diag.update(L_min_real=L_real, constraint_lhs=lhs, constraint_rhs=rhs)
    if lhs < rhs * (1.0 - CONSTRAINT_RTOL):
        where = "L = 1" if L_check == 1.0 and log_L < 0.0 else "L_min"
        raise RegimeError(f"planning constraint fails at {where}: {lhs:.6g} < {rhs:.6g}", diag)
    if math.isfinite(L_min):
        at_ceiling = lower_constraint(alpha, b, D, g2, float(L_min))
        ceiling_ok = at_ceiling[0] >= at_ceiling[1] * (1.0 - CONSTRAINT_RTOL)
    else:
        ceiling_ok = True

    return LowerBoundPlan(
        alpha=alpha, regime=tag, theta=theta, beta=beta, D=D, g2=g2, b_bar=b,
        L_min_real=L_real, log_L_min_real=log_L, L_min=L_min,
        V_min=_exp(log_V), log_V_min=log_V, measure_bound=measure, prob_bound=prob,
        constraint_lhs=lhs, constraint_rhs=rhs, constraint_at_ceiling=bool(ceiling_ok),
    )


def lower_constraint_log(alpha: float, b: float, D: float, g2: float, logL: float) -> tuple[float, float]:
    """:func:`lower_constraint` with ``L`` given through its logarithm."""
    tag = regime(alpha)
    if tag == "alpha=0":
        return b * (4.0 + logL) * math.exp(-logL), D * g2
    if tag == "alpha=1/2":
        return b / (2.0 * (4.0 + logL)), D
    return b * math.exp(-(1.0 - 2.0 * alpha) * logL) / (4.0 + logL), D * g2


# ---------------------------------------------------------------------------
# summary


@dataclass(frozen=True)
class TheoremSummary:
    alpha: float
    theta: float
    beta: float
    g_name: str
    g: float
    upper: UpperBoundPlan
    lower: LowerBoundPlan
    slope: float | None
    slope_target: float | None
    c1: float | None
    c2: float | None

    @property
    def bracket(self) -> tuple[float, float]:
        return self.lower.L_min, self.upper.L_max

    @property
    def log_bracket(self) -> tuple[float, float]:
        return max(0.0, self.lower.log_L_min_real), self.upper.log_L_max

    @property
    def bracket_ok(self) -> bool:
        lo, hi = self.log_bracket
        return lo <= hi

    def to_dict(self) -> dict:
        lo, hi = self.bracket
        llo, lhi = self.log_bracket
        return {
            "alpha": self.alpha, "theta": self.theta, "beta": self.beta,
            "g": {"name": self.g_name, "value": self.g},
            "bracket": [_json_float(lo), _json_float(hi)],
            "log_bracket": [llo, lhi],
            "bracket_ok": self.bracket_ok,
            "diamV": _json_float(self.upper.diamV),
            "log_diamV": self.upper.log_diamV,
            "prob_upper": self.upper.prob_bound,
            "gibbs_bound_upper": _json_float(self.upper.gibbs_bound),
            "prob_lower": self.lower.prob_bound,
            "measure_bound_lower": self.lower.measure_bound,
            "slope": self.slope, "slope_target": self.slope_target,
            "c1": self.c1, "c2": self.c2,
            "upper": self.upper.to_dict(), "lower": self.lower.to_dict(),
        }


def upper_slope(alpha: float, theta: float, B: float = 0.5, j1: float = 10.0, ratio: float = 2.0) -> float:
    """Finite-difference slope of ``log L_max`` against ``log(1/theta)``."""
    a = plan_upper(alpha, theta, j1=j1, B=B)
    b = plan_upper(alpha, theta / ratio, j1=j1, B=B)
    return (b.log_L_max - a.log_L_max) / math.log(ratio)


def theorem_summary(alpha: float, theta: float, beta: float | None = None, j1: float = 10.0,
                    B: float = 0.5, D: float = 2.0) -> TheoremSummary:
    """Compose both plans with the theorem's choice of ``g``.

    ``beta`` defaults to the saturating value ``zeta / (2**8 theta**2)`` and
    must not fall below it.  For ``alpha < 1/2`` the report includes the
    finite-difference slope of ``log L_max`` in ``log(1/theta)`` next to the
    asymptotic exponent ``2 / (1 - 2 alpha)``; at ``alpha = 1/2`` it reports
    ``c1 = theta**2 log L_min`` and ``c2 = theta**2 log L_max``.
    """
    beta0 = saturating_beta(theta, alpha)
    beta = beta0 if beta is None else beta
    if beta < beta0 * (1.0 - 1e-12):
        raise DomainError(f"beta = {beta} is below zeta / (2**8 theta**2) = {beta0}")
    g_fn = default_g(alpha)
    g = g_fn(theta)
    up = plan_upper(alpha, theta, j1=j1, beta=beta, B=B, g1_fn=g_fn)
    lo = plan_lower(alpha, theta, beta=beta, D=D, g2_fn=g)
    slope = target = c1 = c2 = None
    if alpha < 0.5:
        slope = upper_slope(alpha, theta, B=B, j1=j1)
        target = 2.0 / (1.0 - 2.0 * alpha)
    else:
        c1 = theta**2 * lo.log_L_min_real
        c2 = theta**2 * up.log_L_max
    return TheoremSummary(alpha, theta, beta, "g_hat" if alpha == 0.0 else "g", g, up, lo,
                          slope, target, c1, c2)
