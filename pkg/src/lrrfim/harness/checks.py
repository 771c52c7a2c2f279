"""Acceptance checks shared by ``lrrfim verify`` and the test suite.

Each check returns a :class:`CheckResult` with a pass flag, measured
quantities and a one-line description of the property it verifies.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtr
from scipy.stats import binom

from ..bounds import (
    b_bar,
    censored_moment,
    e_alpha,
    exterior_sum,
    gaussian_concentration,
    lecam_bound,
    plan_lower,
    plan_upper,
    saturating_beta,
)
from ..events import EventSpec
from ..exact import ExactMeasure
from ..geometry.contours import (
    decompose_contours,
    independence_holds,
    min_separation_constant,
    separation_series,
    verify_contours,
)
from ..geometry.entropy import entropy_sum
from ..geometry.peierls import peierls_check
from ..geometry.triangles import (
    Triangle,
    TriangleFamily,
    compatible,
    interface_sites,
    spins_from_triangles,
    triangles_from_spins,
)
from ..mcmc import ChainConfig, estimate_events
from ..model import CouplingTable, ModelParams, SpinWindow, Window, sample_disorder
from .scaling import ExperimentConfig, origin_medians_increasing, run_scaling
from .seeds import derive_seed


@dataclass
class CheckResult:
    number: int
    name: str
    property: str
    passed: bool
    runtime: float = 0.0
    details: dict = field(default_factory=dict)
    output: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name} ({self.runtime:.1f}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "property": self.property,
                "passed": self.passed, "runtime": self.runtime, "details": self.details}


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# 1. exact vs Monte Carlo


ORACLE_J1 = 1.1


def oracle_instances(n: int = 50, master_seed: int = 0):
    """Random ``(alpha, beta, theta, disorder seed)`` instances on a 10-site window."""
    alphas = (0.0, 0.25, 0.5)
    out = []
    for i in range(n):
        rng = np.random.default_rng(derive_seed(master_seed, "instance", i))
        out.append({
            "alpha": alphas[i % 3],
            "beta": float(rng.uniform(0.5, 2.0)),
            "theta": float(rng.uniform(0.1, 0.5)),
            "disorder_seed": derive_seed(master_seed, "disorder", i),
            "chain_seed": derive_seed(master_seed, "chain", i),
        })
    return out


ORACLE_EVENTS = (
    EventSpec.spin_at(0, 1),
    EventSpec.run_equals((-1, 1), 1),
    EventSpec.well((0, 1), -1),
)


@_timed
def check_oracle_equivalence(n_instances: int = 50, master_seed: int = 0, sweeps: int = 20_000,
                             n_sigma: float = 4.0) -> CheckResult:
    window = Window(-5, 4)
    rows, worst = [], 0.0
    for inst in oracle_instances(n_instances, master_seed):
        params = ModelParams(inst["alpha"], j1=ORACLE_J1, beta=inst["beta"], theta=inst["theta"])
        disorder = sample_disorder("bernoulli", window, inst["disorder_seed"])
        exact = ExactMeasure(window, disorder, params)
        cfg = ChainConfig(sweeps=sweeps, burn_in=1000, seed=inst["chain_seed"], n_batches=50)
        ests = estimate_events(window, disorder, params, list(ORACLE_EVENTS), cfg)
        for ev, est in zip(ORACLE_EVENTS, ests):
            p = exact.probability(ev)
            z = abs(est.mean - p) / est.std_error
            worst = max(worst, z)
            rows.append({**inst, "event": str(ev), "exact": p, "mcmc": est.mean,
                         "se": est.std_error, "z": z})
    failures = [r for r in rows if r["z"] > n_sigma]
    output = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    return CheckResult(1, "oracle equivalence", "Monte Carlo event frequencies agree with exact enumeration",
                       not failures,
                       details={"comparisons": len(rows), "max_z": worst, "failures": failures[:5]},
                       output=output)


# ---------------------------------------------------------------------------
# 2. bijection


@_timed
def check_bijection(n_sites: int = 16) -> CheckResult:
    bad = []
    window = Window(0, n_sites - 1)
    for code in range(1 << n_sites):
        bits = (code >> np.arange(n_sites)) & 1
        sigma = SpinWindow(0, n_sites - 1, (1 - 2 * bits).astype(np.int8), 1)
        fam = triangles_from_spins(sigma)
        back = spins_from_triangles(fam, window)
        if back != sigma or 2 * len(fam) != len(interface_sites(sigma)) or not compatible(fam):
            bad.append(code)
            if len(bad) > 10:
                break
    return CheckResult(2, "bijection", "spins -> triangles -> spins is the identity", not bad,
                       details={"configurations": 1 << n_sites, "bad_codes": bad})


# ---------------------------------------------------------------------------
# 3. Peierls inequalities


@_timed
def check_peierls(n_configs: int = 10_000, n_sites: int = 24, alphas=(0.0, 0.25, 0.5),
                  master_seed: int = 0) -> CheckResult:
    details = {}
    ok = True
    for ai, alpha in enumerate(alphas):
        table = CouplingTable(alpha, 10.0)
        rng = np.random.default_rng(derive_seed(master_seed, "instance", 1000 + ai))
        violations, margins = 0, {"smallest": math.inf, "iterated": math.inf, "contour": math.inf}
        for _ in range(n_configs):
            sigma = SpinWindow(0, n_sites - 1, rng.choice(np.array([-1, 1], dtype=np.int8), n_sites), 1)
            fam = triangles_from_spins(sigma)
            rep = peierls_check(fam, table, alpha)
            violations += rep.violations
            if rep.smallest_margin is not None:
                margins["smallest"] = min(margins["smallest"], rep.smallest_margin)
            if rep.iterated_margins:
                margins["iterated"] = min(margins["iterated"], min(rep.iterated_margins))
            if rep.contour_margins:
                margins["contour"] = min(margins["contour"], min(rep.contour_margins))
        details[str(alpha)] = {"violations": violations, "min_margins": margins}
        ok &= violations == 0
    return CheckResult(3, "peierls inequalities", "erasure energies dominate the triangle mass costs", ok,
                       details=details)


# ---------------------------------------------------------------------------
# 4. contour algorithm


def _random_family(rng: np.random.Generator) -> TriangleFamily:
    n = int(rng.integers(8, 80))
    p = float(rng.uniform(0.02, 0.3))
    flips = rng.random(n) < p
    spins = np.where(np.cumsum(flips) % 2 == 0, 1, -1).astype(np.int8)
    return triangles_from_spins(SpinWindow(0, n - 1, spins, 1))


def _shifted(fam: TriangleFamily, offset: int) -> list:
    return [Triangle(t.start + offset, t.end + offset) for t in fam.triangles]


@_timed
def check_contours(n_families: int = 1000, C: float = 3, master_seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(derive_seed(master_seed, "instance", 2000))
    counts = {"audit": 0, "order": 0, "independence": 0}
    examples = []
    for _ in range(n_families):
        fam = _random_family(rng)
        contours = decompose_contours(fam, C)
        rep = verify_contours(contours, C, fam)
        if not rep.ok:
            counts["audit"] += 1
            examples.append(rep.failures[:2])
        perm = [fam.triangles[i] for i in rng.permutation(len(fam))]
        if decompose_contours(perm, C, rng=rng) != contours:
            counts["order"] += 1
        other = _random_family(rng)
        if len(fam) and len(other):
            # contour masses are bounded by the family masses
            big = max(sum(fam.masses), sum(other.masses))
            offset = fam.hi + int(C * big**3) + 2 - other.lo
            if not independence_holds(fam.triangles, _shifted(other, offset), C):
                counts["independence"] += 1
    ok = not any(counts.values())
    return CheckResult(4, "contour algorithm",
                       "partition, separation, independence and idempotence of the contour decomposition",
                       ok, details={"families": n_families, "failures": counts, "examples": examples[:3]})


# ---------------------------------------------------------------------------
# 5. separation constant


@_timed
def check_separation_constant(tol: float = 1e-9) -> CheckResult:
    C = min_separation_constant()
    # floor(C m) = C m for integer C, so the series is (4 / C**3) * pi**2 / 6
    ref = {c: 4.0 / c**3 * math.pi**2 / 6.0 for c in (2, 3)}
    got = {c: sum(separation_series(c)) / 2.0 for c in (2, 3)}
    ok = (C == 3 and abs(got[2] - ref[2]) <= tol and abs(got[3] - ref[3]) <= tol
          and got[2] > 0.5 >= got[3])
    return CheckResult(5, "separation constant", "smallest C whose separation series is at most 1/2", ok,
                       details={"C": C, "series": got, "reference": ref})


# ---------------------------------------------------------------------------
# 6. E_alpha dominance


@_timed
def check_e_alpha_dominance(alphas=(0.0, 0.25, 0.5), j1: float = 10.0, max_size: int = 512) -> CheckResult:
    details, ok = {}, True
    for alpha in alphas:
        table = CouplingTable(alpha, j1)
        margins = [e_alpha(alpha, j1, n) - exterior_sum(alpha, j1, n, table) for n in range(1, max_size + 1)]
        worst = int(np.argmin(margins)) + 1
        details[str(alpha)] = {"min_margin": min(margins), "at_size": worst}
        ok &= min(margins) >= 0.0
    return CheckResult(6, "E_alpha dominance", "block-to-exterior coupling is at most E_alpha", ok,
                       details=details)


# ---------------------------------------------------------------------------
# 7. concentration bounds


def binomial_sup_interval(n: int, tau: float) -> float:
    """``sup_x P[S_n in [x, x + tau]]`` for a sum of ``n`` Rademacher signs."""
    width = int(math.floor(tau / 2.0)) + 1
    pmf = binom.pmf(np.arange(n + 1), n, 0.5)
    sums = np.convolve(pmf, np.ones(width), mode="valid")
    return float(sums.max())


def gaussian_sup_interval(n: int, tau: float) -> float:
    """``sup_x P[N(0, n) in [x, x + tau]]``, attained by the centred interval."""
    return float(2.0 * ndtr(tau / (2.0 * math.sqrt(n))) - 1.0)


def binomial_cdf_log(n: int, t: float) -> float:
    """``P[S_n <= t]`` through log-gamma terms."""
    kmax = math.floor((n + t) / 2.0)
    if kmax < 0:
        return 0.0
    k = np.arange(0, min(kmax, n) + 1)
    logp = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) - n * math.log(2.0)
    m = logp.max()
    return float(math.exp(m) * np.exp(logp - m).sum())


@_timed
def check_concentration(ns=(100, 400, 1000), taus=(1.0, 2.0, 4.0), be_ns=(1000, 10_000),
                        thetas=(1.0, 2.0, 4.0, 8.0)) -> CheckResult:
    rows, ok = [], True
    for n in ns:
        for tau in taus:
            lc = lecam_bound(n, tau, censored_moment("bernoulli", tau))
            ex = binomial_sup_interval(n, tau)
            gb = gaussian_concentration(n, tau)
            gx = gaussian_sup_interval(n, tau)
            rows.append({"n": n, "tau": tau, "lecam": lc, "binomial": ex, "gauss_bound": gb, "gauss": gx})
            ok &= ex <= lc and gx <= gb
    be_rows = []
    for n in be_ns:
        for theta in thetas:
            t = -8.0 / theta * math.sqrt(n)
            exact = binomial_cdf_log(n, t)
            normal = float(ndtr(-8.0 / theta))
            be_rows.append({"n": n, "theta": theta, "exact": exact, "normal": normal,
                            "gap": abs(exact - normal), "allowed": 7.5 / math.sqrt(n)})
            ok &= abs(exact - normal) <= 7.5 / math.sqrt(n)
    return CheckResult(7, "concentration bounds",
                       "interval bounds dominate exact binomial/Gaussian probabilities; normal approximation error",
                       ok, details={"interval": rows, "berry_esseen": be_rows})


# ---------------------------------------------------------------------------
# 8. entropy


GOLDEN_ENTROPY = Path(__file__).resolve().parents[3] / "tests" / "golden" / "entropy_counts.json"


def entropy_counts(ms=(1, 2, 3), C: float = 3) -> dict:
    out = {}
    for m in ms:
        r = entropy_sum(m, 5.0, 0.5, C)
        out[str(m)] = {"count": r.count, "by_masses": r.counts_by_masses}
    return {"C": C, "origin": "cover", "counts": out}


@_timed
def check_entropy(ms=(1, 2, 3), bs=(5.0, 10.0), alphas=(0.0, 0.5), golden: str | Path | None = None) -> CheckResult:
    rows, ok = [], True
    for m in ms:
        for b in bs:
            for alpha in alphas:
                r = entropy_sum(m, b, alpha, c0=math.inf)
                rows.append(r.to_dict())
                ok &= r.holds
    counts = entropy_counts(ms)
    golden_ok = None
    path = Path(golden) if golden is not None else GOLDEN_ENTROPY
    if path.exists():
        golden_ok = json.loads(path.read_text()) == json.loads(json.dumps(counts))
        ok &= golden_ok
    return CheckResult(8, "entropy bound", "contour weight sums through the origin stay below 2m exp(-b cost(m))",
                       ok, details={"sums": rows, "counts": counts, "golden_match": golden_ok})


# ---------------------------------------------------------------------------
# 9. plan self-consistency


PLAN_THETAS = {
    0.0: (1e-6, 1e-7, 1e-8, 1e-9),
    0.1: (1e-3, 1e-4, 1e-5, 1e-6),
    0.25: (1e-3, 1e-4, 1e-5, 1e-6),
    0.4: (1e-3, 1e-4, 1e-5, 1e-6),
    0.5: (1e-3, 1e-4, 1e-5, 1e-6),
}
PLAN_BETA_FACTORS = (1.0, 2.0, 10.0, 100.0, 1e4)


def plan_grid():
    """100 ``(alpha, theta, beta)`` points inside the regime of both plans."""
    return [(a, t, f * saturating_beta(t, a)) for a, ts in PLAN_THETAS.items()
            for t in ts for f in PLAN_BETA_FACTORS]


def _resubstitute_upper(plan) -> bool:
    """Re-derive the consistency conditions from the plan's own fields."""
    if plan.regime == "alpha=1/2":
        # Phi(-8/theta) > 7.5 / sqrt(Delta), compared through logs
        return float(log_ndtr(-8.0 / plan.theta)) > math.log(7.5) - 0.5 * plan.log_delta
    E = e_alpha(plan.alpha, plan.j1, plan.delta)
    p1 = 8.0 * E * math.sqrt(math.pi) / (plan.theta * math.sqrt(plan.delta))
    return p1 <= plan.B and 2.0 * E / plan.theta >= 1.0


def _resubstitute_lower(plan) -> bool:
    a, b, D, g2 = plan.alpha, plan.b_bar, plan.D, plan.g2
    logL = max(0.0, plan.log_L_min_real)
    if a == 0.0:
        lhs, rhs = b * (4.0 + logL) * math.exp(-logL), D * g2
    elif a == 0.5:
        lhs, rhs = b / (2.0 * (4.0 + logL)), D
    else:
        lhs, rhs = b * math.exp(-(1.0 - 2.0 * a) * logL) / (4.0 + logL), D * g2
    return lhs >= rhs * (1.0 - 1e-12)


@_timed
def check_plans() -> CheckResult:
    grid = plan_grid()
    failures = []
    branch_gap = 0.0
    for a, t, beta in grid:
        try:
            up = plan_upper(a, t, beta=beta)
            lo = plan_lower(a, t, beta=beta)
            if not _resubstitute_upper(up):
                failures.append((a, t, beta, "upper"))
            if not _resubstitute_lower(lo):
                failures.append((a, t, beta, "lower"))
        except Exception as exc:  # noqa: BLE001 - reported as a failure
            failures.append((a, t, beta, f"{type(exc).__name__}: {exc}"))
        b0 = saturating_beta(t, a)
        z = 1.0 - 2.0 * (2.0**a - 1.0)
        first, second = b0 * z / 4.0, z * z / (2**10 * t * t)
        branch_gap = max(branch_gap, abs(first - second) / second,
                         abs(b_bar(b0, t, a) - second) / second)
    ok = not failures and branch_gap <= 1e-12
    return CheckResult(9, "plan self-consistency", "plans satisfy their defining constraints; b_bar branches meet",
                       ok, details={"points": len(grid), "failures": failures[:10],
                                    "branch_rel_gap": branch_gap})


# ---------------------------------------------------------------------------
# 10-11. scaling and determinism


def scaling_config(master_seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(alphas=(0.0,), thetas=(0.5, 0.35, 0.25), beta=2.0, window_size=2000,
                            n_disorder=20, master_seed=master_seed)


@_timed
def check_scaling(master_seed: int = 0, budget: float = 900.0, outdir=None) -> CheckResult:
    t0 = time.perf_counter()
    res = run_scaling(scaling_config(master_seed), outdir)
    elapsed = time.perf_counter() - t0
    meds = {r["theta"]: r["origin_median"] for r in res["summary"]}
    ok = origin_medians_increasing(res["summary"], 0.0) and elapsed < budget
    return CheckResult(10, "qualitative scaling", "origin-run median grows as the field weakens", ok,
                       details={"origin_medians": meds, "elapsed": elapsed},
                       output=res["summary_csv"] + (res["records_csv"] or ""))


@_timed
def check_determinism(master_seed: int = 0, first: dict | None = None) -> CheckResult:
    """Re-run checks 1 and 10 and compare outputs byte for byte.

    ``first`` may hold outputs of an earlier run keyed by check number.
    """
    first = dict(first or {})
    runs_ = {1: lambda: check_oracle_equivalence(master_seed=master_seed).output,
             10: lambda: check_scaling(master_seed=master_seed).output}
    same = {}
    for k, fn in runs_.items():
        a = first[k] if k in first else fn()
        b = fn()
        same[k] = a.encode() == b.encode() and len(a) > 0
    return CheckResult(11, "determinism", "identical seeds give byte-identical outputs", all(same.values()),
                       details={"identical": {str(k): v for k, v in same.items()}})


def run_all(master_seed: int = 0, only=None) -> list[CheckResult]:
    """Run the acceptance checks in order (optionally a subset by number)."""
    only = set(only) if only else set(range(1, 12))
    results = {}
    table = [
        (1, lambda: check_oracle_equivalence(master_seed=master_seed)),
        (2, check_bijection),
        (3, lambda: check_peierls(master_seed=master_seed)),
        (4, lambda: check_contours(master_seed=master_seed)),
        (5, check_separation_constant),
        (6, check_e_alpha_dominance),
        (7, check_concentration),
        (8, check_entropy),
        (9, check_plans),
        (10, lambda: check_scaling(master_seed=master_seed)),
    ]
    for k, fn in table:
        if k in only:
            results[k] = fn()
    if 11 in only:
        prior = {k: results[k].output for k in (1, 10) if k in results}
        results[11] = check_determinism(master_seed, prior)
    return [results[k] for k in sorted(results)]
