"""Run-length statistics of sampled configurations across field strengths."""

from __future__ import annotations

import csv
import io
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..bounds import saturating_beta, theorem_summary
from ..exceptions import DomainError, RegimeError
from ..geometry.runs import runs
from ..mcmc import Chain, ChainConfig
from ..model import ModelParams, SpinWindow, Window, sample_disorder
from .seeds import derive_seed

SCHEMA_VERSION = 1
WORKERS_ENV = "LRRFIM_WORKERS"
RECORD_FIELDS = ("alpha", "theta", "beta", "disorder_seed", "chain_seed", "sample",
                 "run_index", "length", "sign", "contains_origin")
SUMMARY_FIELDS = ("alpha", "theta", "beta", "n_seeds", "n_samples",
                  "origin_median", "origin_median_lo", "origin_median_hi",
                  "origin_mean", "origin_mean_lo", "origin_mean_hi",
                  "interior_median", "interior_median_lo", "interior_median_hi",
                  "interior_mean", "interior_mean_lo", "interior_mean_hi",
                  "L_min", "L_max", "bracket_note")


@dataclass(frozen=True)
class ExperimentConfig:
    alphas: tuple[float, ...]
    thetas: tuple[float, ...]
    beta: float | None = None
    window_size: int = 2000
    n_disorder: int = 20
    sweeps: int = 4000
    burn_in: int = 2000
    thinning: int = 100
    update_rule: str = "heat_bath"
    initial: str = "random"
    j1: float = 10.0
    disorder: str = "bernoulli"
    master_seed: int = 0
    n_bootstrap: int = 1000
    allow_small_window: bool = False
    write_records: bool = True

    def __post_init__(self):
        if not self.alphas or not self.thetas:
            raise DomainError("alpha and theta lists must be non-empty")
        if self.window_size < 3:
            raise DomainError("window must hold at least 3 sites")
        if self.n_disorder < 1:
            raise DomainError("need at least one disorder seed")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))

    @property
    def window(self) -> Window:
        lo = -(self.window_size // 2)
        return Window(lo, lo + self.window_size - 1, 1)

    def beta_for(self, alpha: float, theta: float) -> float:
        """Fixed ``beta`` when given, else the saturating value."""
        return self.beta if self.beta is not None else saturating_beta(theta, alpha)

    def chain_config(self, seed: int) -> ChainConfig:
        return ChainConfig(sweeps=self.sweeps, burn_in=self.burn_in, thinning=self.thinning,
                           seed=seed, update_rule=self.update_rule, initial=self.initial)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"], d["thetas"] = list(self.alphas), list(self.thetas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["alphas"], d["thetas"] = tuple(d["alphas"]), tuple(d["thetas"])
        return cls(**d)


@dataclass
class CellResult:
    alpha: float
    theta: float
    beta: float
    disorder_seed: int
    chain_seed: int
    records: list[tuple] = field(default_factory=list)
    origin: list[int] = field(default_factory=list)
    interior: list[int] = field(default_factory=list)


def run_cell(config: ExperimentConfig, alpha: float, theta: float, seed_index: int) -> CellResult:
    """Sample one disorder realization and decompose every kept state into runs.

    Disorder and chain seeds depend only on the seed index, so all field
    strengths see the same realizations.
    """
    window = config.window
    d_seed = derive_seed(config.master_seed, "disorder", seed_index)
    c_seed = derive_seed(config.master_seed, "chain", seed_index)
    beta = config.beta_for(alpha, theta)
    params = ModelParams(alpha, j1=config.j1, beta=beta, theta=theta, disorder=config.disorder)
    disorder = sample_disorder(config.disorder, window, d_seed)
    chain = Chain(window, disorder, params, config.chain_config(c_seed))
    out = CellResult(alpha, theta, beta, d_seed, c_seed)
    for k, row in enumerate(chain.samples()):
        dec = runs(SpinWindow(window.lo, window.hi, row, window.boundary))
        for j, run in dec.indexed():
            if config.write_records:
                out.records.append((alpha, theta, beta, d_seed, c_seed, k, j, run.length,
                                    run.sign, int(j == 1)))
            if j == 1:
                out.origin.append(run.length)
            if dec.b_V < j < dec.e_V:
                out.interior.append(run.length)
    return out


def _run_cell_args(args):
    return run_cell(*args)


def bootstrap_ci(groups: list[np.ndarray], stat, rng: np.random.Generator, n_boot: int,
                 level: float = 0.95) -> tuple[float, float]:
    """Percentile interval of ``stat`` resampling whole groups (disorder seeds)."""
    groups = [g for g in groups if g.size]
    if not groups:
        return float("nan"), float("nan")
    reps = np.empty(n_boot)
    for b in range(n_boot):
        pick = rng.integers(0, len(groups), size=len(groups))
        reps[b] = stat(np.concatenate([groups[i] for i in pick]))
    q = (1.0 - level) / 2.0
    return float(np.quantile(reps, q)), float(np.quantile(reps, 1.0 - q))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def header_lines(config: ExperimentConfig, warnings_: list[str]) -> list[str]:
    seeds = {
        "disorder": [derive_seed(config.master_seed, "disorder", i) for i in range(config.n_disorder)],
        "chain": [derive_seed(config.master_seed, "chain", i) for i in range(config.n_disorder)],
    }
    lines = [
        f"# lrrfim {__version__} schema {SCHEMA_VERSION}",
        f"# config {json.dumps(config.to_dict(), sort_keys=True)}",
        f"# master_seed {config.master_seed}",
        f"# derived_seeds {json.dumps(seeds)}",
    ]
    lines += [f"# warning {w}" for w in warnings_]
    return lines


def plan_bracket(alpha: float, theta: float, beta: float) -> tuple[float | None, float | None, str]:
    try:
        s = theorem_summary(alpha, theta, beta=max(beta, saturating_beta(theta, alpha)))
    except (RegimeError, DomainError) as exc:
        return None, None, f"no valid plan: {str(exc).splitlines()[0]}"
    lo, hi = s.bracket
    return float(lo), float(hi), "ok"


def window_warnings(config: ExperimentConfig) -> list[str]:
    out = []
    for a in config.alphas:
        for t in config.thetas:
            _, hi, note = plan_bracket(a, t, config.beta_for(a, t))
            if hi is not None and config.window_size < 3 * hi:
                msg = f"window {config.window_size} is below 3 * L_max = {3 * hi:.6g} at alpha={a}, theta={t}"
                if not config.allow_small_window:
                    warnings.warn(msg)
                out.append(msg)
    return out


def _summary_rows(config: ExperimentConfig, cells: list[CellResult]) -> list[dict]:
    rows = []
    for ai, a in enumerate(config.alphas):
        for ti, t in enumerate(config.thetas):
            mine = [c for c in cells if c.alpha == a and c.theta == t]
            origin = [np.asarray(c.origin, dtype=np.float64) for c in mine]
            interior = [np.asarray(c.interior, dtype=np.float64) for c in mine]
            rng = np.random.default_rng(derive_seed(config.master_seed, "bootstrap", ai, ti))
            row = {"alpha": a, "theta": t, "beta": mine[0].beta, "n_seeds": len(mine),
                   "n_samples": int(sum(o.size for o in origin))}
            for name, groups in (("origin", origin), ("interior", interior)):
                pooled = np.concatenate(groups) if groups else np.empty(0)
                for stat_name, stat in (("median", np.median), ("mean", np.mean)):
                    key = f"{name}_{stat_name}"
                    row[key] = float(stat(pooled)) if pooled.size else float("nan")
                    row[key + "_lo"], row[key + "_hi"] = bootstrap_ci(groups, stat, rng, config.n_bootstrap)
            lo, hi, note = plan_bracket(a, t, row["beta"])
            row.update(L_min=lo, L_max=hi, bracket_note=note)
            rows.append(row)
    return rows


def _csv_text(header: list[str], fields, rows) -> str:
    buf = io.StringIO()
    buf.write("\n".join(header) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_scaling(config: ExperimentConfig, outdir: str | os.PathLike | None = None,
                workers: int | None = None) -> dict:
    """Run every ``(alpha, theta, disorder seed)`` cell and summarize run lengths.

    Returns a dict with the summary rows and the CSV texts; when ``outdir`` is
    given, ``records.csv`` and ``summary.csv`` are written there.  Cells may
    run on several processes (``workers`` or the ``LRRFIM_WORKERS``
    environment variable); results are merged in a fixed order, so outputs do
    not depend on the worker count.
    """
    workers = worker_count() if workers is None else max(1, workers)
    notes = window_warnings(config)
    jobs = [(config, a, t, i) for a in config.alphas for t in config.thetas
            for i in range(config.n_disorder)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    else:
        cells = [run_cell(*j) for j in jobs]

    header = header_lines(config, notes)
    summary = _summary_rows(config, cells)
    summary_csv = _csv_text(header, SUMMARY_FIELDS, summary)
    records_csv = None
    if config.write_records:
        recs = [dict(zip(RECORD_FIELDS, r)) for c in cells for r in c.records]
        records_csv = _csv_text(header, RECORD_FIELDS, recs)
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary_csv)
        if records_csv is not None:
            (out / "records.csv").write_text(records_csv)
    return {"summary": summary, "summary_csv": summary_csv, "records_csv": records_csv,
            "warnings": notes}


def origin_medians_increasing(summary: list[dict], alpha: float) -> bool:
    """Whether the origin-run median strictly increases as ``theta`` decreases."""
    rows = sorted((r for r in summary if r["alpha"] == alpha), key=lambda r: -r["theta"])
    meds = [r["origin_median"] for r in rows]
    return all(b > a for a, b in zip(meds, meds[1:]))
