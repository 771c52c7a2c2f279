import csv
import io
import json

import numpy as np
import pytest

from lrrfim import __version__
from lrrfim.bounds import plan_upper
from lrrfim.exact import event_probability
from lrrfim.events import EventSpec
from lrrfim.harness import checks, cli
from lrrfim.harness.scaling import (
    RECORD_FIELDS,
    SUMMARY_FIELDS,
    ExperimentConfig,
    bootstrap_ci,
    origin_medians_increasing,
    run_scaling,
)
from lrrfim.harness.seeds import STREAMS, derive_seed, derive_seeds
from lrrfim.model import ModelParams, Window, sample_disorder


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# seeds ----------------------------------------------------------------------

def test_seeds_are_stable_and_distinct():
    a = derive_seeds(0, "disorder", 50)
    assert a == derive_seeds(0, "disorder", 50)
    assert len(set(a)) == 50
    assert set(a).isdisjoint(derive_seeds(0, "chain", 50))
    assert derive_seed(1, "disorder", 0) != derive_seed(0, "disorder", 0)
    assert all(0 <= s < 2**63 for s in a)
    assert derive_seed(0, "bootstrap", 1, 2) != derive_seed(0, "bootstrap", 2, 1)
    assert set(STREAMS) == {"disorder", "chain", "bootstrap", "instance"}


# scaling --------------------------------------------------------------------

def small_config(**kw):
    base = dict(alphas=(0.0,), thetas=(0.5, 0.25), beta=2.0, window_size=80, n_disorder=3,
                sweeps=300, burn_in=100, thinning=20, n_bootstrap=50, allow_small_window=True)
    base.update(kw)
    return ExperimentConfig(**base)


def _body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_scaling_outputs_are_reproducible(tmp_path):
    cfg = small_config()
    a = run_scaling(cfg, tmp_path / "a")
    b = run_scaling(cfg, tmp_path / "b")
    for name in ("summary.csv", "records.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a["summary_csv"] == b["summary_csv"]


def test_scaling_independent_of_worker_count():
    cfg = small_config(n_disorder=2)
    assert run_scaling(cfg, workers=1)["records_csv"] == run_scaling(cfg, workers=2)["records_csv"]


def test_scaling_csv_layout():
    cfg = small_config()
    res = run_scaling(cfg)
    header = [ln for ln in res["summary_csv"].splitlines() if ln.startswith("#")]
    assert header[0] == f"# lrrfim {__version__} schema 1"
    assert json.loads(header[1][len("# config "):]) == cfg.to_dict()
    assert header[2] == "# master_seed 0"
    seeds = json.loads(header[3][len("# derived_seeds "):])
    assert seeds["disorder"] == derive_seeds(0, "disorder", 3)
    rows = list(csv.DictReader(io.StringIO("\n".join(_body(res["summary_csv"])))))
    assert tuple(rows[0]) == SUMMARY_FIELDS and len(rows) == 2
    recs = list(csv.DictReader(io.StringIO("\n".join(_body(res["records_csv"])))))
    assert tuple(recs[0]) == RECORD_FIELDS
    # each kept state has exactly one run through the origin
    n_states = 3 * cfg.sweeps // cfg.thinning - 3 * cfg.burn_in // cfg.thinning
    assert sum(r["contains_origin"] == "1" for r in recs) == 2 * n_states


def test_scaling_config_roundtrip():
    cfg = small_config(thetas=(0.3,))
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_small_window_warns():
    cfg = ExperimentConfig(alphas=(0.25,), thetas=(1e-3,), window_size=50, n_disorder=1,
                           sweeps=20, burn_in=0, thinning=1, n_bootstrap=10)
    with pytest.warns(UserWarning, match="window"):
        res = run_scaling(cfg)
    assert res["warnings"]


def test_strong_field_gives_short_origin_runs():
    # with J(1) = 10 a domain wall outweighs theta = 2, so the coupling is taken near 1
    cfg = small_config(thetas=(2.0,), beta=0.5, window_size=400, n_disorder=10, sweeps=1000,
                       burn_in=500, thinning=25, j1=1.1)
    row = run_scaling(cfg)["summary"][0]
    assert row["origin_median"] <= 5
    assert row["bracket_note"].startswith("no valid plan")


def test_origin_median_monotonicity_helper():
    rows = [{"alpha": 0.0, "theta": t, "origin_median": m} for t, m in ((0.5, 3), (0.25, 9), (0.35, 5))]
    assert origin_medians_increasing(rows, 0.0)
    rows[1]["origin_median"] = 4
    assert not origin_medians_increasing(rows, 0.0)


def test_bootstrap_resamples_groups():
    rng = np.random.default_rng(0)
    groups = [np.full(5, float(i)) for i in range(10)]
    lo, hi = bootstrap_ci(groups, np.mean, rng, 400)
    assert lo < 4.5 < hi
    assert bootstrap_ci([np.empty(0)], np.mean, rng, 10) != bootstrap_ci([np.ones(1)], np.mean, rng, 10)


# CLI ------------------------------------------------------------------------

def test_cli_plan_upper(capsys):
    code, out, _ = run_cli(capsys, "bounds", "plan-upper", "--alpha", "0.25", "--theta", "0.1", "--B", "0.5")
    assert code == 0
    assert json.loads(out) == json.loads(json.dumps(plan_upper(0.25, 0.1, B=0.5).to_dict()))
    assert json.loads(out)["M"] == 14


def test_cli_triangles(capsys):
    code, out, _ = run_cli(capsys, "geometry", "triangles", "--spins", "+,+,-,-,+")
    assert code == 0
    data = json.loads(out)
    assert data["triangles"] == [{"support": [2, 3], "mass": 2}]
    assert data["window"] == {"lo": 0, "hi": 4}


def test_cli_triangles_leading_minus(capsys):
    code, out, _ = run_cli(capsys, "geometry", "triangles", "--spins", "-+-", "--lo", "-1")
    assert code == 0
    assert json.loads(out)["triangles"] == [{"support": [-1, -1], "mass": 1}, {"support": [1, 1], "mass": 1}]


def test_cli_exact_matches_library(capsys):
    code, out, _ = run_cli(capsys, "exact", "event", "--window", "-5..5", "--event", "spin_at:0:+",
                           "--alpha", "0.25", "--beta", "0.7", "--theta", "0.4", "--j1", "1.5",
                           "--disorder-seed", "9")
    assert code == 0
    w = Window(-5, 5)
    want = event_probability(w, sample_disorder("bernoulli", w, 9),
                             ModelParams(0.25, j1=1.5, beta=0.7, theta=0.4), EventSpec.spin_at(0, 1))
    got = json.loads(out)["events"]["spin_at:0:+"]
    assert 0.0 <= got <= 1.0 and got == want


def test_cli_disorder_csv(capsys, tmp_path):
    w = Window(-2, 2)
    h = sample_disorder("gaussian", w, 4)
    path = tmp_path / "h.csv"
    path.write_text(h.to_csv())
    code, out, _ = run_cli(capsys, "exact", "log-z", "--window", "-2..2", "--theta", "1",
                           "--disorder-csv", str(path))
    assert code == 0
    from lrrfim.exact import log_partition
    assert json.loads(out)["log_partition"] == log_partition(w, h, ModelParams(0.0, theta=1.0))


def test_cli_mcmc_event_and_sample(capsys):
    code, out, _ = run_cli(capsys, "mcmc", "event", "--window", "-3..3", "--event", "spin_at:0:+",
                           "--event", "spin_at:0:-", "--sweeps", "400", "--burn-in", "0",
                           "--j1", "1.2", "--beta", "0.3")
    assert code == 0
    ev = json.loads(out)["events"]
    assert ev["spin_at:0:+"]["mean"] + ev["spin_at:0:-"]["mean"] == 1.0
    code, out, _ = run_cli(capsys, "mcmc", "sample", "--window", "-3..3", "--sweeps", "40",
                           "--burn-in", "0", "--thinning", "10")
    assert code == 0
    assert out.splitlines()[0] == "# window -3..3 boundary +" and len(out.splitlines()) == 5


def test_cli_geometry_misc(capsys):
    code, out, _ = run_cli(capsys, "geometry", "separation")
    assert (code, json.loads(out)["C"]) == (0, 3)
    code, out, _ = run_cli(capsys, "geometry", "entropy", "--m", "2", "--b", "10", "--alpha", "0.5")
    assert code == 0 and json.loads(out)["count"] == 9
    code, out, _ = run_cli(capsys, "geometry", "runs", "--spins", "++--+++", "--lo", "-3")
    data = json.loads(out)
    assert (data["b_V"], data["e_V"]) == (0, 2)
    code, out, _ = run_cli(capsys, "geometry", "peierls", "--spins", "+-+")
    assert json.loads(out)["ok"]


def test_cli_bounds_misc(capsys):
    code, out, _ = run_cli(capsys, "bounds", "b-bar", "--beta", "100", "--theta", "0.05", "--alpha", "0.25")
    assert code == 0 and json.loads(out)["b_bar"] == pytest.approx(0.150925, abs=1e-6)
    code, out, _ = run_cli(capsys, "bounds", "summary", "--alpha", "0.5", "--theta", "0.001")
    assert code == 0 and json.loads(out)["bracket_ok"]


@pytest.mark.parametrize("argv", [
    ["bounds", "plan-upper", "--alpha", "0.7"],
    ["bounds", "plan-lower", "--alpha", "0.25", "--theta", "0.1"],
    ["exact", "log-z", "--window", "0..30"],
    ["exact", "event", "--window", "0..3", "--event", "spin_at:9:+"],
    ["geometry", "entropy", "--m", "6"],
    ["geometry", "triangles", "--spins", "+x-"],
    ["exact", "log-z", "--window", "0..3", "--theta", "1", "--disorder-csv", "/nonexistent/h.csv"],
])
def test_cli_usage_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_cli_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["geometry", "triangles"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 2


def test_cli_verify_exit_codes(capsys, monkeypatch, tmp_path):
    report = tmp_path / "r.json"
    code, _, err = run_cli(capsys, "verify", "--only", "5,6", "--report", str(report))
    assert code == 0
    data = json.loads(report.read_text())
    assert data["passed"] and [c["number"] for c in data["checks"]] == [5, 6]
    assert all(c["property"] for c in data["checks"])
    assert err.count("[PASS]") == 2

    def failing(master_seed=0, only=None):
        return [checks.CheckResult(1, "oracle", "stub", False, 0.0, {}, None)]

    monkeypatch.setattr(cli, "run_all", failing)
    code, out, err = run_cli(capsys, "verify")
    assert code == 1
    assert "[FAIL]" in err and not json.loads(out)["passed"]
