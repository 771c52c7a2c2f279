import math

import numpy as np
import pytest

from lrrfim import mcmc
from lrrfim.events import EventSpec
from lrrfim.exact import ExactMeasure, configs_from_codes
from lrrfim.exceptions import DomainError, InsufficientSamplesError
from lrrfim.mcmc import (
    Chain,
    ChainConfig,
    batch_means,
    estimate_event,
    estimate_events,
    format_snapshots,
    parse_snapshots,
    sweep,
)
from lrrfim.model import ModelParams, SpinWindow, Window, local_fields, sample_disorder, table_for


@pytest.mark.parametrize("rule", ["heat_bath", "metropolis"])
def test_numba_and_python_kernels_share_paths(rule):
    w = Window(-6, 7)
    h = sample_disorder("gaussian", w, 1)
    p = ModelParams(0.3, j1=1.5, beta=0.9, theta=0.6)
    cfg = ChainConfig(sweeps=300, burn_in=50, thinning=5, seed=77, update_rule=rule, initial="random")
    a = Chain(w, h, p, cfg, backend="numba")
    b = Chain(w, h, p, cfg, backend="python")
    np.testing.assert_array_equal(a.sample_array(), b.sample_array())
    assert a.energy == pytest.approx(b.energy, rel=1e-12)


@pytest.mark.parametrize("rule", ["heat_bath", "metropolis"])
def test_tracked_energy_telescopes(rule):
    w = Window(-20, 19)
    h = sample_disorder("bernoulli", w, 4)
    p = ModelParams(0.4, j1=2.0, beta=0.7, theta=0.5)
    chain = Chain(w, h, p, ChainConfig(sweeps=999, seed=3, update_rule=rule, refresh_every=10**6))
    for _ in range(999):
        chain.sweep()
    assert chain.telescoping_error() < 1e-6


def _sign_error_kernel(spins, local, jmat, beta, heat_bath, order, uniforms):
    accepted = 0.0
    for t, k in enumerate(order):
        s = int(spins[k])
        delta = -2.0 * s * local[k]  # injected bug
        if delta <= 0.0 or uniforms[t] < math.exp(-beta * delta):
            spins[k] = -s
            accepted += delta
            local -= 2.0 * s * jmat[k]
    return accepted


def test_mutated_flip_energy_breaks_telescoping(monkeypatch):
    monkeypatch.setattr(mcmc, "_sweep_python", _sign_error_kernel)
    w = Window(-10, 9)
    p = ModelParams(0.2, j1=2.0, beta=0.5)
    chain = Chain(w, None, p, ChainConfig(sweeps=50, seed=1, update_rule="metropolis"), backend="python")
    for _ in range(50):
        chain.sweep()
    assert chain.telescoping_error() > 1e-3


def test_heat_bath_detailed_balance():
    w = Window(0, 1)
    h = sample_disorder("gaussian", w, 2)
    p = ModelParams(0.0, j1=1.2, beta=0.6, theta=0.8)
    table = table_for(p)
    pi = ExactMeasure(w, h, p).probabilities()
    codes = np.arange(4)
    configs = configs_from_codes(codes, 2)
    rng = np.random.default_rng(5)
    n_trials = 40_000
    counts = np.zeros((4, 4))
    for a, row in enumerate(configs):
        start = SpinWindow(0, 1, row)
        base_local = local_fields(start, h, p, table)
        sites = rng.integers(0, 2, size=n_trials)
        us = rng.random(n_trials)
        for k, u in zip(sites, us):
            s = row.copy()
            mcmc._sweep_numba(s, base_local.copy(), table.matrix(2), p.beta, True,
                              np.array([k]), np.array([u]))
            b = int(((1 - s) // 2) @ np.array([1, 2]))
            counts[a, b] += 1
    P = counts / n_trials
    for a in range(4):
        for b in range(a + 1, 4):
            flow_ab, flow_ba = pi[a] * P[a, b], pi[b] * P[b, a]
            se = math.sqrt(pi[a] ** 2 * P[a, b] / n_trials + pi[b] ** 2 * P[b, a] / n_trials) + 1e-12
            assert abs(flow_ab - flow_ba) < 4 * se


def test_infinite_temperature_heat_bath_is_uniform():
    w = Window(0, 399)
    rng = np.random.default_rng(9)
    s = SpinWindow.constant(w)
    sweep(s, None, ModelParams(0.0, beta=0.0), "heat_bath", rng)
    frac = (s.spins > 0).mean()
    assert abs(frac - 0.5) < 4 * 0.5 / math.sqrt(400)


def test_ground_state_is_stable_at_large_beta():
    w = Window(-15, 15)
    p = ModelParams(0.0, beta=50.0)
    for rule in ("heat_bath", "metropolis"):
        chain = Chain(w, None, p, ChainConfig(sweeps=1000, seed=0, update_rule=rule))
        rows = chain.sample_array()
        assert np.all(rows == 1)


def test_estimate_matches_exact_value():
    w = Window(-5, 4)
    h = sample_disorder("bernoulli", w, 123)
    p = ModelParams(0.3, j1=1.2, beta=1.5, theta=0.2)
    ev = EventSpec.spin_at(0, 1)
    exact = ExactMeasure(w, h, p).probability(ev)
    est = estimate_event(w, h, p, ev, ChainConfig(sweeps=20_000, burn_in=1000, seed=8))
    assert abs(est.mean - exact) < 3 * est.std_error
    assert 0.0 < exact < 1.0


def test_event_and_complement_sum_to_one():
    w = Window(-5, 4)
    h = sample_disorder("bernoulli", w, 1)
    p = ModelParams(0.3, j1=1.2, beta=1.0, theta=0.3)
    cfg = ChainConfig(sweeps=2000, burn_in=100, seed=2)
    plus, minus = estimate_events(w, h, p, [EventSpec.spin_at(0, 1), EventSpec.spin_at(0, -1)], cfg)
    assert plus.mean + minus.mean == 1.0


def test_standard_error_shrinks_with_more_sweeps():
    w = Window(-5, 4)
    h = sample_disorder("bernoulli", w, 6)
    p = ModelParams(0.3, j1=1.1, beta=0.5, theta=0.2)
    ev = EventSpec.run_equals((-1, 1), 1)

    def mean_se(sweeps):
        return np.mean([
            estimate_event(w, h, p, ev, ChainConfig(sweeps=sweeps, seed=s, n_batches=40)).batch_std_error
            for s in range(8)
        ])

    ratio = mean_se(16_000) / mean_se(8_000)
    assert abs(ratio - 1 / math.sqrt(2)) < 0.3 / math.sqrt(2)


def test_batch_means_requirements():
    with pytest.raises(InsufficientSamplesError):
        batch_means(np.ones(10))
    with pytest.raises(InsufficientSamplesError):
        batch_means(np.ones(100), n_batches=5)
    mean, se, raw = batch_means(np.ones(100))
    assert mean == 1.0 and raw == 0.0 and se > 0.0


def test_too_few_samples_for_batches():
    cfg = ChainConfig(sweeps=30, burn_in=10, thinning=2)
    with pytest.raises(InsufficientSamplesError):
        estimate_event(Window(0, 3), None, ModelParams(0.0), EventSpec.spin_at(0, 1), cfg)


def test_chain_config_validation():
    with pytest.raises(DomainError):
        ChainConfig(sweeps=10, burn_in=10)
    with pytest.raises(DomainError):
        ChainConfig(sweeps=10, update_rule="wolff")
    with pytest.raises(DomainError):
        ChainConfig(sweeps=10, n_batches=5)
    assert ChainConfig(sweeps=1000, burn_in=100, thinning=9).n_samples == 100


def test_chain_is_seed_reproducible():
    w = Window(-8, 8)
    p = ModelParams(0.25, j1=1.5, beta=1.0)
    cfg = ChainConfig(sweeps=200, seed=42, initial="random")
    np.testing.assert_array_equal(Chain(w, None, p, cfg).sample_array(),
                                  Chain(w, None, p, cfg).sample_array())


def test_snapshot_roundtrip():
    w = Window(-3, 2, -1)
    rows = configs_from_codes(np.arange(0, 64, 7), 6)
    back_w, back = parse_snapshots(format_snapshots(w, rows))
    assert back_w == w
    np.testing.assert_array_equal(back, rows)
    with pytest.raises(DomainError):
        parse_snapshots("++-\n")
