import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadeasym.asymptotics import empirical_diversity_order, exact_average
from fadeasym.channels import make_channel
from fadeasym.error_models import bpsk_ber, dpsk_ber
from fadeasym.montecarlo import McConfig, McResult, mc_average_error, mc_crossing_snr, mc_curve


@pytest.fixture(scope="module")
def rayleigh():
    return make_channel("rayleigh")


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(draws=10, batches=20)
    with pytest.raises(ValueError):
        McConfig(draws=10, batches=1)
    with pytest.raises(ValueError):
        McConfig(seed=-1)
    with pytest.raises(ValueError):
        McConfig(seed=2**64)
    with pytest.raises(ValueError):
        McConfig(confidence=1.0)
    with pytest.raises(ValueError):
        McConfig(workers=0)


def test_result_validation():
    with pytest.raises(ValueError):
        McResult(0.5, -1e-3, 10, 0)
    with pytest.raises(ValueError):
        McResult(1.5, 0.0, 10, 0)


def test_dpsk_rayleigh_default_draws(rayleigh):
    r = mc_average_error(dpsk_ber(), rayleigh, 100.0, McConfig(seed=1))
    assert r.draws == 10**7 and r.seed == 1
    assert r.covers(0.5 / 101)
    assert r.halfwidth / r.estimate < 0.01


def test_bpsk_nakagami_vs_quadrature():
    ch = make_channel("nakagami:m=2")
    rho = 1e4
    r = mc_average_error(bpsk_ber(), ch, rho, McConfig(seed=2, draws=2 * 10**6, importance=True))
    assert r.covers(exact_average(bpsk_ber(), ch, rho))


def test_degenerate_sampler_exact():
    r = mc_average_error(dpsk_ber(), lambda rng, n: np.ones(n), 10.0, McConfig(draws=1003, batches=7))
    assert r.estimate == dpsk_ber()(10.0)
    assert r.halfwidth == 0.0


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_bit_identical_across_workers(rayleigh, workers):
    base = mc_average_error(bpsk_ber(), rayleigh, 50.0, McConfig(seed=99, draws=200_000, batches=20))
    other = mc_average_error(bpsk_ber(), rayleigh, 50.0, McConfig(seed=99, draws=200_000, batches=20, workers=workers))
    assert other == base


def test_importance_deterministic_across_workers(rayleigh):
    a = mc_average_error(bpsk_ber(), rayleigh, 1e3, McConfig(seed=4, draws=100_000, importance=True))
    b = mc_average_error(bpsk_ber(), rayleigh, 1e3, McConfig(seed=4, draws=100_000, importance=True, workers=4))
    assert a == b


def test_chunked_batches_match_exact(rayleigh, monkeypatch):
    import fadeasym.montecarlo as mc

    monkeypatch.setattr(mc, "CHUNK", 1000)
    r = mc_average_error(dpsk_ber(), rayleigh, 10.0, McConfig(seed=3, draws=100_001, batches=4))
    assert r.draws == 100_001
    assert r.covers(0.5 / 11)


def test_seed_changes_result(rayleigh):
    a = mc_average_error(dpsk_ber(), rayleigh, 10.0, McConfig(seed=1, draws=1000))
    b = mc_average_error(dpsk_ber(), rayleigh, 10.0, McConfig(seed=2, draws=1000))
    assert a.estimate != b.estimate


def test_importance_reduces_halfwidth(rayleigh):
    plain = mc_average_error(bpsk_ber(), rayleigh, 1e4, McConfig(seed=6, draws=200_000))
    weighted = mc_average_error(bpsk_ber(), rayleigh, 1e4, McConfig(seed=6, draws=200_000, importance=True))
    assert weighted.halfwidth < plain.halfwidth / 3
    assert weighted.covers(exact_average(bpsk_ber(), rayleigh, 1e4))


def test_importance_needs_density():
    with pytest.raises(ValueError):
        mc_average_error(dpsk_ber(), lambda rng, n: rng.exponential(size=n), 100.0, McConfig(draws=100, importance=True))


def test_bad_source():
    with pytest.raises(TypeError):
        mc_average_error(dpsk_ber(), 42, 1.0, McConfig(draws=100))


def test_curve_single_point(rayleigh):
    cfg = McConfig(seed=5, draws=10_000)
    curve = mc_curve(dpsk_ber(), rayleigh, [20.0], cfg)
    assert len(curve) == 1
    assert curve[0][1] == mc_average_error(dpsk_ber(), rayleigh, 100.0, cfg)


def test_curve_nakagami_closed_form():
    ch = make_channel("nakagami:m=2")
    grid = np.arange(0.0, 40.1, 2.0)
    curve = mc_curve(dpsk_ber(), ch, grid, McConfig(seed=21, draws=500_000, importance=True))
    misses = [s for s, r in curve if not r.covers(0.5 * (1 + 10 ** (s / 10) / 2) ** -2)]
    # 21 independent 95% intervals: allow the expected one or two misses
    assert len(misses) <= 3


def test_curve_diversity_nakagami3():
    ch = make_channel("nakagami:m=3")
    grid = np.arange(30.0, 50.1, 2.5)
    curve = mc_curve(dpsk_ber(), ch, grid, McConfig(seed=8, draws=300_000, importance=True), common_random_numbers=True)
    est = empirical_diversity_order((10 ** (s / 10), r.estimate) for s, r in curve)
    assert est.order == pytest.approx(3.0, abs=0.1)


def test_curve_validation(rayleigh):
    with pytest.raises(ValueError):
        mc_curve(dpsk_ber(), rayleigh, [], McConfig(draws=100))
    with pytest.raises(ValueError):
        mc_curve(dpsk_ber(), rayleigh, [10.0, 5.0], McConfig(draws=100))


def test_crn_uses_same_seed(rayleigh):
    curve = mc_curve(dpsk_ber(), rayleigh, [0.0, 1.0], McConfig(seed=77, draws=100), common_random_numbers=True)
    assert all(r.seed == 77 for _, r in curve)
    curve = mc_curve(dpsk_ber(), rayleigh, [0.0, 1.0], McConfig(seed=77, draws=100))
    assert [r.seed for _, r in curve] == [77, 78]


def test_crossing_helper(rayleigh):
    x, curve = mc_crossing_snr(dpsk_ber(), rayleigh, 1e-4, 10 * math.log10(5e3), McConfig(seed=1, draws=400_000, importance=True))
    assert len(curve) == 3
    assert x == pytest.approx(10 * math.log10(0.5 / 1e-4 - 1), abs=0.05)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(2, 12))
def test_constant_data_any_seed(seed, batches):
    r = mc_average_error(bpsk_ber(), lambda rng, n: np.full(n, 0.3), 4.0, McConfig(seed=seed, draws=batches * 7 + 3, batches=batches))
    assert r.estimate == bpsk_ber()(1.2)
    assert r.halfwidth == 0.0


@pytest.mark.slow
def test_coverage_calibration(rayleigh):
    exact = 0.5 / 101
    hits = sum(mc_average_error(dpsk_ber(), rayleigh, 100.0, McConfig(seed=s, draws=20_000)).covers(exact) for s in range(200))
    assert hits >= 180
