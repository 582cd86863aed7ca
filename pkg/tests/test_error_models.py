import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fadeasym.error_models import (
    ErrorClass,
    ExpBound,
    ExpMixture,
    InvalidModelError,
    as_mixture,
    bounded_model,
    bpsk_ber,
    custom_mixture,
    dpsk_ber,
    exponential_model,
    linear_combination,
    mpsk_ser,
    mqam_ser,
    parse_modulation,
)
from fadeasym.numerics import integrate, q_fn

BUILTINS = ["dpsk", "bpsk", "mpsk:M=4", "mpsk:M=8", "mqam:M=4", "mqam:M=16", "mqam:M=64"]


@pytest.mark.parametrize("x, expected", [(0.0, 0.5), (1.0, math.exp(-1) / 2), (10.0, 0.5 * math.exp(-10))])
def test_dpsk_values(x, expected):
    m = dpsk_ber()
    assert m.kind is ErrorClass.EXPONENTIAL
    assert (m.exact.alpha, m.exact.beta) == (1.0, 0.5)
    assert m(x) == pytest.approx(expected, rel=1e-14)


def test_bpsk_values():
    m = bpsk_ber()
    assert m.kind is ErrorClass.MIXTURE
    assert m(0.0) == 0.5
    assert m.mixture.evaluate(2.0) == pytest.approx(q_fn(2.0), rel=1e-10)
    assert m(2.0) == pytest.approx(q_fn(2.0), rel=1e-14)
    assert (m.bound.alpha, m.bound.beta) == (1.0, 0.5)


def test_mpsk2_is_bpsk():
    x = np.logspace(-3, 2, 50)
    np.testing.assert_allclose(mpsk_ser(2)(x), bpsk_ber()(x), rtol=1e-12, atol=0)


def test_qpsk_identity():
    q = q_fn(math.sqrt(10.0))
    assert mpsk_ser(4)(10.0) == pytest.approx(2 * q - q * q, rel=1e-10)


def test_mpsk8_at_zero():
    assert mpsk_ser(8)(0.0) == pytest.approx(0.875, rel=1e-12)


@pytest.mark.parametrize("M", [4, 8, 16])
@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_mpsk_fast_rule_matches_adaptive(M, x):
    m = mpsk_ser(M)
    assert m(x) == pytest.approx(m.mixture.evaluate(x), rel=1e-10)


def test_mqam4_at_zero_and_large():
    m = mqam_ser(4)
    assert m(0.0) == pytest.approx(0.75, rel=1e-14)
    x = 40.0
    assert m(x) == pytest.approx(2 * q_fn(math.sqrt(x)), rel=1e-6)


@pytest.mark.parametrize("M", [4, 16, 64])
@pytest.mark.parametrize("x", [0.5, 5.0, 20.0])
def test_mqam_mixture_matches_closed_form(M, x):
    m = mqam_ser(M)
    assert m.kind is ErrorClass.COMBINATION
    mixed = math.fsum(a * t.mixture.evaluate(x) for a, t in m.terms)
    assert mixed == pytest.approx(m(x), rel=1e-10)


@pytest.mark.parametrize("M", [3, 8, 1])
def test_mqam_rejects_nonsquare(M):
    with pytest.raises(InvalidModelError):
        mqam_ser(M)


def test_mpsk_rejects_small():
    with pytest.raises(InvalidModelError):
        mpsk_ser(1)


@pytest.mark.parametrize("spec", BUILTINS)
def test_builtin_monotone_and_bounded(spec):
    m = parse_modulation(spec)
    x = np.logspace(-4, 2, 200)
    p = np.asarray(m(x))
    assert np.all(np.diff(p) <= 0)
    assert np.all((p >= 0) & (p <= 1))
    xb = np.logspace(-3, math.log10(50), 60)
    assert np.all(np.asarray(m(xb)) <= m.bound(xb) * (1 + 1e-12))


@pytest.mark.parametrize("spec", ["dpsk", "bpsk", "mpsk:M=4", "mpsk:M=8"])
@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_hierarchy_mixture_form(spec, x):
    # every exponential model is a one-point mixture; every mixture evaluates to Pe
    m = parse_modulation(spec)
    assert as_mixture(m).evaluate(x) == pytest.approx(m(x), rel=1e-10)


def test_custom_mixture_reproduces_bpsk():
    m = custom_mixture(math.pi / 2, lambda t: math.sin(t) ** 2, lambda t: 1 / math.pi, ExpBound(1.0, 0.5))
    for x in (0.1, 1.0, 7.0):
        assert m(x) == pytest.approx(bpsk_ber()(x), rel=1e-10)


def test_custom_mixture_narrow_bump():
    m = custom_mixture(
        math.pi / 2,
        lambda t: 1.0,
        lambda t: 100.0 if 1.0 <= t <= 1.01 else 0.0,
        ExpBound(1.0, 1.0),
        breakpoints=(1.0, 1.01),
    )
    for x in (0.5, 2.0, 5.0):
        assert m(x) == pytest.approx(math.exp(-x), rel=1e-9)


@pytest.mark.parametrize("theta_t", [0.0, math.pi, 4.0, -1.0])
def test_custom_mixture_rejects_theta(theta_t):
    with pytest.raises(InvalidModelError):
        custom_mixture(theta_t, lambda t: 1.0, lambda t: 1.0, ExpBound(1.0, 1.0))


def test_custom_mixture_rejects_negative_g2():
    with pytest.raises(InvalidModelError):
        custom_mixture(1.0, lambda t: 1.0, lambda t: -1.0, ExpBound(1.0, 1.0))


def test_expbound_validation():
    with pytest.raises(InvalidModelError):
        ExpBound(0.0, 1.0)
    with pytest.raises(InvalidModelError):
        ExpBound(1.0, math.inf)


def test_linear_combination_rejects_bounded():
    b = bounded_model(lambda x: 0.5 * np.exp(-x), ExpBound(1.0, 0.5))
    with pytest.raises(InvalidModelError):
        linear_combination([(1.0, b)], ExpBound(1.0, 1.0))


def test_mixture_moment_bpsk():
    # int (1/pi) sin^{2d} = Gamma(d+1/2) / (2 sqrt(pi) Gamma(d+1))
    mix = bpsk_ber().mixture
    assert mix.moment(2.0) == pytest.approx(math.gamma(2.5) / (2 * math.sqrt(math.pi) * 2.0), rel=1e-12)


def test_expmixture_direct():
    mix = ExpMixture(math.pi / 2, lambda t: math.sin(t) ** 2, lambda t: 1 / math.pi)
    direct = integrate(lambda t: math.exp(-1.0 / math.sin(t) ** 2) / math.pi, 0.0, math.pi / 2)
    assert mix.evaluate(1.0) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("text", ["qam", "mpsk", "mqam:M=x", "dpsk:M=2", "mpsk:N=4", "mpsk:M"])
def test_parse_modulation_errors(text):
    with pytest.raises(InvalidModelError):
        parse_modulation(text)


@given(st.floats(0.01, 10.0), st.floats(0.01, 1.0), st.floats(0.0, 100.0))
def test_exponential_model_property(alpha, beta, x):
    m = exponential_model(alpha, beta)
    assert m(x) == pytest.approx(beta * math.exp(-alpha * x), rel=1e-14)
    assert m(x) <= m.bound(x) * (1 + 1e-15)
