import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodepth.errors import ContractError, EmptySelectionError
from geodepth.losses import (
    ALPHA_H_DECAY_EPOCH,
    ALPHA_H_DECAY_FACTOR,
    LossConfig,
    combined_loss,
    masked_mean_loss,
    pseudo_huber,
    pseudo_huber_grad,
)

# 4 * (sqrt(2) - 1), evaluated at 30 digits
RESIDUAL_2_DELTA_2 = 1.6568542494923801952067548968


def _mp_huber(r, delta):
    mpmath.mp.dps = 40
    r, delta = mpmath.mpf(r), mpmath.mpf(delta)
    return delta ** 2 * (mpmath.sqrt(1 + (r / delta) ** 2) - 1)


def test_defaults():
    cfg = LossConfig()
    assert (cfg.delta, cfg.alpha_h) == (2.0, 0.1)
    assert (ALPHA_H_DECAY_EPOCH, ALPHA_H_DECAY_FACTOR) == (5, 10.0)
    with pytest.raises(ContractError):
        LossConfig(delta=0)
    with pytest.raises(ContractError):
        LossConfig(alpha_h=-0.1)


def test_zero_residual():
    assert pseudo_huber(3.7, 3.7) == 0.0


def test_residual_two():
    assert abs(pseudo_huber(2.0, 0.0, 2.0) - RESIDUAL_2_DELTA_2) < 1e-12
    assert float(_mp_huber(2, 2)) == pytest.approx(RESIDUAL_2_DELTA_2, abs=1e-15)


@pytest.mark.parametrize("r", [1e-7, 1e-3, 0.5, 3.0, 47.0, -12.0, 1e4])
@pytest.mark.parametrize("delta", [0.5, 2.0, 9.0])
def test_against_high_precision(r, delta):
    assert pseudo_huber(r, 0.0, delta) == pytest.approx(float(_mp_huber(r, delta)), rel=1e-13)


@given(st.floats(-1e3, 1e3), st.floats(0.1, 10))
def test_even(r, delta):
    assert pseudo_huber(r, 0, delta) == pseudo_huber(-r, 0, delta)
    assert pseudo_huber(r, 0, delta) >= 0


def test_quadratic_regime():
    for delta in (0.5, 2.0, 10.0):
        for frac in (1e-4, 3e-5, 1e-6):
            r = frac * delta
            assert pseudo_huber(r, 0, delta) == pytest.approx(r * r / 2, rel=1e-6)


def test_linear_regime():
    for delta in (0.5, 2.0, 10.0):
        r = 1e4 * delta
        assert pseudo_huber(r, 0, delta) / r == pytest.approx(delta, rel=1e-3)


def test_monotone_in_abs_residual():
    r = np.linspace(0, 200, 5001)
    v = pseudo_huber(r, 0.0, 2.0)
    assert np.all(np.diff(v) >= 0)


def test_gradient_finite_difference():
    h = 1e-5
    for r in np.linspace(-100, 100, 401):
        fd = (pseudo_huber(r + h, 0, 2.0) - pseudo_huber(r - h, 0, 2.0)) / (2 * h)
        assert abs(fd - pseudo_huber_grad(r, 0, 2.0)) < 1e-6


def test_non_finite_rejected():
    with pytest.raises(ContractError):
        pseudo_huber(float("nan"), 0.0)
    with pytest.raises(ContractError):
        pseudo_huber(1.0, 0.0, delta=0.0)


def test_masked_mean(rng):
    y = rng.normal(0, 5, size=(9, 9))
    assert masked_mean_loss(y, y, np.ones_like(y, bool)) == 0.0
    mask = np.zeros_like(y, bool)
    mask[3, 4] = True
    assert masked_mean_loss(y, np.zeros_like(y), mask) == pseudo_huber(y[3, 4], 0.0)
    with pytest.raises(EmptySelectionError):
        masked_mean_loss(y, y, np.zeros_like(y, bool))


def test_masked_mean_loop_oracle(rng):
    y = rng.normal(10, 5, size=(13, 7))
    yh = rng.normal(10, 5, size=(13, 7))
    mask = rng.random((13, 7)) < 0.6
    terms = [
        4.0 * (math.sqrt(1 + ((a - b) / 2.0) ** 2) - 1)
        for a, b, m in zip(y.ravel(), yh.ravel(), mask.ravel()) if m
    ]
    assert masked_mean_loss(y, yh, mask, 2.0) == pytest.approx(math.fsum(terms) / len(terms), abs=1e-12)


def test_combined_loss():
    assert combined_loss(5.0, 2.0, 0.0) == 2.0
    assert combined_loss(1.0, 2.0, 0.1) == pytest.approx(2.1, abs=1e-15)
    with pytest.raises(ContractError):
        combined_loss(-1.0, 1.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 5))
def test_combined_linearity(h1, h2, d, a):
    lhs = combined_loss(h1 + h2, d, a)
    rhs = combined_loss(h1, d, a) + a * h2
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)
