import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from pcnoma.exit_analysis import (SIGMA_MAX, chain_sum, estimate_ie, estimate_user_capacity,
                                  llr_means_from_ie, mutual_info_from_llrs, omega, omega_inv, omega_loss)
from pcnoma.factor_graph import pdma_2x3
from pcnoma.noma_phy import default_system

# 1 - E[log2(1 + e^-l)], l ~ N(2, 4), by scipy quad over [mu-12s, mu+12s]
OMEGA_2 = 0.485944154132935


def omega_quad(sigma):
    mu = sigma * sigma / 2
    f = lambda l: (math.exp(-(l - mu) ** 2 / (2 * sigma * sigma)) / math.sqrt(2 * math.pi) / sigma
                   * np.logaddexp(0, -l) / math.log(2))
    return 1 - quad(f, mu - 12 * sigma, mu + 12 * sigma, epsabs=1e-13, limit=200)[0]


def test_omega_examples():
    assert omega(0.0) == 0.0
    assert omega(100.0) == pytest.approx(1.0, abs=1e-9)
    assert omega(math.inf) == 1.0
    assert omega(2.0) == pytest.approx(OMEGA_2, abs=1e-8)
    with pytest.raises(ValueError):
        omega(-1.0)


@pytest.mark.parametrize("sigma", [0.1, 0.7, 1.5, 3.0, 6.0, 12.0])
def test_omega_against_quadrature_oracle(sigma):
    assert omega(sigma) == pytest.approx(omega_quad(sigma), abs=1e-8)


def test_omega_inv_examples():
    assert omega_inv(0.0) == 0.0
    assert omega_inv(OMEGA_2) == pytest.approx(2.0, abs=1e-5)
    assert omega_inv(1.0) == SIGMA_MAX
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            omega_inv(bad)


@given(st.floats(0.0, 20.0))
def test_omega_round_trip(sigma):
    # above sigma ~ 14 the float64 value of omega no longer pins sigma to 1e-5
    assert omega_inv(omega(sigma)) == pytest.approx(sigma, abs=1e-5)


@given(st.floats(0.0, 14.0))
def test_omega_round_trip_resolvable_range(sigma):
    assert omega_inv(omega(sigma)) == pytest.approx(sigma, abs=1e-5)


@pytest.mark.parametrize("sigma", [12.0, 16.0, 20.0])
def test_omega_loss_keeps_relative_accuracy(sigma):
    mu = sigma * sigma / 2
    f = lambda l: (math.exp(-(l - mu) ** 2 / (2 * sigma * sigma)) / math.sqrt(2 * math.pi) / sigma
                   * np.logaddexp(0, -l) / math.log(2))
    ref = quad(f, mu - 12 * sigma, mu + 12 * sigma, points=[0.0], epsabs=0, epsrel=1e-12, limit=400)[0]
    assert omega_loss(sigma) == pytest.approx(ref, rel=1e-6)


@given(st.floats(0.001, 0.999))
def test_omega_inv_round_trip(i):
    assert omega(omega_inv(i)) == pytest.approx(i, abs=1e-6)


def test_omega_strictly_increasing():
    grid = np.linspace(0.0, 20.0, 81)
    vals = [omega(s) for s in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(b > a for a, b, s in zip(vals, vals[1:], grid[1:]) if s <= 16.0)
    losses = [omega_loss(s) for s in grid[1:]]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_llr_means():
    means = llr_means_from_ie([[0.0, 1.0], [OMEGA_2, OMEGA_2]])
    assert means[0, 0] == 0.0
    assert means[0, 1] == pytest.approx(SIGMA_MAX ** 2 / 2)
    assert means[1, 0] == pytest.approx(2.0, abs=1e-4)


def test_user_capacity_and_chain_sum():
    assert estimate_user_capacity(np.zeros((2, 2)), 1) == 0.0
    assert estimate_user_capacity(np.ones((2, 2)), 2) == 2.0
    ie = [np.array([[0.1, 0.2], [0.3, 0.4]]), np.array([[0.5, 0.6], [0.7, 0.8]])]
    assert chain_sum(ie, [2, 1]) == pytest.approx(0.7 + 1.1)


def test_mutual_info_from_consistent_llrs():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, 200_000)
    llr = (1 - 2 * bits) * (2.0 + 2.0 * rng.standard_normal(bits.size))
    assert mutual_info_from_llrs(llr, bits) == pytest.approx(OMEGA_2, abs=0.01)


SYSTEM = default_system(pdma_2x3())


def test_estimate_ie_limits():
    clean = estimate_ie(SYSTEM, 60.0, [0, 1, 1], 1000, seed=1)
    assert clean[0] == pytest.approx([1.0, 1.0], abs=1e-6)
    np.testing.assert_array_equal(clean[1:], 1.0)
    dark = estimate_ie(SYSTEM, -40.0, [0, 0, 0], 20_000, seed=1)
    assert dark.max() < 0.02
    assert ((dark >= 0) & (dark <= 1)).all()


def test_estimate_ie_refusals():
    with pytest.raises(ValueError):
        estimate_ie(SYSTEM, 0.0, [0, 0, 0], 99)
    with pytest.raises(ValueError):
        estimate_ie(SYSTEM, 0.0, [[0, 1], [0, 0], [0, 0]], 1000)
    with pytest.raises(ValueError):
        estimate_ie(SYSTEM, 0.0, [0, 2, 0], 1000)


def test_estimate_ie_reproducible():
    a = estimate_ie(SYSTEM, 2.0, [0, 0, 1], 12_000, seed=5)
    b = estimate_ie(SYSTEM, 2.0, [0, 0, 1], 12_000, seed=5)
    np.testing.assert_array_equal(a, b)
    c = estimate_ie(SYSTEM, 2.0, [0, 0, 1], 12_000, seed=6)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("snr_db", [0.0, 4.0])
def test_cancellation_never_reduces_user_information(snr_db):
    free = estimate_ie(SYSTEM, snr_db, [0, 0, 0], 20_000, seed=2)
    helped = estimate_ie(SYSTEM, snr_db, [0, 1, 1], 20_000, seed=2)
    assert estimate_user_capacity(free, 1) < estimate_user_capacity(helped, 1)
