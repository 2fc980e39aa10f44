"""Rate arithmetic tests: capacities, both SINR chains, the supported-user
bound, power splitting, and schedule evaluation, pinned to hand-solved
values and brute-force recomputation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from satsched import (
    ConstraintError,
    CsiRealization,
    ParameterError,
    Schedule,
    allocate_relay_power,
    awgn_capacity,
    evaluate_schedule,
    max_supported_users,
    relay_sinr_chain,
    satellite_sinr_chain,
    sinr_threshold,
    throughput_power_split,
)

snr_arrays = hnp.arrays(
    dtype=float,
    shape=st.integers(1, 8),
    elements=st.floats(0.0, 500.0, allow_nan=False),
)


def test_sinr_threshold_values():
    assert sinr_threshold(1.0) == pytest.approx(1.0, rel=1e-15)
    assert sinr_threshold(2.0) == pytest.approx(3.0, rel=1e-15)
    assert sinr_threshold(0.5) == pytest.approx(math.sqrt(2.0) - 1.0, rel=1e-14)


def test_awgn_capacity_values():
    assert awgn_capacity(0.0) == 0.0
    assert awgn_capacity(1.0) == pytest.approx(1.0, rel=1e-15)
    assert awgn_capacity(3.0) == pytest.approx(2.0, rel=1e-15)
    assert awgn_capacity(math.inf) == math.inf
    with pytest.raises(ParameterError):
        awgn_capacity(-0.5)


@given(st.floats(1e-6, 40.0))
@settings(max_examples=50, deadline=None)
def test_capacity_threshold_roundtrip(r):
    assert awgn_capacity(sinr_threshold(r)) == pytest.approx(r, rel=1e-12)


def test_relay_chain_hand_values():
    assert np.allclose(relay_sinr_chain(np.array([10.0, 4.0])), [2.0, 4.0])
    assert np.allclose(relay_sinr_chain(np.array([8.0, 4.0, 1.0])),
                       [8.0 / 6.0, 2.0, 1.0])
    assert np.allclose(relay_sinr_chain(np.array([7.0])), [7.0])
    with pytest.raises(ParameterError):
        relay_sinr_chain(np.array([]))
    with pytest.raises(ParameterError):
        relay_sinr_chain(np.array([1.0, -2.0]))


@given(snr_arrays)
@settings(max_examples=100, deadline=None)
def test_relay_chain_telescopes(snrs):
    gammas = relay_sinr_chain(snrs)
    lhs = np.prod(1.0 + gammas)
    assert lhs == pytest.approx(1.0 + snrs.sum(), rel=1e-9)
    # matches the plain-loop oracle slot by slot
    assert np.allclose(gammas, oracles.chain_sinrs(snrs), rtol=1e-12, atol=1e-12)


def test_satellite_chain_hand_values():
    assert np.allclose(satellite_sinr_chain(np.array([1.0]), 100.0), [100.0])
    out = satellite_sinr_chain(np.array([0.6, 0.4]), 10.0)
    assert np.allclose(out, [1.2, 4.0])
    out = satellite_sinr_chain(np.array([0.5, 0.5]), math.inf)
    assert out[0] == pytest.approx(1.0, rel=1e-15)
    assert math.isinf(out[1])
    out = satellite_sinr_chain(np.array([0.9, 0.1]), 10.0)
    assert np.allclose(out, [4.5, 1.0])
    with pytest.raises(ConstraintError):
        satellite_sinr_chain(np.array([0.8, 0.4]), 10.0)


@given(st.integers(1, 6), st.floats(0.5, 200.0))
@settings(max_examples=60, deadline=None)
def test_satellite_chain_telescopes_at_full_power(k, sat_snr):
    # equal full-budget split: sum of slot capacities equals C(S_DR)
    alphas = np.full(k, 1.0 / k)
    gammas = satellite_sinr_chain(alphas, sat_snr)
    total = sum(awgn_capacity(float(g)) for g in gammas)
    assert total == pytest.approx(awgn_capacity(sat_snr), rel=1e-9)


def test_max_supported_users_values():
    assert max_supported_users(1000.0, 1.2, 40) == 8
    assert max_supported_users(1.0, 1.0, 10) == 1
    assert max_supported_users(0.5, 1.0, 10) == 0
    assert max_supported_users(7.0, 1.0, 10) == 3  # 2**3 - 1 == 7 exactly
    assert max_supported_users(6.999, 1.0, 10) == 2
    assert max_supported_users(math.inf, 0.1, 25) == 25
    assert max_supported_users(1000.0, 1.2, 3) == 3
    with pytest.raises(ParameterError):
        max_supported_users(10.0, 0.0, 5)


def test_allocate_relay_power_hand_values():
    assert np.allclose(allocate_relay_power(1, 1.0, 10.0), [1.0])
    alphas = allocate_relay_power(2, 1.0, 10.0)
    assert np.allclose(alphas, [0.9, 0.1])
    assert np.allclose(satellite_sinr_chain(alphas, 10.0), [4.5, 1.0])
    assert allocate_relay_power(4, 1.0, 10.0) is None  # 2**4 - 1 > 10


@given(st.integers(1, 12), st.floats(0.05, 2.5), st.floats(0.5, 1e6))
@settings(max_examples=150, deadline=None)
def test_allocate_feasible_iff_supported(k, r, sat_snr):
    alphas = allocate_relay_power(k, r, sat_snr)
    supported = max_supported_users(sat_snr, r, k) >= k
    assert (alphas is not None) == supported
    if alphas is not None:
        gamma_t = sinr_threshold(r)
        assert alphas.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(alphas > 0)
        gammas = satellite_sinr_chain(alphas, sat_snr)
        assert np.all(gammas >= gamma_t * (1.0 - 1e-9))
        # minimal split pins every position after the first to gamma_t
        assert np.allclose(gammas[1:], gamma_t, rtol=1e-9)


def test_allocate_with_infinite_satellite():
    alphas = allocate_relay_power(3, 1.0, math.inf)
    gammas = satellite_sinr_chain(alphas, math.inf)
    assert np.all(gammas >= 1.0 - 1e-12)


def test_throughput_split_passes_relay_rates():
    snrs = np.array([10.0, 4.0])
    alphas = throughput_power_split(snrs, 1.0, float(2**60))
    gammas = satellite_sinr_chain(np.asarray(alphas), float(2**60))
    relay = relay_sinr_chain(snrs)
    assert np.all(gammas >= relay - 1e-9)
    assert sum(alphas) == pytest.approx(1.0, abs=1e-9)


def test_throughput_split_satellite_limited():
    # relay sum rate exceeds C(10): targets shrink toward r_target but the
    # per-slot satellite rates still sum to the cut-set capacity
    snrs = np.array([30.0, 8.0])
    alphas = throughput_power_split(snrs, 1.0, 10.0)
    gammas = satellite_sinr_chain(np.asarray(alphas), 10.0)
    rates = [awgn_capacity(float(g)) for g in gammas]
    assert all(r >= 1.0 - 1e-9 for r in rates)
    assert sum(rates) == pytest.approx(awgn_capacity(10.0), rel=1e-9)
    assert throughput_power_split(snrs, 2.0, 10.0) is None  # 2**4-1 > 10


def test_schedule_validation():
    Schedule(users=(0, 1), alphas=(0.6, 0.4))
    with pytest.raises(ConstraintError):
        Schedule(users=(0, 0), alphas=(0.5, 0.5))
    with pytest.raises(ConstraintError):
        Schedule(users=(0, 1), alphas=(0.9, 0.2))
    with pytest.raises(ConstraintError):
        Schedule(users=(0, 1), alphas=(0.5,))


def test_evaluate_schedule_hand_example():
    csi = CsiRealization(np.array([10.0, 4.0]), float(2**60))
    alphas = throughput_power_split(csi.user_snrs, 1.0, csi.sat_snr)
    report = evaluate_schedule(Schedule(users=(0, 1), alphas=tuple(alphas)),
                               csi, 1.0)
    assert report.per_user_rates == pytest.approx(
        (math.log2(3.0), math.log2(5.0)), rel=1e-12)
    assert report.sum_rate == pytest.approx(math.log2(15.0), rel=1e-12)
    assert report.binding_hop == "terrestrial"
    assert report.meets_target
    assert report.sum_rate == pytest.approx(sum(report.per_user_rates), rel=1e-9)


def test_evaluate_schedule_satellite_bound():
    csi = CsiRealization(np.array([50.0]), 3.0)
    report = evaluate_schedule(Schedule(users=(0,), alphas=(1.0,)), csi, 1.0)
    assert report.sum_rate == pytest.approx(2.0, rel=1e-12)
    assert report.binding_hop == "satellite"
    assert report.per_user_rates[0] == pytest.approx(2.0, rel=1e-12)


def test_evaluate_schedule_empty_and_errors():
    csi = CsiRealization(np.array([5.0, 1.0]), 10.0)
    report = evaluate_schedule(Schedule(users=(), alphas=()), csi, 1.0)
    assert report.sum_rate == 0.0
    assert not report.meets_target
    with pytest.raises(ParameterError):
        evaluate_schedule(Schedule(users=(0, 1), alphas=None), csi, 1.0)
    with pytest.raises(ParameterError):
        evaluate_schedule(Schedule(users=(0, 5), alphas=(0.5, 0.5)), csi, 1.0)


def test_evaluate_schedule_detects_missed_target():
    csi = CsiRealization(np.array([10.0, 4.0, 1.5, 0.9]), float(2**60))
    # users 2,3 cannot both clear gamma_t = 1 at the relay
    alphas = throughput_power_split(csi.user_snrs[[2, 3]], 1.0, csi.sat_snr)
    report = evaluate_schedule(Schedule(users=(2, 3), alphas=tuple(alphas)),
                               csi, 1.0)
    assert not report.meets_target


def test_evaluate_schedule_order_sensitive():
    csi = CsiRealization(np.array([10.0, 4.0]), float(2**60))
    fwd = evaluate_schedule(
        Schedule(users=(0, 1),
                 alphas=tuple(throughput_power_split(csi.user_snrs, 1.0,
                                                     csi.sat_snr))),
        csi, 1.0)
    rev_alphas = throughput_power_split(csi.user_snrs[[1, 0]], 1.0, csi.sat_snr)
    rev = evaluate_schedule(Schedule(users=(1, 0), alphas=tuple(rev_alphas)),
                            csi, 1.0)
    # decode order changes per-user rates exactly as the chain oracle says
    expect = [awgn_capacity(g) for g in oracles.chain_sinrs([4.0, 10.0])]
    assert rev.per_user_rates == pytest.approx(tuple(expect), rel=1e-12)
    assert fwd.per_user_rates != rev.per_user_rates
    # but not the schedule throughput, which only sees the SNR sum
    assert rev.sum_rate == pytest.approx(fwd.sum_rate, rel=1e-12)
