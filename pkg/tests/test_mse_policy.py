import numpy as np
import pytest

from aircomp.core import DomainError, SystemInstance, mse
from aircomp.mse_policy import (
    min_mse_batch,
    power_allocation_profile,
    reformulated_solution,
    solve_min_mse,
)
from aircomp.oracle import pg_min_mse

from conftest import random_instance


def test_unit_channels_hand_values(unit10):
    rep = solve_min_mse(unit10, 10.0)
    assert rep.design.rx_gain == pytest.approx(10 / 11, rel=1e-12)
    np.testing.assert_allclose(rep.design.tx_gains, 1.0, rtol=1e-12)
    assert rep.mse_star == pytest.approx(10 / 11, rel=1e-12)


def test_unit_channels_match_oracle(unit10):
    assert pg_min_mse(unit10, 10.0).objective == pytest.approx(10 / 11, rel=1e-6)


def test_single_sensor():
    inst = SystemInstance.from_gains([1.0], 1.0)
    assert solve_min_mse(inst, 10.0).mse_star == pytest.approx(1 / 11, rel=1e-12)
    assert pg_min_mse(inst, 10.0).objective == pytest.approx(1 / 11, rel=1e-6)


def test_huge_budget(unit10):
    rep = solve_min_mse(unit10, 1e9)
    assert rep.mse_star < 1e-6
    assert rep.mse_star == pytest.approx(10 / (1 + 1e9), rel=1e-9)
    assert np.all(np.isfinite(rep.design.tx_gains))


def test_extreme_budget_stays_finite():
    inst = SystemInstance.from_gains([0.1, 1.0, 2.0], 0.1)
    rep = solve_min_mse(inst, 1e12)
    assert rep.power_used == pytest.approx(1e12, rel=1e-9)
    assert np.isfinite(rep.design.rx_gain) and rep.design.rx_gain > 0


@pytest.mark.parametrize(
    "h, P, expected",
    [([1.0], 10.0, [10 / 11]), ([1.0, 2.0], 1.0, [0.5, 0.4])],
)
def test_reformulated_solution(h, P, expected):
    inst = SystemInstance.from_gains(h, 1.0)
    np.testing.assert_allclose(reformulated_solution(inst, P), expected, rtol=1e-12)


def test_reformulated_noiseless_limit():
    inst = SystemInstance.from_gains([0.5, 1.0, 3.0], 1.0)
    np.testing.assert_allclose(reformulated_solution(inst, 1e14), [2.0, 1.0, 1 / 3], rtol=1e-12)


def test_reformulated_is_stationary_point():
    # finite-difference gradient of (h bhat - 1)^2 + (sigma^2/P) bhat^2 vanishes
    inst = SystemInstance.from_gains([0.3, 1.1, 1.9], 0.7)
    P = 3.0
    bhat = reformulated_solution(inst, P)
    f = lambda x: (inst.h * x - 1.0) ** 2 + inst.noise_variance / P * x * x
    d = 1e-6
    np.testing.assert_allclose((f(bhat + d) - f(bhat - d)) / (2 * d), 0.0, atol=1e-8)


def test_report_invariants():
    rng = np.random.default_rng(11)
    for _ in range(50):
        inst = random_instance(rng, k_max=12)
        P = rng.uniform(0.1, 100)
        rep = solve_min_mse(inst, P)
        assert rep.power_used == pytest.approx(P, rel=1e-9)
        assert rep.mse_star == pytest.approx(mse(inst, rep.design), rel=1e-9)
        np.testing.assert_allclose(rep.intermediate, rep.design.rx_gain * rep.design.tx_gains, rtol=1e-12)
        assert 0 < rep.mse_star < inst.num_sensors


def test_profile_unit_channels(unit10):
    np.testing.assert_allclose(power_allocation_profile(unit10, 10.0), 1.0, rtol=1e-12)


def test_profile_sums_to_budget(s2):
    assert power_allocation_profile(s2, 7.5).sum() == pytest.approx(7.5, rel=1e-12)


def test_profile_peaks_at_matched_channel():
    # with sigma/sqrt(P) = 0.5 the sensor whose h equals 0.5 gets the most power
    sigma2, P = 1.0, 4.0
    peak = np.sqrt(sigma2 / P)
    inst = SystemInstance.from_gains([0.1, 0.3, peak, 0.9, 2.0], sigma2)
    assert np.argmax(power_allocation_profile(inst, P)) == 2


def test_batch_matches_scalar():
    rng = np.random.default_rng(3)
    h = rng.uniform(0.1, 2.0, (20, 6))
    g, b, m = min_mse_batch(h, 0.8, 5.0)
    for i in range(20):
        rep = solve_min_mse(SystemInstance.from_gains(h[i], 0.8), 5.0)
        assert g[i] == pytest.approx(rep.design.rx_gain, rel=1e-14)
        assert m[i] == pytest.approx(rep.mse_star, rel=1e-14)


@pytest.mark.parametrize("P", [0.0, -1.0, np.inf, np.nan])
def test_invalid_budget(unit10, P):
    with pytest.raises(DomainError):
        solve_min_mse(unit10, P)


def test_mse_decreases_with_budget():
    rng = np.random.default_rng(5)
    for _ in range(200):
        inst = random_instance(rng)
        P = rng.uniform(0.5, 50)
        assert solve_min_mse(inst, 2 * P).mse_star < solve_min_mse(inst, P).mse_star


def test_scalings_monotone_when_every_sensor_has_unit_snr():
    # d ln b_k^2 / dP >= (h_min^2 - sigma^2/P) / (P (sigma^2/P + h_min^2)), and each
    # term of g^2 falls once P h_k^2 > sigma^2, so P h_min^2 >= sigma^2 suffices
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 200:
        inst = random_instance(rng)
        P = rng.uniform(0.5, 50)
        if P * inst.h.min() ** 2 < inst.noise_variance:
            continue
        a, b = solve_min_mse(inst, P), solve_min_mse(inst, 2 * P)
        assert b.design.rx_gain < a.design.rx_gain
        assert np.all(b.design.tx_gains > a.design.tx_gains)
        checked += 1


def test_rx_gain_can_grow_with_budget_when_a_sensor_is_weak():
    # a sensor far below unit SNR pulls g* up as the budget grows
    inst = SystemInstance.from_gains([0.1, 2.0], 1.0)
    a, b = solve_min_mse(inst, 5.0), solve_min_mse(inst, 10.0)
    assert b.design.rx_gain > a.design.rx_gain
    assert b.design.tx_gains[1] < a.design.tx_gains[1]
