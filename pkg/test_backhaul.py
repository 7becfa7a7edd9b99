import numpy as np
import pytest

from backhaul import (
    BackhaulInfeasibleError,
    backhaul_load,
    bs_rates,
    rate_requirements,
    received_powers,
    sinr_thresholds,
    solve_power_control,
)
from network import BackhaulAllocation, BeamformingSolution, backhaul_sinr


@pytest.fixture
def two_wireless(make_config, make_channel):
    cfg = make_config(num_bs=2, num_wireline=0, num_users=1, backhaul_noise_power=0.01)
    ch = make_channel([[1.0], [1.0]], backhaul=[1.0, 1.0])
    return cfg, ch


def _solution(cfg, weights, active):
    return BeamformingSolution.create(np.asarray(weights, dtype=complex), active, np.zeros(cfg.num_bs),
                                      np.ones(cfg.num_bs), cfg)


def test_rate_single_user(single_wireless):
    cfg, ch = single_wireless
    sol = _solution(cfg, [[0.01]], [0])
    assert bs_rates(sol, ch, cfg) == pytest.approx({0: 1.0})


def test_rate_of_idle_bs(single_wireless):
    cfg, ch = single_wireless
    sol = _solution(cfg, [[0.0]], [0])
    assert bs_rates(sol, ch, cfg) == pytest.approx({0: 0.0})


def test_rate_two_users(make_config, make_channel):
    cfg = make_config(num_bs=1, num_wireline=0, num_users=2)
    ch = make_channel([[1.0, 1.0]], backhaul=[1.0])
    sol = _solution(cfg, [[np.sqrt(3e-4), 0.0]], [0])
    assert bs_rates(sol, ch, cfg)[0] == pytest.approx(2.0)


def test_rates_skip_wireline_bs(make_config, make_channel):
    cfg = make_config(num_bs=2, num_wireline=1, num_users=1)
    ch = make_channel([[1.0], [1.0]], backhaul=[1.0])
    sol = _solution(cfg, [[0.01], [0.01]], [0, 1])
    assert set(bs_rates(sol, ch, cfg)) == {1}
    req = rate_requirements(sol, ch, cfg)
    assert req.bs_indices == (1,)
    assert req.thresholds[0] == pytest.approx(2.0 ** req.rates[0] - 1.0)


def test_sinr_thresholds():
    assert sinr_thresholds({0: 1.0, 1: 0.0, 2: 2.0}) == pytest.approx({0: 1.0, 1: 0.0, 2: 3.0})
    with pytest.raises(ValueError):
        sinr_thresholds({0: -0.5})


def test_power_control_single(make_config, make_channel):
    cfg = make_config(num_bs=1, num_wireline=0, backhaul_noise_power=0.01)
    ch = make_channel([[1.0]], backhaul=[1.0])
    alloc = solve_power_control({0: 1.0}, ch, cfg)
    assert alloc.tx_powers[0] == pytest.approx(0.01)
    assert alloc.received_powers[0] == pytest.approx(0.02)


def test_power_control_two_symmetric(two_wireless):
    cfg, ch = two_wireless
    alloc = solve_power_control({0: 0.5, 1: 0.5}, ch, cfg)
    # P = 0.5 (P + 0.01)
    np.testing.assert_allclose(alloc.tx_powers, [0.01, 0.01], rtol=1e-9)
    np.testing.assert_allclose(alloc.received_powers, [0.03, 0.03], rtol=1e-9)


def test_power_control_boundary_is_infeasible(two_wireless):
    cfg, ch = two_wireless
    with pytest.raises(BackhaulInfeasibleError) as info:
        solve_power_control({0: 1.0, 1: 1.0}, ch, cfg)
    assert info.value.load == pytest.approx(1.0)


def test_power_control_zero_threshold_rows(two_wireless):
    cfg, ch = two_wireless
    alloc = solve_power_control({0: 0.0, 1: 1.0}, ch, cfg)
    np.testing.assert_allclose(alloc.tx_powers, [0.0, 0.01], rtol=1e-12)
    assert solve_power_control({}, ch, cfg).bs_indices == ()


def test_power_control_input_checks(make_config, make_channel):
    cfg = make_config(num_bs=2, num_wireline=1)
    ch = make_channel([[1.0], [1.0]], backhaul=[1.0])
    with pytest.raises(ValueError):
        solve_power_control({0: 1.0}, ch, cfg)
    with pytest.raises(ValueError):
        solve_power_control({1: -1.0}, ch, cfg)
    with pytest.raises(ValueError):
        solve_power_control({1: 1.0}, ch, cfg, method="newton")


def test_received_powers(two_wireless):
    cfg, ch = two_wireless
    alloc = BackhaulAllocation(bs_indices=(0, 1), tx_powers=[0.02, 0.02], thresholds=[0.5, 0.5],
                               received_powers=[0.0, 0.0])
    assert received_powers(alloc, ch, cfg) == pytest.approx({0: 0.05, 1: 0.05})
    idle = BackhaulAllocation(bs_indices=(0,), tx_powers=[0.0], thresholds=[0.0], received_powers=[0.0])
    assert received_powers(idle, ch, cfg) == pytest.approx({0: 0.01})


def _random_instance(rng, make_config, make_channel, n):
    cfg = make_config(num_bs=n, num_wireline=0, num_users=1, backhaul_noise_power=1e-4)
    gains = 0.042 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    ch = make_channel(np.ones((n, 1)), backhaul=gains)
    return cfg, ch


def test_tight_at_optimum_and_minimal(make_config, make_channel):
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        cfg, ch = _random_instance(rng, make_config, make_channel, n)
        target_load = rng.uniform(0.05, 0.9)
        share = rng.dirichlet(np.ones(n)) * target_load
        gamma = {l: float(s / (1 - s)) for l, s in enumerate(share)}
        alloc = solve_power_control(gamma, ch, cfg)
        achieved = backhaul_sinr(alloc, ch, cfg)
        np.testing.assert_allclose(achieved, alloc.thresholds, rtol=1e-9)
        for l in range(n):
            lowered = alloc.tx_powers.copy()
            lowered[l] -= 1e-6 * max(alloc.tx_powers[l], 1e-12)
            reduced = BackhaulAllocation(bs_indices=alloc.bs_indices, tx_powers=np.maximum(lowered, 0.0),
                                         thresholds=alloc.thresholds, received_powers=alloc.received_powers)
            assert np.any(backhaul_sinr(reduced, ch, cfg) < alloc.thresholds * (1 - 1e-12))


def test_feasibility_criterion_matches_linear_system(make_config, make_channel):
    rng = np.random.default_rng(8)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        cfg, ch = _random_instance(rng, make_config, make_channel, n)
        gamma = {l: float(g) for l, g in enumerate(rng.exponential(0.6, size=n))}
        load = backhaul_load(gamma)
        if abs(load - 1.0) < 1e-6:
            continue
        values = np.array(list(gamma.values()))
        system = np.eye(n) - np.diag(values) @ (np.ones((n, n)) - np.eye(n))
        noise = np.array([1e-4 / abs(h) ** 2 for h in ch.backhaul])
        direct = np.linalg.solve(system, values * noise)
        solvable = bool(np.all(direct >= -1e-15))
        try:
            solve_power_control(gamma, ch, cfg)
            flagged = False
        except BackhaulInfeasibleError:
            flagged = True
        assert flagged == (load >= 1.0)
        assert solvable == (load < 1.0)


def test_lp_cross_check(make_config, make_channel):
    rng = np.random.default_rng(13)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        cfg, ch = _random_instance(rng, make_config, make_channel, n)
        share = rng.dirichlet(np.ones(n)) * rng.uniform(0.1, 0.8)
        gamma = {l: float(s / (1 - s)) for l, s in enumerate(share)}
        tight = solve_power_control(gamma, ch, cfg)
        lp = solve_power_control(gamma, ch, cfg, method="lp")
        np.testing.assert_allclose(lp.tx_powers, tight.tx_powers, rtol=1e-4, atol=1e-9)
    cfg, ch = _random_instance(rng, make_config, make_channel, 2)
    with pytest.raises(BackhaulInfeasibleError):
        solve_power_control({0: 3.0, 1: 3.0}, ch, cfg, method="lp")


def test_monotone_in_thresholds(two_wireless):
    cfg, ch = two_wireless
    base = solve_power_control({0: 0.3, 1: 0.4}, ch, cfg)
    raised = solve_power_control({0: 0.5, 1: 0.4}, ch, cfg)
    assert np.all(raised.tx_powers >= base.tx_powers)
