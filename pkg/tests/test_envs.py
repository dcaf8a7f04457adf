import math

import numpy as np
import pytest

from platoonrl.envs import (PrbsSignal, TrainingEnvConfig, TwoVehicleEnv,
                            integrate_action, mean_error, reward_conventional,
                            reward_integral, saturate)


def test_saturate():
    assert saturate(5.0, -3.0, 3.0) == 3.0
    assert saturate(-4.0, -3.0, 3.0) == -3.0
    assert saturate(0.5, -3.0, 3.0) == 0.5
    with pytest.raises(ValueError):
        saturate(0.0, 3.0, -3.0)


def test_integrate_action():
    assert integrate_action(1.0, 0.0, 0.05, -3.0, 3.0) == 1.0
    assert integrate_action(2.9, 30.0, 0.05, -3.0, 3.0) == 3.0
    assert integrate_action(0.0, -30.0, 0.05, -3.0, 3.0) == -1.5
    with pytest.raises(ValueError):
        integrate_action(0.0, 1.0, 0.0, -3.0, 3.0)


def test_integrate_action_antiwindup():
    # pinned at the bound, outward increments do not push the command past it
    u = 3.0
    for _ in range(10):
        u = integrate_action(u, 30.0, 0.05, -3.0, 3.0)
        assert u == 3.0
    u = integrate_action(u, -30.0, 0.05, -3.0, 3.0)
    assert u == pytest.approx(1.5)


def test_mean_error_cases():
    assert mean_error(10.0, [(7.0, 5.0), (3.0, 10.0)]) == pytest.approx(12.5)
    assert mean_error(2.0, [(7.0, 5.0)]) == pytest.approx(0.0)
    single = mean_error(1.0, [(4.0, 2.0)])
    assert mean_error(1.0, [(4.0, 2.0), (4.0, 2.0)]) == pytest.approx(single)
    with pytest.raises(ValueError):
        mean_error(0.0, [])


def test_reward_conventional_values():
    assert reward_conventional(np.zeros(3), 0.0) == pytest.approx(1.0)
    assert reward_conventional(np.array([1.0, 0, 0]), 0.0) == pytest.approx(
        math.exp(-1.0))
    assert reward_conventional(np.zeros(3), 1.0, beta=0.2) == pytest.approx(
        math.exp(-0.2))
    # two identical neighbor errors double the quadratic term
    e = np.array([0.5, -0.2, 0.1])
    both = reward_conventional(np.vstack([e, e]), 0.0)
    assert both == pytest.approx(reward_conventional(e, 0.0) ** 2)
    with pytest.raises(ValueError):
        reward_conventional(np.zeros(3), 0.0, gamma_diag=(1.0, -1.0, 1.0))


def test_reward_integral_values():
    assert reward_integral(0.0, 0.0) == pytest.approx(1.0)
    assert reward_integral(1.0, 0.0) == pytest.approx(math.exp(-1.0))
    assert reward_integral(0.0, 3.0, beta=0.2) == pytest.approx(math.exp(-1.8))
    assert reward_integral(0.0, 3.0, beta=0.2) == pytest.approx(0.1653, abs=1e-4)
    with pytest.raises(ValueError):
        reward_integral(0.0, 0.0, kappa=-1.0)


def test_rewards_in_unit_interval_peak_at_zero():
    rng = np.random.default_rng(4)
    for _ in range(200):
        e = rng.normal(scale=3.0, size=3)
        u = rng.uniform(-3, 3)
        rc = reward_conventional(e, u)
        ri = reward_integral(float(e.sum()), u)
        assert 0.0 < rc <= 1.0 and 0.0 < ri <= 1.0
        if np.any(e != 0.0) or u != 0.0:
            assert rc < 1.0


def test_prbs_levels_and_switching():
    sig = PrbsSignal(amplitude=1.0, hold_steps=50, register=0x5A)
    values = np.array([sig.value(k) for k in range(2000)])
    assert set(np.unique(values)) == {-1.0, 1.0}
    switches = np.nonzero(np.diff(values))[0] + 1
    assert np.all(switches % 50 == 0)
    # maximal-length register visits both levels
    assert (values == 1.0).any() and (values == -1.0).any()


def test_prbs_deterministic_and_validated():
    a = [PrbsSignal(2.0, 10, 7).value(k) for k in range(500)]
    b = [PrbsSignal(2.0, 10, 7).value(k) for k in range(500)]
    assert a == b
    with pytest.raises(ValueError):
        PrbsSignal(1.0, 10, 0)
    with pytest.raises(ValueError):
        PrbsSignal(1.0, 0, 5)


def test_env_reset_determinism():
    cfg = TrainingEnvConfig()
    a = TwoVehicleEnv(cfg, 42).reset()
    b = TwoVehicleEnv(cfg, 42).reset()
    assert np.array_equal(a, b)
    c = TwoVehicleEnv(cfg, 43).reset()
    assert not np.array_equal(a, c)


def test_env_reset_degenerate_ranges():
    cfg = TrainingEnvConfig(spacing_error_range=0.0, speed_error_range=0.0,
                            prbs_amplitude=0.0)
    env = TwoVehicleEnv(cfg, 0)
    obs = env.reset()
    assert obs.shape == (1,)
    assert obs[0] == pytest.approx(0.0, abs=1e-12)


def test_env_reset_spacing_uniformity():
    from scipy import stats

    cfg = TrainingEnvConfig(prbs_amplitude=0.0, speed_error_range=0.0)
    env = TwoVehicleEnv(cfg, 7)
    samples = np.array([env.reset()[0] for _ in range(1000)])
    # with speed and accel errors off, the observation equals the spacing error
    assert stats.kstest(samples, "uniform", args=(-5.0, 10.0)).pvalue > 0.01


def test_env_step_zero_increment_keeps_command():
    cfg = TrainingEnvConfig(action_mode="incremental")
    env = TwoVehicleEnv(cfg, 1)
    env.reset()
    _, _, _, info1 = env.step(np.array([1.0]))   # push the command up
    _, _, _, info2 = env.step(np.array([0.0]))   # zero increment holds it
    assert info2["u"] == pytest.approx(info1["u"])


def test_env_step_equilibrium_reward_one():
    cfg = TrainingEnvConfig(spacing_error_range=0.0, speed_error_range=0.0,
                            prbs_amplitude=0.0)
    env = TwoVehicleEnv(cfg, 0)
    obs = env.reset()
    for _ in range(5):
        obs, reward, done, info = env.step(np.array([0.0]))
        assert reward == pytest.approx(1.0, abs=1e-12)
        assert obs[0] == pytest.approx(0.0, abs=1e-10)
        assert info["u"] == 0.0


def test_env_step_first_order_lag_response():
    # hold the maximum direct command from rest: the follower acceleration
    # follows the analytic lag response toward 3
    cfg = TrainingEnvConfig(action_mode="direct", reward_kind="conventional",
                            spacing_error_range=0.0, speed_error_range=0.0,
                            prbs_amplitude=0.0)
    env = TwoVehicleEnv(cfg, 0)
    env.reset()
    obs, _, _, _ = env.step(np.array([1.0]))
    expected = 3.0 * (1.0 - math.exp(-cfg.dt / cfg.powertrain_constant))
    # third component is the acceleration error to the (constant speed)
    # leader; the tolerance covers the integrator truncation
    assert obs[2] == pytest.approx(expected, abs=1e-5)


def test_env_episode_length_and_done():
    cfg = TrainingEnvConfig(steps=10)
    env = TwoVehicleEnv(cfg, 0)
    env.reset()
    for k in range(10):
        _, _, done, _ = env.step(np.array([0.0]))
        assert done == (k == 9)


def test_env_config_validation():
    with pytest.raises(ValueError):
        TrainingEnvConfig(action_mode="bang")
    with pytest.raises(ValueError):
        TrainingEnvConfig(reward_kind="sparse")
    with pytest.raises(ValueError):
        TrainingEnvConfig(dt=0.0)
