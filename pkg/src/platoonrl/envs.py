"""Reward functions, action scaling, leader excitation, and the two-vehicle
training environment on the linearized plant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import LinearState, step_linear, step_rk4

ACTION_MODES = ("direct", "incremental")
REWARD_KINDS = ("conventional", "integral")


def saturate(u: float, u_min: float, u_max: float) -> float:
    """Clamp the command to the actuator bounds."""
    if u_min >= u_max:
        raise ValueError("u_min must be below u_max")
    return min(max(u, u_min), u_max)


def integrate_action(u_prev: float, du: float, dt: float,
                     u_min: float, u_max: float) -> float:
    """Accumulate an incremental command, then saturate."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return saturate(u_prev + du * dt, u_min, u_max)


def mean_error(own_output: float, neighbors) -> float:
    """Deviation of the own combined output from the gap-shifted average of
    the neighbors' outputs. `neighbors` is a list of (output, gap) pairs."""
    if not neighbors:
        raise ValueError("mean_error needs at least one neighbor")
    avg = sum(y - d for y, d in neighbors) / len(neighbors)
    return own_output - avg


def reward_conventional(error_vecs, u: float, gamma_diag=(1.0, 1.0, 1.0),
                        beta: float = 0.2) -> float:
    """exp of the negated quadratic cost over per-neighbor error vectors.

    error_vecs is one (3,) error vector or a stack of them; the quadratic
    forms of all rows are summed inside the exponent.
    """
    gamma = np.asarray(gamma_diag, dtype=float)
    if np.any(gamma <= 0) or beta <= 0:
        raise ValueError("gamma diagonal and beta must be positive")
    e = np.atleast_2d(np.asarray(error_vecs, dtype=float))
    cost = float(np.sum(e * e * gamma)) + beta * u * u
    return math.exp(-cost)


def reward_integral(e_bar: float, u: float, kappa: float = 1.0,
                    beta: float = 0.2) -> float:
    """exp(-(kappa*e^2 + beta*u^2)) for the scalar mean-error state."""
    if kappa <= 0 or beta <= 0:
        raise ValueError("kappa and beta must be positive")
    return math.exp(-(kappa * e_bar * e_bar + beta * u * u))


class PrbsSignal:
    """Pseudorandom binary acceleration profile from a maximal-length
    7-bit feedback shift register; each bit is held for a fixed number of
    steps and mapped to +/-amplitude."""

    _MASK = 0x7F

    def __init__(self, amplitude: float, hold_steps: int, register: int):
        if hold_steps < 1:
            raise ValueError("hold_steps must be >= 1")
        if not 0 < register <= self._MASK:
            raise ValueError("register seed must be a nonzero 7-bit value")
        self.amplitude = amplitude
        self.hold_steps = hold_steps
        self._reg = register
        self._bits: list[int] = []

    def _bit(self, idx: int) -> int:
        while len(self._bits) <= idx:
            out = self._reg & 1
            fb = ((self._reg >> 6) ^ (self._reg >> 5)) & 1  # taps 7 and 6
            self._reg = ((self._reg >> 1) | (fb << 6)) & self._MASK
            self._bits.append(out)
        return self._bits[idx]

    def value(self, step: int) -> float:
        """Signal value at an integration step index."""
        bit = self._bit(step // self.hold_steps)
        return self.amplitude if bit else -self.amplitude


@dataclass
class TrainingEnvConfig:
    """Knobs of the two-vehicle training environment."""

    dt: float = 0.05
    steps: int = 1000
    gap: float = 5.0
    action_mode: str = "incremental"
    reward_kind: str = "integral"
    powertrain_constant: float = 0.3
    u_min: float = -3.0
    u_max: float = 3.0
    du_min: float = -30.0
    du_max: float = 30.0
    prbs_amplitude: float = 1.0
    prbs_hold_time: float = 2.5
    spacing_error_range: float = 5.0
    speed_error_range: float = 2.0
    reward_gamma: tuple = (1.0, 1.0, 1.0)
    reward_beta: float = 0.2
    reward_kappa: float = 1.0

    def __post_init__(self):
        if self.action_mode not in ACTION_MODES:
            raise ValueError(f"action_mode must be one of {ACTION_MODES}")
        if self.reward_kind not in REWARD_KINDS:
            raise ValueError(f"reward_kind must be one of {REWARD_KINDS}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def state_dim(self) -> int:
        return 1 if self.reward_kind == "integral" else 3

    @property
    def prbs_hold_steps(self) -> int:
        return max(1, round(self.prbs_hold_time / self.dt))


def _output(p: float, v: float, a: float) -> float:
    return p + v + a


class TwoVehicleEnv:
    """One follower tracking a virtual leader that accelerates according to
    a pseudorandom binary sequence. The follower runs the nominal linear
    plant; episodes start from randomized relative states."""

    def __init__(self, cfg: TrainingEnvConfig, seed):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.state_dim = cfg.state_dim
        self.action_dim = 1
        self._leader = np.zeros(2)  # position, speed
        self._follower = LinearState(0.0, 0.0, 0.0)
        self._prbs: PrbsSignal | None = None
        self._u_prev = 0.0
        self._step = 0

    def reseed(self, seed):
        self.rng = np.random.default_rng(seed)

    def _leader_accel(self, step: int) -> float:
        return self._prbs.value(step)

    def _observation(self) -> np.ndarray:
        cfg = self.cfg
        p0, v0 = self._leader
        a0 = self._leader_accel(self._step)
        f = self._follower
        if cfg.reward_kind == "integral":
            e_bar = mean_error(_output(f.position, f.speed, f.acceleration),
                               [(_output(p0, v0, a0), cfg.gap)])
            return np.array([e_bar])
        return np.array([f.position - p0 + cfg.gap,
                         f.speed - v0,
                         f.acceleration - a0])

    def reset(self) -> np.ndarray:
        cfg = self.cfg
        self._prbs = PrbsSignal(cfg.prbs_amplitude, cfg.prbs_hold_steps,
                                int(self.rng.integers(1, 128)))
        spacing_err = self.rng.uniform(-cfg.spacing_error_range,
                                       cfg.spacing_error_range)
        speed_err = self.rng.uniform(-cfg.speed_error_range,
                                     cfg.speed_error_range)
        self._leader = np.zeros(2)
        self._follower = LinearState(-cfg.gap + spacing_err, speed_err, 0.0)
        self._u_prev = 0.0
        self._step = 0
        return self._observation()

    def _scale_action(self, raw: float) -> float:
        cfg = self.cfg
        raw = min(max(raw, -1.0), 1.0)
        if cfg.action_mode == "direct":
            lo, hi = cfg.u_min, cfg.u_max
            return 0.5 * (hi + lo) + 0.5 * (hi - lo) * raw
        lo, hi = cfg.du_min, cfg.du_max
        du = 0.5 * (hi + lo) + 0.5 * (hi - lo) * raw
        return integrate_action(self._u_prev, du, cfg.dt, cfg.u_min, cfg.u_max)

    def step(self, raw_action):
        """Advance one control period; returns (obs, reward, done, info)."""
        cfg = self.cfg
        raw = float(np.asarray(raw_action).reshape(-1)[0])
        u = self._scale_action(raw)
        self._u_prev = u
        a0 = self._leader_accel(self._step)
        try:
            self._leader = step_rk4(self._leader, a0, cfg.dt,
                                    lambda x, acc: np.array([x[1], acc]))
            self._follower = step_linear(self._follower, u,
                                         cfg.powertrain_constant, cfg.dt)
        except FloatingPointError:
            return np.zeros(self.state_dim), 0.0, True, {"diverged": True}
        self._step += 1
        obs = self._observation()
        if cfg.reward_kind == "integral":
            reward = reward_integral(obs[0], u, cfg.reward_kappa, cfg.reward_beta)
        else:
            reward = reward_conventional(obs, u, cfg.reward_gamma, cfg.reward_beta)
        done = self._step >= cfg.steps
        info = {"u": u, "diverged": False}
        return obs, reward, done, info
