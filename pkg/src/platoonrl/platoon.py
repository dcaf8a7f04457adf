"""Multi-vehicle evaluation platoon: nonlinear plants driven through the
linearizing torque law, a kinematic reference leader, and the three
controller families (consensus, direct policy, incremental policy)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import ConsensusGains, consensus_control
from .dynamics import (Externals, LinearState, VehicleParams, VehicleState,
                       equilibrium_torque, observe, step_nonlinear_fl, step_rk4)
from .envs import integrate_action, mean_error, saturate
from .mlp import Mlp
from .topology import Topology, desired_gap, validate_dag


def leader_step_profile(t: float, amplitude: float = 1.0,
                        start: float = 5.0, stop: float = 10.0) -> float:
    """Leader acceleration command: a pulse on (start, stop], zero elsewhere."""
    return amplitude if start < t <= stop else 0.0


class ConsensusController:
    """Distributed linear baseline, optionally saturated to the input bounds."""

    kind = "consensus"

    def __init__(self, gains: ConsensusGains | None = None,
                 saturate_output: bool = True,
                 u_min: float = -3.0, u_max: float = 3.0):
        self.gains = gains if gains is not None else ConsensusGains()
        self.saturate_output = saturate_output
        self.u_min = u_min
        self.u_max = u_max

    def reset(self, n_followers: int):
        pass

    def commands(self, env: "PlatoonEnv") -> np.ndarray:
        states = env.observed_states()
        out = np.zeros(env.topology.n_followers)
        for i in range(1, env.topology.n_followers + 1):
            # offsets are desired own-minus-neighbor positions, hence negative
            nbrs = [(states[j], -desired_gap(i, j, env.topology.gap))
                    for j in env.topology.neighbors(i)]
            u = consensus_control(states[i], nbrs, self.gains)
            if self.saturate_output:
                u = saturate(u, self.u_min, self.u_max)
            out[i - 1] = u
        return out


class DirectPolicyController:
    """Conventional learned controller: the actor maps the aggregated
    3-component neighbor error straight to a bounded acceleration command."""

    kind = "ddpg"

    def __init__(self, actor: Mlp, u_min: float = -3.0, u_max: float = 3.0,
                 aggregate: str = "sum"):
        if actor.input_dim != 3:
            raise ValueError("direct policy expects a 3-input actor")
        if aggregate not in ("sum", "mean"):
            raise ValueError("aggregate must be 'sum' or 'mean'")
        self.actor = actor
        self.u_min = u_min
        self.u_max = u_max
        self.aggregate = aggregate

    def reset(self, n_followers: int):
        pass

    def commands(self, env: "PlatoonEnv") -> np.ndarray:
        states = env.observed_states()
        n = env.topology.n_followers
        errors = np.zeros((n, 3))
        for i in range(1, n + 1):
            for j in env.topology.neighbors(i):
                own, nbr = states[i], states[j]
                errors[i - 1] += (own.position - nbr.position
                                  + desired_gap(i, j, env.topology.gap),
                                  own.speed - nbr.speed,
                                  own.acceleration - nbr.acceleration)
            if self.aggregate == "mean":
                errors[i - 1] /= len(env.topology.neighbors(i))
        raw = self.actor(errors)[:, 0]
        return 0.5 * (self.u_max + self.u_min) + 0.5 * (self.u_max - self.u_min) * raw


class IncrementalPolicyController:
    """Integral-action learned controller: the actor maps the scalar mean
    error to a command increment that is integrated and saturated."""

    kind = "ddpg-integral"

    def __init__(self, actor: Mlp, u_min: float = -3.0, u_max: float = 3.0,
                 du_min: float = -30.0, du_max: float = 30.0):
        if actor.input_dim != 1:
            raise ValueError("incremental policy expects a 1-input actor")
        self.actor = actor
        self.u_min = u_min
        self.u_max = u_max
        self.du_min = du_min
        self.du_max = du_max
        self._u_prev = np.zeros(0)

    def reset(self, n_followers: int):
        self._u_prev = np.zeros(n_followers)

    def commands(self, env: "PlatoonEnv") -> np.ndarray:
        states = env.observed_states()
        n = env.topology.n_followers
        e_bar = np.zeros((n, 1))
        for i in range(1, n + 1):
            nbrs = [(observe(states[j]), desired_gap(i, j, env.topology.gap))
                    for j in env.topology.neighbors(i)]
            e_bar[i - 1, 0] = mean_error(observe(states[i]), nbrs)
        raw = self.actor(e_bar)[:, 0]
        du = (0.5 * (self.du_max + self.du_min)
              + 0.5 * (self.du_max - self.du_min) * raw)
        for i in range(n):
            self._u_prev[i] = integrate_action(self._u_prev[i], du[i],
                                               env.dt, self.u_min, self.u_max)
        return self._u_prev.copy()


@dataclass
class Trajectory:
    """Dense per-step record of a platoon run. Column 0 is the leader."""

    t: np.ndarray
    position: np.ndarray
    speed: np.ndarray
    acceleration: np.ndarray
    u_applied: np.ndarray
    spacing_error: np.ndarray  # to the vehicle directly in front; 0 for leader
    diverged: bool = False

    @property
    def n_vehicles(self) -> int:
        return self.position.shape[1]


class PlatoonEnv:
    """Leader plus n followers advancing in lockstep.

    The leader is an ideal kinematic reference executing its acceleration
    profile. Followers integrate the nonlinear plant with their own (true)
    parameters while the torque law only knows the nominal ones.
    """

    def __init__(self, topology: Topology, params, nominal: VehicleParams,
                 externals: Externals, dt: float = 0.05,
                 cruise_speed: float = 20.0, leader_profile=leader_step_profile):
        if not validate_dag(topology):
            raise ValueError("topology violates the look-ahead DAG property")
        if len(params) != topology.n_followers + 1:
            raise ValueError("need one parameter set per vehicle (leader first)")
        self.topology = topology
        self.params = list(params)
        self.nominal = nominal
        self.externals = externals
        self.dt = dt
        self.cruise_speed = cruise_speed
        self.leader_profile = leader_profile
        self._leader = np.zeros(2)
        self._leader_accel = 0.0
        self._followers: list[VehicleState] = []
        self._step = 0

    def reset(self):
        """Equilibrium formation at cruise speed: exact spacing, zero
        acceleration, torque balancing the true forces."""
        n = self.topology.n_followers
        gap = self.topology.gap
        self._leader = np.array([0.0, self.cruise_speed])
        self._leader_accel = self.leader_profile(self.dt)
        self._followers = []
        for i in range(1, n + 1):
            params = self.params[i]
            torque = equilibrium_torque(self.cruise_speed, params, self.externals)
            self._followers.append(VehicleState(
                position=-i * gap, speed=self.cruise_speed,
                acceleration=0.0, torque=torque))
        self._step = 0

    @property
    def time(self) -> float:
        return self._step * self.dt

    def observed_states(self) -> list[LinearState]:
        """Measured (position, speed, acceleration) of every vehicle."""
        states = [LinearState(self._leader[0], self._leader[1],
                              self._leader_accel)]
        for f in self._followers:
            states.append(LinearState(f.position, f.speed, f.acceleration))
        return states

    def step(self, commands: np.ndarray) -> None:
        """Advance every vehicle by dt under the given follower commands."""
        accel = self.leader_profile(self.time + self.dt)
        self._leader = step_rk4(self._leader, accel, self.dt,
                                lambda x, a: np.array([x[1], a]))
        self._leader_accel = self.leader_profile(self.time + 2 * self.dt)
        for i, f in enumerate(self._followers):
            self._followers[i] = step_nonlinear_fl(
                f, float(commands[i]), self.params[i + 1], self.nominal,
                self.externals, self.dt)
        self._step += 1

    def run(self, controller, duration: float) -> Trajectory:
        """Simulate for `duration` seconds and collect the trajectory.
        Divergence truncates the record instead of raising."""
        steps = int(round(duration / self.dt))
        n_vehicles = self.topology.n_followers + 1
        self.reset()
        controller.reset(self.topology.n_followers)
        t = np.zeros(steps + 1)
        pos = np.zeros((steps + 1, n_vehicles))
        spd = np.zeros((steps + 1, n_vehicles))
        acc = np.zeros((steps + 1, n_vehicles))
        u_app = np.zeros((steps + 1, n_vehicles))
        diverged = False
        rows = 0
        for k in range(steps + 1):
            t[k] = self.time
            states = self.observed_states()
            pos[k] = [s.position for s in states]
            spd[k] = [s.speed for s in states]
            acc[k] = [s.acceleration for s in states]
            rows = k + 1
            if k == steps:
                u_app[k] = u_app[k - 1] if k > 0 else 0.0
                break
            try:
                commands = controller.commands(self)
                u_app[k, 0] = self.leader_profile(self.time + self.dt)
                u_app[k, 1:] = commands
                self.step(commands)
            except FloatingPointError:
                diverged = True
                break
        gap = self.topology.gap
        spacing = np.zeros_like(pos)
        spacing[:, 1:] = pos[:, :-1] - pos[:, 1:] - gap
        sl = slice(0, rows)
        return Trajectory(t=t[sl], position=pos[sl], speed=spd[sl],
                          acceleration=acc[sl], u_applied=u_app[sl],
                          spacing_error=spacing[sl], diverged=diverged)


def make_controller(kind: str, actor: Mlp | None = None,
                    params: VehicleParams | None = None,
                    saturate_consensus: bool = True,
                    aggregate: str = "sum"):
    """Build one of the three controller families from CLI-level arguments."""
    p = params if params is not None else VehicleParams()
    if kind == "consensus":
        return ConsensusController(saturate_output=saturate_consensus,
                                   u_min=p.u_min, u_max=p.u_max)
    if kind == "ddpg":
        if actor is None:
            raise ValueError("the ddpg controller needs trained actor weights")
        return DirectPolicyController(actor, u_min=p.u_min, u_max=p.u_max,
                                      aggregate=aggregate)
    if kind == "ddpg-integral":
        if actor is None:
            raise ValueError("the ddpg-integral controller needs trained actor weights")
        return IncrementalPolicyController(actor, u_min=p.u_min, u_max=p.u_max,
                                           du_min=p.du_min, du_max=p.du_max)
    raise ValueError(f"unknown controller kind {kind!r}")
