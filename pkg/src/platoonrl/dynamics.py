"""Longitudinal vehicle models: nonlinear plant, feedback linearization,
linear lag model, RK4 stepping, and parameter uncertainty sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of one vehicle plus acceleration-command bounds.

    Units: mass kg, tire_radius m, powertrain_constant s, air_density kg/m^3,
    gravity m/s^2, u bounds m/s^2, du bounds m/s^3. motor_efficiency,
    drag_coeff and friction_coeff are dimensionless.
    """

    mass: float = 1500.0
    tire_radius: float = 0.25
    motor_efficiency: float = 0.8
    powertrain_constant: float = 0.3
    drag_coeff: float = 0.4
    friction_coeff: float = 0.015
    air_density: float = 1.23
    gravity: float = 9.78
    u_min: float = -3.0
    u_max: float = 3.0
    du_min: float = -30.0
    du_max: float = 30.0

    def __post_init__(self):
        if not (self.mass > 0 and self.tire_radius > 0):
            raise ValueError("mass and tire_radius must be positive")
        if not (0.0 < self.motor_efficiency <= 1.0):
            raise ValueError("motor_efficiency must be in (0, 1]")
        if not self.powertrain_constant > 0:
            raise ValueError("powertrain_constant must be positive")
        if not (self.u_min < self.u_max and self.du_min < self.du_max):
            raise ValueError("input bounds must be ordered")


#: Nominal vehicle used throughout training and as the linearization model.
NOMINAL_PARAMS = VehicleParams()


@dataclass(frozen=True)
class Externals:
    """Environment inputs: head-wind speed (m/s) and road slope (rad)."""

    wind_speed: float = 0.0
    slope_angle: float = 0.0

    def __post_init__(self):
        if not abs(self.slope_angle) < math.pi / 2:
            raise ValueError("slope_angle must lie in (-pi/2, pi/2)")


@dataclass
class VehicleState:
    """Nonlinear plant state. acceleration is algebraic given torque; it is
    refreshed after every integration step rather than integrated."""

    position: float
    speed: float
    acceleration: float
    torque: float


@dataclass
class LinearState:
    """State of the linearized third-order model."""

    position: float
    speed: float
    acceleration: float


def force_balance_accel(speed: float, torque: float, params: VehicleParams,
                        ext: Externals) -> float:
    """Acceleration implied by the longitudinal force balance at (v, T)."""
    drive = params.motor_efficiency / params.tire_radius * torque
    drag = 0.5 * params.air_density * params.drag_coeff * (speed + ext.wind_speed) ** 2
    roll = params.mass * params.gravity * params.friction_coeff * math.cos(ext.slope_angle)
    grade = params.mass * params.gravity * math.sin(ext.slope_angle)
    return (drive - drag - roll - grade) / params.mass


def equilibrium_torque(speed: float, params: VehicleParams, ext: Externals) -> float:
    """Torque at which the force balance gives zero acceleration at `speed`."""
    drag = 0.5 * params.air_density * params.drag_coeff * (speed + ext.wind_speed) ** 2
    roll = params.mass * params.gravity * params.friction_coeff * math.cos(ext.slope_angle)
    grade = params.mass * params.gravity * math.sin(ext.slope_angle)
    return (drag + roll + grade) * params.tire_radius / params.motor_efficiency


def nonlinear_derivative(state: VehicleState, desired_torque: float,
                         params: VehicleParams, ext: Externals) -> VehicleState:
    """Time derivative of the nonlinear plant.

    Returns a VehicleState carrying (dp, dv, 0, dT): position rate is the
    speed, speed rate is the force-balance acceleration, and torque follows
    a first-order lag toward the desired torque. Acceleration has no
    independent derivative.
    """
    vals = (state.position, state.speed, state.torque, desired_torque)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite input to nonlinear_derivative: {vals}")
    accel = force_balance_accel(state.speed, state.torque, params, ext)
    dtorque = (desired_torque - state.torque) / params.powertrain_constant
    return VehicleState(position=state.speed, speed=accel,
                        acceleration=0.0, torque=dtorque)


def feedback_linearize(state, u_cmd: float, nominal: VehicleParams) -> float:
    """Desired torque canceling drag and rolling friction on a flat road so
    the closed plant follows the linear lag model. Uses nominal parameters;
    `state` needs speed and acceleration attributes."""
    v = state.speed
    a = state.acceleration
    return (nominal.tire_radius / nominal.motor_efficiency) * (
        0.5 * nominal.air_density * nominal.drag_coeff * v
        * (2.0 * nominal.powertrain_constant * a + v)
        + nominal.mass * nominal.gravity * nominal.friction_coeff
        + nominal.mass * u_cmd
    )


def linear_derivative(state: LinearState, u: float,
                      powertrain_constant: float) -> LinearState:
    """Derivative of the linear model: dp = v, dv = a, da = (u - a)/lag."""
    if powertrain_constant <= 0:
        raise ValueError("powertrain_constant must be positive")
    return LinearState(position=state.speed, speed=state.acceleration,
                       acceleration=(u - state.acceleration) / powertrain_constant)


def observe(state) -> float:
    """Scalar output combining position, speed and acceleration (unit row)."""
    return state.position + state.speed + state.acceleration


def step_rk4(state: np.ndarray, u, dt: float, deriv) -> np.ndarray:
    """Classical 4th-order Runge-Kutta advance with the input held constant.

    `deriv(state, u)` must return the state derivative as an array of the
    same shape. Raises on non-finite intermediates.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = deriv(state, u)
    k2 = deriv(state + 0.5 * dt * k1, u)
    k3 = deriv(state + 0.5 * dt * k2, u)
    k4 = deriv(state + dt * k3, u)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state in step_rk4")
    return out


def step_linear(state: LinearState, u: float, powertrain_constant: float,
                dt: float) -> LinearState:
    """Advance the linear model one step with zero-order-hold input."""

    def f(x, uc):
        return np.array([x[1], x[2], (uc - x[2]) / powertrain_constant])

    arr = np.array([state.position, state.speed, state.acceleration])
    nxt = step_rk4(arr, u, dt, f)
    return LinearState(position=nxt[0], speed=nxt[1], acceleration=nxt[2])


def step_nonlinear(state: VehicleState, desired_torque: float,
                   params: VehicleParams, ext: Externals, dt: float) -> VehicleState:
    """Advance the nonlinear plant one step holding the desired torque."""

    def f(x, t_des):
        s = VehicleState(x[0], x[1], 0.0, x[2])
        d = nonlinear_derivative(s, t_des, params, ext)
        return np.array([d.position, d.speed, d.torque])

    arr = np.array([state.position, state.speed, state.torque])
    nxt = step_rk4(arr, desired_torque, dt, f)
    accel = force_balance_accel(nxt[1], nxt[2], params, ext)
    return VehicleState(position=nxt[0], speed=nxt[1],
                        acceleration=accel, torque=nxt[2])


def step_nonlinear_fl(state: VehicleState, u_cmd: float,
                      params: VehicleParams, nominal: VehicleParams,
                      ext: Externals, dt: float) -> VehicleState:
    """Advance the nonlinear plant one step under the linearizing torque law.

    The acceleration command is held over the step while the torque law is
    re-evaluated at every integration stage, mirroring a continuous inner
    loop. `params` drives the plant; the torque law only knows `nominal`,
    so any mismatch (or nonzero slope/wind) acts as an input disturbance.
    """

    def f(x, uc):
        accel = force_balance_accel(x[1], x[2], params, ext)
        t_des = feedback_linearize(
            VehicleState(x[0], x[1], accel, x[2]), uc, nominal)
        return np.array([x[1], accel, (t_des - x[2]) / params.powertrain_constant])

    arr = np.array([state.position, state.speed, state.torque])
    nxt = step_rk4(arr, u_cmd, dt, f)
    accel = force_balance_accel(nxt[1], nxt[2], params, ext)
    return VehicleState(position=nxt[0], speed=nxt[1],
                        acceleration=accel, torque=nxt[2])


def sample_uncertain_params(nominal: VehicleParams, mass_halfwidth: float,
                            powertrain_halfwidth: float,
                            rng: np.random.Generator) -> VehicleParams:
    """Draw mass and power-train constant uniformly around their nominal
    values; every other field is copied unchanged."""
    if mass_halfwidth < 0 or powertrain_halfwidth < 0:
        raise ValueError("halfwidths must be non-negative")
    if mass_halfwidth >= nominal.mass or powertrain_halfwidth >= nominal.powertrain_constant:
        raise ValueError("halfwidth must be smaller than the nominal value")
    mass = nominal.mass + rng.uniform(-mass_halfwidth, mass_halfwidth)
    lag = nominal.powertrain_constant + rng.uniform(-powertrain_halfwidth,
                                                    powertrain_halfwidth)
    return replace(nominal, mass=mass, powertrain_constant=lag)
