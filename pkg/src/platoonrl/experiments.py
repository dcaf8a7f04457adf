"""Scenario orchestration: configuration, platoon runs, metrics, sweeps,
training entry points, and the CSV persistence behind the CLI."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .ddpg import DdpgAgent, DdpgHyper, run_training
from .dynamics import NOMINAL_PARAMS, Externals, sample_uncertain_params
from .envs import TrainingEnvConfig, TwoVehicleEnv
from .mlp import Mlp, load_mlp
from .platoon import PlatoonEnv, Trajectory, make_controller
from .topology import KINDS, make_topology

CONTROLLERS = ("consensus", "ddpg", "ddpg-integral")
VARIANTS = ("ddpg", "ddpg-integral")

#: Parameter uncertainty half-widths used in the robustness scenarios.
MASS_HALFWIDTH = 300.0
POWERTRAIN_HALFWIDTH = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    """One evaluation run of the platoon."""

    topology: str = "pf"
    controller: str = "consensus"
    n_followers: int = 9
    uncertainty: bool = False
    slope_deg: float = 0.0
    seed: int = 0
    duration: float = 50.0
    dt: float = 0.05
    gap: float = 5.0
    cruise_speed: float = 20.0
    saturate_consensus: bool = True
    aggregate: str = "sum"

    def __post_init__(self):
        if self.topology not in KINDS:
            raise ValueError(f"topology must be one of {KINDS}")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {CONTROLLERS}")
        if self.n_followers < 1:
            raise ValueError("n_followers must be >= 1")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")

    @property
    def scenario_id(self) -> str:
        return "%s-%s-u%d-sl%g-seed%d" % (
            self.topology, self.controller, int(self.uncertainty),
            self.slope_deg, self.seed)


@dataclass(frozen=True)
class VehicleMetrics:
    vehicle_id: int
    ss_error: float
    overshoot: float
    settled: bool


@dataclass(frozen=True)
class Metrics:
    per_vehicle: tuple
    diverged: bool = False

    def max_ss_error(self) -> float:
        return max((m.ss_error for m in self.per_vehicle), default=math.nan)

    def mean_overshoot(self) -> float:
        vals = [m.overshoot for m in self.per_vehicle]
        return float(np.mean(vals)) if vals else math.nan


@dataclass(frozen=True)
class RunRecord:
    config: ScenarioConfig
    metrics: Metrics
    trajectory_path: str | None = None
    weights_path: str | None = None


#: Analysis windows (seconds) for the steady-state and overshoot metrics.
SS_WINDOW = (40.0, 50.0)
OVERSHOOT_START = 5.0
NULL_ERROR_TOL = 0.05


def compute_metrics(traj: Trajectory, ss_window=SS_WINDOW,
                    overshoot_start: float = OVERSHOOT_START,
                    tol: float = NULL_ERROR_TOL) -> Metrics:
    """Per-follower steady-state spacing error (mean absolute error over the
    steady window) and overshoot (peak after the step minus the steady
    value)."""
    lo, hi = ss_window
    if traj.t[-1] < hi - 1e-9:
        raise ValueError(
            f"trajectory ends at t={traj.t[-1]:.2f}, before the "
            f"steady-state window [{lo}, {hi}]")
    ss_mask = (traj.t >= lo - 1e-9) & (traj.t <= hi + 1e-9)
    ov_mask = traj.t > overshoot_start + 1e-9
    rows = []
    for i in range(1, traj.n_vehicles):
        err = np.abs(traj.spacing_error[:, i])
        ss = float(np.mean(err[ss_mask]))
        overshoot = max(0.0, float(np.max(err[ov_mask])) - ss)
        rows.append(VehicleMetrics(vehicle_id=i, ss_error=ss,
                                   overshoot=overshoot,
                                   settled=bool(np.all(err[ss_mask] < tol))))
    return Metrics(per_vehicle=tuple(rows), diverged=traj.diverged)


def build_platoon(cfg: ScenarioConfig, actor: Mlp | None = None):
    """Assemble the environment and controller for one scenario."""
    topo = make_topology(cfg.topology, cfg.n_followers, cfg.gap)
    ext = Externals(slope_angle=math.radians(cfg.slope_deg))
    params = [NOMINAL_PARAMS]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_followers):
        if cfg.uncertainty:
            params.append(sample_uncertain_params(
                NOMINAL_PARAMS, MASS_HALFWIDTH, POWERTRAIN_HALFWIDTH, rng))
        else:
            params.append(NOMINAL_PARAMS)
    env = PlatoonEnv(topo, params, NOMINAL_PARAMS, ext, dt=cfg.dt,
                     cruise_speed=cfg.cruise_speed)
    controller = make_controller(cfg.controller, actor=actor,
                                 params=NOMINAL_PARAMS,
                                 saturate_consensus=cfg.saturate_consensus,
                                 aggregate=cfg.aggregate)
    return env, controller


def write_trajectory_csv(path, traj: Trajectory):
    with open(path, "w") as fh:
        fh.write("t,vehicle_id,position,speed,acceleration,"
                 "u_applied,spacing_error_to_front\n")
        for k in range(len(traj.t)):
            for v in range(traj.n_vehicles):
                fh.write("%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                    traj.t[k], v, traj.position[k, v], traj.speed[k, v],
                    traj.acceleration[k, v], traj.u_applied[k, v],
                    traj.spacing_error[k, v]))


def run_scenario(cfg: ScenarioConfig, weights: str | None = None,
                 csv_dir: str | None = None) -> tuple[RunRecord, Trajectory]:
    """Simulate one scenario; optionally persist the trajectory CSV.

    Learned controllers require a weights file. A diverged simulation is
    reported in the record rather than raised.
    """
    actor = None
    if cfg.controller in VARIANTS:
        if weights is None:
            raise ValueError(f"controller {cfg.controller!r} needs a weights file")
        actor = load_mlp(weights)
    env, controller = build_platoon(cfg, actor)
    traj = env.run(controller, cfg.duration)
    traj_path = None
    if csv_dir is not None:
        os.makedirs(csv_dir, exist_ok=True)
        traj_path = os.path.join(csv_dir, cfg.scenario_id + "_trajectory.csv")
        write_trajectory_csv(traj_path, traj)
    if traj.diverged or traj.t[-1] < SS_WINDOW[1] - 1e-9:
        metrics = Metrics(per_vehicle=(), diverged=traj.diverged)
    else:
        metrics = compute_metrics(traj)
    record = RunRecord(config=cfg, metrics=metrics,
                       trajectory_path=traj_path, weights_path=weights)
    return record, traj


METRICS_HEADER = ("scenario_id,topology,controller,uncertainty,slope_deg,"
                  "seed,vehicle_id,ss_error_m,overshoot_m,diverged\n")


def metrics_rows(record: RunRecord):
    cfg, metrics = record.config, record.metrics
    rows = []
    for m in metrics.per_vehicle:
        rows.append("%s,%s,%s,%s,%g,%d,%d,%.10g,%.10g,%s" % (
            cfg.scenario_id, cfg.topology, cfg.controller,
            str(cfg.uncertainty).lower(), cfg.slope_deg, cfg.seed,
            m.vehicle_id, m.ss_error, m.overshoot,
            str(metrics.diverged).lower()))
    if not metrics.per_vehicle:
        rows.append("%s,%s,%s,%s,%g,%d,,nan,nan,%s" % (
            cfg.scenario_id, cfg.topology, cfg.controller,
            str(cfg.uncertainty).lower(), cfg.slope_deg, cfg.seed,
            str(metrics.diverged).lower()))
    return rows


def sweep(configs, weights: dict | None = None, csv_dir: str = "results",
          metrics_name: str = "metrics.csv", plot_dir: str | None = None):
    """Run every scenario in order and assemble the metrics table.

    `weights` maps controller kind to actor weight path. Per-run failures
    become flagged rows instead of aborting the sweep. With plot_dir set,
    a spacing figure is rendered per run plus one summary figure.
    """
    weights = weights or {}
    os.makedirs(csv_dir, exist_ok=True)
    if plot_dir is not None:
        os.makedirs(plot_dir, exist_ok=True)
    records = []
    for cfg in configs:
        record, traj = run_scenario(cfg, weights.get(cfg.controller), csv_dir)
        records.append(record)
        if plot_dir is not None:
            from .plots import save_spacing_plot
            save_spacing_plot(traj, os.path.join(
                plot_dir, cfg.scenario_id + "_spacing.png"),
                title=cfg.scenario_id)
    path = os.path.join(csv_dir, metrics_name)
    with open(path, "w") as fh:
        fh.write(METRICS_HEADER)
        for record in records:
            for row in metrics_rows(record):
                fh.write(row + "\n")
    if plot_dir is not None and records:
        from .plots import save_sweep_summary_plot
        save_sweep_summary_plot(records, os.path.join(plot_dir, "summary.png"))
    return records, path


def training_env_config(variant: str, hyper: DdpgHyper) -> TrainingEnvConfig:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if variant == "ddpg":
        return TrainingEnvConfig(dt=hyper.dt, steps=hyper.steps_per_episode,
                                 action_mode="direct",
                                 reward_kind="conventional")
    return TrainingEnvConfig(dt=hyper.dt, steps=hyper.steps_per_episode,
                             action_mode="incremental",
                             reward_kind="integral")


def train_variant(variant: str, seed: int, hyper: DdpgHyper | None = None):
    """Train one controller variant on the two-vehicle environment.

    Returns (agent, per-episode reward sums). Fully determined by the seed.
    """
    hyper = hyper if hyper is not None else DdpgHyper()
    cfg = training_env_config(variant, hyper)
    ss = np.random.SeedSequence(seed)
    env_ss, agent_ss = ss.spawn(2)
    env = TwoVehicleEnv(cfg, env_ss)
    agent = DdpgAgent(cfg.state_dim, 1, hyper, agent_ss)
    rewards = run_training(env, agent, hyper)
    return agent, rewards


def parse_config_file(path) -> dict:
    """Line-oriented `key = value` configuration with `#` comments."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _split_list(value: str):
    return [tok for tok in value.replace(",", " ").split() if tok]


def configs_from_mapping(options: dict):
    """Expand a sweep configuration mapping into the scenario grid.

    Recognized keys: topologies, controllers, seeds, uncertainty, slope_deg,
    n_followers, duration, dt, gap, cruise_speed, weights_ddpg,
    weights_ddpg_integral, csv_dir, plots.
    """
    topologies = _split_list(options.get("topologies", "pf pfl tpf tpfl"))
    controllers = _split_list(options.get("controllers", "consensus"))
    seeds = [int(s) for s in _split_list(options.get("seeds", "0"))]
    base = dict(
        uncertainty=options.get("uncertainty", "false").lower() in ("true", "1", "on", "yes"),
        slope_deg=float(options.get("slope_deg", "0")),
        n_followers=int(options.get("n_followers", "9")),
        duration=float(options.get("duration", "50")),
        dt=float(options.get("dt", "0.05")),
        gap=float(options.get("gap", "5")),
        cruise_speed=float(options.get("cruise_speed", "20")),
    )
    configs = []
    for topo in topologies:
        for ctrl in controllers:
            for seed in seeds:
                configs.append(ScenarioConfig(topology=topo, controller=ctrl,
                                              seed=seed, **base))
    weights = {}
    if "weights_ddpg" in options:
        weights["ddpg"] = options["weights_ddpg"]
    if "weights_ddpg_integral" in options:
        weights["ddpg-integral"] = options["weights_ddpg_integral"]
    return configs, weights
