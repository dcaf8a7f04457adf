"""Command-line interface: train, eval, analyze, and sweep subcommands.

Every report-producing path writes delimited output and, unless --no-plots
is given, a rendered figure next to it.
"""

from __future__ import annotations

import argparse
import os
import sys

# The workload is dense 256-wide matrix math where BLAS threading only adds
# overhead; pin it before numpy loads (no effect if already configured).
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np

from .ddpg import DdpgHyper, write_trace_csv
from .experiments import (CONTROLLERS, VARIANTS, ScenarioConfig,
                          configs_from_mapping, parse_config_file,
                          run_scenario, sweep, train_variant)
from .mlp import load_mlp, save_mlp
from .stability import (augment_integrator, circle_criterion_check,
                        default_omega_grid, estimate_sector, nyquist_samples,
                        plant_tf)
from .topology import KINDS


def _cmd_train(args) -> int:
    hyper = DdpgHyper(episodes=args.episodes, steps_per_episode=args.steps,
                      dt=args.dt)
    agent, rewards = train_variant(args.variant, args.seed, hyper)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    save_mlp(agent.actor, args.out)
    stem, _ = os.path.splitext(args.out)
    trace_path = args.trace_csv or stem + "_trace.csv"
    write_trace_csv(trace_path, rewards)
    print(f"saved actor weights to {args.out}")
    print(f"saved reward trace to {trace_path}")
    if not args.no_plots:
        from .plots import save_reward_plot
        fig_path = stem + "_trace.png"
        save_reward_plot(rewards, fig_path,
                         title=f"{args.variant} seed {args.seed}")
        print(f"saved reward figure to {fig_path}")
    return 0


def _cmd_eval(args) -> int:
    cfg = ScenarioConfig(
        topology=args.topology, controller=args.controller,
        n_followers=args.n, uncertainty=args.uncertainty,
        slope_deg=args.slope_deg, seed=args.seed, duration=args.duration,
        dt=args.dt, gap=args.gap, cruise_speed=args.cruise_speed,
        saturate_consensus=not args.no_consensus_saturation,
        aggregate=args.aggregate)
    record, traj = run_scenario(cfg, weights=args.weights, csv_dir=args.csv_dir)
    print(f"scenario {cfg.scenario_id}: "
          f"{'DIVERGED' if record.metrics.diverged else 'ok'}")
    for m in record.metrics.per_vehicle:
        print(f"  vehicle {m.vehicle_id}: ss_error={m.ss_error:.4f} m  "
              f"overshoot={m.overshoot:.4f} m  settled={m.settled}")
    if record.trajectory_path:
        print(f"trajectory written to {record.trajectory_path}")
    if not args.no_plots and args.csv_dir:
        from .plots import save_spacing_plot
        fig_path = os.path.join(args.csv_dir, cfg.scenario_id + "_spacing.png")
        save_spacing_plot(traj, fig_path, title=cfg.scenario_id)
        print(f"figure written to {fig_path}")
    return 0


def _cmd_analyze(args) -> int:
    actor = load_mlp(args.weights)
    if actor.input_dim != 1:
        print("analyze requires a scalar-input actor (the integral-action "
              "variant)", file=sys.stderr)
        return 1

    def policy(e: float) -> float:
        return args.scale * float(actor(np.array([[e]]))[0, 0])

    offset = policy(0.0)
    sector = estimate_sector(lambda e: policy(e) - offset,
                             args.range, args.eps, args.samples)
    tf = plant_tf(args.powertrain_constant)
    if not args.no_augment:
        tf = augment_integrator(tf)
    grid = default_omega_grid()
    omegas, values = nyquist_samples(tf, grid)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "nyquist.csv")
    with open(csv_path, "w") as fh:
        fh.write("omega,re,im\n")
        for w, z in zip(omegas, values):
            fh.write("%.17g,%.17g,%.17g\n" % (w, z.real, z.imag))
    print(f"policy offset at zero error: {offset:.6g}")
    print(f"sector estimate: [{sector.k_low:.6g}, {sector.k_high:.6g}]")
    region = None
    if sector.k_low > 0:
        verdict = circle_criterion_check(tf, sector, grid)
        region = verdict.region
        print(f"circle: center={verdict.region.center.real:.6g}, "
              f"radius={verdict.region.radius:.6g}")
        print(f"verdict: {'certified' if verdict.certified else 'not-certified'} "
              f"(margin={verdict.margin:.6g}, encirclements="
              f"{verdict.encirclements}, required="
              f"{verdict.required_encirclements})")
    else:
        print("verdict: not-certified (sector lower bound is not positive; "
              "the circle test does not apply)")
    print(f"nyquist samples written to {csv_path}")
    if not args.no_plots:
        from .plots import save_nyquist_plot
        fig_path = os.path.join(args.out_dir, "nyquist.png")
        save_nyquist_plot(values, fig_path, region=region,
                          title=os.path.basename(args.weights))
        print(f"figure written to {fig_path}")
    return 0


def _cmd_sweep(args) -> int:
    options = parse_config_file(args.config)
    configs, weights = configs_from_mapping(options)
    csv_dir = args.csv_dir or options.get("csv_dir", "results")
    plots_on = options.get("plots", "true").lower() in ("true", "1", "on", "yes")
    plot_dir = csv_dir if (plots_on and not args.no_plots) else None
    records, path = sweep(configs, weights, csv_dir, plot_dir=plot_dir)
    diverged = sum(1 for r in records if r.metrics.diverged)
    print(f"swept {len(records)} scenarios ({diverged} diverged)")
    print(f"metrics written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonrl",
        description="Longitudinal platoon control: train, evaluate, analyze.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a controller variant")
    p_train.add_argument("--variant", choices=VARIANTS, required=True)
    p_train.add_argument("--episodes", type=int, default=300)
    p_train.add_argument("--steps", type=int, default=1000)
    p_train.add_argument("--dt", type=float, default=0.05)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="actor weight file")
    p_train.add_argument("--trace-csv", default=None)
    p_train.add_argument("--no-plots", action="store_true")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a platoon scenario")
    p_eval.add_argument("--controller", choices=CONTROLLERS, required=True)
    p_eval.add_argument("--topology", choices=KINDS, default="pf")
    p_eval.add_argument("--n", type=int, default=9, help="follower count")
    p_eval.add_argument("--uncertainty", action="store_true")
    p_eval.add_argument("--slope-deg", type=float, default=0.0)
    p_eval.add_argument("--weights", default=None)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--csv-dir", default="results")
    p_eval.add_argument("--duration", type=float, default=50.0)
    p_eval.add_argument("--dt", type=float, default=0.05)
    p_eval.add_argument("--gap", type=float, default=5.0)
    p_eval.add_argument("--cruise-speed", type=float, default=20.0)
    p_eval.add_argument("--no-consensus-saturation", action="store_true")
    p_eval.add_argument("--aggregate", choices=("sum", "mean"), default="sum")
    p_eval.add_argument("--no-plots", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    p_an = sub.add_parser("analyze", help="frequency-domain policy analysis")
    p_an.add_argument("--weights", required=True)
    p_an.add_argument("--range", type=float, default=3.0,
                      help="half-width of the sampled error interval")
    p_an.add_argument("--eps", type=float, default=0.01,
                      help="dead zone excluded around zero error")
    p_an.add_argument("--samples", type=int, default=2001)
    p_an.add_argument("--scale", type=float, default=30.0,
                      help="action scale applied to the actor output")
    p_an.add_argument("--powertrain-constant", type=float, default=0.3)
    p_an.add_argument("--no-augment", action="store_true",
                      help="analyze the plant without the extra integrator")
    p_an.add_argument("--out-dir", default="results")
    p_an.add_argument("--no-plots", action="store_true")
    p_an.set_defaults(func=_cmd_analyze)

    p_sw = sub.add_parser("sweep", help="run a scenario grid from a config file")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--csv-dir", default=None,
                      help="overrides csv_dir from the config file")
    p_sw.add_argument("--no-plots", action="store_true")
    p_sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
