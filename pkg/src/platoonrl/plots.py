"""Figure rendering for the report path: every CSV the CLI writes can be
accompanied by a matplotlib figure saved next to it."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ddpg import moving_average


def save_spacing_plot(traj, path, title=""):
    """Spacing error of every follower over time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(1, traj.n_vehicles):
        ax.plot(traj.t, traj.spacing_error[:, i], lw=1.0, label=f"vehicle {i}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("spacing error [m]")
    ax.grid(True, alpha=0.4)
    if title:
        ax.set_title(title)
    if traj.n_vehicles <= 11:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_reward_plot(rewards, path, title="", window: int = 10):
    """Per-episode reward and its moving average."""
    fig, ax = plt.subplots(figsize=(6, 4))
    episodes = np.arange(len(rewards))
    ax.plot(episodes, rewards, color="lightgray", lw=0.8, label="episode reward")
    ax.plot(episodes, moving_average(rewards, window), color="tab:blue",
            lw=1.6, label=f"moving avg ({window})")
    ax.set_xlabel("episode")
    ax.set_ylabel("reward sum")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_nyquist_plot(values, path, region=None, title=""):
    """Nyquist curve (both branches) with the optional forbidden disk."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    ax.plot(values.real, values.imag, lw=1.2, color="tab:blue")
    ax.plot(values.real, -values.imag, lw=1.2, color="tab:blue", ls="--")
    if region is not None:
        circle = plt.Circle((region.center.real, region.center.imag),
                            region.radius, color="tab:red", alpha=0.3)
        ax.add_patch(circle)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.axvline(0.0, color="k", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_xlim(-5, 2)
    ax.set_ylim(-5, 5)
    ax.grid(True, alpha=0.4)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_summary_plot(records, path, title=""):
    """Max steady-state error per scenario, grouped by topology and
    controller (seeds averaged)."""
    groups = {}
    for rec in records:
        key = (rec.config.topology, rec.config.controller)
        val = rec.metrics.max_ss_error()
        groups.setdefault(key, []).append(val)
    if not groups:
        return
    keys = sorted(groups)
    labels = [f"{t}\n{c}" for t, c in keys]
    values = [float(np.nanmean(groups[k])) for k in keys]
    fig, ax = plt.subplots(figsize=(max(6, 0.7 * len(keys)), 4))
    ax.bar(np.arange(len(keys)), values, color="tab:blue")
    ax.set_xticks(np.arange(len(keys)))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("max steady-state error [m]")
    ax.axhline(0.05, color="tab:red", lw=1.0, ls="--", label="0.05 m")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.4)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
