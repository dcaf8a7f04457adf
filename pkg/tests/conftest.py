"""Shared fixtures, most importantly the trained-policy cache.

Full training of both controller variants over five seeds is expensive
(roughly 25 minutes per run on one core), so trained actor weights and
reward traces are persisted under artifacts/ and reused. Delete that
directory to retrain from scratch; training is deterministic, so the
regenerated files are byte-identical.
"""

import os

# keep BLAS single-threaded: the workload is many small matmuls and worker
# processes would otherwise oversubscribe the cores
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
ARTIFACT_DIR = REPO_ROOT / "artifacts"
WEIGHTS_DIR = ARTIFACT_DIR / "weights"

TRAIN_SEEDS = (0, 1, 2, 3, 4)
VARIANTS = ("ddpg", "ddpg-integral")


def weight_path(variant: str, seed: int) -> Path:
    return WEIGHTS_DIR / f"{variant.replace('-', '_')}_s{seed}.txt"


def trace_path(variant: str, seed: int) -> Path:
    return WEIGHTS_DIR / f"{variant.replace('-', '_')}_s{seed}_trace.csv"


def _train_job(job):
    """Worker entry: train one (variant, seed) pair and persist artifacts."""
    variant, seed, weight_file, trace_file = job
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    from platoonrl.ddpg import DdpgHyper, write_trace_csv
    from platoonrl.experiments import train_variant
    from platoonrl.mlp import save_mlp

    agent, rewards = train_variant(variant, seed, DdpgHyper())
    Path(weight_file).parent.mkdir(parents=True, exist_ok=True)
    save_mlp(agent.actor, weight_file)
    write_trace_csv(trace_file, rewards)
    return variant, seed


def ensure_trained_policies():
    """Train any missing (variant, seed) artifacts; return the path map."""
    jobs = []
    for variant in VARIANTS:
        for seed in TRAIN_SEEDS:
            wp, tp = weight_path(variant, seed), trace_path(variant, seed)
            if not (wp.exists() and tp.exists()):
                jobs.append((variant, seed, str(wp), str(tp)))
    if jobs:
        print(f"\n[conftest] training {len(jobs)} missing policy artifacts "
              "(roughly 25 min each, 2 workers); cached for future runs",
              file=sys.stderr, flush=True)
        ctx = multiprocessing.get_context("spawn")
        workers = max(1, min(2, os.cpu_count() or 1))
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for variant, seed in pool.map(_train_job, jobs):
                print(f"[conftest] trained {variant} seed {seed}",
                      file=sys.stderr, flush=True)
    return {(variant, seed): (weight_path(variant, seed), trace_path(variant, seed))
            for variant in VARIANTS for seed in TRAIN_SEEDS}


@pytest.fixture(scope="session")
def trained_policies():
    """Map (variant, seed) -> (weights path, trace path), training on demand."""
    return ensure_trained_policies()


def read_trace(path) -> list:
    rewards = []
    with open(path) as fh:
        next(fh)
        for line in fh:
            rewards.append(float(line.split(",")[1]))
    return rewards
