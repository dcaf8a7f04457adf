"""Off-policy actor-critic training: replay buffer, temporally correlated
exploration noise, target networks with soft updates, and the training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .mlp import Adam, Mlp, init_mlp, soft_update

log = logging.getLogger(__name__)


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, rng):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = np.random.default_rng(rng)
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state, done):
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


class OuNoise:
    """Mean-reverting exploration noise driven by an external generator."""

    def __init__(self, dim: int = 1, mu: float = 0.0, sigma: float = 0.15,
                 theta: float = 0.15, dt: float = 0.05):
        if sigma < 0 or theta < 0:
            raise ValueError("sigma and theta must be non-negative")
        self.mu = mu
        self.sigma = sigma
        self.theta = theta
        self.dt = dt
        self.value = np.zeros(dim)

    def reset(self):
        self.value[:] = 0.0

    def step(self, rng) -> np.ndarray:
        drift = self.theta * (self.mu - self.value) * self.dt
        diffusion = self.sigma * np.sqrt(self.dt) * rng.standard_normal(self.value.shape)
        self.value = self.value + drift + diffusion
        return self.value.copy()


@dataclass
class DdpgHyper:
    """Training hyperparameters; defaults match the platoon setup."""

    discount: float = 0.99
    tau: float = 0.005
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    batch_size: int = 64
    episodes: int = 300
    steps_per_episode: int = 1000
    dt: float = 0.05
    buffer_capacity: int = 100_000
    hidden: tuple = (256, 256)
    noise_sigma: float = 0.15
    noise_theta: float = 0.15
    actor_final_halfwidth: float = 3e-3

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class DdpgAgent:
    """Actor-critic pair with target copies, exploration noise and replay."""

    def __init__(self, state_dim: int, action_dim: int, hyper: DdpgHyper, seed):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hyper = hyper
        ss = _seed_sequence(seed)
        s_actor, s_critic, s_rng = ss.spawn(3)
        dims_a = [state_dim, *hyper.hidden, action_dim]
        dims_c = [state_dim + action_dim, *hyper.hidden, 1]
        acts_hidden = ["relu"] * len(hyper.hidden)
        self.actor = init_mlp(dims_a, acts_hidden + ["tanh"], s_actor,
                              final_halfwidth=hyper.actor_final_halfwidth)
        self.critic = init_mlp(dims_c, acts_hidden + ["identity"], s_critic)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor, lr=hyper.actor_lr)
        self.critic_opt = Adam(self.critic, lr=hyper.critic_lr)
        self.rng = np.random.default_rng(s_rng)
        self.noise = OuNoise(dim=action_dim, sigma=hyper.noise_sigma,
                             theta=hyper.noise_theta, dt=hyper.dt)
        self.buffer = ReplayBuffer(hyper.buffer_capacity, state_dim,
                                   action_dim, self.rng)

    def reseed(self, seed):
        """Reset the stochastic parts (noise rng and buffer sampling)."""
        self.rng = np.random.default_rng(_seed_sequence(seed))
        self.buffer.rng = self.rng
        self.noise.reset()

    def select_action(self, state, explore: bool) -> np.ndarray:
        action = self.actor(state)[0]
        if explore:
            action = action + self.noise.step(self.rng)
        return np.clip(action, -1.0, 1.0)

    def train_step(self, batch):
        """One critic TD step and one actor ascent step on a sampled batch,
        followed by soft target updates. Returns (critic_loss, actor_obj)."""
        states, actions, rewards, next_states, dones = batch
        n = len(states)
        if n == 0:
            raise ValueError("empty batch")
        h = self.hyper
        # critic regression toward the bootstrapped target
        next_actions = self.target_actor(next_states)
        q_next = self.target_critic(np.hstack([next_states, next_actions]))
        targets = rewards[:, None] + h.discount * (1.0 - dones[:, None]) * q_next
        q, cache_c = self.critic.forward(np.hstack([states, actions]))
        td = q - targets
        critic_loss = float(np.mean(td * td))
        grads_c = self.critic.backward(cache_c, (2.0 / n) * td)
        self.critic_opt.step(grads_c)
        # actor ascends the critic's value of its own actions
        pi, cache_a = self.actor.forward(states)
        q_pi, cache_q = self.critic.forward(np.hstack([states, pi]))
        actor_obj = float(np.mean(q_pi))
        dq_dinput = self.critic.backward(cache_q, np.full_like(q_pi, 1.0 / n),
                                         input_only=True).wrt_input
        dq_daction = dq_dinput[:, self.state_dim:]
        grads_a = self.actor.backward(cache_a, -dq_daction)
        self.actor_opt.step(grads_a)
        if not (np.isfinite(critic_loss) and np.isfinite(actor_obj)):
            raise FloatingPointError(
                f"training diverged: critic_loss={critic_loss}, "
                f"actor_obj={actor_obj}, |q|max={np.max(np.abs(q))}")
        soft_update(self.target_actor, self.actor, h.tau)
        soft_update(self.target_critic, self.critic, h.tau)
        return critic_loss, actor_obj


def moving_average(values, window: int = 10):
    """Trailing mean over at most `window` previous entries."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out.append(float(np.mean(values[lo:i + 1])))
    return out


def run_training(env, agent: DdpgAgent, hyper: DdpgHyper, seed=None):
    """Standard training loop: roll episodes with exploration, store
    transitions, one gradient step per environment step once the buffer can
    fill a batch. Returns the per-episode reward sums.

    Episode-terminating time limits are stored as non-terminal so the value
    bootstrap stays unbiased. On divergence the partial trace is returned.
    """
    if seed is not None:
        ss = _seed_sequence(seed)
        env_seed, agent_seed = ss.spawn(2)
        env.reseed(env_seed)
        agent.reseed(agent_seed)
    rewards = []
    for episode in range(hyper.episodes):
        obs = env.reset()
        agent.noise.reset()
        total = 0.0
        try:
            for _ in range(hyper.steps_per_episode):
                action = agent.select_action(obs, explore=True)
                next_obs, reward, done, info = env.step(action)
                timeout = done and not info.get("diverged", False)
                agent.buffer.push(obs, action, reward, next_obs,
                                  done and not timeout)
                total += reward
                if len(agent.buffer) >= hyper.batch_size:
                    agent.train_step(agent.buffer.sample(hyper.batch_size))
                obs = next_obs
                if done:
                    break
        except FloatingPointError as exc:
            log.warning("training aborted at episode %d: %s", episode, exc)
            rewards.append(total)
            return rewards
        rewards.append(total)
    return rewards


def write_trace_csv(path, rewards, window: int = 10):
    """Reward trace as CSV: episode, reward_sum, reward_moving_avg."""
    avg = moving_average(rewards, window)
    with open(path, "w") as fh:
        fh.write("episode,reward_sum,reward_moving_avg\n")
        for i, (r, m) in enumerate(zip(rewards, avg)):
            fh.write("%d,%.17g,%.17g\n" % (i, r, m))
