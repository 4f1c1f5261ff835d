"""
DDPG with a swappable critic (deterministic, L2, or alpha-BNN).

With the alpha-BNN critic, bootstrapped targets use the target critic's
posterior mean over K dropout masks, and the actor follows the MC-averaged
deterministic policy gradient

    (1/M) sum_i  d mu(s_i)/d theta . (1/K) sum_k dQ(s_i, a; mask_k)/da |_{a = mu(s_i)}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..alpha_bnn import AlphaBnnConfig, sample_masks
from ..envs import Env, EnvSpec
from ..nn import Adam, DropoutMask, Gradients, MlpNet, backward_from_cache, forward, forward_with_cache
from ..rng import RngStreams
from .policies import DeterministicPolicy
from .ppo import UpdateReport
from .value import check_mode, value_estimate, value_loss_and_grad


@dataclass(frozen=True)
class DDPGConfig:
    gamma: float = 0.99
    batch_size: int = 64
    buffer_size: int = 100_000
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    soft_update_rate: float = 0.01
    noise_scale: float = 0.1
    warmup_steps: int = 1000
    train_every: int = 2
    hidden: tuple[int, ...] = (64, 64)


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s', done) transitions."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.inserted = 0

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def add(self, state, action, reward, next_state, done) -> None:
        i = self.inserted % self.capacity
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = float(done)
        self.inserted += 1

    def sample(self, batch_size: int, rng: np.random.Generator):
        if len(self) == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, len(self), size=batch_size)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx], self.dones[idx]


def soft_update_net(target: MlpNet, online: MlpNet, rate: float) -> MlpNet:
    """Return ``rate * online + (1 - rate) * target`` parameter-wise."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"soft-update rate must lie in [0, 1], got {rate}")
    return MlpNet(
        [rate * o + (1.0 - rate) * t for t, o in zip(target.weights, online.weights)],
        [rate * o + (1.0 - rate) * t for t, o in zip(target.biases, online.biases)],
    )


@dataclass
class TargetPair:
    policy: DeterministicPolicy
    critic: MlpNet
    rate: float = 0.01

    @classmethod
    def from_online(cls, policy: DeterministicPolicy, critic: MlpNet, rate: float) -> "TargetPair":
        return cls(policy.copy(), critic.copy(), rate)


def soft_update(pair: TargetPair, policy: DeterministicPolicy, critic: MlpNet,
                rate: Optional[float] = None) -> TargetPair:
    """Blend the online networks into the targets in place; returns ``pair``."""
    rate = pair.rate if rate is None else rate
    pair.policy.net = soft_update_net(pair.policy.net, policy.net, rate)
    pair.critic = soft_update_net(pair.critic, critic, rate)
    return pair


def critic_input(states, actions) -> np.ndarray:
    return np.concatenate([np.atleast_2d(states), np.atleast_2d(actions)], axis=-1)


def ddpg_critic_targets(pair: TargetPair, rewards, next_states, dones, gamma: float,
                        cfg: AlphaBnnConfig, mode: str, rng: np.random.Generator) -> np.ndarray:
    """``y = r + gamma (1 - done) Qbar'(s', mu'(s'))``.

    Qbar' is the target critic's posterior mean over K masks in alpha-bnn mode
    and its plain output otherwise.
    """
    x = critic_input(next_states, pair.policy(next_states))
    q_next = value_estimate(pair.critic, mode, cfg, x, rng)[:, 0]
    return np.asarray(rewards, dtype=np.float64) + gamma * (1.0 - np.asarray(dones, dtype=np.float64)) * q_next


def actor_grad_and_objective(policy: DeterministicPolicy, critic: MlpNet, states,
                             masks: Optional[DropoutMask] = None) -> tuple[Gradients, float]:
    """Ascent direction and value of ``(1/M) sum_i (1/K) sum_k Q(s_i, mu(s_i); mask_k)``."""
    states = np.atleast_2d(states)
    m = len(states)
    actions = policy(states)
    q, cache = forward_with_cache(critic, critic_input(states, actions), masks)
    k = q.size // m
    g = backward_from_cache(critic, cache, np.full(q.shape, 1.0 / (m * k)), params=False)
    # g.input is already summed over the K masks
    dq_da = g.input[:, -actions.shape[1]:]
    return policy.backward(states, dq_da), float(np.mean(q))


def ddpg_actor_grad(policy: DeterministicPolicy, critic: MlpNet, states,
                    masks: Optional[DropoutMask] = None) -> Gradients:
    """Ascent direction for ``(1/M) sum_i (1/K) sum_k Q(s_i, mu(s_i); mask_k)``.

    For each of the K masks (leading shape ``(K, 1)``, shared over the batch)
    the critic is backpropagated to get dQ/da, the K results are averaged and
    chained through the policy. ``masks=None`` is the standard deterministic
    policy gradient.
    """
    return actor_grad_and_objective(policy, critic, states, masks)[0]


def actor_objective(policy: DeterministicPolicy, critic: MlpNet, states, masks: Optional[DropoutMask] = None) -> float:
    """The MC objective whose gradient ``ddpg_actor_grad`` returns."""
    states = np.atleast_2d(states)
    return float(np.mean(forward(critic, critic_input(states, policy(states)), masks)))


class DDPGAgent:
    def __init__(self, spec: EnvSpec, mode: str, bnn: AlphaBnnConfig, cfg: DDPGConfig, streams: RngStreams):
        self.spec = spec
        self.mode = check_mode(mode)
        self.bnn = bnn
        self.cfg = cfg
        self.streams = streams
        rng = streams.policy
        self.actor = DeterministicPolicy.init(spec.state_dim, spec.action_dim, cfg.hidden,
                                              spec.action_low, spec.action_high, rng)
        self.critic = MlpNet.init([spec.state_dim + spec.action_dim, *cfg.hidden, 1], rng)
        self.targets = TargetPair.from_online(self.actor, self.critic, cfg.soft_update_rate)
        self.actor_opt = Adam(self.actor.net, lr=cfg.actor_lr)
        self.critic_opt = Adam(self.critic, lr=cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_size, spec.state_dim, spec.action_dim)
        self.total_steps = 0
        self.episode_returns: list[float] = []
        self._obs: Optional[np.ndarray] = None
        self._ep_return = 0.0

    def act(self, obs) -> np.ndarray:
        return self.actor(np.atleast_2d(obs))[0]

    def _explore(self, obs) -> np.ndarray:
        spec, rng = self.spec, self.streams.env_noise
        if self.total_steps < self.cfg.warmup_steps:
            return rng.uniform(spec.action_low, spec.action_high, spec.action_dim)
        sigma = self.cfg.noise_scale * (spec.action_high - spec.action_low)
        a = self.act(obs) + sigma * rng.standard_normal(spec.action_dim)
        return np.clip(a, spec.action_low, spec.action_high)

    def train_step(self) -> tuple[float, float, float]:
        """One critic + actor update on a replay minibatch; returns (critic loss, actor objective, mean Q)."""
        if len(self.buffer) == 0:
            raise ValueError("replay buffer is empty")
        s, a, r, s2, d = self.buffer.sample(self.cfg.batch_size, self.streams.minibatch)
        drop = self.streams.dropout
        y = ddpg_critic_targets(self.targets, r, s2, d, self.cfg.gamma, self.bnn, self.mode, drop)
        loss, grads, preds = value_loss_and_grad(self.critic, self.mode, self.bnn, critic_input(s, a), y, drop)
        self.critic_opt.apply(grads)

        masks = sample_masks(self.critic, self.bnn, drop) if self.mode == "alpha-bnn" else None
        ascent, objective = actor_grad_and_objective(self.actor, self.critic, s, masks)
        self.actor_opt.apply(ascent.scale(-1.0))
        soft_update(self.targets, self.actor, self.critic)
        return loss, objective, float(np.mean(preds))

    def step(self, env: Env, n_steps: int, next_seed: Callable[[], int]) -> UpdateReport:
        return ddpg_step(self, env, n_steps, next_seed)


def ddpg_step(agent: DDPGAgent, env: Env, n_steps: int, next_seed: Callable[[], int]) -> UpdateReport:
    """Interact for ``n_steps`` with Gaussian action noise, training every ``train_every`` steps.

    ``q_estimate`` is the mean critic prediction over this block's updates.
    """
    cfg = agent.cfg
    losses, objectives, qs = [], [], []
    if agent._obs is None or env.done:
        agent._obs = env.reset(next_seed())
        agent._ep_return = 0.0
    for _ in range(n_steps):
        obs = agent._obs
        action = agent._explore(obs)
        next_obs, reward, done = env.step(action)
        agent.buffer.add(obs, action, reward, next_obs, env.terminated)
        agent.total_steps += 1
        agent._ep_return += reward
        if done:
            agent.episode_returns.append(agent._ep_return)
            agent._obs = env.reset(next_seed())
            agent._ep_return = 0.0
        else:
            agent._obs = next_obs
        ready = len(agent.buffer) >= cfg.batch_size and agent.total_steps >= cfg.warmup_steps
        if ready and agent.total_steps % cfg.train_every == 0:
            loss, obj, q = agent.train_step()
            losses.append(loss)
            objectives.append(obj)
            qs.append(q)
    if not losses:
        return UpdateReport()
    return UpdateReport(
        policy_loss=-float(np.mean(objectives)),
        value_loss=float(np.mean(losses)),
        q_estimate=float(np.mean(qs)),
    )
