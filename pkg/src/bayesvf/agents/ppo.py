"""PPO-clip with a swappable value baseline (deterministic, L2, or alpha-BNN)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..advantage import Trajectory, gae, normalize_advantages
from ..alpha_bnn import AlphaBnnConfig
from ..envs import Env, EnvSpec
from ..nn import Adam, AdamState, MlpNet, adam_step
from ..rng import RngStreams
from .policies import GaussianPolicy, ppo_clip_loss
from .value import check_mode, value_estimate, value_loss_and_grad


@dataclass(frozen=True)
class PPOConfig:
    epochs: int = 10
    minibatch_size: int = 64
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    policy_lr: float = 3e-4
    value_lr: float = 3e-4
    hidden: tuple[int, ...] = (64, 64)
    anneal_lr: bool = True


@dataclass
class UpdateReport:
    policy_loss: Optional[float] = None
    value_loss: Optional[float] = None
    approx_kl: Optional[float] = None
    clip_fraction: Optional[float] = None
    q_estimate: Optional[float] = None


class PPOAgent:
    """Gaussian policy plus value network, trained on on-policy batches.

    Network initialization consumes the ``policy`` stream first, so every
    value-function mode starts from identical parameters for a given seed.
    """

    def __init__(self, spec: EnvSpec, mode: str, bnn: AlphaBnnConfig, cfg: PPOConfig, streams: RngStreams):
        self.spec = spec
        self.mode = check_mode(mode)
        self.bnn = bnn
        self.cfg = cfg
        self.streams = streams
        rng = streams.policy
        self.policy = GaussianPolicy.init(spec.state_dim, spec.action_dim, cfg.hidden,
                                          spec.action_low, spec.action_high, rng)
        self.value_net = MlpNet.init([spec.state_dim, *cfg.hidden, 1], rng)
        self.policy_opt = AdamState.for_params(self._policy_params(), lr=cfg.policy_lr)
        self.value_opt = Adam(self.value_net, lr=cfg.value_lr)
        self._obs: Optional[np.ndarray] = None
        self.episode_returns: list[float] = []
        self._ep_return = 0.0

    def _policy_params(self) -> list[np.ndarray]:
        return self.policy.net.params() + [self.policy.log_std]

    def values(self, states) -> np.ndarray:
        return value_estimate(self.value_net, self.mode, self.bnn, states, self.streams.dropout)[:, 0]

    def set_lr_fraction(self, frac: float) -> None:
        self.policy_opt.lr = self.cfg.policy_lr * frac
        self.value_opt.state.lr = self.cfg.value_lr * frac

    def collect(self, env: Env, n_steps: int, next_seed: Callable[[], int]) -> list[Trajectory]:
        """Roll the stochastic policy for ``n_steps`` environment steps.

        Episodes continue across calls. Values are left at zero; ``ppo_update``
        fills them in. Time-limit ends are truncations (bootstrapped).
        """
        segments = []
        buf: dict[str, list] = {k: [] for k in ("s", "a", "r", "d", "lp")}

        def close(final_obs, terminal):
            if not buf["r"]:
                return
            buf["d"][-1] = terminal
            segments.append(Trajectory(
                states=np.array(buf["s"]), actions=np.array(buf["a"]), rewards=np.array(buf["r"]),
                dones=np.array(buf["d"]), logps=np.array(buf["lp"]), values=np.zeros(len(buf["r"])),
                final_state=np.array(final_obs)))
            for v in buf.values():
                v.clear()

        if self._obs is None or env.done:
            self._obs = env.reset(next_seed())
            self._ep_return = 0.0
        for _ in range(n_steps):
            obs = self._obs
            action, logp = self.policy.sample(obs[None], self.streams.policy)
            next_obs, reward, done = env.step(action[0])
            buf["s"].append(obs)
            buf["a"].append(action[0])
            buf["r"].append(reward)
            buf["d"].append(False)
            buf["lp"].append(logp[0])
            self._ep_return += reward
            if done:
                close(next_obs, env.terminated)
                self.episode_returns.append(self._ep_return)
                self._obs = env.reset(next_seed())
                self._ep_return = 0.0
            else:
                self._obs = next_obs
        close(self._obs, False)
        return segments

    def update(self, trajectories: Sequence[Trajectory]) -> UpdateReport:
        return ppo_update(self, trajectories)


def _fill_values(agent: PPOAgent, trajectories: Sequence[Trajectory]) -> list[Trajectory]:
    # one batched call, so alpha-bnn uses a single K-mask set for the whole batch
    states = [t.states for t in trajectories] + [np.atleast_2d(t.final_state) for t in trajectories]
    v = agent.values(np.concatenate(states))
    out, start = [], 0
    n_total = sum(len(t) for t in trajectories)
    for i, t in enumerate(trajectories):
        out.append(replace(t, values=v[start:start + len(t)], last_value=float(v[n_total + i])))
        start += len(t)
    return out


def ppo_update(agent: PPOAgent, trajectories: Sequence[Trajectory]) -> UpdateReport:
    """Posterior-mean values -> GAE -> epochs of clipped-policy and value steps.

    Value targets are the lambda-returns, computed once and held fixed for
    all epochs.
    """
    if not trajectories:
        raise ValueError("ppo_update needs at least one trajectory")
    cfg = agent.cfg
    trajectories = _fill_values(agent, trajectories)
    adv_sets = [gae(t, cfg.gamma, cfg.lam) for t in trajectories]
    states = np.concatenate([t.states for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    old_logp = np.concatenate([t.logps for t in trajectories])
    advantages = np.concatenate([a.advantages for a in adv_sets])
    targets = np.concatenate([a.value_targets for a in adv_sets])
    if len(advantages) > 1:
        advantages = normalize_advantages(advantages)

    n = len(states)
    policy_losses, value_losses, kls, clip_fracs = [], [], [], []
    for _ in range(cfg.epochs):
        order = agent.streams.minibatch.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            loss, grads, stats = ppo_clip_loss(agent.policy, states[idx], actions[idx], old_logp[idx],
                                               advantages[idx], cfg.clip_eps)
            new_params, agent.policy_opt = adam_step(agent.policy_opt, agent._policy_params(),
                                                     grads.net.params() + [grads.log_std])
            agent.policy.net.set_params(new_params[:-1])
            agent.policy.log_std = new_params[-1]
            policy_losses.append(loss)
            kls.append(stats.approx_kl)
            clip_fracs.append(stats.clip_fraction)

            vloss, vgrads, _ = value_loss_and_grad(agent.value_net, agent.mode, agent.bnn, states[idx],
                                                   targets[idx], agent.streams.dropout)
            agent.value_opt.apply(vgrads)
            value_losses.append(vloss)

    return UpdateReport(
        policy_loss=float(np.mean(policy_losses)),
        value_loss=float(np.mean(value_losses)),
        approx_kl=float(np.mean(kls)),
        clip_fraction=float(np.mean(clip_fracs)),
    )
