"""PPO and DDPG agents with deterministic, L2 or alpha-BNN value functions."""

from .ddpg import DDPGAgent, DDPGConfig, ReplayBuffer, TargetPair, ddpg_actor_grad, ddpg_critic_targets, ddpg_step, soft_update
from .policies import DeterministicPolicy, GaussianPolicy, ppo_clip_loss
from .ppo import PPOAgent, PPOConfig, UpdateReport, ppo_update
from .value import MODES

__all__ = [
    "DDPGAgent", "DDPGConfig", "ReplayBuffer", "TargetPair", "ddpg_actor_grad", "ddpg_critic_targets",
    "ddpg_step", "soft_update", "DeterministicPolicy", "GaussianPolicy", "ppo_clip_loss", "PPOAgent",
    "PPOConfig", "UpdateReport", "ppo_update", "MODES",
]
