"""
Small deterministic continuous-control tasks.

Both environments are pure numpy, fully determined by the reset seed and the
action sequence, and give rewards <= 0. Rewards are computed from the state
*before* the transition plus the action cost.

PointMass
    1-D double integrator. State (x, v), dt = 0.05, action |a| <= 1.
    x <- x + v*dt, then v <- v + a*dt. Reward -(x - goal)^2 - 0.001 a^2,
    goal = 0. Reset: x ~ U[-1, 1], v = 0.

Pendulum
    theta measured from upright, wrapped to (-pi, pi]. Semi-implicit Euler
    with dt = 0.05, g = 10, m = l = 1, torque |a| <= 2:
    theta_dot <- theta_dot + (g/l sin(theta) + a/(m l^2)) dt, then
    theta <- theta + theta_dot dt. Observation (cos, sin, theta_dot), reward
    -(theta^2 + 0.1 theta_dot^2 + 0.001 a^2). Reset: theta ~ U[-0.15, 0.15],
    theta_dot = 0 (stabilization around the upright equilibrium).

Episodes end only at the time limit (200 steps); ``terminated`` stays False,
so agents treat episode ends as truncations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EpisodeDoneError(RuntimeError):
    """``step`` called on an environment whose episode has ended."""


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_dim: int
    action_low: float
    action_high: float
    max_steps: int
    reward_scale: str

    def __post_init__(self):
        if self.state_dim < 1 or self.action_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if not (np.isfinite(self.action_low) and np.isfinite(self.action_high)):
            raise ValueError("action bounds must be finite")
        if not self.action_low < self.action_high:
            raise ValueError("action_low must be below action_high")


class Env:
    spec: EnvSpec

    def __init__(self):
        self.steps = 0
        self.done = True
        self.terminated = False
        self.clipped_steps = 0
        self.last_action_clipped = False

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._reset_state(rng)
        self.steps = 0
        self.done = False
        self.terminated = False
        self.clipped_steps = 0
        self.last_action_clipped = False
        return self.observation()

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        if self.done:
            raise EpisodeDoneError(f"{self.spec.name}: step() after the episode ended; call reset()")
        a = np.asarray(action, dtype=np.float64).reshape(self.spec.action_dim)
        clipped = np.clip(a, self.spec.action_low, self.spec.action_high)
        self.last_action_clipped = bool(np.any(clipped != a))
        self.clipped_steps += self.last_action_clipped
        reward = self._advance(clipped)
        self.steps += 1
        self.done = self.steps >= self.spec.max_steps
        return self.observation(), float(reward), self.done

    def _reset_state(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def _advance(self, action: np.ndarray) -> float:
        raise NotImplementedError

    def observation(self) -> np.ndarray:
        raise NotImplementedError


class PointMass(Env):
    def __init__(self, dt: float = 0.05, max_steps: int = 200, goal: float = 0.0):
        super().__init__()
        self.dt = dt
        self.goal = goal
        self.spec = EnvSpec("pointmass", 2, 1, -1.0, 1.0, max_steps, "per-step cost (x-goal)^2, O(1)")
        self.x = 0.0
        self.v = 0.0

    def _reset_state(self, rng):
        self.x = float(rng.uniform(-1.0, 1.0))
        self.v = 0.0

    def _advance(self, action):
        a = float(action[0])
        reward = -((self.x - self.goal) ** 2) - 0.001 * a * a
        self.x = self.x + self.v * self.dt
        self.v = self.v + a * self.dt
        return reward

    def observation(self):
        return np.array([self.x, self.v])


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - theta, 2.0 * np.pi))


class Pendulum(Env):
    def __init__(self, dt: float = 0.05, max_steps: int = 200, g: float = 10.0,
                 mass: float = 1.0, length: float = 1.0, init_range: float = 0.15):
        super().__init__()
        self.dt = dt
        self.g = g
        self.mass = mass
        self.length = length
        self.init_range = init_range
        self.spec = EnvSpec("pendulum", 3, 1, -2.0, 2.0, max_steps, "per-step cost theta^2 + 0.1 theta_dot^2, O(10)")
        self.theta = 0.0
        self.theta_dot = 0.0

    def _reset_state(self, rng):
        self.theta = float(rng.uniform(-self.init_range, self.init_range))
        self.theta_dot = 0.0

    def set_state(self, theta: float, theta_dot: float) -> np.ndarray:
        self.theta = wrap_angle(theta)
        self.theta_dot = float(theta_dot)
        self.steps = 0
        self.done = False
        return self.observation()

    def energy(self) -> float:
        """Energy per unit m l^2, zero-torque invariant of the continuous dynamics."""
        return 0.5 * self.theta_dot**2 + (self.g / self.length) * np.cos(self.theta)

    def _advance(self, action):
        a = float(action[0])
        th, thd = self.theta, self.theta_dot
        reward = -(th * th + 0.1 * thd * thd + 0.001 * a * a)
        acc = (self.g / self.length) * np.sin(th) + a / (self.mass * self.length**2)
        thd = thd + acc * self.dt
        self.theta = wrap_angle(th + thd * self.dt)
        self.theta_dot = float(thd)
        return reward

    def observation(self):
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])


ENVIRONMENTS = {"pointmass": PointMass, "pendulum": Pendulum}


def make_env(name: str, **kwargs) -> Env:
    try:
        return ENVIRONMENTS[name.lower()](**kwargs)
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None


def rollout_return(env: Env, seed: int, policy) -> float:
    """Undiscounted return of one episode; ``policy`` maps observation -> action."""
    obs = env.reset(seed)
    total = 0.0
    done = False
    while not done:
        obs, r, done = env.step(policy(obs))
        total += r
    return total


def random_policy_baseline(env: Env, seed: int, episodes: int) -> float:
    """Mean return under uniform-random actions within the bounds."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = np.random.default_rng(seed)
    spec = env.spec
    returns = []
    for _ in range(episodes):
        ep_seed = int(rng.integers(2**31))
        returns.append(rollout_return(
            env, ep_seed, lambda _obs: rng.uniform(spec.action_low, spec.action_high, spec.action_dim)))
    return float(np.mean(returns))
