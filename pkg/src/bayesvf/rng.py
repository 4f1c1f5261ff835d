"""Named, independent random streams per trial seed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STREAM_NAMES = ("env_init", "env_noise", "policy", "dropout", "minibatch")


@dataclass
class RngStreams:
    """Five generators derived from one trial seed.

    env_init   reset seeds for training and evaluation episodes
    env_noise  exploration noise added to actions at the environment boundary
    policy     network initialization, then Gaussian action sampling
    dropout    dropout masks
    minibatch  minibatch shuffling / replay sampling

    Each stream depends only on (seed, name), so changing how much one stream
    is consumed never shifts the draws of another.
    """

    env_init: np.random.Generator
    env_noise: np.random.Generator
    policy: np.random.Generator
    dropout: np.random.Generator
    minibatch: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        return cls(*(np.random.default_rng([int(seed), i]) for i in range(len(STREAM_NAMES))))
