"""Policy-gradient agents whose value functions are alpha-divergence dropout BNNs."""

from .alpha_bnn import AlphaBnnConfig, PosteriorEstimate, alpha_energy, alpha_energy_grad, posterior_predict
from .advantage import Trajectory, gae
from .envs import Pendulum, PointMass, make_env
from .nn import MlpNet

__all__ = [
    "AlphaBnnConfig", "PosteriorEstimate", "alpha_energy", "alpha_energy_grad", "posterior_predict",
    "Trajectory", "gae", "Pendulum", "PointMass", "make_env", "MlpNet",
]
