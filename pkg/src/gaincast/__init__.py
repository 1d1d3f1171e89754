"""Compressed gain-window transport and short-horizon channel-gain prediction."""

__version__ = "0.1.0"

from .autodiff import Adam, Tensor, no_grad
from .autoencoder import AeModel, compression_ratio
from .data import GeneratorConfig, TrajectoryDataset, generate_trajectories
from .predictor import PredictorConfig, PredictorModel, SEPlacement
from .training import TrainPlan, TrainReport

__all__ = [
    "Adam", "Tensor", "no_grad",
    "AeModel", "compression_ratio",
    "GeneratorConfig", "TrajectoryDataset", "generate_trajectories",
    "PredictorConfig", "PredictorModel", "SEPlacement",
    "TrainPlan", "TrainReport",
    "__version__",
]
