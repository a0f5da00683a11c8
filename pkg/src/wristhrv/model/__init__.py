"""Convolutional error regressor: features, network, training and weight files."""

from .features import SampleSet, TrainingSample, build_samples, fit_norm, raw_windows, split_index
from .network import (
    PARAM_SHAPES,
    ModelWeights,
    NormStats,
    correct,
    forward,
    init_weights,
    loss_and_grad,
    zero_weights,
)
from .training import Adam, History, TrainConfig, initial_weights, train
from .weights_io import load_weights, save_weights

__all__ = [
    "Adam",
    "History",
    "ModelWeights",
    "NormStats",
    "PARAM_SHAPES",
    "SampleSet",
    "TrainConfig",
    "TrainingSample",
    "build_samples",
    "correct",
    "fit_norm",
    "forward",
    "init_weights",
    "initial_weights",
    "load_weights",
    "loss_and_grad",
    "raw_windows",
    "save_weights",
    "split_index",
    "train",
    "zero_weights",
]
