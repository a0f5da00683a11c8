"""The fixed 1D CNN error regressor: parameters, forward pass and gradients.

Architecture (input ``(3, 64)``)::

    conv(3->16, k5) relu  conv(16->32, k5) relu  maxpool2
    conv(32->32, k3) relu  global-average-pool
    dense(32->32) relu  dense(32->1)

All convolutions are stride 1 with 'same' padding.  The network works in
normalized units; :func:`forward` maps its output back to milliseconds with
the target statistics stored next to the parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from ..errors import EmptyBatch, ShapeMismatch
from . import layers

N_CHANNELS = 3
WIDTH = 64

# name -> shape, in serialization order
PARAM_SHAPES: dict[str, tuple[int, ...]] = {
    "conv1.weight": (16, 3, 5),
    "conv1.bias": (16,),
    "conv2.weight": (32, 16, 5),
    "conv2.bias": (32,),
    "conv3.weight": (32, 32, 3),
    "conv3.bias": (32,),
    "dense1.weight": (32, 32),
    "dense1.bias": (32,),
    "dense2.weight": (1, 32),
    "dense2.bias": (1,),
}


@dataclass
class NormStats:
    """Per-channel input statistics and target statistics from the training split."""

    x_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_CHANNELS))
    x_std: np.ndarray = field(default_factory=lambda: np.ones(N_CHANNELS))
    y_mean: float = 0.0
    y_std: float = 1.0

    def normalize_x(self, x: np.ndarray) -> np.ndarray:
        return (x - self.x_mean[:, None]) / self.x_std[:, None]

    def normalize_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def denormalize_y(self, y):
        return np.asarray(y, dtype=np.float64) * self.y_std + self.y_mean

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormStats):
            return NotImplemented
        return (
            np.array_equal(self.x_mean, other.x_mean)
            and np.array_equal(self.x_std, other.x_std)
            and self.y_mean == other.y_mean
            and self.y_std == other.y_std
        )


@dataclass
class ModelWeights:
    params: dict[str, np.ndarray]
    norm: NormStats = field(default_factory=NormStats)

    def check_shapes(self) -> None:
        if list(self.params) != list(PARAM_SHAPES):
            raise ShapeMismatch(f"parameter names {list(self.params)} do not match the architecture")
        for name, shape in PARAM_SHAPES.items():
            if self.params[name].shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {self.params[name].shape}")
        if self.norm.x_mean.shape != (N_CHANNELS,) or self.norm.x_std.shape != (N_CHANNELS,):
            raise ShapeMismatch("normalization statistics do not cover 3 channels")

    def copy(self) -> "ModelWeights":
        norm = NormStats(self.norm.x_mean.copy(), self.norm.x_std.copy(), self.norm.y_mean, self.norm.y_std)
        return ModelWeights({k: v.copy() for k, v in self.params.items()}, norm)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelWeights):
            return NotImplemented
        return (
            list(self.params) == list(other.params)
            and all(np.array_equal(self.params[k], other.params[k]) for k in self.params)
            and self.norm == other.norm
        )


def fan_in(name: str) -> int:
    shape = PARAM_SHAPES[name.rsplit(".", 1)[0] + ".weight"]
    return int(np.prod(shape[1:]))


def init_weights(seed: int, norm: NormStats | None = None) -> ModelWeights:
    """Uniform(-k, k) init with ``k = sqrt(1 / fan_in)`` for weights and biases alike."""
    rng = np.random.Generator(np.random.PCG64(seed))
    params = {}
    for name, shape in PARAM_SHAPES.items():
        k = math.sqrt(1.0 / fan_in(name))
        params[name] = rng.uniform(-k, k, size=shape)
    return ModelWeights(params, norm if norm is not None else NormStats())


def zero_weights(norm: NormStats | None = None) -> ModelWeights:
    return ModelWeights(
        {name: np.zeros(shape) for name, shape in PARAM_SHAPES.items()},
        norm if norm is not None else NormStats(),
    )


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-2:] != (N_CHANNELS, WIDTH) or x.ndim not in (2, 3):
        raise ShapeMismatch(f"expected input shape (3, 64) or (batch, 3, 64), got {x.shape}")
    return x.reshape(-1, N_CHANNELS, WIDTH)


def net_forward(params: dict[str, np.ndarray], x: np.ndarray, tape: list | None = None) -> np.ndarray:
    """Normalized-unit output of shape ``(batch,)``; appends backward records to ``tape``."""
    p = params

    def rec(kind, cache, names=()):
        if tape is not None:
            tape.append((kind, cache, names))

    h, c = layers.conv1d_forward(x, p["conv1.weight"], p["conv1.bias"])
    rec("conv", c, ("conv1.weight", "conv1.bias"))
    h, c = layers.relu_forward(h)
    rec("relu", c)
    h, c = layers.conv1d_forward(h, p["conv2.weight"], p["conv2.bias"])
    rec("conv", c, ("conv2.weight", "conv2.bias"))
    h, c = layers.relu_forward(h)
    rec("relu", c)
    h, c = layers.maxpool2_forward(h)
    rec("pool", c)
    h, c = layers.conv1d_forward(h, p["conv3.weight"], p["conv3.bias"])
    rec("conv", c, ("conv3.weight", "conv3.bias"))
    h, c = layers.relu_forward(h)
    rec("relu", c)
    h, c = layers.global_avg_pool_forward(h)
    rec("gap", c)
    h, c = layers.dense_forward(h, p["dense1.weight"], p["dense1.bias"])
    rec("dense", c, ("dense1.weight", "dense1.bias"))
    h, c = layers.relu_forward(h)
    rec("relu", c)
    h, c = layers.dense_forward(h, p["dense2.weight"], p["dense2.bias"])
    rec("dense", c, ("dense2.weight", "dense2.bias"))
    return h[:, 0]


_BACKWARD = {
    "conv": layers.conv1d_backward,
    "relu": layers.relu_backward,
    "pool": layers.maxpool2_backward,
    "gap": layers.global_avg_pool_backward,
    "dense": layers.dense_backward,
}


def net_backward(tape: list, grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Replay ``tape`` in reverse from d(loss)/d(output) of shape ``(batch,)``."""
    grads: dict[str, np.ndarray] = {}
    g = grad_out[:, None]
    for kind, cache, names in reversed(tape):
        res = _BACKWARD[kind](g, cache)
        if names:
            g, d_w, d_b = res
            grads[names[0]], grads[names[1]] = d_w, d_b
        else:
            g = res
    return {name: grads[name] for name in PARAM_SHAPES}


def forward(w: ModelWeights, x) -> float | np.ndarray:
    """Predicted error in ms: a float for one ``(3, 64)`` input, an array for a batch."""
    xb = _as_batch(x)
    out = w.norm.denormalize_y(net_forward(w.params, xb))
    return float(out[0]) if np.ndim(x) == 2 else out


def _batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, tuple):
        x, y = batch
    elif hasattr(batch, "x") and hasattr(batch, "y") and np.ndim(batch.x) == 3:
        x, y = batch.x, batch.y
    else:
        batch = list(batch)
        if not batch:
            raise EmptyBatch("empty batch")
        x = np.stack([s.x for s in batch])
        y = np.array([s.y for s in batch], dtype=np.float64)
    return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)


def loss_and_grad(w: ModelWeights, batch) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error in normalized target units and its parameter gradients.

    ``batch`` is a sequence of samples (objects with ``x`` and ``y`` in ms),
    a :class:`~wristhrv.model.features.SampleSet` slice, or an ``(x, y)`` tuple.
    """
    x, y = _batch_arrays(batch)
    if len(y) == 0:
        raise EmptyBatch("empty batch")
    x = _as_batch(x)
    tape: list = []
    pred = net_forward(w.params, x, tape)
    resid = pred - w.norm.normalize_y(y)
    loss = float(resid @ resid) / len(resid)
    return loss, net_backward(tape, 2.0 * resid / len(resid))


def correct(rmssd_watch, predicted_error):
    """Adjusted RMSSD: watch value plus predicted error, floored at 0 (scalars or arrays)."""
    out = np.maximum(np.add(rmssd_watch, predicted_error, dtype=np.float64), 0.0)
    return float(out) if out.ndim == 0 else out
