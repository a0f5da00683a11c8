"""Adam training loop with a temporal train/test split."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfig, TooFewSamples
from .features import SampleSet, split_index
from .network import PARAM_SHAPES, ModelWeights, init_weights, loss_and_grad, net_forward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    split_fraction: float = 0.8

    def validate(self) -> None:
        if not 0.0 < self.split_fraction < 1.0:
            raise InvalidConfig("split_fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss"]
        rows += [f"{i + 1},{a!r},{b!r}" for i, (a, b) in enumerate(zip(self.train_loss, self.val_loss))]
        return "\n".join(rows) + "\n"


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name in PARAM_SHAPES:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / c1
            v_hat = self.v[name] / c2
            self.params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def mse_normalized(w: ModelWeights, samples: SampleSet, chunk: int = 4096) -> float:
    total = 0.0
    for lo in range(0, len(samples), chunk):
        pred = net_forward(w.params, samples.x[lo:lo + chunk])
        resid = pred - w.norm.normalize_y(samples.y[lo:lo + chunk])
        total += float(resid @ resid)
    return total / len(samples)


def train(samples: SampleSet, cfg: TrainConfig) -> tuple[ModelWeights, History]:
    """Fit the regressor on the earliest ``split_fraction`` of ``samples``.

    Validation loss is measured on the remaining (latest) samples after
    every epoch.  The generator seeded with ``cfg.seed`` drives both weight
    init and per-epoch shuffling, so identical inputs give identical weights.
    """
    cfg.validate()
    n = len(samples)
    if n < 2 * cfg.batch_size:
        raise TooFewSamples(f"need at least {2 * cfg.batch_size} samples, got {n}")
    n_train = split_index(n, cfg.split_fraction)
    if n_train == 0 or n_train == n:
        raise TooFewSamples("temporal split leaves an empty partition")
    train_set = samples.subset(np.arange(n_train))
    val_set = samples.subset(np.arange(n_train, n))

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    init_seed = int(rng.integers(0, 2**63 - 1))
    w = init_weights(init_seed, samples.norm)
    opt = Adam(w.params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    hist = History()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_train)
        running = 0.0
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, grads = loss_and_grad(w, (train_set.x[idx], train_set.y[idx]))
            opt.step(grads)
            running += loss * len(idx)
        hist.train_loss.append(running / n_train)
        hist.val_loss.append(mse_normalized(w, val_set))
        if not math.isfinite(hist.train_loss[-1]):
            log.warning("training diverged at epoch %d", epoch + 1)
        log.info("epoch %d train %.5f val %.5f", epoch + 1, hist.train_loss[-1], hist.val_loss[-1])
    return w, hist


def initial_weights(samples: SampleSet, cfg: TrainConfig) -> ModelWeights:
    """The weights :func:`train` starts from (what ``epochs=0`` returns)."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    return init_weights(int(rng.integers(0, 2**63 - 1)), samples.norm)
