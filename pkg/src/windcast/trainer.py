"""MSE loss, Adam and the seeded mini-batch training loop."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .nn.core import Param
from .nn.models import Regressor
from .series import WindowedDataset

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be an integer >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class TrainTrace:
    losses: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0

    def to_csv(self, path) -> None:
        from .series import save_csv

        save_csv(path, {"epoch": range(1, len(self.losses) + 1), "loss": self.losses}, "%.17g")


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        raise ValueError("mse_loss needs at least one element")
    diff = pred - target
    n = diff.size
    return float(np.dot(diff.ravel(), diff.ravel()) / n), (2.0 / n) * diff


class Adam:
    """Bias-corrected Adam over a fixed list of parameters.

    ``m`` and ``v`` hold the first and second moment estimates per parameter.
    """

    MAX_STEPS = 2**62

    def __init__(self, params: list[Param], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.epsilon = lr, beta1, beta2, epsilon
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0

    @classmethod
    def from_config(cls, params: list[Param], cfg: TrainConfig) -> "Adam":
        return cls(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)

    def step(self) -> None:
        """Apply one update from the accumulated gradients, then zero them."""
        if self.t >= self.MAX_STEPS:
            raise OverflowError("Adam step counter overflow")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
            g.fill(0.0)


def batch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Sample permutation for one epoch; depends only on (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def _unpack(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, WindowedDataset):
        if dataset.targets.shape[1] != 1:
            raise ValueError("fit expects a single-horizon dataset; select one target column")
        return dataset.inputs, dataset.targets[:, 0]
    X, y = dataset
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64).reshape(-1)


def fit(model: Regressor, dataset, config: TrainConfig = TrainConfig()) -> TrainTrace:
    """Train ``model`` in place and return the per-epoch mean training loss.

    ``dataset`` is a single-horizon WindowedDataset or an ``(inputs, targets)``
    pair. The final partial batch is kept; the per-epoch loss is the
    sample-weighted mean of the batch losses.
    """
    X, y = _unpack(dataset)
    n = X.shape[0]
    if n == 0:
        raise ValueError("cannot fit on an empty dataset")
    if y.shape[0] != n:
        raise ValueError(f"{n} inputs but {y.shape[0]} targets")
    opt = Adam.from_config(model.params(), config)
    model.zero_grad()
    trace = TrainTrace(seed=config.seed)
    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = batch_order(n, config.seed, epoch)
        total = 0.0
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo : lo + config.batch_size]
            pred = model.forward(X[idx])
            loss, grad = mse_loss(pred, y[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch + 1}, batch {b + 1}")
            model.backward(grad)
            opt.step()
            total += loss * idx.size
        trace.losses.append(total / n)
        log.debug("epoch %d loss %.6g", epoch + 1, trace.losses[-1])
    trace.wall_time = time.perf_counter() - start
    return trace
