"""Central finite-difference checks of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Module


@dataclass
class GradCheckReport:
    tolerance: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.errors.items() if not v < self.tolerance}

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        lines = [f"{name:<40s} {err:.3e}" for name, err in self.errors.items()]
        lines.append(f"max relative error {self.max_error:.3e} (tolerance {self.tolerance:g})")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max absolute deviation scaled by the larger gradient magnitude of the tensor."""
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), floor)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def _entries(size: int, max_entries: int | None, rng: np.random.Generator) -> np.ndarray:
    if max_entries is None or size <= max_entries:
        return np.arange(size)
    return np.sort(rng.choice(size, max_entries, replace=False))


def _numeric(loss: Callable[[], float], array: np.ndarray, idx: np.ndarray, step: float) -> np.ndarray:
    flat = array.reshape(-1)
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        orig = flat[i]
        flat[i] = orig + step
        plus = loss()
        flat[i] = orig - step
        minus = loss()
        flat[i] = orig
        out[k] = (plus - minus) / (2.0 * step)
    return out


def check_gradients(
    module: Module,
    loss_and_backward: Callable[[], tuple[float, np.ndarray | None]],
    loss_only: Callable[[], float],
    inputs: np.ndarray | None = None,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic parameter (and input) gradients to central differences.

    ``loss_and_backward`` must run forward and backward from zeroed gradients
    and return the loss with the input gradient; ``loss_only`` runs forward.
    """
    rng = np.random.default_rng(seed)
    module.zero_grad()
    _, dx = loss_and_backward()
    report = GradCheckReport(tolerance)
    for name, p in module.named_params():
        idx = _entries(p.value.size, max_entries, rng)
        analytic = p.grad.reshape(-1)[idx].copy()
        numeric = _numeric(loss_only, p.value, idx, step)
        report.errors[name] = relative_error(analytic, numeric)
    if inputs is not None and dx is not None:
        idx = _entries(inputs.size, max_entries, rng)
        numeric = _numeric(loss_only, inputs, idx, step)
        report.errors["<input>"] = relative_error(dx.reshape(-1)[idx], numeric)
    module.zero_grad()
    return report


def check_layer(
    layer: Module,
    x: np.ndarray,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Grad-check a layer under the scalar loss ``sum(proj * layer(x))`` with random ``proj``."""
    x = np.array(x, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    proj = rng.standard_normal(layer.forward(x).shape)

    def loss_only() -> float:
        return float(np.sum(proj * layer.forward(x)))

    def loss_and_backward():
        value = loss_only()
        return value, layer.backward(proj)

    return check_gradients(layer, loss_and_backward, loss_only, x, step, tolerance, max_entries, seed)


def grad_check(
    model: Module,
    X: np.ndarray,
    y: np.ndarray,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Grad-check a regressor on its mean squared error over ``(X, y)``."""
    from ..trainer import mse_loss

    X = np.array(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    def loss_only() -> float:
        return mse_loss(model.forward(X), y)[0]

    def loss_and_backward():
        loss, g = mse_loss(model.forward(X), y)
        return loss, model.backward(g)

    return check_gradients(model, loss_and_backward, loss_only, X, step, tolerance, max_entries, seed)
