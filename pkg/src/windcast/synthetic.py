"""Seeded synthetic wind-speed-like series: level + AR(2) + two sinusoids + noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 1000
    seed: int = 7
    level: float = 9.0
    ar1: float = 1.6
    ar2: float = -0.7
    ar_sigma: float = 0.08
    amp1: float = 2.0
    period1: float = 144.0
    amp2: float = 0.8
    period2: float = 37.0
    noise_sigma: float = 0.15
    floor: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        # stationarity triangle for AR(2)
        if not (abs(self.ar2) < 1 and self.ar2 + self.ar1 < 1 and self.ar2 - self.ar1 < 1):
            raise ValueError("AR(2) coefficients are not stationary")
        if min(self.ar_sigma, self.noise_sigma) < 0 or min(self.period1, self.period2) <= 0:
            raise ValueError("sigmas must be >= 0 and periods > 0")


def generate(cfg: SyntheticConfig = SyntheticConfig(), label: str = "synthetic") -> tuple[TimeSeries, np.ndarray]:
    """Return ``(noisy series, clean signal)``; values are clipped below at ``cfg.floor``."""
    rng = np.random.default_rng(cfg.seed)
    burn = 200
    shocks = rng.normal(0.0, cfg.ar_sigma, cfg.n + burn)
    ar = np.zeros(cfg.n + burn)
    for t in range(2, cfg.n + burn):
        ar[t] = cfg.ar1 * ar[t - 1] + cfg.ar2 * ar[t - 2] + shocks[t]
    ar = ar[burn:]
    t = np.arange(cfg.n)
    clean = (
        cfg.level
        + ar
        + cfg.amp1 * np.sin(2 * np.pi * t / cfg.period1)
        + cfg.amp2 * np.sin(2 * np.pi * t / cfg.period2 + 1.0)
    )
    noisy = clean + rng.normal(0.0, cfg.noise_sigma, cfg.n)
    clean = np.maximum(clean, cfg.floor)
    noisy = np.maximum(noisy, cfg.floor)
    return TimeSeries(noisy, origin_label=label), clean
