"""Singular spectrum analysis and Pearson-gated adaptive reconstruction.

The series is embedded into its Hankel trajectory matrix, split by SVD into
rank-one elementary matrices, and each elementary matrix is turned back into a
series by anti-diagonal averaging. Adaptive denoising keeps the shortest
prefix of leading components whose sum correlates with the original series
at or above a threshold, and discards the rest as noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import DataError, TimeSeries

RANK_CUTOFF = 1e-12


@dataclass(frozen=True)
class PssaConfig:
    embed_dim: int = 15
    pearson_threshold: float = 0.99

    def __post_init__(self):
        if int(self.embed_dim) != self.embed_dim or self.embed_dim < 2:
            raise ValueError(f"embed_dim must be an integer >= 2, got {self.embed_dim}")
        if not 0.0 < self.pearson_threshold <= 1.0:
            raise ValueError(
                f"pearson_threshold must lie in (0, 1], got {self.pearson_threshold}"
            )


@dataclass(frozen=True)
class SsaDecomposition:
    """Elementary reconstructed series ordered by descending singular value.

    ``singular_values`` holds all ``min(S, K)`` values; only the first ``rank``
    (those above ``RANK_CUTOFF`` times the largest) have a component.
    """

    singular_values: np.ndarray
    components: np.ndarray  # (rank, N)
    embed_dim: int

    @property
    def rank(self) -> int:
        return self.components.shape[0]

    def reconstruct(self, m: int | None = None) -> np.ndarray:
        """Sum of the first ``m`` components (all of them by default)."""
        m = self.rank if m is None else m
        return self.components[:m].sum(axis=0)


@dataclass(frozen=True)
class PssaResult:
    denoised: TimeSeries
    m_used: int
    achieved_r: float
    decomposition: SsaDecomposition


def _as_array(ts) -> np.ndarray:
    if isinstance(ts, TimeSeries):
        return ts.values
    return np.asarray(ts, dtype=np.float64).reshape(-1)


def embed(ts, S: int) -> np.ndarray:
    """Trajectory matrix of shape (S, N - S + 1) with ``t[i, j] = c[i + j]``."""
    c = _as_array(ts)
    n = c.size
    if not 2 <= S <= n:
        raise ValueError(f"embedding dimension must satisfy 2 <= S <= N={n}, got {S}")
    k = n - S + 1
    return np.lib.stride_tricks.sliding_window_view(c, k)[:S].copy()


def diagonal_average(matrix: np.ndarray) -> np.ndarray:
    """Average each anti-diagonal of an (S, K) matrix into a series of length S + K - 1."""
    y = np.asarray(matrix, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("diagonal_average expects a 2-D matrix")
    if not np.all(np.isfinite(y)):
        raise ValueError("matrix contains non-finite entries")
    s, k = y.shape
    out = np.zeros(s + k - 1)
    counts = np.zeros(s + k - 1)
    # running mean over the shorter side; exact when an anti-diagonal is constant
    if s <= k:
        for i in range(s):
            counts[i : i + k] += 1
            out[i : i + k] += (y[i] - out[i : i + k]) / counts[i : i + k]
    else:
        for j in range(k):
            counts[j : j + s] += 1
            out[j : j + s] += (y[:, j] - out[j : j + s]) / counts[j : j + s]
    return out


def decompose(ts, S: int) -> SsaDecomposition:
    c = _as_array(ts)
    if not np.all(np.isfinite(c)):
        raise ValueError("cannot decompose a series with non-finite values")
    traj = embed(c, S)
    u, sigma, vt = np.linalg.svd(traj, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return SsaDecomposition(sigma, np.zeros((0, c.size)), S)
    rank = int(np.count_nonzero(sigma > RANK_CUTOFF * sigma[0]))
    comps = np.empty((rank, c.size))
    for i in range(rank):
        comps[i] = diagonal_average(sigma[i] * np.outer(u[:, i], vt[i]))
    return SsaDecomposition(sigma, comps, S)


def pearson(a, b) -> float:
    a = _as_array(a)
    b = _as_array(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("pearson needs at least two points")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.dot(da, da))
    nb = np.sqrt(np.dot(db, db))
    if na == 0.0 or nb == 0.0:
        raise ValueError("pearson undefined for a zero-variance series")
    r = float(np.dot(da, db) / (na * nb))
    return min(1.0, max(-1.0, r))


def select_prefix(decomp: SsaDecomposition, original, threshold: float) -> tuple[int, float]:
    """Smallest m whose m-component sum reaches ``threshold`` correlation.

    Falls back to the full rank when no shorter prefix qualifies. A prefix
    whose sum is constant has undefined correlation and never qualifies.
    """
    c = _as_array(original)
    running = np.zeros_like(c)
    r = float("nan")
    for m in range(1, decomp.rank + 1):
        running += decomp.components[m - 1]
        if np.ptp(running) == 0.0:
            continue
        r = pearson(running, c)
        if r >= threshold:
            return m, r
    return decomp.rank, r


def pssa_denoise(ts: TimeSeries, cfg: PssaConfig = PssaConfig()) -> PssaResult:
    """Adaptive SSA denoising: keep leading components until correlation >= threshold."""
    c = _as_array(ts)
    if c.size < cfg.embed_dim:
        raise DataError(
            f"series of length {c.size} is shorter than the embedding dimension {cfg.embed_dim}"
        )
    if np.ptp(c) == 0.0:
        raise DataError("cannot denoise a constant series: correlation is undefined")
    decomp = decompose(c, cfg.embed_dim)
    m, r = select_prefix(decomp, c, cfg.pearson_threshold)
    denoised = decomp.reconstruct(m)
    if isinstance(ts, TimeSeries):
        out = ts.with_values(denoised)
    else:
        out = TimeSeries(denoised)
    return PssaResult(out, m, r, decomp)
