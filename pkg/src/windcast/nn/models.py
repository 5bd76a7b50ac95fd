"""Window-to-scalar regression networks used by the forecaster."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Module
from .layers import GRU, MLP, RNN, TCN, Dense


class Regressor(Module):
    """Maps input windows of shape (batch, window) to predictions of shape (batch,)."""

    def predict(self, X: np.ndarray, batch_size: int = 256) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.zeros(0)
        return np.concatenate(
            [self.forward(X[i : i + batch_size]) for i in range(0, X.shape[0], batch_size)]
        )


class TcnGru(Regressor):
    """TCN feature extractor, GRU over the full feature sequence, linear head."""

    def __init__(
        self,
        channels: int = 10,
        dilations: Sequence[int] = (1, 2, 4),
        n_blocks: int = 1,
        tcn_hidden: int = 10,
        hidden: int = 64,
        rng=None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.tcn = TCN(1, channels, dilations, n_blocks, tcn_hidden, rng=rng)
        self.gru = GRU(tcn_hidden, hidden, rng=rng)
        self.head = Dense(hidden, 1, rng=rng)

    def forward(self, X: np.ndarray) -> np.ndarray:
        feats = self.tcn.forward(X[:, :, None])
        h = self.gru.forward(feats)
        return self.head.forward(h)[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        dh = self.head.backward(dpred[:, None])
        dfeats = self.gru.backward(dh)
        return self.tcn.backward(dfeats)[:, :, 0]


class GruOnly(Regressor):
    def __init__(self, hidden: int = 64, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.gru = GRU(1, hidden, rng=rng)
        self.head = Dense(hidden, 1, rng=rng)

    def forward(self, X: np.ndarray) -> np.ndarray:
        return self.head.forward(self.gru.forward(X[:, :, None]))[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        return self.gru.backward(self.head.backward(dpred[:, None]))[:, :, 0]


class RnnOnly(Regressor):
    def __init__(self, hidden: int = 64, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.rnn = RNN(1, hidden, rng=rng)
        self.head = Dense(hidden, 1, rng=rng)

    def forward(self, X: np.ndarray) -> np.ndarray:
        return self.head.forward(self.rnn.forward(X[:, :, None]))[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        return self.rnn.backward(self.head.backward(dpred[:, None]))[:, :, 0]


class MlpRegressor(Regressor):
    def __init__(self, window: int = 20, widths: Sequence[int] = (20, 20, 20, 1), activation: str = "tanh", rng=None):
        if widths[-1] != 1:
            raise ValueError("the last MLP layer must have exactly one neuron")
        self.mlp = MLP(window, widths, activation, rng)

    def forward(self, X: np.ndarray) -> np.ndarray:
        return self.mlp.forward(X)[:, 0]

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        return self.mlp.backward(dpred[:, None])
