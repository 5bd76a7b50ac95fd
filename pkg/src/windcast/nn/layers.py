"""Layers with explicit forward and backward passes.

Sequence tensors are laid out as (batch, time, channels). Weight matrices map
column vectors, so a dense layer computes ``x @ W.T + b``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import (
    Module,
    Param,
    get_activation,
    glorot_uniform,
    sigmoid,
    softmax,
    softmax_backward,
)


def _check_last_dim(x: np.ndarray, expected: int, who: str) -> None:
    if x.shape[-1] != expected:
        raise ValueError(f"{who}: expected last dimension {expected}, got shape {x.shape}")


class Dense(Module):
    """Affine map followed by an elementwise activation, applied over the last axis."""

    def __init__(self, n_in: int, n_out: int, activation: str = "identity", rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in, self.n_out = n_in, n_out
        self.W = Param("W", glorot_uniform(rng, (n_out, n_in), n_in, n_out))
        self.b = Param("b", np.zeros(n_out))
        self._act = get_activation(activation)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _check_last_dim(x, self.n_in, "Dense")
        z = x @ self.W.value.T + self.b.value
        y = self._act.fn(z)
        self._cache = (x, z, y)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x, z, y = self._require(self._cache)
        dz = dy * self._act.deriv(z, y)
        dz2 = dz.reshape(-1, self.n_out)
        self.W.grad += dz2.T @ x.reshape(-1, self.n_in)
        self.b.grad += dz2.sum(axis=0)
        return dz @ self.W.value


class DilatedCausalConv(Module):
    """Two-tap dilated causal convolution.

    ``out[t] = f(W1 @ x[t - d] + W2 @ x[t] + b)`` with ``x[t - d] = 0`` for
    ``t < d``, so the output has the same length as the input.
    """

    def __init__(self, c_in: int, c_out: int, dilation: int = 1, activation: str = "relu", rng=None):
        if dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {dilation}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.c_in, self.c_out, self.dilation = c_in, c_out, dilation
        fan_in = 2 * c_in
        self.W1 = Param("W1", glorot_uniform(rng, (c_out, c_in), fan_in, c_out))
        self.W2 = Param("W2", glorot_uniform(rng, (c_out, c_in), fan_in, c_out))
        self.b = Param("b", np.zeros(c_out))
        self._act = get_activation(activation)
        self._cache = None

    def _lagged(self, x: np.ndarray) -> np.ndarray:
        d = self.dilation
        lagged = np.zeros_like(x)
        if d < x.shape[1]:
            lagged[:, d:] = x[:, :-d]
        return lagged

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3:
            raise ValueError(f"DilatedCausalConv expects (batch, time, channels), got {x.shape}")
        _check_last_dim(x, self.c_in, "DilatedCausalConv")
        lagged = self._lagged(x)
        z = lagged @ self.W1.value.T + x @ self.W2.value.T + self.b.value
        y = self._act.fn(z)
        self._cache = (x, lagged, z, y)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x, lagged, z, y = self._require(self._cache)
        dz = dy * self._act.deriv(z, y)
        dz2 = dz.reshape(-1, self.c_out)
        self.W1.grad += dz2.T @ lagged.reshape(-1, self.c_in)
        self.W2.grad += dz2.T @ x.reshape(-1, self.c_in)
        self.b.grad += dz2.sum(axis=0)
        dx = dz @ self.W2.value
        d = self.dilation
        if d < x.shape[1]:
            dx[:, :-d] += (dz @ self.W1.value)[:, d:]
        return dx


class ResidualLayer(Module):
    """One dilated layer inside a residual block: ``S_out = S_in + V @ conv(S_in) + e``.

    ``V`` projects the ``channels``-wide convolution output back to the width
    of the residual stream, so input and output widths always agree.
    """

    def __init__(self, width: int, channels: int, dilation: int, activation: str = "relu", rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.width = width
        self.conv = DilatedCausalConv(width, channels, dilation, activation, rng)
        self.V = Param("V", glorot_uniform(rng, (width, channels), channels, width))
        self.e = Param("e", np.zeros(width))
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        c = self.conv.forward(x)
        self._cache = c
        return x + c @ self.V.value.T + self.e.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        c = self._require(self._cache)
        dy2 = dy.reshape(-1, self.width)
        self.V.grad += dy2.T @ c.reshape(-1, c.shape[-1])
        self.e.grad += dy2.sum(axis=0)
        return dy + self.conv.backward(dy @ self.V.value)


class ResidualBlock(Module):
    """A chain of residual dilated layers; its output is the skip-connection state."""

    def __init__(
        self,
        width: int,
        channels: int = 10,
        dilations: Sequence[int] = (1, 2, 4),
        activation: str = "relu",
        rng=None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dilations = tuple(dilations)
        self.layers = [ResidualLayer(width, channels, d, activation, rng) for d in self.dilations]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy


def residual_block_forward(x: np.ndarray, block: ResidualBlock) -> tuple[np.ndarray, np.ndarray]:
    """Run a block and return ``(output, last_layer_state)``.

    The last layer's state is the block output itself; it feeds both the next
    block and the skip sum.
    """
    out = block.forward(x)
    return out, out


class TCN(Module):
    """Residual blocks joined by skip connections, then a ReLU hidden layer.

    ``Z0 = relu(sum_j S_j)`` over the block outputs ``S_j`` and
    ``Z1 = relu(Z0 @ U_r.T + r)``. If ``n_outputs`` is given an output head
    ``Y = act(Z1 @ U.T + c)`` is applied as well (``output_activation`` is
    ``"identity"`` or ``"softmax"``).
    """

    kernel_size = 2

    def __init__(
        self,
        c_in: int = 1,
        channels: int = 10,
        dilations: Sequence[int] = (1, 2, 4),
        n_blocks: int = 1,
        hidden: int = 10,
        activation: str = "relu",
        n_outputs: int | None = None,
        output_activation: str = "identity",
        rng=None,
    ):
        if n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.c_in = c_in
        self.blocks = [ResidualBlock(c_in, channels, dilations, activation, rng) for _ in range(n_blocks)]
        self.hidden = Dense(c_in, hidden, "relu", rng)
        self.head = None
        if n_outputs is not None:
            if output_activation not in ("identity", "softmax"):
                raise ValueError("output_activation must be 'identity' or 'softmax'")
            self.head = Dense(hidden, n_outputs, "identity", rng)
        self._output_activation = output_activation
        self._cache = None

    @property
    def receptive_field(self) -> int:
        return 1 + sum((self.kernel_size - 1) * d for b in self.blocks for d in b.dilations)

    def forward(self, x: np.ndarray) -> np.ndarray:
        skip = np.zeros_like(x)
        h = x
        for block in self.blocks:
            h = block.forward(h)
            skip = skip + h
        z0 = np.maximum(skip, 0.0)
        out = self.hidden.forward(z0)
        y = None
        if self.head is not None:
            out = self.head.forward(out)
            if self._output_activation == "softmax":
                out = y = softmax(out)
        self._cache = (skip, y)
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        skip, y = self._require(self._cache)
        if self.head is not None:
            if y is not None:
                dy = softmax_backward(y, dy)
            dy = self.head.backward(dy)
        dz0 = self.hidden.backward(dy)
        dskip = dz0 * (skip > 0)
        # block j output feeds the skip sum and block j+1
        dx = np.zeros_like(dskip)
        for block in reversed(self.blocks):
            dx = block.backward(dx + dskip)
        return dx


class GRU(Module):
    """Gated recurrent unit over concatenated ``[h_prev, x_t]``, without biases.

    Per step::

        r = sigmoid(W_r @ [h, x])
        z = sigmoid(W_z @ [h, x])
        c = tanh(W_h @ [r * h, x])
        h' = (1 - z) * h + z * c
        y = sigmoid(W_o @ h')          # only when n_outputs is set

    ``forward`` folds the step over a (batch, time, n_in) sequence from a zero
    state and returns the final hidden state.
    """

    def __init__(self, n_in: int, hidden: int = 64, n_outputs: int | None = None, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in, self.hidden = n_in, hidden
        cols = hidden + n_in
        self.W_r = Param("W_r", glorot_uniform(rng, (hidden, cols), cols, hidden))
        self.W_z = Param("W_z", glorot_uniform(rng, (hidden, cols), cols, hidden))
        self.W_h = Param("W_h", glorot_uniform(rng, (hidden, cols), cols, hidden))
        self.W_o = None
        if n_outputs is not None:
            self.W_o = Param("W_o", glorot_uniform(rng, (n_outputs, hidden), hidden, n_outputs))
        self._cache = None

    def _step(self, x: np.ndarray, h: np.ndarray):
        hx = np.concatenate([h, x], axis=-1)
        r = sigmoid(hx @ self.W_r.value.T)
        z = sigmoid(hx @ self.W_z.value.T)
        rhx = np.concatenate([r * h, x], axis=-1)
        c = np.tanh(rhx @ self.W_h.value.T)
        h_new = (1.0 - z) * h + z * c
        return h_new, (h, hx, rhx, r, z, c)

    def step(self, x: np.ndarray, h_prev: np.ndarray):
        """One cell update; returns ``(h_t, y_t)`` where ``y_t`` is None without W_o."""
        _check_last_dim(x, self.n_in, "GRU")
        _check_last_dim(h_prev, self.hidden, "GRU")
        h, _ = self._step(np.asarray(x, dtype=np.float64), np.asarray(h_prev, dtype=np.float64))
        y = sigmoid(h @ self.W_o.value.T) if self.W_o is not None else None
        return h, y

    def gates(self, x: np.ndarray, h_prev: np.ndarray) -> dict[str, np.ndarray]:
        _, (_, _, _, r, z, c) = self._step(x, h_prev)
        return {"r": r, "z": z, "candidate": c}

    def forward(self, x: np.ndarray, h0: np.ndarray | None = None) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] < 1:
            raise ValueError(f"GRU expects (batch, time>=1, features), got {x.shape}")
        _check_last_dim(x, self.n_in, "GRU")
        h = np.zeros((x.shape[0], self.hidden)) if h0 is None else h0
        steps = []
        for t in range(x.shape[1]):
            h, cache = self._step(x[:, t], h)
            steps.append(cache)
        y = None
        if self.W_o is not None:
            y = sigmoid(h @ self.W_o.value.T)
        self._cache = (steps, h, y)
        return h

    def output(self) -> np.ndarray:
        """``y_T`` from the last forward pass (requires W_o)."""
        _, _, y = self._require(self._cache)
        if y is None:
            raise ValueError("GRU built without an output projection")
        return y

    def backward(self, dh: np.ndarray, dy: np.ndarray | None = None) -> np.ndarray:
        """Backpropagate from the final hidden state (and optional output ``y_T``)."""
        steps, h_last, y = self._require(self._cache)
        H = self.hidden
        dh = np.array(dh, dtype=np.float64)
        if dy is not None:
            day = dy * y * (1.0 - y)
            self.W_o.grad += day.T @ h_last
            dh = dh + day @ self.W_o.value
        Wr, Wz, Wh = self.W_r.value, self.W_z.value, self.W_h.value
        dx = np.zeros((dh.shape[0], len(steps), self.n_in))
        for t in range(len(steps) - 1, -1, -1):
            h_prev, hx, rhx, r, z, c = steps[t]
            dc = dh * z
            dz = dh * (c - h_prev)
            dh_prev = dh * (1.0 - z)
            dac = dc * (1.0 - c * c)
            self.W_h.grad += dac.T @ rhx
            drhx = dac @ Wh
            drh = drhx[:, :H]
            dx[:, t] = drhx[:, H:]
            dh_prev += drh * r
            dar = drh * h_prev * r * (1.0 - r)
            daz = dz * z * (1.0 - z)
            self.W_r.grad += dar.T @ hx
            self.W_z.grad += daz.T @ hx
            dhx = dar @ Wr + daz @ Wz
            dh_prev += dhx[:, :H]
            dx[:, t] += dhx[:, H:]
            dh = dh_prev
        self._dh0 = dh
        return dx


class RNN(Module):
    """Vanilla recurrent layer ``h' = tanh(W @ [h, x] + b)``; returns the final state."""

    def __init__(self, n_in: int, hidden: int = 64, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in, self.hidden = n_in, hidden
        cols = hidden + n_in
        self.W = Param("W", glorot_uniform(rng, (hidden, cols), cols, hidden))
        self.b = Param("b", np.zeros(hidden))
        self._cache = None

    def step(self, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
        _check_last_dim(x, self.n_in, "RNN")
        _check_last_dim(h_prev, self.hidden, "RNN")
        hx = np.concatenate([h_prev, x], axis=-1)
        return np.tanh(hx @ self.W.value.T + self.b.value)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] < 1:
            raise ValueError(f"RNN expects (batch, time>=1, features), got {x.shape}")
        _check_last_dim(x, self.n_in, "RNN")
        h = np.zeros((x.shape[0], self.hidden))
        steps = []
        for t in range(x.shape[1]):
            hx = np.concatenate([h, x[:, t]], axis=-1)
            h = np.tanh(hx @ self.W.value.T + self.b.value)
            steps.append((hx, h))
        self._cache = steps
        return h

    def backward(self, dh: np.ndarray) -> np.ndarray:
        steps = self._require(self._cache)
        H = self.hidden
        W = self.W.value
        dx = np.zeros((dh.shape[0], len(steps), self.n_in))
        for t in range(len(steps) - 1, -1, -1):
            hx, h = steps[t]
            da = dh * (1.0 - h * h)
            self.W.grad += da.T @ hx
            self.b.grad += da.sum(axis=0)
            dhx = da @ W
            dx[:, t] = dhx[:, H:]
            dh = dhx[:, :H]
        return dx


class MLP(Module):
    """Stack of dense layers; ``widths`` lists the neuron count of every layer."""

    def __init__(self, n_in: int = 20, widths: Sequence[int] = (20, 20, 20, 1), activation: str = "tanh", rng=None):
        if not widths:
            raise ValueError("MLP needs at least one layer")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.widths = tuple(widths)
        sizes = (n_in,) + self.widths
        self.layers = [
            Dense(sizes[i], sizes[i + 1], activation if i < len(widths) - 1 else "identity", rng)
            for i in range(len(widths))
        ]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy
