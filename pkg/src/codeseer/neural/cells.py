"""Recurrent cells, forward and backward, written directly on numpy.

The GRU step is
    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    c = tanh(W x + r * (U h) + b)
    h' = (1 - z) * h + z * c
so the update gate z blends fresh context c into prior context h.
Inputs are row vectors (or batches of rows); weights carry the
(hidden, input) orientation, applied as x @ W.T.
"""

from dataclasses import dataclass, fields

import numpy as np

from .ops import require_finite, sigmoid, xavier_uniform


@dataclass
class GRUCellParams:
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator,
             dtype=np.float32) -> "GRUCellParams":
        def w():
            return xavier_uniform(rng, hidden_dim, input_dim, dtype)

        def u():
            return xavier_uniform(rng, hidden_dim, hidden_dim, dtype)

        def b():
            return np.zeros(hidden_dim, dtype=dtype)

        return cls(W_z=w(), U_z=u(), b_z=b(), W_r=w(), U_r=u(), b_r=b(),
                   W=w(), U=u(), b=b())

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def astype(self, dtype) -> "GRUCellParams":
        return GRUCellParams(**{name: arr.astype(dtype) for name, arr in self.named_arrays()})


@dataclass
class RNNCellParams:
    W_x: np.ndarray
    W_h: np.ndarray
    b: np.ndarray

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator,
             dtype=np.float32) -> "RNNCellParams":
        return cls(W_x=xavier_uniform(rng, hidden_dim, input_dim, dtype),
                   W_h=xavier_uniform(rng, hidden_dim, hidden_dim, dtype),
                   b=np.zeros(hidden_dim, dtype=dtype))

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def astype(self, dtype) -> "RNNCellParams":
        return RNNCellParams(**{name: arr.astype(dtype) for name, arr in self.named_arrays()})


def _gru_step(x: np.ndarray, h_prev: np.ndarray, p: GRUCellParams):
    """One GRU step; returns (h_next, cache for backprop)."""
    z = sigmoid(x @ p.W_z.T + h_prev @ p.U_z.T + p.b_z)
    r = sigmoid(x @ p.W_r.T + h_prev @ p.U_r.T + p.b_r)
    u = h_prev @ p.U.T
    c = np.tanh(x @ p.W.T + r * u + p.b)
    h = (1.0 - z) * h_prev + z * c
    return h, (x, h_prev, z, r, u, c)


def _gru_backstep(dh: np.ndarray, cache, p: GRUCellParams, grads: dict, prefix: str):
    """Backprop one GRU step; returns (dh_prev, dx)."""
    x, h_prev, z, r, u, c = cache
    dz = dh * (c - h_prev)
    da_c = dh * z * (1.0 - c * c)
    du = da_c * r
    da_r = da_c * u * r * (1.0 - r)
    da_z = dz * z * (1.0 - z)

    grads[prefix + "W"] += da_c.T @ x
    grads[prefix + "U"] += du.T @ h_prev
    grads[prefix + "b"] += da_c.sum(axis=0)
    grads[prefix + "W_r"] += da_r.T @ x
    grads[prefix + "U_r"] += da_r.T @ h_prev
    grads[prefix + "b_r"] += da_r.sum(axis=0)
    grads[prefix + "W_z"] += da_z.T @ x
    grads[prefix + "U_z"] += da_z.T @ h_prev
    grads[prefix + "b_z"] += da_z.sum(axis=0)

    dh_prev = dh * (1.0 - z) + du @ p.U + da_r @ p.U_r + da_z @ p.U_z
    dx = da_c @ p.W + da_r @ p.W_r + da_z @ p.W_z
    return dh_prev, dx


def _rnn_step(x: np.ndarray, h_prev: np.ndarray, p: RNNCellParams):
    h = np.tanh(x @ p.W_x.T + h_prev @ p.W_h.T + p.b)
    return h, (x, h_prev, h)


def _rnn_backstep(dh: np.ndarray, cache, p: RNNCellParams, grads: dict, prefix: str):
    x, h_prev, h = cache
    da = dh * (1.0 - h * h)
    grads[prefix + "W_x"] += da.T @ x
    grads[prefix + "W_h"] += da.T @ h_prev
    grads[prefix + "b"] += da.sum(axis=0)
    return da @ p.W_h, da @ p.W_x


def gru_cell_forward(x: np.ndarray, h_prev: np.ndarray, params: GRUCellParams) -> np.ndarray:
    """Public single-step GRU; validates inputs are finite."""
    x = np.asarray(x)
    h_prev = np.asarray(h_prev)
    require_finite("gru_cell_forward inputs", x, h_prev)
    h, _ = _gru_step(x, h_prev, params)
    return h


def rnn_cell_forward(x: np.ndarray, h_prev: np.ndarray, params: RNNCellParams) -> np.ndarray:
    """Public single-step tanh RNN; validates inputs are finite."""
    x = np.asarray(x)
    h_prev = np.asarray(h_prev)
    require_finite("rnn_cell_forward inputs", x, h_prev)
    h, _ = _rnn_step(x, h_prev, params)
    return h
