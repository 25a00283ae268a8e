"""Shared numeric pieces for the value networks: stable softmax, sinusoidal
positional encoding, and scaled dot-product attention."""

from __future__ import annotations

import numpy as np


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along the given axis."""
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def positional_encoding(position: int, d: int) -> np.ndarray:
    """Interleaved sin/cos encoding of a nonnegative integer position.

    pe[2i] = sin(position / 10000^(2i/d)), pe[2i+1] = cos(same angle).
    """
    if position < 0:
        raise ValueError("position must be nonnegative")
    pe = np.empty(d)
    half = (d + 1) // 2
    i = np.arange(half)
    angle = position / np.power(10000.0, 2.0 * i / d)
    pe[0::2] = np.sin(angle)
    pe[1::2] = np.cos(angle[: d // 2])
    return pe


def encoding_matrix(length: int, d: int, start: int = 1) -> np.ndarray:
    """Positional encodings for positions start..start+length-1, stacked."""
    return np.stack([positional_encoding(start + i, d) for i in range(length)])


def attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V for 2-D query/key/value matrices."""
    d_k = Q.shape[-1]
    scores = Q @ K.T / np.sqrt(d_k)
    return softmax(scores, axis=-1) @ V
