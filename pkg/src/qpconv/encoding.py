"""Amplitude encoding of per-pixel channel vectors."""
from __future__ import annotations

import math

import numpy as np

from .statevector import DimensionError, StateVector

# Below this norm a vector encodes to |0...0> with zero gradient.
ZERO_NORM = 1e-9


class InvalidDataError(ValueError):
    pass


def required_qubits(c_in: int) -> int:
    """Smallest qubit count whose state space holds ``c_in`` amplitudes (at least 1)."""
    if c_in < 1:
        raise DimensionError(f"channel count must be positive, got {c_in}")
    return math.ceil(math.log2(max(c_in, 2)))


def _check(x: np.ndarray, n_qubits: int) -> None:
    if x.shape[-1] > 1 << n_qubits:
        raise DimensionError(
            f"{x.shape[-1]} values do not fit in {n_qubits} qubits ({1 << n_qubits} amplitudes)")
    if not np.all(np.isfinite(x)):
        raise InvalidDataError("channel vector contains NaN or Inf")


def encode_batch(x: np.ndarray, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Encode rows of ``x`` (shape (B, C)); returns real amplitudes (B, 2**n) and norms (B,)."""
    x = np.asarray(x, dtype=np.float64)
    _check(x, n_qubits)
    norms = np.linalg.norm(x, axis=1)
    amps = np.zeros((x.shape[0], 1 << n_qubits))
    live = norms >= ZERO_NORM
    amps[live, :x.shape[1]] = x[live] / norms[live, None]
    amps[~live, 0] = 1.0
    return amps, norms


def amplitude_encode(x, n_qubits: int) -> StateVector:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    amps, _ = encode_batch(x, n_qubits)
    return StateVector(n_qubits, amps[0])


def encode_gradient_batch(x: np.ndarray, norms: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of the encoding, row-wise.

    ``upstream`` has shape (B, 2**n); only its real part and its first C
    columns matter, since padding amplitudes are constant zero.
    """
    c = x.shape[1]
    u = np.real(upstream[:, :c])
    grads = np.zeros_like(x, dtype=np.float64)
    live = norms >= ZERO_NORM
    if np.any(live):
        xl, nl, ul = x[live], norms[live, None], u[live]
        proj = np.sum(xl * ul, axis=1, keepdims=True) / nl
        grads[live] = (ul * nl - xl * proj) / nl ** 2
    return grads


def encode_gradient(x, n_qubits: int, upstream) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    _check(x, n_qubits)
    upstream = np.asarray(upstream).reshape(1, -1)
    if upstream.shape[1] != 1 << n_qubits:
        raise DimensionError(f"upstream must have {1 << n_qubits} entries, got {upstream.shape[1]}")
    norms = np.linalg.norm(x, axis=1)
    return encode_gradient_batch(x, norms, upstream)[0]
