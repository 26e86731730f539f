"""Brute-force reference computations.

Everything here is deliberately naive: full 2**n x 2**n matrices built with
Kronecker products, explicit loops, central differences. None of it shares
code with the fast paths it checks, so only use it for small sizes.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .circuit import ENTANGLERS, CircuitParams

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]])


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def embed(gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Single-qubit gate on ``qubit`` (qubit 0 leftmost in the Kronecker product)."""
    return kron_all([gate if q == qubit else I2 for q in range(n)])


def controlled(gate: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    """|0><0|_c (x) I + |1><1|_c (x) gate_t."""
    off = kron_all([P0 if q == control else I2 for q in range(n)])
    on = kron_all([P1 if q == control else gate if q == target else I2 for q in range(n)])
    return off + on


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    return controlled(X, control, target, n)


def cphase_matrix(control: int, target: int, phi: float, n: int) -> np.ndarray:
    return controlled(np.diag([1, np.exp(1j * phi)]), control, target, n)


def block_matrix(rotations: np.ndarray, entangle_range: int, phases=None) -> np.ndarray:
    """Dense unitary of one block: all local Rz-Rx-Rz rotations, then the entangling ring."""
    n = rotations.shape[0]
    local = kron_all([rz_matrix(r[2]) @ rx_matrix(r[1]) @ rz_matrix(r[0]) for r in rotations])
    u = local
    if n >= 2:
        for c in range(n):
            t = (c + entangle_range) % n
            g = cnot_matrix(c, t, n) if phases is None else cphase_matrix(c, t, phases[c], n)
            u = g @ u
    return u


def circuit_matrix(params: CircuitParams) -> np.ndarray:
    u = np.eye(1 << params.n_qubits, dtype=complex)
    cphase = params.entangler == "cphase"
    for w, r in zip(params.weights, params.ranges):
        u = block_matrix(w[:, :3], r, w[:, 3] if cphase else None) @ u
    return u


def z_observable(qubit: int, n: int) -> np.ndarray:
    return embed(Z, qubit, n)


def expectations(params: CircuitParams, x) -> np.ndarray:
    """<Z_i> for every qubit via explicit normalization and dense matrices."""
    n = params.n_qubits
    x = np.asarray(x, dtype=float)
    psi = np.zeros(1 << n, dtype=complex)
    psi[:x.size] = x / np.sqrt(np.sum(x ** 2))
    out = circuit_matrix(params) @ psi
    return np.array([np.real(out.conj() @ z_observable(q, n) @ out) for q in range(n)])


def central_difference(f, x: np.ndarray, h: float) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by central differences, any array shape."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        orig = x.flat[i]
        x.flat[i] = orig + h
        fp = f(x)
        x.flat[i] = orig - h
        fm = f(x)
        x.flat[i] = orig
        grad.flat[i] = (fp - fm) / (2 * h)
    return grad


def circuit_gradients_fd(params: CircuitParams, x, upstream, h: float = 1e-4):
    """(param_grads, input_grads) of sum_i upstream_i <Z_i> by central differences."""
    upstream = np.asarray(upstream, dtype=float)

    def by_weights(w):
        return float(upstream @ expectations(params.with_weights(w.reshape(params.weights.shape)), x))

    def by_input(v):
        return float(upstream @ expectations(params, v))

    pg = central_difference(by_weights, params.weights.ravel(), h).reshape(params.weights.shape)
    ig = central_difference(by_input, np.asarray(x, dtype=float), h)
    return pg, ig


def n_params_expected(n_qubits: int, n_layers: int, entangler: str) -> int:
    return n_layers * n_qubits * ENTANGLERS[entangler]


def conv3x3_naive(weights: np.ndarray, image: np.ndarray) -> np.ndarray:
    """Six nested loops over (h, w, out, in, di, dj); zero padding of one pixel."""
    h, w, c_in = image.shape
    c_out = weights.shape[3]
    out = np.zeros((h, w, c_out))
    for i in range(h):
        for j in range(w):
            for o in range(c_out):
                acc = 0.0
                for c in range(c_in):
                    for di in range(3):
                        for dj in range(3):
                            ii, jj = i + di - 1, j + dj - 1
                            if 0 <= ii < h and 0 <= jj < w:
                                acc += image[ii, jj, c] * weights[di, dj, c, o]
                out[i, j, o] = acc
    return out


def pointwise_naive(weights: np.ndarray, image: np.ndarray) -> np.ndarray:
    h, w, c_in = image.shape
    out = np.zeros((h, w, weights.shape[1]))
    for i in range(h):
        for j in range(w):
            for k in range(weights.shape[1]):
                out[i, j, k] = sum(image[i, j, c] * weights[c, k] for c in range(c_in))
    return out
