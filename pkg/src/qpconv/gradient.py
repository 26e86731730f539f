"""Gradients of Pauli-Z expectations of an amplitude-encoded circuit.

Two engines produce the same numbers:

``"shift"``
    parameter-shift rule, two extra circuit runs per parameter. Every
    trainable gate here is exp(-i*theta*G/2) with G having eigenvalues +-1
    (the controlled phase up to a global phase), so the half-difference at
    +-pi/2 is exact.
``"adjoint"``
    one forward run, then a reverse sweep that un-applies each gate from
    both the state and the co-state. This is the default.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .circuit import CircuitParams, Op, apply_op, compile_ops, expectations_batch, simulate
from .encoding import encode_batch, encode_gradient_batch
from .statevector import DimensionError

SHIFT = np.pi / 2
ENGINES = ("adjoint", "shift")


@dataclass
class GradientRequest:
    params: CircuitParams
    x: np.ndarray
    upstream: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        self.upstream = np.asarray(self.upstream, dtype=np.float64).reshape(-1)
        if self.upstream.shape[0] != self.params.n_qubits:
            raise DimensionError(
                f"upstream needs {self.params.n_qubits} entries, got {self.upstream.shape[0]}")
        if not np.all(np.isfinite(self.upstream)):
            raise ValueError("upstream gradient must be finite")


def param_shift_grad(params: CircuitParams, x, qubit: int, param_index: int) -> float:
    """d<Z_qubit>/d(weights.flat[param_index]) by the two-term shift rule."""
    if not 0 <= param_index < params.n_params:
        raise IndexError(f"parameter index {param_index} out of range [0, {params.n_params})")
    if not 0 <= qubit < params.n_qubits:
        raise sv.InvalidQubitError(f"qubit {qubit} out of range")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    plus = expectations_batch(params.shifted(param_index, SHIFT), x)[0, qubit]
    minus = expectations_batch(params.shifted(param_index, -SHIFT), x)[0, qubit]
    return 0.5 * (plus - minus)


def shift_jacobian(params: CircuitParams, x: np.ndarray) -> np.ndarray:
    """Full Jacobian d<Z_i>/d theta_p for each row of ``x``: shape (B, n, P)."""
    jac = np.empty((x.shape[0], params.n_qubits, params.n_params))
    for p in range(params.n_params):
        plus = expectations_batch(params.shifted(p, SHIFT), x)
        minus = expectations_batch(params.shifted(p, -SHIFT), x)
        jac[:, :, p] = 0.5 * (plus - minus)
    return jac


def _unitary(params: CircuitParams) -> np.ndarray:
    """Circuit unitary with U[:, j] = U|j>, built by running every basis state."""
    dim = 1 << params.n_qubits
    return simulate(params, np.eye(dim, dtype=np.complex128)).T


def _shift_backward(params, x, upstream):
    amps, norms = encode_batch(x, params.n_qubits)
    jac = shift_jacobian(params, x)
    param_grads = np.einsum("bi,bip->p", upstream, jac)
    u = _unitary(params)
    weights = upstream @ sv.z_signs(params.n_qubits)
    # d<O>/d psi0 = 2 Re(U^dag O U psi0) for real psi0
    lam = (u.conj().T @ (weights.T * (u @ amps.T))).T
    input_grads = encode_gradient_batch(x, norms, 2.0 * lam)
    return param_grads.reshape(params.weights.shape), input_grads


def _generator(op: Op, amps: np.ndarray, n: int) -> np.ndarray:
    """dU/dtheta applied after U, i.e. (dU/dtheta) U^dag acting on ``amps``."""
    out = amps.copy()
    if op.kind == "CPHASE":
        view = out.reshape((out.shape[0],) + (2,) * n)
        mask = [slice(None)] * (n + 1)
        mask[op.qubits[0] + 1] = 0
        view[tuple(mask)] = 0
        mask[op.qubits[0] + 1] = 1
        mask[op.qubits[1] + 1] = 0
        view[tuple(mask)] = 0
        return 1j * out
    q = op.qubits[0]
    v = out.reshape(out.shape[0], 1 << q, 2, 1 << (n - q - 1))
    if op.kind == "RZ":
        v[:, :, 1, :] *= -1
    else:
        v[:, :, [0, 1], :] = v[:, :, [1, 0], :]
    return -0.5j * out


def _adjoint_backward(params, x, upstream):
    n = params.n_qubits
    flat = params.weights.ravel()
    amps, norms = encode_batch(x, n)
    psi = simulate(params, amps)
    lam = psi * (upstream @ sv.z_signs(n))
    grads = np.zeros(params.n_params)
    for op in reversed(compile_ops(params)):
        angle = None if op.param is None else flat[op.param]
        if op.param is not None:
            mu = _generator(op, psi, n)
            grads[op.param] += 2.0 * np.sum(np.real(np.conj(lam) * mu))
        inverse = None if angle is None else -angle
        psi = apply_op(psi, n, op, inverse)
        lam = apply_op(lam, n, op, inverse)
    input_grads = encode_gradient_batch(x, norms, 2.0 * lam)
    return grads.reshape(params.weights.shape), input_grads


def backward_batch(params: CircuitParams, x: np.ndarray, upstream: np.ndarray,
                   engine: str = "adjoint") -> tuple[np.ndarray, np.ndarray]:
    """Pixel-summed parameter gradients and per-row input gradients.

    ``x`` is (B, C_in) and ``upstream`` is (B, n_qubits) holding dLoss/d<Z_i>.
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (x.shape[0], params.n_qubits):
        raise DimensionError(f"upstream shape {upstream.shape} does not match "
                             f"({x.shape[0]}, {params.n_qubits})")
    if engine == "adjoint":
        return _adjoint_backward(params, x, upstream)
    if engine == "shift":
        return _shift_backward(params, x, upstream)
    raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")


def backward(req: GradientRequest, engine: str = "adjoint") -> tuple[np.ndarray, np.ndarray]:
    pg, ig = backward_batch(req.params, req.x[None, :], req.upstream[None, :], engine)
    return pg, ig[0]
