"""Dense complex statevector simulation.

Qubit 0 is the most significant bit of the basis-state index, so for two
qubits the amplitude order is |00>, |01>, |10>, |11> with the left bit
belonging to qubit 0.

Two layers live here:

- batched kernels (``rx``, ``rz``, ``cnot``, ``cphase``, ``expect_z_all``)
  acting on arrays of shape ``(B, 2**n)``; these are what the circuit and
  gradient code run on, one row per pixel.
- the single-state API (``apply_rx`` ... ``expect_z``) over ``StateVector``.

Kernels never build a 2**n x 2**n matrix; they view the amplitude array as
``(B, 2**q, 2, 2**(n-q-1))`` and mix the two slices of the middle axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np


class InvalidQubitError(ValueError):
    pass


class InvalidGateError(ValueError):
    pass


class DimensionError(ValueError):
    pass


# Test hook: flipping this to -1 corrupts the RX kernel (see verify.corrupted_rx).
_RX_SIGN = 1.0


# =============================================================================
# Batched kernels
# =============================================================================

def _halves(amps: np.ndarray, n: int, q: int):
    v = amps.reshape(amps.shape[0], 1 << q, 2, 1 << (n - q - 1))
    return v[:, :, 0, :], v[:, :, 1, :]


def _qubit_axes(amps: np.ndarray, n: int) -> np.ndarray:
    """View with one axis per qubit (after the batch axis)."""
    return amps.reshape((amps.shape[0],) + (2,) * n)


def _index(n: int, a: int, va: int, b: int, vb: int) -> tuple:
    idx = [slice(None)] * (n + 1)
    idx[a + 1] = va
    idx[b + 1] = vb
    return tuple(idx)


def rx(amps: np.ndarray, n: int, q: int, theta: float) -> np.ndarray:
    c = cos(theta / 2)
    s = -1j * _RX_SIGN * sin(theta / 2)
    out = np.empty_like(amps)
    a0, a1 = _halves(amps, n, q)
    o0, o1 = _halves(out, n, q)
    o0[...] = c * a0 + s * a1
    o1[...] = s * a0 + c * a1
    return out


def rz(amps: np.ndarray, n: int, q: int, theta: float) -> np.ndarray:
    out = np.empty_like(amps)
    a0, a1 = _halves(amps, n, q)
    o0, o1 = _halves(out, n, q)
    o0[...] = np.exp(-0.5j * theta) * a0
    o1[...] = np.exp(0.5j * theta) * a1
    return out


def cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    out = amps.copy()
    src = _qubit_axes(amps, n)
    dst = _qubit_axes(out, n)
    dst[_index(n, control, 1, target, 0)] = src[_index(n, control, 1, target, 1)]
    dst[_index(n, control, 1, target, 1)] = src[_index(n, control, 1, target, 0)]
    return out


def cphase(amps: np.ndarray, n: int, control: int, target: int, phi: float) -> np.ndarray:
    out = amps.copy()
    dst = _qubit_axes(out, n)
    dst[_index(n, control, 1, target, 1)] *= np.exp(1j * phi)
    return out


def z_signs(n: int) -> np.ndarray:
    """(n, 2**n) table of +1/-1: entry [q, i] is +1 when bit q of i is 0."""
    idx = np.arange(1 << n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1
    return 1.0 - 2.0 * bits


def expect_z_all(amps: np.ndarray, n: int) -> np.ndarray:
    """Pauli-Z expectation of every qubit, shape (B, n)."""
    return (np.abs(amps) ** 2) @ z_signs(n).T


# =============================================================================
# Single-state API
# =============================================================================

@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError(f"n_qubits must be positive, got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.n_qubits:
            raise DimensionError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got {amps.shape[0]}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> StateVector:
        """``from_bits("10")`` is |10>, qubit 0 set."""
        return cls.basis(len(bits), int(bits, 2))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def batch(self) -> np.ndarray:
        return self.amplitudes[None, :]


def _check_qubit(state: StateVector, *qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise InvalidQubitError(f"qubit {q} out of range for {state.n_qubits} qubits")


def _check_pair(state: StateVector, control: int, target: int) -> None:
    _check_qubit(state, control, target)
    if control == target:
        raise InvalidGateError(f"control and target must differ, both are {control}")


def apply_rx(state: StateVector, qubit: int, theta: float) -> StateVector:
    _check_qubit(state, qubit)
    return StateVector(state.n_qubits, rx(state.batch(), state.n_qubits, qubit, theta)[0])


def apply_rz(state: StateVector, qubit: int, theta: float) -> StateVector:
    _check_qubit(state, qubit)
    return StateVector(state.n_qubits, rz(state.batch(), state.n_qubits, qubit, theta)[0])


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_pair(state, control, target)
    return StateVector(state.n_qubits, cnot(state.batch(), state.n_qubits, control, target)[0])


def apply_cphase(state: StateVector, control: int, target: int, phi: float) -> StateVector:
    _check_pair(state, control, target)
    return StateVector(state.n_qubits,
                       cphase(state.batch(), state.n_qubits, control, target, phi)[0])


def expect_z(state: StateVector, qubit: int) -> float:
    _check_qubit(state, qubit)
    return float(expect_z_all(state.batch(), state.n_qubits)[0, qubit])


# =============================================================================
# Gate records
# =============================================================================

GATE_KINDS = ("RX", "RZ", "CNOT", "CPHASE")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        arity = 1 if self.kind in ("RX", "RZ") else 2
        if len(self.targets) != arity:
            raise InvalidGateError(f"{self.kind} acts on {arity} qubit(s), got {self.targets}")
        if len(set(self.targets)) != arity:
            raise InvalidGateError(f"{self.kind} qubits must be distinct, got {self.targets}")
        if (self.kind == "CNOT") != (self.angle is None):
            raise InvalidGateError(f"{self.kind} angle mismatch: {self.angle}")

    def matrix(self) -> np.ndarray:
        """2x2 or 4x4 matrix; two-qubit gates use (control, target) as (high, low) bit."""
        t = self.angle
        if self.kind == "RX":
            return np.array([[cos(t / 2), -1j * sin(t / 2)],
                             [-1j * sin(t / 2), cos(t / 2)]])
        if self.kind == "RZ":
            return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
        if self.kind == "CNOT":
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        return np.diag([1, 1, 1, np.exp(1j * t)])


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if gate.kind == "RX":
        return apply_rx(state, gate.targets[0], gate.angle)
    if gate.kind == "RZ":
        return apply_rz(state, gate.targets[0], gate.angle)
    if gate.kind == "CNOT":
        return apply_cnot(state, *gate.targets)
    return apply_cphase(state, *gate.targets, gate.angle)
