"""Strongly entangling ansatz: L blocks of Rz-Rx-Rz rotations and an entangling ring.

Parameters of a circuit are one array ``weights`` of shape ``(L, n, k)``.
The first three columns are the per-qubit rotation angles (first Rz, Rx,
second Rz). With the ``cphase`` entangler a fourth column holds the phase
of the controlled-phase gate whose control is that qubit. Flat parameter
indices everywhere refer to ``weights.ravel()``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import statevector as sv
from .encoding import encode_batch
from .statevector import DimensionError, StateVector

ENTANGLERS = {"cnot": 3, "cphase": 4}


@dataclass
class BlockParams:
    rotations: np.ndarray
    entangle_range: int = 1
    phases: np.ndarray | None = None

    def __post_init__(self):
        self.rotations = np.asarray(self.rotations, dtype=np.float64)
        if self.rotations.ndim != 2 or self.rotations.shape[1] != 3:
            raise DimensionError(f"rotations must be n x 3, got {self.rotations.shape}")
        if not np.all(np.isfinite(self.rotations)):
            raise ValueError("rotation angles must be finite")
        n = self.rotations.shape[0]
        if n >= 2 and not 1 <= self.entangle_range < n:
            raise ValueError(f"entangle_range must be in [1, {n}), got {self.entangle_range}")
        if self.phases is not None:
            self.phases = np.asarray(self.phases, dtype=np.float64).reshape(n)

    @property
    def n_qubits(self) -> int:
        return self.rotations.shape[0]


@dataclass
class CircuitParams:
    weights: np.ndarray
    entangler: str = "cnot"
    ranges: tuple = field(default=())

    def __post_init__(self):
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {sorted(ENTANGLERS)}, got {self.entangler!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        k = ENTANGLERS[self.entangler]
        if self.weights.ndim != 3 or self.weights.shape[2] != k or self.weights.shape[0] < 1:
            raise DimensionError(
                f"{self.entangler} weights must have shape (L>=1, n, {k}), got {self.weights.shape}")
        if not self.ranges:
            self.ranges = (1,) * self.n_layers
        self.ranges = tuple(int(r) for r in self.ranges)
        if len(self.ranges) != self.n_layers:
            raise ValueError(f"need one entangle_range per block, got {len(self.ranges)}")
        n = self.n_qubits
        if n >= 2 and any(not 1 <= r < n for r in self.ranges):
            raise ValueError(f"entangle ranges must lie in [1, {n}), got {self.ranges}")
        assert self.n_params == self.n_layers * self.n_qubits * k

    @classmethod
    def random(cls, n_qubits: int, n_layers: int, rng: np.random.Generator,
               entangler: str = "cnot") -> CircuitParams:
        k = ENTANGLERS[entangler]
        return cls(rng.uniform(0.0, 2 * np.pi, size=(n_layers, n_qubits, k)), entangler)

    @classmethod
    def from_blocks(cls, blocks: list[BlockParams]) -> CircuitParams:
        has_phase = blocks[0].phases is not None
        rows = []
        for b in blocks:
            rows.append(np.column_stack([b.rotations, b.phases]) if has_phase else b.rotations)
        return cls(np.stack(rows), "cphase" if has_phase else "cnot",
                   tuple(b.entangle_range for b in blocks))

    @property
    def n_layers(self) -> int:
        return self.weights.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.weights.shape[1]

    @property
    def n_params(self) -> int:
        return self.weights.size

    @property
    def blocks(self) -> list[BlockParams]:
        cphase = self.entangler == "cphase"
        return [BlockParams(w[:, :3], r, w[:, 3] if cphase else None)
                for w, r in zip(self.weights, self.ranges)]

    def with_weights(self, weights: np.ndarray) -> CircuitParams:
        return CircuitParams(weights, self.entangler, self.ranges)

    def shifted(self, index: int, delta: float) -> CircuitParams:
        w = self.weights.copy()
        w.flat[index] += delta
        return self.with_weights(w)


# =============================================================================
# Gate sequence
# =============================================================================

@dataclass(frozen=True)
class Op:
    """One gate of the compiled circuit; ``param`` is a flat weight index or None."""
    kind: str
    qubits: tuple
    param: int | None


def block_ops(n: int, entangle_range: int, entangler: str, offset: int) -> list[Op]:
    k = ENTANGLERS[entangler]
    ops = []
    for j in range(n):
        base = offset + j * k
        ops.append(Op("RZ", (j,), base))
        ops.append(Op("RX", (j,), base + 1))
        ops.append(Op("RZ", (j,), base + 2))
    if n >= 2:
        for c in range(n):
            t = (c + entangle_range) % n
            if entangler == "cnot":
                ops.append(Op("CNOT", (c, t), None))
            else:
                ops.append(Op("CPHASE", (c, t), offset + c * k + 3))
    return ops


def compile_ops(params: CircuitParams) -> list[Op]:
    n, k = params.n_qubits, ENTANGLERS[params.entangler]
    ops = []
    for layer, r in enumerate(params.ranges):
        ops.extend(block_ops(n, r, params.entangler, layer * n * k))
    return ops


def apply_op(amps: np.ndarray, n: int, op: Op, angle: float | None) -> np.ndarray:
    if op.kind == "RZ":
        return sv.rz(amps, n, op.qubits[0], angle)
    if op.kind == "RX":
        return sv.rx(amps, n, op.qubits[0], angle)
    if op.kind == "CNOT":
        return sv.cnot(amps, n, *op.qubits)
    return sv.cphase(amps, n, *op.qubits, angle)


def simulate(params: CircuitParams, amps: np.ndarray) -> np.ndarray:
    """Run the circuit on a batch of states of shape (B, 2**n)."""
    n = params.n_qubits
    if amps.shape[1] != 1 << n:
        raise DimensionError(f"state width {amps.shape[1]} does not match {n} qubits")
    out = np.asarray(amps, dtype=np.complex128)
    flat = params.weights.ravel()
    for op in compile_ops(params):
        out = apply_op(out, n, op, None if op.param is None else flat[op.param])
    return out


def expectations_batch(params: CircuitParams, x: np.ndarray) -> np.ndarray:
    """Encode each row of ``x``, run the circuit, measure <Z> per qubit: (B, n)."""
    amps, _ = encode_batch(x, params.n_qubits)
    return sv.expect_z_all(simulate(params, amps), params.n_qubits)


# =============================================================================
# Single-state API
# =============================================================================

def apply_block(state: StateVector, block: BlockParams) -> StateVector:
    n = state.n_qubits
    if block.n_qubits != n:
        raise DimensionError(f"block has {block.n_qubits} qubits, state has {n}")
    entangler = "cnot" if block.phases is None else "cphase"
    weights = block.rotations if block.phases is None else np.column_stack(
        [block.rotations, block.phases])
    flat = weights.ravel()
    out = state.batch()
    for op in block_ops(n, block.entangle_range, entangler, 0):
        out = apply_op(out, n, op, None if op.param is None else flat[op.param])
    return StateVector(n, out[0])


def run_circuit(params: CircuitParams, input_state: StateVector) -> StateVector:
    return StateVector(params.n_qubits, simulate(params, input_state.batch())[0])


def forward_expectations(params: CircuitParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return expectations_batch(params, x)[0]
