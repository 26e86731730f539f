"""Quantum pointwise convolution: a statevector-simulated 1x1 conv layer and its training stack."""
from .circuit import BlockParams, CircuitParams, apply_block, forward_expectations, run_circuit
from .encoding import amplitude_encode, encode_gradient, required_qubits
from .gradient import GradientRequest, backward, param_shift_grad
from .qpconv import KernelBank, classical_pointwise_forward, qpconv_backward, qpconv_forward
from .statevector import (Gate, StateVector, apply_cnot, apply_cphase, apply_rx, apply_rz,
                          expect_z)

__version__ = "0.1.0"
