from math import pi

import numpy as np
import pytest

from qpconv import oracles
from qpconv.circuit import (BlockParams, CircuitParams, apply_block, compile_ops,
                            forward_expectations, run_circuit)
from qpconv.statevector import DimensionError, StateVector, apply_cnot
from qpconv.verify import random_circuit, random_state


def test_zero_angle_block_is_cnot_ring():
    psi = random_state(np.random.default_rng(0), 2)
    out = apply_block(psi, BlockParams(np.zeros((2, 3))))
    ring = apply_cnot(apply_cnot(psi, 0, 1), 1, 0)
    np.testing.assert_allclose(out.amplitudes, ring.amplitudes, atol=1e-15)


def test_single_qubit_block_is_rz_rx_rz():
    rng = np.random.default_rng(1)
    mu = rng.uniform(0, 2 * pi, size=3)
    psi = random_state(rng, 1)
    expected = (oracles.rz_matrix(mu[2]) @ oracles.rx_matrix(mu[1])
                @ oracles.rz_matrix(mu[0]) @ psi.amplitudes)
    out = apply_block(psi, BlockParams(mu[None, :]))
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-14)


@pytest.mark.parametrize("entangler", ["cnot", "cphase"])
def test_three_qubit_block_matches_kronecker_oracle(entangler):
    rng = np.random.default_rng(2)
    for r in (1, 2):
        rot = rng.uniform(0, 2 * pi, size=(3, 3))
        phases = rng.uniform(0, 2 * pi, size=3) if entangler == "cphase" else None
        psi = random_state(rng, 3)
        out = apply_block(psi, BlockParams(rot, r, phases))
        expected = oracles.block_matrix(rot, r, phases) @ psi.amplitudes
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-10)


def test_block_qubit_mismatch():
    with pytest.raises(DimensionError):
        apply_block(StateVector.basis(3), BlockParams(np.zeros((2, 3))))


def test_zero_circuit_fixes_ground_state():
    for n in (2, 3, 4):
        p = CircuitParams(np.zeros((1, n, 3)))
        out = run_circuit(p, StateVector.basis(n))
        np.testing.assert_array_equal(out.amplitudes, StateVector.basis(n).amplitudes)


def test_two_blocks_match_dense_product():
    rng = np.random.default_rng(3)
    p = CircuitParams.random(3, 2, rng)
    psi = random_state(rng, 3)
    b1, b2 = p.blocks
    dense = oracles.block_matrix(b2.rotations, 1) @ oracles.block_matrix(b1.rotations, 1)
    np.testing.assert_allclose(run_circuit(p, psi).amplitudes, dense @ psi.amplitudes, atol=1e-10)


def test_composition_is_exact():
    rng = np.random.default_rng(4)
    p = CircuitParams.random(3, 2, rng, "cphase")
    psi = random_state(rng, 3)
    b1, b2 = p.blocks
    stepwise = apply_block(apply_block(psi, b1), b2)
    np.testing.assert_array_equal(run_circuit(p, psi).amplitudes, stepwise.amplitudes)


def test_from_blocks_round_trip():
    rng = np.random.default_rng(5)
    p = CircuitParams(rng.uniform(size=(2, 3, 4)), "cphase", (1, 2))
    q = CircuitParams.from_blocks(p.blocks)
    np.testing.assert_array_equal(q.weights, p.weights)
    assert q.ranges == p.ranges and q.entangler == "cphase"


def test_unitarity_many_random_circuits():
    rng = np.random.default_rng(6)
    for _ in range(100):
        p = random_circuit(rng)
        assert abs(run_circuit(p, random_state(rng, p.n_qubits)).norm() - 1) <= 1e-10


@pytest.mark.parametrize("n,layers,entangler,count", [(1, 1, "cnot", 3), (2, 3, "cnot", 18),
                                                      (6, 2, "cnot", 36), (3, 2, "cphase", 24)])
def test_parameter_count_law(n, layers, entangler, count):
    p = CircuitParams.random(n, layers, np.random.default_rng(0), entangler)
    assert p.n_params == count == oracles.n_params_expected(n, layers, entangler)
    params_in_ops = {op.param for op in compile_ops(p) if op.param is not None}
    assert params_in_ops == set(range(count))


def test_bad_shapes_and_ranges():
    with pytest.raises(DimensionError):
        CircuitParams(np.zeros((1, 2, 4)))
    with pytest.raises(ValueError):
        CircuitParams(np.zeros((1, 2, 3)), ranges=(2,))
    with pytest.raises(ValueError):
        BlockParams(np.zeros((3, 3)), entangle_range=3)


def test_init_uniform_over_period():
    p = CircuitParams.random(4, 50, np.random.default_rng(7))
    assert p.weights.min() >= 0 and p.weights.max() < 2 * pi
    assert abs(p.weights.mean() - pi) < 0.2


# =============================================================================
# Expectations
# =============================================================================

def test_zero_circuit_expectations_on_e0():
    p = CircuitParams(np.zeros((1, 2, 3)))
    np.testing.assert_array_equal(forward_expectations(p, [1, 0, 0, 0]), [1, 1])


def test_single_rx_expectation_is_cos():
    for theta in np.linspace(-3, 3, 7):
        p = CircuitParams(np.array([[[0.0, theta, 0.0]]]))
        assert forward_expectations(p, [1, 0])[0] == pytest.approx(np.cos(theta), abs=1e-14)


def test_expectations_match_naive_simulator():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = random_circuit(rng, n_max=3)
        x = rng.normal(size=int(rng.integers(1, (1 << p.n_qubits) + 1))) + 0.1
        np.testing.assert_allclose(forward_expectations(p, x), oracles.expectations(p, x),
                                   atol=1e-12)


def test_expectations_bounded():
    rng = np.random.default_rng(9)
    for _ in range(50):
        p = random_circuit(rng)
        z = forward_expectations(p, rng.normal(size=1 << p.n_qubits))
        assert np.all(np.abs(z) <= 1 + 1e-10)
