from math import pi

import numpy as np
import pytest

from qpconv import oracles
from qpconv.circuit import CircuitParams, forward_expectations
from qpconv.gradient import (GradientRequest, backward, backward_batch, param_shift_grad,
                             shift_jacobian)
from qpconv.statevector import DimensionError
from qpconv.verify import close, random_circuit


def _request(rng, n_max=4, l_max=3):
    p = random_circuit(rng, n_max=n_max, l_max=l_max)
    x = rng.normal(size=int(rng.integers(1, (1 << p.n_qubits) + 1)))
    if np.linalg.norm(x) < 0.1:
        x[0] += 1.0
    return GradientRequest(p, x, rng.normal(size=p.n_qubits))


def test_shift_on_single_rx_is_minus_sin():
    for theta in np.linspace(-3, 3, 9):
        p = CircuitParams(np.array([[[0.0, theta, 0.0]]]))
        assert param_shift_grad(p, [1, 0], 0, 1) == pytest.approx(-np.sin(theta), abs=1e-14)


def test_final_rz_on_z_eigenstate_has_zero_gradient():
    p = CircuitParams(np.array([[[0.4, 0.0, 1.3]]]))
    assert param_shift_grad(p, [0, 1], 0, 2) == 0.0
    assert param_shift_grad(p, [0, 1], 0, 0) == 0.0


def test_shift_matches_fd_random_three_qubit():
    rng = np.random.default_rng(0)
    p = CircuitParams.random(3, 2, rng)
    x = rng.normal(size=8)
    for q in range(3):
        u = np.eye(3)[q]
        fd, _ = oracles.circuit_gradients_fd(p, x, u, h=1e-4)
        shift = [param_shift_grad(p, x, q, i) for i in range(p.n_params)]
        assert close(np.array(shift), fd.ravel(), 1e-5, 1e-7)


def test_index_errors():
    p = CircuitParams(np.zeros((1, 1, 3)))
    with pytest.raises(IndexError):
        param_shift_grad(p, [1, 0], 0, 3)
    with pytest.raises(ValueError):
        param_shift_grad(p, [1, 0], 1, 0)


def test_shift_rule_is_exact_trig_fit():
    """theta -> <Z> is a + b cos + c sin; the fit's derivative equals the shift rule."""
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = random_circuit(rng, n_max=3, l_max=2)
        x = rng.normal(size=1 << p.n_qubits)
        idx = int(rng.integers(p.n_params))
        q = int(rng.integers(p.n_qubits))
        t0 = p.weights.flat[idx]
        samples = [0.0, 2 * pi / 3, 4 * pi / 3]
        f = [forward_expectations(p.shifted(idx, s - t0), x)[q] for s in samples]
        a_mat = np.array([[1, np.cos(s), np.sin(s)] for s in samples])
        _, b, c = np.linalg.solve(a_mat, f)
        fit_derivative = -b * np.sin(t0) + c * np.cos(t0)
        assert param_shift_grad(p, x, q, idx) == pytest.approx(fit_derivative, abs=1e-12)


# =============================================================================
# Backward engines
# =============================================================================

def test_zero_upstream_gives_zero():
    rng = np.random.default_rng(2)
    req = _request(rng)
    req.upstream[:] = 0
    for engine in ("adjoint", "shift"):
        pg, ig = backward(req, engine)
        assert not pg.any() and not ig.any()


def test_unit_upstream_picks_jacobian_row():
    rng = np.random.default_rng(3)
    p = CircuitParams.random(3, 2, rng)
    x = rng.normal(size=6)
    for q in range(3):
        pg, _ = backward(GradientRequest(p, x, np.eye(3)[q]))
        column = [param_shift_grad(p, x, q, i) for i in range(p.n_params)]
        np.testing.assert_allclose(pg.ravel(), column, atol=1e-12)


def test_engines_agree_and_match_fd():
    rng = np.random.default_rng(4)
    for _ in range(50):
        req = _request(rng)
        pa, ia = backward(req, "adjoint")
        ps, is_ = backward(req, "shift")
        assert np.max(np.abs(pa - ps)) <= 1e-8
        assert np.max(np.abs(ia - is_)) <= 1e-8


def test_fd_agreement_small_configs():
    rng = np.random.default_rng(5)
    for _ in range(15):
        req = _request(rng, n_max=3, l_max=2)
        pa, ia = backward(req, "adjoint")
        fd_p, fd_x = oracles.circuit_gradients_fd(req.params, req.x, req.upstream, h=1e-4)
        assert close(pa, fd_p, 1e-5, 1e-7)
        assert close(ia, fd_x, 1e-5, 1e-7)


def test_linear_in_upstream():
    rng = np.random.default_rng(6)
    req = _request(rng)
    u1, u2 = rng.normal(size=(2, req.params.n_qubits))
    g1 = backward(GradientRequest(req.params, req.x, u1))
    g2 = backward(GradientRequest(req.params, req.x, u2))
    g12 = backward(GradientRequest(req.params, req.x, u1 + u2))
    for a, b, c in zip(g1, g2, g12):
        np.testing.assert_allclose(a + b, c, atol=1e-10)


def test_batch_sums_parameter_grads():
    rng = np.random.default_rng(7)
    p = CircuitParams.random(2, 2, rng)
    x = rng.normal(size=(5, 4))
    u = rng.normal(size=(5, 2))
    pg, ig = backward_batch(p, x, u)
    singles = [backward(GradientRequest(p, x[i], u[i])) for i in range(5)]
    np.testing.assert_allclose(pg, sum(s[0] for s in singles), atol=1e-12)
    np.testing.assert_allclose(ig, np.stack([s[1] for s in singles]), atol=1e-12)


def test_jacobian_shape():
    p = CircuitParams.random(2, 3, np.random.default_rng(8), "cphase")
    assert shift_jacobian(p, np.ones((4, 3))).shape == (4, 2, 24)


def test_upstream_shape_checked():
    p = CircuitParams.random(2, 1, np.random.default_rng(9))
    with pytest.raises(DimensionError):
        GradientRequest(p, [1, 0], [1, 2, 3])
    with pytest.raises(ValueError):
        backward_batch(p, np.ones((2, 2)), np.ones((2, 2)), engine="spsa")
