import numpy as np
import pytest

from qpconv import oracles
from qpconv.circuit import CircuitParams, forward_expectations
from qpconv.gradient import GradientRequest, backward
from qpconv.qpconv import (ConfigurationError, KernelBank, classical_pointwise_forward,
                           qpconv_backward, qpconv_forward)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def test_channel_formula_six_qubits(rng):
    bank = KernelBank.random(6, 2, 1, rng)
    out = qpconv_forward(bank, rng.uniform(size=(2, 2, 64)))
    assert out.shape == (2, 2, 12)


def test_single_pixel_rx_identity():
    theta = 0.9
    bank = KernelBank([CircuitParams(np.array([[[0.0, theta, 0.0]]]))])
    out = qpconv_forward(bank, np.array([[[1.0, 0.0]]]))
    assert out.shape == (1, 1, 1)
    assert out[0, 0, 0] == pytest.approx(np.cos(theta), abs=1e-14)


def test_identical_pixels_identical_outputs(rng):
    bank = KernelBank.random(2, 3, 2, rng)
    img = np.tile(rng.uniform(size=4), (3, 2, 1))
    out = qpconv_forward(bank, img)
    assert np.all(out == out[0, 0])


def test_output_is_concatenation_of_kernels(rng):
    bank = KernelBank.random(2, 3, 2, rng)
    img = rng.normal(size=(2, 3, 3))
    out = qpconv_forward(bank, img)
    for i in range(2):
        for j in range(3):
            expected = np.concatenate([forward_expectations(k, img[i, j]) for k in bank.kernels])
            np.testing.assert_allclose(out[i, j], expected, atol=1e-14)


def test_truncation_drops_trailing_channels(rng):
    full = KernelBank.random(3, 3, 1, rng)
    cut = KernelBank(full.kernels, out_channels=8)
    img = rng.uniform(size=(2, 2, 5))
    np.testing.assert_array_equal(qpconv_forward(cut, img), qpconv_forward(full, img)[..., :8])
    assert KernelBank.circuits_for(64, 6) == 11


def test_capacity_checked(rng):
    bank = KernelBank.random(2, 1, 1, rng)
    with pytest.raises(ConfigurationError):
        qpconv_forward(bank, np.ones((1, 1, 5)))


def test_mixed_kernels_rejected(rng):
    with pytest.raises(ConfigurationError):
        KernelBank([CircuitParams.random(2, 1, rng), CircuitParams.random(3, 1, rng)])


@pytest.mark.parametrize("trial", range(5))
def test_channel_law_and_shapes(trial):
    rng = np.random.default_rng(100 + trial)
    n, k = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    h, w = (int(v) for v in rng.integers(1, 5, size=2))
    bank = KernelBank.random(n, k, int(rng.integers(1, 3)), rng)
    out = qpconv_forward(bank, rng.uniform(size=(h, w, int(rng.integers(1, (1 << n) + 1)))))
    assert out.shape == (h, w, n * k)
    assert np.all(np.abs(out) <= 1 + 1e-10)


def test_pixel_locality(rng):
    bank = KernelBank.random(2, 2, 2, rng)
    img = rng.uniform(size=(3, 3, 4))
    base = qpconv_forward(bank, img)
    img[1, 2] = rng.uniform(size=4)
    changed = np.any(qpconv_forward(bank, img) != base, axis=-1)
    assert changed[1, 2] and changed.sum() == 1


def test_batched_input(rng):
    bank = KernelBank.random(2, 2, 1, rng)
    imgs = rng.uniform(size=(4, 3, 3, 3))
    out = qpconv_forward(bank, imgs)
    assert out.shape == (4, 3, 3, 4)
    np.testing.assert_array_equal(out[2], qpconv_forward(bank, imgs[2]))


# =============================================================================
# Backward
# =============================================================================

def test_zero_upstream(rng):
    bank = KernelBank.random(2, 2, 2, rng)
    img = rng.uniform(size=(2, 2, 4))
    pg, ig = qpconv_backward(bank, img, np.zeros((2, 2, 4)))
    assert not any(g.any() for g in pg) and not ig.any()


def test_single_pixel_equals_circuit_backward(rng):
    bank = KernelBank.random(2, 1, 2, rng)
    x = rng.uniform(size=3)
    u = rng.normal(size=2)
    pg, ig = qpconv_backward(bank, x[None, None, :], u[None, None, :])
    ref_p, ref_x = backward(GradientRequest(bank.kernels[0], x, u))
    np.testing.assert_allclose(pg[0], ref_p, atol=1e-14)
    np.testing.assert_allclose(ig[0, 0], ref_x, atol=1e-14)


def test_backward_matches_fd_over_all_parameters(rng):
    bank = KernelBank.random(2, 2, 2, rng, out_channels=3)
    img = rng.uniform(0.1, 1, size=(2, 2, 3))
    up = rng.normal(size=(2, 2, 3))
    pg, ig = qpconv_backward(bank, img, up)

    def scalar_of(flat):
        parts = np.split(flat, len(bank.kernels))
        kernels = [k.with_weights(w.reshape(k.weights.shape))
                   for k, w in zip(bank.kernels, parts)]
        return float(np.sum(up * qpconv_forward(KernelBank(kernels, 3), img)))

    flat = np.concatenate([k.weights.ravel() for k in bank.kernels])
    fd = oracles.central_difference(scalar_of, flat, 1e-4)
    ours = np.concatenate([g.ravel() for g in pg])
    assert np.all(np.abs(ours - fd) <= np.maximum(1e-5 * np.abs(fd), 1e-7))

    fd_x = oracles.central_difference(lambda v: float(np.sum(up * qpconv_forward(bank, v))),
                                      img, 1e-5)
    assert np.all(np.abs(ig - fd_x) <= np.maximum(1e-5 * np.abs(fd_x), 1e-7))


def test_upstream_shape_checked(rng):
    bank = KernelBank.random(2, 1, 1, rng)
    with pytest.raises(ValueError):
        qpconv_backward(bank, np.ones((2, 2, 2)), np.ones((2, 2, 3)))


def test_pixel_permutation_equivariance(rng):
    bank = KernelBank.random(2, 2, 2, rng)
    img = rng.uniform(size=(3, 4, 4))
    up = rng.normal(size=(3, 4, 4))
    perm = rng.permutation(12)
    pimg = img.reshape(12, 4)[perm].reshape(3, 4, 4)
    pup = up.reshape(12, 4)[perm].reshape(3, 4, 4)
    np.testing.assert_array_equal(qpconv_forward(bank, pimg).reshape(12, 4),
                                  qpconv_forward(bank, img).reshape(12, 4)[perm])
    g1, _ = qpconv_backward(bank, img, up)
    g2, _ = qpconv_backward(bank, pimg, pup)
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_worker_count_does_not_change_results(rng, monkeypatch):
    import qpconv.qpconv as mod
    monkeypatch.setattr(mod, "CHUNK", 7)
    bank = KernelBank.random(2, 3, 2, rng)
    img = rng.uniform(size=(2, 5, 5, 4))
    up = rng.normal(size=(2, 5, 5, 6))
    f1, f4 = qpconv_forward(bank, img, 1), qpconv_forward(bank, img, 4)
    (p1, i1), (p4, i4) = qpconv_backward(bank, img, up, 1), qpconv_backward(bank, img, up, 4)
    np.testing.assert_array_equal(f1, f4)
    np.testing.assert_array_equal(i1, i4)
    for a, b in zip(p1, p4):
        np.testing.assert_array_equal(a, b)


# =============================================================================
# Classical pointwise
# =============================================================================

def test_pointwise_identity(rng):
    img = rng.normal(size=(3, 2, 4))
    np.testing.assert_array_equal(classical_pointwise_forward(np.eye(4), img), img)


def test_pointwise_sum():
    out = classical_pointwise_forward(np.array([[1.0], [1.0]]), np.array([[[2.0, 5.0]]]))
    np.testing.assert_array_equal(out, [[[7.0]]])


def test_pointwise_matches_loops(rng):
    w = rng.normal(size=(3, 5))
    img = rng.normal(size=(4, 2, 3))
    np.testing.assert_allclose(classical_pointwise_forward(w, img),
                               oracles.pointwise_naive(w, img), atol=1e-12)


def test_pointwise_shape_mismatch():
    with pytest.raises(ValueError):
        classical_pointwise_forward(np.ones((3, 2)), np.ones((2, 2, 4)))
