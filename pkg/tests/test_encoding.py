from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qpconv.encoding import (InvalidDataError, amplitude_encode, encode_batch, encode_gradient,
                             required_qubits)
from qpconv.oracles import central_difference
from qpconv.statevector import DimensionError


@pytest.mark.parametrize("c_in,expected", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (64, 6)])
def test_required_qubits(c_in, expected):
    assert required_qubits(c_in) == expected


def test_required_qubits_rejects_zero():
    with pytest.raises(DimensionError):
        required_qubits(0)


def test_basis_vector_unchanged():
    np.testing.assert_array_equal(amplitude_encode([1, 0, 0, 0], 2).amplitudes, [1, 0, 0, 0])


def test_three_four_five():
    np.testing.assert_allclose(amplitude_encode([3, 4], 1).amplitudes, [0.6, 0.8])


def test_padding_is_zero():
    s = 1 / sqrt(3)
    np.testing.assert_allclose(amplitude_encode([1, 1, 1], 2).amplitudes, [s, s, s, 0])


def test_negative_values_allowed():
    np.testing.assert_allclose(amplitude_encode([-3, 4], 1).amplitudes, [-0.6, 0.8])


def test_zero_vector_maps_to_ground_state():
    np.testing.assert_array_equal(amplitude_encode([0, 0, 0], 2).amplitudes, [1, 0, 0, 0])
    np.testing.assert_array_equal(encode_gradient([0, 0, 0], 2, np.ones(4)), [0, 0, 0])


def test_too_long():
    with pytest.raises(DimensionError):
        amplitude_encode(np.ones(5), 2)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite(bad):
    with pytest.raises(InvalidDataError):
        amplitude_encode([1.0, bad], 1)


@settings(max_examples=100, deadline=None)
@given(x=arrays(np.float64, st.integers(1, 16), elements=st.floats(-10, 10)),
       scale=st.floats(1e-3, 1e3))
def test_unit_norm_and_scale_invariance(x, scale):
    if np.linalg.norm(x) < 1e-6:
        x = x + 1.0
    n = required_qubits(x.size)
    a = amplitude_encode(x, n).amplitudes
    assert abs(np.linalg.norm(a) - 1) <= 1e-12
    np.testing.assert_allclose(amplitude_encode(scale * x, n).amplitudes, a, atol=1e-12)


# =============================================================================
# Gradient of the encoding
# =============================================================================

def test_gradient_at_basis_vector():
    np.testing.assert_allclose(encode_gradient([1, 0], 1, [0, 1]), [0, 1])


def test_gradient_three_four_matches_fd():
    rng = np.random.default_rng(0)
    x = np.array([3.0, 4.0])
    u = rng.normal(size=2)
    fd = central_difference(lambda v: float(u @ encode_batch(v[None], 1)[0][0]), x, 1e-5)
    np.testing.assert_allclose(encode_gradient(x, 1, u), fd, atol=1e-6)


def test_gradient_along_radial_direction_vanishes():
    x = np.ones(4)
    a = amplitude_encode(x, 2).amplitudes
    np.testing.assert_allclose(encode_gradient(x, 2, a), 0, atol=1e-15)


def test_gradient_ignores_padding_and_imaginary_parts():
    x = np.array([1.0, 2.0, 2.0])
    u = np.array([0.3, -0.2, 0.5, 0.0])
    g = encode_gradient(x, 2, u)
    np.testing.assert_allclose(encode_gradient(x, 2, u + np.array([0, 0, 0, 9.0]) + 5j), g)


def test_gradient_random_pairs_match_fd():
    rng = np.random.default_rng(1)
    for _ in range(100):
        c = int(rng.integers(1, 9))
        n = required_qubits(c)
        x = rng.normal(size=c)
        if np.linalg.norm(x) < 0.1:
            continue
        u = rng.normal(size=1 << n)
        fd = central_difference(lambda v: float(u @ encode_batch(v[None], n)[0][0]), x, 1e-5)
        g = encode_gradient(x, n, u)
        assert np.all(np.abs(g - fd) <= np.maximum(1e-5 * np.abs(fd), 1e-7))
