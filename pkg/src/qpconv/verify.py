"""Self-check suites run by ``qpconv verify``.

Each suite compares a fast path with an oracle from :mod:`qpconv.oracles`
and reports the worst deviation it saw. Failures are reported, not raised.
"""
from __future__ import annotations

import contextlib
import tempfile
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracles
from . import statevector as sv
from .circuit import CircuitParams, run_circuit
from .classical import Conv3x3, Dense, conv3x3_forward
from .data import load_cifar10, load_idx, write_cifar10, write_idx
from .encoding import amplitude_encode, encode_batch, encode_gradient
from .gradient import GradientRequest, backward, shift_jacobian
from .qpconv import KernelBank, qpconv_forward
from .statevector import StateVector


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


@contextlib.contextmanager
def corrupted_rx():
    """Flip the sign of the RX kernel's off-diagonal terms (mutation test hook)."""
    saved = sv._RX_SIGN
    sv._RX_SIGN = -saved
    try:
        yield
    finally:
        sv._RX_SIGN = saved


def close(a, b, rtol: float, atol: float) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= np.maximum(rtol * np.abs(b), atol)))


def random_state(rng: np.random.Generator, n: int) -> StateVector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def random_circuit(rng, n_max=4, l_max=3, entangler=None) -> CircuitParams:
    n = int(rng.integers(1, n_max + 1))
    depth = int(rng.integers(1, l_max + 1))
    kind = entangler or ("cnot", "cphase")[int(rng.integers(2))]
    ranges = tuple(int(rng.integers(1, n)) if n > 1 else 1 for _ in range(depth))
    p = CircuitParams.random(n, depth, rng, kind)
    return CircuitParams(p.weights, kind, ranges)


# =============================================================================
# Suites
# =============================================================================

def suite_unitarity(rng, count=30):
    worst = 0.0
    for _ in range(count):
        p = random_circuit(rng)
        worst = max(worst, abs(run_circuit(p, random_state(rng, p.n_qubits)).norm() - 1))
    return worst <= 1e-10, f"max |norm - 1| = {worst:.2e} over {count} circuits"


def suite_dense_oracle(rng, count=20):
    worst = 0.0
    for _ in range(count):
        p = random_circuit(rng, n_max=3)
        psi = random_state(rng, p.n_qubits)
        fast = run_circuit(p, psi).amplitudes
        slow = oracles.circuit_matrix(p) @ psi.amplitudes
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    return worst <= 1e-10, f"max amplitude error {worst:.2e} over {count} circuits"


def suite_gradients(rng, count=8):
    ok = True
    fd_worst = eng_worst = 0.0
    for _ in range(count):
        p = random_circuit(rng, n_max=3, l_max=2)
        x = rng.normal(size=int(rng.integers(1, (1 << p.n_qubits) + 1)))
        if np.linalg.norm(x) < 0.1:
            x[0] += 1.0
        u = rng.normal(size=p.n_qubits)
        shift = np.einsum("i,ip->p", u, shift_jacobian(p, x[None, :])[0]).reshape(p.weights.shape)
        adj_p, adj_x = backward(GradientRequest(p, x, u), "adjoint")
        fd_p, fd_x = oracles.circuit_gradients_fd(p, x, u, h=1e-4)
        ok &= close(shift, fd_p, 1e-5, 1e-7) and close(adj_x, fd_x, 1e-5, 1e-7)
        ok &= bool(np.max(np.abs(adj_p - shift)) <= 1e-8)
        fd_worst = max(fd_worst, float(np.max(np.abs(shift - fd_p))),
                       float(np.max(np.abs(adj_x - fd_x))))
        eng_worst = max(eng_worst, float(np.max(np.abs(adj_p - shift))))
    return ok, f"shift vs FD {fd_worst:.2e}, adjoint vs shift {eng_worst:.2e}"


def suite_encoding(rng, count=200):
    worst_norm = worst_scale = 0.0
    for _ in range(count):
        c = int(rng.integers(1, 17))
        n = max(1, int(np.ceil(np.log2(max(c, 2)))))
        x = rng.normal(size=c)
        a = amplitude_encode(x, n).amplitudes
        b = amplitude_encode(x * rng.uniform(0.01, 100), n).amplitudes
        worst_norm = max(worst_norm, abs(np.linalg.norm(a) - 1))
        worst_scale = max(worst_scale, float(np.max(np.abs(a - b))))
    grad_ok = True
    for _ in range(20):
        x = rng.normal(size=4) + 0.5
        u = rng.normal(size=4)
        fd = oracles.central_difference(lambda v: float(u @ encode_batch(v[None], 2)[0][0]),
                                        x, 1e-5)
        grad_ok &= close(encode_gradient(x, 2, u), fd, 1e-5, 1e-7)
    ok = worst_norm <= 1e-12 and worst_scale <= 1e-12 and grad_ok
    return ok, (f"norm err {worst_norm:.1e}, scale err {worst_scale:.1e}, "
                f"gradient vs FD {'ok' if grad_ok else 'FAIL'}")


def suite_shape_laws(rng, count=20):
    ok = True
    for _ in range(count):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        c_in = int(rng.integers(1, (1 << n) + 1))
        h, w = (int(v) for v in rng.integers(1, 4, size=2))
        bank = KernelBank.random(n, k, 1, rng)
        img = rng.uniform(size=(h, w, c_in))
        out = qpconv_forward(bank, img)
        ok &= out.shape == (h, w, k * n) and bank.full_channels == k * n
        ok &= bool(np.all(np.abs(out) <= 1 + 1e-10))
        img2 = img.copy()
        img2[0, 0] += 1.0
        diff = np.any(qpconv_forward(bank, img2) != out, axis=-1)
        ok &= not np.any(diff.ravel()[1:])
    return ok, f"{count} banks: C_out = n_circuits * n_qubits, spatial dims kept, pixel-local"


def suite_classical(rng):
    w = rng.normal(size=(3, 3, 2, 3))
    img = rng.normal(size=(4, 5, 2))
    conv_err = float(np.max(np.abs(conv3x3_forward(w, img) - oracles.conv3x3_naive(w, img))))
    ok = conv_err <= 1e-10
    for layer, shape in ((Conv3x3(2, 3, rng), (2, 4, 4, 2)), (Dense(5, 3, rng), (4, 5))):
        x = rng.normal(size=shape)
        up = rng.normal(size=layer.forward(x).shape)
        layer.forward(x)
        gx = layer.backward(up)
        fd = oracles.central_difference(lambda v: float(np.sum(up * layer.forward(v))), x, 1e-5)
        ok &= close(gx, fd, 1e-4, 1e-6)
    return ok, f"conv vs naive loops {conv_err:.1e}; conv/dense backward vs FD"


def suite_loaders(rng):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        imgs = rng.integers(0, 256, size=(5, 4, 3), dtype=np.uint8)
        labels = rng.integers(0, 10, size=5, dtype=np.uint8)
        write_idx(imgs, labels, tmp / "i.gz", tmp / "l.gz")
        ds = load_idx(tmp / "i.gz", tmp / "l.gz")
        ok = np.array_equal(np.rint(ds.images[..., 0] * 255).astype(np.uint8), imgs)
        ok &= np.array_equal(ds.labels, labels)
        cimgs = rng.integers(0, 256, size=(3, 32, 32, 3), dtype=np.uint8)
        clabels = np.array([3, 0, 9], dtype=np.uint8)
        write_cifar10(cimgs, clabels, tmp / "c.bin")
        cds = load_cifar10([tmp / "c.bin"])
        ok &= np.array_equal(np.rint(cds.images * 255).astype(np.uint8), cimgs)
        ok &= np.array_equal(cds.labels, clabels)
    return bool(ok), "IDX (gzip) and CIFAR-10 fixtures round-trip"


SUITES = [
    ("unitarity", suite_unitarity),
    ("dense-oracle", suite_dense_oracle),
    ("gradients", suite_gradients),
    ("encoding", suite_encoding),
    ("shape-laws", suite_shape_laws),
    ("classical-layers", suite_classical),
    ("loaders", suite_loaders),
]


def run_suites(seed: int = 0) -> list[SuiteResult]:
    results = []
    for name, fn in SUITES:
        rng = np.random.default_rng([seed, len(results)])
        try:
            passed, detail = fn(rng)
        except Exception as e:  # report, never raise
            passed, detail = False, f"{type(e).__name__}: {e}"
            traceback.print_exc()
        results.append(SuiteResult(name, bool(passed), detail))
    return results


def format_report(results: list[SuiteResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}" for r in results]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} suites passed")
    return "\n".join(lines)
