"""Quantum pointwise (1x1) convolution over a bank of circuit kernels.

Each kernel turns a pixel's channel vector into ``n_qubits`` Z-expectations;
kernel outputs are concatenated along the channel axis. Inputs are arrays
whose last axis is channels; every leading axis is treated as a pixel axis.

Work is split into fixed-size pixel chunks per kernel and reduced in chunk
order, so results do not depend on how many workers ran the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitParams, expectations_batch
from .encoding import required_qubits
from .gradient import backward_batch

CHUNK = 2048


class ConfigurationError(ValueError):
    pass


@dataclass
class KernelBank:
    kernels: list
    out_channels: int | None = None

    def __post_init__(self):
        if not self.kernels:
            raise ConfigurationError("a kernel bank needs at least one circuit")
        first = self.kernels[0]
        for k in self.kernels:
            if (k.n_qubits, k.n_layers, k.entangler) != (first.n_qubits, first.n_layers,
                                                         first.entangler):
                raise ConfigurationError("all kernels must share n_qubits, L and entangler")
        if self.out_channels is None:
            self.out_channels = self.full_channels
        if not 1 <= self.out_channels <= self.full_channels:
            raise ConfigurationError(
                f"out_channels {self.out_channels} outside [1, {self.full_channels}]")

    @classmethod
    def random(cls, n_qubits: int, n_circuits: int, n_layers: int, rng: np.random.Generator,
               entangler: str = "cnot", out_channels: int | None = None) -> KernelBank:
        kernels = [CircuitParams.random(n_qubits, n_layers, rng, entangler)
                   for _ in range(n_circuits)]
        return cls(kernels, out_channels)

    @staticmethod
    def circuits_for(out_channels: int, n_qubits: int) -> int:
        return math.ceil(out_channels / n_qubits)

    @property
    def n_qubits(self) -> int:
        return self.kernels[0].n_qubits

    @property
    def n_circuits(self) -> int:
        return len(self.kernels)

    @property
    def full_channels(self) -> int:
        return self.n_circuits * self.n_qubits

    @property
    def n_params(self) -> int:
        return sum(k.n_params for k in self.kernels)


def _check_capacity(bank: KernelBank, c_in: int) -> None:
    need = required_qubits(c_in)
    if need > bank.n_qubits:
        raise ConfigurationError(
            f"{c_in} input channels need {need} qubits, kernels have {bank.n_qubits}")


def _chunks(n_pixels: int) -> list[slice]:
    return [slice(s, min(s + CHUNK, n_pixels)) for s in range(0, n_pixels, CHUNK)]


def _run(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: t(), tasks))


def qpconv_forward(bank: KernelBank, input: np.ndarray, workers: int = 1) -> np.ndarray:
    input = np.asarray(input, dtype=np.float64)
    c_in = input.shape[-1]
    _check_capacity(bank, c_in)
    pixels = input.reshape(-1, c_in)
    chunks = _chunks(pixels.shape[0])
    tasks = [(lambda k=k, s=s: expectations_batch(k, pixels[s]))
             for k in bank.kernels for s in chunks]
    results = _run(tasks, workers)
    n = bank.n_qubits
    out = np.empty((pixels.shape[0], bank.full_channels))
    for i, res in enumerate(results):
        k, s = divmod(i, len(chunks))
        out[chunks[s], k * n:(k + 1) * n] = res
    out = out[:, :bank.out_channels]
    return out.reshape(input.shape[:-1] + (bank.out_channels,))


def qpconv_backward(bank: KernelBank, input: np.ndarray, upstream: np.ndarray,
                    workers: int = 1, engine: str = "adjoint"):
    """Returns (per-kernel weight gradients, input gradient shaped like ``input``)."""
    input = np.asarray(input, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    expected = input.shape[:-1] + (bank.out_channels,)
    if upstream.shape != expected:
        raise ValueError(f"upstream shape {upstream.shape} != forward output shape {expected}")
    c_in = input.shape[-1]
    _check_capacity(bank, c_in)
    pixels = input.reshape(-1, c_in)
    up = np.zeros((pixels.shape[0], bank.full_channels))
    up[:, :bank.out_channels] = upstream.reshape(-1, bank.out_channels)
    n = bank.n_qubits
    chunks = _chunks(pixels.shape[0])
    tasks = [(lambda k=k, j=j, s=s: backward_batch(k, pixels[s], up[s, j * n:(j + 1) * n], engine))
             for j, k in enumerate(bank.kernels) for s in chunks]
    results = _run(tasks, workers)
    param_grads = [np.zeros_like(k.weights) for k in bank.kernels]
    input_grads = np.zeros_like(pixels)
    for i, (pg, ig) in enumerate(results):
        j, s = divmod(i, len(chunks))
        param_grads[j] += pg
        input_grads[chunks[s]] += ig
    return param_grads, input_grads.reshape(input.shape)


def classical_pointwise_forward(weights: np.ndarray, input: np.ndarray) -> np.ndarray:
    """Per-pixel channel mixing, output[..., k] = sum_c input[..., c] * weights[c, k]."""
    weights = np.asarray(weights, dtype=np.float64)
    input = np.asarray(input, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != input.shape[-1]:
        raise ValueError(f"weights {weights.shape} do not match {input.shape[-1]} input channels")
    return input @ weights
