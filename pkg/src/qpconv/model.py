"""Sequential networks assembled from a layer list."""
from __future__ import annotations

import numpy as np

from .classical import (BatchNorm, ClassicalPointwise, Conv3x3, Dense, Dropout, Flatten,
                        Layer, ReLU)
from .config import TrainConfig, layer_shapes, qpconv_geometry
from .qpconv import KernelBank, qpconv_backward, qpconv_forward


class QuantumPointwise(Layer):
    """Bank of circuit kernels applied at every pixel; weights are the circuit angles."""

    def __init__(self, bank: KernelBank, workers: int = 1, engine: str = "adjoint"):
        super().__init__()
        self.bank = bank
        self.workers = workers
        self.engine = engine
        self.params = [k.weights for k in bank.kernels]
        self.grads = [np.zeros_like(w) for w in self.params]

    def forward(self, x, training=False):
        self._x = x
        return qpconv_forward(self.bank, x, self.workers)

    def backward(self, grad):
        pgrads, igrad = qpconv_backward(self.bank, self._x, grad, self.workers, self.engine)
        for g, pg in zip(self.grads, pgrads):
            g[...] = pg
        return igrad


class Network:
    def __init__(self, layers: list, shapes: list | None = None):
        self.layers = layers
        self.shapes = shapes
        self._checked = shapes is None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        for i, layer in enumerate(self.layers):
            x = layer.forward(x, training)
            if not self._checked and x.shape[1:] != self.shapes[i]:
                raise RuntimeError(f"layer {i} produced {x.shape[1:]}, config declared "
                                   f"{self.shapes[i]}")
        self._checked = True
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    @property
    def params(self) -> list:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list:
        return [g for layer in self.layers for g in layer.grads]

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def load_flat(self, flat: np.ndarray) -> None:
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} values, got {flat.size}")
        i = 0
        for p in self.params:
            p[...] = flat[i:i + p.size].reshape(p.shape)
            i += p.size


def build_network(cfg: TrainConfig, in_shape: tuple, n_classes: int,
                  rng: np.random.Generator) -> Network:
    shapes = layer_shapes(cfg, in_shape, n_classes)
    layers = []
    prev = tuple(in_shape)
    for i, (spec, shape) in enumerate(zip(cfg.layers, shapes)):
        o = spec.options
        if spec.kind == "conv3x3":
            layers.append(Conv3x3(prev[-1], o["channels"], rng))
        elif spec.kind == "relu":
            layers.append(ReLU())
        elif spec.kind == "bn":
            layers.append(BatchNorm(prev[-1]))
        elif spec.kind == "dropout":
            layers.append(Dropout(o.get("rate", 0.5), rng))
        elif spec.kind == "flatten":
            layers.append(Flatten())
        elif spec.kind == "dense":
            layers.append(Dense(prev[-1], o["units"], rng))
        elif spec.kind == "classical_pointwise":
            layers.append(ClassicalPointwise(prev[-1], o["channels"], rng))
        elif spec.kind == "qpconv":
            n_qubits, n_circuits, channels = qpconv_geometry(o, f"layers[{i}]")
            bank = KernelBank.random(n_qubits, n_circuits, o.get("layers", 1), rng,
                                     o.get("entangler", "cnot"), channels)
            layers.append(QuantumPointwise(bank, cfg.workers, cfg.engine))
        prev = shape
    return Network(layers, shapes)


def pointwise_param_counts(net: Network) -> list[tuple[str, int]]:
    """(kind, trainable count) for every pointwise layer, in order."""
    out = []
    for layer in net.layers:
        if isinstance(layer, QuantumPointwise):
            out.append(("qpconv", layer.n_params))
        elif isinstance(layer, ClassicalPointwise):
            out.append(("classical_pointwise", layer.n_params))
    return out
