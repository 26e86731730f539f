"""Run configuration: JSON on disk, dataclasses in memory.

Example::

    {
      "name": "fashion-2class",
      "dataset": {"name": "fashion-mnist", "root": "../data/fashion-mnist",
                  "classes": [0, 1], "train_per_class": 100, "test_per_class": 50,
                  "size": [8, 8]},
      "layers": [{"kind": "conv3x3", "channels": 4}, {"kind": "relu"},
                 {"kind": "qpconv", "n_qubits": 2, "n_circuits": 2, "layers": 2},
                 {"kind": "flatten"}, {"kind": "dense", "units": 2}],
      "optimizer": {"lr0": 0.01},
      "schedule": {"epochs": 15, "cosine": true},
      "batch": {"train": 128, "test": 64},
      "seed": 42
    }

Relative dataset paths resolve against the directory holding the config file.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .circuit import ENTANGLERS
from .encoding import required_qubits

LAYER_OPTIONS = {
    "conv3x3": {"channels"},
    "relu": set(),
    "bn": set(),
    "dropout": {"rate"},
    "qpconv": {"n_qubits", "n_circuits", "channels", "layers", "entangler"},
    "classical_pointwise": {"channels"},
    "flatten": set(),
    "dense": {"units"},
}
DATASETS = ("fashion-mnist", "cifar10")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class DatasetSpec:
    name: str = "fashion-mnist"
    root: str = "data/fashion-mnist"
    train_files: list = field(default_factory=list)
    test_files: list = field(default_factory=list)
    classes: list = field(default_factory=lambda: [0, 1])
    train_per_class: int = 100
    test_per_class: int = 50
    size: list = field(default_factory=lambda: [8, 8])


@dataclass
class LayerSpec:
    kind: str
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.options}

    @classmethod
    def from_dict(cls, d: dict, where: str) -> LayerSpec:
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError(where, "layer entries need a 'kind'")
        kind = d["kind"]
        if kind not in LAYER_OPTIONS:
            raise ConfigError(f"{where}.kind", f"unknown layer kind {kind!r}")
        options = {k: v for k, v in d.items() if k != "kind"}
        extra = set(options) - LAYER_OPTIONS[kind]
        if extra:
            raise ConfigError(where, f"unexpected options {sorted(extra)} for {kind}")
        return cls(kind, options)


@dataclass
class OptimizerSpec:
    lr0: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class ScheduleSpec:
    epochs: int = 15
    cosine: bool = True


@dataclass
class BatchSpec:
    train: int = 128
    test: int = 64


@dataclass
class TrainConfig:
    name: str = "run"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    layers: list = field(default_factory=list)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    batch: BatchSpec = field(default_factory=BatchSpec)
    seed: int = 42
    workers: int = 1
    engine: str = "adjoint"
    record_time: bool = False
    out: str = "runs/run"
    base_dir: str = field(default=".", compare=False)

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if f.name == "layers":
                v = [layer.to_dict() for layer in v]
            elif hasattr(v, "__dataclass_fields__"):
                v = asdict(v)
            d[f.name] = v
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def digest(self) -> bytes:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).digest()

    def replace(self, **changes) -> TrainConfig:
        new = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(new, k, v)
        return new

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def _section(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(where, "expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}")
    return cls(**data)


def from_dict(d: dict, base_dir: str = ".") -> TrainConfig:
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    allowed = {f.name for f in fields(TrainConfig)} - {"base_dir"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    layers = d.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ConfigError("layers", "need a non-empty list of layers")
    cfg = TrainConfig(
        name=d.get("name", "run"),
        dataset=_section(DatasetSpec, d.get("dataset"), "dataset"),
        layers=[LayerSpec.from_dict(x, f"layers[{i}]") for i, x in enumerate(layers)],
        optimizer=_section(OptimizerSpec, d.get("optimizer"), "optimizer"),
        schedule=_section(ScheduleSpec, d.get("schedule"), "schedule"),
        batch=_section(BatchSpec, d.get("batch"), "batch"),
        seed=d.get("seed", 42),
        workers=d.get("workers", 1),
        engine=d.get("engine", "adjoint"),
        record_time=d.get("record_time", False),
        out=d.get("out", "runs/run"),
        base_dir=base_dir,
    )
    check_scalars(cfg)
    return cfg


def loads(text: str, base_dir: str = ".") -> TrainConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<root>", f"invalid JSON: {e}") from None
    return from_dict(d, base_dir)


def load(path) -> TrainConfig:
    path = Path(path)
    return loads(path.read_text(), str(path.parent))


def _positive_int(value, where):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(where, f"expected a positive integer, got {value!r}")


def check_scalars(cfg: TrainConfig) -> None:
    ds = cfg.dataset
    if ds.name not in DATASETS:
        raise ConfigError("dataset.name", f"expected one of {DATASETS}, got {ds.name!r}")
    _positive_int(ds.train_per_class, "dataset.train_per_class")
    _positive_int(ds.test_per_class, "dataset.test_per_class")
    if not ds.classes or len(set(ds.classes)) != len(ds.classes):
        raise ConfigError("dataset.classes", "need distinct class indices")
    if ds.size is not None and (len(ds.size) != 2 or min(ds.size) < 1):
        raise ConfigError("dataset.size", f"expected [H, W], got {ds.size}")
    if not cfg.optimizer.lr0 > 0:
        raise ConfigError("optimizer.lr0", "learning rate must be positive")
    if not isinstance(cfg.schedule.epochs, int) or cfg.schedule.epochs < 0:
        raise ConfigError("schedule.epochs", f"expected a non-negative integer, got "
                                             f"{cfg.schedule.epochs!r}")
    _positive_int(cfg.batch.train, "batch.train")
    _positive_int(cfg.batch.test, "batch.test")
    _positive_int(cfg.workers, "workers")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed", f"expected a non-negative integer, got {cfg.seed!r}")
    if cfg.engine not in ("adjoint", "shift"):
        raise ConfigError("engine", f"expected 'adjoint' or 'shift', got {cfg.engine!r}")


def qpconv_geometry(opts: dict, where: str) -> tuple[int, int, int]:
    """(n_qubits, n_circuits, out_channels) of a qpconv layer spec."""
    n_qubits = opts.get("n_qubits")
    _positive_int(n_qubits, f"{where}.n_qubits")
    if "n_circuits" in opts:
        _positive_int(opts["n_circuits"], f"{where}.n_circuits")
        n_circuits = opts["n_circuits"]
        channels = opts.get("channels", n_circuits * n_qubits)
        _positive_int(channels, f"{where}.channels")
        if channels > n_circuits * n_qubits:
            raise ConfigError(f"{where}.channels",
                              f"{channels} exceeds n_circuits * n_qubits = {n_circuits * n_qubits}")
    elif "channels" in opts:
        channels = opts["channels"]
        _positive_int(channels, f"{where}.channels")
        n_circuits = -(-channels // n_qubits)
    else:
        raise ConfigError(where, "qpconv needs n_circuits or channels")
    return n_qubits, n_circuits, channels


def layer_shapes(cfg: TrainConfig, in_shape: tuple, n_classes: int) -> list[tuple]:
    """Propagate the per-sample shape through the layer chain; returns each layer's output."""
    shape = tuple(in_shape)
    shapes = []
    last = len(cfg.layers) - 1
    for i, layer in enumerate(cfg.layers):
        where = f"layers[{i}]"
        o = layer.options
        kind = layer.kind
        spatial = len(shape) == 3
        if kind in ("conv3x3", "qpconv", "classical_pointwise") and not spatial:
            raise ConfigError(where, f"{kind} needs an H x W x C input, got shape {shape}")
        if kind == "conv3x3":
            _positive_int(o.get("channels"), f"{where}.channels")
            shape = shape[:2] + (o["channels"],)
        elif kind == "classical_pointwise":
            _positive_int(o.get("channels"), f"{where}.channels")
            shape = shape[:2] + (o["channels"],)
        elif kind == "qpconv":
            n_qubits, _, channels = qpconv_geometry(o, where)
            _positive_int(o.get("layers", 1), f"{where}.layers")
            if o.get("entangler", "cnot") not in ENTANGLERS:
                raise ConfigError(f"{where}.entangler",
                                  f"expected one of {sorted(ENTANGLERS)}")
            need = required_qubits(shape[-1])
            if need > n_qubits:
                raise ConfigError(f"{where}.n_qubits",
                                  f"{shape[-1]} input channels need {need} qubits")
            shape = shape[:2] + (channels,)
        elif kind == "flatten":
            shape = (int(shape[0] * shape[1] * shape[2]),) if spatial else shape
        elif kind == "dense":
            if spatial:
                raise ConfigError(where, "dense needs a flattened input")
            _positive_int(o.get("units"), f"{where}.units")
            shape = (o["units"],)
        elif kind == "dropout":
            rate = o.get("rate", 0.5)
            if not (isinstance(rate, (int, float)) and 0 <= rate < 1):
                raise ConfigError(f"{where}.rate", f"expected a rate in [0, 1), got {rate!r}")
        shapes.append(shape)
        if i == last and (kind != "dense" or shape != (n_classes,)):
            raise ConfigError(where, f"the last layer must be dense with {n_classes} units")
    return shapes
