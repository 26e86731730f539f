"""Training harness: epoch loop, metrics files, checkpoints, comparison and depth sweep."""
from __future__ import annotations

import logging
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classical import OptimizerState, adam_step, batch_cross_entropy, cosine_lr
from .config import ConfigError, LayerSpec, TrainConfig, qpconv_geometry
from .data import Dataset, batches, desk_subset, load_cifar10, load_idx
from .model import Network, build_network, pointwise_param_counts

log = logging.getLogger(__name__)

METRICS_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc,lr,seconds"
CHECKPOINT_MAGIC = b"QPCK"


@dataclass
class MetricsRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_loss: float
    test_accuracy: float
    learning_rate: float
    wall_seconds: float

    def row(self, with_time: bool) -> str:
        seconds = f"{self.wall_seconds:.9g}" if with_time else ""
        vals = [self.train_loss, self.train_accuracy, self.test_loss, self.test_accuracy,
                self.learning_rate]
        return ",".join([str(self.epoch)] + [f"{v:.9g}" for v in vals] + [seconds])


@dataclass
class RunResult:
    config: TrainConfig
    network: Network
    metrics: list
    out_dir: Path


# =============================================================================
# Data
# =============================================================================

def _find(root: Path, stem: str) -> Path:
    for cand in (root / stem, root / f"{stem}.gz"):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no {stem}[.gz] under {root}")


def load_datasets(cfg: TrainConfig) -> tuple[Dataset, Dataset]:
    """Full train/test splits reduced to the configured desk-scale subset."""
    spec = cfg.dataset
    root = cfg.resolve(spec.root)
    if spec.name == "fashion-mnist":
        if spec.train_files:
            train_pair = [cfg.resolve(p) for p in spec.train_files]
            test_pair = [cfg.resolve(p) for p in spec.test_files]
        else:
            train_pair = [_find(root, "train-images-idx3-ubyte"),
                          _find(root, "train-labels-idx1-ubyte")]
            test_pair = [_find(root, "t10k-images-idx3-ubyte"),
                         _find(root, "t10k-labels-idx1-ubyte")]
        train = load_idx(*train_pair, split="train")
        test = load_idx(*test_pair, split="test")
    else:
        train_paths = ([cfg.resolve(p) for p in spec.train_files] if spec.train_files
                       else [_find(root, f"data_batch_{i}.bin") for i in range(1, 6)])
        test_paths = ([cfg.resolve(p) for p in spec.test_files] if spec.test_files
                      else [_find(root, "test_batch.bin")])
        train = load_cifar10(train_paths, "train")
        test = load_cifar10(test_paths, "test")
    size = spec.size
    train = desk_subset(train, spec.classes, spec.train_per_class, size, cfg.seed)
    test = desk_subset(test, spec.classes, spec.test_per_class, size, cfg.seed + 1)
    return train, test


# =============================================================================
# Loop
# =============================================================================

def evaluate(net: Network, ds: Dataset, batch_size: int) -> tuple[float, float]:
    total_loss, correct = 0.0, 0
    for idx in batches(ds, batch_size, 0, 0, shuffle=False):
        logits = net.forward(ds.images[idx], training=False)
        loss, _ = batch_cross_entropy(logits, ds.labels[idx])
        total_loss += loss * len(idx)
        correct += int(np.sum(np.argmax(logits, axis=1) == ds.labels[idx]))
    return total_loss / len(ds), correct / len(ds)


def train_epoch(net: Network, opt: OptimizerState, ds: Dataset, batch_size: int,
                seed: int, epoch: int, lr: float) -> tuple[float, float]:
    total_loss, correct = 0.0, 0
    for idx in batches(ds, batch_size, seed, epoch):
        logits = net.forward(ds.images[idx], training=True)
        labels = ds.labels[idx]
        loss, grad = batch_cross_entropy(logits, labels)
        net.backward(grad)
        adam_step(opt, net.params, net.grads, lr)
        total_loss += loss * len(idx)
        correct += int(np.sum(np.argmax(logits, axis=1) == labels))
    return total_loss / len(ds), correct / len(ds)


def write_checkpoint(path: Path, cfg: TrainConfig, net: Network) -> None:
    """Config digest, parameter count, then little-endian float64 parameters."""
    flat = net.flat_params().astype("<f8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC + cfg.digest() + struct.pack("<Q", flat.size))
        f.write(flat.tobytes())


def read_checkpoint(path: Path, cfg: TrainConfig | None = None) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint")
    digest, (count,) = raw[4:36], struct.unpack("<Q", raw[36:44])
    if cfg is not None and digest != cfg.digest():
        raise ValueError(f"{path}: checkpoint was written for a different config")
    flat = np.frombuffer(raw, dtype="<f8", offset=44)
    if flat.size != count:
        raise ValueError(f"{path}: expected {count} parameters, found {flat.size}")
    return flat.astype(np.float64)


def train(cfg: TrainConfig, out_dir=None, quiet: bool = False) -> RunResult:
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    train_ds, test_ds = load_datasets(cfg)
    init_rng = np.random.default_rng([cfg.seed, 1])
    net = build_network(cfg, train_ds.images.shape[1:], len(cfg.dataset.classes), init_rng)
    opt = OptimizerState(cfg.optimizer.lr0, cfg.optimizer.beta1, cfg.optimizer.beta2,
                         cfg.optimizer.eps)
    (out / "config.json").write_text(cfg.dumps())

    epochs = cfg.schedule.epochs
    records = []
    timing = ["epoch,seconds"]
    with open(out / "metrics.csv", "w") as f:
        f.write(METRICS_HEADER + "\n")
        for epoch in range(1, epochs + 1):
            lr = (cosine_lr(epoch - 1, epochs, cfg.optimizer.lr0) if cfg.schedule.cosine
                  else cfg.optimizer.lr0)
            start = time.perf_counter()
            tr_loss, tr_acc = train_epoch(net, opt, train_ds, cfg.batch.train, cfg.seed,
                                          epoch, lr)
            te_loss, te_acc = evaluate(net, test_ds, cfg.batch.test)
            rec = MetricsRecord(epoch, tr_loss, tr_acc, te_loss, te_acc, lr,
                                time.perf_counter() - start)
            records.append(rec)
            f.write(rec.row(cfg.record_time) + "\n")
            f.flush()
            timing.append(f"{epoch},{rec.wall_seconds:.3f}")
            if not quiet:
                log.info("%s epoch %d/%d loss %.4f acc %.3f | test loss %.4f acc %.3f | %.1fs",
                         cfg.name, epoch, epochs, tr_loss, tr_acc, te_loss, te_acc,
                         rec.wall_seconds)
    (out / "timing.csv").write_text("\n".join(timing) + "\n")
    write_checkpoint(out / "checkpoint.bin", cfg, net)
    return RunResult(cfg, net, records, out)


# =============================================================================
# Comparison and sweep
# =============================================================================

def classical_counterpart(cfg: TrainConfig) -> TrainConfig:
    """Swap each qpconv for classical pointwise + BN + ReLU with the same output width."""
    layers = []
    for i, spec in enumerate(cfg.layers):
        if spec.kind == "qpconv":
            _, _, channels = qpconv_geometry(spec.options, f"layers[{i}]")
            layers += [LayerSpec("classical_pointwise", {"channels": channels}),
                       LayerSpec("bn"), LayerSpec("relu")]
        else:
            layers.append(LayerSpec(spec.kind, dict(spec.options)))
    return cfg.replace(name=f"{cfg.name}-classical", layers=layers)


def compare(cfg_quantum: TrainConfig, cfg_classical: TrainConfig | None, out_dir) -> dict:
    cfg_classical = cfg_classical or classical_counterpart(cfg_quantum)
    if cfg_classical.dataset != cfg_quantum.dataset or cfg_classical.seed != cfg_quantum.seed:
        raise ConfigError("dataset", "compared configs must share dataset and seed")
    out = Path(out_dir)
    q = train(cfg_quantum, out / "quantum")
    c = train(cfg_classical, out / "classical")
    cols = ["train_loss", "train_acc", "test_loss", "test_acc"]
    header = ["epoch"] + [f"quantum_{k}" for k in cols] + [f"classical_{k}" for k in cols]
    lines = [",".join(header)]
    for rq, rc in zip(q.metrics, c.metrics):
        vals = [rq.train_loss, rq.train_accuracy, rq.test_loss, rq.test_accuracy,
                rc.train_loss, rc.train_accuracy, rc.test_loss, rc.test_accuracy]
        lines.append(",".join([str(rq.epoch)] + [f"{v:.9g}" for v in vals]))
    (out / "compare.csv").write_text("\n".join(lines) + "\n")

    summary = {
        "quantum_params": q.network.n_params,
        "classical_params": c.network.n_params,
        "quantum_pointwise": pointwise_param_counts(q.network),
        "classical_pointwise": pointwise_param_counts(c.network),
        "quantum_final_test_acc": q.metrics[-1].test_accuracy if q.metrics else None,
        "classical_final_test_acc": c.metrics[-1].test_accuracy if c.metrics else None,
    }
    (out / "summary.txt").write_text(summary_line(summary) + "\n")
    return summary


def summary_line(s: dict) -> str:
    def acc(v):
        return "n/a" if v is None else f"{v:.4f}"

    qpw = "+".join(str(n) for _, n in s["quantum_pointwise"]) or "0"
    cpw = "+".join(str(n) for _, n in s["classical_pointwise"]) or "0"
    return (f"quantum: test_acc={acc(s['quantum_final_test_acc'])} params={s['quantum_params']} "
            f"pointwise_params={qpw} | classical: test_acc={acc(s['classical_final_test_acc'])} "
            f"params={s['classical_params']} pointwise_params={cpw}")


def with_depth(cfg: TrainConfig, depth: int) -> TrainConfig:
    layers = [LayerSpec(s.kind, {**s.options, "layers": depth} if s.kind == "qpconv"
                        else dict(s.options)) for s in cfg.layers]
    return cfg.replace(name=f"{cfg.name}-L{depth}", layers=layers)


def layers_sweep(cfg: TrainConfig, layer_counts: list, out_dir) -> list[dict]:
    if not layer_counts:
        raise ValueError("layer_counts must not be empty")
    if not any(s.kind == "qpconv" for s in cfg.layers):
        raise ValueError("sweep config has no qpconv layer")
    out = Path(out_dir)
    rows = []
    for depth in layer_counts:
        res = train(with_depth(cfg, depth), out / f"L{depth}")
        rows.append({
            "layers": depth,
            "qpconv_params": sum(n for _, n in pointwise_param_counts(res.network)),
            "total_params": res.network.n_params,
            "final_test_acc": res.metrics[-1].test_accuracy if res.metrics else float("nan"),
            "metrics": str(res.out_dir / "metrics.csv"),
        })
    lines = ["layers,qpconv_params,total_params,final_test_acc"]
    lines += [f"{r['layers']},{r['qpconv_params']},{r['total_params']},{r['final_test_acc']:.9g}"
              for r in rows]
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return rows
