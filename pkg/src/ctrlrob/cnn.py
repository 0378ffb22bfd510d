"""CNN that maps an adjacency image to a controllability curve.

Architecture: fixed embedding ``A' = A D`` -> groups of (conv, ReLU, max
pool) -> flatten -> dense + ReLU -> linear output of width ``n - 1``.  The
full-size group list follows the seven VGG-style groups; smaller inputs use
fewer groups and, by default, narrower channels.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DatasetManifest, Sample, load_dataset, read_manifest
from .nn import Adam, Conv2D, Dense, Embed, Flatten, MaxPool, ReLU, Sequential, ShapeError, curve_loss, pooled_size
from .nn import checkpoint

# (kernel, out channels, pool window) per group at full scale
FULL_GROUPS = (
    (7, 64, 2),
    (5, 64, 2),
    (3, 128, 3),
    (3, 128, 3),
    (3, 256, 3),
    (3, 256, 3),
    (3, 512, 2),
)
DESK_WIDTH = 0.125
MODEL_FORMAT = "ctrlrob-cnn"


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


def group_count(n: int) -> int:
    return min(7, max(3, int(math.floor(math.log2(n))) - 3))


def default_fc2(n: int) -> int:
    if n <= 128:
        return 256
    if n < 800:
        return 512
    return 4096


@dataclass(frozen=True)
class CnnConfig:
    n: int
    groups: tuple = ()
    fc2: int = 0
    epochs: int = 10
    loss: str = "l1"
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 1
    seed: int = 0

    def __post_init__(self):
        groups = tuple(tuple(int(v) for v in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = [list(g) for g in self.groups]
        return d

    @classmethod
    def from_dict(cls, d) -> "CnnConfig":
        d = dict(d)
        d["groups"] = tuple(tuple(g) for g in d.get("groups", ()))
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def default_config(n: int, width: float = DESK_WIDTH, groups: int | None = None, **kw) -> CnnConfig:
    """Config for input size ``n``: the first ``group_count(n)`` full-size groups.

    Channel counts are scaled by ``width`` (1.0 gives the full-size widths).
    """
    g = group_count(n) if groups is None else int(groups)
    if not 1 <= g <= len(FULL_GROUPS):
        raise ConfigError(f"group count must lie in [1, {len(FULL_GROUPS)}], got {g}")
    chosen = tuple((k, max(1, int(round(c * width))), p) for k, c, p in FULL_GROUPS[:g])
    kw.setdefault("fc2", default_fc2(n))
    return CnnConfig(n=n, groups=chosen, **kw)


def infer_shapes(config: CnnConfig) -> list[tuple]:
    """Layer-by-layer activation shapes; raises :class:`ConfigError` if inconsistent."""
    n = config.n
    if n < 2:
        raise ConfigError(f"input size must be >= 2, got {n}")
    if not config.groups:
        raise ConfigError("at least one conv group is required")
    if config.fc2 < 1:
        raise ConfigError(f"fc2 must be >= 1, got {config.fc2}")
    if config.loss not in ("l1", "l2"):
        raise ConfigError(f"unknown loss {config.loss!r}")
    if config.epochs < 1:
        raise ConfigError("epochs must be >= 1")
    if config.batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    shapes = [(1, n, n)]
    c, h = 1, n
    for kernel, channels, pool in config.groups:
        if kernel < 1 or kernel % 2 == 0:
            raise ConfigError(f"conv kernel must be odd, got {kernel}")
        if channels < 1:
            raise ConfigError(f"channel count must be >= 1, got {channels}")
        if pool not in (2, 3):
            raise ConfigError(f"pool window must be 2 or 3, got {pool}")
        c = channels
        shapes.append((c, h, h))
        h = pooled_size(h)
        shapes.append((c, h, h))
    fc1 = c * h * h
    shapes += [(fc1,), (config.fc2,), (n - 1,)]
    return shapes


def spatial_chain(config: CnnConfig) -> list[int]:
    """Spatial size at the input and after each pooling stage."""
    return [s[1] for s in infer_shapes(config)[:-3:2]]


def embedding_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal ``n x n`` matrix with unit-length columns."""
    D = rng.standard_normal((n, n))
    return D / np.linalg.norm(D, axis=0, keepdims=True)


class CnnModel:
    """Network, frozen embedding, optimizer state and training log."""

    def __init__(self, config: CnnConfig, net: Sequential, D: np.ndarray, adam: Adam, log=None, best_epoch=None):
        self.config = config
        self.net = net
        self.D = D
        self.adam = adam
        self.log = list(log or [])
        self.best_epoch = best_epoch

    @property
    def n(self) -> int:
        return self.config.n

    def param_arrays(self) -> list[np.ndarray]:
        return [p for _, p, _ in self.net.named_params()]

    def grad_arrays(self) -> list[np.ndarray]:
        return [g for _, _, g in self.net.named_params()]

    def forward(self, image) -> np.ndarray:
        x = np.asarray(image, dtype=np.float64)
        if x.shape != (self.n, self.n):
            raise ShapeError(f"model expects a {self.n}x{self.n} image, got {x.shape[0]}x{x.shape[1] if x.ndim > 1 else 1}")
        return self.net.forward(x[None, :, :])

    def loss_and_grad(self, image, target):
        """Forward + backward for one sample; gradients are accumulated in place."""
        pv = self.forward(image)
        loss, dpv = curve_loss(pv, target, self.config.loss)
        self.net.backward(dpv)
        return loss


def build_model(config: CnnConfig) -> CnnModel:
    infer_shapes(config)
    ss = np.random.SeedSequence([int(config.seed) & (2**64 - 1), 7])
    rng_embed, rng_layers = (np.random.default_rng(s) for s in ss.spawn(2))
    D = embedding_matrix(config.n, rng_embed)
    layers = [Embed(D)]
    c_in = 1
    for i, (kernel, channels, pool) in enumerate(config.groups):
        layers += [Conv2D(c_in, channels, kernel, rng_layers, input_grad=i > 0, equalized=True), ReLU(), MaxPool(pool)]
        c_in = channels
    shapes = infer_shapes(config)
    layers += [
        Flatten(),
        Dense(shapes[-3][0], config.fc2, rng_layers, equalized=True),
        ReLU(),
        Dense(config.fc2, config.n - 1, rng_layers, gain=1.0, equalized=True),
    ]
    net = Sequential(layers)
    got = net.infer_shapes((1, config.n, config.n))
    if got[-1] != (config.n - 1,):
        raise ConfigError(f"assembled network ends in {got[-1]}, expected ({config.n - 1},)")
    adam = Adam(config.lr, config.beta1, config.beta2, config.eps)
    return CnnModel(config, net, D, adam)


def _load_split(manifest, split) -> list[Sample]:
    return list(load_dataset(manifest, split))


def mean_loss(model: CnnModel, samples: Sequence[Sample]) -> float:
    if not samples:
        return float("nan")
    total = 0.0
    for s in samples:
        loss, _ = curve_loss(model.forward(s.image), s.curve.values, model.config.loss)
        total += loss
    return total / len(samples)


def _snapshot(model):
    return (
        [p.copy() for p in model.param_arrays()],
        [m.copy() for m in model.adam.m],
        [v.copy() for v in model.adam.v],
        model.adam.t,
    )


def _restore(model, snap):
    params, m, v, t = snap
    for dst, src in zip(model.param_arrays(), params):
        dst[...] = src
    model.adam.m, model.adam.v, model.adam.t = [a.copy() for a in m], [a.copy() for a in v], t


def train(model: CnnModel, manifest, shuffle_seed: int = 0, epochs: int | None = None, progress=None) -> CnnModel:
    """Batch-size-1 Adam training with per-epoch validation.

    Each epoch visits the training split in a fresh seeded shuffle.  The
    parameters returned are those of the epoch with the lowest validation
    loss (the last epoch if there is no validation split).
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = read_manifest(manifest)
    if manifest.n != model.n:
        raise ConfigError(f"dataset network size {manifest.n} does not match model input size {model.n}")
    train_set = _load_split(manifest, "train")
    val_set = _load_split(manifest, "validation")
    if not train_set:
        raise TrainingError("training split is empty")
    epochs = model.config.epochs if epochs is None else int(epochs)
    if not model.log:
        # start the linear output at the mean training curve
        model.net.layers[-1].params["b"][...] = np.mean([s.curve.values for s in train_set], axis=0)
    params = model.param_arrays()
    grads = model.grad_arrays()
    best = (math.inf, None, None)
    start = len(model.log)
    for epoch in range(start + 1, start + epochs + 1):
        order = np.random.default_rng(np.random.SeedSequence([int(shuffle_seed) & (2**64 - 1), epoch])).permutation(
            len(train_set)
        )
        total = 0.0
        bs = model.config.batch_size
        for lo in range(0, len(order), bs):
            batch = order[lo : lo + bs]
            model.net.zero_grad()
            for idx in batch:
                s = train_set[idx]
                loss = model.loss_and_grad(s.image, s.curve.values)
                if not math.isfinite(loss):
                    raise TrainingError(f"non-finite loss {loss} at epoch {epoch}, sample {s.sample_id}")
                total += loss
            if len(batch) > 1:
                for g in grads:
                    g /= len(batch)
            for g in grads:
                if not np.all(np.isfinite(g)):
                    raise TrainingError(f"non-finite gradient at epoch {epoch}, batch starting {lo}")
            model.adam.step(params, grads)
        train_loss = total / len(train_set)
        val_loss = mean_loss(model, val_set) if val_set else train_loss
        model.log.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if progress is not None:
            progress(model.log[-1])
        if val_loss < best[0]:
            best = (val_loss, epoch, _snapshot(model))
    if best[2] is not None:
        _restore(model, best[2])
        model.best_epoch = best[1]
    return model


def predict(model: CnnModel, image) -> np.ndarray:
    """Predicted curve, clamped to ``[1/n, 1]``."""
    raw = model.forward(image)
    return np.clip(raw, 1.0 / model.n, 1.0)


# -- evaluation ---------------------------------------------------------------


@dataclass
class CellReport:
    label: str
    count: int
    er: np.ndarray
    st: np.ndarray

    @property
    def er_bar(self) -> float:
        return float(self.er.mean())

    @property
    def sigma_bar(self) -> float:
        return float(self.st.mean())


@dataclass
class EvalReport:
    overall: CellReport
    cells: dict = field(default_factory=dict)
    sample_ids: list = field(default_factory=list)
    predictions: np.ndarray | None = None
    truths: np.ndarray | None = None
    labels: list = field(default_factory=list)


def cell_label(meta) -> str:
    k = float(meta["avg_degree"])
    kk = str(int(k)) if k.is_integer() else repr(k)
    w = "-w" if meta.get("weighted") else ""
    return f"{meta['topology']}-k{kk}{w}"


def _cell_report(label, pv, tv):
    er = np.abs(pv - tv).mean(axis=0)
    st = tv.std(axis=0)
    return CellReport(label, pv.shape[0], er, st)


def report_from_predictions(sample_ids, predictions, truths, labels) -> EvalReport:
    """Per-position error/std curves overall and per configuration cell."""
    pv = np.asarray(predictions, dtype=np.float64)
    tv = np.asarray(truths, dtype=np.float64)
    if pv.shape != tv.shape or pv.ndim != 2 or pv.shape[0] == 0:
        raise ValueError(f"predictions {pv.shape} and truths {tv.shape} must be equal, non-empty 2-D arrays")
    labels = list(labels)
    cells = {}
    for label in sorted(set(labels)):
        rows = [i for i, l in enumerate(labels) if l == label]
        cells[label] = _cell_report(label, pv[rows], tv[rows])
    return EvalReport(_cell_report("all", pv, tv), cells, list(sample_ids), pv, tv, labels)


def evaluate(model: CnnModel, samples) -> EvalReport:
    samples = list(samples)
    if not samples:
        raise ValueError("evaluation needs a non-empty test split")
    if samples[0].n != model.n:
        raise ConfigError(f"test samples have size {samples[0].n}, model expects {model.n}")
    pv = np.stack([predict(model, s.image) for s in samples])
    tv = np.stack([s.curve.values for s in samples])
    return report_from_predictions([s.sample_id for s in samples], pv, tv, [cell_label(s.meta) for s in samples])


def write_report(report: EvalReport, out_dir) -> dict[str, Path]:
    """Write er/st curves (CSV), predictions, truths and a summary text file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "curves": out / "er_st.csv",
        "summary": out / "summary.txt",
        "predictions": out / "predictions.csv",
        "truth": out / "truth.csv",
    }
    lines = ["cell,position,er,st"]
    for rep in [report.overall] + [report.cells[k] for k in sorted(report.cells)]:
        for i, (e, s) in enumerate(zip(rep.er, rep.st), start=1):
            lines.append(f"{rep.label},{i},{float(e)!r},{float(s)!r}")
    paths["curves"].write_text("\n".join(lines) + "\n")

    summary = ["cell samples er_bar sigma_bar ratio"]
    for rep in [report.overall] + [report.cells[k] for k in sorted(report.cells)]:
        ratio = rep.er_bar / rep.sigma_bar if rep.sigma_bar > 0 else float("inf")
        summary.append(f"{rep.label} {rep.count} {rep.er_bar:.6f} {rep.sigma_bar:.6f} {ratio:.4f}")
    paths["summary"].write_text("\n".join(summary) + "\n")

    for key, arr in (("predictions", report.predictions), ("truth", report.truths)):
        rows = [
            ",".join([str(sid), label] + [repr(float(v)) for v in vals])
            for sid, label, vals in zip(report.sample_ids, report.labels, arr)
        ]
        paths[key].write_text("sample_id,cell,values...\n" + "\n".join(rows) + "\n")
    return paths


def _read_rows(path):
    ids, labels, rows = [], [], []
    for line in Path(path).read_text().splitlines()[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        ids.append(int(parts[0]))
        labels.append(parts[1])
        rows.append([float(v) for v in parts[2:]])
    return ids, labels, np.array(rows)


def report_from_files(predictions_csv, truth_csv) -> EvalReport:
    ids, labels, pv = _read_rows(predictions_csv)
    ids_t, _, tv = _read_rows(truth_csv)
    if ids != ids_t:
        raise ValueError("prediction and truth files list different samples")
    return report_from_predictions(ids, pv, tv, labels)


# -- persistence --------------------------------------------------------------


def save_model(model: CnnModel, path) -> None:
    arrays = {"embedding.D": model.D}
    for name, p, _ in model.net.named_params():
        arrays[name] = p
    arrays.update(model.adam.state_arrays())
    header = {
        "format": MODEL_FORMAT,
        "config": model.config.to_dict(),
        "config_hash": model.config.config_hash(),
        "layers": [layer.describe() for layer in model.net.layers],
        "log": model.log,
        "best_epoch": model.best_epoch,
        "adam_t": model.adam.t,
    }
    checkpoint.save(path, header, arrays)


def load_model(path) -> CnnModel:
    header, arrays = checkpoint.load(path)
    if header.get("format") != MODEL_FORMAT:
        raise checkpoint.CheckpointError(f"{path} is not a {MODEL_FORMAT} checkpoint")
    config = CnnConfig.from_dict(header["config"])
    if config.config_hash() != header.get("config_hash"):
        raise checkpoint.CheckpointError("config hash does not match the stored config")
    model = build_model(config)
    if [layer.describe() for layer in model.net.layers] != header["layers"]:
        raise checkpoint.CheckpointError("stored layer list does not match the config")
    model.D[...] = arrays["embedding.D"]
    named = model.net.named_params()
    for name, p, _ in named:
        if name not in arrays or arrays[name].shape != p.shape:
            raise checkpoint.CheckpointError(f"checkpoint lacks parameter {name} of shape {p.shape}")
        p[...] = arrays[name]
    model.adam.load_state_arrays(arrays, len(named))
    model.adam.t = int(header.get("adam_t", 0))
    model.log = list(header.get("log", []))
    model.best_epoch = header.get("best_epoch")
    return model
