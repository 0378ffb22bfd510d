"""Adjacency images, (image, curve) samples and on-disk datasets.

A dataset directory holds ``manifest.txt`` plus one binary file per sample
under ``samples/``.

Sample file (little endian)::

    b"CRSM" | uint16 version | uint16 flags (bit 0: weighted)
    uint32 n | uint32 curve length (must be n - 1)
    float32[n*n] image, row major | float32[n-1] curve

Manifest: ``key=value`` header lines, then one ``sample`` line per sample
(and one ``error`` line per failed sample) whose fields are shell-quoted
``key=value`` tokens.  Each sample line carries the SHA-256 of its file.
"""
from __future__ import annotations

import hashlib
import shlex
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .attack import AttackStrategy, ControllabilityCurve, batch_simulate, write_curves_csv
from .control import DEFAULT_RANK_TOL, ControllabilityKind
from .graph import DirectedGraph, to_matrix
from .netgen import GenSpec

SAMPLE_MAGIC = b"CRSM"
SAMPLE_VERSION = 1
HEADER = struct.Struct("<4sHHII")
MANIFEST_FORMAT = "ctrlrob-dataset"
MANIFEST_VERSION = 1
SPLITS = ("train", "validation", "test")


class DatasetError(ValueError):
    def __init__(self, message, sample_id=None):
        super().__init__(message if sample_id is None else f"sample {sample_id}: {message}")
        self.sample_id = sample_id


def to_image(g: DirectedGraph) -> np.ndarray:
    """Gray-scale adjacency image: 0 is black, 1 white, weights used as-is."""
    return to_matrix(g)


def export_png(matrix, path) -> None:
    """8-bit grayscale PNG with ``pixel = floor(255 * value + 0.5)``."""
    from PIL import Image

    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if np.any(m < 0) or np.any(m > 1) or not np.all(np.isfinite(m)):
        raise ValueError("image values must lie in [0, 1]")
    pixels = np.floor(255.0 * m + 0.5).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")


@dataclass(frozen=True)
class CellSpec:
    """One dataset configuration cell: a generator template and an instance count."""

    template: GenSpec
    count: int

    @property
    def key(self) -> tuple[str, float, bool]:
        return (self.template.topology, float(self.template.avg_degree), bool(self.template.weighted))


def grid(n, topologies=("er", "sf", "qsn", "sw"), degrees=(2, 5, 8, 10), count=1000, weighted=False, **gen_kw):
    return [
        CellSpec(GenSpec(t, n, k, weighted=weighted, **gen_kw), count)
        for t in topologies
        for k in degrees
    ]


@dataclass
class Sample:
    sample_id: int
    image: np.ndarray
    curve: ControllabilityCurve
    meta: dict
    split: str

    @property
    def n(self) -> int:
        return self.image.shape[0]


@dataclass
class DatasetManifest:
    header: dict
    entries: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    root: Path | None = None

    @property
    def n(self) -> int:
        return int(self.header["n"])

    @property
    def master_seed(self) -> int:
        return int(self.header["master_seed"])

    def split(self, name) -> list[dict]:
        return [e for e in self.entries if e["split"] == name]


def split_sizes(count: int) -> tuple[int, int, int]:
    """Train/validation/test sizes in ratio 8:1:1."""
    n_val = int(np.floor(count / 10 + 0.5))
    n_test = n_val
    return count - n_val - n_test, n_val, n_test


def _seed_int(*words) -> int:
    return int(np.random.SeedSequence([int(w) & (2**64 - 1) for w in words]).generate_state(1, np.uint64)[0])


def encode_sample(image, curve_values, weighted=False) -> bytes:
    image = np.asarray(image)
    n = image.shape[0]
    curve_values = np.asarray(curve_values)
    head = HEADER.pack(SAMPLE_MAGIC, SAMPLE_VERSION, 1 if weighted else 0, n, curve_values.shape[0])
    return head + image.astype("<f4").tobytes() + curve_values.astype("<f4").tobytes()


def decode_sample(raw: bytes, expect_n=None, sample_id=None):
    if len(raw) < HEADER.size:
        raise DatasetError("truncated sample header", sample_id)
    magic, version, flags, n, clen = HEADER.unpack_from(raw)
    if magic != SAMPLE_MAGIC or version != SAMPLE_VERSION:
        raise DatasetError("not a sample file", sample_id)
    if expect_n is not None and n != expect_n:
        raise DatasetError(f"image size {n} does not match declared size {expect_n}", sample_id)
    if clen != n - 1:
        raise DatasetError(f"curve length {clen} != n - 1 = {n - 1}", sample_id)
    if len(raw) != HEADER.size + 4 * (n * n + clen):
        raise DatasetError("sample payload size does not match its header", sample_id)
    off = HEADER.size
    image = np.frombuffer(raw, dtype="<f4", count=n * n, offset=off).reshape(n, n).astype(np.float64)
    curve = np.frombuffer(raw, dtype="<f4", count=clen, offset=off + 4 * n * n).astype(np.float64)
    return image, curve, bool(flags & 1)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_manifest(manifest: DatasetManifest, path) -> None:
    lines = ["# ctrlrob dataset manifest"]
    lines += [f"{k}={_fmt(v)}" for k, v in manifest.header.items()]
    for e in manifest.entries:
        lines.append("sample " + " ".join(f"{k}={shlex.quote(_fmt(v))}" for k, v in e.items()))
    for e in manifest.errors:
        lines.append("error " + " ".join(f"{k}={shlex.quote(_fmt(v))}" for k, v in e.items()))
    Path(path).write_text("\n".join(lines) + "\n")


_INT_FIELDS = {"id", "cell", "gen_seed", "attack_seed", "n"}


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.txt"
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    header, entries, errors = {}, [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("sample ") or line.startswith("error "):
            tag, rest = line.split(" ", 1)
            rec = {}
            for tok in shlex.split(rest):
                k, _, v = tok.partition("=")
                rec[k] = int(v) if k in _INT_FIELDS else v
            if "avg_degree" in rec:
                rec["avg_degree"] = float(rec["avg_degree"])
            if "weighted" in rec:
                rec["weighted"] = rec["weighted"] == "1"
            (entries if tag == "sample" else errors).append(rec)
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise DatasetError(f"{path}:{lineno}: malformed manifest line")
        header[k.strip()] = v.strip()
    if header.get("format") != MANIFEST_FORMAT:
        raise DatasetError(f"{path}: not a ctrlrob dataset manifest")
    if int(header.get("version", -1)) != MANIFEST_VERSION:
        raise DatasetError(f"{path}: unsupported manifest version {header.get('version')}")
    for key in ("n", "master_seed", "samples"):
        if key not in header:
            raise DatasetError(f"{path}: manifest header lacks {key!r}")
    if int(header["samples"]) != len(entries):
        raise DatasetError(f"{path}: header declares {header['samples']} samples, found {len(entries)}")
    return DatasetManifest(header, entries, errors, path.parent)


def build_dataset(
    cells: Sequence[CellSpec],
    strategy=AttackStrategy.RA,
    kind=ControllabilityKind.STRUCTURAL,
    master_seed: int = 0,
    out_dir=".",
    worker_count: int | None = None,
    tol: float = DEFAULT_RANK_TOL,
) -> DatasetManifest:
    """Generate, attack and store every instance of every cell.

    Seeds, split assignment and file order depend only on ``master_seed`` and
    the cell list, so rebuilding gives byte-identical output.
    """
    strategy = AttackStrategy(strategy)
    kind = ControllabilityKind(kind)
    out = Path(out_dir)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    sizes = {c.template.n for c in cells}
    if len(sizes) > 1:
        raise DatasetError(f"all cells must share one network size, got {sorted(sizes)}")
    n = sizes.pop() if sizes else 0

    specs, seeds, plan = [], [], []
    for ci, cell in enumerate(cells):
        n_train, n_val, _ = split_sizes(cell.count)
        perm = np.random.default_rng(_seed_int(master_seed, 2, ci)).permutation(cell.count)
        tags = np.empty(cell.count, dtype=object)
        tags[perm[:n_train]] = "train"
        tags[perm[n_train : n_train + n_val]] = "validation"
        tags[perm[n_train + n_val :]] = "test"
        for j in range(cell.count):
            gen_seed = _seed_int(master_seed, 0, ci, j)
            attack_seed = _seed_int(master_seed, 1, ci, j)
            specs.append(cell.template.with_seed(gen_seed))
            seeds.append(attack_seed)
            plan.append((ci, j, str(tags[j]), gen_seed, attack_seed))

    results = batch_simulate(specs, strategy, kind, seeds, worker_count, tol) if specs else []

    entries, errors = [], []
    for sid, (res, (ci, _, split, gen_seed, attack_seed)) in enumerate(zip(results, plan)):
        spec = res.spec
        base = {
            "id": sid,
            "cell": ci,
            "topology": spec.topology,
            "avg_degree": float(spec.avg_degree),
            "weighted": spec.weighted,
            "gen_seed": gen_seed,
            "attack_seed": attack_seed,
        }
        if not res.ok:
            errors.append({**base, "message": res.error})
            continue
        raw = encode_sample(to_image(res.graph), res.curve.values, spec.weighted)
        rel = f"samples/{sid:06d}.bin"
        (out / rel).write_bytes(raw)
        entries.append({**base, "split": split, "file": rel, "sha256": hashlib.sha256(raw).hexdigest()})

    header = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "master_seed": int(master_seed),
        "n": n,
        "strategy": strategy.value,
        "kind": kind.value,
        "rank_tol": float(tol),
        "cells": len(cells),
        "samples": len(entries),
        "failed": len(errors),
    }
    manifest = DatasetManifest(header, entries, errors, out)
    write_manifest(manifest, out / "manifest.txt")
    return manifest


def load_sample(manifest: DatasetManifest, entry: dict, verify=True) -> Sample:
    sid = entry["id"]
    path = manifest.root / entry["file"]
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}", sid) from exc
    if verify and hashlib.sha256(raw).hexdigest() != entry["sha256"]:
        raise DatasetError("checksum mismatch", sid)
    image, curve, _ = decode_sample(raw, manifest.n, sid)
    meta = {k: entry[k] for k in ("cell", "topology", "avg_degree", "weighted", "gen_seed", "attack_seed")}
    meta["strategy"] = manifest.header.get("strategy", "ra")
    meta["kind"] = manifest.header.get("kind", "structural")
    curve = ControllabilityCurve(curve, meta["kind"], meta["strategy"])
    return Sample(sid, image, curve, meta, entry["split"])


def load_dataset(manifest_path, split=None, shuffle_seed=None, verify=True) -> Iterator[Sample]:
    """Yield samples (optionally one split) in manifest order or a seeded shuffle.

    A bad sample raises :class:`DatasetError` when it is reached.
    """
    manifest = manifest_path if isinstance(manifest_path, DatasetManifest) else read_manifest(manifest_path)
    entries = manifest.entries if split is None else manifest.split(split)
    order = np.arange(len(entries))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(entries))
    for i in order:
        yield load_sample(manifest, entries[i], verify)


def validate_dataset(manifest_path) -> list[DatasetError]:
    """Check every sample; returns the per-sample errors (empty when clean)."""
    manifest = manifest_path if isinstance(manifest_path, DatasetManifest) else read_manifest(manifest_path)
    problems = []
    for entry in manifest.entries:
        try:
            load_sample(manifest, entry)
        except DatasetError as exc:
            problems.append(exc)
    return problems


def export_curves_csv(manifest_path, path, split=None) -> None:
    rows = ((s.sample_id, s.curve.values) for s in load_dataset(manifest_path, split))
    write_curves_csv(rows, path)
