"""Versioned checkpoint container.

Layout: 4-byte magic, little-endian uint32 format version, uint64 header
length, a JSON header (sorted keys), then the concatenated raw float64
bytes of every array in header order. Writing is fully deterministic given
the content, and numeric payloads round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointVersionError, IoFailure
from .lifting import LiftNetParams, init_lift_params
from .model import ModelConfig, Seq2SeqModel, init_model
from .pose import PcaModel

MAGIC = b"GGCK"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: dict
    pca: PcaModel | None = None
    model: Seq2SeqModel | None = None
    lift: LiftNetParams | None = None
    embedding_ref: dict | None = None  # {"path": ..., "sha256": ...}


def _collect_arrays(ck: Checkpoint):
    arrays = []
    if ck.pca is not None:
        arrays.append(("pca.mean", ck.pca.mean))
        arrays.append(("pca.components", ck.pca.components))
        arrays.append(("pca.explained_variance_ratio", ck.pca.explained_variance_ratio))
    if ck.model is not None:
        for name, p in ck.model.store.items():
            arrays.append((f"seq2seq.{name}", p.value))
    if ck.lift is not None:
        for name, p in ck.lift.store.items():
            arrays.append((f"lift.{name}", p.value))
        for key in sorted(ck.lift.running):
            arrays.append((f"lift.running.{key}", ck.lift.running[key]))
    return arrays


def save_checkpoint(ck: Checkpoint, path):
    arrays = _collect_arrays(ck)
    header = {
        "config": ck.config,
        "embedding_ref": ck.embedding_ref,
        "has_pca": ck.pca is not None,
        "model_cfg": None,
        "lift_cfg": None,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    if ck.model is not None:
        c = ck.model.cfg
        header["model_cfg"] = {
            "word_dim": c.word_dim,
            "hidden": c.hidden,
            "att_dim": c.att_dim,
            "gesture_dim": c.gesture_dim,
            "n_seed_poses": c.n_seed_poses,
            "n_output_poses": c.n_output_poses,
            "dropout": c.dropout,
        }
    if ck.lift is not None:
        header["lift_cfg"] = {"bn_momentum": ck.lift.bn_momentum, "bn_eps": ck.lift.bn_eps}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", FORMAT_VERSION))
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            for _, a in arrays:
                fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint: {exc}") from exc
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise CheckpointVersionError("not a checkpoint file (bad magic)")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint format version {version}")
    (header_len,) = struct.unpack_from("<Q", raw, 8)
    try:
        header = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointVersionError(f"corrupt checkpoint header: {exc}") from exc

    offset = 16 + header_len
    values = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        values[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += count * 8

    pca = None
    if header.get("has_pca"):
        pca = PcaModel(
            mean=values["pca.mean"],
            components=values["pca.components"],
            explained_variance_ratio=values["pca.explained_variance_ratio"],
        )

    model = None
    if header.get("model_cfg"):
        model = init_model(ModelConfig(**header["model_cfg"]), seed=0)
        for name, p in model.store.items():
            stored = values[f"seq2seq.{name}"]
            if stored.shape != p.value.shape:
                raise CheckpointVersionError(f"parameter {name} has shape {stored.shape}, expected {p.value.shape}")
            p.value[...] = stored

    lift = None
    if header.get("lift_cfg"):
        lift = init_lift_params(seed=0, **header["lift_cfg"])
        for name, p in lift.store.items():
            p.value[...] = values[f"lift.{name}"]
        for key in lift.running:
            lift.running[key][...] = values[f"lift.running.{key}"]

    return Checkpoint(
        config=header.get("config", {}),
        pca=pca,
        model=model,
        lift=lift,
        embedding_ref=header.get("embedding_ref"),
    )
