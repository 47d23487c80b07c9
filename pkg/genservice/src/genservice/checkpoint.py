"""Checkpoint directory layout.

A checkpoint is a directory holding everything needed to serve: meta.json
(dimensions, version string, max input length, orientation table), vocab.json
and weights.pt. The version string travels into every /generate response so
clients can tell which snapshot of the model answered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .data import OrientationTable
from .errors import FormatError
from .model import ModelSpec, OrientedT5
from .vocab import WordVocab

FORMAT_NAME = "genservice-checkpoint"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Bundle:
    model: OrientedT5
    vocab: WordVocab
    table: OrientationTable
    model_version: str
    max_input_length: int


def save_checkpoint(
    directory: str | Path,
    model: OrientedT5,
    vocab: WordVocab,
    table: OrientationTable,
    model_version: str,
    max_input_length: int,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model_version": model_version,
        "max_input_length": max_input_length,
        "spec": {
            "d_model": model.spec.d_model,
            "d_kv": model.spec.d_kv,
            "d_ff": model.spec.d_ff,
            "num_layers": model.spec.num_layers,
            "num_heads": model.spec.num_heads,
        },
        "orientations": {
            "k": table.k,
            "domains": list(table.domains),
            "words": {domain: list(table.words[domain]) for domain in table.domains},
        },
    }
    (directory / "meta.json").write_text(
        json.dumps(meta, indent=1, sort_keys=True), encoding="utf-8"
    )
    vocab.save(directory / "vocab.json")
    torch.save(model.state_dict(), directory / "weights.pt")
    return directory


def load_checkpoint(directory: str | Path) -> Bundle:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read checkpoint meta from {meta_path}: {exc}") from exc
    if not isinstance(meta, dict) or meta.get("format") != FORMAT_NAME:
        raise FormatError(f"{directory} is not a {FORMAT_NAME} directory")
    try:
        spec = ModelSpec(**meta["spec"])
        orient = meta["orientations"]
        table = OrientationTable(
            k=int(orient["k"]),
            domains=tuple(str(d) for d in orient["domains"]),
            words={
                domain: tuple(str(w) for w in words)
                for domain, words in orient["words"].items()
            },
        )
        model_version = str(meta["model_version"])
        max_input_length = int(meta["max_input_length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed checkpoint meta in {meta_path}: {exc}") from exc
    vocab = WordVocab.load(directory / "vocab.json")
    model = OrientedT5(vocab.size, table.n_rows, spec)
    try:
        state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, ValueError) as exc:
        raise FormatError(f"cannot read weights from {directory}: {exc}") from exc
    model.load_state_dict(state)
    model.eval()
    return Bundle(
        model=model,
        vocab=vocab,
        table=table,
        model_version=model_version,
        max_input_length=max_input_length,
    )
