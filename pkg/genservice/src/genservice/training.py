"""Training: teach the model to rebuild originals from corrupted templates.

Each epoch re-runs the upstream masker with a fresh seed, so the corruption
noise (fake destinations, sampled orientations, extra masked spans) differs
every pass over the data while staying reproducible end to end. Checkpoints
land once per epoch; when an evaluator is supplied the epoch with the best
score wins, otherwise the last one does.
"""

from __future__ import annotations

import json
import random
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import torch

from .checkpoint import save_checkpoint
from .data import (
    EncodedExample,
    OrientationTable,
    batches,
    encode_example,
    read_training_rows,
)
from .errors import ConfigError, FormatError, SubprocessError
from .fills import assemble_text, parse_fills, template_slots
from .model import ModelSpec, OrientedT5, build_model
from .vocab import WordVocab

Selector = Callable[[OrientedT5, WordVocab, OrientationTable], float]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 5e-5
    weight_decay: float = 1e-5
    batch_size: int = 8
    max_length: int = 96
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_length < 1:
            raise ConfigError(f"max_length must be >= 1, got {self.max_length}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")


def run_primary(command: Sequence[str]) -> str:
    """Run one upstream CLI invocation, returning its stdout."""
    command = [str(part) for part in command]
    try:
        proc = subprocess.run(command, capture_output=True, text=True, check=False)
    except OSError as exc:
        raise SubprocessError(command, -1, str(exc)) from exc
    if proc.returncode != 0:
        raise SubprocessError(command, proc.returncode, proc.stderr)
    return proc.stdout


def _domain_flags(domain_files: Mapping[str, str | Path]) -> list[str]:
    flags: list[str] = []
    for name in sorted(domain_files):
        flags += ["--domain", f"{name}={domain_files[name]}"]
    return flags


def mask_training_rows(
    primary: Sequence[str],
    domain_files: Mapping[str, str | Path],
    snapshot: str | Path,
    orientations: str | Path,
    seed: int,
    out_path: str | Path,
):
    run_primary(
        [
            *primary,
            "mask",
            "--training",
            "--snapshot",
            snapshot,
            "--orientations",
            orientations,
            "--seed",
            seed,
            "--out",
            out_path,
            *_domain_flags(domain_files),
        ]
    )
    return read_training_rows(out_path)


def make_optimizer(model: OrientedT5, config: TrainConfig) -> torch.optim.Optimizer:
    return torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )


def train_steps(
    model: OrientedT5,
    optimizer: torch.optim.Optimizer,
    examples: Sequence[EncodedExample],
    batch_size: int,
    max_steps: int | None = None,
) -> list[float]:
    """One pass over examples (or until max_steps). Returns per-step losses;
    losses[0] is computed before any parameter update."""
    model.train()
    losses: list[float] = []
    for batch in batches(examples, batch_size):
        if max_steps is not None and len(losses) >= max_steps:
            break
        out = model(
            input_ids=batch["input_ids"],
            orientation_rows=batch["orientation_rows"],
            attention_mask=batch["attention_mask"],
            labels=batch["labels"],
        )
        losses.append(float(out.loss.detach()))
        optimizer.zero_grad()
        out.loss.backward()
        optimizer.step()
    return losses


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    steps: int
    mean_loss: float
    score: float | None
    checkpoint: str


@dataclass(frozen=True)
class TrainResult:
    best: Path
    best_epoch: int
    records: tuple[EpochRecord, ...]
    vocab: WordVocab
    table: OrientationTable


def train_model(
    domain_files: Mapping[str, str | Path],
    snapshot: str | Path,
    orientations: str | Path,
    out_dir: str | Path,
    config: TrainConfig = TrainConfig(),
    spec: ModelSpec = ModelSpec(),
    primary: Sequence[str] = ("domainforge",),
    selector: Selector | None = None,
    log: Callable[[str], None] | None = None,
) -> TrainResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    say = log or (lambda _line: None)

    table = OrientationTable.load(orientations)
    missing = sorted(set(table.domains) - set(domain_files))
    if missing:
        raise ConfigError(f"no corpus given for domains: {', '.join(missing)}")

    masks_dir = out_dir / "masks"
    masks_dir.mkdir(exist_ok=True)
    rows = mask_training_rows(
        primary, domain_files, snapshot, orientations, config.seed, masks_dir / "epoch-0.jsonl"
    )
    if not rows:
        raise ConfigError("masker produced no training rows")

    # vocabulary is frozen from the first epoch's rows plus every descriptor
    # word; later epochs corrupt the same documents, so nothing new appears
    texts = [row.template for row in rows] + [" ".join(row.target_tokens) for row in rows]
    vocab = WordVocab.from_texts(texts, extra_words=table.all_words())

    model = build_model(vocab, table, spec, seed=config.seed)
    optimizer = make_optimizer(model, config)

    records: list[EpochRecord] = []
    best_epoch, best_score = 0, float("-inf")
    for epoch in range(config.epochs):
        if epoch > 0:
            rows = mask_training_rows(
                primary,
                domain_files,
                snapshot,
                orientations,
                config.seed + epoch,
                masks_dir / f"epoch-{epoch}.jsonl",
            )
        examples = [encode_example(row, vocab, table, config.max_length) for row in rows]
        random.Random(config.seed * 1000003 + epoch).shuffle(examples)
        losses = train_steps(model, optimizer, examples, config.batch_size)

        ckpt = out_dir / f"epoch-{epoch}"
        save_checkpoint(ckpt, model, vocab, table, f"epoch-{epoch}", config.max_length)
        score = selector(model, vocab, table) if selector is not None else None
        mean_loss = sum(losses) / len(losses) if losses else float("nan")
        records.append(
            EpochRecord(
                epoch=epoch,
                steps=len(losses),
                mean_loss=mean_loss,
                score=score,
                checkpoint=str(ckpt),
            )
        )
        shown = f"{score:.4f}" if score is not None else "-"
        say(f"epoch {epoch}: {len(losses)} steps, mean loss {mean_loss:.4f}, score {shown}")

        effective = score if score is not None else float(epoch)
        if effective > best_score:
            best_epoch, best_score = epoch, effective

    best_src = out_dir / f"epoch-{best_epoch}"
    best_dst = out_dir / "best"
    if best_dst.exists():
        shutil.rmtree(best_dst)
    shutil.copytree(best_src, best_dst)
    (out_dir / "training.json").write_text(
        json.dumps(
            {
                "best_epoch": best_epoch,
                "epochs": [
                    {
                        "epoch": r.epoch,
                        "steps": r.steps,
                        "mean_loss": r.mean_loss,
                        "score": r.score,
                    }
                    for r in records
                ],
            },
            indent=1,
        ),
        encoding="utf-8",
    )
    return TrainResult(
        best=best_dst,
        best_epoch=best_epoch,
        records=tuple(records),
        vocab=vocab,
        table=table,
    )


@dataclass
class DomainAccuracyEvaluator:
    """Scores a checkpoint by counterfactual round trip: held-out documents
    are masked toward another domain out of process, the model fills them in
    conditioned on that domain, and the upstream filter classifies the
    results. The score is how often the classifier agrees with the intended
    destination.

    The masking step and the classifier are model-independent, so both are
    prepared once and reused across epochs."""

    domain_files: Mapping[str, str | Path]
    corpus_files: Mapping[str, str | Path]
    snapshot: str | Path
    workdir: str | Path
    primary: Sequence[str] = ("domainforge",)
    beam_size: int = 4
    max_length: int = 96
    rotate: int = 1
    _eval_rows: list[dict] = field(default_factory=list, repr=False)
    _calls: int = field(default=0, repr=False)

    def __post_init__(self):
        self.workdir = Path(self.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        domains = sorted(self.domain_files)
        if len(domains) < 2:
            raise ConfigError("domain accuracy needs at least two domains")
        if self.rotate % len(domains) == 0:
            raise ConfigError("rotate would pair every domain with itself")
        next_id = 0
        for pos, origin in enumerate(domains):
            destination = domains[(pos + self.rotate) % len(domains)]
            out = self.workdir / f"eval-mask-{origin}.jsonl"
            run_primary(
                [
                    *self.primary,
                    "mask",
                    "--snapshot",
                    self.snapshot,
                    "--destination",
                    destination,
                    "--domain",
                    f"{origin}={self.domain_files[origin]}",
                    "--seed",
                    "0",
                    "--out",
                    out,
                ]
            )
            with open(out, encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    row["eval_id"] = next_id
                    next_id += 1
                    self._eval_rows.append(row)
        if not self._eval_rows:
            raise ConfigError("no held-out documents to evaluate on")

    def _fill(self, model: OrientedT5, vocab: WordVocab, table: OrientationTable, row: dict) -> str:
        tokens = str(row["template"]).split()
        slots = template_slots(tokens)
        if not slots:
            return str(row["template"])
        destination = str(row["destination"])
        out_ids = model.generate_ids(
            vocab.encode(row["template"])[: self.max_length],
            table.row(destination, 0),
            beam_size=self.beam_size,
            max_length=self.max_length,
        )
        return assemble_text(tokens, parse_fills(out_ids, vocab, slots))

    def score(self, model: OrientedT5, vocab: WordVocab, table: OrientationTable) -> float:
        self._calls += 1
        dataset = self.workdir / f"eval-dataset-{self._calls}.jsonl"
        with open(dataset, "w", encoding="utf-8") as handle:
            for row in self._eval_rows:
                original = {
                    "source": "original",
                    "origin_id": row["eval_id"],
                    "domain": row["origin"],
                    "text": row["target"],
                    "label": row.get("label"),
                }
                generated = {
                    "source": "generated",
                    "origin_id": row["eval_id"],
                    "domain": row["destination"],
                    "text": self._fill(model, vocab, table, row),
                    "label": row.get("label"),
                }
                handle.write(json.dumps(original) + "\n")
                handle.write(json.dumps(generated) + "\n")

        classifier = self.workdir / "eval-classifier.json"
        filtered = self.workdir / f"eval-filtered-{self._calls}.jsonl"
        command = [
            *self.primary,
            "filter",
            "--candidates",
            dataset,
            "--snapshot",
            self.snapshot,
            "--out",
            filtered,
        ]
        if classifier.exists():
            command += ["--classifier", classifier]
        else:
            command += ["--classifier-out", classifier]
            for name in sorted(self.corpus_files):
                command += ["--corpus", f"{name}={self.corpus_files[name]}"]
        run_primary(command)

        agree = total = 0
        with open(filtered, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                row = json.loads(line)
                if row.get("source") == "original":
                    continue
                total += 1
                if row.get("predicted_domain") == row.get("domain"):
                    agree += 1
        if total == 0:
            raise FormatError("filter output held no candidate rows")
        return agree / total
