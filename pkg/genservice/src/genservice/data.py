"""Parsing of the upstream toolkit's files and conversion into tensors.

Two inputs cross the process boundary: the orientation-set JSON and the
training-mask JSONL. Both are parsed here against their published layouts
rather than by importing the producing package, so this service stays
deployable on its own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import torch

from .errors import FormatError
from .vocab import EOS_ID, PAD_ID, WordVocab

ORIENTATIONS_FORMAT = "domainforge-orientations"
IGNORE_LABEL = -100


@dataclass(frozen=True)
class OrientationTable:
    """Domain descriptor words in slot order; row t = domain_pos * k + slot."""

    k: int
    domains: tuple[str, ...]
    words: Mapping[str, tuple[str, ...]]

    @classmethod
    def load(cls, path: str | Path) -> "OrientationTable":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read orientation set from {path}: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("format") != ORIENTATIONS_FORMAT:
            raise FormatError(f"{path} is not an orientation-set file")
        try:
            k = int(payload["k"])
            domains = tuple(str(d) for d in payload["domains"])
            words = {
                domain: tuple(str(e["word"]) for e in sorted(entries, key=lambda e: int(e["index"])))
                for domain, entries in payload["table"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed orientation-set file {path}: {exc}") from exc
        for domain in domains:
            if len(words.get(domain, ())) != k:
                raise FormatError(f"orientation table for {domain!r} does not have {k} words")
        return cls(k=k, domains=domains, words=words)

    @property
    def n_rows(self) -> int:
        return len(self.domains) * self.k

    def all_words(self) -> list[str]:
        return [w for domain in self.domains for w in self.words[domain]]

    def row(self, domain: str, index: int) -> int:
        try:
            pos = self.domains.index(domain)
        except ValueError:
            raise FormatError(f"no such domain {domain!r}") from None
        if not 0 <= index < self.k:
            raise FormatError(f"orientation index {index} out of range for k={self.k}")
        return pos * self.k + index

    def row_for_word(self, domain: str, word: str) -> int:
        try:
            pos = self.domains.index(domain)
        except ValueError:
            raise FormatError(f"no such domain {domain!r}") from None
        folded = word.casefold()
        for index, candidate in enumerate(self.words[domain]):
            if candidate.casefold() == folded:
                return pos * self.k + index
        raise FormatError(f"{word!r} is not an orientation word of {domain!r}")


@dataclass(frozen=True)
class SlotRun:
    """One contiguous masked stretch: slot number plus token range in the
    original sequence."""

    slot: int
    start: int
    end: int


@dataclass(frozen=True)
class TrainingExample:
    doc_id: int
    origin: str
    template: str
    target_tokens: tuple[str, ...]
    runs: tuple[SlotRun, ...]
    orientation_domain: str
    orientation_index: int


def slot_runs(spans: Sequence[Mapping], n_tokens: int) -> tuple[SlotRun, ...]:
    """Merge span ranges into the contiguous runs the template's sentinels
    stand for. Adjacent or overlapping spans collapse into one slot."""
    positions: set[int] = set()
    for span in spans:
        start, end = int(span["start"]), int(span["end"])
        if not 0 <= start < end <= n_tokens:
            raise FormatError(f"span [{start}, {end}) outside document of {n_tokens} tokens")
        positions.update(range(start, end))
    runs: list[SlotRun] = []
    for pos in sorted(positions):
        if runs and runs[-1].end == pos:
            runs[-1] = SlotRun(runs[-1].slot, runs[-1].start, pos + 1)
        else:
            runs.append(SlotRun(len(runs), pos, pos + 1))
    return tuple(runs)


def parse_training_row(row: Mapping) -> TrainingExample:
    try:
        target_tokens = tuple(str(row["target"]).split())
        example = TrainingExample(
            doc_id=int(row["doc_id"]),
            origin=str(row["origin"]),
            template=str(row["template"]),
            target_tokens=target_tokens,
            runs=slot_runs(row["spans"], len(target_tokens)),
            orientation_domain=str(row["orientation_domain"]),
            orientation_index=int(row["orientation_index"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed training row: {exc}") from exc
    if len(example.runs) != int(row.get("n_slots", len(example.runs))):
        raise FormatError(
            f"doc {example.doc_id}: spans describe {len(example.runs)} slots, "
            f"row says {row.get('n_slots')}"
        )
    return example


def read_training_rows(path: str | Path) -> list[TrainingExample]:
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not JSON: {exc}") from exc
            examples.append(parse_training_row(row))
    return examples


def label_ids(example: TrainingExample, vocab: WordVocab) -> list[int]:
    """Decoder target: sentinel k then the words of run k, then eos."""
    ids: list[int] = []
    for run in example.runs:
        ids.append(vocab.sentinel_id(run.slot))
        for token in example.target_tokens[run.start : run.end]:
            ids.append(vocab.id_of(token))
    ids.append(EOS_ID)
    return ids


@dataclass(frozen=True)
class EncodedExample:
    input_ids: list[int]
    orientation_row: int
    labels: list[int]


def encode_example(
    example: TrainingExample,
    vocab: WordVocab,
    table: OrientationTable,
    max_length: int,
) -> EncodedExample:
    return EncodedExample(
        input_ids=vocab.encode(example.template)[:max_length],
        orientation_row=table.row(example.orientation_domain, example.orientation_index),
        labels=label_ids(example, vocab)[:max_length],
    )


def collate(batch: Sequence[EncodedExample]) -> dict[str, torch.Tensor]:
    """Pad a batch to rectangular tensors. Labels pad with the ignore value
    so padding never contributes loss."""
    in_width = max(len(e.input_ids) for e in batch)
    out_width = max(len(e.labels) for e in batch)
    input_ids = torch.full((len(batch), in_width), PAD_ID, dtype=torch.long)
    attention = torch.zeros((len(batch), in_width), dtype=torch.long)
    labels = torch.full((len(batch), out_width), IGNORE_LABEL, dtype=torch.long)
    orientation = torch.zeros(len(batch), dtype=torch.long)
    for i, e in enumerate(batch):
        input_ids[i, : len(e.input_ids)] = torch.tensor(e.input_ids, dtype=torch.long)
        attention[i, : len(e.input_ids)] = 1
        labels[i, : len(e.labels)] = torch.tensor(e.labels, dtype=torch.long)
        orientation[i] = e.orientation_row
    return {
        "input_ids": input_ids,
        "attention_mask": attention,
        "labels": labels,
        "orientation_rows": orientation,
    }


def batches(
    examples: Sequence[EncodedExample], batch_size: int
) -> Iterable[dict[str, torch.Tensor]]:
    for start in range(0, len(examples), batch_size):
        yield collate(examples[start : start + batch_size])
