"""Orientation sets: K condition descriptors per domain.

Descriptor 0 is the domain name itself; descriptors 1..K-1 are the domain's
top representing words by log(count+1) * affinity, skipping a word that
collides with the domain name. Overrides replace the word list verbatim.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Document, stem_token
from .errors import ConfigurationError, FormatError
from .stats import StatsSnapshot, representing_words


@dataclass(frozen=True)
class OrientationDescriptor:
    domain: str
    index: int
    word: str
    stem: str


@dataclass(frozen=True)
class OrientationSet:
    k: int
    domains: tuple[str, ...]
    table: Mapping[str, tuple[OrientationDescriptor, ...]]
    snapshot_fingerprint: str = ""

    def descriptors(self, domain: str) -> tuple[OrientationDescriptor, ...]:
        try:
            return self.table[domain.lower()]
        except KeyError:
            raise ConfigurationError(f"no orientations for domain {domain!r}") from None


def build_orientations(
    snapshot: StatsSnapshot,
    k: int = 4,
    overrides: Mapping[str, Sequence[str]] | None = None,
) -> OrientationSet:
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    registry = snapshot.registry
    overrides = {name.lower(): list(words) for name, words in (overrides or {}).items()}
    for name in overrides:
        if name not in registry:
            raise ConfigurationError(f"override for unknown domain {name!r}")

    table: dict[str, tuple[OrientationDescriptor, ...]] = {}
    for domain in registry:
        if domain in overrides:
            words = [str(w) for w in overrides[domain]]
            if len(words) != k - 1:
                raise ConfigurationError(
                    f"override for {domain!r} must list {k - 1} words, got {len(words)}"
                )
            if len(set(words)) != len(words) or domain in words:
                raise ConfigurationError(
                    f"override words for {domain!r} must be unique and differ from the domain name"
                )
        else:
            # the domain name can occupy at most one ranked slot, so top k
            # ranked words always leave k-1 after the collision filter
            ranked = [w for w in representing_words(snapshot, domain, k) if w != domain]
            words = ranked[: k - 1]
            if len(words) < k - 1:
                raise ConfigurationError(
                    f"domain {domain!r} has only {len(words)} representing words, need {k - 1}"
                )
        descriptors = [
            OrientationDescriptor(
                domain=domain, index=0, word=domain, stem=stem_token(domain, snapshot.corpus_config)
            )
        ]
        for i, word in enumerate(words, start=1):
            descriptors.append(
                OrientationDescriptor(
                    domain=domain, index=i, word=word, stem=stem_token(word, snapshot.corpus_config)
                )
            )
        table[domain] = tuple(descriptors)
    return OrientationSet(
        k=k, domains=tuple(registry), table=table, snapshot_fingerprint=snapshot.fingerprint
    )


def sample_training_orientation(
    doc: Document, orientations: OrientationSet, rng: random.Random
) -> OrientationDescriptor:
    """Uniform over the domain-name descriptor plus every representing word
    whose stem occurs in the document."""
    descriptors = orientations.descriptors(doc.domain)
    present = set(doc.stems)
    pool = [descriptors[0]] + [d for d in descriptors[1:] if d.stem in present]
    return rng.choice(pool)


def save_orientations(orientations: OrientationSet, path: str | Path) -> None:
    payload = {
        "format": "domainforge-orientations",
        "version": 1,
        "k": orientations.k,
        "snapshot_fingerprint": orientations.snapshot_fingerprint,
        "domains": list(orientations.domains),
        "table": {
            domain: [{"index": d.index, "word": d.word, "stem": d.stem} for d in descs]
            for domain, descs in orientations.table.items()
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_orientations(path: str | Path) -> OrientationSet:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not an orientation-set file: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != "domainforge-orientations":
        raise FormatError("not an orientation-set file")
    if payload.get("version") != 1:
        raise FormatError(f"unsupported orientation-set version {payload.get('version')!r}")
    try:
        k = int(payload["k"])
        domains = tuple(str(d) for d in payload["domains"])
        table = {
            domain: tuple(
                OrientationDescriptor(
                    domain=domain, index=int(e["index"]), word=str(e["word"]), stem=str(e["stem"])
                )
                for e in entries
            )
            for domain, entries in payload["table"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed orientation-set file: {exc}") from exc
    for domain, descs in table.items():
        if len(descs) != k or tuple(d.index for d in descs) != tuple(range(k)):
            raise FormatError(f"orientation indices for {domain!r} are not dense 0..{k - 1}")
    return OrientationSet(
        k=k,
        domains=domains,
        table=table,
        snapshot_fingerprint=str(payload.get("snapshot_fingerprint", "")),
    )


def load_orientation_overrides(path: str | Path) -> dict[str, list[str]]:
    """Override file: JSON object mapping domain name to a word list."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not an override file: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError("override file must be a JSON object of domain -> word list")
    out: dict[str, list[str]] = {}
    for name, words in payload.items():
        if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
            raise FormatError(f"override for {name!r} must be a list of strings")
        out[str(name)] = list(words)
    return out
