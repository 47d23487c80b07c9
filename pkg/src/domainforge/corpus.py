"""Corpus loading, tokenization, stemming, and n-gram extraction.

Documents carry two parallel token sequences: the surface tokens as they
appear in the text, and their stems. Every later stage (statistics, masking,
vocabulary checks, the filter) operates on stems; the surface tokens exist so
templates can reproduce the original text exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import _snowball
from .errors import ConfigurationError, CorpusFormatError

# Words are runs of word characters; every other non-space character is its
# own token ("good knife!" -> good, knife, !).
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_WORD_RE = re.compile(r"\w", re.UNICODE)

STEMMERS: dict[str, Callable[[str], str]] = {
    "snowball-english": _snowball.stem,
    "none": lambda w: w,
}


@dataclass(frozen=True)
class CorpusConfig:
    truncation_limit: int = 96
    lowercase: bool = True
    stemmer: str = "snowball-english"

    def __post_init__(self) -> None:
        if self.truncation_limit < 1:
            raise ConfigurationError(f"truncation_limit must be >= 1, got {self.truncation_limit}")
        if self.stemmer not in STEMMERS:
            raise ConfigurationError(
                f"unknown stemmer {self.stemmer!r}; available: {sorted(STEMMERS)}"
            )

    def to_dict(self) -> dict:
        return {
            "truncation_limit": self.truncation_limit,
            "lowercase": self.lowercase,
            "stemmer": self.stemmer,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CorpusConfig":
        return cls(
            truncation_limit=int(data["truncation_limit"]),
            lowercase=bool(data["lowercase"]),
            stemmer=str(data["stemmer"]),
        )


@dataclass(frozen=True)
class DomainRegistry:
    """Ordered set of domain names; ids are dense positions in that order."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        folded = tuple(name.lower() for name in self.names)
        object.__setattr__(self, "names", folded)
        if any(not name for name in folded):
            raise ConfigurationError("domain names must be non-empty")
        if len(set(folded)) != len(folded):
            raise ConfigurationError(f"duplicate domain names in {folded}")

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __getitem__(self, domain_id: int) -> str:
        return self.names[domain_id]

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name.lower())
        except ValueError:
            raise ConfigurationError(f"unknown domain {name!r}; registry has {self.names}") from None

    def __contains__(self, name: str) -> bool:
        return name.lower() in self.names


@dataclass(frozen=True)
class Document:
    doc_id: int
    domain: str
    text: str
    tokens: tuple[str, ...]
    stems: tuple[str, ...]
    label: str | None = None

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.stems):
            raise ValueError(
                f"doc {self.doc_id}: {len(self.tokens)} tokens vs {len(self.stems)} stems"
            )


@dataclass(frozen=True)
class Ngram:
    order: int
    key: str
    start: int
    end: int  # exclusive token position


def tokenize(text: str, config: CorpusConfig | None = None) -> tuple[str, ...]:
    """Surface tokens, truncated to the config's limit (whole tokens only)."""
    tokens = _TOKEN_RE.findall(text)
    if config is not None:
        tokens = tokens[: config.truncation_limit]
    return tuple(tokens)


def stem_token(token: str, config: CorpusConfig) -> str:
    stemmer = STEMMERS[config.stemmer]
    if not _WORD_RE.search(token):
        return token  # punctuation passes through unchanged
    if config.lowercase:
        token = token.lower()
    return stemmer(token)


def make_document(
    doc_id: int,
    domain: str,
    text: str,
    config: CorpusConfig,
    label: str | None = None,
) -> Document:
    tokens = tokenize(text, config)
    stems = tuple(stem_token(tok, config) for tok in tokens)
    return Document(
        doc_id=doc_id, domain=domain.lower(), text=text, tokens=tokens, stems=stems, label=label
    )


def load_corpus(
    path: str | Path,
    domain: str,
    config: CorpusConfig | None = None,
    *,
    start_id: int = 0,
) -> list[Document]:
    """Read one domain's JSONL file. Each record needs "text"; "label" and "id"
    are optional. Blank lines are skipped; anything else malformed raises
    CorpusFormatError with the line number."""
    config = config or CorpusConfig()
    docs: list[Document] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON in {path}: {exc.msg}", lineno) from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"record must be a JSON object, got {type(record).__name__}", lineno)
            if "text" not in record:
                raise CorpusFormatError('record is missing the "text" field', lineno)
            text = record["text"]
            if not isinstance(text, str):
                raise CorpusFormatError(f'"text" must be a string, got {type(text).__name__}', lineno)
            label = record.get("label")
            if label is not None:
                if isinstance(label, bool) or not isinstance(label, (str, int)):
                    raise CorpusFormatError(f'"label" must be a string, got {label!r}', lineno)
                label = str(label)
            docs.append(make_document(start_id + len(docs), domain, text, config, label))
    return docs


def load_domain_corpora(
    paths: Mapping[str, str | Path],
    config: CorpusConfig | None = None,
) -> tuple[DomainRegistry, dict[str, list[Document]]]:
    """Load one JSONL file per domain; doc ids are dense across all files in
    mapping order."""
    registry = DomainRegistry(tuple(paths))
    corpora: dict[str, list[Document]] = {}
    next_id = 0
    for name, path in paths.items():
        docs = load_corpus(path, name, config, start_id=next_id)
        corpora[name.lower()] = docs
        next_id += len(docs)
    return registry, corpora


def ngrams(doc: Document, max_order: int) -> Iterator[Ngram]:
    """All contiguous stem n-grams of orders 1..max_order with surface spans.

    A document with T tokens yields max(0, T - k + 1) n-grams of order k.
    """
    if not 1 <= max_order <= 3:
        raise ConfigurationError(f"max_order must be in 1..3, got {max_order}")
    stems = doc.stems
    n = len(stems)
    for order in range(1, max_order + 1):
        for start in range(0, n - order + 1):
            yield Ngram(order=order, key=" ".join(stems[start : start + order]), start=start, end=start + order)


def ngram_keys(stems: Sequence[str], max_order: int) -> set[str]:
    """Distinct n-gram keys of a stem sequence (document-frequency counting)."""
    keys: set[str] = set()
    n = len(stems)
    for order in range(1, max_order + 1):
        for start in range(0, n - order + 1):
            keys.add(" ".join(stems[start : start + order]))
    return keys


def is_word(token: str) -> bool:
    """True for tokens that count as words (not punctuation)."""
    return bool(_WORD_RE.search(token))


def count_words(tokens: Iterable[str]) -> int:
    return sum(1 for tok in tokens if is_word(tok))
