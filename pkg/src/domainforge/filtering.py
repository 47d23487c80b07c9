"""Candidate filtering: domain agreement, minimum length, minimum overlap.

The domain check uses a multinomial Naive Bayes classifier over stemmed
unigrams with add-k smoothing. All three rejection reasons are evaluated for
every candidate so reports can show the full breakdown; acceptance means the
reason list came back empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import CorpusConfig, Document, DomainRegistry, count_words, stem_token, tokenize
from .errors import ConfigurationError, FormatError, UndefinedInputError
from .serialize import read_payload, write_payload

REASON_DOMAIN = "domain-mismatch"
REASON_SHORT = "too-short"
REASON_OVERLAP = "low-overlap"

_KIND = "classifier"
_VERSION = 1


@dataclass(frozen=True)
class FilterConfig:
    min_words: int = 4
    min_overlap: float = 0.25
    require_domain_agreement: bool = True

    def __post_init__(self) -> None:
        if self.min_words < 0:
            raise ConfigurationError(f"min_words must be >= 0, got {self.min_words}")
        if not 0.0 <= self.min_overlap <= 1.0:
            raise ConfigurationError(f"min_overlap must be in [0, 1], got {self.min_overlap}")

    def to_dict(self) -> dict:
        return {
            "min_words": self.min_words,
            "min_overlap": self.min_overlap,
            "require_domain_agreement": self.require_domain_agreement,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FilterConfig":
        return cls(
            min_words=int(data["min_words"]),
            min_overlap=float(data["min_overlap"]),
            require_domain_agreement=bool(data["require_domain_agreement"]),
        )


@dataclass(frozen=True)
class DomainClassifier:
    registry: DomainRegistry
    corpus_config: CorpusConfig
    smoothing: float
    vocabulary: tuple[str, ...]
    log_priors: np.ndarray  # (D,)
    log_likelihood: np.ndarray  # (D, V)
    unknown_log_likelihood: np.ndarray  # (D,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.vocabulary)})


def train_domain_classifier(
    corpora: Mapping[str, Sequence[Document]],
    smoothing: float = 1.0,
    corpus_config: CorpusConfig | None = None,
) -> DomainClassifier:
    corpus_config = corpus_config or CorpusConfig()
    if smoothing <= 0:
        raise ConfigurationError(f"smoothing must be positive, got {smoothing}")
    names = list(corpora)
    if len(names) < 2:
        raise ConfigurationError(f"need at least 2 domains to classify, got {len(names)}")
    for name, docs in corpora.items():
        if not docs:
            raise ConfigurationError(f"domain {name!r} has no documents")
    registry = DomainRegistry(tuple(names))

    vocab_set: set[str] = set()
    for docs in corpora.values():
        for doc in docs:
            vocab_set.update(doc.stems)
    vocabulary = tuple(sorted(vocab_set))
    index = {w: i for i, w in enumerate(vocabulary)}

    n_domains = len(registry)
    counts = np.zeros((n_domains, len(vocabulary)), dtype=np.float64)
    doc_counts = np.zeros(n_domains, dtype=np.float64)
    for name, docs in corpora.items():
        d = registry.id_of(name)
        doc_counts[d] = len(docs)
        row = counts[d]
        for doc in docs:
            for stem in doc.stems:
                row[index[stem]] += 1.0

    token_totals = counts.sum(axis=1)
    denom = token_totals + smoothing * len(vocabulary)
    log_likelihood = np.log((counts + smoothing) / denom[:, None])
    unknown = np.log(smoothing / denom)
    log_priors = np.log(doc_counts / doc_counts.sum())
    return DomainClassifier(
        registry=registry,
        corpus_config=corpus_config,
        smoothing=smoothing,
        vocabulary=vocabulary,
        log_priors=log_priors,
        log_likelihood=log_likelihood,
        unknown_log_likelihood=unknown,
    )


def _text_stems(classifier: DomainClassifier, text: str) -> list[str]:
    config = classifier.corpus_config
    return [stem_token(t, config) for t in tokenize(text, config)]


def predict_domain(classifier: DomainClassifier, text: str) -> tuple[str, tuple[float, ...]]:
    """Returns (winning domain, posterior over domains). Ties go to the
    lowest domain id; posteriors sum to 1."""
    scores = classifier.log_priors.copy()
    index: dict = classifier._index  # type: ignore[attr-defined]
    for stem in _text_stems(classifier, text):
        pos = index.get(stem)
        if pos is None:
            scores += classifier.unknown_log_likelihood
        else:
            scores += classifier.log_likelihood[:, pos]
    shifted = scores - scores.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    winner = int(np.argmax(probs))  # argmax returns the first maximum
    return classifier.registry[winner], tuple(float(p) for p in probs)


def word_overlap(original: Document, candidate_text: str, config: CorpusConfig | None = None) -> float:
    """|distinct original stems kept in the candidate| / |distinct original stems|."""
    config = config or CorpusConfig()
    original_stems = set(original.stems)
    if not original_stems:
        raise UndefinedInputError("word overlap with a zero-token original is undefined")
    candidate_stems = {stem_token(t, config) for t in tokenize(candidate_text, config)}
    return len(original_stems & candidate_stems) / len(original_stems)


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reasons: tuple[str, ...]
    word_count: int
    overlap: float
    predicted_domain: str | None


def apply_filter(
    candidate_text: str,
    original: Document,
    destination: str,
    classifier: DomainClassifier | None,
    config: FilterConfig | None = None,
    corpus_config: CorpusConfig | None = None,
) -> FilterVerdict:
    """Evaluate every rule; a candidate is accepted when no rule fires."""
    config = config or FilterConfig()
    corpus_config = corpus_config or CorpusConfig()
    reasons: list[str] = []

    predicted: str | None = None
    if config.require_domain_agreement:
        if classifier is None:
            raise ConfigurationError("domain agreement requires a trained classifier")
        predicted, _ = predict_domain(classifier, candidate_text)
        if predicted != destination.lower():
            reasons.append(REASON_DOMAIN)

    word_count = count_words(tokenize(candidate_text, corpus_config))
    if word_count < config.min_words:
        reasons.append(REASON_SHORT)

    overlap = word_overlap(original, candidate_text, corpus_config)
    if overlap < config.min_overlap:
        reasons.append(REASON_OVERLAP)

    return FilterVerdict(
        accepted=not reasons,
        reasons=tuple(reasons),
        word_count=word_count,
        overlap=overlap,
        predicted_domain=predicted,
    )


def save_classifier(classifier: DomainClassifier, path: str | Path) -> str:
    body = {
        "domains": list(classifier.registry),
        "corpus_config": classifier.corpus_config.to_dict(),
        "smoothing": classifier.smoothing,
        "vocabulary": list(classifier.vocabulary),
        "log_priors": [repr(x) for x in classifier.log_priors.tolist()],
        "log_likelihood": [[repr(x) for x in row] for row in classifier.log_likelihood.tolist()],
        "unknown_log_likelihood": [repr(x) for x in classifier.unknown_log_likelihood.tolist()],
    }
    header = {"domains": len(classifier.registry), "vocabulary": len(classifier.vocabulary)}
    return write_payload(path, _KIND, _VERSION, header, body)


def load_classifier(path: str | Path) -> DomainClassifier:
    _, body = read_payload(path, _KIND, _VERSION)
    try:
        return DomainClassifier(
            registry=DomainRegistry(tuple(body["domains"])),
            corpus_config=CorpusConfig.from_dict(body["corpus_config"]),
            smoothing=float(body["smoothing"]),
            vocabulary=tuple(body["vocabulary"]),
            log_priors=np.array([float(x) for x in body["log_priors"]], dtype=np.float64),
            log_likelihood=np.array(
                [[float(x) for x in row] for row in body["log_likelihood"]], dtype=np.float64
            ),
            unknown_log_likelihood=np.array(
                [float(x) for x in body["unknown_log_likelihood"]], dtype=np.float64
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed classifier file: {exc}") from exc
