"""Per-domain n-gram document-frequency statistics and the scores built on them.

For an n-gram w and domains D_1..D_N, the smoothed posterior is

    P(D_i | w)  proportional to  (df(w, D_i) + alpha_order) / n_docs(D_i)

normalized over domains. The affinity of w for D is

    rho(w, D) = P(D | w) * (1 - H(D | w) / ln N)

with H the entropy of the posterior (natural log; the ratio is base-invariant),
and the masking score toward destination D' is

    m(w, D, D') = rho(w, D) - rho(w, D').

Unknown n-grams score 0 by convention; posterior() raises UnknownNgramError so
callers that need to distinguish "uniform" from "absent" can.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .corpus import CorpusConfig, Document, DomainRegistry, ngram_keys
from .errors import ConfigurationError, FormatError, UnknownNgramError
from .serialize import read_payload, write_payload

_SNAPSHOT_KIND = "snapshot"
_SNAPSHOT_VERSION = 1


def _default_alpha() -> dict[int, float]:
    return {1: 1.0, 2: 5.0, 3: 7.0}


@dataclass(frozen=True)
class StatsConfig:
    alpha: Mapping[int, float] = field(default_factory=_default_alpha)
    min_doc_frequency: int = 10
    max_order: int = 3

    def __post_init__(self) -> None:
        if not 1 <= self.max_order <= 3:
            raise ConfigurationError(f"max_order must be in 1..3, got {self.max_order}")
        if self.min_doc_frequency < 1:
            raise ConfigurationError(
                f"min_doc_frequency must be >= 1, got {self.min_doc_frequency}"
            )
        alpha = dict(self.alpha)
        for order in range(1, self.max_order + 1):
            if order not in alpha:
                raise ConfigurationError(f"alpha has no entry for order {order}")
            if not alpha[order] > 0:
                raise ConfigurationError(f"alpha[{order}] must be positive, got {alpha[order]}")
        object.__setattr__(self, "alpha", alpha)

    def to_dict(self) -> dict:
        return {
            "alpha": {str(order): value for order, value in sorted(self.alpha.items())},
            "min_doc_frequency": self.min_doc_frequency,
            "max_order": self.max_order,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StatsConfig":
        return cls(
            alpha={int(order): float(value) for order, value in data["alpha"].items()},
            min_doc_frequency=int(data["min_doc_frequency"]),
            max_order=int(data["max_order"]),
        )


@dataclass
class StatsSnapshot:
    """Immutable once built. doc_freq maps n-gram key -> per-domain document
    counts (document frequency, not term frequency), pruned to keys whose
    total count meets min_doc_frequency."""

    registry: DomainRegistry
    n_docs: tuple[int, ...]
    doc_freq: dict[str, tuple[int, ...]]
    config: StatsConfig
    corpus_config: CorpusConfig
    fingerprint: str = ""

    def __post_init__(self) -> None:
        if not self.fingerprint:
            self.fingerprint = _fingerprint_of(self)

    def __contains__(self, key: str) -> bool:
        return key in self.doc_freq

    def counts(self, key: str) -> tuple[int, ...]:
        try:
            return self.doc_freq[key]
        except KeyError:
            raise UnknownNgramError(key) from None

    def unigrams(self) -> Iterator[str]:
        for key in self.doc_freq:
            if " " not in key:
                yield key

    def order_of(self, key: str) -> int:
        return key.count(" ") + 1


def _body_dict(snapshot: StatsSnapshot) -> dict:
    return {
        "domains": list(snapshot.registry.names),
        "n_docs": list(snapshot.n_docs),
        "doc_freq": {key: list(counts) for key, counts in snapshot.doc_freq.items()},
        "stats_config": snapshot.config.to_dict(),
        "corpus_config": snapshot.corpus_config.to_dict(),
    }


def _fingerprint_of(snapshot: StatsSnapshot) -> str:
    from .serialize import canonical_json, sha256_hex

    return sha256_hex(canonical_json(_body_dict(snapshot)).encode("ascii"))


def _count_shard(args: tuple[Sequence[tuple[str, ...]], int, int]) -> dict[str, int]:
    stem_seqs, max_order, _shard = args
    counts: dict[str, int] = {}
    for stems in stem_seqs:
        for key in ngram_keys(stems, max_order):
            counts[key] = counts.get(key, 0) + 1
    return counts


def build_stats(
    corpora: Mapping[str, Sequence[Document]],
    config: StatsConfig | None = None,
    corpus_config: CorpusConfig | None = None,
    *,
    jobs: int = 1,
) -> StatsSnapshot:
    """Count per-domain document frequencies and build the snapshot.

    Counting may be sharded across processes (jobs > 1); results are merged
    deterministically so the snapshot fingerprint does not depend on jobs.
    """
    config = config or StatsConfig()
    corpus_config = corpus_config or CorpusConfig()
    registry = DomainRegistry(tuple(corpora))
    if len(registry) < 2:
        raise ConfigurationError(f"need at least 2 domains, got {len(registry)}")
    for name in registry:
        if not corpora[name]:
            raise ConfigurationError(f"domain {name!r} has no documents")

    n_domains = len(registry)
    doc_freq: dict[str, list[int]] = {}
    for domain_id, name in enumerate(registry):
        stem_seqs = [doc.stems for doc in corpora[name]]
        if jobs > 1 and len(stem_seqs) > 1:
            n_shards = min(jobs, len(stem_seqs))
            shards = [
                (stem_seqs[i::n_shards], config.max_order, i) for i in range(n_shards)
            ]
            with ProcessPoolExecutor(max_workers=n_shards) as pool:
                shard_counts = list(pool.map(_count_shard, shards))
        else:
            shard_counts = [_count_shard((stem_seqs, config.max_order, 0))]
        for counts in shard_counts:
            for key, count in counts.items():
                row = doc_freq.get(key)
                if row is None:
                    row = [0] * n_domains
                    doc_freq[key] = row
                row[domain_id] += count

    pruned = {
        key: tuple(row)
        for key, row in sorted(doc_freq.items())
        if sum(row) >= config.min_doc_frequency
    }
    return StatsSnapshot(
        registry=registry,
        n_docs=tuple(len(corpora[name]) for name in registry),
        doc_freq=pruned,
        config=config,
        corpus_config=corpus_config,
    )


def posterior(snapshot: StatsSnapshot, key: str) -> tuple[float, ...]:
    """Smoothed domain posterior for a known n-gram; strictly positive and
    sums to 1. Raises UnknownNgramError for keys outside the snapshot."""
    counts = snapshot.counts(key)
    alpha = snapshot.config.alpha[snapshot.order_of(key)]
    unnorm = [(c + alpha) / n for c, n in zip(counts, snapshot.n_docs)]
    total = sum(unnorm)
    return tuple(u / total for u in unnorm)


def _certainty(probs: Sequence[float]) -> float:
    """1 - H/ln N, clamped to [0, 1] against float round-off at uniformity."""
    n = len(probs)
    entropy = -sum(p * math.log(p) for p in probs)
    value = 1.0 - entropy / math.log(n)
    return min(1.0, max(0.0, value))


def affinity(snapshot: StatsSnapshot, key: str, domain: str) -> float:
    """rho(w, D) in [0, 1]; 0 for n-grams outside the snapshot."""
    domain_id = snapshot.registry.id_of(domain)
    try:
        probs = posterior(snapshot, key)
    except UnknownNgramError:
        return 0.0
    return probs[domain_id] * _certainty(probs)


def masking_score(snapshot: StatsSnapshot, key: str, origin: str, destination: str) -> float:
    """m(w, D, D') = rho(w, D) - rho(w, D'), in [-1, 1]; 0 for unknown keys."""
    origin_id = snapshot.registry.id_of(origin)
    destination_id = snapshot.registry.id_of(destination)
    try:
        probs = posterior(snapshot, key)
    except UnknownNgramError:
        return 0.0
    certainty = _certainty(probs)
    return probs[origin_id] * certainty - probs[destination_id] * certainty


def representing_score(snapshot: StatsSnapshot, word: str, domain: str) -> float:
    """log(df + 1) * rho, the ranking score for representing words."""
    domain_id = snapshot.registry.id_of(domain)
    try:
        counts = snapshot.counts(word)
    except UnknownNgramError:
        return 0.0
    return math.log(counts[domain_id] + 1) * affinity(snapshot, word, domain)


def representing_words(snapshot: StatsSnapshot, domain: str, top_k: int) -> list[str]:
    """Unigrams ranked by log(df+1)*rho for the domain, descending; ties are
    broken lexicographically. Returns fewer than top_k only if the snapshot
    has fewer unigrams."""
    if top_k < 0:
        raise ConfigurationError(f"top_k must be >= 0, got {top_k}")
    scored = [(-representing_score(snapshot, word, domain), word) for word in snapshot.unigrams()]
    scored.sort()
    return [word for _, word in scored[:top_k]]


def save_snapshot(snapshot: StatsSnapshot, path: str) -> str:
    """Write the versioned container; returns the fingerprint. Byte-stable:
    the same snapshot always serializes to the same bytes."""
    header = {"alpha": snapshot.config.to_dict()["alpha"]}
    fingerprint = write_payload(path, _SNAPSHOT_KIND, _SNAPSHOT_VERSION, header, _body_dict(snapshot))
    if fingerprint != snapshot.fingerprint:
        raise FormatError("snapshot fingerprint changed during save; snapshot was mutated")
    return fingerprint


def load_snapshot(path: str) -> StatsSnapshot:
    header, body = read_payload(path, _SNAPSHOT_KIND, _SNAPSHOT_VERSION)
    try:
        config = StatsConfig.from_dict(body["stats_config"])
        corpus_config = CorpusConfig.from_dict(body["corpus_config"])
        snapshot = StatsSnapshot(
            registry=DomainRegistry(tuple(body["domains"])),
            n_docs=tuple(int(n) for n in body["n_docs"]),
            doc_freq={key: tuple(int(c) for c in counts) for key, counts in body["doc_freq"].items()},
            config=config,
            corpus_config=corpus_config,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"snapshot file {path} has a malformed body: {exc}") from exc
    if header.get("alpha") != body["stats_config"]["alpha"]:
        raise FormatError(
            f"snapshot file {path}: header alpha {header.get('alpha')} does not match "
            f"body alpha {body['stats_config']['alpha']}"
        )
    return snapshot
