"""Slot filling under a destination-constrained vocabulary.

A word is admitted for destination D' when its masking score against at least
one other domain clears the threshold: max over i != D' of m(w, D', D_i) > tau.
The original document's stems are always allowed. The native filler samples
slot words by log(count+1) * affinity weight, boosted for words that co-occur
with the orientation word; the external filler delegates to a generation
service over HTTP and enforces the same vocabulary on what comes back.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import requests

from .corpus import Document, CorpusConfig, is_word, stem_token, tokenize
from .corruption import Keep, MaskedTemplate, Slot
from .errors import (
    ConfigurationError,
    ServiceGenerationError,
    ServiceProtocolError,
    ServiceTransportError,
    VocabularyViolationError,
)
from .orientation import OrientationDescriptor, OrientationSet
from .stats import StatsSnapshot, _certainty, affinity, posterior

NATIVE_ORIENTED = "native-oriented"
NATIVE_UNORIENTED = "native-unoriented"
EXTERNAL_SERVICE = "external-service"
_VARIANTS = (NATIVE_ORIENTED, NATIVE_UNORIENTED, EXTERNAL_SERVICE)

DEFAULT_BOOST = 4.0


@dataclass(frozen=True)
class ReconstructorKind:
    variant: str = NATIVE_ORIENTED
    boost: float = DEFAULT_BOOST
    service_url: str | None = None
    enforce_vocabulary: bool = True
    beam_size: int = 4
    max_length: int = 96
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ConfigurationError(
                f"unknown reconstructor {self.variant!r}, expected one of {_VARIANTS}"
            )
        if self.boost <= 0:
            raise ConfigurationError(f"boost must be positive, got {self.boost}")
        if self.beam_size < 1:
            raise ConfigurationError(f"beam_size must be >= 1, got {self.beam_size}")


@dataclass(frozen=True)
class AllowedVocabulary:
    destination: str
    tau: float
    words: frozenset[str]  # score-admitted stems; the sampling pool
    original_stems: frozenset[str]
    constrained: bool = True

    def allowed(self) -> frozenset[str]:
        return self.words | self.original_stems

    def permits(self, stem: str) -> bool:
        return stem in self.words or stem in self.original_stems


def admitted_unigrams(snapshot: StatsSnapshot, destination: str, tau: float) -> frozenset[str]:
    """Stems whose masking score against some other domain clears tau."""
    registry = snapshot.registry
    dest_id = registry.id_of(destination)
    if len(registry) < 2:
        raise ConfigurationError("constrained vocabulary needs at least two domains")
    admitted: set[str] = set()
    for word in snapshot.unigrams():
        # max_i m(w, dest, D_i) = rho(dest) - min_i rho(D_i); one posterior per word
        p = posterior(snapshot, word)
        c = _certainty(p)
        rho_dest = p[dest_id] * c
        rho_min = min(p[i] * c for i in range(len(p)) if i != dest_id)
        if rho_dest - rho_min > tau:
            admitted.add(word)
    return frozenset(admitted)


def build_allowed_vocabulary(
    snapshot: StatsSnapshot,
    destination: str,
    original: Document,
    tau: float = 0.08,
    *,
    admitted: frozenset[str] | None = None,
) -> AllowedVocabulary:
    if admitted is None:
        admitted = admitted_unigrams(snapshot, destination, tau)
    return AllowedVocabulary(
        destination=snapshot.registry[snapshot.registry.id_of(destination)],
        tau=tau,
        words=admitted,
        original_stems=frozenset(original.stems),
    )


def build_unconstrained_vocabulary(
    snapshot: StatsSnapshot, destination: str, original: Document
) -> AllowedVocabulary:
    """Whole snapshot unigram vocabulary; used by the round-robin ablation."""
    dest_id = snapshot.registry.id_of(destination)
    return AllowedVocabulary(
        destination=snapshot.registry[dest_id],
        tau=0.0,
        words=frozenset(snapshot.unigrams()),
        original_stems=frozenset(original.stems),
        constrained=False,
    )


@dataclass(frozen=True)
class CooccurrenceIndex:
    """Stems seen in the same document as an orientation stem, per domain."""

    table: Mapping[tuple[str, str], frozenset[str]]

    def partners(self, domain: str, stem: str) -> frozenset[str]:
        return self.table.get((domain.lower(), stem), frozenset())


def build_cooccurrence(
    corpora: Mapping[str, Sequence[Document]], orientations: OrientationSet
) -> CooccurrenceIndex:
    table: dict[tuple[str, str], frozenset[str]] = {}
    for domain, descriptors in orientations.table.items():
        docs = corpora.get(domain, ())
        for descriptor in descriptors:
            partners: set[str] = set()
            for doc in docs:
                stems = set(doc.stems)
                if descriptor.stem in stems:
                    partners.update(stems)
            partners.discard(descriptor.stem)
            table[(domain, descriptor.stem)] = frozenset(partners)
    return CooccurrenceIndex(table=table)


@dataclass(frozen=True)
class FillResult:
    text: str
    tokens: tuple[str, ...]
    slot_fills: tuple[tuple[str, ...], ...]
    used_fallback: bool
    source: str
    model_version: str | None = None


def _slot_lengths(template: MaskedTemplate) -> list[int]:
    return [seg.end - seg.start for seg in template.segments if isinstance(seg, Slot)]


def _assemble(template: MaskedTemplate, fills: Sequence[Sequence[str]]) -> tuple[str, ...]:
    parts: list[str] = []
    for seg in template.segments:
        if isinstance(seg, Keep):
            parts.extend(seg.tokens)
        else:
            parts.extend(fills[seg.index])
    return tuple(parts)


def fill_native(
    template: MaskedTemplate,
    orientation: OrientationDescriptor | None,
    snapshot: StatsSnapshot,
    vocab: AllowedVocabulary,
    rng: random.Random,
    *,
    boost: float = DEFAULT_BOOST,
    cooccurrence: CooccurrenceIndex | None = None,
) -> FillResult:
    """Sample slot words from the admitted pool, weighted by the destination
    representing-word score. With an orientation and a co-occurrence index,
    words sharing a document with the orientation word get their weight
    multiplied by boost. Empty pool falls back to the original stems."""
    destination = vocab.destination
    pool = sorted(vocab.words)
    used_fallback = False
    if not pool:
        pool = sorted(vocab.original_stems)
        used_fallback = True
        if not pool:
            raise ConfigurationError("no admissible words and the original document is empty")

    partners: frozenset[str] = frozenset()
    if orientation is not None and cooccurrence is not None:
        partners = cooccurrence.partners(destination, orientation.stem)

    dest_id = snapshot.registry.id_of(destination)
    weights: list[float] = []
    for word in pool:
        count = snapshot.counts(word)[dest_id] if word in snapshot else 0
        w = math.log(count + 1.0) * affinity(snapshot, word, destination)
        if word in partners:
            w *= boost
        weights.append(w)
    if not any(w > 0 for w in weights):
        weights = [1.0] * len(pool)

    fills: list[tuple[str, ...]] = []
    for length in _slot_lengths(template):
        fills.append(tuple(rng.choices(pool, weights=weights, k=length)))

    tokens = _assemble(template, fills)
    if len(tokens) != len(template.tokens):
        raise RuntimeError("native fill changed the token count")
    allowed = vocab.allowed()
    for fill in fills:
        for word in fill:
            if word not in allowed:
                raise RuntimeError(f"native fill emitted a word outside the vocabulary: {word!r}")
    return FillResult(
        text=" ".join(tokens),
        tokens=tokens,
        slot_fills=tuple(fills),
        used_fallback=used_fallback,
        source="native",
    )


class ServiceClient:
    """Thin HTTP client for a generation service speaking the /generate protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0, session: requests.Session | None = None):
        if not base_url:
            raise ConfigurationError("service URL is empty; set --service-url or DOMAINFORGE_SERVICE_URL")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def _post(self, route: str, payload: dict) -> dict:
        url = f"{self.base_url}{route}"
        try:
            response = self._session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ServiceTransportError(f"cannot reach generation service at {url}: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("error", response.text)
            except ValueError:
                detail = response.text
            raise ServiceGenerationError(f"service returned {response.status_code}: {detail}")
        try:
            body = response.json()
        except ValueError as exc:
            raise ServiceProtocolError(f"service response is not JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise ServiceProtocolError("service response must be a JSON object")
        return body

    def generate(self, payload: dict) -> dict:
        body = self._post("/generate", payload)
        for key in ("text", "slot_fills", "model_version"):
            if key not in body:
                raise ServiceProtocolError(f"service response is missing {key!r}")
        if not isinstance(body["text"], str) or not isinstance(body["slot_fills"], list):
            raise ServiceProtocolError("service response has wrong field types")
        return body

    def health(self) -> dict:
        url = f"{self.base_url}/health"
        try:
            response = self._session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ServiceTransportError(f"cannot reach generation service at {url}: {exc}") from exc
        if response.status_code >= 400:
            raise ServiceGenerationError(f"health check returned {response.status_code}")
        return response.json()


def fill_external(
    template: MaskedTemplate,
    orientation: OrientationDescriptor | None,
    vocab: AllowedVocabulary,
    client: ServiceClient,
    kind: ReconstructorKind,
    corpus_config: CorpusConfig | None = None,
) -> FillResult:
    corpus_config = corpus_config or CorpusConfig()
    payload = {
        "template": template.text(),
        "destination": vocab.destination,
        "orientation_domain": orientation.domain if orientation else vocab.destination,
        "orientation_word": orientation.word if orientation else vocab.destination,
        "allowed_words": sorted(vocab.allowed()) if kind.enforce_vocabulary else None,
        "enforce_vocabulary": kind.enforce_vocabulary,
        "max_length": kind.max_length,
        "beam_size": kind.beam_size,
    }
    body = client.generate(payload)
    text = body["text"]
    slot_fills = tuple(tuple(str(w) for w in fill) for fill in body["slot_fills"])

    if template.n_slots == 0:
        if text != template.text():
            raise ServiceProtocolError(
                "service altered a template with no slots; zero-slot calls must echo verbatim"
            )
    if len(slot_fills) != template.n_slots:
        raise ServiceProtocolError(
            f"service returned {len(slot_fills)} slot fills for {template.n_slots} slots"
        )

    tokens = tokenize(text, corpus_config)
    if kind.enforce_vocabulary:
        allowed = vocab.allowed()
        kept = {stem_token(t, corpus_config) for seg in template.segments if isinstance(seg, Keep) for t in seg.tokens}
        violations = sorted(
            {
                stem_token(token, corpus_config)
                for token in tokens
                if is_word(token)
                and stem_token(token, corpus_config) not in allowed
                and stem_token(token, corpus_config) not in kept
            }
        )
        if violations:
            raise VocabularyViolationError(tuple(violations))
    return FillResult(
        text=text,
        tokens=tokens,
        slot_fills=slot_fills,
        used_fallback=False,
        source="external",
        model_version=str(body["model_version"]),
    )
