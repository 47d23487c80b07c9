"""Masking: turn a document into a slotted template aimed at a destination domain.

Threshold masking runs one pass per n-gram order (unigrams, then bigrams over
fully unmasked positions, then trigrams). Within a pass, candidates are taken
in descending score order with leftmost tie-break, and a candidate touching a
position masked earlier in the same pass is skipped. A bigram whose words were
partly masked by the unigram pass is never considered, even if its own score
clears the threshold. After the threshold passes, training mode masks extra
positions uniformly at random. Adjacent masked positions merge into one slot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

from .corpus import Document
from .errors import ConfigurationError, UndefinedInputError
from .stats import StatsSnapshot, masking_score

REASON_THRESHOLD = "threshold"
REASON_EXTRA = "extra-noise"


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


@dataclass(frozen=True)
class CorruptionConfig:
    tau: float = 0.08
    extra_mask_fraction: float = 0.0  # inference default; training() uses 0.05
    max_order: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not -1.0 < self.tau < 1.0:
            raise ConfigurationError(f"tau must be in (-1, 1), got {self.tau}")
        if not 0.0 <= self.extra_mask_fraction <= 1.0:
            raise ConfigurationError(
                f"extra_mask_fraction must be in [0, 1], got {self.extra_mask_fraction}"
            )
        if not 1 <= self.max_order <= 3:
            raise ConfigurationError(f"max_order must be in 1..3, got {self.max_order}")

    @classmethod
    def training(cls, **kwargs) -> "CorruptionConfig":
        kwargs.setdefault("extra_mask_fraction", 0.05)
        return cls(**kwargs)


@dataclass(frozen=True)
class MaskedSpan:
    start: int
    end: int  # exclusive
    key: str
    order: int
    score: float
    reason: str


@dataclass(frozen=True)
class Keep:
    start: int
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Slot:
    index: int
    start: int
    end: int


Segment = Union[Keep, Slot]


@dataclass(frozen=True)
class MaskedTemplate:
    doc_id: int
    origin: str
    destination: str
    tokens: tuple[str, ...]
    stems: tuple[str, ...]
    segments: tuple[Segment, ...]
    spans: tuple[MaskedSpan, ...]
    label: str | None = None

    @property
    def n_slots(self) -> int:
        return sum(1 for seg in self.segments if isinstance(seg, Slot))

    @property
    def slots(self) -> tuple[Slot, ...]:
        return tuple(seg for seg in self.segments if isinstance(seg, Slot))

    @property
    def masked_count(self) -> int:
        return sum(seg.end - seg.start for seg in self.segments if isinstance(seg, Slot))

    @property
    def total_tokens(self) -> int:
        return len(self.tokens)

    def masked_positions(self) -> set[int]:
        out: set[int] = set()
        for seg in self.segments:
            if isinstance(seg, Slot):
                out.update(range(seg.start, seg.end))
        return out

    def text(self) -> str:
        """Sentinel form: kept tokens verbatim, slot k rendered <extra_id_k>."""
        parts: list[str] = []
        for seg in self.segments:
            if isinstance(seg, Keep):
                parts.extend(seg.tokens)
            else:
                parts.append(f"<extra_id_{seg.index}>")
        return " ".join(parts)

    def kept_text(self) -> str:
        parts: list[str] = []
        for seg in self.segments:
            if isinstance(seg, Keep):
                parts.extend(seg.tokens)
        return " ".join(parts)

    def reconstruct_tokens(self) -> tuple[str, ...]:
        """Original token sequence from segments plus span surfaces."""
        parts: list[str] = []
        for seg in self.segments:
            if isinstance(seg, Keep):
                parts.extend(seg.tokens)
            else:
                parts.extend(self.tokens[seg.start : seg.end])
        return tuple(parts)


def _build_segments(doc: Document, masked: Sequence[bool]) -> tuple[Segment, ...]:
    segments: list[Segment] = []
    slot_index = 0
    i = 0
    n = len(masked)
    while i < n:
        j = i
        if masked[i]:
            while j < n and masked[j]:
                j += 1
            segments.append(Slot(index=slot_index, start=i, end=j))
            slot_index += 1
        else:
            while j < n and not masked[j]:
                j += 1
            segments.append(Keep(start=i, tokens=doc.tokens[i:j]))
        i = j
    return tuple(segments)


def _finish(doc: Document, destination: str, masked: list[bool], spans: list[MaskedSpan]) -> MaskedTemplate:
    return MaskedTemplate(
        doc_id=doc.doc_id,
        origin=doc.domain,
        destination=destination,
        tokens=doc.tokens,
        stems=doc.stems,
        segments=_build_segments(doc, masked),
        spans=tuple(sorted(spans, key=lambda s: s.start)),
        label=doc.label,
    )


def mask(
    doc: Document,
    destination: str,
    snapshot: StatsSnapshot,
    config: CorruptionConfig | None = None,
    *,
    allow_same_domain: bool = False,
) -> MaskedTemplate:
    """Threshold-mask doc toward destination, plus seeded extra noise if the
    config asks for it. Same-domain masking is an error unless explicitly
    allowed (training wrapper, diagonal rate measurements)."""
    config = config or CorruptionConfig()
    registry = snapshot.registry
    origin = doc.domain
    registry.id_of(origin)
    registry.id_of(destination)
    if origin == destination.lower() and not allow_same_domain:
        raise ConfigurationError(
            f"masking within the same domain {origin!r} is only valid for training"
        )

    n = len(doc.tokens)
    masked = [False] * n
    spans: list[MaskedSpan] = []
    max_order = min(config.max_order, snapshot.config.max_order)
    for order in range(1, max_order + 1):
        candidates: list[tuple[float, int, str]] = []
        for start in range(0, n - order + 1):
            if any(masked[start : start + order]):
                continue
            key = " ".join(doc.stems[start : start + order])
            score = masking_score(snapshot, key, origin, destination)
            if score > config.tau:
                candidates.append((score, start, key))
        candidates.sort(key=lambda item: (-item[0], item[1]))
        for score, start, key in candidates:
            if any(masked[start : start + order]):
                continue
            for pos in range(start, start + order):
                masked[pos] = True
            spans.append(
                MaskedSpan(start=start, end=start + order, key=key, order=order, score=score, reason=REASON_THRESHOLD)
            )

    if config.extra_mask_fraction > 0.0:
        target = _round_half_up(config.extra_mask_fraction * n)
        free = [i for i in range(n) if not masked[i]]
        rng = random.Random(f"{config.rng_seed}:{doc.doc_id}:extra-noise")
        for pos in sorted(rng.sample(free, min(target, len(free)))):
            masked[pos] = True
            stem = doc.stems[pos]
            spans.append(
                MaskedSpan(
                    start=pos,
                    end=pos + 1,
                    key=stem,
                    order=1,
                    score=masking_score(snapshot, stem, origin, destination),
                    reason=REASON_EXTRA,
                )
            )

    return _finish(doc, destination, masked, spans)


def mask_for_training(
    doc: Document,
    snapshot: StatsSnapshot,
    config: CorruptionConfig | None = None,
    rng: random.Random | None = None,
) -> tuple[MaskedTemplate, str]:
    """Mask toward a uniformly sampled fake destination, then point the
    template back at the origin: the reconstruction target is the original
    document. Returns (template, fake_destination)."""
    config = config or CorruptionConfig.training()
    rng = rng or random.Random(config.rng_seed)
    others = [name for name in snapshot.registry if name != doc.domain]
    if not others:
        raise ConfigurationError(f"no destination domain differs from {doc.domain!r}")
    fake = rng.choice(others)
    template = mask(doc, fake, snapshot, config)
    return replace(template, destination=doc.domain), fake


def mask_random(doc: Document, fraction: float, rng: random.Random) -> MaskedTemplate:
    """Mask round(fraction * T) positions uniformly at random; no snapshot, so
    every span carries score 0. Used by the random-masking ablations."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError(f"fraction must be in [0, 1], got {fraction}")
    n = len(doc.tokens)
    count = min(_round_half_up(fraction * n), n)
    chosen = sorted(rng.sample(range(n), count))
    masked = [False] * n
    spans: list[MaskedSpan] = []
    for pos in chosen:
        masked[pos] = True
        spans.append(
            MaskedSpan(start=pos, end=pos + 1, key=doc.stems[pos], order=1, score=0.0, reason=REASON_EXTRA)
        )
    return _finish(doc, doc.domain, masked, spans)


def masking_rate(templates: Iterable[MaskedTemplate]) -> float:
    """Masked token positions as a percentage of all token positions."""
    templates = list(templates)
    if not templates:
        raise UndefinedInputError("masking_rate of an empty template collection is undefined")
    total = sum(t.total_tokens for t in templates)
    if total == 0:
        return 0.0
    masked = sum(t.masked_count for t in templates)
    return 100.0 * masked / total
