"""End-to-end augmentation: mask, reconstruct, filter, package.

For every labeled document, one candidate is produced per (destination,
orientation index). Generation modes:

  docogen     threshold masking, constrained vocabulary, oriented filling
  f-docogen   docogen plus the candidate filter
  no-ov       threshold masking, constrained vocabulary, unoriented filling
  rm-ov       random 15% masking, constrained vocabulary, oriented filling
  rm-rr       random 15% masking, unconstrained vocabulary, unoriented filling
  oracle      retrieval of the most similar same-label document per
              destination (one candidate per destination; there is nothing
              for an orientation to vary)

Randomness is drawn from per-candidate streams derived from (seed, doc id,
destination, orientation index), so the same seed reproduces the same
candidates regardless of mode or iteration order. That is what makes the
filtered run's accepted set a subset of the unfiltered run's output.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CorpusConfig, Document, is_word, stem_token, tokenize
from .corruption import CorruptionConfig, MaskedTemplate, mask, mask_random
from .errors import ConfigurationError, FormatError, UndefinedInputError
from .filtering import DomainClassifier, FilterConfig, FilterVerdict, apply_filter, train_domain_classifier
from .orientation import OrientationDescriptor, OrientationSet
from .reconstruct import (
    EXTERNAL_SERVICE,
    NATIVE_ORIENTED,
    NATIVE_UNORIENTED,
    AllowedVocabulary,
    CooccurrenceIndex,
    ReconstructorKind,
    ServiceClient,
    admitted_unigrams,
    build_cooccurrence,
    build_unconstrained_vocabulary,
    fill_external,
    fill_native,
)
from .serialize import canonical_json
from .stats import StatsSnapshot, affinity

MODE_DOCOGEN = "docogen"
MODE_FILTERED = "f-docogen"
MODE_NO_ORIENTATION = "no-ov"
MODE_RANDOM_ORIENTED = "rm-ov"
MODE_RANDOM_RANDOM = "rm-rr"
MODE_ORACLE = "oracle"
MODES = (
    MODE_DOCOGEN,
    MODE_FILTERED,
    MODE_NO_ORIENTATION,
    MODE_RANDOM_ORIENTED,
    MODE_RANDOM_RANDOM,
    MODE_ORACLE,
)

_THRESHOLD_MODES = {MODE_DOCOGEN, MODE_FILTERED, MODE_NO_ORIENTATION}
_RANDOM_MODES = {MODE_RANDOM_ORIENTED, MODE_RANDOM_RANDOM}
_ORIENTED_MODES = {MODE_DOCOGEN, MODE_FILTERED, MODE_RANDOM_ORIENTED}
_UNORIENTED_MODES = {MODE_NO_ORIENTATION, MODE_RANDOM_RANDOM}
_CONSTRAINED_MODES = {MODE_DOCOGEN, MODE_FILTERED, MODE_NO_ORIENTATION, MODE_RANDOM_ORIENTED}

MANIFEST_FORMAT = "domainforge-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class GenerationPlan:
    mode: str
    destinations: tuple[str, ...]
    k: int = 4
    corruption: CorruptionConfig = field(default_factory=CorruptionConfig)
    reconstructor: ReconstructorKind = field(default_factory=ReconstructorKind)
    filter: FilterConfig | None = None
    random_mask_fraction: float = 0.15
    oracle_pool: tuple[Document, ...] | None = None
    duplicate_originals: int = 1  # recorded in the manifest; writer repeats originals

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        destinations = tuple(d.lower() for d in self.destinations)
        object.__setattr__(self, "destinations", destinations)
        if not destinations:
            raise ConfigurationError("destinations must not be empty")
        if len(set(destinations)) != len(destinations):
            raise ConfigurationError("destinations must be unique")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.mode == MODE_FILTERED and self.filter is None:
            raise ConfigurationError("f-docogen requires a filter config")
        if self.mode == MODE_ORACLE and not self.oracle_pool:
            raise ConfigurationError("oracle mode requires a labeled target pool")
        if not 0.0 <= self.random_mask_fraction <= 1.0:
            raise ConfigurationError(
                f"random_mask_fraction must be in [0, 1], got {self.random_mask_fraction}"
            )
        if self.duplicate_originals < 1:
            raise ConfigurationError("duplicate_originals must be >= 1")
        if self.mode in _UNORIENTED_MODES and self.reconstructor.variant == EXTERNAL_SERVICE:
            raise ConfigurationError(f"mode {self.mode!r} is native-only; the service fills with orientation")

    @property
    def oriented(self) -> bool:
        return self.mode in _ORIENTED_MODES

    @property
    def constrained(self) -> bool:
        return self.mode in _CONSTRAINED_MODES

    @property
    def uses_random_mask(self) -> bool:
        return self.mode in _RANDOM_MODES


@dataclass(frozen=True)
class CounterfactualCandidate:
    origin_id: int
    origin_domain: str
    label: str | None
    destination: str
    orientation: OrientationDescriptor | None
    orientation_index: int | None
    text: str
    template: MaskedTemplate | None
    verdict: FilterVerdict | None
    used_fallback: bool
    source: str
    model_version: str | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict is None or self.verdict.accepted


@dataclass(frozen=True)
class AugmentedDataset:
    originals: tuple[Document, ...]
    candidates: tuple[CounterfactualCandidate, ...]
    manifest: dict

    @property
    def accepted(self) -> tuple[CounterfactualCandidate, ...]:
        return tuple(c for c in self.candidates if c.accepted)

    def to_rows(self) -> list[dict]:
        duplication = int(self.manifest.get("original_duplication", 1))
        rows: list[dict] = []
        for doc in self.originals:
            row = {
                "text": doc.text,
                "label": doc.label,
                "domain": doc.domain,
                "source": "original",
                "origin_id": doc.doc_id,
                "orientation": None,
                "accepted": True,
                "reject_reasons": [],
                "origin_domain": doc.domain,
                "orientation_index": None,
                "masked_tokens": None,
                "total_tokens": len(doc.tokens),
            }
            rows.extend([dict(row) for _ in range(duplication)])
        for cand in self.candidates:
            rows.append(
                {
                    "text": cand.text,
                    "label": cand.label,
                    "domain": cand.destination,
                    "source": cand.source,
                    "origin_id": cand.origin_id,
                    "orientation": cand.orientation.word if cand.orientation else None,
                    "accepted": cand.accepted,
                    "reject_reasons": list(cand.verdict.reasons) if cand.verdict else [],
                    "origin_domain": cand.origin_domain,
                    "orientation_index": cand.orientation_index,
                    "masked_tokens": cand.template.masked_count if cand.template else None,
                    "total_tokens": cand.template.total_tokens
                    if cand.template
                    else len(tokenize(cand.text)),
                    "predicted_domain": cand.verdict.predicted_domain if cand.verdict else None,
                    "overlap": cand.verdict.overlap if cand.verdict else None,
                    "word_count": cand.verdict.word_count if cand.verdict else None,
                }
            )
        return rows


def _rng(seed: int, *parts: object) -> random.Random:
    tag = "|".join(str(p) for p in parts)
    return random.Random(f"{seed}|{tag}")


def oracle_match(example: Document, pool: Sequence[Document]) -> Document:
    """Most similar same-label pool document by TF-IDF cosine over stemmed
    unigrams (idf from the whole pool plus the query); ties break toward the
    lowest doc id."""
    pool = list(pool)
    if not pool:
        raise UndefinedInputError("oracle pool is empty")
    same_label = sorted((d for d in pool if d.label == example.label), key=lambda d: d.doc_id)
    if not same_label:
        raise UndefinedInputError(f"oracle pool has no example with label {example.label!r}")

    docs = pool + [example]
    n = len(docs)
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc.stems))
    idf = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}

    def vector(doc: Document) -> dict[str, float]:
        tf = Counter(doc.stems)
        return {t: count * idf[t] for t, count in tf.items()}

    def cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
        dot = sum(v * b[t] for t, v in a.items() if t in b)
        na = math.sqrt(sum(v * v for v in a.values()))
        nb = math.sqrt(sum(v * v for v in b.values()))
        if na == 0.0 or nb == 0.0:
            return 0.0
        return dot / (na * nb)

    query = vector(example)
    best = same_label[0]
    best_cos = cosine(query, vector(best))
    for doc in same_label[1:]:
        cos = cosine(query, vector(doc))
        if cos > best_cos:
            best, best_cos = doc, cos
    return best


def _require_labels(labeled: Sequence[Document]) -> None:
    for doc in labeled:
        if doc.label is None:
            raise ConfigurationError(f"document {doc.doc_id} has no label; augment needs labeled input")


def augment(
    labeled: Sequence[Document],
    snapshot: StatsSnapshot,
    orientations: OrientationSet | None,
    plan: GenerationPlan,
    *,
    seed: int = 0,
    corpora: Mapping[str, Sequence[Document]] | None = None,
    classifier: DomainClassifier | None = None,
    client: ServiceClient | None = None,
    jobs: int = 1,
) -> AugmentedDataset:
    registry = snapshot.registry
    _require_labels(labeled)
    for dest in plan.destinations:
        registry.id_of(dest)
    for doc in labeled:
        registry.id_of(doc.domain)
        if doc.domain in plan.destinations:
            raise ConfigurationError(
                f"document {doc.doc_id} is from {doc.domain!r}, which is listed as a destination"
            )

    oriented = plan.oriented and plan.mode != MODE_ORACLE
    if oriented:
        if orientations is None:
            raise ConfigurationError(f"mode {plan.mode!r} needs an orientation set")
        if orientations.k < plan.k:
            raise ConfigurationError(
                f"plan asks for k={plan.k} but the orientation set only has k={orientations.k}"
            )
        for dest in plan.destinations:
            orientations.descriptors(dest)

    kind = plan.reconstructor
    external = kind.variant == EXTERNAL_SERVICE and plan.mode not in (MODE_ORACLE,)
    if external and client is None:
        client = ServiceClient(kind.service_url or "", timeout=kind.timeout)

    cooccurrence: CooccurrenceIndex | None = None
    if oriented and not external:
        if corpora is None:
            raise ConfigurationError(
                "native oriented filling needs the training corpora for co-occurrence boosting"
            )
        cooccurrence = build_cooccurrence(corpora, orientations)

    filter_config = plan.filter
    if filter_config is not None and filter_config.require_domain_agreement and classifier is None:
        if corpora is None:
            raise ConfigurationError("filtering needs a classifier or corpora to train one")
        classifier = train_domain_classifier(corpora, corpus_config=snapshot.corpus_config)

    admitted: dict[str, frozenset[str]] = {}
    if plan.constrained and plan.mode != MODE_ORACLE:
        for dest in plan.destinations:
            admitted[dest] = admitted_unigrams(snapshot, dest, plan.corruption.tau)

    context = _GenerationContext(
        snapshot=snapshot,
        orientations=orientations if oriented else None,
        plan=plan,
        seed=seed,
        admitted=admitted,
        cooccurrence=cooccurrence,
        classifier=classifier,
    )

    candidates: list[CounterfactualCandidate] = []
    # external generation stays serial: the HTTP client is not fork-safe and
    # the service is the bottleneck either way
    if jobs > 1 and not external and len(labeled) > 1:
        from concurrent.futures import ProcessPoolExecutor

        n_chunks = min(jobs, len(labeled))
        chunks = [list(labeled[i::n_chunks]) for i in range(n_chunks)]
        by_doc: dict[int, list[CounterfactualCandidate]] = {}
        with ProcessPoolExecutor(max_workers=n_chunks) as pool:
            for out in pool.map(_generate_chunk, [(context, c) for c in chunks]):
                for cand in out:
                    by_doc.setdefault(cand.origin_id, []).append(cand)
        # stitch back into the original document order
        for doc in labeled:
            candidates.extend(by_doc.get(doc.doc_id, []))
    else:
        for doc in labeled:
            candidates.extend(_generate_for_doc(doc, context, client))

    manifest = _build_manifest(labeled, candidates, snapshot, orientations, plan, seed)
    return AugmentedDataset(originals=tuple(labeled), candidates=tuple(candidates), manifest=manifest)


@dataclass(frozen=True)
class _GenerationContext:
    snapshot: StatsSnapshot
    orientations: OrientationSet | None
    plan: GenerationPlan
    seed: int
    admitted: Mapping[str, frozenset[str]]
    cooccurrence: CooccurrenceIndex | None
    classifier: DomainClassifier | None


def _generate_chunk(payload: tuple[_GenerationContext, list[Document]]) -> list[CounterfactualCandidate]:
    context, docs = payload
    out: list[CounterfactualCandidate] = []
    for doc in docs:
        out.extend(_generate_for_doc(doc, context, None))
    return out


def _generate_for_doc(
    doc: Document, context: _GenerationContext, client: ServiceClient | None
) -> list[CounterfactualCandidate]:
    plan = context.plan
    snapshot = context.snapshot
    seed = context.seed
    oriented = context.orientations is not None
    kind = plan.reconstructor
    external = kind.variant == EXTERNAL_SERVICE and plan.mode != MODE_ORACLE
    out: list[CounterfactualCandidate] = []
    for dest in plan.destinations:
        if plan.mode == MODE_ORACLE:
            out.append(_oracle_candidate(doc, dest, plan, snapshot, context.classifier))
            continue

        if plan.uses_random_mask:
            mask_rng = _rng(seed, doc.doc_id, dest, "mask")
            template = replace(mask_random(doc, plan.random_mask_fraction, mask_rng), destination=dest)
        else:
            template = mask(doc, dest, snapshot, plan.corruption)

        if plan.constrained:
            vocab = AllowedVocabulary(
                destination=dest,
                tau=plan.corruption.tau,
                words=context.admitted[dest],
                original_stems=frozenset(doc.stems),
            )
        else:
            vocab = build_unconstrained_vocabulary(snapshot, dest, doc)

        for k_idx in range(plan.k):
            descriptor = context.orientations.descriptors(dest)[k_idx] if oriented else None
            if external:
                result = fill_external(template, descriptor, vocab, client, kind, snapshot.corpus_config)
            else:
                fill_rng = _rng(seed, doc.doc_id, dest, k_idx, "fill")
                result = fill_native(
                    template,
                    descriptor,
                    snapshot,
                    vocab,
                    fill_rng,
                    boost=kind.boost,
                    cooccurrence=context.cooccurrence,
                )
            verdict = (
                apply_filter(result.text, doc, dest, context.classifier, plan.filter, snapshot.corpus_config)
                if plan.filter is not None
                else None
            )
            out.append(
                CounterfactualCandidate(
                    origin_id=doc.doc_id,
                    origin_domain=doc.domain,
                    label=doc.label,
                    destination=dest,
                    orientation=descriptor,
                    orientation_index=k_idx,
                    text=result.text,
                    template=template,
                    verdict=verdict,
                    used_fallback=result.used_fallback,
                    source=plan.mode,
                    model_version=result.model_version,
                )
            )
    return out


def _oracle_candidate(
    doc: Document,
    dest: str,
    plan: GenerationPlan,
    snapshot: StatsSnapshot,
    classifier: DomainClassifier | None,
) -> CounterfactualCandidate:
    pool = [p for p in (plan.oracle_pool or ()) if p.domain == dest]
    if not pool:
        raise UndefinedInputError(f"oracle pool has no documents for destination {dest!r}")
    match = oracle_match(doc, pool)
    verdict = (
        apply_filter(match.text, doc, dest, classifier, plan.filter, snapshot.corpus_config)
        if plan.filter is not None
        else None
    )
    return CounterfactualCandidate(
        origin_id=doc.doc_id,
        origin_domain=doc.domain,
        label=doc.label,
        destination=dest,
        orientation=None,
        orientation_index=None,
        text=match.text,
        template=None,
        verdict=verdict,
        used_fallback=False,
        source=MODE_ORACLE,
    )


def _aggregate_counts(
    n_originals: int,
    candidates: Sequence[CounterfactualCandidate],
    destinations: Sequence[str],
) -> tuple[dict, set[str]]:
    per_dest: dict[str, dict[str, int]] = {
        dest: {"generated": 0, "accepted": 0} for dest in destinations
    }
    per_dest_orientation: dict[str, dict[str, dict[str, int]]] = {dest: {} for dest in destinations}
    rejected_by_reason: Counter[str] = Counter()
    model_versions: set[str] = set()
    for cand in candidates:
        per_dest[cand.destination]["generated"] += 1
        if cand.accepted:
            per_dest[cand.destination]["accepted"] += 1
        elif cand.verdict is not None:
            rejected_by_reason[",".join(cand.verdict.reasons)] += 1
        slot = per_dest_orientation[cand.destination].setdefault(
            str(cand.orientation_index if cand.orientation_index is not None else "none"),
            {"generated": 0, "accepted": 0},
        )
        slot["generated"] += 1
        if cand.accepted:
            slot["accepted"] += 1
        if cand.model_version:
            model_versions.add(cand.model_version)

    accepted = sum(1 for c in candidates if c.accepted)
    counts = {
        "originals": n_originals,
        "generated": len(candidates),
        "accepted": accepted,
        "rejected": len(candidates) - accepted,
        "per_destination": per_dest,
        "per_destination_orientation": per_dest_orientation,
        "rejected_by_reason": dict(sorted(rejected_by_reason.items())),
    }
    return counts, model_versions


def merge_datasets(datasets: Sequence["AugmentedDataset"]) -> "AugmentedDataset":
    """Concatenate datasets produced under the same plan modulo destinations
    (the per-origin-group case); counts are re-aggregated."""
    if not datasets:
        raise UndefinedInputError("cannot merge zero datasets")
    if len(datasets) == 1:
        return datasets[0]
    originals = tuple(doc for ds in datasets for doc in ds.originals)
    candidates = tuple(cand for ds in datasets for cand in ds.candidates)
    destinations = sorted({d for ds in datasets for d in ds.manifest["destinations"]})
    manifest = dict(datasets[0].manifest)
    manifest["destinations"] = destinations
    counts, model_versions = _aggregate_counts(len(originals), candidates, destinations)
    manifest["counts"] = counts
    manifest["model_versions"] = sorted(model_versions)
    return AugmentedDataset(originals=originals, candidates=candidates, manifest=manifest)


def _build_manifest(
    labeled: Sequence[Document],
    candidates: Sequence[CounterfactualCandidate],
    snapshot: StatsSnapshot,
    orientations: OrientationSet | None,
    plan: GenerationPlan,
    seed: int,
) -> dict:
    counts, model_versions = _aggregate_counts(len(labeled), candidates, plan.destinations)
    kind = plan.reconstructor
    return {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "mode": plan.mode,
        "k": plan.k,
        "destinations": list(plan.destinations),
        "seed": seed,
        "tau": plan.corruption.tau,
        "extra_mask_fraction": plan.corruption.extra_mask_fraction,
        "random_mask_fraction": plan.random_mask_fraction if plan.uses_random_mask else None,
        "snapshot_fingerprint": snapshot.fingerprint,
        "orientations_k": orientations.k if orientations is not None else None,
        "reconstructor": {
            "variant": kind.variant,
            "boost": kind.boost,
            "enforce_vocabulary": kind.enforce_vocabulary,
            "beam_size": kind.beam_size,
            "max_length": kind.max_length,
        },
        "filter": plan.filter.to_dict() if plan.filter is not None else None,
        "original_duplication": plan.duplicate_originals,
        "model_versions": sorted(model_versions),
        "counts": counts,
    }


def write_dataset(dataset: AugmentedDataset, path: str | Path) -> None:
    lines = [canonical_json(row) for row in dataset.to_rows()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def write_manifest(dataset: AugmentedDataset, path: str | Path) -> None:
    Path(path).write_text(canonical_json(dataset.manifest) + "\n", encoding="utf-8")


def read_dataset_rows(path: str | Path) -> list[dict]:
    rows: list[dict] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: not JSON: {exc}") from exc
        if not isinstance(row, dict) or "text" not in row:
            raise FormatError(f"line {lineno}: not a dataset row")
        rows.append(row)
    return rows


@dataclass(frozen=True)
class Report:
    masking_rates: dict  # origin -> destination -> percentage
    rejection_breakdown: dict  # reason combination -> count
    reason_incidence: dict  # individual reason -> count
    acceptance_rates: dict  # destination -> fraction, plus "overall"
    mean_destination_affinity: float
    per_destination_affinity: dict

    def to_dict(self) -> dict:
        return {
            "masking_rates": self.masking_rates,
            "rejection_breakdown": self.rejection_breakdown,
            "reason_incidence": self.reason_incidence,
            "acceptance_rates": self.acceptance_rates,
            "mean_destination_affinity": self.mean_destination_affinity,
            "per_destination_affinity": self.per_destination_affinity,
        }

    def render_text(self) -> str:
        lines: list[str] = []
        domains = sorted(self.masking_rates)
        lines.append("masking rate % (rows: origin, columns: destination)")
        header = "origin".ljust(14) + "".join(d[:12].rjust(14) for d in domains)
        lines.append(header)
        for origin in domains:
            row = origin[:12].ljust(14)
            for dest in domains:
                row += f"{self.masking_rates[origin][dest]:14.2f}"
            lines.append(row)
        lines.append("")
        lines.append("acceptance rates")
        for dest, rate in sorted(self.acceptance_rates.items()):
            lines.append(f"  {dest}: {rate:.4f}")
        lines.append("")
        lines.append("rejections by reason combination")
        if self.rejection_breakdown:
            for reason, count in sorted(self.rejection_breakdown.items()):
                lines.append(f"  {reason}: {count}")
        else:
            lines.append("  (none)")
        lines.append("")
        lines.append(f"mean destination affinity of accepted candidates: {self.mean_destination_affinity:.5f}")
        return "\n".join(lines) + "\n"


def _candidate_affinity(text: str, destination: str, snapshot: StatsSnapshot) -> float:
    config = snapshot.corpus_config
    stems = [stem_token(t, config) for t in tokenize(text, config) if is_word(t)]
    if not stems:
        return 0.0
    return sum(affinity(snapshot, s, destination) for s in stems) / len(stems)


def report_from_rows(rows: Sequence[Mapping], snapshot: StatsSnapshot) -> Report:
    domains = list(snapshot.registry)
    masked_tokens: dict[tuple[str, str], int] = {}
    total_tokens: dict[tuple[str, str], int] = {}
    generated: Counter[str] = Counter()
    accepted: Counter[str] = Counter()
    breakdown: Counter[str] = Counter()
    incidence: Counter[str] = Counter()
    affinities: dict[str, list[float]] = {}

    for row in rows:
        if row.get("source") == "original":
            continue
        dest = str(row["domain"])
        origin = str(row.get("origin_domain", ""))
        generated[dest] += 1
        if row.get("accepted"):
            accepted[dest] += 1
            affinities.setdefault(dest, []).append(
                _candidate_affinity(str(row["text"]), dest, snapshot)
            )
        else:
            reasons = [str(r) for r in row.get("reject_reasons", [])]
            breakdown[",".join(reasons)] += 1
            for reason in reasons:
                incidence[reason] += 1
        if row.get("masked_tokens") is not None and origin:
            key = (origin, dest)
            masked_tokens[key] = masked_tokens.get(key, 0) + int(row["masked_tokens"])
            total_tokens[key] = total_tokens.get(key, 0) + int(row["total_tokens"])

    rates = {
        origin: {
            dest: (
                100.0 * masked_tokens[(origin, dest)] / total_tokens[(origin, dest)]
                if total_tokens.get((origin, dest))
                else 0.0
            )
            for dest in domains
        }
        for origin in domains
    }
    acceptance = {
        dest: (accepted[dest] / generated[dest] if generated[dest] else 0.0) for dest in domains
    }
    total_generated = sum(generated.values())
    acceptance["overall"] = (
        sum(accepted.values()) / total_generated if total_generated else 0.0
    )
    all_aff = [a for values in affinities.values() for a in values]
    return Report(
        masking_rates=rates,
        rejection_breakdown=dict(sorted(breakdown.items())),
        reason_incidence=dict(sorted(incidence.items())),
        acceptance_rates=acceptance,
        mean_destination_affinity=(sum(all_aff) / len(all_aff)) if all_aff else 0.0,
        per_destination_affinity={
            dest: (sum(values) / len(values)) for dest, values in sorted(affinities.items())
        },
    )


def report(dataset: AugmentedDataset, snapshot: StatsSnapshot) -> Report:
    return report_from_rows(dataset.to_rows(), snapshot)
