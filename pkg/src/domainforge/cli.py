"""Command-line entry point.

Subcommands: build-stats, mask, orient, generate, filter, augment, report.
Every run is reproducible: identical flags and seed give identical output
files, bitwise for snapshots and manifests.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from . import __version__
from .corpus import CorpusConfig, load_domain_corpora, make_document
from .corruption import CorruptionConfig, mask, mask_for_training
from .errors import DomainForgeError
from .filtering import (
    FilterConfig,
    apply_filter,
    load_classifier,
    save_classifier,
    train_domain_classifier,
)
from .orientation import (
    build_orientations,
    load_orientation_overrides,
    load_orientations,
    sample_training_orientation,
    save_orientations,
)
from .pipeline import (
    MODE_FILTERED,
    MODE_ORACLE,
    MODES,
    GenerationPlan,
    augment,
    merge_datasets,
    read_dataset_rows,
    report_from_rows,
    write_dataset,
    write_manifest,
)
from .reconstruct import (
    EXTERNAL_SERVICE,
    NATIVE_ORIENTED,
    NATIVE_UNORIENTED,
    ReconstructorKind,
    ServiceClient,
)
from .serialize import canonical_json
from .stats import StatsConfig, build_stats, load_snapshot, save_snapshot

SERVICE_URL_ENV = "DOMAINFORGE_SERVICE_URL"


def _tau_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be a number, got {text!r}")
    if not -1.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"tau must be in (-1, 1), got {value}")
    return value


def _fraction_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1], got {value}")
    return value


def _existing_path(text: str) -> Path:
    path = Path(text)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return path


def _domain_pair(text: str) -> tuple[str, Path]:
    name, sep, raw = text.partition("=")
    if not sep or not name or not raw:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    path = Path(raw)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"no such file: {raw}")
    return name, path


def _alpha_triple(text: str) -> dict[int, float]:
    parts = text.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be comma-separated numbers, got {text!r}")
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"alpha needs exactly 3 values, got {len(values)}")
    return {order: value for order, value in zip((1, 2, 3), values)}


def _add_corpus_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--domain",
        action="append",
        type=_domain_pair,
        required=True,
        metavar="NAME=PATH",
        help="domain corpus file (JSONL with a 'text' field per line); repeatable",
    )


def _corpus_config(args: argparse.Namespace) -> CorpusConfig:
    return CorpusConfig(
        truncation_limit=args.truncate,
        lowercase=not args.no_lowercase,
        stemmer=args.stemmer,
    )


def _load_domains(pairs: list[tuple[str, Path]], config: CorpusConfig):
    return load_domain_corpora({name: path for name, path in pairs}, config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domainforge",
        description="generate domain-counterfactual training examples",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-stats", help="count n-gram document frequencies into a snapshot")
    _add_corpus_flags(p)
    p.add_argument("--out", required=True, metavar="PATH", help="snapshot output path")
    p.add_argument("--alpha", type=_alpha_triple, default=None, metavar="A1,A2,A3",
                   help="smoothing per n-gram order (default 1,5,7)")
    p.add_argument("--min-doc-frequency", type=int, default=10)
    p.add_argument("--max-order", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--truncate", type=int, default=96, help="token truncation limit")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--stemmer", choices=("snowball-english", "none"), default="snowball-english")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_build_stats)

    p = sub.add_parser("mask", help="corrupt documents into slotted templates")
    _add_corpus_flags(p)
    p.add_argument("--snapshot", required=True, type=_existing_path)
    p.add_argument("--destination", help="destination domain (omit with --training)")
    p.add_argument("--training", action="store_true",
                   help="sample a fake destination per document and emit reconstruction targets")
    p.add_argument("--orientations", type=_existing_path,
                   help="orientation-set file; with --training an orientation is sampled per document")
    p.add_argument("--tau", type=_tau_value, default=0.08)
    p.add_argument("--extra-mask-fraction", type=_fraction_value, default=None,
                   help="extra random masking (default 0, or 0.05 with --training)")
    p.add_argument("--max-order", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("orient", help="build per-domain orientation descriptors")
    p.add_argument("--snapshot", required=True, type=_existing_path)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--overrides", type=_existing_path,
                   help="JSON file mapping domain name to k-1 replacement words")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_orient)

    for name, with_filter in (("generate", False), ("augment", True)):
        p = sub.add_parser(
            name,
            help="generate counterfactual candidates"
            + (" and package an augmented dataset" if with_filter else " (no filtering)"),
        )
        _add_corpus_flags(p)
        p.add_argument("--snapshot", required=True, type=_existing_path)
        p.add_argument("--orientations", type=_existing_path)
        p.add_argument("--mode", choices=MODES, default="docogen")
        p.add_argument("--destinations", metavar="NAME,NAME",
                       help="comma-separated destination domains (default: all other domains)")
        p.add_argument("--k", type=int, default=4)
        p.add_argument("--tau", type=_tau_value, default=0.08)
        p.add_argument("--extra-mask-fraction", type=_fraction_value, default=0.0)
        p.add_argument("--max-order", type=int, choices=(1, 2, 3), default=3)
        p.add_argument("--random-mask-fraction", type=_fraction_value, default=0.15)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reconstructor", choices=("native", "service"), default="native")
        p.add_argument("--service-url", default=None,
                       help=f"generation service base URL (default ${SERVICE_URL_ENV})")
        p.add_argument("--boost", type=float, default=4.0,
                       help="co-occurrence weight boost for the native oriented filler")
        p.add_argument("--no-enforce-vocabulary", action="store_true")
        p.add_argument("--beam-size", type=int, default=4)
        p.add_argument("--max-length", type=int, default=96)
        p.add_argument("--corpus", action="append", type=_domain_pair, default=[],
                       metavar="NAME=PATH",
                       help="unlabeled corpus per domain for co-occurrence and the filter classifier")
        p.add_argument("--pool", action="append", type=_domain_pair, default=[],
                       metavar="NAME=PATH", help="labeled target pool (oracle mode)")
        p.add_argument("--duplicate-originals", type=int, default=1)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", required=True, metavar="PATH")
        p.add_argument("--manifest", metavar="PATH",
                       help="manifest output path (default: OUT.manifest.json)")
        if with_filter:
            p.add_argument("--filtered", action="store_true",
                           help="apply the filter even outside f-docogen mode")
            p.add_argument("--min-words", type=int, default=4)
            p.add_argument("--min-overlap", type=_fraction_value, default=0.25)
            p.add_argument("--no-domain-agreement", action="store_true")
            p.add_argument("--classifier", type=_existing_path,
                           help="pre-trained domain classifier file")
            p.set_defaults(func=cmd_augment)
        else:
            p.set_defaults(func=cmd_generate)

    p = sub.add_parser("filter", help="re-filter a candidates JSONL file")
    p.add_argument("--candidates", required=True, type=_existing_path,
                   help="dataset JSONL from generate/augment (originals included)")
    p.add_argument("--snapshot", required=True, type=_existing_path)
    p.add_argument("--classifier", type=_existing_path)
    p.add_argument("--corpus", action="append", type=_domain_pair, default=[],
                   metavar="NAME=PATH", help="corpora to train the domain classifier")
    p.add_argument("--min-words", type=int, default=4)
    p.add_argument("--min-overlap", type=_fraction_value, default=0.25)
    p.add_argument("--no-domain-agreement", action="store_true")
    p.add_argument("--classifier-out", metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("report", help="summarize a dataset: masking rates, rejections, affinity")
    p.add_argument("--dataset", required=True, type=_existing_path)
    p.add_argument("--snapshot", required=True, type=_existing_path)
    p.add_argument("--json-out", metavar="PATH")
    p.set_defaults(func=cmd_report)

    return parser


def cmd_build_stats(args: argparse.Namespace) -> int:
    corpus_config = _corpus_config(args)
    stats_config = StatsConfig(
        alpha=args.alpha if args.alpha is not None else {1: 1.0, 2: 5.0, 3: 7.0},
        min_doc_frequency=args.min_doc_frequency,
        max_order=args.max_order,
    )
    registry, corpora = _load_domains(args.domain, corpus_config)
    snapshot = build_stats(corpora, stats_config, corpus_config, jobs=args.jobs)
    fingerprint = save_snapshot(snapshot, str(args.out))
    unigrams = sum(1 for _ in snapshot.unigrams())
    print(f"domains: {len(registry)} ({', '.join(registry)})")
    print(f"documents: {sum(snapshot.n_docs)}")
    print(f"vocabulary: {unigrams} unigrams, {len(snapshot.doc_freq)} n-gram keys")
    print(f"fingerprint: {fingerprint}")
    print(f"wrote {args.out}")
    return 0


def _span_dicts(template) -> list[dict]:
    return [
        {
            "start": s.start,
            "end": s.end,
            "key": s.key,
            "order": s.order,
            "score": s.score,
            "reason": s.reason,
        }
        for s in template.spans
    ]


def cmd_mask(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(str(args.snapshot))
    config = CorruptionConfig(
        tau=args.tau,
        extra_mask_fraction=(
            args.extra_mask_fraction
            if args.extra_mask_fraction is not None
            else (0.05 if args.training else 0.0)
        ),
        max_order=args.max_order,
        rng_seed=args.seed,
    )
    if not args.training and not args.destination:
        print("error: --destination is required unless --training is set", file=sys.stderr)
        return 1
    orientations = load_orientations(args.orientations) if args.orientations else None
    if args.training and orientations is None:
        print("error: --training needs --orientations to sample conditions", file=sys.stderr)
        return 1

    _, corpora = _load_domains(args.domain, snapshot.corpus_config)
    lines: list[str] = []
    for name in corpora:
        for doc in corpora[name]:
            if args.training:
                rng = random.Random(f"{args.seed}|{doc.doc_id}|fake-dest")
                template, fake = mask_for_training(doc, snapshot, config, rng)
                orientation = sample_training_orientation(
                    doc, orientations, random.Random(f"{args.seed}|{doc.doc_id}|orientation")
                )
            else:
                template = mask(doc, args.destination, snapshot, config)
                fake = None
                orientation = None
            row = {
                "doc_id": doc.doc_id,
                "origin": doc.domain,
                "destination": template.destination,
                "fake_destination": fake,
                "label": doc.label,
                "template": template.text(),
                "target": " ".join(doc.tokens),
                "n_slots": template.n_slots,
                "masked_tokens": template.masked_count,
                "total_tokens": template.total_tokens,
                "orientation_domain": orientation.domain if orientation else None,
                "orientation_word": orientation.word if orientation else None,
                "orientation_index": orientation.index if orientation else None,
                "spans": _span_dicts(template),
            }
            lines.append(canonical_json(row))
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    print(f"masked {len(lines)} documents -> {args.out}")
    return 0


def cmd_orient(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(str(args.snapshot))
    overrides = load_orientation_overrides(args.overrides) if args.overrides else None
    orientations = build_orientations(snapshot, args.k, overrides)
    save_orientations(orientations, args.out)
    for domain in orientations.domains:
        words = ", ".join(d.word for d in orientations.descriptors(domain))
        print(f"{domain}: {words}")
    print(f"wrote {args.out}")
    return 0


def _make_plan(args: argparse.Namespace, snapshot, destinations: tuple[str, ...],
               filter_config: FilterConfig | None, oracle_pool) -> GenerationPlan:
    if args.reconstructor == "service":
        url = args.service_url or os.environ.get(SERVICE_URL_ENV)
        kind = ReconstructorKind(
            variant=EXTERNAL_SERVICE,
            boost=args.boost,
            service_url=url,
            enforce_vocabulary=not args.no_enforce_vocabulary,
            beam_size=args.beam_size,
            max_length=args.max_length,
        )
    else:
        oriented = args.mode in ("docogen", "f-docogen", "rm-ov")
        kind = ReconstructorKind(
            variant=NATIVE_ORIENTED if oriented else NATIVE_UNORIENTED,
            boost=args.boost,
            enforce_vocabulary=not args.no_enforce_vocabulary,
            beam_size=args.beam_size,
            max_length=args.max_length,
        )
    return GenerationPlan(
        mode=args.mode,
        destinations=destinations,
        k=args.k,
        corruption=CorruptionConfig(
            tau=args.tau,
            extra_mask_fraction=args.extra_mask_fraction,
            max_order=args.max_order,
            rng_seed=args.seed,
        ),
        reconstructor=kind,
        filter=filter_config,
        random_mask_fraction=args.random_mask_fraction,
        oracle_pool=oracle_pool,
        duplicate_originals=args.duplicate_originals,
    )


def _run_generation(args: argparse.Namespace, filter_config: FilterConfig | None,
                    classifier) -> int:
    snapshot = load_snapshot(str(args.snapshot))
    _, labeled_by_domain = _load_domains(args.domain, snapshot.corpus_config)
    orientations = load_orientations(args.orientations) if args.orientations else None
    corpora = None
    if args.corpus:
        _, corpora = _load_domains(args.corpus, snapshot.corpus_config)
    oracle_pool = None
    if args.pool:
        _, pool_by_domain = _load_domains(args.pool, snapshot.corpus_config)
        oracle_pool = tuple(doc for docs in pool_by_domain.values() for doc in docs)

    oriented_native = (
        args.mode in ("docogen", "f-docogen", "rm-ov") and args.reconstructor == "native"
    )
    if oriented_native and orientations is None:
        snapshot_orient = build_orientations(snapshot, args.k)
        orientations = snapshot_orient
    if oriented_native and corpora is None:
        print(
            "error: native oriented filling needs --corpus NAME=PATH for co-occurrence "
            "(pass the corpora used for build-stats)",
            file=sys.stderr,
        )
        return 1

    client = None
    if args.reconstructor == "service":
        url = args.service_url or os.environ.get(SERVICE_URL_ENV)
        if not url:
            print(
                f"error: --reconstructor service needs --service-url or ${SERVICE_URL_ENV}",
                file=sys.stderr,
            )
            return 1
        client = ServiceClient(url)

    explicit = (
        tuple(name.strip().lower() for name in args.destinations.split(",") if name.strip())
        if args.destinations
        else None
    )
    datasets = []
    registry = snapshot.registry
    for origin in labeled_by_domain:
        docs = labeled_by_domain[origin]
        if not docs:
            continue
        destinations = explicit or tuple(d for d in registry if d != origin)
        if explicit and origin in explicit:
            print(
                f"error: labeled documents from {origin!r} cannot target their own domain",
                file=sys.stderr,
            )
            return 1
        plan = _make_plan(args, snapshot, destinations, filter_config, oracle_pool)
        datasets.append(
            augment(
                docs,
                snapshot,
                orientations,
                plan,
                seed=args.seed,
                corpora=corpora,
                classifier=classifier,
                client=client,
                jobs=args.jobs,
            )
        )
    if not datasets:
        print("error: no labeled documents found", file=sys.stderr)
        return 1
    dataset = merge_datasets(datasets)
    write_dataset(dataset, args.out)
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    write_manifest(dataset, manifest_path)
    counts = dataset.manifest["counts"]
    print(
        f"generated {counts['generated']} candidates from {counts['originals']} originals "
        f"({counts['accepted']} accepted)"
    )
    print(f"wrote {args.out} and {manifest_path}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    if args.mode == MODE_FILTERED:
        print("error: f-docogen filters; use the augment command", file=sys.stderr)
        return 1
    return _run_generation(args, None, None)


def cmd_augment(args: argparse.Namespace) -> int:
    wants_filter = args.filtered or args.mode == MODE_FILTERED
    filter_config = None
    classifier = None
    if wants_filter:
        filter_config = FilterConfig(
            min_words=args.min_words,
            min_overlap=args.min_overlap,
            require_domain_agreement=not args.no_domain_agreement,
        )
        if args.classifier:
            classifier = load_classifier(args.classifier)
        elif filter_config.require_domain_agreement and not args.corpus:
            print(
                "error: filtering needs --classifier PATH or --corpus NAME=PATH to train one",
                file=sys.stderr,
            )
            return 1
    return _run_generation(args, filter_config, classifier)


def cmd_filter(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(str(args.snapshot))
    config = FilterConfig(
        min_words=args.min_words,
        min_overlap=args.min_overlap,
        require_domain_agreement=not args.no_domain_agreement,
    )
    classifier = None
    if args.classifier:
        classifier = load_classifier(args.classifier)
    elif config.require_domain_agreement:
        if not args.corpus:
            print(
                "error: domain agreement needs --classifier PATH or --corpus NAME=PATH",
                file=sys.stderr,
            )
            return 1
        _, corpora = _load_domains(args.corpus, snapshot.corpus_config)
        classifier = train_domain_classifier(corpora, corpus_config=snapshot.corpus_config)
    if classifier is not None and args.classifier_out:
        save_classifier(classifier, args.classifier_out)
        print(f"wrote classifier {args.classifier_out}")

    rows = read_dataset_rows(args.candidates)
    originals = {
        row["origin_id"]: row for row in rows if row.get("source") == "original"
    }
    out_lines: list[str] = []
    accepted = 0
    candidates = 0
    for row in rows:
        if row.get("source") == "original":
            out_lines.append(canonical_json(row))
            continue
        origin_row = originals.get(row.get("origin_id"))
        if origin_row is None:
            print(
                f"error: candidate origin_id {row.get('origin_id')!r} has no original row",
                file=sys.stderr,
            )
            return 1
        original = make_document(
            int(origin_row["origin_id"]),
            str(origin_row["domain"]),
            str(origin_row["text"]),
            snapshot.corpus_config,
            origin_row.get("label"),
        )
        verdict = apply_filter(
            str(row["text"]), original, str(row["domain"]), classifier, config, snapshot.corpus_config
        )
        row = dict(row)
        row["accepted"] = verdict.accepted
        row["reject_reasons"] = list(verdict.reasons)
        row["predicted_domain"] = verdict.predicted_domain
        row["overlap"] = verdict.overlap
        row["word_count"] = verdict.word_count
        out_lines.append(canonical_json(row))
        candidates += 1
        accepted += int(verdict.accepted)
    Path(args.out).write_text("\n".join(out_lines) + ("\n" if out_lines else ""), encoding="utf-8")
    print(f"filtered {candidates} candidates: {accepted} accepted -> {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(str(args.snapshot))
    rows = read_dataset_rows(args.dataset)
    result = report_from_rows(rows, snapshot)
    if args.json_out:
        Path(args.json_out).write_text(canonical_json(result.to_dict()) + "\n", encoding="utf-8")
        print(f"wrote {args.json_out}")
    print(result.render_text(), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
