"""Shared fixtures. The upstream toolkit is exercised strictly out of
process: every snapshot, orientation set and mask file used here comes from
its CLI, never from importing it."""

import json
import subprocess
import sys
from pathlib import Path
from types import SimpleNamespace

import pytest

PRIMARY = (sys.executable, "-m", "domainforge.cli")

# three domains with disjoint six-word pools; every word is its own stem so
# text comparisons in tests never need to reason about stemming
POOLS = {
    "gadgets": ("blade", "knife", "sharp", "tool", "oven", "pan"),
    "flights": ("seat", "wide", "cabin", "crew", "gate", "wing"),
    "hotels": ("room", "clean", "desk", "lamp", "rack", "towel"),
}


def run_primary_cli(*argv) -> str:
    proc = subprocess.run(
        [*PRIMARY, *[str(a) for a in argv]], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise AssertionError(
            f"primary CLI failed ({proc.returncode}): {' '.join(map(str, argv))}\n{proc.stderr}"
        )
    return proc.stdout


def write_rotating_corpus(path: Path, pool, n: int = 30) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for i in range(n):
            row = {
                "text": f"the {pool[i % 6]} is {pool[(i + 1) % 6]} {pool[(i + 2) % 6]}",
                "label": "pos" if i % 2 == 0 else "neg",
            }
            handle.write(json.dumps(row) + "\n")


@pytest.fixture(scope="session")
def primary_cli():
    return PRIMARY


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("genservice-ws")
    corpora = {}
    for name, pool in POOLS.items():
        corpora[name] = root / f"{name}.jsonl"
        write_rotating_corpus(corpora[name], pool)
    domain_flags = [a for n in sorted(corpora) for a in ("--domain", f"{n}={corpora[n]}")]
    snapshot = root / "stats.json"
    run_primary_cli(
        "build-stats", *domain_flags, "--min-doc-frequency", 1, "--out", snapshot
    )
    orientations = root / "orient.json"
    run_primary_cli("orient", "--snapshot", snapshot, "--k", 3, "--out", orientations)
    return SimpleNamespace(
        root=root,
        corpora=corpora,
        snapshot=snapshot,
        orientations=orientations,
        domains=sorted(POOLS),
    )


@pytest.fixture(scope="session")
def trained(workspace):
    """One model trained with selection, reused by every test that needs a
    competent checkpoint. Corpora split 24 train / 6 held out per domain."""
    from genservice.training import DomainAccuracyEvaluator, TrainConfig, train_model

    root = workspace.root / "trained"
    root.mkdir()
    train_files, eval_files = {}, {}
    for name, path in workspace.corpora.items():
        lines = [l for l in open(path, encoding="utf-8") if l.strip()]
        train_files[name] = root / f"{name}-train.jsonl"
        eval_files[name] = root / f"{name}-eval.jsonl"
        train_files[name].write_text("".join(lines[:24]), encoding="utf-8")
        eval_files[name].write_text("".join(lines[24:]), encoding="utf-8")

    evaluator = DomainAccuracyEvaluator(
        domain_files=eval_files,
        corpus_files=train_files,
        snapshot=workspace.snapshot,
        workdir=root / "eval",
        primary=PRIMARY,
    )
    result = train_model(
        train_files,
        workspace.snapshot,
        workspace.orientations,
        root / "ckpts",
        config=TrainConfig(epochs=6, learning_rate=3e-4, seed=0),
        primary=PRIMARY,
        selector=evaluator.score,
    )
    return SimpleNamespace(
        result=result,
        train_files=train_files,
        eval_files=eval_files,
        workspace=workspace,
    )


@pytest.fixture()
def tiny_bundle():
    """Untrained two-domain bundle for contract tests that only care about
    request handling, not fill quality."""
    from genservice.checkpoint import Bundle
    from genservice.data import OrientationTable
    from genservice.model import build_model
    from genservice.vocab import WordVocab

    table = OrientationTable(
        k=2,
        domains=("alpha", "beta"),
        words={"alpha": ("alpha", "blade"), "beta": ("beta", "seat")},
    )
    vocab = WordVocab.from_texts(
        ["the blade is sharp tool", "the seat is wide cabin"],
        extra_words=table.all_words(),
    )
    model = build_model(vocab, table, seed=1)
    return Bundle(
        model=model, vocab=vocab, table=table, model_version="test-0", max_input_length=96
    )
