import json

import pytest

from genservice.data import OrientationTable, encode_example
from genservice.errors import ConfigError, SubprocessError
from genservice.model import build_model
from genservice.training import (
    DomainAccuracyEvaluator,
    TrainConfig,
    make_optimizer,
    mask_training_rows,
    run_primary,
    train_steps,
)
from genservice.vocab import WordVocab

def test_train_config_defaults():
    config = TrainConfig()
    assert config.epochs == 20
    assert config.learning_rate == 5e-5
    assert config.weight_decay == 1e-5
    assert config.max_length == 96


@pytest.mark.parametrize(
    "bad",
    [
        {"epochs": 0},
        {"batch_size": 0},
        {"max_length": 0},
        {"learning_rate": 0.0},
        {"weight_decay": -1.0},
    ],
)
def test_train_config_rejects_nonsense(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad)


def test_run_primary_surfaces_failures(primary_cli):
    with pytest.raises(SubprocessError) as info:
        run_primary([*primary_cli, "mask", "--snapshot", "/no/such/file", "--out", "x"])
    assert info.value.returncode != 0
    assert "/no/such/file" in str(info.value)


def test_run_primary_reports_missing_executable():
    with pytest.raises(SubprocessError):
        run_primary(["definitely-not-a-real-binary-9f3", "--version"])


def test_mask_training_rows_round_trip(workspace, primary_cli, tmp_path):
    rows = mask_training_rows(
        primary_cli,
        {name: workspace.corpora[name] for name in workspace.domains},
        workspace.snapshot,
        workspace.orientations,
        seed=0,
        out_path=tmp_path / "rows.jsonl",
    )
    assert len(rows) == 90
    table = OrientationTable.load(workspace.orientations)
    for row in rows:
        assert row.origin in workspace.domains
        assert row.orientation_domain == row.origin
        assert 0 <= row.orientation_index < table.k
        assert row.runs, "every training row carries at least one slot"
        assert f"<extra_id_{len(row.runs) - 1}>" in row.template


def test_train_steps_reduces_loss(workspace, primary_cli, tmp_path):
    rows = mask_training_rows(
        primary_cli,
        {name: workspace.corpora[name] for name in workspace.domains},
        workspace.snapshot,
        workspace.orientations,
        seed=1,
        out_path=tmp_path / "rows.jsonl",
    )
    table = OrientationTable.load(workspace.orientations)
    texts = [r.template for r in rows] + [" ".join(r.target_tokens) for r in rows]
    vocab = WordVocab.from_texts(texts, extra_words=table.all_words())
    model = build_model(vocab, table, seed=0)
    config = TrainConfig(learning_rate=3e-4, seed=0)
    optimizer = make_optimizer(model, config)
    encoded = [encode_example(r, vocab, table, config.max_length) for r in rows]
    losses = train_steps(model, optimizer, encoded * 4, config.batch_size, max_steps=40)
    assert len(losses) == 40
    assert losses[-1] < losses[0]


def test_evaluator_rejects_single_domain(workspace, primary_cli, tmp_path):
    with pytest.raises(ConfigError):
        DomainAccuracyEvaluator(
            domain_files={"gadgets": workspace.corpora["gadgets"]},
            corpus_files={"gadgets": workspace.corpora["gadgets"]},
            snapshot=workspace.snapshot,
            workdir=tmp_path,
            primary=primary_cli,
        )


def test_evaluator_rejects_identity_rotation(workspace, primary_cli, tmp_path):
    with pytest.raises(ConfigError):
        DomainAccuracyEvaluator(
            domain_files=workspace.corpora,
            corpus_files=workspace.corpora,
            snapshot=workspace.snapshot,
            workdir=tmp_path,
            primary=primary_cli,
            rotate=3,
        )


def test_trained_model_selected_a_best_epoch(trained):
    result = trained.result
    assert result.best.is_dir()
    assert (result.best / "weights.pt").exists()
    assert 0 <= result.best_epoch < 6
    assert len(result.records) == 6
    scores = [r.score for r in result.records]
    assert all(s is not None for s in scores)
    assert result.records[result.best_epoch].score == max(scores)
    # losses trend down over training
    assert result.records[-1].mean_loss < result.records[0].mean_loss
    summary = json.loads((result.best.parent / "training.json").read_text())
    assert summary["best_epoch"] == result.best_epoch
    assert len(summary["epochs"]) == 6
