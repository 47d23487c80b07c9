import torch

from genservice.checkpoint import load_checkpoint, save_checkpoint
from genservice.data import OrientationTable
from genservice.model import ModelSpec, OrientedT5, build_model
from genservice.vocab import WordVocab


def small_parts():
    table = OrientationTable(
        k=2,
        domains=("alpha", "beta"),
        words={"alpha": ("alpha", "blade"), "beta": ("beta", "seat")},
    )
    vocab = WordVocab.from_texts(
        ["the blade is sharp tool", "the seat is wide cabin"],
        extra_words=table.all_words(),
    )
    return vocab, table


def test_orientation_rows_start_as_descriptor_embeddings():
    vocab, table = small_parts()
    model = build_model(vocab, table, seed=3)
    with torch.no_grad():
        base = model.t5.get_input_embeddings().weight
        for pos, domain in enumerate(table.domains):
            for index, word in enumerate(table.words[domain]):
                row = model.orientations.weight[pos * table.k + index]
                diff = (row - base[vocab.id_of(word)]).abs().max()
                assert float(diff) == 0.0


def test_encoder_grows_by_exactly_one_position():
    vocab, table = small_parts()
    model = build_model(vocab, table, seed=3)
    ids = torch.tensor([[5, 6, 7], [5, 6, 0]], dtype=torch.long)
    attn = torch.tensor([[1, 1, 1], [1, 1, 0]], dtype=torch.long)
    rows = torch.tensor([0, 3], dtype=torch.long)
    embeds, full_attn = model._encoder_inputs(ids, rows, attn)
    assert embeds.shape == (2, 4, model.spec.d_model)
    assert full_attn.shape == (2, 4)
    assert full_attn[:, 0].tolist() == [1, 1]
    # the prepended position carries the orientation vector itself
    assert torch.equal(embeds[0, 0], model.orientations.weight[0])
    assert torch.equal(embeds[1, 0], model.orientations.weight[3])


def test_build_model_is_seed_deterministic():
    vocab, table = small_parts()
    a = build_model(vocab, table, seed=11)
    b = build_model(vocab, table, seed=11)
    for (name_a, pa), (name_b, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert name_a == name_b
        assert torch.equal(pa, pb)
    c = build_model(vocab, table, seed=12)
    assert any(
        not torch.equal(pa, pc) for (_, pa), (_, pc) in zip(a.named_parameters(), c.named_parameters())
    )


def test_generation_is_deterministic():
    vocab, table = small_parts()
    model = build_model(vocab, table, seed=5)
    ids = vocab.encode("the <extra_id_0> is <extra_id_1>")
    first = model.generate_ids(ids, 1, beam_size=4, max_length=12)
    second = model.generate_ids(ids, 1, beam_size=4, max_length=12)
    assert first == second
    assert len(first) <= 12


def test_forward_returns_finite_loss():
    vocab, table = small_parts()
    model = build_model(vocab, table, seed=5)
    out = model(
        input_ids=torch.tensor([[5, 6, 7]]),
        orientation_rows=torch.tensor([2]),
        attention_mask=torch.tensor([[1, 1, 1]]),
        labels=torch.tensor([[3, 8, 1]]),
    )
    assert torch.isfinite(out.loss)


def test_checkpoint_round_trip(tmp_path):
    vocab, table = small_parts()
    model = build_model(vocab, table, spec=ModelSpec(d_model=32, d_kv=8, d_ff=64), seed=7)
    save_checkpoint(tmp_path / "ck", model, vocab, table, "v-test", 96)
    bundle = load_checkpoint(tmp_path / "ck")
    assert bundle.model_version == "v-test"
    assert bundle.max_input_length == 96
    assert bundle.vocab == vocab
    assert bundle.table.domains == table.domains
    assert bundle.table.words == dict(table.words)
    assert isinstance(bundle.model, OrientedT5)
    for (na, pa), (nb, pb) in zip(
        model.named_parameters(), bundle.model.named_parameters()
    ):
        assert na == nb
        assert torch.equal(pa, pb)
    # loaded model generates exactly what the saved one does
    ids = vocab.encode("the <extra_id_0> is")
    assert model.generate_ids(ids, 0) == bundle.model.generate_ids(ids, 0)
