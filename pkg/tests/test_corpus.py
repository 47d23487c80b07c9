import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainforge.corpus import (
    CorpusConfig,
    DomainRegistry,
    count_words,
    is_word,
    load_corpus,
    load_domain_corpora,
    make_document,
    ngram_keys,
    ngrams,
    stem_token,
    tokenize,
)
from domainforge.errors import ConfigurationError, CorpusFormatError

CFG = CorpusConfig()


def test_tokenizer_splits_punctuation():
    assert tokenize("good knife!", CFG) == ("good", "knife", "!")
    assert tokenize("it's fine.", CFG) == ("it", "'", "s", "fine", ".")
    assert tokenize("", CFG) == ()


def test_tokenizer_truncates_whole_tokens():
    config = CorpusConfig(truncation_limit=3)
    assert tokenize("one two three four five", config) == ("one", "two", "three")


def test_stemmed_document():
    doc = make_document(0, "kitchen", "The blades are bending", CFG)
    assert doc.tokens == ("The", "blades", "are", "bending")
    assert doc.stems == ("the", "blade", "are", "bend")


def test_punctuation_passes_through_stemming():
    doc = make_document(0, "kitchen", "good knife!", CFG)
    assert doc.stems == ("good", "knife", "!")


def test_case_and_plural_folding():
    doc = make_document(0, "kitchen", "Knives knife", CFG)
    assert doc.stems == ("knive", "knife")


def test_no_stemmer_config():
    config = CorpusConfig(stemmer="none")
    doc = make_document(0, "d", "Running dogs", config)
    assert doc.stems == ("running", "dogs")
    config = CorpusConfig(stemmer="none", lowercase=False)
    doc = make_document(0, "d", "Running dogs", config)
    assert doc.stems == ("Running", "dogs")


def test_registry_basics():
    reg = DomainRegistry(("Airline", "kitchen"))
    assert list(reg) == ["airline", "kitchen"]
    assert reg.id_of("AIRLINE") == 0
    assert reg[1] == "kitchen"
    assert "kitchen" in reg and "ovens" not in reg
    with pytest.raises(ConfigurationError):
        reg.id_of("ovens")
    with pytest.raises(ConfigurationError):
        DomainRegistry(("a", "A"))
    with pytest.raises(ConfigurationError):
        DomainRegistry(("a", ""))


def test_load_corpus(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text(
        '{"text": "The blades are bending", "label": "negative"}\n'
        "\n"
        '{"text": "good knife!", "label": 1}\n',
        encoding="utf-8",
    )
    docs = load_corpus(path, "Kitchen", CFG)
    assert len(docs) == 2
    assert docs[0].doc_id == 0 and docs[1].doc_id == 1
    assert docs[0].domain == "kitchen"
    assert docs[0].label == "negative"
    assert docs[1].label == "1"  # numeric labels become strings


def test_load_corpus_errors(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "ok"}\nnot json\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError) as exc:
        load_corpus(path, "d", CFG)
    assert "line 2" in str(exc.value)

    path.write_text('["list"]\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        load_corpus(path, "d", CFG)

    path.write_text('{"label": "x"}\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError) as exc:
        load_corpus(path, "d", CFG)
    assert "text" in str(exc.value)

    path.write_text(json.dumps({"text": "ok", "label": True}) + "\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        load_corpus(path, "d", CFG)


def test_load_domain_corpora_dense_ids(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    a.write_text('{"text": "one"}\n{"text": "two"}\n', encoding="utf-8")
    b.write_text('{"text": "three"}\n', encoding="utf-8")
    registry, corpora = load_domain_corpora({"a": a, "b": b}, CFG)
    ids = [doc.doc_id for name in registry for doc in corpora[name]]
    assert ids == [0, 1, 2]


def test_ngram_enumeration():
    doc = make_document(0, "d", "a b c d", CorpusConfig(stemmer="none"))
    grams = list(ngrams(doc, 3))
    assert sum(1 for g in grams if g.order == 1) == 4
    assert sum(1 for g in grams if g.order == 2) == 3
    assert sum(1 for g in grams if g.order == 3) == 2
    keys = {g.key for g in grams}
    assert "a b c" in keys and "c d" in keys
    with pytest.raises(ConfigurationError):
        list(ngrams(doc, 4))


def test_ngram_count_at_truncation_limit():
    # 96 tokens -> 96 + 95 + 94 = 285 n-grams of orders 1..3
    text = " ".join(f"w{i}" for i in range(200))
    doc = make_document(0, "d", text, CorpusConfig(stemmer="none"))
    assert len(doc.tokens) == 96
    assert len(list(ngrams(doc, 3))) == 285


def test_ngram_keys_distinct():
    keys = ngram_keys(("a", "b", "a", "b"), 2)
    assert keys == {"a", "b", "a b", "b a"}


def test_word_detection():
    assert is_word("knife") and is_word("3d") and is_word("it")
    assert not is_word("!") and not is_word("...")
    assert count_words(("good", "knife", "!")) == 2


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=300))
def test_tokenize_never_loses_word_chars(text):
    # every word character of the input survives tokenization (pre-truncation)
    tokens = tokenize(text)
    joined = "".join(tokens)
    for ch in text:
        if ch.isalnum() or ch == "_":
            assert ch in joined


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=300))
def test_document_parallel_sequences(text):
    doc = make_document(0, "d", text, CFG)
    assert len(doc.tokens) == len(doc.stems)
    assert len(doc.tokens) <= CFG.truncation_limit
    for tok, stem in zip(doc.tokens, doc.stems):
        if not is_word(tok):
            assert stem == tok  # punctuation is untouched


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["a", "bb", "ccc", "dd dd"]), max_size=6))
def test_ngram_arithmetic(parts):
    doc = make_document(0, "d", " ".join(parts), CorpusConfig(stemmer="none"))
    n = len(doc.tokens)
    for order in (1, 2, 3):
        expected = max(0, n - order + 1)
        assert sum(1 for g in ngrams(doc, 3) if g.order == order) == expected


def test_stem_token_respects_config():
    assert stem_token("Blades", CFG) == "blade"
    assert stem_token("!", CFG) == "!"
    no_fold = CorpusConfig(lowercase=False)
    assert stem_token("Blades", no_fold) != "blade"  # unfolded input stays unfolded
