"""Filter tests.

The classifier case is small enough to evaluate by hand: one doc per domain,
add-1 smoothing, vocabulary {blade, oven, seat}. Token likelihoods for domain
a (doc "blade blade oven") are (3/6, 2/6, 1/6); for domain b (doc "seat seat
oven") they mirror. Classifying "blade" gives posterior (0.75, 0.25).
"""

import random

import pytest

from domainforge.corpus import CorpusConfig, make_document
from domainforge.errors import ConfigurationError, FormatError, UndefinedInputError
from domainforge.filtering import (
    REASON_DOMAIN,
    REASON_OVERLAP,
    REASON_SHORT,
    FilterConfig,
    apply_filter,
    load_classifier,
    predict_domain,
    save_classifier,
    train_domain_classifier,
    word_overlap,
)

CFG = CorpusConfig()


def tiny_classifier():
    corpora = {
        "a": [make_document(0, "a", "blade blade oven", CFG)],
        "b": [make_document(0, "b", "seat seat oven", CFG)],
    }
    return train_domain_classifier(corpora, smoothing=1.0, corpus_config=CFG)


def separable_classifier():
    corpora = {
        "gadgets": [make_document(i, "gadgets", "blade knife oven sharp", CFG) for i in range(8)],
        "flights": [make_document(i, "flights", "seat crew gate wing", CFG) for i in range(8)],
    }
    return train_domain_classifier(corpora, corpus_config=CFG)


def test_hand_computed_posterior():
    clf = tiny_classifier()
    winner, probs = predict_domain(clf, "blade")
    assert winner == "a"
    assert probs[0] == pytest.approx(0.75, abs=1e-12)
    assert probs[1] == pytest.approx(0.25, abs=1e-12)

    winner, probs = predict_domain(clf, "seat")
    assert winner == "b"
    assert probs[1] == pytest.approx(0.75, abs=1e-12)


def test_tie_goes_to_lowest_domain_id():
    clf = tiny_classifier()
    # "oven" is equally likely in both domains
    winner, probs = predict_domain(clf, "oven")
    assert winner == "a"
    assert probs[0] == pytest.approx(0.5, abs=1e-12)
    # unknown words contribute the same smoothing mass to both domains here
    winner, probs = predict_domain(clf, "zeppelin zeppelin")
    assert winner == "a"
    assert probs == pytest.approx((0.5, 0.5), abs=1e-12)


def test_posteriors_sum_to_one():
    clf = separable_classifier()
    rng = random.Random(0)
    words = ["blade", "knife", "seat", "crew", "oven", "zeppelin", "!"]
    for _ in range(50):
        text = " ".join(rng.choices(words, k=rng.randint(1, 12)))
        _, probs = predict_domain(clf, text)
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert all(p >= 0 for p in probs)


def test_separable_corpus_classified_correctly():
    clf = separable_classifier()
    assert predict_domain(clf, "a sharp knife in the oven")[0] == "gadgets"
    assert predict_domain(clf, "the crew closed the gate")[0] == "flights"


def test_train_validation():
    docs = [make_document(0, "a", "x", CFG)]
    with pytest.raises(ConfigurationError):
        train_domain_classifier({"a": docs})
    with pytest.raises(ConfigurationError):
        train_domain_classifier({"a": docs, "b": []})
    with pytest.raises(ConfigurationError):
        train_domain_classifier({"a": docs, "b": docs}, smoothing=0.0)


def test_word_overlap_counts_distinct_stems():
    original = make_document(0, "g", "blade blade oven oven", CFG)
    assert word_overlap(original, "blade something", CFG) == 0.5
    assert word_overlap(original, "nothing shared", CFG) == 0.0
    assert word_overlap(original, "oven blade oven", CFG) == 1.0
    # stems match across inflection: "blades" stems to "blade"
    assert word_overlap(original, "blades", CFG) == 0.5


def test_word_overlap_undefined_for_empty_original():
    original = make_document(0, "g", "", CFG)
    with pytest.raises(UndefinedInputError):
        word_overlap(original, "anything", CFG)


def test_filter_too_short():
    clf = separable_classifier()
    original = make_document(0, "gadgets", "the blade is bent", CFG)
    verdict = apply_filter("seat crew gate", original, "flights", clf)
    assert not verdict.accepted
    assert REASON_SHORT in verdict.reasons
    assert verdict.word_count == 3
    # punctuation does not count toward the word minimum
    verdict = apply_filter("seat crew gate !", original, "flights", clf)
    assert verdict.word_count == 3
    assert REASON_SHORT in verdict.reasons


def test_filter_low_overlap_eighth():
    original = make_document(
        0, "flights", "seat crew gate wing pilot runway luggage boarding", CFG
    )
    clf = separable_classifier()
    # keeps exactly one of the eight distinct original stems
    verdict = apply_filter(
        "the seat was very comfortable today", original, "flights", clf
    )
    assert verdict.overlap == pytest.approx(0.125, abs=1e-12)
    assert REASON_OVERLAP in verdict.reasons
    assert not verdict.accepted


def test_filter_overlap_boundary_passes():
    original = make_document(
        0, "flights", "seat crew gate wing pilot runway luggage boarding", CFG
    )
    clf = separable_classifier()
    # exactly 2/8 = 0.25: the threshold is strict-below, so this passes
    verdict = apply_filter("the seat and crew were fine", original, "flights", clf)
    assert verdict.overlap == pytest.approx(0.25, abs=1e-12)
    assert REASON_OVERLAP not in verdict.reasons


def test_filter_domain_mismatch():
    clf = separable_classifier()
    original = make_document(0, "gadgets", "the blade is sharp", CFG)
    # candidate identical to the original: full overlap, long enough, but the
    # classifier still sees the origin domain
    verdict = apply_filter("the blade is sharp", original, "flights", clf)
    assert verdict.reasons == (REASON_DOMAIN,)
    assert verdict.predicted_domain == "gadgets"
    assert verdict.overlap == 1.0
    assert not verdict.accepted


def test_filter_accepts_good_candidate():
    clf = separable_classifier()
    original = make_document(0, "gadgets", "the blade is sharp", CFG)
    verdict = apply_filter("the seat is crew wing", original, "flights", clf)
    assert verdict.accepted
    assert verdict.reasons == ()
    assert verdict.predicted_domain == "flights"


def test_filter_evaluates_all_reasons():
    clf = separable_classifier()
    original = make_document(
        0, "flights", "seat crew gate wing pilot runway luggage boarding", CFG
    )
    # short, no overlap, and classified as the wrong domain: all three fire
    verdict = apply_filter("blade knife !", original, "flights", clf)
    assert verdict.reasons == (REASON_DOMAIN, REASON_SHORT, REASON_OVERLAP)


def test_filter_without_domain_agreement():
    original = make_document(0, "gadgets", "the blade is sharp", CFG)
    config = FilterConfig(require_domain_agreement=False)
    verdict = apply_filter("the blade is sharp", original, "flights", None, config)
    assert verdict.accepted
    assert verdict.predicted_domain is None
    with pytest.raises(ConfigurationError):
        apply_filter("x", original, "flights", None)  # agreement needs a model


def test_filter_config_validation():
    with pytest.raises(ConfigurationError):
        FilterConfig(min_words=-1)
    with pytest.raises(ConfigurationError):
        FilterConfig(min_overlap=1.5)


def test_classifier_round_trip(tmp_path):
    clf = separable_classifier()
    path = tmp_path / "model.classifier"
    save_classifier(clf, path)
    loaded = load_classifier(path)
    assert tuple(loaded.registry) == tuple(clf.registry)
    assert loaded.vocabulary == clf.vocabulary
    assert loaded.smoothing == clf.smoothing
    texts = ["blade oven", "crew gate", "zeppelin", "the seat is sharp"]
    for text in texts:
        # bit-exact: floats are serialized via repr round-trip
        assert predict_domain(loaded, text) == predict_domain(clf, text)


def test_classifier_file_validation(tmp_path):
    path = tmp_path / "model.classifier"
    save_classifier(separable_classifier(), path)
    text = path.read_text(encoding="utf-8")
    path.write_text(text.replace("gadgets", "gizmos!"), encoding="utf-8")
    with pytest.raises(FormatError):
        load_classifier(path)
