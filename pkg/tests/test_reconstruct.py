import random

import pytest

from domainforge.corpus import CorpusConfig, make_document, tokenize
from domainforge.corruption import mask
from domainforge.errors import (
    ConfigurationError,
    ServiceGenerationError,
    ServiceProtocolError,
    ServiceTransportError,
    VocabularyViolationError,
)
from domainforge.orientation import build_orientations
from domainforge.reconstruct import (
    AllowedVocabulary,
    ReconstructorKind,
    ServiceClient,
    admitted_unigrams,
    build_allowed_vocabulary,
    build_cooccurrence,
    build_unconstrained_vocabulary,
    fill_external,
    fill_native,
)
from domainforge.stats import StatsConfig, affinity, build_stats, masking_score

CFG = CorpusConfig()


def blade_corpus():
    corpora = {
        "gadgets": [make_document(i, "gadgets", "the blade is bent", CFG) for i in range(10)],
        "flights": [make_document(i, "flights", "the seat is flat", CFG) for i in range(10)],
    }
    return corpora, build_stats(corpora, StatsConfig(min_doc_frequency=1), CFG)


def disjoint_corpus():
    corpora = {
        "gadgets": [make_document(i, "gadgets", "blade knife oven sharp", CFG) for i in range(10)],
        "flights": [make_document(i, "flights", "seat crew flight gate", CFG) for i in range(10)],
    }
    return corpora, build_stats(corpora, StatsConfig(min_doc_frequency=1), CFG)


# --- admitted vocabulary ------------------------------------------------------

def test_admitted_unigrams_worked_case():
    _, snap = blade_corpus()
    assert admitted_unigrams(snap, "flights", 0.08) == {"seat", "flat"}
    assert admitted_unigrams(snap, "gadgets", 0.08) == {"blade", "bent"}
    # shared words have score 0 everywhere and never clear a positive threshold
    assert "the" not in admitted_unigrams(snap, "flights", 0.0)


def test_admitted_unigrams_matches_definition():
    # brute force over the definition: max over other domains of the pairwise
    # masking score, one call per (word, domain) pair
    rng = random.Random(3)
    words = ["blade", "oven", "seat", "crew", "pan", "gate", "the"]
    corpora = {}
    for name in ("a", "b", "c"):
        docs = []
        for i in range(rng.randint(3, 9)):
            docs.append(make_document(i, name, " ".join(rng.choices(words, k=6)), CFG))
        corpora[name] = docs
    snap = build_stats(corpora, StatsConfig(min_doc_frequency=1), CFG)
    for tau in (0.02, 0.08, 0.3):
        for dest in corpora:
            expected = {
                w
                for w in snap.unigrams()
                if max(
                    masking_score(snap, w, dest, other)
                    for other in corpora
                    if other != dest
                )
                > tau
            }
            assert admitted_unigrams(snap, dest, tau) == expected


def test_allowed_vocabulary_includes_original_stems():
    _, snap = blade_corpus()
    original = make_document(0, "gadgets", "the blade is bent", CFG)
    vocab = build_allowed_vocabulary(snap, "flights", original)
    assert vocab.words == {"seat", "flat"}
    assert vocab.permits("blade")  # original stem, always writable
    assert vocab.permits("seat")
    assert not vocab.permits("oven")
    assert vocab.allowed() == {"seat", "flat", "the", "blade", "is", "bent"}
    assert vocab.constrained


def test_unconstrained_vocabulary():
    _, snap = blade_corpus()
    original = make_document(0, "gadgets", "the blade is bent", CFG)
    vocab = build_unconstrained_vocabulary(snap, "flights", original)
    assert vocab.words == set(snap.unigrams())
    assert not vocab.constrained


def test_admitted_cache_reuse():
    _, snap = blade_corpus()
    original = make_document(0, "gadgets", "the blade is bent", CFG)
    admitted = admitted_unigrams(snap, "flights", 0.08)
    vocab = build_allowed_vocabulary(snap, "flights", original, admitted=admitted)
    assert vocab.words == admitted


# --- co-occurrence ------------------------------------------------------------

def test_cooccurrence_partners():
    corpora = {
        "gadgets": [
            make_document(0, "gadgets", "blade oven", CFG),
            make_document(1, "gadgets", "blade pan", CFG),
            make_document(2, "gadgets", "whisk", CFG),
        ],
        "flights": [make_document(0, "flights", "seat crew", CFG) for _ in range(3)],
    }
    snap = build_stats(corpora, StatsConfig(min_doc_frequency=1), CFG)
    oset = build_orientations(snap, k=2, overrides={"gadgets": ["blade"], "flights": ["seat"]})
    index = build_cooccurrence(corpora, oset)
    assert index.partners("gadgets", "blade") == {"oven", "pan"}
    assert index.partners("flights", "seat") == {"crew"}
    assert index.partners("gadgets", "nosuch") == frozenset()


# --- native fill ---------------------------------------------------------------

def test_fill_native_basic():
    corpora, snap = blade_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    result = fill_native(template, None, snap, vocab, random.Random(0))
    assert len(result.tokens) == len(doc.tokens)
    assert result.tokens[0] == "the" and result.tokens[2] == "is"  # kept verbatim
    assert not result.used_fallback
    assert result.source == "native"
    assert len(result.slot_fills) == template.n_slots
    for fill in result.slot_fills:
        for word in fill:
            assert word in vocab.words


def test_fill_native_deterministic():
    corpora, snap = blade_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    a = fill_native(template, None, snap, vocab, random.Random(7))
    b = fill_native(template, None, snap, vocab, random.Random(7))
    assert a == b


def test_fill_native_fallback_to_original():
    corpora, snap = blade_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    empty = AllowedVocabulary(
        destination="flights", tau=0.08, words=frozenset(),
        original_stems=frozenset(doc.stems),
    )
    result = fill_native(template, None, snap, empty, random.Random(0))
    assert result.used_fallback
    for fill in result.slot_fills:
        assert set(fill) <= set(doc.stems)

    truly_empty = AllowedVocabulary(
        destination="flights", tau=0.08, words=frozenset(), original_stems=frozenset()
    )
    with pytest.raises(ConfigurationError):
        fill_native(template, None, snap, truly_empty, random.Random(0))


def test_fill_native_uniform_when_scores_vanish():
    # fallback pool of stems the snapshot never saw: all weights zero, the
    # sampler must still produce output (uniform) instead of dying
    corpora, snap = blade_corpus()
    doc = make_document(50, "gadgets", "zig zag zig zag", CFG)
    template = mask(doc, "flights", snap)  # nothing clears tau; no slots
    vocab = AllowedVocabulary(
        destination="flights", tau=0.08, words=frozenset(),
        original_stems=frozenset(doc.stems),
    )
    result = fill_native(template, None, snap, vocab, random.Random(0))
    assert result.tokens == doc.tokens  # no slots, identity


def test_fill_native_orientation_boost():
    corpora, snap = disjoint_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    assert template.n_slots == 1 and template.masked_count == 4
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    oset = build_orientations(snap, k=2, overrides={"gadgets": ["blade"], "flights": ["seat"]})
    index = build_cooccurrence(corpora, oset)
    orientation = oset.descriptors("flights")[1]  # word "seat"
    partners = index.partners("flights", orientation.stem)
    assert partners == {"crew", "flight", "gate"}
    result = fill_native(
        template, orientation, snap, vocab, random.Random(1),
        boost=1e9, cooccurrence=index,
    )
    for fill in result.slot_fills:
        assert set(fill) <= partners  # boosted words dominate the sampler


def test_fill_native_boost_ignored_without_cooccurrence():
    corpora, snap = disjoint_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    oset = build_orientations(snap, k=2, overrides={"gadgets": ["blade"], "flights": ["seat"]})
    oriented = fill_native(
        template, oset.descriptors("flights")[1], snap, vocab, random.Random(5)
    )
    unoriented = fill_native(template, None, snap, vocab, random.Random(5))
    assert oriented.text == unoriented.text  # no index, no behavioural difference


def test_fill_native_raises_destination_affinity():
    corpora, snap = disjoint_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    result = fill_native(template, None, snap, vocab, random.Random(0))

    def mean_affinity(tokens):
        doc2 = make_document(0, "x", " ".join(tokens), CFG)
        vals = [affinity(snap, s, "flights") for s in doc2.stems]
        return sum(vals) / len(vals)

    assert mean_affinity(result.tokens) > mean_affinity(doc.tokens)


def test_reconstructor_kind_validation():
    with pytest.raises(ConfigurationError):
        ReconstructorKind(variant="nosuch")
    with pytest.raises(ConfigurationError):
        ReconstructorKind(boost=0.0)
    with pytest.raises(ConfigurationError):
        ReconstructorKind(beam_size=0)
    kind = ReconstructorKind()
    assert kind.variant == "native-oriented"
    assert kind.boost == 4.0
    assert kind.beam_size == 4 and kind.max_length == 96


# --- service client (stub_service fixture lives in conftest) --------------------

def test_client_happy_path(stub_service):
    server, url = stub_service
    server.script.append((200, {"text": "x", "slot_fills": [], "model_version": "m1"}))
    client = ServiceClient(url)
    body = client.generate({"template": "x"})
    assert body["model_version"] == "m1"
    assert server.requests[0][0] == "/generate"


def test_client_health(stub_service):
    server, url = stub_service
    server.script.append((200, {"status": "ok", "model_version": "m1"}))
    assert ServiceClient(url).health()["status"] == "ok"
    assert server.requests[0][0] == "/health"


def test_client_error_taxonomy(stub_service):
    server, url = stub_service
    client = ServiceClient(url)

    server.script.append((400, {"error": "no such domain"}))
    with pytest.raises(ServiceGenerationError, match="no such domain"):
        client.generate({})

    server.script.append((200, b"this is not json"))
    with pytest.raises(ServiceProtocolError):
        client.generate({})

    server.script.append((200, {"text": "x"}))  # missing keys
    with pytest.raises(ServiceProtocolError):
        client.generate({})

    server.script.append((200, ["not", "an", "object"]))
    with pytest.raises(ServiceProtocolError):
        client.generate({})


def test_client_transport_error():
    client = ServiceClient("http://127.0.0.1:1")  # nothing listens here
    with pytest.raises(ServiceTransportError):
        client.generate({})
    with pytest.raises(ServiceTransportError):
        client.health()


def test_client_rejects_empty_url():
    with pytest.raises(ConfigurationError):
        ServiceClient("")


# --- external fill ---------------------------------------------------------------

def _external_setup():
    corpora, snap = blade_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "flights", snap)
    vocab = build_allowed_vocabulary(snap, "flights", doc)
    return doc, template, vocab


def test_fill_external_round_trip(stub_service):
    server, url = stub_service
    doc, template, vocab = _external_setup()
    server.script.append(
        (200, {"text": "the seat is flat", "slot_fills": [["seat"], ["flat"]],
               "model_version": "svc-1"})
    )
    kind = ReconstructorKind(variant="external-service", service_url=url)
    result = fill_external(template, None, vocab, ServiceClient(url), kind)
    assert result.text == "the seat is flat"
    assert result.model_version == "svc-1"
    assert result.source == "external"
    payload = server.requests[0][1]
    assert payload["template"] == template.text()
    assert payload["destination"] == "flights"
    assert payload["enforce_vocabulary"] is True
    assert payload["allowed_words"] == sorted(vocab.allowed())
    assert payload["beam_size"] == 4 and payload["max_length"] == 96


def test_fill_external_vocabulary_violation(stub_service):
    server, url = stub_service
    doc, template, vocab = _external_setup()
    server.script.append(
        (200, {"text": "the dishwasher is flat", "slot_fills": [["dishwasher"], ["flat"]],
               "model_version": "svc-1"})
    )
    kind = ReconstructorKind(variant="external-service", service_url=url)
    with pytest.raises(VocabularyViolationError) as exc:
        fill_external(template, None, vocab, ServiceClient(url), kind)
    assert exc.value.words == ("dishwash",)


def test_fill_external_unenforced_passes_through(stub_service):
    server, url = stub_service
    doc, template, vocab = _external_setup()
    server.script.append(
        (200, {"text": "the dishwasher is flat", "slot_fills": [["dishwasher"], ["flat"]],
               "model_version": "svc-1"})
    )
    kind = ReconstructorKind(
        variant="external-service", service_url=url, enforce_vocabulary=False
    )
    result = fill_external(template, None, vocab, ServiceClient(url), kind)
    assert result.text == "the dishwasher is flat"
    assert server.requests[0][1]["allowed_words"] is None


def test_fill_external_zero_slot_echo(stub_service):
    server, url = stub_service
    corpora, snap = blade_corpus()
    doc = corpora["gadgets"][0]
    template = mask(doc, "gadgets", snap, allow_same_domain=True)
    assert template.n_slots == 0
    vocab = build_allowed_vocabulary(snap, "gadgets", doc)
    kind = ReconstructorKind(variant="external-service", service_url=url)

    server.script.append(
        (200, {"text": template.text(), "slot_fills": [], "model_version": "svc-1"})
    )
    result = fill_external(template, None, vocab, ServiceClient(url), kind)
    assert result.text == template.text()

    server.script.append(
        (200, {"text": "the blade is bent entirely", "slot_fills": [],
               "model_version": "svc-1"})
    )
    with pytest.raises(ServiceProtocolError, match="verbatim"):
        fill_external(template, None, vocab, ServiceClient(url), kind)


def test_fill_external_slot_count_mismatch(stub_service):
    server, url = stub_service
    doc, template, vocab = _external_setup()
    server.script.append(
        (200, {"text": "the seat is flat", "slot_fills": [["seat"]],
               "model_version": "svc-1"})
    )
    kind = ReconstructorKind(variant="external-service", service_url=url)
    with pytest.raises(ServiceProtocolError, match="slot fills"):
        fill_external(template, None, vocab, ServiceClient(url), kind)
