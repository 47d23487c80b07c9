"""Turning decoder output back into text.

The decoder speaks the sentinel protocol: <extra_id_k> announces slot k and
the words that follow belong to that slot until the next sentinel or eos.
These helpers parse that stream, splice fills into a template, and build the
allowlist used for vocabulary-constrained decoding.
"""

from __future__ import annotations

import torch
from transformers.generation.logits_process import LogitsProcessor

from .errors import FormatError
from .vocab import EOS_ID, N_SENTINELS, PAD_ID, UNK_ID, WordVocab, sentinel_index, stem_word


class AllowList(LogitsProcessor):
    """Additive mask: every id outside the allowlist scores -inf."""

    def __init__(self, allowed_ids: set[int], vocab_size: int):
        mask = torch.full((vocab_size,), float("-inf"))
        mask[sorted(allowed_ids)] = 0.0
        self.mask = mask

    def __call__(self, input_ids: torch.Tensor, scores: torch.Tensor) -> torch.Tensor:
        return scores + self.mask.to(scores.dtype)


def template_slots(tokens: list[str]) -> list[int]:
    """Slot numbers in template order. A repeated sentinel is malformed."""
    slots = [k for t in tokens if (k := sentinel_index(t)) is not None]
    if len(set(slots)) != len(slots):
        raise FormatError("template repeats a slot sentinel")
    return slots


def allowed_token_ids(vocab: WordVocab, stems: set[str]) -> set[int]:
    ids = {PAD_ID, EOS_ID}
    ids.update(vocab.sentinel_id(k) for k in range(N_SENTINELS))
    for word_id in vocab.word_ids():
        if stem_word(vocab.token(word_id)) in stems:
            ids.add(word_id)
    return ids


def parse_fills(out_ids: list[int], vocab: WordVocab, slots: list[int]) -> dict[int, list[str]]:
    fills: dict[int, list[str]] = {k: [] for k in slots}
    current: int | None = None
    for token_id in out_ids:
        if token_id == EOS_ID:
            break
        if token_id in (PAD_ID, UNK_ID):
            continue
        slot = WordVocab.slot_of_id(token_id)
        if slot is not None:
            # a sentinel the template never asked about addresses nothing
            current = slot if slot in fills else None
            continue
        if current is not None:
            fills[current].append(vocab.token(token_id))
    return fills


def assemble_text(template_tokens: list[str], fills: dict[int, list[str]]) -> str:
    out: list[str] = []
    for token in template_tokens:
        slot = sentinel_index(token)
        if slot is None:
            out.append(token)
        else:
            out.extend(fills.get(slot, ()))
    return " ".join(out)
