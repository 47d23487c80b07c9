"""Slot-filling encoder-decoder with a learned orientation vector per
domain descriptor.

The backbone is a small randomly initialised T5 stack over the word-level
vocabulary. Conditioning is a single extra embedding prepended to the
encoder input: row t of the orientation matrix belongs to descriptor slot
t mod k of domain t // k, and starts out as an exact copy of the backbone's
input embedding for that descriptor word.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn
from transformers import T5Config, T5ForConditionalGeneration
from transformers.generation.logits_process import LogitsProcessorList

from .data import OrientationTable
from .errors import ConfigError
from .vocab import EOS_ID, PAD_ID, WordVocab


@dataclass(frozen=True)
class ModelSpec:
    d_model: int = 64
    d_kv: int = 16
    d_ff: int = 128
    num_layers: int = 2
    num_heads: int = 4

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")


class OrientedT5(nn.Module):
    def __init__(self, vocab_size: int, n_orientations: int, spec: ModelSpec = ModelSpec()):
        super().__init__()
        self.spec = spec
        self.n_orientations = n_orientations
        self.t5 = T5ForConditionalGeneration(
            T5Config(
                vocab_size=vocab_size,
                d_model=spec.d_model,
                d_kv=spec.d_kv,
                d_ff=spec.d_ff,
                num_layers=spec.num_layers,
                num_decoder_layers=spec.num_layers,
                num_heads=spec.num_heads,
                dropout_rate=0.0,
                pad_token_id=PAD_ID,
                eos_token_id=EOS_ID,
                decoder_start_token_id=PAD_ID,
            )
        )
        self.orientations = nn.Embedding(n_orientations, spec.d_model)

    @property
    def vocab_size(self) -> int:
        return self.t5.config.vocab_size

    def init_orientations(self, vocab: WordVocab, table: OrientationTable) -> None:
        """Copy each descriptor word's input embedding into its orientation
        row. Must run before any optimisation step so the rows share the
        backbone's starting point exactly."""
        if table.n_rows != self.n_orientations:
            raise ConfigError(
                f"orientation table has {table.n_rows} rows, model expects {self.n_orientations}"
            )
        base = self.t5.get_input_embeddings().weight
        with torch.no_grad():
            for d_pos, domain in enumerate(table.domains):
                for index, word in enumerate(table.words[domain]):
                    self.orientations.weight[d_pos * table.k + index] = base[vocab.id_of(word)]

    def _encoder_inputs(
        self, input_ids: torch.Tensor, orientation_rows: torch.Tensor, attention_mask: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        # encoder sees orientation + tokens, so length grows by exactly one
        tokens = self.t5.get_input_embeddings()(input_ids)
        vectors = self.orientations(orientation_rows).unsqueeze(1)
        embeds = torch.cat([vectors, tokens], dim=1)
        ones = attention_mask.new_ones(attention_mask.shape[0], 1)
        return embeds, torch.cat([ones, attention_mask], dim=1)

    def forward(
        self,
        input_ids: torch.Tensor,
        orientation_rows: torch.Tensor,
        attention_mask: torch.Tensor,
        labels: torch.Tensor,
    ):
        embeds, attn = self._encoder_inputs(input_ids, orientation_rows, attention_mask)
        return self.t5(inputs_embeds=embeds, attention_mask=attn, labels=labels)

    @torch.no_grad()
    def generate_ids(
        self,
        input_ids: list[int],
        orientation_row: int,
        beam_size: int = 4,
        max_length: int = 96,
        logits_processor: LogitsProcessorList | None = None,
    ) -> list[int]:
        """Beam-search decode for a single template. Deterministic for a
        given checkpoint and request."""
        was_training = self.training
        self.eval()
        try:
            ids = torch.tensor([input_ids], dtype=torch.long)
            rows = torch.tensor([orientation_row], dtype=torch.long)
            attn = torch.ones_like(ids)
            embeds, full_attn = self._encoder_inputs(ids, rows, attn)
            out = self.t5.generate(
                inputs_embeds=embeds,
                attention_mask=full_attn,
                num_beams=beam_size,
                max_length=max_length,
                logits_processor=logits_processor,
            )
        finally:
            if was_training:
                self.train()
        return [int(t) for t in out[0]]


def build_model(
    vocab: WordVocab,
    table: OrientationTable,
    spec: ModelSpec = ModelSpec(),
    seed: int = 0,
) -> OrientedT5:
    generator_state = torch.get_rng_state()
    try:
        torch.manual_seed(seed)
        model = OrientedT5(vocab.size, table.n_rows, spec)
    finally:
        torch.set_rng_state(generator_state)
    model.init_orientations(vocab, table)
    return model
