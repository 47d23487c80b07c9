"""HTTP surface: POST /generate fills a masked template, GET /health reports
liveness and the model version.

Contract notes that matter more than they look:
  - a template with no slots is echoed back verbatim, no model call;
  - when enforce_vocabulary is set, decoding masks the output distribution to
    the allowed words and the finished fills are re-checked stem by stem;
  - every failure body is {"error": ...}: 400 for bad requests, 500 when
    generation itself breaks. The service holds no per-request state.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field
from transformers.generation.logits_process import LogitsProcessorList

from .checkpoint import Bundle, load_checkpoint
from .errors import FormatError, GenServiceError
from .fills import AllowList, allowed_token_ids, assemble_text, parse_fills, template_slots
from .vocab import sentinel_index, stem_word


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="ignore")

    template: str
    orientation_domain: str
    orientation_word: str
    destination: str | None = None
    allowed_words: list[str] | None = None
    enforce_vocabulary: bool = False
    max_length: int = Field(default=96, ge=1, le=512)
    beam_size: int = Field(default=4, ge=1, le=32)


def _allowed_stems(request: GenerateRequest, template_tokens: list[str]) -> set[str]:
    stems: set[str] = set()
    for entry in request.allowed_words or ():
        stems.add(entry)
        stems.add(stem_word(entry))
    for token in template_tokens:
        if sentinel_index(token) is None:
            stems.add(stem_word(token))
    return stems


def _run_generate(bundle: Bundle, request: GenerateRequest) -> dict:
    template_tokens = request.template.split()
    slots = template_slots(template_tokens)
    if not slots:
        return {
            "text": request.template,
            "slot_fills": [],
            "model_version": bundle.model_version,
        }

    orientation_row = bundle.table.row_for_word(
        request.orientation_domain, request.orientation_word
    )
    input_ids = bundle.vocab.encode(request.template)[: bundle.max_input_length]

    processor = None
    stems: set[str] = set()
    if request.enforce_vocabulary:
        stems = _allowed_stems(request, template_tokens)
        processor = LogitsProcessorList(
            [AllowList(allowed_token_ids(bundle.vocab, stems), bundle.vocab.size)]
        )

    out_ids = bundle.model.generate_ids(
        input_ids,
        orientation_row,
        beam_size=request.beam_size,
        max_length=request.max_length,
        logits_processor=processor,
    )
    fills = parse_fills(out_ids, bundle.vocab, slots)

    if request.enforce_vocabulary:
        bad = sorted(
            {
                word
                for words in fills.values()
                for word in words
                if stem_word(word) not in stems
            }
        )
        if bad:
            raise GenServiceError(f"generated words escaped the vocabulary: {', '.join(bad)}")

    return {
        "text": assemble_text(template_tokens, fills),
        "slot_fills": [fills[k] for k in slots],
        "model_version": bundle.model_version,
    }


def create_app(bundle: Bundle) -> FastAPI:
    app = FastAPI(title="genservice", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def invalid_request(_request, exc: RequestValidationError):
        errors = exc.errors()
        if errors:
            first = errors[0]
            loc = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
            message = f"invalid request: {loc or 'body'}: {first.get('msg', 'invalid')}"
        else:
            message = "invalid request"
        return JSONResponse(status_code=400, content={"error": message})

    @app.get("/health")
    def health():
        return {"status": "ok", "model_version": bundle.model_version}

    @app.post("/generate")
    def generate(request: GenerateRequest):
        try:
            return _run_generate(bundle, request)
        except FormatError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except GenServiceError as exc:
            return JSONResponse(status_code=500, content={"error": str(exc)})
        except Exception as exc:  # noqa: BLE001 - contract: failures answer {"error"}
            return JSONResponse(status_code=500, content={"error": f"generation failed: {exc}"})

    return app


def app_from_checkpoint(directory: str) -> FastAPI:
    return create_app(load_checkpoint(directory))
