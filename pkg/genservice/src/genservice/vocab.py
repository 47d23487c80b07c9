"""Word-level vocabulary for the filler model.

The masker emits templates whose tokens are already split and normalised, so
the model operates on whole words joined by single spaces. Layout is fixed:
pad 0, eos 1, unk 2, one hundred slot sentinels at 3..102, then the corpus
words in sorted order. Keeping sentinel ids dense and early means a slot
marker never collides with a word and the decoding loop can classify an id
with one comparison.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import _snowball
from .errors import FormatError

PAD_ID = 0
EOS_ID = 1
UNK_ID = 2
N_SENTINELS = 100
FIRST_WORD_ID = 3 + N_SENTINELS

PAD_TOKEN = "<pad>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"

_SENTINEL_RE = re.compile(r"^<extra_id_(\d+)>$")
_HAS_WORD_CHAR = re.compile(r"\w")

FORMAT_NAME = "genservice-vocab"
FORMAT_VERSION = 1


def sentinel(k: int) -> str:
    return f"<extra_id_{k}>"


def sentinel_index(token: str) -> int | None:
    """Slot number when token is a sentinel, else None."""
    m = _SENTINEL_RE.match(token)
    if m is None:
        return None
    k = int(m.group(1))
    return k if k < N_SENTINELS else None


def stem_word(token: str) -> str:
    """Reduce a token the same way the corpus tooling does: punctuation
    passes through untouched, anything with a word character is lowercased
    and stemmed."""
    if not _HAS_WORD_CHAR.search(token):
        return token
    return _snowball.stem(token.lower())


def _is_reserved(token: str) -> bool:
    if token in (PAD_TOKEN, EOS_TOKEN, UNK_TOKEN):
        return True
    return sentinel_index(token) is not None


@dataclass(frozen=True)
class WordVocab:
    """Immutable token table with the fixed special/sentinel prefix."""

    words: tuple[str, ...]
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids: dict[str, int] = {PAD_TOKEN: PAD_ID, EOS_TOKEN: EOS_ID, UNK_TOKEN: UNK_ID}
        for k in range(N_SENTINELS):
            ids[sentinel(k)] = 3 + k
        for offset, word in enumerate(self.words):
            if not word or any(ch.isspace() for ch in word):
                raise FormatError(f"vocabulary word {word!r} contains whitespace")
            if _is_reserved(word):
                raise FormatError(f"vocabulary word {word!r} shadows a reserved token")
            if word in ids:
                raise FormatError(f"duplicate vocabulary word {word!r}")
            ids[word] = FIRST_WORD_ID + offset
        object.__setattr__(self, "_ids", ids)

    @classmethod
    def from_texts(cls, texts: Iterable[str], extra_words: Iterable[str] = ()) -> "WordVocab":
        """Collect every whitespace token from texts plus extra_words.
        Reserved-looking tokens (sentinels in templates) are skipped."""
        seen: set[str] = set()
        for text in texts:
            for token in text.split():
                if not _is_reserved(token):
                    seen.add(token)
        for word in extra_words:
            if word and not _is_reserved(word) and not any(ch.isspace() for ch in word):
                seen.add(word)
        return cls(words=tuple(sorted(seen)))

    @property
    def size(self) -> int:
        return FIRST_WORD_ID + len(self.words)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def token(self, token_id: int) -> str:
        if token_id == PAD_ID:
            return PAD_TOKEN
        if token_id == EOS_ID:
            return EOS_TOKEN
        if token_id == UNK_ID:
            return UNK_TOKEN
        if token_id < FIRST_WORD_ID:
            return sentinel(token_id - 3)
        try:
            return self.words[token_id - FIRST_WORD_ID]
        except IndexError:
            raise FormatError(f"token id {token_id} out of range")

    def sentinel_id(self, k: int) -> int:
        if not 0 <= k < N_SENTINELS:
            raise FormatError(f"sentinel index {k} out of range")
        return 3 + k

    @staticmethod
    def slot_of_id(token_id: int) -> int | None:
        """Slot number when token_id is a sentinel id, else None."""
        if 3 <= token_id < FIRST_WORD_ID:
            return token_id - 3
        return None

    def encode(self, text: str) -> list[int]:
        return [self.id_of(token) for token in text.split()]

    def decode(self, ids: Iterable[int], keep_special: bool = False) -> list[str]:
        out = []
        for token_id in ids:
            if not keep_special and token_id in (PAD_ID, EOS_ID, UNK_ID):
                continue
            out.append(self.token(int(token_id)))
        return out

    def word_ids(self) -> range:
        return range(FIRST_WORD_ID, self.size)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "words": list(self.words),
        }
        Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocab":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read vocabulary from {path}: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
            raise FormatError(f"{path} is not a {FORMAT_NAME} file")
        words = payload.get("words")
        if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
            raise FormatError(f"{path} has a malformed word table")
        return cls(words=tuple(words))
