"""Snowball English ("Porter2") stemming algorithm.

Self-contained implementation of the standard algorithm: prelude y-marking,
R1/R2 regions (with the gener/commun/arsen R1 exception), steps 0/1a/1b/1c/2/3/4/5,
the two exception word lists, and the postlude. Words of length <= 2 are
returned unchanged. The input is expected to be lowercase; uppercase letters
are treated as consonants, so callers that want case-insensitive behavior must
fold case first.
"""

from __future__ import annotations

_VOWELS = frozenset("aeiouy")
# Doubles removed after ed/ing deletion. ll, ss, zz are deliberately absent.
_DOUBLES = ("bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt")
_LI_ENDING = frozenset("cdeghkmnrt")

_EXCEPTION1 = {
    "skis": "ski",
    "skies": "sky",
    "dying": "die",
    "lying": "lie",
    "tying": "tie",
    "idly": "idl",
    "gently": "gentl",
    "ugly": "ugli",
    "early": "earli",
    "only": "onli",
    "singly": "singl",
    "sky": "sky",
    "news": "news",
    "howe": "howe",
    "atlas": "atlas",
    "cosmos": "cosmos",
    "bias": "bias",
    "andes": "andes",
}

# Invariant forms caught after step 1a.
_EXCEPTION2 = frozenset(
    {"inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed"}
)

# (suffix, replacement, guard) triples, longest suffix first. guard is the
# required character class immediately before the suffix, or None.
_STEP2 = (
    ("ization", "ize", None),
    ("ational", "ate", None),
    ("fulness", "ful", None),
    ("ousness", "ous", None),
    ("iveness", "ive", None),
    ("tional", "tion", None),
    ("biliti", "ble", None),
    ("lessli", "less", None),
    ("entli", "ent", None),
    ("ation", "ate", None),
    ("alism", "al", None),
    ("aliti", "al", None),
    ("ousli", "ous", None),
    ("iviti", "ive", None),
    ("fulli", "ful", None),
    ("enci", "ence", None),
    ("anci", "ance", None),
    ("abli", "able", None),
    ("izer", "ize", None),
    ("ator", "ate", None),
    ("alli", "al", None),
    ("bli", "ble", None),
    ("ogi", "og", "l"),
    ("li", "", "li"),
)

_STEP3 = (
    ("ational", "ate", None),
    ("tional", "tion", None),
    ("alize", "al", None),
    ("icate", "ic", None),
    ("iciti", "ic", None),
    ("ative", "", "R2"),
    ("ical", "ic", None),
    ("ness", "", None),
    ("ful", "", None),
)

_STEP4 = (
    "ement",
    "ance",
    "ence",
    "able",
    "ible",
    "ment",
    "ant",
    "ent",
    "ism",
    "ate",
    "iti",
    "ous",
    "ive",
    "ize",
    "ion",
    "al",
    "er",
    "ic",
)


def _mark_ys(word: str) -> str:
    # y at the start or after a vowel is a consonant; mark it Y so the vowel
    # set (which contains y) skips it. Marks are removed in the postlude.
    chars = list(word)
    if chars[0] == "y":
        chars[0] = "Y"
    for i in range(1, len(chars)):
        if chars[i] == "y" and chars[i - 1] in _VOWELS:
            chars[i] = "Y"
    return "".join(chars)


def _region_after(word: str, start: int) -> int:
    """Index just past the first non-vowel that follows a vowel, from start."""
    n = len(word)
    i = start
    while i < n and word[i] not in _VOWELS:
        i += 1
    if i == n:
        return n
    i += 1
    while i < n and word[i] in _VOWELS:
        i += 1
    if i == n:
        return n
    return i + 1


def _mark_regions(word: str) -> tuple[int, int]:
    p1 = len(word)
    for prefix in ("gener", "commun", "arsen"):
        if word.startswith(prefix):
            p1 = len(prefix)
            break
    else:
        p1 = _region_after(word, 0)
    p2 = _region_after(word, p1)
    return p1, p2


def _shortv(word: str, end: int) -> bool:
    """Short-syllable test for the text ending at position end (exclusive)."""
    if (
        end >= 3
        and word[end - 1] not in _VOWELS
        and word[end - 1] not in "wxY"
        and word[end - 2] in _VOWELS
        and word[end - 3] not in _VOWELS
    ):
        return True
    return end == 2 and word[0] in _VOWELS and word[1] not in _VOWELS


def _step_1a(word: str) -> str:
    for suffix in ("'s'", "'s", "'"):
        if word.endswith(suffix):
            word = word[: -len(suffix)]
            break
    if word.endswith("sses"):
        return word[:-4] + "ss"
    if word.endswith("ied") or word.endswith("ies"):
        return word[:-3] + ("i" if len(word) - 3 > 1 else "ie")
    if word.endswith("ss") or word.endswith("us"):
        return word
    if word.endswith("s"):
        # Delete only if a vowel exists before the character preceding the s.
        if any(c in _VOWELS for c in word[:-2]):
            return word[:-1]
    return word


def _step_1b(word: str, p1: int) -> str:
    for suffix in ("eedly", "eed"):
        if word.endswith(suffix):
            if len(word) - len(suffix) >= p1:
                return word[: -len(suffix)] + "ee"
            return word
    for suffix in ("ingly", "edly", "ing", "ed"):
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if not any(c in _VOWELS for c in stem):
                return word
            if stem.endswith(("at", "bl", "iz")):
                return stem + "e"
            if stem.endswith(_DOUBLES):
                return stem[:-1]
            if len(stem) == p1 and _shortv(stem, len(stem)):
                return stem + "e"
            return stem
    return word


def _step_1c(word: str) -> str:
    if len(word) > 2 and word[-1] in "yY" and word[-2] not in _VOWELS:
        return word[:-1] + "i"
    return word


def _step_2(word: str, p1: int) -> str:
    for suffix, repl, guard in _STEP2:
        if word.endswith(suffix):
            start = len(word) - len(suffix)
            if start < p1:
                return word
            if guard == "l" and not (start >= 1 and word[start - 1] == "l"):
                return word
            if guard == "li" and not (start >= 1 and word[start - 1] in _LI_ENDING):
                return word
            return word[:start] + repl
    return word


def _step_3(word: str, p1: int, p2: int) -> str:
    for suffix, repl, guard in _STEP3:
        if word.endswith(suffix):
            start = len(word) - len(suffix)
            if start < p1:
                return word
            if guard == "R2" and start < p2:
                return word
            return word[:start] + repl
    return word


def _step_4(word: str, p2: int) -> str:
    for suffix in _STEP4:
        if word.endswith(suffix):
            start = len(word) - len(suffix)
            if start < p2:
                return word
            if suffix == "ion" and not (start >= 1 and word[start - 1] in "st"):
                return word
            return word[:start]
    return word


def _step_5(word: str, p1: int, p2: int) -> str:
    if word.endswith("e"):
        pos = len(word) - 1
        if pos >= p2 or (pos >= p1 and not _shortv(word, pos)):
            return word[:-1]
        return word
    if word.endswith("l") and len(word) - 1 >= p2 and len(word) >= 2 and word[-2] == "l":
        return word[:-1]
    return word


def stem(word: str) -> str:
    if len(word) <= 2:
        return word
    exceptional = _EXCEPTION1.get(word)
    if exceptional is not None:
        return exceptional
    if word.startswith("'"):
        word = word[1:]
        if len(word) <= 2:
            return word
    word = _mark_ys(word)
    p1, p2 = _mark_regions(word)
    word = _step_1a(word)
    if word in _EXCEPTION2:
        return word
    word = _step_1b(word, p1)
    word = _step_1c(word)
    word = _step_2(word, p1)
    word = _step_3(word, p1, p2)
    word = _step_4(word, p2)
    word = _step_5(word, p1, p2)
    return word.replace("Y", "y")
