"""Text normalization shared by the terminology lexicon and the inverted index.

One rule set everywhere: lowercase, fold diacritics to base letters, split on
whitespace/hyphen/underscore/punctuation, collapse repeated separators. This is
what makes "Read Quality-Control" match "read quality control".
"""

from __future__ import annotations

import re
import unicodedata

# A token is a maximal run of letters/digits; underscore counts as a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def fold(text: str) -> str:
    """Lowercase and strip combining marks down to base letters."""
    lowered = text.lower()
    if lowered.isascii():
        # ASCII has no combining marks and is NFKD-stable
        return lowered
    decomposed = unicodedata.normalize("NFKD", lowered)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    # decomposition can surface cased letters (compatibility forms like 𝕊 -> S)
    return stripped.lower()


def normalize_tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(fold(text))


def normalize_phrase(text: str) -> str:
    """Single-space-joined token form; the canonical lexicon key."""
    return " ".join(normalize_tokens(text))
