"""Arabic-aware text normalization applied before error-rate computation.

Two evaluation modes matter in practice: the default (diacritics and
punctuation stripped) and "orthographic" (raw text, only whitespace
collapsed so tokenization stays stable).
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

# Harakat/tanween/shadda/sukun block plus dagger alef and tatweel.
_DIACRITICS_RE = re.compile("[\\u064B-\\u065F\\u0670\\u0640]")
_WHITESPACE_RE = re.compile(r"\s+")

# Arabic punctuation marks worth listing explicitly even though they are
# already in the Unicode P* categories.
_ARABIC_PUNCT = {"،", "؛", "؟"}

_ALEF_VARIANTS = {"أ": "ا", "إ": "ا", "آ": "ا", "ٱ": "ا"}
_ALEF_MAQSURA = {"ى": "ي"}


@dataclass(frozen=True)
class NormConfig:
    remove_diacritics: bool = True
    remove_punctuation: bool = True
    collapse_whitespace: bool = True
    unify_alef_variants: bool = False
    unify_ya_alefmaqsura: bool = False

    @classmethod
    def orthographic(cls) -> "NormConfig":
        """Raw-text mode: no normalization except whitespace collapsing."""
        return cls(
            remove_diacritics=False,
            remove_punctuation=False,
            collapse_whitespace=True,
            unify_alef_variants=False,
            unify_ya_alefmaqsura=False,
        )


def _is_punct(ch: str) -> bool:
    return ch in _ARABIC_PUNCT or unicodedata.category(ch).startswith("P")


def normalize(text: str, cfg: NormConfig = NormConfig()) -> str:
    """Apply the configured normalization steps, in a fixed order.

    Idempotent for every config: normalize(normalize(t)) == normalize(t).
    """
    if cfg.remove_diacritics:
        text = _DIACRITICS_RE.sub("", text)
    if cfg.remove_punctuation:
        text = "".join(ch for ch in text if not _is_punct(ch))
    if cfg.unify_alef_variants:
        for src, dst in _ALEF_VARIANTS.items():
            text = text.replace(src, dst)
    if cfg.unify_ya_alefmaqsura:
        for src, dst in _ALEF_MAQSURA.items():
            text = text.replace(src, dst)
    if cfg.collapse_whitespace:
        text = _WHITESPACE_RE.sub(" ", text).strip()
    return text


def word_tokens(text: str) -> list[str]:
    """Split on runs of Unicode whitespace; never yields empty tokens."""
    return text.split()


def char_tokens(text: str) -> list[str]:
    """Unicode scalar values with internal whitespace runs collapsed to one space.

    Spaces count as tokens, so character error rates penalize bad segmentation.
    """
    collapsed = _WHITESPACE_RE.sub(" ", text).strip()
    return list(collapsed)
