"""Token-level edit-distance alignment and error-rate computation.

Unit-cost Levenshtein with deterministic operation counts; error rates are
unclipped ratios (corpora with very bad hypotheses legitimately exceed 1.0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .textnorm import NormConfig, char_tokens, normalize, word_tokens


@dataclass(frozen=True)
class AlignmentCounts:
    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ref_len: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class ErrorRate:
    value: float
    ref_len: int
    defined: bool


def edit_align(ref: Sequence, hyp: Sequence) -> AlignmentCounts:
    """Minimal-distance alignment with deterministic counts.

    Ties are broken preferring the diagonal (hit/substitution), then
    deletion, then insertion, so counts never depend on input order quirks.
    """
    m, n = len(ref), len(hyp)
    # cell = (distance, subs, dels, ins, hits); two-row DP
    prev = [(j, 0, 0, j, 0) for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [(i, 0, i, 0, 0)]
        ri = ref[i - 1]
        for j in range(1, n + 1):
            d, s, dl, ins, h = prev[j - 1]
            if ri == hyp[j - 1]:
                best = (d, s, dl, ins, h + 1)
            else:
                best = (d + 1, s + 1, dl, ins, h)
            d, s, dl, ins, h = prev[j]
            if d + 1 < best[0]:
                best = (d + 1, s, dl + 1, ins, h)
            d, s, dl, ins, h = cur[j - 1]
            if d + 1 < best[0]:
                best = (d + 1, s, dl, ins + 1, h)
            cur.append(best)
        prev = cur
    d, s, dl, ins, h = prev[n]
    return AlignmentCounts(substitutions=s, deletions=dl, insertions=ins, hits=h, ref_len=m)


def _rate(counts: AlignmentCounts) -> ErrorRate:
    if counts.ref_len == 0:
        if counts.distance == 0:
            return ErrorRate(0.0, 0, True)
        return ErrorRate(math.inf, 0, False)
    return ErrorRate(counts.distance / counts.ref_len, counts.ref_len, True)


def wer(ref_text: str, hyp_text: str, cfg: NormConfig = NormConfig()) -> ErrorRate:
    """Word error rate after normalization; undefined when ref normalizes to empty."""
    ref = word_tokens(normalize(ref_text, cfg))
    hyp = word_tokens(normalize(hyp_text, cfg))
    return _rate(edit_align(ref, hyp))


def cer(ref_text: str, hyp_text: str, cfg: NormConfig = NormConfig()) -> ErrorRate:
    """Character error rate after normalization (spaces count as characters)."""
    ref = char_tokens(normalize(ref_text, cfg))
    hyp = char_tokens(normalize(hyp_text, cfg))
    return _rate(edit_align(ref, hyp))


@dataclass(frozen=True)
class CorpusErrorRate:
    value: float
    ref_len: int
    pairs: int
    skipped_undefined: int
    average: str  # "pooled" or "macro"


def corpus_error_rate(
    pairs: Iterable[tuple[str, str]],
    cfg: NormConfig = NormConfig(),
    unit: Literal["word", "char"] = "word",
    average: Literal["pooled", "macro"] = "pooled",
) -> CorpusErrorRate:
    """Aggregate rate over (ref, hyp) pairs; undefined pairs are skipped, not fatal.

    Pooled mode divides total errors by total reference length; macro averages
    the per-pair rates.
    """
    tokenize = word_tokens if unit == "word" else char_tokens
    total_err = 0
    total_ref = 0
    rates: list[float] = []
    skipped = 0
    for ref_text, hyp_text in pairs:
        counts = edit_align(
            tokenize(normalize(ref_text, cfg)), tokenize(normalize(hyp_text, cfg))
        )
        if counts.ref_len == 0 and counts.distance > 0:
            skipped += 1
            continue
        total_err += counts.distance
        total_ref += counts.ref_len
        rates.append(counts.distance / counts.ref_len if counts.ref_len else 0.0)
    if not rates:
        raise ValueError("no defined references in corpus")
    if average == "macro":
        value = sum(rates) / len(rates)
    else:
        value = total_err / total_ref if total_ref else 0.0
    return CorpusErrorRate(
        value=value,
        ref_len=total_ref,
        pairs=len(rates),
        skipped_undefined=skipped,
        average=average,
    )
