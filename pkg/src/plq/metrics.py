"""Unsupervised pseudo-label quality metrics.

Each metric has a fixed orientation; selection and ROC analysis consult
ORIENTATION rather than guessing from names. PESQ is ingested, never
computed: the score column comes from upstream tooling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .align import ErrorRate, wer
from .manifest import ExampleRecord
from .textnorm import NormConfig

# metric name -> higher_is_better
ORIENTATION: dict[str, bool] = {
    "entropy": False,
    "geomean": True,
    "nll": False,
    "pwer": False,
    "emb_sim": True,
    "pesq": True,
    "mcd": False,
}

METRIC_NAMES: tuple[str, ...] = tuple(ORIENTATION)

_MCD_CONST = 10.0 / math.log(10.0)


class MetricError(ValueError):
    """Invalid input to a metric computation."""


@dataclass
class MetricVector:
    id: str
    scores: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, str] = field(default_factory=dict)


def _check_probs(probs: Sequence[float], what: str) -> None:
    if len(probs) == 0:
        raise MetricError(f"{what}: empty probability list")
    for p in probs:
        if not (0.0 < p <= 1.0):
            raise MetricError(f"{what}: probability {p} outside (0, 1]")


def entropy_score(word_probs: Sequence[float]) -> float:
    """Sum of -p*log2(p) over per-word teacher probabilities.

    Deliberately not a distribution entropy: the probabilities are summed
    as-is, one term per word.
    """
    _check_probs(word_probs, "entropy_score")
    return -sum(p * math.log2(p) for p in word_probs)


def geomean_confidence(word_probs: Sequence[float]) -> float:
    """Geometric mean of per-word confidences, computed in log space."""
    _check_probs(word_probs, "geomean_confidence")
    return math.exp(sum(math.log(p) for p in word_probs) / len(word_probs))


def nll_score(lm_token_logprobs: Sequence[float], normalize_length: bool = False) -> float:
    """Negative sum of LM log-probabilities (natural log), optionally per-token."""
    if len(lm_token_logprobs) == 0:
        raise MetricError("nll_score: empty log-prob list")
    for lp in lm_token_logprobs:
        if lp > 0.0:
            raise MetricError(f"nll_score: positive log-probability {lp}")
    total = -sum(lm_token_logprobs)
    return total / len(lm_token_logprobs) if normalize_length else total


def pwer_score(record: ExampleRecord, cfg: NormConfig = NormConfig()) -> ErrorRate:
    """Proxy WER: agreement between the proxy transcript and the pseudo-label.

    The proxy transcript is the reference.
    """
    if record.proxy_transcript is None:
        raise MetricError(f"record {record.id!r}: proxy_transcript missing")
    return wer(record.proxy_transcript, record.pseudo_label, cfg)


def embedding_similarity(
    speech_emb: Sequence[float],
    text_emb: Sequence[float],
    mode: Literal["dot", "cosine"] = "dot",
) -> float:
    if len(speech_emb) != len(text_emb):
        raise MetricError(
            f"embedding dimensions differ: {len(speech_emb)} vs {len(text_emb)}"
        )
    a = np.asarray(speech_emb, dtype=float)
    b = np.asarray(text_emb, dtype=float)
    dot = float(a @ b)
    if mode == "dot":
        return dot
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise MetricError("cosine similarity undefined for zero vector")
    return dot / (na * nb)


def dtw_cost(local_cost: np.ndarray) -> tuple[float, int]:
    """Min total cost over monotone alignment paths, and the path length.

    Steps are (i-1,j-1), (i-1,j), (i,j-1); ties prefer the diagonal, then
    advancing the first axis.
    """
    m, n = local_cost.shape
    cost = np.full((m, n), np.inf)
    steps = np.zeros((m, n), dtype=int)
    for i in range(m):
        for j in range(n):
            if i == 0 and j == 0:
                prev, plen = 0.0, 0
            else:
                prev, plen = math.inf, 0
                if i > 0 and j > 0 and cost[i - 1, j - 1] < prev:
                    prev, plen = cost[i - 1, j - 1], steps[i - 1, j - 1]
                if i > 0 and cost[i - 1, j] < prev:
                    prev, plen = cost[i - 1, j], steps[i - 1, j]
                if j > 0 and cost[i, j - 1] < prev:
                    prev, plen = cost[i, j - 1], steps[i, j - 1]
            cost[i, j] = prev + local_cost[i, j]
            steps[i, j] = plen + 1
    return float(cost[m - 1, n - 1]), int(steps[m - 1, n - 1])


def mcd_score(
    cepstra_real: Sequence[Sequence[float]],
    cepstra_synth: Sequence[Sequence[float]],
    use_dtw: bool = True,
    skip_c0: bool = True,
) -> float:
    """Mel-cepstral distortion in dB, mean over the frame alignment.

    Frames are DTW-aligned under Euclidean local cost unless use_dtw is off,
    in which case frame counts must match and pairing is positional.
    """
    a = np.asarray(cepstra_real, dtype=float)
    b = np.asarray(cepstra_synth, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] == 0 or b.shape[0] == 0:
        raise MetricError("mcd_score: cepstra must be nonempty frame matrices")
    if a.shape[1] != b.shape[1]:
        raise MetricError(
            f"mcd_score: column dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    if skip_c0:
        if a.shape[1] < 2:
            raise MetricError("mcd_score: need at least 2 dimensions to skip c0")
        a = a[:, 1:]
        b = b[:, 1:]
    diff = a[:, None, :] - b[None, :, :]
    local = np.sqrt((diff**2).sum(axis=2))
    if use_dtw:
        total, steps = dtw_cost(local)
        mean_dist = total / steps
    else:
        if a.shape[0] != b.shape[0]:
            raise MetricError("mcd_score: frame counts must match when DTW is off")
        mean_dist = float(np.diagonal(local).mean())
    return _MCD_CONST * math.sqrt(2.0) * mean_dist


def word_probs_from_tokens(
    token_probs: Sequence[float], word_boundaries: Sequence[int]
) -> list[float]:
    """Collapse token probabilities to word probabilities by product."""
    if len(token_probs) != len(word_boundaries):
        raise MetricError("token_probs and word_boundaries differ in length")
    if len(token_probs) == 0:
        raise MetricError("empty token list")
    if word_boundaries[0] != 0 or any(
        y < x or y - x > 1 for x, y in zip(word_boundaries, word_boundaries[1:])
    ):
        raise MetricError("word_boundaries must be nondecreasing, start at 0, skip no word")
    out = [1.0] * (word_boundaries[-1] + 1)
    for p, w in zip(token_probs, word_boundaries):
        out[w] *= p
    return out


def score_all(
    record: ExampleRecord,
    cfg: NormConfig = NormConfig(),
    requested: Sequence[str] = METRIC_NAMES,
    emb_mode: Literal["dot", "cosine"] = "dot",
) -> MetricVector:
    """Compute every requested metric whose inputs are present.

    Missing inputs and invalid values become diagnostics, never exceptions:
    one bad record must not kill a corpus run.
    """
    vec = MetricVector(id=record.id)
    requested_set = set(requested)
    unknown = requested_set - set(METRIC_NAMES)
    if unknown:
        raise MetricError(f"unknown metric(s): {', '.join(sorted(unknown))}")

    word_probs = record.word_probs
    if word_probs is None and record.token_probs is not None and record.word_boundaries is not None:
        try:
            word_probs = word_probs_from_tokens(record.token_probs, record.word_boundaries)
        except MetricError as exc:
            word_probs = None
            for name in ("entropy", "geomean"):
                if name in requested_set:
                    vec.diagnostics[name] = str(exc)

    def compute(name: str, available: bool, fn) -> None:
        if name not in requested_set or name in vec.diagnostics:
            return
        if not available:
            vec.diagnostics[name] = "inputs missing"
            return
        try:
            value = fn()
        except MetricError as exc:
            vec.diagnostics[name] = str(exc)
            return
        if not math.isfinite(value):
            vec.diagnostics[name] = "non-finite result"
            return
        vec.scores[name] = value

    compute("entropy", word_probs is not None, lambda: entropy_score(word_probs))
    compute("geomean", word_probs is not None, lambda: geomean_confidence(word_probs))
    compute("nll", record.lm_token_logprobs is not None, lambda: nll_score(record.lm_token_logprobs))
    compute("pesq", record.pesq is not None, lambda: float(record.pesq))
    compute(
        "emb_sim",
        record.speech_embedding is not None and record.text_embedding is not None,
        lambda: embedding_similarity(record.speech_embedding, record.text_embedding, emb_mode),
    )
    compute(
        "mcd",
        record.cepstra_real is not None and record.cepstra_synth is not None,
        lambda: mcd_score(record.cepstra_real, record.cepstra_synth),
    )
    if "pwer" in requested_set:
        if record.proxy_transcript is None:
            vec.diagnostics["pwer"] = "inputs missing"
        else:
            rate = pwer_score(record, cfg)
            if rate.defined:
                vec.scores["pwer"] = rate.value
            else:
                vec.diagnostics["pwer"] = "undefined (empty proxy reference, nonempty pseudo-label)"
    return vec
