"""Distillation objective arithmetic over supplied teacher/student distributions.

No training loop lives here: this is desk-scale verification of the loss a
trainer would optimize. KL direction is KL(teacher || student); reduction is
the mean over positions so the loss is length-invariant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ROW_SUM_TOL = 1e-9
_LSE_TOL = 1e-6


class KdError(ValueError):
    """Teacher/student matrices violate their distribution invariants."""


@dataclass(frozen=True)
class KdWeights:
    alpha_kl: float = 0.8
    alpha_pl: float = 1.0
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise KdError("temperature must be positive")


@dataclass
class DistributionSequence:
    """Per-position teacher probabilities, student log-probabilities, and
    pseudo-label token indices, all over the same vocabulary."""

    teacher_probs: np.ndarray  # (T, V), rows sum to 1
    student_logprobs: np.ndarray  # (T, V), rows log-sum-exp to 0
    labels: np.ndarray  # (T,), indices into V

    def __post_init__(self) -> None:
        self.teacher_probs = np.asarray(self.teacher_probs, dtype=float)
        self.student_logprobs = np.asarray(self.student_logprobs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        t = self.teacher_probs
        s = self.student_logprobs
        if t.ndim != 2 or s.shape != t.shape or t.shape[0] == 0:
            raise KdError("teacher and student must be nonempty matrices of equal shape")
        if self.labels.shape != (t.shape[0],):
            raise KdError("labels must have one entry per position")
        if np.any(t < 0):
            raise KdError("teacher probabilities must be nonnegative")
        if np.max(np.abs(t.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
            raise KdError("teacher rows must sum to 1")
        lse = np.log(np.exp(s - s.max(axis=1, keepdims=True)).sum(axis=1)) + s.max(axis=1)
        if np.max(np.abs(lse)) > _LSE_TOL:
            raise KdError("student rows must log-sum-exp to 0")
        if np.any(self.labels < 0) or np.any(self.labels >= t.shape[1]):
            raise KdError("label index out of range")


def _log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def kl_loss(seq: DistributionSequence, temperature: float = 1.0) -> float:
    """Mean per-position KL(teacher || student), optionally temperature-softened.

    Softening raises teacher probabilities to 1/T and renormalizes, and
    rescales student log-probabilities by 1/T before renormalizing; T=1 is
    the raw distributions. Zero-probability teacher entries contribute 0.
    """
    if temperature <= 0:
        raise KdError("temperature must be positive")
    p = seq.teacher_probs
    s = seq.student_logprobs
    if temperature != 1.0:
        with np.errstate(divide="ignore"):
            logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)
        p = np.exp(_log_softmax(logp / temperature))
        s = _log_softmax(s / temperature)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(np.where(p > 0, p, 1.0)) - s), 0.0)
    return float(terms.sum(axis=1).mean())


def pl_loss(seq: DistributionSequence) -> float:
    """Mean cross-entropy of the student against the pseudo-label tokens."""
    picked = seq.student_logprobs[np.arange(len(seq.labels)), seq.labels]
    return float(-picked.mean())


def kd_loss(seq: DistributionSequence, weights: KdWeights = KdWeights()) -> float:
    """Weighted sum of the KL and pseudo-label terms."""
    return weights.alpha_kl * kl_loss(seq, weights.temperature) + weights.alpha_pl * pl_loss(seq)
