"""Filtering policies that turn per-record quality scores into training subsets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

from .align import wer
from .manifest import Manifest
from .metrics import ORIENTATION, MetricVector
from .textnorm import NormConfig

DEFAULT_KEEP_FRACTION = 0.73
DEFAULT_WER_LAMBDA = 0.8


class SelectionError(ValueError):
    """Policy cannot be applied to the given scores or manifest."""


@dataclass(frozen=True)
class SelectionPolicy:
    """Keep rule for one metric: absolute cutoff or best-fraction."""

    metric: str
    threshold: float | None = None
    keep_fraction: float | None = None

    def __post_init__(self) -> None:
        if (self.threshold is None) == (self.keep_fraction is None):
            raise SelectionError("exactly one of threshold / keep_fraction must be set")
        if self.threshold is not None and not math.isfinite(self.threshold):
            raise SelectionError("threshold must be finite")
        if self.keep_fraction is not None and not (0.0 < self.keep_fraction <= 1.0):
            raise SelectionError("keep_fraction must be in (0, 1]")

    def to_dict(self) -> dict[str, Any]:
        mode = "threshold" if self.threshold is not None else "keep_fraction"
        out: dict[str, Any] = {"metric": self.metric, "mode": mode}
        if self.threshold is not None:
            out["threshold"] = self.threshold
        else:
            out["keep_fraction"] = self.keep_fraction
        return out


@dataclass
class SelectionResult:
    kept_ids: list[str]
    dropped_ids: list[str]
    policy: SelectionPolicy
    per_id_score: dict[str, float]
    diagnostics: dict[str, str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "policy": self.policy.to_dict(),
            "kept_ids": self.kept_ids,
            "dropped_ids": self.dropped_ids,
            "diagnostics": self.diagnostics,
        }


def select(scores: Sequence[MetricVector], policy: SelectionPolicy) -> SelectionResult:
    """Partition scored records into kept and dropped per the policy.

    Deterministic regardless of input order: keep-fraction sorts best-first
    with ascending-id tie-break, and output id lists are sorted.
    """
    if policy.metric not in ORIENTATION:
        raise SelectionError(f"unknown metric {policy.metric!r}")
    missing = sorted(v.id for v in scores if policy.metric not in v.scores)
    if missing:
        raise SelectionError(
            f"metric {policy.metric!r} missing on {len(missing)} record(s): "
            + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    higher_better = ORIENTATION[policy.metric]
    per_id = {v.id: v.scores[policy.metric] for v in scores}

    if policy.threshold is not None:
        if higher_better:
            kept = {i for i, s in per_id.items() if s >= policy.threshold}
        else:
            kept = {i for i, s in per_id.items() if s <= policy.threshold}
    else:
        n_keep = math.ceil(policy.keep_fraction * len(per_id))
        ranked = sorted(
            per_id, key=lambda i: (-per_id[i] if higher_better else per_id[i], i)
        )
        kept = set(ranked[:n_keep])

    return SelectionResult(
        kept_ids=sorted(kept),
        dropped_ids=sorted(set(per_id) - kept),
        policy=policy,
        per_id_score=per_id,
        diagnostics={},
    )


def supervised_wer_filter(
    manifest: Manifest,
    wer_lambda: float = DEFAULT_WER_LAMBDA,
    cfg: NormConfig = NormConfig(),
) -> SelectionResult:
    """Supervised baseline: keep records whose WER against ground truth is <= lambda."""
    missing = sorted(r.id for r in manifest.records if r.ground_truth is None)
    if missing:
        raise SelectionError(
            f"ground_truth missing on {len(missing)} record(s): "
            + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    kept: list[str] = []
    dropped: list[str] = []
    per_id: dict[str, float] = {}
    diagnostics: dict[str, str] = {}
    for rec in manifest.records:
        rate = wer(rec.ground_truth, rec.pseudo_label, cfg)
        if not rate.defined:
            dropped.append(rec.id)
            diagnostics[rec.id] = "undefined WER (empty reference, nonempty pseudo-label)"
            continue
        per_id[rec.id] = rate.value
        (kept if rate.value <= wer_lambda else dropped).append(rec.id)
    policy = SelectionPolicy(metric="supervised_wer", threshold=wer_lambda)
    return SelectionResult(
        kept_ids=sorted(kept),
        dropped_ids=sorted(dropped),
        policy=policy,
        per_id_score=per_id,
        diagnostics=diagnostics,
    )


def apply_selection(manifest: Manifest, result: SelectionResult) -> Manifest:
    """Restrict a manifest to the kept ids, preserving original record order."""
    known = set(manifest.ids())
    unknown = [i for i in result.kept_ids if i not in known]
    if unknown:
        raise SelectionError(f"kept ids not in manifest: {', '.join(unknown[:10])}")
    keep = set(result.kept_ids)
    return Manifest(
        records=[r for r in manifest.records if r.id in keep],
        declared_embedding_dim=manifest.declared_embedding_dim,
    )
