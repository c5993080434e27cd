"""Filter-effectiveness analysis (ROC/AUC against WER-derived labels),
grouped error-rate reports, and a synthetic benchmark generator for
end-to-end testing without any real audio or models.
"""
from __future__ import annotations

import io
import random
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, Sequence

from .align import edit_align, wer
from .manifest import ExampleRecord, Manifest
from .metrics import ORIENTATION, MetricVector
from .textnorm import NormConfig, char_tokens, normalize, word_tokens

DEFAULT_TAUS = (0.2, 0.4, 0.8)


class EvaluationError(ValueError):
    """Labels or scores unusable for the requested analysis."""


@dataclass
class QualityLabeling:
    """Boolean low-quality labels: WER against ground truth above tau."""

    tau: float
    labels: dict[str, bool]
    excluded: list[str] = field(default_factory=list)


def label_quality(
    manifest: Manifest, tau: float, cfg: NormConfig = NormConfig()
) -> QualityLabeling:
    labels: dict[str, bool] = {}
    excluded: list[str] = []
    for rec in manifest.records:
        if rec.ground_truth is None:
            excluded.append(rec.id)
            continue
        rate = wer(rec.ground_truth, rec.pseudo_label, cfg)
        if not rate.defined:
            excluded.append(rec.id)
            continue
        labels[rec.id] = rate.value > tau
    if not labels:
        raise EvaluationError("no record has a usable ground_truth")
    return QualityLabeling(tau=tau, labels=labels, excluded=excluded)


@dataclass
class RocResult:
    points: list[tuple[float, float]]  # (fpr, tpr)
    auc: float
    metric: str | None
    tau: float


def roc_auc(
    scores: Mapping[str, float],
    higher_means_worse: bool,
    labels: QualityLabeling,
) -> RocResult:
    """ROC over distinct score thresholds; trapezoidal AUC.

    Tied scores are collapsed into one sweep step, so the trapezoid equals
    the pairwise statistic P(s+ > s-) + 0.5 P(s+ = s-) exactly.
    """
    items = [
        (s if higher_means_worse else -s, labels.labels[i])
        for i, s in scores.items()
        if i in labels.labels
    ]
    if not items:
        raise EvaluationError("no overlap between scores and labels")
    n_pos = sum(1 for _, lab in items if lab)
    n_neg = len(items) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("degenerate labels: need both classes")

    items.sort(key=lambda t: -t[0])
    points = [(0.0, 0.0)]
    auc = 0.0
    tp = fp = 0
    i = 0
    while i < len(items):
        j = i
        dtp = dfp = 0
        while j < len(items) and items[j][0] == items[i][0]:
            if items[j][1]:
                dtp += 1
            else:
                dfp += 1
            j += 1
        x0, y0 = points[-1]
        tp += dtp
        fp += dfp
        x1, y1 = fp / n_neg, tp / n_pos
        auc += (x1 - x0) * (y0 + y1) / 2.0
        points.append((x1, y1))
        i = j
    return RocResult(points=points, auc=auc, metric=None, tau=labels.tau)


def effectiveness_report(
    manifest: Manifest,
    scores: Sequence[MetricVector],
    metrics: Sequence[str],
    taus: Sequence[float] = DEFAULT_TAUS,
    cfg: NormConfig = NormConfig(),
) -> dict[str, Any]:
    """AUC matrix, metric x tau; undefined cells carry a reason, not a crash."""
    unknown = [m for m in metrics if m not in ORIENTATION]
    if unknown:
        raise EvaluationError(f"unknown metric(s): {', '.join(unknown)}")
    by_metric: dict[str, dict[str, float]] = {
        m: {v.id: v.scores[m] for v in scores if m in v.scores} for m in metrics
    }
    cells: dict[str, dict[str, Any]] = {m: {} for m in metrics}
    for tau in taus:
        labeling = label_quality(manifest, tau, cfg)
        for m in metrics:
            key = f"{tau:g}"
            try:
                result = roc_auc(by_metric[m], not ORIENTATION[m], labeling)
                cells[m][key] = result.auc
            except EvaluationError as exc:
                cells[m][key] = None
                cells[m][f"{key}_error"] = str(exc)
    return {
        "taus": [float(t) for t in taus],
        "metrics": list(metrics),
        "auc": cells,
    }


def effectiveness_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    taus = report["taus"]
    buf.write("metric," + ",".join(f"tau={t:g}" for t in taus) + "\n")
    for m in report["metrics"]:
        row = [m]
        for t in taus:
            v = report["auc"][m][f"{t:g}"]
            row.append("" if v is None else f"{v:.6f}")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def grouped_error_report(
    manifest: Manifest,
    group_field: Literal["category", "split"] = "category",
    cfg: NormConfig = NormConfig(),
    top_k: int | None = None,
) -> dict[str, Any]:
    """Pooled WER and CER per group plus an overall row.

    Groups sort by descending record count; records with no group value fall
    under "Unknown".
    """
    groups: dict[str, list[ExampleRecord]] = {}
    skipped: list[str] = []
    for rec in manifest.records:
        if rec.ground_truth is None:
            skipped.append(rec.id)
            continue
        key = getattr(rec, group_field) or "Unknown"
        groups.setdefault(key, []).append(rec)
    if not groups:
        raise EvaluationError("no record has ground_truth")

    def pooled(records: list[ExampleRecord]) -> dict[str, Any]:
        werr = wref = cerr = cref = 0
        undefined = 0
        for rec in records:
            ref_n = normalize(rec.ground_truth, cfg)
            hyp_n = normalize(rec.pseudo_label, cfg)
            wc = edit_align(word_tokens(ref_n), word_tokens(hyp_n))
            cc = edit_align(char_tokens(ref_n), char_tokens(hyp_n))
            if wc.ref_len == 0 and wc.distance > 0:
                undefined += 1
                continue
            werr += wc.distance
            wref += wc.ref_len
            cerr += cc.distance
            cref += cc.ref_len
        return {
            "count": len(records),
            "wer": werr / wref if wref else 0.0,
            "cer": cerr / cref if cref else 0.0,
            "word_errors": werr,
            "word_ref_len": wref,
            "char_errors": cerr,
            "char_ref_len": cref,
            "undefined_skipped": undefined,
        }

    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    if top_k is not None:
        ordered = ordered[:top_k]
    rows = [{"group": name, **pooled(records)} for name, records in ordered]
    all_records = [r for recs in groups.values() for r in recs]
    return {
        "group_field": group_field,
        "rows": rows,
        "overall": pooled(all_records),
        "skipped_no_ground_truth": skipped,
    }


def grouped_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write("group,count,wer,cer\n")
    for row in report["rows"]:
        buf.write(f"{row['group']},{row['count']},{row['wer']:.6f},{row['cer']:.6f}\n")
    o = report["overall"]
    buf.write(f"overall,{o['count']},{o['wer']:.6f},{o['cer']:.6f}\n")
    return buf.getvalue()


_CATEGORIES = ("najdi", "hijazi", "khaliji", "msa", "egyptian", "Unknown")


def synthesize_benchmark(
    n: int,
    vocab_size: int = 50,
    corruption_rates: Sequence[float] = (0.0, 0.3, 0.6, 1.0),
    seed: int = 0,
    embedding_dim: int = 8,
) -> Manifest:
    """Deterministic synthetic corpus whose quality signals track a known
    corruption rate, so filter metrics are statistically testable.

    Each record gets: random ground truth; a pseudo-label corrupted at a rate
    sampled from corruption_rates; word confidences anticorrelated with that
    rate; an independently (more lightly) corrupted proxy transcript; and
    embedding pairs whose dot product shrinks as corruption grows.
    """
    if n < 1:
        raise EvaluationError("n must be >= 1")
    if vocab_size < 2:
        raise EvaluationError("vocab_size must be >= 2")
    if not corruption_rates or any(not (0.0 <= r <= 1.0) for r in corruption_rates):
        raise EvaluationError("corruption_rates must be nonempty, each in [0, 1]")
    rng = random.Random(seed)

    def vocab_word(exclude: str | None = None) -> str:
        while True:
            w = f"w{rng.randrange(vocab_size)}"
            if w != exclude:
                return w

    def corrupt(words: list[str], rate: float) -> list[str]:
        out: list[str] = []
        for w in words:
            if rng.random() < rate:
                op = rng.choice(("sub", "del", "ins"))
                if op == "sub":
                    out.append(vocab_word(exclude=w))
                elif op == "ins":
                    out.append(w)
                    out.append(vocab_word())
                # del: drop the word
            else:
                out.append(w)
        if not out:
            out.append(vocab_word())
        return out

    records: list[ExampleRecord] = []
    for i in range(n):
        length = rng.randint(3, 12)
        truth = [vocab_word() for _ in range(length)]
        rate = rng.choice(list(corruption_rates))
        pseudo = corrupt(truth, rate)
        word_probs = [
            min(1.0, max(0.05, 0.95 - 0.75 * rate + rng.gauss(0.0, 0.05)))
            for _ in pseudo
        ]
        proxy = corrupt(truth, rate * 0.5)
        speech = [rng.gauss(0.0, 1.0) for _ in range(embedding_dim)]
        noise = [rng.gauss(0.0, 1.0) for _ in range(embedding_dim)]
        text = [(1.0 - rate) * s + rate * z for s, z in zip(speech, noise)]
        records.append(
            ExampleRecord(
                id=f"synth-{i:06d}",
                pseudo_label=" ".join(pseudo),
                ground_truth=" ".join(truth),
                proxy_transcript=" ".join(proxy),
                word_probs=word_probs,
                speech_embedding=speech,
                text_embedding=text,
                category=rng.choice(_CATEGORIES),
                split="train",
            )
        )
    return Manifest(records=records)
