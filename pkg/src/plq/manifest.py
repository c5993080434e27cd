"""Corpus data model and JSONL manifest I/O.

One record object per line, UTF-8. Unknown fields are preserved opaquely so
upstream tools can annotate freely; everything numeric is 64-bit float and
round-trips exactly through JSON.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from typing import Any, Iterable

from .textnorm import word_tokens


class ManifestError(Exception):
    """Raised for unreadable, malformed, or inconsistent manifests."""


_STR_FIELDS = ("audio_ref", "ground_truth", "proxy_transcript", "category", "split")
_FLOAT_LIST_FIELDS = (
    "word_probs",
    "token_probs",
    "lm_token_logprobs",
    "speech_embedding",
    "text_embedding",
)
_MATRIX_FIELDS = ("cepstra_real", "cepstra_synth")


@dataclass
class ExampleRecord:
    """One pseudo-labeled utterance with whatever upstream artifacts exist."""

    id: str
    pseudo_label: str = ""
    audio_ref: str | None = None
    duration_s: float | None = None
    ground_truth: str | None = None
    proxy_transcript: str | None = None
    word_probs: list[float] | None = None
    token_probs: list[float] | None = None
    word_boundaries: list[int] | None = None
    lm_token_logprobs: list[float] | None = None
    speech_embedding: list[float] | None = None
    text_embedding: list[float] | None = None
    pesq: float | None = None
    cepstra_real: list[list[float]] | None = None
    cepstra_synth: list[list[float]] | None = None
    category: str | None = None
    split: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            if f.name == "extra":
                continue
            value = getattr(self, f.name)
            if value is not None:
                out[f.name] = value
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "ExampleRecord":
        known = {f.name for f in fields(cls)} - {"extra"}
        kwargs: dict[str, Any] = {}
        extra: dict[str, Any] = {}
        for key, value in obj.items():
            if key in known:
                kwargs[key] = value
            else:
                extra[key] = value
        if "id" not in kwargs or not isinstance(kwargs["id"], str) or not kwargs["id"]:
            raise ManifestError("record is missing a nonempty string 'id'")
        rec = cls(extra=extra, **kwargs)
        rec._check_types()
        return rec

    def _check_types(self) -> None:
        if not isinstance(self.pseudo_label, str):
            raise ManifestError(f"record {self.id!r}: pseudo_label must be a string")
        for name in _STR_FIELDS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ManifestError(f"record {self.id!r}: {name} must be a string")
        if self.duration_s is not None:
            if not isinstance(self.duration_s, (int, float)) or self.duration_s < 0:
                raise ManifestError(f"record {self.id!r}: duration_s must be a nonnegative number")
        if self.pesq is not None and not isinstance(self.pesq, (int, float)):
            raise ManifestError(f"record {self.id!r}: pesq must be a number")
        for name in _FLOAT_LIST_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            if not isinstance(value, list) or any(
                not isinstance(v, (int, float)) or isinstance(v, bool) for v in value
            ):
                raise ManifestError(f"record {self.id!r}: {name} must be a list of numbers")
        if self.word_boundaries is not None:
            if not isinstance(self.word_boundaries, list) or any(
                not isinstance(v, int) or isinstance(v, bool) for v in self.word_boundaries
            ):
                raise ManifestError(f"record {self.id!r}: word_boundaries must be a list of integers")
        for name in _MATRIX_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            ok = isinstance(value, list) and all(
                isinstance(row, list)
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row)
                for row in value
            )
            if not ok or (value and len({len(row) for row in value}) != 1):
                raise ManifestError(
                    f"record {self.id!r}: {name} must be a rectangular matrix of numbers"
                )

    def invariant_problems(self) -> list[str]:
        """Structural consistency issues beyond plain field types."""
        problems: list[str] = []
        n_words = len(word_tokens(self.pseudo_label))
        if self.word_probs is not None and len(self.word_probs) != n_words:
            problems.append(
                f"word_probs has {len(self.word_probs)} entries but pseudo_label has {n_words} words"
            )
        if (self.token_probs is None) != (self.word_boundaries is None):
            problems.append("token_probs and word_boundaries must be present together")
        elif self.token_probs is not None and self.word_boundaries is not None:
            if len(self.token_probs) != len(self.word_boundaries):
                problems.append("token_probs and word_boundaries differ in length")
            else:
                b = self.word_boundaries
                if b and (b[0] != 0 or any(y < x or y - x > 1 for x, y in zip(b, b[1:]))):
                    problems.append("word_boundaries must be nondecreasing, start at 0, and skip no word")
                elif b and n_words and b[-1] != n_words - 1:
                    problems.append(
                        f"word_boundaries cover words 0..{b[-1]} but pseudo_label has {n_words} words"
                    )
        if self.speech_embedding is not None and self.text_embedding is not None:
            if len(self.speech_embedding) != len(self.text_embedding):
                problems.append("speech_embedding and text_embedding differ in dimension")
        if self.cepstra_real and self.cepstra_synth:
            if len(self.cepstra_real[0]) != len(self.cepstra_synth[0]):
                problems.append("cepstra_real and cepstra_synth differ in column dimension")
        return problems


@dataclass
class Manifest:
    records: list[ExampleRecord] = field(default_factory=list)
    declared_embedding_dim: int | None = None

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def by_id(self) -> dict[str, ExampleRecord]:
        return {r.id: r for r in self.records}

    def __len__(self) -> int:
        return len(self.records)


def load_manifest(path: str | os.PathLike) -> Manifest:
    """Read a JSONL manifest; records come back in file order."""
    records: list[ExampleRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: malformed JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}: line {lineno}: expected an object")
            try:
                rec = ExampleRecord.from_dict(obj)
            except ManifestError as exc:
                raise ManifestError(f"{path}: line {lineno}: {exc}") from exc
            if rec.id in seen:
                raise ManifestError(
                    f"{path}: line {lineno}: duplicate id {rec.id!r} (first seen on line {seen[rec.id]})"
                )
            seen[rec.id] = lineno
            records.append(rec)
    return Manifest(records=records)


def write_manifest(manifest: Manifest, path: str | os.PathLike) -> None:
    """Write JSONL; load_manifest(write_manifest(m)) round-trips all defined fields."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False))
            fh.write("\n")
    os.replace(tmp, path)


# Which record fields each metric needs before it can be computed.
METRIC_REQUIREMENTS: dict[str, tuple[tuple[str, ...], ...]] = {
    "entropy": (("word_probs",), ("token_probs", "word_boundaries")),
    "geomean": (("word_probs",), ("token_probs", "word_boundaries")),
    "nll": (("lm_token_logprobs",),),
    "pwer": (("proxy_transcript",),),
    "emb_sim": (("speech_embedding", "text_embedding"),),
    "pesq": (("pesq",),),
    "mcd": (("cepstra_real", "cepstra_synth"),),
}


@dataclass
class RecordValidation:
    id: str
    computable: list[str]
    missing: dict[str, str]  # metric -> description of absent fields
    problems: list[str]
    label_too_long: bool = False


@dataclass
class ValidationReport:
    records: list[RecordValidation]
    required_metrics: list[str]
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "required_metrics": self.required_metrics,
            "passed": self.passed,
            "records": [
                {
                    "id": r.id,
                    "computable": r.computable,
                    "missing": r.missing,
                    "problems": r.problems,
                    "label_too_long": r.label_too_long,
                }
                for r in self.records
            ],
        }


def validate(
    manifest: Manifest,
    required_metrics: Iterable[str] = (),
    max_label_length: int | None = None,
) -> ValidationReport:
    """Report, per record, which required metrics are computable from present fields."""
    required = sorted(set(required_metrics))
    unknown = [m for m in required if m not in METRIC_REQUIREMENTS]
    if unknown:
        raise ManifestError(f"unknown metric(s): {', '.join(unknown)}")

    entries: list[RecordValidation] = []
    passed = True
    for rec in manifest.records:
        problems = rec.invariant_problems()
        if manifest.declared_embedding_dim is not None:
            for name in ("speech_embedding", "text_embedding"):
                emb = getattr(rec, name)
                if emb is not None and len(emb) != manifest.declared_embedding_dim:
                    problems.append(
                        f"{name} has dimension {len(emb)}, expected {manifest.declared_embedding_dim}"
                    )
        computable: list[str] = []
        missing: dict[str, str] = {}
        for metric in required:
            alternatives = METRIC_REQUIREMENTS[metric]
            if any(all(getattr(rec, f) is not None for f in alt) for alt in alternatives):
                computable.append(metric)
            else:
                wanted = " or ".join("+".join(alt) for alt in alternatives)
                missing[metric] = f"requires {wanted}"
        too_long = (
            max_label_length is not None
            and len(word_tokens(rec.pseudo_label)) > max_label_length
        )
        if missing or problems:
            passed = False
        entries.append(
            RecordValidation(
                id=rec.id,
                computable=computable,
                missing=missing,
                problems=problems,
                label_too_long=bool(too_long),
            )
        )
    return ValidationReport(records=entries, required_metrics=required, passed=passed)
