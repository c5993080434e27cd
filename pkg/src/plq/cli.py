"""Command-line entry point: validate, score, select, eval-wer, eval-auc,
synth-bench, kd-loss.

Exit codes: 0 success, 1 usage error, 2 data/validation error. All outputs
are written atomically (temp file + rename) and sorted by id so reruns and
parallel scoring stay byte-identical.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

from . import __version__
from .align import corpus_error_rate
from .evaluation import (
    DEFAULT_TAUS,
    EvaluationError,
    effectiveness_csv,
    effectiveness_report,
    grouped_csv,
    grouped_error_report,
    synthesize_benchmark,
)
from .kd import DistributionSequence, KdError, KdWeights, kd_loss, kl_loss, pl_loss
from .manifest import (
    Manifest,
    ManifestError,
    load_manifest,
    validate,
    write_manifest,
)
from .metrics import METRIC_NAMES, MetricError, MetricVector, score_all
from .selection import (
    DEFAULT_KEEP_FRACTION,
    SelectionError,
    SelectionPolicy,
    apply_selection,
    select,
    supervised_wer_filter,
)
from .textnorm import NormConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_DEFAULT_JOBS = int(os.environ.get("PLQ_JOBS", "1"))


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2; we use 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _norm_config(args: argparse.Namespace) -> NormConfig:
    if args.orthographic:
        return NormConfig.orthographic()
    return NormConfig(
        remove_diacritics=not args.no_diacritic_removal,
        remove_punctuation=not args.no_punct_removal,
        collapse_whitespace=not args.no_collapse_whitespace,
        unify_alef_variants=args.unify_alef,
        unify_ya_alefmaqsura=args.unify_ya,
    )


def _add_norm_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("normalization")
    g.add_argument("--orthographic", action="store_true",
                   help="raw-text mode: no normalization except whitespace collapsing")
    g.add_argument("--no-diacritic-removal", action="store_true")
    g.add_argument("--no-punct-removal", action="store_true")
    g.add_argument("--no-collapse-whitespace", action="store_true")
    g.add_argument("--unify-alef", action="store_true")
    g.add_argument("--unify-ya", action="store_true")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _provenance(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {"toolkit_version": __version__, "config": cfg}


def _json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _parse_metrics(csv_names: str) -> list[str]:
    names = [m.strip() for m in csv_names.split(",") if m.strip()]
    bad = [m for m in names if m not in METRIC_NAMES]
    if bad:
        raise MetricError(f"unknown metric(s): {', '.join(bad)}")
    return names


def _ratio(value: float) -> float:
    """WER-type quantities: values above 1.5 are read as percentages."""
    return value / 100.0 if value > 1.5 else value


def _cmd_validate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    required = _parse_metrics(args.required_metrics) if args.required_metrics else []
    report = validate(manifest, required, max_label_length=args.max_label_length)
    payload = {**report.to_dict(), **_provenance(args)}
    _emit(_json(payload), args.output)
    return EXIT_OK if report.passed else EXIT_DATA


def _score_manifest(
    manifest: Manifest, cfg: NormConfig, metrics: Sequence[str], jobs: int
) -> list[MetricVector]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            vectors = list(pool.map(lambda r: score_all(r, cfg, metrics), manifest.records))
    else:
        vectors = [score_all(r, cfg, metrics) for r in manifest.records]
    return sorted(vectors, key=lambda v: v.id)


def _score_lines(vectors: Sequence[MetricVector]) -> str:
    lines = []
    for v in vectors:
        obj: dict[str, Any] = {"id": v.id}
        for name in METRIC_NAMES:
            if name in v.scores:
                obj[name] = v.scores[name]
        if v.diagnostics:
            obj["diagnostics"] = dict(sorted(v.diagnostics.items()))
        lines.append(json.dumps(obj, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def _load_scores(path: str) -> list[MetricVector]:
    vectors: list[MetricVector] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: malformed JSON: {exc}") from exc
            scores = {k: float(v) for k, v in obj.items() if k in METRIC_NAMES}
            vectors.append(MetricVector(id=obj["id"], scores=scores))
    return vectors


def _cmd_score(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    metrics = _parse_metrics(args.metrics)
    vectors = _score_manifest(manifest, _norm_config(args), metrics, args.jobs)
    _emit(_score_lines(vectors), args.output)
    return EXIT_OK


def _cmd_select(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _norm_config(args)
    if args.supervised_lambda is not None:
        result = supervised_wer_filter(manifest, _ratio(args.supervised_lambda), cfg)
    else:
        if not args.metric:
            raise SelectionError("--metric is required unless --supervised-lambda is given")
        if args.scores:
            vectors = _load_scores(args.scores)
        else:
            vectors = _score_manifest(manifest, cfg, [args.metric], args.jobs)
        if args.keep_fraction is not None:
            policy = SelectionPolicy(metric=args.metric, keep_fraction=args.keep_fraction)
        else:
            threshold = args.threshold
            if threshold is None:
                policy = SelectionPolicy(metric=args.metric, keep_fraction=DEFAULT_KEEP_FRACTION)
            else:
                if args.metric == "pwer":
                    threshold = _ratio(threshold)
                policy = SelectionPolicy(metric=args.metric, threshold=threshold)
        result = select(vectors, policy)
    filtered = apply_selection(manifest, result)
    write_manifest(filtered, args.output)
    if args.report:
        _atomic_write(args.report, _json({**result.to_dict(), **_provenance(args)}))
    print(
        f"kept {len(result.kept_ids)} / {len(result.kept_ids) + len(result.dropped_ids)} records",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_eval_wer(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _norm_config(args)
    missing = [r.id for r in manifest.records if r.ground_truth is None]
    if missing and len(missing) == len(manifest.records):
        raise EvaluationError("no record has ground_truth")
    pairs = [
        (r.ground_truth, r.pseudo_label) for r in manifest.records if r.ground_truth is not None
    ]
    overall = {
        unit: corpus_error_rate(pairs, cfg, unit=unit, average=args.average)
        for unit in ("word", "char")
    }
    grouped = grouped_error_report(manifest, args.group_by, cfg, top_k=args.top_k)
    payload = {
        "wer": overall["word"].value,
        "cer": overall["char"].value,
        "average": args.average,
        "pairs": overall["word"].pairs,
        "skipped_undefined": overall["word"].skipped_undefined,
        "skipped_no_ground_truth": len(missing),
        "groups": grouped,
        **_provenance(args),
    }
    _emit(_json(payload), args.output)
    if args.csv:
        _atomic_write(args.csv, grouped_csv(grouped))
    return EXIT_OK


def _cmd_eval_auc(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    vectors = _load_scores(args.scores)
    metrics = _parse_metrics(args.metrics)
    taus = [_ratio(float(t)) for t in args.taus.split(",") if t.strip()]
    report = effectiveness_report(manifest, vectors, metrics, taus, _norm_config(args))
    payload = {**report, **_provenance(args)}
    _emit(_json(payload), args.output)
    if args.csv:
        _atomic_write(args.csv, effectiveness_csv(report))
    return EXIT_OK


def _cmd_synth_bench(args: argparse.Namespace) -> int:
    rates = [float(r) for r in args.rates.split(",") if r.strip()]
    manifest = synthesize_benchmark(
        n=args.n,
        vocab_size=args.vocab_size,
        corruption_rates=rates,
        seed=args.seed,
        embedding_dim=args.embedding_dim,
    )
    write_manifest(manifest, args.output)
    return EXIT_OK


def _cmd_kd_loss(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as fh:
        obj = json.load(fh)
    seq = DistributionSequence(
        teacher_probs=obj["teacher_probs"],
        student_logprobs=obj["student_logprobs"],
        labels=obj["labels"],
    )
    w = obj.get("weights", {})
    weights = KdWeights(
        alpha_kl=float(w.get("alpha_kl", 0.8)),
        alpha_pl=float(w.get("alpha_pl", 1.0)),
        temperature=float(w.get("temperature", 1.0)),
    )
    payload = {
        "kl": kl_loss(seq, weights.temperature),
        "pl": pl_loss(seq),
        "kd": kd_loss(seq, weights),
    }
    _emit(_json(payload), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plq", description="Pseudo-label quality toolkit")
    parser.add_argument("--version", action="version", version=f"plq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a manifest against metric requirements")
    p.add_argument("manifest")
    p.add_argument("--required-metrics", default="",
                   help=f"comma-separated subset of: {','.join(METRIC_NAMES)}")
    p.add_argument("--max-label-length", type=int, default=225,
                   help="flag pseudo-labels longer than this many words")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("score", help="compute quality metrics into a JSONL score file")
    p.add_argument("manifest")
    p.add_argument("--metrics", default=",".join(METRIC_NAMES))
    p.add_argument("--jobs", type=int, default=_DEFAULT_JOBS)
    p.add_argument("-o", "--output", default=None)
    _add_norm_flags(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("select", help="filter a manifest by a selection policy")
    p.add_argument("manifest")
    p.add_argument("--metric", default=None)
    p.add_argument("--scores", default=None, help="precomputed score file (else scored in-process)")
    p.add_argument("--keep-fraction", type=float, default=None,
                   help=f"keep the best fraction (default {DEFAULT_KEEP_FRACTION})")
    p.add_argument("--threshold", type=float, default=None,
                   help="absolute cutoff; pwer values above 1.5 are read as percent")
    p.add_argument("--supervised-lambda", type=float, default=None,
                   help="keep records with WER(ground_truth, pseudo_label) <= lambda; "
                        "values above 1.5 are read as percent")
    p.add_argument("--jobs", type=int, default=_DEFAULT_JOBS)
    p.add_argument("-o", "--output", required=True, help="filtered manifest path")
    p.add_argument("--report", default=None, help="selection report JSON path")
    _add_norm_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("eval-wer", help="corpus and grouped WER/CER")
    p.add_argument("manifest")
    p.add_argument("--group-by", choices=("category", "split"), default="category")
    p.add_argument("--average", choices=("pooled", "macro"), default="pooled")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--csv", default=None)
    _add_norm_flags(p)
    p.set_defaults(func=_cmd_eval_wer)

    p = sub.add_parser("eval-auc", help="filter-effectiveness AUC matrix")
    p.add_argument("manifest")
    p.add_argument("--scores", required=True)
    p.add_argument("--metrics", default=",".join(METRIC_NAMES))
    p.add_argument("--taus", default=",".join(f"{t:g}" for t in DEFAULT_TAUS),
                   help="comma-separated WER thresholds; values above 1.5 are read as percent")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--csv", default=None)
    _add_norm_flags(p)
    p.set_defaults(func=_cmd_eval_auc)

    p = sub.add_parser("synth-bench", help="generate a deterministic synthetic manifest")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--rates", default="0,0.3,0.6,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embedding-dim", type=int, default=8)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_synth_bench)

    p = sub.add_parser("kd-loss", help="evaluate the distillation objective on a JSON input")
    p.add_argument("input", help='JSON file: {"teacher_probs", "student_logprobs", "labels", "weights"?}')
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_kd_loss)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ManifestError, MetricError, SelectionError, EvaluationError, KdError) as exc:
        print(f"plq: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, KeyError) as exc:
        print(f"plq: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
