import math
import random

import pytest

from plq.manifest import ExampleRecord, Manifest
from plq.metrics import MetricVector
from plq.selection import (
    SelectionError,
    SelectionPolicy,
    apply_selection,
    select,
    supervised_wer_filter,
)


def vectors(metric, scores):
    return [MetricVector(id=f"r{i:03d}", scores={metric: s}) for i, s in enumerate(scores)]


def test_keep_fraction_count():
    rng = random.Random(1)
    vecs = vectors("pwer", [rng.random() for _ in range(100)])
    result = select(vecs, SelectionPolicy(metric="pwer", keep_fraction=0.73))
    assert len(result.kept_ids) == 73
    assert len(result.dropped_ids) == 27


def test_threshold_inclusive_lower_is_better():
    vecs = vectors("pwer", [0.1, 0.79, 0.81])
    result = select(vecs, SelectionPolicy(metric="pwer", threshold=0.8))
    assert result.kept_ids == ["r000", "r001"]


def test_threshold_boundary_inclusive():
    vecs = vectors("pwer", [0.8])
    result = select(vecs, SelectionPolicy(metric="pwer", threshold=0.8))
    assert result.kept_ids == ["r000"]


def test_keep_fraction_one_keeps_all():
    vecs = vectors("geomean", [0.1, 0.9, 0.5])
    result = select(vecs, SelectionPolicy(metric="geomean", keep_fraction=1.0))
    assert result.kept_ids == ["r000", "r001", "r002"]
    assert result.dropped_ids == []


def test_orientation_higher_better():
    vecs = vectors("geomean", [0.2, 0.9, 0.5, 0.1])
    result = select(vecs, SelectionPolicy(metric="geomean", keep_fraction=0.5))
    assert result.kept_ids == ["r001", "r002"]


def test_orientation_lower_better():
    vecs = vectors("entropy", [0.2, 0.9, 0.5, 0.1])
    result = select(vecs, SelectionPolicy(metric="entropy", keep_fraction=0.5))
    assert result.kept_ids == ["r000", "r003"]


def test_ceil_rounding_never_zero():
    vecs = vectors("entropy", [1.0, 2.0, 3.0])
    result = select(vecs, SelectionPolicy(metric="entropy", keep_fraction=0.01))
    assert len(result.kept_ids) == 1


def test_partition_and_determinism():
    rng = random.Random(2)
    vecs = vectors("nll", [rng.random() for _ in range(50)])
    policy = SelectionPolicy(metric="nll", keep_fraction=0.4)
    a = select(vecs, policy)
    shuffled = list(vecs)
    rng.shuffle(shuffled)
    b = select(shuffled, policy)
    assert a.kept_ids == b.kept_ids and a.dropped_ids == b.dropped_ids
    assert set(a.kept_ids) | set(a.dropped_ids) == {v.id for v in vecs}
    assert not set(a.kept_ids) & set(a.dropped_ids)


def test_keep_fraction_monotone():
    rng = random.Random(3)
    vecs = vectors("pwer", [rng.random() for _ in range(37)])
    kept_prev: set[str] = set()
    for f in (0.1, 0.25, 0.5, 0.73, 1.0):
        kept = set(select(vecs, SelectionPolicy(metric="pwer", keep_fraction=f)).kept_ids)
        assert kept_prev <= kept
        kept_prev = kept


def test_monotone_transform_invariance():
    rng = random.Random(4)
    for _ in range(100):
        scores = [rng.uniform(-5, 5) for _ in range(rng.randint(1, 30))]
        f = rng.choice([0.25, 0.5, 0.73])
        base = select(vectors("emb_sim", scores),
                      SelectionPolicy(metric="emb_sim", keep_fraction=f))
        transformed = select(vectors("emb_sim", [math.exp(0.3 * s) + 2 for s in scores]),
                             SelectionPolicy(metric="emb_sim", keep_fraction=f))
        assert base.kept_ids == transformed.kept_ids


def test_boundary_quality_ordering():
    rng = random.Random(5)
    vecs = vectors("entropy", [rng.random() for _ in range(40)])
    result = select(vecs, SelectionPolicy(metric="entropy", keep_fraction=0.5))
    worst_kept = max(result.per_id_score[i] for i in result.kept_ids)
    best_dropped = min(result.per_id_score[i] for i in result.dropped_ids)
    assert worst_kept <= best_dropped


def test_missing_metric_lists_ids():
    vecs = vectors("pwer", [0.1, 0.2])
    vecs.append(MetricVector(id="zzz", scores={}))
    with pytest.raises(SelectionError, match="zzz"):
        select(vecs, SelectionPolicy(metric="pwer", keep_fraction=0.5))


def test_policy_validation():
    with pytest.raises(SelectionError):
        SelectionPolicy(metric="pwer")
    with pytest.raises(SelectionError):
        SelectionPolicy(metric="pwer", threshold=0.5, keep_fraction=0.5)
    with pytest.raises(SelectionError):
        SelectionPolicy(metric="pwer", keep_fraction=0.0)
    with pytest.raises(SelectionError):
        SelectionPolicy(metric="pwer", threshold=math.inf)


def manifest_with_truth(pairs):
    return Manifest(records=[
        ExampleRecord(id=f"u{i}", pseudo_label=hyp, ground_truth=ref)
        for i, (ref, hyp) in enumerate(pairs)
    ])


def test_supervised_all_perfect():
    m = manifest_with_truth([("a b", "a b"), ("c", "c")])
    result = supervised_wer_filter(m, 0.8)
    assert result.kept_ids == ["u0", "u1"]


def test_supervised_drops_above_lambda():
    m = manifest_with_truth([
        ("a b c d e f g h i j", "a b c d e f g h i x"),  # WER 0.1
        ("a b c d e f g h i j", "x x x x x x x x x j"),  # WER 0.9
    ])
    result = supervised_wer_filter(m, 0.8)
    assert result.kept_ids == ["u0"]
    assert result.dropped_ids == ["u1"]


def test_supervised_boundary_inclusive():
    m = manifest_with_truth([("a b c d e", "a x y z w")])  # WER exactly 0.8
    result = supervised_wer_filter(m, 0.8)
    assert result.kept_ids == ["u0"]


def test_supervised_undefined_dropped_with_diagnostic():
    m = manifest_with_truth([("", "x"), ("a", "a")])
    result = supervised_wer_filter(m, 0.8)
    assert result.kept_ids == ["u1"]
    assert "u0" in result.diagnostics


def test_supervised_missing_ground_truth():
    m = Manifest(records=[ExampleRecord(id="a", pseudo_label="x")])
    with pytest.raises(SelectionError, match="ground_truth"):
        supervised_wer_filter(m)


def test_apply_selection_order_preserved():
    m = Manifest(records=[ExampleRecord(id=i) for i in ("a", "b", "c")])
    result = select(
        [MetricVector(id=i, scores={"pwer": s}) for i, s in [("b", 0.1), ("a", 0.2), ("c", 0.9)]],
        SelectionPolicy(metric="pwer", keep_fraction=0.6),
    )
    assert sorted(result.kept_ids) == ["a", "b"]
    filtered = apply_selection(m, result)
    assert filtered.ids() == ["a", "b"]


def test_apply_selection_identity():
    m = Manifest(records=[ExampleRecord(id=i) for i in ("a", "b")])
    result = select(
        [MetricVector(id=i, scores={"pwer": 0.0}) for i in ("a", "b")],
        SelectionPolicy(metric="pwer", keep_fraction=1.0),
    )
    assert apply_selection(m, result).ids() == ["a", "b"]


def test_apply_selection_unknown_id():
    m = Manifest(records=[ExampleRecord(id="a")])
    result = select(
        [MetricVector(id="ghost", scores={"pwer": 0.0})],
        SelectionPolicy(metric="pwer", keep_fraction=1.0),
    )
    with pytest.raises(SelectionError, match="ghost"):
        apply_selection(m, result)
