import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_ap
from sgloc.retrieval_metrics import (
    AVG_THRESHOLDS,
    MetricWarning,
    MomentPrediction,
    SaliencyGroundTruth,
    decode_moments,
    highlight_metrics,
    moment_map,
    recall_at_1,
    temporal_iou,
)


def test_decode_examples():
    p = decode_moments([0.9, 0.8, 0.1, 0.7], 0.5)
    assert p.intervals == [(0, 2), (3, 4)] and p.scores == pytest.approx([0.85, 0.7])
    assert decode_moments([0.1, 0.2], 0.5).intervals == []
    assert decode_moments([0.6, 0.7, 0.9], 0.5).intervals == [(0, 3)]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=20))
def test_decode_reproduces_perfect_intervals(mask):
    scores = np.array(mask, dtype=float)
    truth, start = [], None
    for i, m in enumerate(mask + [False]):
        if m and start is None:
            start = i
        if not m and start is not None:
            truth.append((start, i))
            start = None
    assert sorted(decode_moments(scores, 0.5).intervals) == truth


def test_iou_examples():
    assert temporal_iou((0, 10), (5, 15)) == pytest.approx(1 / 3)
    assert temporal_iou((2, 4), (2, 4)) == 1.0
    assert temporal_iou((0, 1), (3, 4)) == 0.0
    with pytest.raises(ValueError):
        temporal_iou((2, 2), (0, 4))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 20), st.integers(1, 10), st.integers(0, 20), st.integers(1, 10))
def test_iou_symmetric(a, la, b, lb):
    x, y = (a, a + la), (b, b + lb)
    assert temporal_iou(x, y) == temporal_iou(y, x)
    assert temporal_iou(x, x) == 1.0 and 0.0 <= temporal_iou(x, y) <= 1.0


def test_recall_examples():
    pred = [MomentPrediction([(0, 10), (40, 50)], [0.9, 0.1])]
    gt = [[(4, 10)]]  # IoU 0.6 with the top prediction
    assert recall_at_1(pred, gt, 0.5) == 1.0
    assert recall_at_1(pred, gt, 0.7) == 0.0
    assert recall_at_1([MomentPrediction()], gt, 0.5) == 0.0


def test_map_examples():
    exact = [MomentPrediction([(3, 7)], [1.0])]
    for t in AVG_THRESHOLDS:
        assert moment_map(exact, [[(3, 7)]], t) == 1.0
    two = [MomentPrediction([(20, 30), (3, 7)], [0.9, 0.4])]
    assert moment_map(two, [[(3, 7)]], 0.5) == 0.5
    assert len(AVG_THRESHOLDS) == 10 and AVG_THRESHOLDS[0] == 0.5 and AVG_THRESHOLDS[-1] == 0.95


def test_map_excludes_queries_without_truth():
    with pytest.warns(MetricWarning):
        v = moment_map([MomentPrediction([(0, 1)], [1.0]), MomentPrediction()], [[(0, 1)], []], 0.5)
    assert v == 1.0


def _random_case(rng):
    def interval():
        a = int(rng.integers(0, 12))
        return (a, a + int(rng.integers(1, 8)))
    n_pred, n_gt = int(rng.integers(0, 6)), int(rng.integers(1, 4))
    intervals = [interval() for _ in range(n_pred)]
    scores = [float(np.round(rng.uniform(), 1)) for _ in range(n_pred)]
    return intervals, scores, [interval() for _ in range(n_gt)]


def test_map_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        intervals, scores, gts = _random_case(rng)
        t = float(rng.choice([0.3, 0.5, 0.75]))
        got = moment_map([MomentPrediction(intervals, scores)], [gts], t)
        assert abs(got - brute_force_ap(intervals, scores, gts, t)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_recall_monotone_in_threshold_and_map_rank_invariant(seed):
    rng = np.random.default_rng(seed)
    cases = [_random_case(rng) for _ in range(4)]
    preds = [MomentPrediction(i, s) for i, s, _ in cases]
    gts = [g for _, _, g in cases]
    assert recall_at_1(preds, gts, 0.7) <= recall_at_1(preds, gts, 0.5)
    squashed = [MomentPrediction(p.intervals, [np.exp(3 * s) - 7 for s in p.scores]) for p in preds]
    assert moment_map(squashed, gts, AVG_THRESHOLDS) == moment_map(preds, gts, AVG_THRESHOLDS)


def test_highlight_examples():
    truth = SaliencyGroundTruth((4, 0, 4))
    m, hit = highlight_metrics([[0.9, 0.1, 0.5]], [truth])
    assert hit == 1.0 and m == 1.0
    m, hit = highlight_metrics([[0.1, 0.9, 0.5]], [truth])
    assert hit == 0.0 and m == pytest.approx((1 / 2 + 2 / 3) / 2)
    assert highlight_metrics([[0.3, 0.2]], [SaliencyGroundTruth((4, 4))]) == (1.0, 1.0)
    with pytest.warns(MetricWarning):
        assert highlight_metrics([[0.3, 0.2]], [SaliencyGroundTruth((1, 2))]) == (0.0, 0.0)
    with pytest.raises(ValueError):
        SaliencyGroundTruth((5, 1))


def test_highlight_matches_direct_oracle():
    rng = np.random.default_rng(1)
    for _ in range(300):
        ratings = rng.integers(0, 5, 6)
        if not (ratings >= 4).any():
            ratings[rng.integers(6)] = 4
        scores = np.round(rng.uniform(size=6), 1)
        order = sorted(range(6), key=lambda i: (-scores[i], i))
        rel = [ratings[i] >= 4 for i in order]
        oracle = sum(sum(rel[:k + 1]) / (k + 1) for k in range(6) if rel[k]) / sum(rel)
        m, hit = highlight_metrics([scores], [SaliencyGroundTruth(tuple(ratings))])
        assert abs(m - oracle) <= 1e-12 and hit == float(rel[0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_highlight_invariant_to_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=8)
    truth = SaliencyGroundTruth(tuple(int(r) for r in np.r_[4, rng.integers(0, 5, 7)]))
    assert highlight_metrics([scores], [truth]) == highlight_metrics([np.tanh(scores) * 5 + 1], [truth])
