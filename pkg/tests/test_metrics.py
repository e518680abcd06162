import numpy as np
import pytest

from pyrgbd.core.fields import MetricFields
from pyrgbd.evaluation.metrics import (
    DatasetScorer,
    MetricInputError,
    MetricReport,
    ave_metric,
    check_pair,
    e_measure,
    mae,
    max_f,
    reports_frame,
    s_measure,
    score_dataset,
    weighted_f,
)
from pyrgbd.evaluation.oracle import e_measure_oracle, s_measure_oracle, weighted_f_oracle

# Constants for test data
ORACLE_PAIRS = 100
ORACLE_SIZE = 8


def _random_pairs(count=ORACLE_PAIRS, size=ORACLE_SIZE, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        gt = (rng.random((size, size)) < rng.uniform(0.1, 0.9)).astype(np.float64)
        if gt.all() or not gt.any():
            gt[0, 0] = 1.0 - gt[0, 0]
        pred = rng.random((size, size))
        pairs.append((pred, gt))
    return pairs


@pytest.fixture
def half_gt():
    gt = np.zeros((8, 8))
    gt[:, :4] = 1.0
    return gt


class TestOracles:
    """Vectorized metrics agree with the pixel-loop references."""

    def test_weighted_f(self):
        for pred, gt in _random_pairs():
            assert weighted_f(pred, gt) == pytest.approx(weighted_f_oracle(pred, gt), abs=1e-9)

    def test_s_measure(self):
        for pred, gt in _random_pairs(seed=1):
            assert s_measure(pred, gt) == pytest.approx(s_measure_oracle(pred, gt), abs=1e-9)

    def test_e_measure(self):
        for pred, gt in _random_pairs(seed=2):
            assert e_measure(pred, gt) == pytest.approx(e_measure_oracle(pred, gt), abs=1e-9)

    def test_quantized_predictions(self):
        """Ties on the threshold grid exercise the strict binarization rule."""
        for pred, gt in _random_pairs(count=20, seed=3):
            pred = np.round(pred * 255.0) / 255.0
            assert e_measure(pred, gt) == pytest.approx(e_measure_oracle(pred, gt), abs=1e-9)


class TestPerImage:
    def test_perfect_prediction(self, half_gt):
        assert mae(half_gt, half_gt) == 0.0
        assert max_f(half_gt, half_gt).value == pytest.approx(1.0)
        assert weighted_f(half_gt, half_gt) == pytest.approx(1.0)
        assert s_measure(half_gt, half_gt) == pytest.approx(1.0)
        assert e_measure(half_gt, half_gt) == pytest.approx(1.0)

    def test_mae(self, half_gt):
        assert mae(np.zeros_like(half_gt), half_gt) == 0.5

    def test_all_zero_prediction_has_no_recall(self, half_gt):
        result = max_f(np.zeros_like(half_gt), half_gt)

        assert result.value == 0.0
        assert not result.curve.recall.any()

    def test_strict_threshold(self, half_gt):
        result = max_f(np.full_like(half_gt, 0.5), half_gt)

        assert result.curve.recall[127] == pytest.approx(1.0)
        assert result.curve.recall[128] == 0.0
        assert result.value == pytest.approx(1.3 * 0.5 / (0.3 * 0.5 + 1.0))

    def test_empty_gt_is_degenerate(self):
        gt = np.zeros((6, 6))
        pred = np.full((6, 6), 0.2)

        result = max_f(pred, gt)
        assert result.value == 0.0 and result.curve.degenerate
        assert weighted_f(pred, gt) == 0.0
        assert s_measure(pred, gt) == pytest.approx(0.8)
        assert e_measure(pred, gt) == pytest.approx(0.8)

    def test_full_gt(self):
        gt = np.ones((6, 6))
        pred = np.full((6, 6), 0.7)

        assert s_measure(pred, gt) == pytest.approx(0.7)
        assert e_measure(pred, gt) == pytest.approx(0.7)
        assert weighted_f(pred, gt) == 0.0

    def test_scores_lie_in_unit_interval(self):
        for pred, gt in _random_pairs(count=20, seed=4):
            for metric in (mae, weighted_f, s_measure, e_measure):
                assert 0.0 <= metric(pred, gt) <= 1.0
            assert 0.0 <= max_f(pred, gt).value <= 1.0

    @pytest.mark.parametrize(
        "pred, gt, message",
        [
            (np.zeros((4, 4)), np.zeros((4, 5)), "differ in shape"),
            (np.zeros(4), np.zeros(4), "2-D"),
            (np.full((4, 4), 1.5), np.zeros((4, 4)), "lie in"),
            (np.full((4, 4), np.nan), np.zeros((4, 4)), "finite"),
            (np.zeros((4, 4)), np.full((4, 4), 0.5), "binary"),
        ],
    )
    def test_invalid_pairs(self, pred, gt, message):
        with pytest.raises(MetricInputError, match=message):
            check_pair(pred, gt)


class TestAggregation:
    def test_order_independent(self):
        pairs = {f"img{i}": pair for i, pair in enumerate(_random_pairs(count=5, seed=5))}
        forward = DatasetScorer("forward")
        backward = DatasetScorer("forward")
        for key in sorted(pairs):
            forward.add(key, *pairs[key])
        for key in sorted(pairs, reverse=True):
            backward.add(key, *pairs[key])

        assert forward.report() == backward.report()

    def test_max_f_is_max_of_mean_curve(self, half_gt):
        pairs = {"a": (half_gt, half_gt), "b": (np.full_like(half_gt, 0.5), half_gt)}

        report, curve = score_dataset("toy", pairs)

        assert report.max_f == pytest.approx(curve.f_measure.max())
        assert report.count == 2
        assert report.mae == pytest.approx(0.25)

    def test_duplicate_sample(self, half_gt):
        scorer = DatasetScorer("dup")
        scorer.add("a", half_gt, half_gt)
        with pytest.raises(MetricInputError, match="scored twice"):
            scorer.add("a", half_gt, half_gt)

    def test_degenerate_images_are_counted(self, half_gt):
        report, curve = score_dataset("toy", {"a": (half_gt, half_gt), "b": (half_gt, np.zeros_like(half_gt))})

        assert report.degenerate == 1
        assert curve.degenerate

    def test_ave_metric_is_size_weighted(self):
        small = MetricReport("a", 1, 0.5, 0.5, 0.5, 0.5, 0.2)
        large = MetricReport("b", 3, 0.9, 0.9, 0.9, 0.9, 0.6)

        combined = ave_metric([large, small])

        assert combined.dataset == MetricFields.AVE_METRIC
        assert combined.count == 4
        assert combined.mae == pytest.approx(0.5)
        assert combined.max_f == pytest.approx(0.8)

    def test_ave_metric_weights_by_count(self):
        reports = [MetricReport("a", 100, 0.8, 0.8, 0.8, 0.8, 0.8), MetricReport("b", 300, 0.9, 0.9, 0.9, 0.9, 0.9)]

        assert ave_metric(reports).s_measure == pytest.approx(0.875, abs=1e-12)

    def test_ave_metric_needs_reports(self):
        with pytest.raises(MetricInputError):
            ave_metric([])

    @pytest.mark.parametrize("kwargs", [{"count": 0}, {"mae": 1.5}, {"max_f": float("nan")}])
    def test_report_validation(self, kwargs):
        values = dict(dataset="x", count=1, max_f=0.5, weighted_f=0.5, s_measure=0.5, max_e=0.5, mae=0.1)
        values.update(kwargs)
        with pytest.raises(MetricInputError):
            MetricReport(**values)

    def test_reports_frame_columns(self):
        frame = reports_frame([MetricReport("a", 1, 0.5, 0.5, 0.5, 0.5, 0.2)])

        assert list(frame.columns) == ["dataset", "count", "max_f", "weighted_f", "s_measure", "max_e", "mae"]
