import shutil

import numpy as np
import pandas as pd
import pytest
import torch

from pyrgbd.config.specs import AblationConfig
from pyrgbd.evaluation.evaluator import (
    EvaluationError,
    dataset_name,
    evaluate_directories,
    evaluate_directory,
    evaluate_model,
    evaluate_predictions,
    predict_samples,
    resize_to,
    save_predictions,
)
from pyrgbd.evaluation.features import capture_intermediates, channel_mean_image, dump_features
from pyrgbd.models.sod import SodModel
from pyrgbd.pipeline.loading import read_gray

SPLIT = "train"
SITES = {f"cm{i}" for i in range(1, 6)} | {f"cl{i}" for i in range(1, 5)}


@pytest.fixture
def gt_dir(dataset_root):
    return dataset_root / SPLIT / "gt"


class TestInMemory:
    def test_predictions_match_sample_resolution(self, tiny_model, synth_samples):
        predictions = predict_samples(tiny_model, synth_samples, batch_size=4)

        assert sorted(predictions) == sorted(s.id for s in synth_samples)
        for values in predictions.values():
            assert values.shape == synth_samples[0].resolution
            assert 0.0 <= values.min() and values.max() <= 1.0

    def test_model_mode_is_restored(self, tiny_model, synth_samples):
        tiny_model.train()

        evaluate_model(tiny_model, synth_samples[:2])

        assert tiny_model.training

    def test_unpaired_keys(self, synth_samples):
        predictions = {s.id: s.gt for s in synth_samples}
        ground_truth = {s.id: s.gt for s in synth_samples[1:]}

        with pytest.raises(EvaluationError, match="without gt"):
            evaluate_predictions("toy", predictions, ground_truth)

    def test_nothing_to_evaluate(self):
        with pytest.raises(EvaluationError, match="Nothing"):
            evaluate_predictions("toy", {}, {})

    def test_invalid_prediction_is_wrapped(self, synth_samples):
        sample = synth_samples[0]
        with pytest.raises(EvaluationError, match="Cannot score"):
            evaluate_predictions("toy", {sample.id: sample.gt * 2.0}, {sample.id: sample.gt})

    def test_resize(self):
        small = np.full((8, 8), 0.25)

        resized = resize_to(small, (32, 32))

        assert resized.shape == (32, 32)
        assert np.allclose(resized, 0.25)
        assert resize_to(small, (8, 8)) is small


class TestDirectories:
    def test_gt_against_itself(self, gt_dir, synth_spec):
        report, curve = evaluate_directory(gt_dir, gt_dir)

        assert report.dataset == SPLIT
        assert report.count == synth_spec.count
        assert report.mae == 0.0
        assert report.s_measure == pytest.approx(1.0)
        assert len(curve.to_frame()) == 256

    def test_lower_resolution_predictions(self, synth_samples, synth_spec, gt_dir, tmp_path):
        predictions = {s.id: s.gt[::2, ::2] for s in synth_samples}
        save_predictions(predictions, tmp_path / "pred")

        report, _ = evaluate_directory(tmp_path / "pred", gt_dir)

        assert report.count == synth_spec.count
        assert report.mae < 0.2

    def test_unpaired_stems_are_listed(self, gt_dir, tmp_path):
        pred_dir = tmp_path / "pred"
        shutil.copytree(gt_dir, pred_dir)
        removed = sorted(pred_dir.glob("*.png"))[0]
        removed.unlink()

        with pytest.raises(EvaluationError, match=removed.stem):
            evaluate_directory(pred_dir, gt_dir)

    def test_missing_directory(self, gt_dir, tmp_path):
        with pytest.raises(EvaluationError, match="not found"):
            evaluate_directory(tmp_path / "nowhere", gt_dir)

    def test_tables_with_ave_metric(self, gt_dir, synth_spec, tmp_path):
        table = evaluate_directories(
            [(gt_dir, gt_dir), (gt_dir, gt_dir)], names=["a", "b"], out_dir=tmp_path
        )

        assert list(table["dataset"]) == ["a", "b", "ave-metric"]
        assert table["count"].iloc[-1] == 2 * synth_spec.count
        saved = pd.read_csv(tmp_path / "metrics.csv")
        assert list(saved.columns) == list(table.columns)
        assert (tmp_path / "pr_a.csv").is_file() and (tmp_path / "pr_b.csv").is_file()

    @pytest.mark.parametrize(
        "pairs, names, message",
        [([], None, "No"), ([("p", "g")], ["a", "b"], "names"), ([("p", "g"), ("p", "g")], ["a", "a"], "twice")],
    )
    def test_argument_errors(self, pairs, names, message, tmp_path, gt_dir):
        pairs = [(gt_dir, gt_dir) for _ in pairs]
        with pytest.raises(EvaluationError, match=message):
            evaluate_directories(pairs, names=names)

    def test_dataset_name(self, tmp_path):
        assert dataset_name(tmp_path / "NJU2K" / "gt") == "NJU2K"
        assert dataset_name(tmp_path / "masks") == "masks"


class TestFeatures:
    def test_every_site_is_captured(self, tiny_model, synth_samples):
        images = capture_intermediates(tiny_model, synth_samples[0])

        assert {key.split("_")[0] for key in images} == SITES
        assert "cm1_jc_ab" in images and "cl4_fused" in images
        for image in images.values():
            assert 0.0 <= image.min() and image.max() <= 1.0
        assert not tiny_model.capture

    def test_baseline_has_nothing_to_dump(self, tiny_config, synth_samples, tmp_path):
        model = SodModel(tiny_config.backbone(), AblationConfig.baseline())

        assert dump_features(model, synth_samples[0], tmp_path) == []

    def test_dump_writes_pngs(self, tiny_model, synth_samples, tmp_path):
        paths = dump_features(tiny_model, synth_samples[0], tmp_path)

        assert paths == sorted(paths)
        assert all(path.suffix == ".png" for path in paths)
        assert read_gray(paths[0]).ndim == 2

    def test_constant_channel_mean(self):
        assert not channel_mean_image(torch.ones(4, 5, 5)).any()
        scaled = channel_mean_image(torch.arange(8.0).reshape(2, 2, 2))
        assert scaled.min() == 0.0 and scaled.max() == 1.0
