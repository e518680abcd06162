import numpy as np
import pytest

from pyrgbd.config.specs import SynthSpec
from pyrgbd.config.training import TrainConfig
from pyrgbd.pipeline.synth import gen_synth
from pyrgbd.tools.compare_initializations import SEEDS, compare_initializations
from pyrgbd.training.ablation import run_ablation_matrix
from pyrgbd.training.trainer import run_stage1, run_stage2

# Constants for test data
SMOKE_SAMPLES = 8
SMOKE_ITERATIONS = 300
SMOKE_IMAGE_SIZE = 64


@pytest.fixture(scope="module")
def smoke_samples():
    return gen_synth(SynthSpec(image_size=SMOKE_IMAGE_SIZE, count=SMOKE_SAMPLES, seed=0))


@pytest.fixture(scope="module")
def smoke_config():
    return TrainConfig(
        preset="tiny",
        batch_size=4,
        iterations=SMOKE_ITERATIONS,
        augment=False,
        log_every=100,
        seed=0,
    )


def _tail_mean(losses, count=10):
    return float(np.mean(losses[-count:]))


@pytest.mark.integration
def test_stage1_overfits_small_pool(smoke_samples, smoke_config):
    """Reconstruction loss halves within the smoke budget."""
    report = run_stage1(smoke_samples, smoke_config).report

    assert report.iterations_done == SMOKE_ITERATIONS
    assert _tail_mean(report.losses) < 0.5 * report.initial_loss


@pytest.mark.integration
def test_stage2_overfits_small_pool(smoke_samples, smoke_config):
    """Contour loss halves within the smoke budget on frozen stage-1 encoders."""
    stage1 = run_stage1(smoke_samples, smoke_config)
    report = run_stage2(smoke_samples, smoke_config, stage1.checkpoints).report

    assert report.iterations_done == SMOKE_ITERATIONS
    assert _tail_mean(report.losses) < 0.5 * report.initial_loss


@pytest.mark.integration
def test_pretext_initialization_beats_random(tmp_path):
    """Averaged over seeds, pretext-initialized training reaches a lower held-out MAE."""
    frame = compare_initializations(SEEDS, tmp_path)

    assert len(frame) == len(SEEDS) + 1
    mean = frame.iloc[-1]
    assert mean["seed"] == "mean"
    assert mean["mae_init_p2"] < mean["mae_random"]
    assert (tmp_path / "compare_initializations.csv").is_file()


@pytest.mark.integration
def test_full_ablation_sweep(tmp_path):
    """Every row of every table trains and is scored on a held-out set."""
    samples = gen_synth(SynthSpec(image_size=32, count=24, seed=1))
    config = TrainConfig(preset="tiny", batch_size=4, iterations=20, log_every=10)

    for table, rows in (("t2", 7), ("t3", 9), ("t5", 4)):
        frame = run_ablation_matrix(
            table,
            pretext_samples=samples,
            train_samples=samples[:18],
            config=config,
            test_samples=samples[18:],
            out_dir=tmp_path / table,
        )

        assert len(frame) == rows
        assert list(frame["cda_invocations"]) == list(frame["cda_count"])
        assert frame["mae"].between(0.0, 1.0).all()
