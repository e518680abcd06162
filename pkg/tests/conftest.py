from pathlib import Path

import pytest

from pyrgbd.config.specs import SynthSpec
from pyrgbd.config.training import TrainConfig
from pyrgbd.models.sod import SodModel
from pyrgbd.pipeline.loading import save_dataset
from pyrgbd.pipeline.synth import gen_synth, synth_manifest

# Constants for test data
TEST_IMAGE_SIZE = 32
TEST_SAMPLE_COUNT = 6
TEST_SPLIT = "train"


@pytest.fixture
def tiny_config():
    """Tiny backbone with a two-iteration budget on cpu."""
    return TrainConfig(preset="tiny", batch_size=2, iterations=2, log_every=1, seed=0)


@pytest.fixture
def synth_spec():
    """Small generator spec used across tests."""
    return SynthSpec(image_size=TEST_IMAGE_SIZE, count=TEST_SAMPLE_COUNT, seed=7)


@pytest.fixture
def synth_samples(synth_spec):
    """In-memory synthetic samples with ground truth."""
    return gen_synth(synth_spec)


@pytest.fixture
def dataset_root(tmp_path, synth_spec, synth_samples) -> Path:
    """Synthetic dataset written in the on-disk layout under tmp_path."""
    root = tmp_path / "data"
    save_dataset(
        synth_samples, root, TEST_SPLIT, synth_manifest(synth_spec, synth_samples, TEST_SPLIT)
    )
    return root


@pytest.fixture
def tiny_model(tiny_config):
    """Full-CDA saliency model on the tiny preset."""
    return SodModel(tiny_config.backbone(), tiny_config.ablation_config())


# Optionally mark integration tests
def pytest_configure(config):
    config.addinivalue_line("markers", "integration: mark slow end-to-end experiments")


# Skip integration tests by default
def pytest_addoption(parser):
    parser.addoption(
        "--run-integration",
        action="store_true",
        default=False,
        help="run slow integration experiments",
    )


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--run-integration"):
        skip_integration = pytest.mark.skip(
            reason="need --run-integration option to run"
        )
        for item in items:
            if "integration" in item.keywords:
                item.add_marker(skip_integration)
