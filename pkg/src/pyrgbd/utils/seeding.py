"""
Seeding helpers for reproducible runs.

Sample-level randomness is derived from (global seed, sample id, epoch) so
augmentation draws do not depend on loading order or worker count.
"""

import hashlib
import random

import numpy as np
import torch

from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)


def stable_id_hash(sample_id: str) -> int:
    """Return a process-independent 32-bit hash of a sample id."""
    digest = hashlib.sha256(sample_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def sample_rng(seed: int, sample_id: str, epoch: int = 0) -> np.random.Generator:
    """
    Create the random stream of one sample.

    Args:
        seed: Global seed of the run
        sample_id: Identifier of the sample
        epoch: Epoch counter, so every epoch gets a fresh draw

    Returns:
        A numpy Generator seeded from (seed, id hash, epoch)
    """
    return np.random.default_rng([int(seed), stable_id_hash(sample_id), int(epoch)])


def seed_everything(seed: int, deterministic: bool = True) -> torch.Generator:
    """
    Seed python, numpy and torch and optionally force deterministic kernels.

    Args:
        seed: Global seed
        deterministic: Whether to request deterministic torch algorithms

    Returns:
        A torch Generator seeded with `seed`, for data loader shuffling
    """
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)

    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False

    logger.debug(f"Seeded run with seed={seed} (deterministic={deterministic})")

    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator
