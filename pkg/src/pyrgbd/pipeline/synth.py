"""
Synthetic RGB-D scene generator.

Each scene is a smooth colour gradient with noise, overlaid with one or more
filled shapes (ellipses, rectangles, polygons) whose colours stay away from
the background. Depth is a background gradient drawn from the background
range, with every shape filled by a constant value from the disjoint
foreground range, so depth alone separates salient pixels. The ground truth
is the union of the shape masks.

Samples are generated from per-index generators seeded by (base seed, index),
which keeps each scene independent of how many scenes are requested.
"""

from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray
from PIL import Image, ImageDraw

from pyrgbd.config.specs import SynthSpec
from pyrgbd.core.fields import ManifestFields
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils import get_logger

logger = get_logger(__name__)

SYNTH_GENERATOR = "pyrgbd.synth"
SHAPE_KINDS = ("ellipse", "rectangle", "polygon")
MIN_COLOUR_DISTANCE = 0.4
MAX_ATTEMPTS = 100


def sample_id(index: int) -> str:
    return f"synth_{index:05d}"


def _gradient(rng: np.random.Generator, size: int) -> NDArray:
    """Linear ramp in [0, 1] along a random direction."""
    theta = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    ramp = xx * np.cos(theta) + yy * np.sin(theta)
    ramp -= ramp.min()
    peak = ramp.max()
    return ramp / peak if peak > 0 else ramp


def _shape_mask(rng: np.random.Generator, size: int) -> NDArray[np.bool_]:
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)

    kind = SHAPE_KINDS[rng.integers(len(SHAPE_KINDS))]
    cx, cy = rng.uniform(0.2, 0.8, size=2) * size
    rx, ry = rng.uniform(0.1, 0.3, size=2) * size

    if kind == "ellipse":
        draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    elif kind == "rectangle":
        draw.rectangle([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    else:
        vertices = int(rng.integers(3, 7))
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=vertices))
        radii = rng.uniform(0.5, 1.0, size=vertices)
        points = [
            (cx + rx * r * np.cos(a), cy + ry * r * np.sin(a))
            for a, r in zip(angles, radii)
        ]
        draw.polygon(points, fill=255)

    return np.asarray(canvas) > 0


def _colour_away_from(rng: np.random.Generator, reference: NDArray) -> NDArray:
    for _ in range(MAX_ATTEMPTS):
        colour = rng.uniform(0.0, 1.0, size=3)
        if np.linalg.norm(colour - reference) >= MIN_COLOUR_DISTANCE:
            return colour
    # Opposite corner of the colour cube is always far enough
    return np.where(reference < 0.5, 1.0, 0.0)


def _generate_scene(spec: SynthSpec, rng: np.random.Generator, index: int) -> RgbdSample:
    size = spec.image_size

    for attempt in range(MAX_ATTEMPTS):
        start, stop = rng.uniform(0.0, 1.0, size=(2, 3))
        rgb = start + (stop - start) * _gradient(rng, size)[..., None]
        background_colour = rgb.reshape(-1, 3).mean(axis=0)

        near, far = rng.uniform(*spec.background_depth, size=2)
        depth = near + (far - near) * _gradient(rng, size)

        gt = np.zeros((size, size), dtype=bool)
        n_shapes = int(rng.integers(spec.shapes[0], spec.shapes[1] + 1))
        for _ in range(n_shapes):
            mask = _shape_mask(rng, size)
            rgb[mask] = _colour_away_from(rng, background_colour)
            depth[mask] = rng.uniform(*spec.foreground_depth)
            gt |= mask

        rgb += spec.noise * rng.standard_normal(rgb.shape)

        if gt.any() and not gt.all():
            return RgbdSample(
                id=sample_id(index),
                rgb=np.clip(rgb, 0.0, 1.0),
                depth=np.clip(depth, 0.0, 1.0),
                gt=gt.astype(np.float32),
                meta={"shapes": n_shapes},
            )
        logger.debug(f"Regenerating {sample_id(index)} (attempt {attempt + 1})")

    raise RuntimeError(f"Could not generate a valid scene for {sample_id(index)}")


def gen_synth(
    spec: SynthSpec, rng: Optional[np.random.Generator] = None
) -> List[RgbdSample]:
    """
    Generate a synthetic RGB-D saliency dataset.

    Args:
        spec: Generator parameters
        rng: Optional generator; when given, the base seed is drawn from it
            instead of taken from spec.seed

    Returns:
        spec.count samples with ids synth_00000, synth_00001, ...
    """
    base = spec.seed if rng is None else int(rng.integers(2**32))
    samples = [
        _generate_scene(spec, np.random.default_rng([base, index]), index)
        for index in range(spec.count)
    ]
    logger.info(
        f"Generated {len(samples)} synthetic scenes of {spec.image_size}x{spec.image_size} "
        f"(seed {base})"
    )
    return samples


def synth_manifest(spec: SynthSpec, samples: List[RgbdSample], split: str) -> Dict[str, Any]:
    """Manifest mapping echoing the generator spec; contains no timestamps."""
    fields = ManifestFields()
    return {
        fields.GENERATOR: SYNTH_GENERATOR,
        fields.SPLIT: split,
        fields.COUNT: len(samples),
        fields.SEED: spec.seed,
        fields.DEPTH_ENCODING: "png16",
        fields.SPEC: spec.model_dump(mode="json"),
        fields.IDS: [sample.id for sample in samples],
    }
