"""
Batch entry point: `pyrgbd <command> [flags]`.

Commands:
    synth          generate a synthetic dataset split
    contour-gt     write depth-contour maps next to a split's depth maps
    pretrain1      stage-1 cross-modal auto-encoders
    pretrain2      stage-2 depth-contour estimation (needs stage-1 checkpoints)
    train          downstream saliency training
    predict        write saliency maps of a trained model for a split
    eval           score prediction directories against gt directories
    dump-features  write the CDA intermediates of one sample
    list           print backbone presets and ablation rows

Commands that write outputs refuse a non-empty output directory unless
--force is given, and echo their resolved config plus argv to config.yml.
Any failure prints one line `pyrgbd-error: <ExceptionClass>: <message>` to
stderr and exits with status 1.
"""

import argparse
import shutil
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from pyrgbd.config.specs import SynthSpec
from pyrgbd.config.training import TrainConfig
from pyrgbd.core.fields import LayoutFields
from pyrgbd.core.sample import RgbdSample
from pyrgbd.evaluation.evaluator import evaluate_directories, predict_samples, save_predictions
from pyrgbd.evaluation.features import dump_features
from pyrgbd.main import get_data, list_ablations, list_presets
from pyrgbd.models.sod import SodModel
from pyrgbd.models.transfer import StageTag
from pyrgbd.pipeline.loading import SplitLayout, read_gray, save_dataset, write_gray8
from pyrgbd.pipeline.morphology import StructuringElement, depth_contour_gt
from pyrgbd.pipeline.synth import gen_synth, synth_manifest
from pyrgbd.training.checkpoint import Checkpoint, load_checkpoint, read_checkpoint
from pyrgbd.training.trainer import (
    DIRECTION_TAGS,
    checkpoint_path,
    run_downstream,
    run_stage1,
    run_stage2,
)
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

ECHO_FILE = "config.yml"
INIT_FLAGS = {"none": (False, False), "p1": (True, False), "p2": (True, True)}


class CommandError(Exception):
    """Raised when a command's arguments or prerequisites are unusable."""

    pass


# Shared helpers


def _prepare_out(path: Path, force: bool) -> Path:
    """Create an output directory; a non-empty one needs force and is cleared."""
    if path.exists() and any(path.iterdir()):
        if not force:
            raise CommandError(f"Output directory {path} is not empty; pass --force to overwrite")
        logger.warning(f"Clearing existing output directory {path}")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo(path: Path, payload: Dict[str, Any], args: argparse.Namespace) -> None:
    payload = dict(payload)
    payload.update({"command": args.command, "argv": list(args.argv)})
    with open(path, "w") as f:
        yaml.safe_dump(payload, f, sort_keys=False)


def _resolve_config(args: argparse.Namespace, base: Optional[TrainConfig] = None) -> TrainConfig:
    """Config file (or base, or defaults), then --seed, then --set overrides."""
    if args.config is not None:
        config = TrainConfig.from_file(args.config)
    else:
        config = base or TrainConfig()
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.insert(0, f"seed={args.seed}")
    return config.with_overrides(overrides) if overrides else config


def _read_stage(directory: Optional[Path], stage: StageTag) -> Checkpoint:
    if directory is None:
        raise CommandError(f"Missing prerequisite: a {stage.value} checkpoint directory is required")
    path = checkpoint_path(directory, stage)
    if not path.is_file():
        raise CommandError(f"Missing prerequisite {stage.value} checkpoint: {path}")
    checkpoint = read_checkpoint(path)
    if checkpoint.stage != stage:
        raise CommandError(f"{path} holds a {checkpoint.stage.value} checkpoint, expected {stage.value}")
    return checkpoint


def _read_stage1(directory: Optional[Path]) -> Dict[StageTag, Checkpoint]:
    return {tag: _read_stage(directory, tag) for tag in DIRECTION_TAGS.values()}


def _load_sod_model(args: argparse.Namespace):
    """SodModel and config restored from a stage-2 or downstream checkpoint."""
    checkpoint = read_checkpoint(args.checkpoint)
    if checkpoint.stage not in (StageTag.STAGE2_CONTOUR, StageTag.DOWNSTREAM_SOD):
        raise CommandError(
            f"{args.checkpoint} is a {checkpoint.stage.value} checkpoint; "
            f"expected {StageTag.STAGE2_CONTOUR.value} or {StageTag.DOWNSTREAM_SOD.value}"
        )
    base = TrainConfig.from_dict(checkpoint.config) if checkpoint.config else None
    config = _resolve_config(args, base)
    model = SodModel(config.backbone(), config.ablation_config())
    load_checkpoint(args.checkpoint, model, fingerprint=config.fingerprint())
    return model.to(config.resolve_device()), config


# Commands


def cmd_synth(args: argparse.Namespace) -> None:
    spec = SynthSpec(
        image_size=args.image_size,
        count=args.count,
        noise=args.noise,
        seed=args.seed if args.seed is not None else 0,
    )
    out = Path(args.out)
    _prepare_out(out / args.split, args.force)
    samples = gen_synth(spec)
    save_dataset(samples, out, args.split, synth_manifest(spec, samples, args.split))
    _echo(out / ECHO_FILE, {"spec": spec.model_dump(mode="json"), "split": args.split}, args)


def cmd_contour_gt(args: argparse.Namespace) -> None:
    element = StructuringElement(m=args.m)
    layout = SplitLayout(args.data, args.split)
    if not layout.depth_dir.is_dir():
        raise CommandError(f"Missing depth directory: {layout.depth_dir}")
    depth_files = layout.index(layout.depth_dir, LayoutFields.MAP_SUFFIXES)
    if not depth_files:
        raise CommandError(f"No depth maps in {layout.depth_dir}")

    _prepare_out(layout.contour_dir, args.force)
    for stem, path in depth_files.items():
        write_gray8(layout.contour_dir / f"{stem}.png", depth_contour_gt(read_gray(path), element.m))
    _echo(layout.path / "contour-gt.yml", {"m": element.m, "count": len(depth_files)}, args)
    logger.info(f"Wrote {len(depth_files)} contour maps to {layout.contour_dir}")


def cmd_pretrain1(args: argparse.Namespace) -> None:
    config = _resolve_config(args)
    samples = get_data(args.data, args.split, config, require_gt=False)
    out = _prepare_out(Path(args.out), args.force)
    config.save(out / ECHO_FILE, {"command": args.command, "argv": list(args.argv)})
    run_stage1(samples, config, out)


def cmd_pretrain2(args: argparse.Namespace) -> None:
    config = _resolve_config(args)
    stage1 = None
    if not args.from_scratch:
        stage1 = _read_stage1(Path(args.stage1) if args.stage1 else None)
    samples = get_data(args.data, args.split, config, require_gt=False)
    out = _prepare_out(Path(args.out), args.force)
    config.save(out / ECHO_FILE, {"command": args.command, "argv": list(args.argv)})
    run_stage2(samples, config, stage1, out, from_scratch=args.from_scratch)


def cmd_train(args: argparse.Namespace) -> None:
    config = _resolve_config(args)
    if args.init is not None:
        init_p1, init_p2 = INIT_FLAGS[args.init]
        # the ablation row would override explicit init flags
        config = config.with_overrides(
            ["ablation=null", f"init_p1={str(init_p1).lower()}", f"init_p2={str(init_p2).lower()}"]
        )

    ablation = config.ablation_config()
    stage1 = stage2 = None
    if ablation.init_p2:
        stage2 = _read_stage(Path(args.stage2) if args.stage2 else None, StageTag.STAGE2_CONTOUR)
    elif ablation.init_p1:
        stage1 = _read_stage1(Path(args.stage1) if args.stage1 else None)

    samples = get_data(args.data, args.split, config, require_gt=True)
    val_samples = (
        get_data(args.data, args.val_split, config, require_gt=True) if args.val_split else None
    )
    out = _prepare_out(Path(args.out), args.force)
    config.save(out / ECHO_FILE, {"command": args.command, "argv": list(args.argv)})
    run_downstream(samples, config, stage1, stage2, out, val_samples=val_samples)


def cmd_predict(args: argparse.Namespace) -> None:
    model, config = _load_sod_model(args)
    samples = get_data(args.data, args.split, config, require_gt=False)
    out = _prepare_out(Path(args.out), args.force)
    config.save(out / ECHO_FILE, {"command": args.command, "argv": list(args.argv)})
    predictions = predict_samples(model, samples, config.resolve_device(), config.batch_size)
    save_predictions(predictions, out / args.split)


def cmd_eval(args: argparse.Namespace) -> None:
    if len(args.pred) != len(args.gt):
        raise CommandError(f"Got {len(args.pred)} --pred and {len(args.gt)} --gt directories")
    out = _prepare_out(Path(args.out), args.force)
    table = evaluate_directories(list(zip(args.pred, args.gt)), args.name, out)
    _echo(out / ECHO_FILE, {"pred": list(args.pred), "gt": list(args.gt)}, args)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def _pick_sample(samples: Sequence[RgbdSample], sample_id: Optional[str]) -> RgbdSample:
    if sample_id is None:
        return samples[0]
    for sample in samples:
        if sample.id == sample_id:
            return sample
    raise CommandError(f"Sample '{sample_id}' not found; first ids: {[s.id for s in samples[:5]]}")


def cmd_dump_features(args: argparse.Namespace) -> None:
    model, config = _load_sod_model(args)
    samples = get_data(args.data, args.split, config, require_gt=False)
    sample = _pick_sample(samples, args.sample)
    out = _prepare_out(Path(args.out), args.force)
    config.save(out / ECHO_FILE, {"command": args.command, "argv": list(args.argv)})
    dump_features(model, sample, out / sample.id, config.resolve_device())


def cmd_list(args: argparse.Namespace) -> None:
    list_presets()
    list_ablations()


# Parser


def _shared(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="flat YAML config file")
    parser.add_argument("--out", required=out_required, help="output directory")
    parser.add_argument("--seed", type=int, help="global seed (overrides the config)")
    parser.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="config override, repeatable"
    )


def _data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset root directory")
    parser.add_argument("--split", default="train", help="split name (default: train)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyrgbd", description="Self-supervised RGB-D salient object detection"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic dataset split")
    _shared(synth)
    synth.add_argument("--split", default="train")
    synth.add_argument("--count", type=int, default=200)
    synth.add_argument("--image-size", type=int, default=64)
    synth.add_argument("--noise", type=float, default=0.03)
    synth.set_defaults(func=cmd_synth)

    contour = commands.add_parser("contour-gt", help="write depth-contour maps")
    _shared(contour, out_required=False)
    _data(contour)
    contour.add_argument("-m", type=int, default=5, help="structuring element size (odd)")
    contour.set_defaults(func=cmd_contour_gt)

    pretrain1 = commands.add_parser("pretrain1", help="stage-1 cross-modal auto-encoders")
    _shared(pretrain1)
    _data(pretrain1)
    pretrain1.set_defaults(func=cmd_pretrain1)

    pretrain2 = commands.add_parser("pretrain2", help="stage-2 depth-contour estimation")
    _shared(pretrain2)
    _data(pretrain2)
    pretrain2.add_argument("--stage1", help="directory holding the stage-1 checkpoints")
    pretrain2.add_argument("--from-scratch", action="store_true", help="train without stage-1 weights")
    pretrain2.set_defaults(func=cmd_pretrain2)

    train = commands.add_parser("train", help="downstream saliency training")
    _shared(train)
    _data(train)
    train.add_argument("--init", choices=sorted(INIT_FLAGS), help="pretext initialization")
    train.add_argument("--stage1", help="directory holding the stage-1 checkpoints")
    train.add_argument("--stage2", help="directory holding the stage-2 checkpoint")
    train.add_argument("--val-split", help="held-out split (default: val_fraction of --split)")
    train.set_defaults(func=cmd_train)

    predict = commands.add_parser("predict", help="write saliency maps of a trained model")
    _shared(predict)
    _data(predict)
    predict.add_argument("--checkpoint", required=True, type=Path)
    predict.set_defaults(func=cmd_predict)

    evaluate = commands.add_parser("eval", help="score predictions against ground truth")
    _shared(evaluate)
    evaluate.add_argument("--pred", action="append", required=True, help="prediction directory, repeatable")
    evaluate.add_argument("--gt", action="append", required=True, help="gt directory, repeatable")
    evaluate.add_argument("--name", action="append", help="dataset name, repeatable")
    evaluate.set_defaults(func=cmd_eval)

    features = commands.add_parser("dump-features", help="write CDA intermediates of one sample")
    _shared(features)
    _data(features)
    features.add_argument("--checkpoint", required=True, type=Path)
    features.add_argument("--sample", help="sample id (default: first sample)")
    features.set_defaults(func=cmd_dump_features)

    listing = commands.add_parser("list", help="print presets and ablation rows")
    listing.set_defaults(func=cmd_list)

    return parser


def _flatten(message: str) -> str:
    return " ".join(str(message).split())


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.argv = argv

    try:
        args.func(args)
    except KeyboardInterrupt:
        print("pyrgbd-error: KeyboardInterrupt: interrupted", file=sys.stderr)
        return 1
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        print(f"pyrgbd-error: {type(e).__name__}: {_flatten(e)}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
