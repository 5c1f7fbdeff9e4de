"""Command-line entry point: ``object-saliency <subcommand> ...``."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigManager, SettingsManager
from .dissimilarity import AblationFlags, DissimilarityExtractor
from .tensor_core import FeatureMap
from .readout import fit_center_bias, average_ground_truth, run_gradient_suite, LOSS_KINDS
from .metrics import evaluate
from .harness import (
    DetectionSource, ExperimentRunner, DETECTION_MODES, TRAIN_MODES,
    synth_corpus, save_corpus, load_corpus, load_scene, load_feature_tensor, load_detections,
    save_feature_tensor, save_saliency_map, load_saliency_map, save_checkpoint, load_checkpoint,
    write_report, write_experiment, format_report_table, format_experiment_table,
    format_key_values, format_float, report_key_values, write_text_atomic, save_preview,
    filter_detections,
    run_distance_ablation,
)
from .performance.monitor import global_monitor
from .error_handling.handlers import global_error_handler, handle_errors, exit_code_for, EXIT_OK
from .error_handling.exceptions import UsageError, FileSystemError, NumericalError
from .error_handling.validators import InputValidator

logger = logging.getLogger(__name__)

PROG = "object-saliency"


class UsageArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}", subcommand=self.prog)


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON configuration file (created with defaults if missing)")
    parser.add_argument("--verbose", "-v", action="count", default=0,
                        help="Log progress (-v) or everything (-vv)")
    parser.add_argument("--profile", action="store_true",
                        help="Print timing and memory statistics at the end")


def _add_input_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--flags", default="S+A", help="Extra channels, e.g. S+A, O, none")
    parser.add_argument("--detections", choices=DETECTION_MODES, default=None,
                        help="Detection source (default from configuration)")
    parser.add_argument("--distance", choices=("cosine", "svcca"), default=None,
                        help="Object similarity backend")
    parser.add_argument("--seed", type=int, default=0, help="Seed for random detections")


def _add_training_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", type=float, help="Learning rate")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--loss", choices=LOSS_KINDS)
    parser.add_argument("--train-seed", type=int, help="Shuffling seed")
    parser.add_argument("--center-bias", action="store_true", help="Add the prior fitted on training fixations")
    parser.add_argument("--smooth-sigma", type=float, help="Gaussian smoothing of the logits")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageArgumentParser(prog=PROG, description="Object-dissimilarity saliency prediction toolkit")
    subparsers = parser.add_subparsers(dest="command", metavar="subcommand")
    subparsers.required = True

    p = subparsers.add_parser("synth", help="Write a synthetic corpus")
    _add_common_flags(p)
    p.add_argument("--n", type=int, required=True, help="Number of scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="Corpus directory")
    p.add_argument("--center-fraction", type=float, help="Ground-truth mass on the center prior")

    p = subparsers.add_parser("dissim", help="Write the appearance and size channels of one scene")
    _add_common_flags(p)
    p.add_argument("--scene", help="Scene directory")
    p.add_argument("--features", help="FTN1 global feature map")
    p.add_argument("--boxes", help="Detection text file")
    p.add_argument("--image-width", type=int)
    p.add_argument("--image-height", type=int)
    p.add_argument("--threshold", type=float, help="Confidence threshold (default from configuration)")
    p.add_argument("--distance", choices=("cosine", "svcca"), default=None)
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--preview", action="store_true", help="Also write PNG previews")

    p = subparsers.add_parser("train", help="Train a readout on a corpus and write a checkpoint")
    _add_common_flags(p)
    _add_input_flags(p)
    _add_training_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="Checkpoint path (default <corpus>/model.rdm)")
    p.add_argument("--init", help="Checkpoint to fine-tune from")

    p = subparsers.add_parser("predict", help="Write predicted saliency maps")
    _add_common_flags(p)
    _add_input_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="all")
    p.add_argument("--out", required=True, help="Directory for <scene_id>.ftn maps")
    p.add_argument("--preview", action="store_true", help="Also write <scene_id>.png heatmaps")

    p = subparsers.add_parser("eval", help="Evaluate predictions against ground truth")
    _add_common_flags(p)
    _add_input_flags(p)
    p.add_argument("--corpus", required=True)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--predictions", help="Directory of <scene_id>.ftn saliency maps")
    source.add_argument("--checkpoint", help="Predict with this checkpoint")
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--out", help="Text table path")
    p.add_argument("--values", help="key=value report path")

    p = subparsers.add_parser("ablate", help="Channel, post-processing or distance ablation")
    _add_common_flags(p)
    _add_training_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=("channels", "postprocessing", "distance"), default="channels")
    p.add_argument("--grid", nargs="+", help="Flag subsets to train, e.g. S A S+A (default: all)")
    p.add_argument("--detections", choices=DETECTION_MODES, default=None)
    p.add_argument("--distance", choices=("cosine", "svcca"), default=None)
    p.add_argument("--out", help="Text table path")
    p.add_argument("--values", help="key=value path")

    p = subparsers.add_parser("robust", help="Train with one detection source, test with another")
    _add_common_flags(p)
    _add_training_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-mode", choices=TRAIN_MODES)
    p.add_argument("--test-mode", choices=DETECTION_MODES)
    p.add_argument("--flags", default="S+A")
    p.add_argument("--distance", choices=("cosine", "svcca"), default=None)
    p.add_argument("--seed", type=int, default=0, help="Seed for random detections")
    p.add_argument("--out", help="Text table path")
    p.add_argument("--values", help="key=value path")

    p = subparsers.add_parser("gradcheck", help="Compare analytic and finite-difference gradients")
    _add_common_flags(p)
    p.add_argument("--models", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", dest="grad_loss", choices=LOSS_KINDS + ("both",), default="both")
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = subparsers.add_parser("fitcb", help="Fit the center-bias prior to training fixations")
    _add_common_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="train")
    p.add_argument("--out", required=True, help="key=value output path")
    p.add_argument("--preview", help="PNG of the average ground-truth map")

    return parser


def _settings(args) -> SettingsManager:
    settings = SettingsManager(ConfigManager(args.config))
    if getattr(args, "distance", None):
        settings.dissimilarity = replace(settings.dissimilarity, distance=args.distance)
    if getattr(args, "center_bias", False):
        settings.readout = replace(settings.readout, center_bias=True)
    if getattr(args, "smooth_sigma", None) is not None:
        InputValidator.validate_config_value("smooth_sigma", args.smooth_sigma, (int, float), 0)
        settings.readout = replace(settings.readout, smooth_sigma=args.smooth_sigma)
    overrides = {name: getattr(args, flag) for flag, name in
                 (("epochs", "epochs"), ("lr", "learning_rate"), ("batch_size", "batch_size"),
                  ("loss", "loss"), ("train_seed", "seed"))
                 if getattr(args, flag, None) is not None}
    if overrides:
        settings.training = replace(settings.training, **overrides)
    return settings


def _runner(args, settings: SettingsManager) -> ExperimentRunner:
    corpus = load_corpus(args.corpus)
    return ExperimentRunner(corpus, experiment=settings.experiments,
                            dissimilarity=settings.dissimilarity, readout=settings.readout,
                            evaluation=settings.evaluation,
                            confidence_threshold=settings.confidence_threshold)


def _source(args, settings: SettingsManager) -> DetectionSource:
    return DetectionSource(args.detections or settings.experiments.detection_source, args.seed)


@handle_errors(subcommand="synth")
def cmd_synth(args, settings: SettingsManager) -> int:
    spec = settings.synth
    if args.center_fraction is not None:
        spec = replace(spec, center_fraction=args.center_fraction)
    save_corpus(synth_corpus(args.n, seed=args.seed, spec=spec), args.out)
    print(f"Wrote {args.n} scene(s) to {args.out}")
    return EXIT_OK


@handle_errors(subcommand="dissim")
def cmd_dissim(args, settings: SettingsManager) -> int:
    threshold = settings.confidence_threshold if args.threshold is None else args.threshold
    if args.scene:
        scene = load_scene(args.scene)
        features, detections = scene.features, scene.detections
        width, height = scene.image_width, scene.image_height
        object_features = scene.object_features
        detector_w, detector_h = scene.detector_width, scene.detector_height
    elif args.features and args.boxes and args.image_width and args.image_height:
        features = load_feature_tensor(InputValidator.validate_input_file(args.features))
        detections = load_detections(InputValidator.validate_input_file(args.boxes),
                                     confidence_threshold=None)
        width, height = args.image_width, args.image_height
        object_features, detector_w, detector_h = None, None, None
    else:
        raise UsageError("dissim needs --scene, or --features, --boxes, --image-width and --image-height",
                         subcommand="dissim")

    kept = filter_detections(detections, threshold)
    channels = DissimilarityExtractor(settings.dissimilarity).extract(
        features, kept, width, height, object_features=object_features,
        detector_w=detector_w, detector_h=detector_h)

    out = Path(args.out)
    for name, channel in (("appearance", channels.appearance), ("size", channels.size)):
        save_feature_tensor(FeatureMap(channel.data[:, :, None]), out / f"{name}.ftn")
        if args.preview:
            save_preview(channel, out / f"{name}.png", detections=kept,
                         image_width=width, image_height=height)
    save_feature_tensor(channels.object_block, out / "objects.ftn")
    write_text_atomic(out / "scores.txt", format_key_values(
        {f"object.{i}": format_float(score) for i, score in enumerate(channels.scores)}))
    print(f"{len(kept)} of {len(detections)} detection(s) above {threshold}; channels in {out}")
    return EXIT_OK


@handle_errors(subcommand="train")
def cmd_train(args, settings: SettingsManager) -> int:
    runner = _runner(args, settings)
    flags = AblationFlags.from_label(args.flags)
    initial = load_checkpoint(args.init) if args.init else None
    result = runner.fit(settings.training, flags, _source(args, settings), initial=initial)
    out = Path(args.out) if args.out else Path(args.corpus) / "model.rdm"
    save_checkpoint(result.model, out)
    print(f"Checkpoint written to {out}")
    print(f"train loss {format_float(result.train_trace[0])} -> {format_float(result.train_trace[-1])}")
    if result.val_trace:
        print(f"best validation kld {format_float(min(result.val_trace))} at epoch {result.best_epoch}")
    return EXIT_OK


@handle_errors(subcommand="predict")
def cmd_predict(args, settings: SettingsManager) -> int:
    runner = _runner(args, settings)
    model = load_checkpoint(args.checkpoint)
    flags, source = AblationFlags.from_label(args.flags), _source(args, settings)
    out = Path(args.out)
    indices = runner.indices(args.split)
    for index in indices:
        scene_id = runner.corpus[index].scene_id
        prediction = runner.predict(model, index, flags, source)
        save_saliency_map(prediction, out / f"{scene_id}.ftn")
        if args.preview:
            save_preview(prediction, out / f"{scene_id}.png")
    print(f"Wrote {len(indices)} prediction(s) to {out}")
    return EXIT_OK


@handle_errors(subcommand="eval")
def cmd_eval(args, settings: SettingsManager) -> int:
    runner = _runner(args, settings)
    indices = runner.indices(args.split)
    if args.checkpoint:
        report = runner.evaluate_model(load_checkpoint(args.checkpoint), AblationFlags.from_label(args.flags),
                                       _source(args, settings), label=args.split, indices=indices)
    else:
        directory = Path(args.predictions)
        scenes = [runner.corpus[i] for i in indices]
        missing = [s.scene_id for s in scenes if not (directory / f"{s.scene_id}.ftn").exists()]
        if missing:
            raise FileSystemError(f"No prediction for scene(s) {', '.join(missing)} in {directory}",
                                  file_path=str(directory), operation="read")
        predictions = [load_saliency_map(directory / f"{s.scene_id}.ftn") for s in scenes]
        report = evaluate(predictions, [s.saliency for s in scenes], [s.fixations for s in scenes],
                          config=settings.evaluation, image_ids=[s.scene_id for s in scenes],
                          max_workers=settings.experiments.max_workers, label=args.split)
    if args.out:
        write_report(report, args.out, args.values)
    elif args.values:
        write_text_atomic(args.values, format_key_values(report_key_values(report)))
    print(format_report_table(report), end="")
    return EXIT_OK


def _emit_table(table, args):
    if args.out:
        write_experiment(table, args.out, args.values)
    print(format_experiment_table(table), end="")


@handle_errors(subcommand="ablate")
def cmd_ablate(args, settings: SettingsManager) -> int:
    grid = [AblationFlags.from_label(label) for label in args.grid] if args.grid else None
    if args.variant == "distance":
        corpus = load_corpus(args.corpus)
        table = run_distance_ablation(corpus, settings.training, grid,
                                      dissimilarity=settings.dissimilarity,
                                      experiment=settings.experiments, readout=settings.readout,
                                      evaluation=settings.evaluation,
                                      confidence_threshold=settings.confidence_threshold)
    else:
        runner = _runner(args, settings)
        if args.variant == "postprocessing":
            table = runner.run_postprocessing_ablation(settings.training, grid[0] if grid else None)
        else:
            source = DetectionSource(args.detections or settings.experiments.detection_source)
            table = runner.run_ablation(settings.training, grid, source)
    _emit_table(table, args)
    return EXIT_OK


@handle_errors(subcommand="robust")
def cmd_robust(args, settings: SettingsManager) -> int:
    runner = _runner(args, settings)
    flags = AblationFlags.from_label(args.flags)
    train_modes = (args.train_mode,) if args.train_mode else TRAIN_MODES
    test_modes = (args.test_mode,) if args.test_mode else DETECTION_MODES
    table = runner.run_robustness_grid(settings.training, flags, train_modes, test_modes, seed=args.seed)
    _emit_table(table, args)
    failed = [cell for cell in table.cells if not cell.ok]
    if failed:
        raise NumericalError(f"{len(failed)} cell(s) failed: "
                             + "; ".join(f"{c.label}: {c.error}" for c in failed))
    return EXIT_OK


@handle_errors(subcommand="gradcheck")
def cmd_gradcheck(args, settings: SettingsManager) -> int:
    losses = LOSS_KINDS if args.grad_loss == "both" else (args.grad_loss,)
    reports = run_gradient_suite(n_models=args.models, seed=args.seed, losses=losses,
                                 tolerance=args.tolerance)
    worst = max(reports, key=lambda r: r.max_relative_error)
    print(f"{len(reports)} check(s) passed; worst relative error {worst.max_relative_error:.3e} "
          f"({worst.loss})")
    return EXIT_OK


@handle_errors(subcommand="fitcb")
def cmd_fitcb(args, settings: SettingsManager) -> int:
    runner = _runner(args, settings)
    scenes = [runner.corpus[i] for i in runner.indices(args.split)]
    prior = fit_center_bias([scene.fixations for scene in scenes])
    write_text_atomic(args.out, format_key_values({
        "mu_x": format_float(prior.mu_x), "mu_y": format_float(prior.mu_y),
        "sigma_x": format_float(prior.sigma_x), "sigma_y": format_float(prior.sigma_y),
        "weight": format_float(prior.weight)}))
    if args.preview:
        save_preview(average_ground_truth([scene.saliency for scene in scenes]), args.preview)
    print(f"Center bias mu=({prior.mu_x:.3f}, {prior.mu_y:.3f}) sigma=({prior.sigma_x:.3f}, "
          f"{prior.sigma_y:.3f}) from {len(scenes)} scene(s)")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "dissim": cmd_dissim,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "robust": cmd_robust,
    "gradcheck": cmd_gradcheck,
    "fitcb": cmd_fitcb,
}


def _configure_logging(args, settings: SettingsManager):
    level_name = str(settings.config_manager.get_setting("logging.level", "WARNING")).upper()
    console_level = getattr(logging, level_name, logging.WARNING)
    if args.verbose == 1:
        console_level = logging.INFO
    elif args.verbose >= 2:
        console_level = logging.DEBUG
    global_error_handler.logger.setLevel(min(console_level, logging.INFO))
    global_error_handler.set_console_level(console_level)
    log_file = settings.config_manager.get_setting("logging.file")
    if log_file:
        global_error_handler.add_log_file(log_file)


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status (0 ok, 1 usage, 2 data, 3 numerical)."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(e.message, file=sys.stderr)
        return exit_code_for(e)
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        settings = _settings(args)
        _configure_logging(args, settings)
        logger.debug(f"Running {args.command} with {vars(args)}")
        return COMMANDS[args.command](args, settings)
    except Exception as e:
        message = getattr(e, "message", str(e))
        print(f"{PROG} {args.command}: {message}", file=sys.stderr)
        print(f"  {global_error_handler.suggested_action(e)}", file=sys.stderr)
        return exit_code_for(e)
    finally:
        if args.profile:
            print(global_monitor.format_stats())
            summary = global_error_handler.format_error_summary()
            if summary:
                print(summary)


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
