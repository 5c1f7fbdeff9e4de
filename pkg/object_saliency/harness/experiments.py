"""Ablation, robustness, post-processing and distance experiments on a corpus."""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data_models import (
    Scene, DetectionSource, ExperimentConfig, CorpusSplit, CellResult, ExperimentTable,
    DETECTION_MODES, TRAIN_MODES
)
from .corpus import split_corpus
from .formats import filter_detections, DEFAULT_CONFIDENCE_THRESHOLD
from ..tensor_core import Detection, FeatureMap
from ..dissimilarity import (
    AblationFlags, DissimilarityConfig, DissimilarityExtractor, SceneChannels, build_fused_features
)
from ..readout import (
    ReadoutConfig, TrainConfig, TrainingSample, TrainingResult, ReadoutModel, model_from_config,
    forward, train, fit_center_bias
)
from ..metrics import EvaluationConfig, MetricReport, evaluate
from ..performance.monitor import monitor_performance
from ..error_handling.exceptions import NumericalError, ValidationError, ShapeMismatchError
from ..error_handling.handlers import global_error_handler

logger = logging.getLogger(__name__)

BASELINE = "baseline"
DEFAULT_SMOOTH_SIGMA = 1.0


def _clip_to_frame(detections: Sequence[Detection], width: float, height: float) -> List[Detection]:
    """Clip boxes to a frame, dropping those left empty."""
    clipped = []
    for det in detections:
        x1, y1 = min(det.x_max, width), min(det.y_max, height)
        if det.x_min < x1 and det.y_min < y1:
            clipped.append(Detection(det.x_min, det.y_min, x1, y1, det.confidence, det.class_id))
    return clipped


class ExperimentRunner:
    """Builds fused inputs for a corpus and trains/evaluates readouts on a fixed split.

    Channel extraction is cached per (scene, detection source), so cells that
    share a source reuse it.
    """

    def __init__(self, corpus: Sequence[Scene], experiment: Optional[ExperimentConfig] = None,
                 dissimilarity: Optional[DissimilarityConfig] = None,
                 readout: Optional[ReadoutConfig] = None,
                 evaluation: Optional[EvaluationConfig] = None,
                 confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD):
        self.corpus = list(corpus)
        if not self.corpus:
            raise ValidationError("Experiments need a non-empty corpus", field_name="corpus",
                                  validation_rule="nonempty")
        self.experiment = experiment or ExperimentConfig()
        self.dissimilarity = dissimilarity or DissimilarityConfig()
        self.readout = readout or ReadoutConfig()
        self.evaluation = evaluation or EvaluationConfig()
        self.confidence_threshold = confidence_threshold
        self.extractor = DissimilarityExtractor(self.dissimilarity)
        self.split: CorpusSplit = split_corpus(len(self.corpus), self.experiment)
        self._channels: Dict[Tuple[int, DetectionSource], SceneChannels] = {}
        self._annotated = any(scene.gt_detections for scene in self.corpus)

    # Inputs

    def detections_for(self, index: int, source: DetectionSource) -> List[Detection]:
        """Detections a scene sees under ``source``.

        Random mode borrows the annotated boxes of another scene, picked
        uniformly with a generator seeded by (source.seed, index). A corpus
        without annotations lends the donor's detector output instead.
        """
        scene = self.corpus[index]
        if source.mode == "none":
            return []
        if source.mode == "ground_truth":
            return list(scene.gt_detections)
        if source.mode == "predicted":
            return filter_detections(scene.detections, self.confidence_threshold)

        if len(self.corpus) < 2:
            raise ValidationError("Random detections need at least 2 scenes",
                                  field_name="detection_source", field_value=source.mode,
                                  validation_rule="min_2_scenes")
        rng = np.random.default_rng([source.seed, index])
        donor = int(rng.integers(len(self.corpus) - 1))
        if donor >= index:
            donor += 1
        donor_scene = self.corpus[donor]
        if self._annotated:
            borrowed = list(donor_scene.gt_detections)
        else:
            borrowed = filter_detections(donor_scene.detections, self.confidence_threshold)
        return _clip_to_frame(borrowed, scene.image_width, scene.image_height)

    def channels_for(self, index: int, source: DetectionSource) -> SceneChannels:
        key = (index, source)
        if key not in self._channels:
            scene = self.corpus[index]
            self._channels[key] = self.extractor.extract(
                scene.features, self.detections_for(index, source),
                scene.image_width, scene.image_height,
                object_features=scene.object_features,
                detector_w=scene.detector_width, detector_h=scene.detector_height)
        return self._channels[key]

    def fused_input(self, index: int, flags: AblationFlags, source: DetectionSource) -> FeatureMap:
        scene = self.corpus[index]
        if flags.is_empty:
            return scene.features
        channels = self.channels_for(index, source)
        return build_fused_features(scene.features, channels.appearance, channels.size, flags,
                                    channels.object_block)

    def samples(self, indices: Sequence[int], flags: AblationFlags,
                source: DetectionSource) -> List[TrainingSample]:
        return [TrainingSample(self.fused_input(i, flags, source), self.corpus[i].saliency,
                               self.corpus[i].fixations, self.corpus[i].scene_id)
                for i in indices]

    def prepare(self, sources: Sequence[DetectionSource]):
        """Extract channels for every scene and source up front, optionally in parallel."""
        keys = [(i, s) for s in sources for i in range(len(self.corpus))
                if (i, s) not in self._channels and s.mode != "none"]
        if self.experiment.max_workers <= 1 or len(keys) <= 1:
            for index, source in keys:
                self.channels_for(index, source)
            return
        with ThreadPoolExecutor(max_workers=self.experiment.max_workers) as executor:
            future_to_key = {executor.submit(self._extract_uncached, i, s): (i, s) for i, s in keys}
            for future in as_completed(future_to_key):
                self._channels[future_to_key[future]] = future.result()

    def _extract_uncached(self, index: int, source: DetectionSource) -> SceneChannels:
        scene = self.corpus[index]
        return self.extractor.extract(scene.features, self.detections_for(index, source),
                                      scene.image_width, scene.image_height,
                                      object_features=scene.object_features,
                                      detector_w=scene.detector_width,
                                      detector_h=scene.detector_height)

    def indices(self, part: str) -> List[int]:
        """Scene indices of a split part: train, val, test or all."""
        if part == "all":
            return list(range(len(self.corpus)))
        if part not in ("train", "val", "test"):
            raise ValidationError(f"Unknown split part {part!r}", field_name="split",
                                  field_value=part, validation_rule="train|val|test|all")
        return list(getattr(self.split, part))

    # Training and evaluation

    def fitted_center_bias(self):
        return fit_center_bias([self.corpus[i].fixations for i in self.split.train])

    def new_model(self, in_channels: int, center_bias: bool = False,
                  smooth_sigma: Optional[float] = None) -> ReadoutModel:
        config = replace(self.readout, center_bias=center_bias or self.readout.center_bias,
                         smooth_sigma=self.readout.smooth_sigma if smooth_sigma is None else smooth_sigma)
        prior = self.fitted_center_bias() if config.center_bias else None
        return model_from_config(in_channels, config, prior)

    def predict(self, model: ReadoutModel, index: int, flags: AblationFlags,
                source: DetectionSource):
        fused = self.fused_input(index, flags, source)
        if fused.channels != model.in_channels:
            raise ShapeMismatchError(
                f"Scene {self.corpus[index].scene_id}: model reads {model.in_channels} channel(s), "
                f"input with flags {flags.label} has {fused.channels}",
                field_name=self.corpus[index].scene_id,
                expected=(model.in_channels,), actual=(fused.channels,))
        return forward(model, fused)[1]

    def evaluate_model(self, model: ReadoutModel, flags: AblationFlags,
                       source: DetectionSource, label: str = "",
                       indices: Optional[Sequence[int]] = None) -> MetricReport:
        indices = self.split.test if indices is None else list(indices)
        predictions = [self.predict(model, i, flags, source) for i in indices]
        return evaluate(predictions, [self.corpus[i].saliency for i in indices],
                        [self.corpus[i].fixations for i in indices],
                        config=self.evaluation,
                        image_ids=[self.corpus[i].scene_id for i in indices], label=label)

    def fit(self, train_config: TrainConfig, flags: AblationFlags, train_source: DetectionSource,
            center_bias: bool = False, smooth_sigma: Optional[float] = None,
            initial: Optional[ReadoutModel] = None) -> TrainingResult:
        """Train on the train split, selecting on the validation split.

        A fresh model is initialized unless ``initial`` is given (fine-tuning).
        """
        train_set = self.samples(self.split.train, flags, train_source)
        val_set = self.samples(self.split.val, flags, train_source)
        in_channels = train_set[0].features.channels
        if initial is None:
            model = self.new_model(in_channels, center_bias, smooth_sigma)
        elif initial.in_channels != in_channels:
            raise ShapeMismatchError(
                f"Initial model reads {initial.in_channels} channel(s) but flags {flags.label} "
                f"give {in_channels}", field_name="in_channels",
                expected=(in_channels,), actual=(initial.in_channels,))
        else:
            model = initial
        return train(model, train_set, train_config, validation=val_set or None)

    def train_cell(self, label: str, flags: AblationFlags, train_config: TrainConfig,
                   train_source: DetectionSource, test_source: Optional[DetectionSource] = None,
                   center_bias: bool = False, smooth_sigma: Optional[float] = None) -> CellResult:
        """Train on the train split and evaluate on the test split; numerical failures stay in the cell."""
        test_source = test_source or train_source
        try:
            result = self.fit(train_config, flags, train_source, center_bias, smooth_sigma)
            report = self.evaluate_model(result.model, flags, test_source, label)
        except NumericalError as e:
            global_error_handler.handle_error(e, context={"cell": label})
            return CellResult(label=label, error=e.message)
        logger.info(f"{label}: test kld {report.kld}, nss {report.nss}")
        return CellResult(label=label, report=report, training=result)

    def run_cells(self, jobs: Sequence[Tuple[str, Callable[[], CellResult]]]) -> List[CellResult]:
        """Run cell jobs, in parallel when configured; results keep job order."""
        if self.experiment.max_workers <= 1 or len(jobs) <= 1:
            return [job() for _, job in jobs]
        results: Dict[str, CellResult] = {}
        with ThreadPoolExecutor(max_workers=self.experiment.max_workers) as executor:
            future_to_label = {executor.submit(job): label for label, job in jobs}
            for future in as_completed(future_to_label):
                results[future_to_label[future]] = future.result()
        return [results[label] for label, _ in jobs]

    # Experiments

    @monitor_performance("run_ablation")
    def run_ablation(self, train_config: TrainConfig,
                     flags_grid: Optional[Sequence[AblationFlags]] = None,
                     source: Optional[DetectionSource] = None) -> ExperimentTable:
        """Baseline plus one trained readout per flag subset, all on the same split and seeds."""
        source = source or DetectionSource(self.experiment.detection_source)
        grid = list(flags_grid) if flags_grid is not None else AblationFlags.all_subsets()
        self.prepare([source])

        jobs = [(BASELINE, lambda: self.train_cell(BASELINE, AblationFlags(), train_config, source))]
        for flags in grid:
            jobs.append((flags.label, lambda f=flags: self.train_cell(f.label, f, train_config, source)))
        return ExperimentTable("ablation", self.run_cells(jobs))

    def _robustness_label(self, train_mode: str, test_mode: str) -> str:
        return f"train={train_mode},test={test_mode}"

    @monitor_performance("run_robustness")
    def run_robustness(self, train_mode: str, test_mode: str, train_config: TrainConfig,
                       flags: Optional[AblationFlags] = None, seed: int = 0) -> MetricReport:
        """Train with one detection source and evaluate with another.

        With test mode ``none`` both channels are zero, so the output is the
        trained model's forward pass on zeroed channels.
        """
        flags = flags or AblationFlags(size=True, appearance=True)
        result = self.fit(train_config, flags, DetectionSource(train_mode, seed))
        return self.evaluate_model(result.model, flags, DetectionSource(test_mode, seed),
                                   self._robustness_label(train_mode, test_mode))

    @monitor_performance("run_robustness")
    def run_robustness_grid(self, train_config: TrainConfig, flags: Optional[AblationFlags] = None,
                            train_modes: Sequence[str] = TRAIN_MODES,
                            test_modes: Sequence[str] = DETECTION_MODES,
                            seed: int = 0) -> ExperimentTable:
        """Every (train source, test source) cell; one model per train source."""
        flags = flags or AblationFlags(size=True, appearance=True)
        self.prepare([DetectionSource(m, seed) for m in set(train_modes) | set(test_modes)])

        def train_mode_cells(train_mode: str) -> List[CellResult]:
            try:
                result = self.fit(train_config, flags, DetectionSource(train_mode, seed))
            except NumericalError as e:
                return [CellResult(self._robustness_label(train_mode, t), error=e.message)
                        for t in test_modes]
            cells = []
            for test_mode in test_modes:
                label = self._robustness_label(train_mode, test_mode)
                report = self.evaluate_model(result.model, flags, DetectionSource(test_mode, seed), label)
                cells.append(CellResult(label, report=report, training=result))
            return cells

        jobs = [(m, lambda m=m: train_mode_cells(m)) for m in train_modes]
        if self.experiment.max_workers <= 1 or len(jobs) <= 1:
            grouped = [job() for _, job in jobs]
        else:
            results: Dict[str, List[CellResult]] = {}
            with ThreadPoolExecutor(max_workers=self.experiment.max_workers) as executor:
                future_to_mode = {executor.submit(job): mode for mode, job in jobs}
                for future in as_completed(future_to_mode):
                    results[future_to_mode[future]] = future.result()
            grouped = [results[mode] for mode, _ in jobs]
        return ExperimentTable("robustness", [cell for cells in grouped for cell in cells])

    def run_postprocessing_ablation(self, train_config: TrainConfig,
                                    flags: Optional[AblationFlags] = None,
                                    smooth_sigma: float = DEFAULT_SMOOTH_SIGMA) -> ExperimentTable:
        """The four variants {no prior, fitted prior} x {no smoothing, smoothing}."""
        flags = flags or AblationFlags(size=True, appearance=True)
        source = DetectionSource(self.experiment.detection_source)
        self.prepare([source])
        jobs = []
        for use_cb in (False, True):
            for sigma in (0.0, smooth_sigma):
                label = f"cb={'on' if use_cb else 'off'},smooth={sigma:g}"
                jobs.append((label, lambda l=label, c=use_cb, s=sigma: self.train_cell(
                    l, flags, train_config, source, center_bias=c, smooth_sigma=s)))
        return ExperimentTable("postprocessing", self.run_cells(jobs))


def run_ablation(corpus: Sequence[Scene], train_config: TrainConfig,
                 flags_grid: Optional[Sequence[AblationFlags]] = None, **runner_options) -> ExperimentTable:
    return ExperimentRunner(corpus, **runner_options).run_ablation(train_config, flags_grid)


def run_robustness(corpus: Sequence[Scene], train_mode: str, test_mode: str,
                   train_config: TrainConfig, flags: Optional[AblationFlags] = None,
                   seed: int = 0, **runner_options) -> MetricReport:
    return ExperimentRunner(corpus, **runner_options).run_robustness(
        train_mode, test_mode, train_config, flags, seed)


def run_robustness_grid(corpus: Sequence[Scene], train_config: TrainConfig,
                        flags: Optional[AblationFlags] = None, seed: int = 0,
                        **runner_options) -> ExperimentTable:
    return ExperimentRunner(corpus, **runner_options).run_robustness_grid(
        train_config, flags, seed=seed)


def run_postprocessing_ablation(corpus: Sequence[Scene], train_config: TrainConfig,
                                flags: Optional[AblationFlags] = None,
                                smooth_sigma: float = DEFAULT_SMOOTH_SIGMA,
                                **runner_options) -> ExperimentTable:
    return ExperimentRunner(corpus, **runner_options).run_postprocessing_ablation(
        train_config, flags, smooth_sigma)


def run_distance_ablation(corpus: Sequence[Scene], train_config: TrainConfig,
                          flags_grid: Optional[Sequence[AblationFlags]] = None,
                          dissimilarity: Optional[DissimilarityConfig] = None,
                          **runner_options) -> ExperimentTable:
    """Cosine against SVCCA object similarity on the S, A and S+A configurations."""
    grid = list(flags_grid) if flags_grid is not None else [
        AblationFlags(size=True), AblationFlags(appearance=True),
        AblationFlags(size=True, appearance=True)]
    base = dissimilarity or DissimilarityConfig()
    cells = []
    for distance in ("cosine", "svcca"):
        runner = ExperimentRunner(corpus, dissimilarity=replace(base, distance=distance),
                                  **runner_options)
        table = runner.run_ablation(train_config, grid)
        for cell in table.cells:
            if cell.label == BASELINE and distance != "cosine":
                continue
            label = cell.label if cell.label == BASELINE else f"{distance}:{cell.label}"
            cells.append(replace(cell, label=label))
    return ExperimentTable("distance", cells)
