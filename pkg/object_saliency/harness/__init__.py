"""Corpus formats, synthetic scenes, experiment runners and previews."""

from .data_models import (
    Scene,
    DetectionSource,
    SynthSpec,
    ExperimentConfig,
    CorpusSplit,
    CellResult,
    ExperimentTable,
    DETECTION_MODES,
    TRAIN_MODES,
)
from .formats import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    write_bytes_atomic,
    write_text_atomic,
    encode_feature_tensor,
    decode_feature_tensor,
    save_feature_tensor,
    load_feature_tensor,
    save_saliency_map,
    load_saliency_map,
    save_fixation_map,
    load_fixation_map,
    parse_detections,
    load_detections,
    format_detections,
    save_detections,
    filter_detections,
    encode_checkpoint,
    decode_checkpoint,
    save_checkpoint,
    load_checkpoint,
    format_float,
    format_key_values,
    parse_key_values,
    load_key_values,
    report_key_values,
    format_report_table,
    format_experiment_table,
    experiment_key_values,
    write_report,
    write_experiment,
)
from .corpus import save_scene, load_scene, save_corpus, load_corpus, split_corpus
from .synth import synth_scene, synth_corpus, planted_masses, ground_truth_map, center_prior
from .experiments import (
    BASELINE,
    ExperimentRunner,
    run_ablation,
    run_robustness,
    run_robustness_grid,
    run_postprocessing_ablation,
    run_distance_ablation,
)
from .preview import heatmap_image, draw_detections, save_preview

__all__ = [
    'Scene',
    'DetectionSource',
    'SynthSpec',
    'ExperimentConfig',
    'CorpusSplit',
    'CellResult',
    'ExperimentTable',
    'DETECTION_MODES',
    'TRAIN_MODES',
    'DEFAULT_CONFIDENCE_THRESHOLD',
    'write_bytes_atomic',
    'write_text_atomic',
    'encode_feature_tensor',
    'decode_feature_tensor',
    'save_feature_tensor',
    'load_feature_tensor',
    'save_saliency_map',
    'load_saliency_map',
    'save_fixation_map',
    'load_fixation_map',
    'parse_detections',
    'load_detections',
    'format_detections',
    'save_detections',
    'filter_detections',
    'encode_checkpoint',
    'decode_checkpoint',
    'save_checkpoint',
    'load_checkpoint',
    'format_float',
    'format_key_values',
    'parse_key_values',
    'load_key_values',
    'report_key_values',
    'format_report_table',
    'format_experiment_table',
    'experiment_key_values',
    'write_report',
    'write_experiment',
    'save_scene',
    'load_scene',
    'save_corpus',
    'load_corpus',
    'split_corpus',
    'synth_scene',
    'synth_corpus',
    'planted_masses',
    'ground_truth_map',
    'center_prior',
    'BASELINE',
    'ExperimentRunner',
    'run_ablation',
    'run_robustness',
    'run_robustness_grid',
    'run_postprocessing_ablation',
    'run_distance_ablation',
    'heatmap_image',
    'draw_detections',
    'save_preview',
]
