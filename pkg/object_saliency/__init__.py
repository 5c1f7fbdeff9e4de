"""
Object-Saliency: saliency prediction from object dissimilarity

Appearance and size dissimilarity channels computed from object detections,
a small per-pixel readout trained with KLD or EML losses, the standard
fixation-based metrics, SVCCA as an alternative object distance, and a
harness for corpora, ablations and detection-robustness experiments.
"""

__version__ = "0.4.0"
__author__ = "Object-Saliency Development Team"

from .tensor_core import FeatureMap, Detection, SaliencyMap, FixationMap
from .dissimilarity import DissimilarityExtractor, AblationFlags, dissimilarity_scores
from .readout import ReadoutModel, initialize_model, forward, train
from .metrics import evaluate, MetricReport
from .svcca import svcca_score
from .config import ConfigManager, SettingsManager

__all__ = [
    'FeatureMap',
    'Detection',
    'SaliencyMap',
    'FixationMap',
    'DissimilarityExtractor',
    'AblationFlags',
    'dissimilarity_scores',
    'ReadoutModel',
    'initialize_model',
    'forward',
    'train',
    'evaluate',
    'MetricReport',
    'svcca_score',
    'ConfigManager',
    'SettingsManager',
]
