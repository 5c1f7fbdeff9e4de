"""On-disk formats: FTN1 tensors, detection text, RDM1 checkpoints and reports."""

import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from .data_models import ExperimentTable
from ..tensor_core import FeatureMap, Detection, SaliencyMap, FixationMap, normalize_to_distribution
from ..readout import ReadoutModel, DenseLayer, CenterBias
from ..metrics import MetricReport, METRIC_NAMES
from ..error_handling.exceptions import (
    FileFormatError, BadMagicError, TruncatedFileError, NonFinitePayloadError,
    DetectionFormatError, DetectionError, FileSystemError
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FTN_MAGIC = b"FTN1"
FTN_HEADER = struct.Struct("<III")
RDM_MAGIC = b"RDM1"
DEFAULT_CONFIDENCE_THRESHOLD = 0.7


def write_bytes_atomic(path: PathLike, payload: bytes):
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except OSError as e:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise FileSystemError(f"Failed to write {path}: {e}", file_path=str(path), operation="write")


def write_text_atomic(path: PathLike, text: str):
    write_bytes_atomic(path, text.encode("utf-8"))


def _read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise FileSystemError(f"File not found: {path}", file_path=str(path), operation="read")
    except OSError as e:
        raise FileSystemError(f"Cannot read {path}: {e}", file_path=str(path), operation="read")


# FTN1 tensors


def encode_feature_tensor(fmap: FeatureMap) -> bytes:
    header = FTN_MAGIC + FTN_HEADER.pack(fmap.height, fmap.width, fmap.channels)
    return header + fmap.data.astype("<f4").tobytes(order="C")


def decode_feature_tensor(payload: bytes, source: str = "<bytes>") -> FeatureMap:
    if len(payload) < 4 or payload[:4] != FTN_MAGIC:
        raise BadMagicError(f"{source}: expected magic {FTN_MAGIC!r}, found {payload[:4]!r}",
                            file_path=source)
    if len(payload) < 4 + FTN_HEADER.size:
        raise TruncatedFileError(f"{source}: header is truncated", file_path=source)
    height, width, channels = FTN_HEADER.unpack_from(payload, 4)
    if min(height, width, channels) < 1:
        raise FileFormatError(f"{source}: zero-sized dimension {height}x{width}x{channels}",
                              file_path=source)
    expected = height * width * channels * 4
    body = payload[4 + FTN_HEADER.size:]
    if len(body) != expected:
        raise TruncatedFileError(f"{source}: header announces {expected} payload bytes, "
                                 f"found {len(body)}", file_path=source)
    values = np.frombuffer(body, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFinitePayloadError(f"{source}: payload contains NaN or infinity", file_path=source)
    return FeatureMap(values.reshape(height, width, channels))


def save_feature_tensor(fmap: FeatureMap, path: PathLike):
    write_bytes_atomic(path, encode_feature_tensor(fmap))


def load_feature_tensor(path: PathLike) -> FeatureMap:
    return decode_feature_tensor(_read_bytes(path), str(path))


def save_saliency_map(smap: SaliencyMap, path: PathLike):
    save_feature_tensor(FeatureMap(smap.data[:, :, None]), path)


def _single_channel(path: PathLike) -> np.ndarray:
    fmap = load_feature_tensor(path)
    if fmap.channels != 1:
        raise FileFormatError(f"{path}: expected a single-channel map, found {fmap.channels} channels",
                              file_path=str(path))
    return fmap.data[:, :, 0]


def load_saliency_map(path: PathLike) -> SaliencyMap:
    """Load and renormalize in float64 (the file holds 32-bit values)."""
    data = _single_channel(path)
    if float(data.min()) < 0.0 or float(data.sum()) <= 0.0:
        raise FileFormatError(f"{path}: saliency map must be nonnegative with positive mass",
                              file_path=str(path))
    return normalize_to_distribution(data)


def save_fixation_map(fmap: FixationMap, path: PathLike):
    save_feature_tensor(FeatureMap(fmap.data[:, :, None]), path)


def load_fixation_map(path: PathLike) -> FixationMap:
    data = _single_channel(path)
    if not np.all((data == 0.0) | (data == 1.0)):
        raise FileFormatError(f"{path}: fixation map must be binary", file_path=str(path))
    return FixationMap(data)


# Detection text


def parse_detections(text: str, confidence_threshold: Optional[float] = DEFAULT_CONFIDENCE_THRESHOLD,
                     source: str = "<text>") -> List[Detection]:
    """Parse ``x_min y_min x_max y_max confidence [class_id]`` lines.

    Detections with confidence at or below the threshold are dropped; pass
    None to keep all of them.
    """
    detections = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (5, 6):
            raise DetectionFormatError(f"{source}:{line_number}: expected 5 or 6 fields, got {len(fields)}",
                                       file_path=source, line_number=line_number)
        try:
            coords = [float(v) for v in fields[:5]]
            class_id = int(fields[5]) if len(fields) == 6 else None
            detection = Detection(*coords, class_id=class_id)
        except (ValueError, DetectionError) as e:
            message = e.message if isinstance(e, DetectionError) else str(e)
            raise DetectionFormatError(f"{source}:{line_number}: {message}",
                                       file_path=source, line_number=line_number)
        if confidence_threshold is None or detection.confidence > confidence_threshold:
            detections.append(detection)
    return detections


def load_detections(path: PathLike,
                    confidence_threshold: Optional[float] = DEFAULT_CONFIDENCE_THRESHOLD) -> List[Detection]:
    data = _read_bytes(path)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data[:e.start].count(b"\n") + 1
        raise DetectionFormatError(f"{path}:{line}: not valid UTF-8 text",
                                   line_number=line, file_path=str(path)) from e
    detections = parse_detections(text, confidence_threshold, str(path))
    logger.debug(f"Loaded {len(detections)} detection(s) from {path}")
    return detections


def format_detections(detections: List[Detection]) -> str:
    lines = ["# x_min y_min x_max y_max confidence [class_id]"]
    for det in detections:
        fields = [repr(float(det.x_min)), repr(float(det.y_min)), repr(float(det.x_max)),
                  repr(float(det.y_max)), repr(float(det.confidence))]
        if det.class_id is not None:
            fields.append(str(int(det.class_id)))
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def save_detections(detections: List[Detection], path: PathLike):
    write_text_atomic(path, format_detections(detections))


def filter_detections(detections: List[Detection],
                      confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> List[Detection]:
    return [det for det in detections if det.confidence > confidence_threshold]


# RDM1 checkpoints


def encode_checkpoint(model: ReadoutModel) -> bytes:
    parts = [RDM_MAGIC, struct.pack("<I", len(model.layers))]
    for layer in model.layers:
        parts.append(struct.pack("<II", layer.out_channels, layer.in_channels))
        parts.append(layer.weight.astype("<f8").tobytes(order="C"))
        parts.append(layer.bias.astype("<f8").tobytes())
    cb = model.center_bias
    if cb is None:
        parts.append(struct.pack("<B5d", 0, 0.0, 0.0, 0.0, 0.0, 0.0))
    else:
        parts.append(struct.pack("<B5d", 1, cb.mu_x, cb.mu_y, cb.sigma_x, cb.sigma_y, cb.weight))
    parts.append(struct.pack("<d", model.smooth_sigma))
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes, source: str):
        self.payload = payload
        self.offset = 0
        self.source = source

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.payload):
            raise TruncatedFileError(f"{self.source}: checkpoint is truncated at byte {self.offset}",
                                     file_path=self.source)
        chunk = self.payload[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> ReadoutModel:
    if payload[:4] != RDM_MAGIC:
        raise BadMagicError(f"{source}: expected magic {RDM_MAGIC!r}, found {payload[:4]!r}",
                            file_path=source)
    reader = _Reader(payload, source)
    reader.take(4)
    (count,) = reader.unpack("<I")
    layers = []
    for _ in range(count):
        out_ch, in_ch = reader.unpack("<II")
        weight = np.frombuffer(reader.take(8 * out_ch * in_ch), dtype="<f8").reshape(out_ch, in_ch)
        bias = np.frombuffer(reader.take(8 * out_ch), dtype="<f8")
        if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
            raise NonFinitePayloadError(f"{source}: non-finite layer parameters", file_path=source)
        layers.append(DenseLayer(weight, bias))
    flag, mu_x, mu_y, sigma_x, sigma_y, weight = reader.unpack("<B5d")
    (smooth_sigma,) = reader.unpack("<d")
    if reader.offset != len(payload):
        raise TruncatedFileError(f"{source}: {len(payload) - reader.offset} trailing byte(s)",
                                 file_path=source)
    center_bias = CenterBias(mu_x, mu_y, sigma_x, sigma_y, weight) if flag else None
    return ReadoutModel(tuple(layers), center_bias=center_bias, smooth_sigma=smooth_sigma)


def save_checkpoint(model: ReadoutModel, path: PathLike):
    write_bytes_atomic(path, encode_checkpoint(model))


def load_checkpoint(path: PathLike) -> ReadoutModel:
    return decode_checkpoint(_read_bytes(path), str(path))


# Key=value metadata and reports


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def format_key_values(values: Dict[str, object]) -> str:
    return "".join(f"{key}={value}\n" for key, value in values.items())


def parse_key_values(text: str, source: str = "<text>") -> Dict[str, str]:
    values = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FileFormatError(f"{source}:{line_number}: expected key=value", file_path=source)
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_key_values(path: PathLike) -> Dict[str, str]:
    return parse_key_values(_read_bytes(path).decode("utf-8"), str(path))


def report_key_values(report: MetricReport, prefix: str = "") -> Dict[str, str]:
    """``<id>.<metric>``, ``mean.<metric>`` and ``skipped.<metric>`` entries."""
    values: Dict[str, str] = {}
    for image in report.per_image:
        for metric in METRIC_NAMES:
            if metric in image.values:
                values[f"{prefix}{image.image_id}.{metric}"] = format_float(image.values[metric])
    for metric in METRIC_NAMES:
        mean = report.mean(metric)
        values[f"{prefix}mean.{metric}"] = "nan" if mean is None else format_float(mean)
    for metric in METRIC_NAMES:
        values[f"{prefix}skipped.{metric}"] = str(report.skip_count(metric))
    return values


def _cell(value: Optional[float]) -> str:
    return f"{'-':>9}" if value is None else f"{value:>9.4f}"


def format_report_table(report: MetricReport) -> str:
    """Line-oriented table: one row per image, then the mean row and skip counts."""
    header = f"{'image':<16}" + "".join(f"{m:>9}" for m in METRIC_NAMES)
    lines = [header]
    for image in report.per_image:
        lines.append(f"{image.image_id:<16}" + "".join(_cell(image.values.get(m)) for m in METRIC_NAMES))
    lines.append(f"{'mean':<16}" + "".join(_cell(report.mean(m)) for m in METRIC_NAMES))
    lines.append(f"{'skipped':<16}" + "".join(f"{report.skip_count(m):>9d}" for m in METRIC_NAMES))
    return "\n".join(lines) + "\n"


def format_experiment_table(table: ExperimentTable) -> str:
    """One row of means per cell; failed cells show their error."""
    lines = [f"# {table.name}", f"{'config':<24}" + "".join(f"{m:>9}" for m in METRIC_NAMES)]
    for cell in table.cells:
        if cell.ok:
            lines.append(f"{cell.label:<24}" + "".join(_cell(cell.report.mean(m)) for m in METRIC_NAMES))
        else:
            lines.append(f"{cell.label:<24} failed: {cell.error}")
    return "\n".join(lines) + "\n"


def experiment_key_values(table: ExperimentTable) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for cell in table.cells:
        if cell.ok:
            values.update(report_key_values(cell.report, prefix=f"{cell.label}."))
        else:
            values[f"{cell.label}.error"] = str(cell.error)
    return values


def write_report(report: MetricReport, table_path: PathLike, values_path: Optional[PathLike] = None):
    write_text_atomic(table_path, format_report_table(report))
    if values_path is not None:
        write_text_atomic(values_path, format_key_values(report_key_values(report)))


def write_experiment(table: ExperimentTable, table_path: PathLike,
                     values_path: Optional[PathLike] = None):
    write_text_atomic(table_path, format_experiment_table(table))
    if values_path is not None:
        write_text_atomic(values_path, format_key_values(experiment_key_values(table)))
