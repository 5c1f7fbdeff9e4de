"""PNG heatmap previews of saliency maps and channel maps."""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, ImageDraw

from ..tensor_core import Detection
from ..error_handling.exceptions import FileSystemError

logger = logging.getLogger(__name__)

# Black -> red -> yellow -> white
_STOPS = np.array([[0, 0, 0], [200, 30, 20], [250, 210, 40], [255, 255, 255]], dtype=np.float64)


def heatmap_image(values, max_size: int = 300) -> Image.Image:
    """Render a 2-D map as an RGB heatmap scaled so its longer side is ``max_size``."""
    data = np.asarray(getattr(values, "data", values), dtype=np.float64)
    if data.ndim == 3:
        data = data[:, :, 0]
    lo, hi = float(data.min()), float(data.max())
    scaled = (data - lo) / (hi - lo) if hi > lo else np.zeros_like(data)

    position = scaled * (len(_STOPS) - 1)
    index = np.minimum(position.astype(int), len(_STOPS) - 2)
    frac = (position - index)[:, :, None]
    rgb = _STOPS[index] * (1.0 - frac) + _STOPS[index + 1] * frac
    image = Image.fromarray(np.clip(rgb, 0, 255).astype(np.uint8))

    zoom = max_size / max(image.width, image.height)
    size = (max(1, round(image.width * zoom)), max(1, round(image.height * zoom)))
    return image.resize(size, Image.Resampling.NEAREST)


def draw_detections(image: Image.Image, detections: Sequence[Detection],
                    image_width: float, image_height: float) -> Image.Image:
    """Outline detection boxes (image pixels) on a rendered preview."""
    sx, sy = image.width / image_width, image.height / image_height
    draw = ImageDraw.Draw(image)
    for det in detections:
        draw.rectangle([det.x_min * sx, det.y_min * sy, det.x_max * sx - 1, det.y_max * sy - 1],
                       outline=(80, 200, 255))
    return image


def save_preview(values, path: Union[str, Path], max_size: int = 300,
                 detections: Optional[Sequence[Detection]] = None,
                 image_width: Optional[float] = None, image_height: Optional[float] = None):
    path = Path(path)
    image = heatmap_image(values, max_size)
    if detections and image_width and image_height:
        draw_detections(image, detections, image_width, image_height)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="PNG")
    except OSError as e:
        raise FileSystemError(f"Cannot write preview {path}: {e}", file_path=str(path),
                              operation="write")
    logger.debug(f"Wrote preview {path}")
