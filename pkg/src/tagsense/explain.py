"""Why a classifier fired: pixel saliency and contributing tags.

Both artifacts differentiate the pre-sigmoid score. The sigmoid derivative
is a positive per-sample scalar, so it cancels under the saliency grid's
max-normalization, and omitting it makes attribution scores scale exactly
linearly with the head weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import learn
from .errors import ShapeError


@dataclass(frozen=True)
class SaliencyGrid:
    values: np.ndarray  # (height, width) in [0, 1]

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class TextAttribution:
    entries: tuple[tuple[str, float], ...]


def _input_index(spec: learn.ModelSpec, channels: int, what: str) -> int:
    for i, shape in enumerate(spec.input_shapes):
        if len(shape) == 3 and shape[0] == channels:
            return i
    raise ShapeError(f"model has no {what} input among shapes {spec.input_shapes}")


def image_saliency(model: learn.Model, inputs: list[np.ndarray]) -> SaliencyGrid:
    """Per-pixel |d score / d pixel|, max over RGB, scaled so the peak is 1."""
    idx = _input_index(model.spec, 3, "visual")
    grads = learn.score_gradients(model, list(inputs))
    per_pixel = np.abs(grads[idx]).max(axis=0)
    peak = per_pixel.max()
    if peak > 0:
        per_pixel = per_pixel / peak
    return SaliencyGrid(values=per_pixel)


def textual_attribution(
    model: learn.Model,
    inputs: list[np.ndarray],
    tags: list[str],
    k: int = 3,
) -> TextAttribution:
    """Top-k tags by L2 norm of the score gradient over each tag-map row."""
    idx = _input_index(model.spec, 1, "textual")
    grads = learn.score_gradients(model, list(inputs))
    rows = grads[idx][0]
    n_rows = min(len(tags), rows.shape[0])
    scored = [
        (tags[r], float(np.linalg.norm(rows[r]))) for r in range(n_rows)
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return TextAttribution(entries=tuple(scored[:k]))


def save_saliency_png(grid: SaliencyGrid, path: str | Path) -> None:
    levels = np.round(grid.values * 255.0).astype(np.uint8)
    Image.fromarray(levels, mode="L").save(path)


def explanation_payload(grid: SaliencyGrid, attribution: TextAttribution) -> dict:
    return {
        "saliency": {
            "width": grid.width,
            "height": grid.height,
            "values": [[round(float(v), 4) for v in row] for row in grid.values],
        },
        "top_tags": [
            {"tag": tag, "score": round(score, 6)} for tag, score in attribution.entries
        ],
    }


def save_explanation_json(
    grid: SaliencyGrid, attribution: TextAttribution, path: str | Path
) -> None:
    Path(path).write_text(json.dumps(explanation_payload(grid, attribution)) + "\n")
