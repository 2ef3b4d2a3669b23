"""Model inputs derived from designs: color histograms, resized pixel
tensors, and the stacked tag-embedding map for the textual branch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import PixelGrid
from .errors import EmbeddingError
from .normalize import EmbeddingTable

VISUAL_SIZE = 64
TAG_MAP_SIZE = 50
DEFAULT_HISTOGRAM_BINS = 16


@dataclass(frozen=True)
class HistogramFeature:
    bins_per_channel: int
    values: np.ndarray  # length 3 * bins_per_channel, channel-major

    def __post_init__(self) -> None:
        if self.values.shape != (3 * self.bins_per_channel,):
            raise ValueError(
                f"histogram length {self.values.shape} != 3x{self.bins_per_channel}"
            )

    def channel(self, c: int) -> np.ndarray:
        b = self.bins_per_channel
        return self.values[c * b : (c + 1) * b]


@dataclass(frozen=True)
class TagMap:
    grid: np.ndarray  # (TAG_MAP_SIZE, TAG_MAP_SIZE)
    n_tags: int

    def __post_init__(self) -> None:
        if self.grid.shape != (TAG_MAP_SIZE, TAG_MAP_SIZE):
            raise ValueError(f"tag map shape {self.grid.shape} != 50x50")


def color_histogram(img: PixelGrid, bins: int = DEFAULT_HISTOGRAM_BINS) -> HistogramFeature:
    """Per-channel equal-width histogram over [0, 1], L1-normalized."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    pixel_count = img.width * img.height
    parts = []
    for c in range(3):
        channel = img.values[:, :, c].ravel()
        # Value 1.0 belongs to the last bin, not a phantom overflow bin.
        idx = np.minimum((channel * bins).astype(int), bins - 1)
        counts = np.bincount(idx, minlength=bins).astype(float)
        parts.append(counts / pixel_count)
    return HistogramFeature(bins_per_channel=bins, values=np.concatenate(parts))


def resize_bilinear(img: PixelGrid, w: int, h: int) -> PixelGrid:
    """Corner-aligned bilinear resize; a 1-wide source axis just repeats."""
    if w < 1 or h < 1:
        raise ValueError("target size must be at least 1x1")
    src = img.values

    def axis_coords(dst_len: int, src_len: int) -> np.ndarray:
        if dst_len == 1 or src_len == 1:
            return np.zeros(dst_len)
        return np.arange(dst_len) * (src_len - 1) / (dst_len - 1)

    ys = axis_coords(h, img.height)
    xs = axis_coords(w, img.width)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]

    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    values = top * (1 - fy) + bottom * fy
    return PixelGrid(width=w, height=h, values=np.clip(values, 0.0, 1.0))


def build_tag_map(tags: list[str], emb: EmbeddingTable) -> TagMap:
    """Stack tag vectors row-per-tag into a 50x50 grid, zero-padded.

    Unknown tags keep an all-zero row so row index still tracks tag order;
    past 50 tags the rest are dropped.
    """
    if emb.dimension != TAG_MAP_SIZE:
        raise EmbeddingError(
            f"tag map needs {TAG_MAP_SIZE}-d embeddings, got {emb.dimension}"
        )
    grid = np.zeros((TAG_MAP_SIZE, TAG_MAP_SIZE))
    kept = tags[:TAG_MAP_SIZE]
    for row, tag in enumerate(kept):
        vec = emb.vector_for_tag(tag)
        if vec is not None:
            grid[row] = vec
    return TagMap(grid=grid, n_tags=len(kept))
