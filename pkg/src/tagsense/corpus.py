"""Design corpus loading, the category taxonomy, and image decoding."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ParseError, SchemaError

CATEGORY_NAMES = (
    "PLATFORM",
    "COLOR",
    "APP FUNCTIONALITY",
    "SCREEN FUNCTIONALITY",
    "SCREEN LAYOUT",
)

_TAXONOMY_PATH = Path(__file__).parent / "data" / "taxonomy.json"


@dataclass(frozen=True)
class Design:
    """One design record: image reference plus its tag sets and metadata."""

    id: str
    image_path: str
    raw_tags: tuple[str, ...]
    canonical_tags: tuple[str, ...] | None = None
    title: str | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def tags(self) -> tuple[str, ...]:
        """Canonical tags when normalization has run, raw tags otherwise."""
        return self.canonical_tags if self.canonical_tags is not None else self.raw_tags


@dataclass(frozen=True)
class Corpus:
    designs: tuple[Design, ...]
    tag_frequency: dict[str, int]

    def __len__(self) -> int:
        return len(self.designs)

    def design(self, design_id: str) -> Design:
        try:
            return self._by_id[design_id]
        except KeyError:
            raise KeyError(f"no design with id {design_id!r}") from None

    def __contains__(self, design_id: str) -> bool:
        return design_id in self._by_id

    @property
    def _by_id(self) -> dict[str, Design]:
        cached = self.__dict__.get("_by_id_cache")
        if cached is None:
            cached = {d.id: d for d in self.designs}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached


@dataclass(frozen=True)
class PixelGrid:
    """An RGB raster with per-channel values in [0, 1]."""

    width: int
    height: int
    values: np.ndarray  # shape (height, width, 3), float64

    def __post_init__(self) -> None:
        if self.values.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {self.values.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")


def clean_tags(tags: list[str]) -> tuple[str, ...]:
    """Lowercase, trim, and deduplicate tags, keeping first-occurrence order."""
    seen: dict[str, None] = {}
    for tag in tags:
        t = tag.strip().lower()
        if t and t not in seen:
            seen[t] = None
    return tuple(seen)


_KNOWN_FIELDS = {"id", "image_path", "tags", "canonical_tags", "title", "metadata"}


def parse_design_record(line: str, line_number: int | None = None) -> Design:
    """Parse one JSON-Lines record into a Design.

    Unknown top-level fields are preserved as strings in ``metadata``.
    """
    where = f" at line {line_number}" if line_number is not None else ""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON{where}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"expected a JSON object{where}, got {type(obj).__name__}")

    for key in ("id", "image_path", "tags"):
        if key not in obj:
            raise SchemaError(f"missing required field {key!r}{where}")
    design_id = obj["id"]
    if not isinstance(design_id, str) or not design_id.strip():
        raise SchemaError(f"id must be a non-empty string{where}")
    image_path = obj["image_path"]
    if not isinstance(image_path, str) or not image_path:
        raise SchemaError(f"image_path must be a non-empty string{where}")
    if not isinstance(obj["tags"], list):
        raise SchemaError(f"tags must be an array of strings{where}")
    raw_tags = clean_tags([str(t) for t in obj["tags"]])
    if not raw_tags:
        raise SchemaError(f"design {design_id!r} has no usable tags{where}")

    canonical = obj.get("canonical_tags")
    canonical_tags = clean_tags([str(t) for t in canonical]) if canonical is not None else None

    title = obj.get("title")
    if title is not None and not isinstance(title, str):
        raise SchemaError(f"title must be a string{where}")

    metadata: dict[str, str] = {}
    raw_meta = obj.get("metadata", {})
    if not isinstance(raw_meta, dict):
        raise SchemaError(f"metadata must be an object{where}")
    for key, value in raw_meta.items():
        metadata[str(key)] = str(value)
    for key, value in obj.items():
        if key not in _KNOWN_FIELDS:
            metadata[key] = str(value)

    return Design(
        id=design_id,
        image_path=image_path,
        raw_tags=raw_tags,
        canonical_tags=canonical_tags,
        title=title,
        metadata=metadata,
    )


def build_corpus(designs: list[Design]) -> Corpus:
    """Assemble a Corpus, rejecting duplicate ids and counting tag frequency."""
    seen: set[str] = set()
    freq: Counter[str] = Counter()
    for design in designs:
        if design.id in seen:
            raise SchemaError(f"duplicate id {design.id}")
        seen.add(design.id)
        freq.update(design.raw_tags)
    return Corpus(designs=tuple(designs), tag_frequency=dict(freq))


def load_corpus(path: str | Path) -> Corpus:
    designs = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if line.strip():
                designs.append(parse_design_record(line, line_number=number))
    return build_corpus(designs)


def design_to_json(design: Design) -> str:
    """Serialize one design with canonical field order (stable round-trips)."""
    obj: dict[str, object] = {
        "id": design.id,
        "image_path": design.image_path,
        "tags": list(design.raw_tags),
    }
    if design.canonical_tags is not None:
        obj["canonical_tags"] = list(design.canonical_tags)
    if design.title is not None:
        obj["title"] = design.title
    if design.metadata:
        obj["metadata"] = {k: design.metadata[k] for k in sorted(design.metadata)}
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for design in corpus.designs:
            handle.write(design_to_json(design) + "\n")


def decode_image(path: str | Path) -> PixelGrid:
    """Decode a PNG or JPEG into an RGB grid scaled to [0, 1].

    Alpha, if present, is composited over white.
    """
    try:
        with Image.open(path) as img:
            if "A" in img.getbands() or img.mode == "P":
                rgba = np.asarray(img.convert("RGBA"), dtype=np.float64)
                alpha = rgba[:, :, 3:4] / 255.0
                rgb = rgba[:, :, :3] * alpha + 255.0 * (1.0 - alpha)
            else:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc
    values = np.clip(rgb / 255.0, 0.0, 1.0)
    height, width = values.shape[:2]
    return PixelGrid(width=width, height=height, values=values)


@dataclass(frozen=True)
class TagTaxonomy:
    """The five-category tag vocabulary; each tag belongs to exactly one subcategory."""

    categories: dict[str, dict[str, tuple[str, ...]]]

    def __post_init__(self) -> None:
        if set(self.categories) != set(CATEGORY_NAMES):
            raise SchemaError(
                f"taxonomy must contain exactly the categories {CATEGORY_NAMES}, "
                f"got {tuple(self.categories)}"
            )
        owner: dict[str, tuple[str, str]] = {}
        for category, subcats in self.categories.items():
            for subcat, tags in subcats.items():
                for tag in tags:
                    if tag in owner:
                        raise SchemaError(
                            f"tag {tag!r} appears in both {owner[tag]} and "
                            f"({category!r}, {subcat!r})"
                        )
                    owner[tag] = (category, subcat)
        object.__setattr__(self, "_owner", owner)

    @classmethod
    def from_dict(cls, data: dict) -> TagTaxonomy:
        categories = {
            str(category): {
                str(subcat).strip().lower(): clean_tags([str(t) for t in tags])
                for subcat, tags in subcats.items()
            }
            for category, subcats in data.items()
        }
        return cls(categories=categories)

    @classmethod
    def from_file(cls, path: str | Path) -> TagTaxonomy:
        with open(path, encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed taxonomy file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise SchemaError(f"taxonomy file {path} must hold a JSON object")
        return cls.from_dict(data)

    def category_of(self, tag: str) -> tuple[str, str] | None:
        """Return (category, subcategory) for a tag, or None if unknown."""
        return self._owner.get(tag.strip().lower())

    def tags_in_category(self, category: str) -> tuple[str, ...]:
        subcats = self.categories[category]
        return tuple(tag for tags in subcats.values() for tag in tags)

    def siblings(self, tag: str) -> tuple[str, ...]:
        """All other tags sharing the tag's top-level category."""
        where = self.category_of(tag)
        if where is None:
            return ()
        tag = tag.strip().lower()
        return tuple(t for t in self.tags_in_category(where[0]) if t != tag)

    @property
    def all_tags(self) -> tuple[str, ...]:
        return tuple(self._owner)


def load_default_taxonomy() -> TagTaxonomy:
    """The bundled five-category vocabulary."""
    return TagTaxonomy.from_file(_TAXONOMY_PATH)
