"""Per-tag binary classifiers over paired image and tag-map inputs.

One classifier per target tag keeps the system extensible: adding a tag
never touches an existing model. Datasets are balanced exactly, with
negatives drawn from designs carrying a sibling tag of the same taxonomy
category, and the target tag is stripped from every sample's tag list
before the tag map is built so the textual branch cannot read the label.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import learn
from .corpus import Corpus, Design, PixelGrid, TagTaxonomy, decode_image
from .errors import DatasetError
from .features import build_tag_map, resize_bilinear
from .normalize import EmbeddingTable

log = logging.getLogger(__name__)

VARIANTS = ("fused", "image-only", "tag-only")


@dataclass(frozen=True)
class TagSample:
    design_id: str
    pixels: np.ndarray  # (3, 64, 64)
    tag_map: np.ndarray  # (1, 50, 50)
    label: int


@dataclass(frozen=True)
class TagDataset:
    tag: str
    category: str
    positives: tuple[TagSample, ...]
    negatives: tuple[TagSample, ...]
    seed: int

    def samples(self) -> list[learn.Sample]:
        return [
            ((s.pixels, s.tag_map), s.label)
            for s in (*self.positives, *self.negatives)
        ]


@dataclass(frozen=True)
class TrainingReport:
    variant: str
    ratios: learn.SplitRatios
    seed: int
    epochs: int
    train_accuracy: float
    validation_accuracy: float
    test_accuracy: float


@dataclass
class TagClassifier:
    tag: str
    category: str
    model: learn.Model
    report: TrainingReport


def resolve_image_path(design: Design, image_root: str | Path | None) -> Path:
    path = Path(design.image_path)
    if not path.is_absolute() and image_root is not None:
        path = Path(image_root) / path
    return path


def pixel_tensor(image: PixelGrid) -> np.ndarray:
    """64x64 RGB tensor in channel-first layout."""
    resized = resize_bilinear(image, 64, 64)
    return np.ascontiguousarray(resized.values.transpose(2, 0, 1))


def _tag_map_tensor(tags: list[str], embeddings: EmbeddingTable) -> np.ndarray:
    return build_tag_map(tags, embeddings).grid[None, :, :]


def _build_sample(
    design: Design,
    target: str,
    label: int,
    embeddings: EmbeddingTable,
    image_root: str | Path | None,
) -> TagSample:
    image = decode_image(resolve_image_path(design, image_root))
    tags = [t for t in design.tags if t != target]
    return TagSample(
        design_id=design.id,
        pixels=pixel_tensor(image),
        tag_map=_tag_map_tensor(tags, embeddings),
        label=label,
    )


def prepare_tag_dataset(
    corpus: Corpus,
    taxonomy: TagTaxonomy,
    tag: str,
    embeddings: EmbeddingTable,
    min_freq: int = 300,
    seed: int = 0,
    image_root: str | Path | None = None,
) -> TagDataset:
    """Balanced dataset for one tag; negatives come from sibling-tag designs."""
    tag = tag.strip().lower()
    where = taxonomy.category_of(tag)
    if where is None:
        raise DatasetError(f"tag {tag!r} is not in the taxonomy")
    siblings = set(taxonomy.siblings(tag))

    positives = [d for d in corpus.designs if tag in d.tags]
    if len(positives) < min_freq:
        raise DatasetError(
            f"tag {tag!r} appears on {len(positives)} designs, below min_freq={min_freq}"
        )
    pool = [
        d
        for d in corpus.designs
        if tag not in d.tags and siblings.intersection(d.tags)
    ]
    if len(pool) < len(positives):
        raise DatasetError(
            f"negative pool for {tag!r} has {len(pool)} designs, "
            f"need {len(positives)} to balance the positives"
        )
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pool), size=len(positives), replace=False)
    negatives = [pool[i] for i in sorted(picked)]

    log.info(
        "dataset for %r: %d positives, %d negatives from pool of %d",
        tag, len(positives), len(negatives), len(pool),
    )
    return TagDataset(
        tag=tag,
        category=where[0],
        positives=tuple(
            _build_sample(d, tag, 1, embeddings, image_root) for d in positives
        ),
        negatives=tuple(
            _build_sample(d, tag, 0, embeddings, image_root) for d in negatives
        ),
        seed=seed,
    )


def _spec_and_inputs(variant: str, seed: int) -> tuple[learn.ModelSpec, tuple[int, ...]]:
    if variant == "fused":
        return learn.fused_model_spec(seed), (0, 1)
    if variant == "image-only":
        return learn.image_only_spec(seed), (0,)
    if variant == "tag-only":
        return learn.tag_only_spec(seed), (1,)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def _project(samples: list[learn.Sample], keep: tuple[int, ...]) -> list[learn.Sample]:
    if keep == (0, 1):
        return samples
    return [(tuple(inputs[i] for i in keep), label) for inputs, label in samples]


def train_tag_classifier(
    ds: TagDataset,
    ratios: learn.SplitRatios,
    cfg: learn.TrainConfig,
    variant: str = "fused",
) -> TagClassifier:
    """Train one variant; the split depends only on cfg.seed, so every
    variant trained with the same seed sees identical train/val/test members."""
    spec, keep = _spec_and_inputs(variant, cfg.seed)
    train_part, val_part, test_part = learn.split_dataset(ds.samples(), ratios, cfg.seed)
    train_s = _project(train_part, keep)
    val_s = _project(val_part, keep)
    test_s = _project(test_part, keep)

    result = learn.train(learn.build_model(spec), train_s, cfg, validation=val_s)
    report = TrainingReport(
        variant=variant,
        ratios=ratios,
        seed=cfg.seed,
        epochs=cfg.epochs,
        train_accuracy=learn.accuracy(result.model, train_s),
        validation_accuracy=learn.accuracy(result.model, val_s),
        test_accuracy=learn.accuracy(result.model, test_s),
    )
    return TagClassifier(tag=ds.tag, category=ds.category, model=result.model, report=report)


def _inputs_for(classifier: TagClassifier, pixels: np.ndarray, tag_map: np.ndarray):
    chosen = []
    for shape in classifier.model.spec.input_shapes:
        chosen.append(pixels if shape == learn.VISUAL_INPUT else tag_map)
    return chosen


def predict_missing_tags(
    design: Design,
    classifiers: list[TagClassifier],
    embeddings: EmbeddingTable,
    threshold: float = 0.5,
    image: PixelGrid | None = None,
    image_root: str | Path | None = None,
) -> list[tuple[str, float]]:
    """Score every classifier whose tag the design lacks; keep score >= threshold."""
    present = set(design.tags)
    candidates = [c for c in classifiers if c.tag not in present]
    if not candidates:
        return []
    if image is None:
        image = decode_image(resolve_image_path(design, image_root))
    pixels = pixel_tensor(image)
    tag_map = _tag_map_tensor(list(design.tags), embeddings)

    scored = []
    for c in candidates:
        prob = learn.forward(c.model, _inputs_for(c, pixels, tag_map))
        if prob >= threshold:
            scored.append((c.tag, prob))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


# ---------------------------------------------------------------------------
# bundle persistence


def _checkpoint_name(tag: str) -> str:
    return tag.replace(" ", "_") + ".ckpt"


def save_classifier_bundle(classifiers: list[TagClassifier], root: str | Path) -> Path:
    """One checkpoint per tag plus a manifest describing each run."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for c in sorted(classifiers, key=lambda c: c.tag):
        fname = _checkpoint_name(c.tag)
        learn.save_model(c.model, root / fname, epoch=c.report.epochs)
        entries.append(
            {
                "tag": c.tag,
                "category": c.category,
                "file": fname,
                "variant": c.report.variant,
                "seed": c.report.seed,
                "epochs": c.report.epochs,
                "ratios": {
                    "train": c.report.ratios.train,
                    "validation": c.report.ratios.validation,
                    "test": c.report.ratios.test,
                },
                "train_accuracy": c.report.train_accuracy,
                "validation_accuracy": c.report.validation_accuracy,
                "test_accuracy": c.report.test_accuracy,
            }
        )
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"classifiers": entries}, indent=2) + "\n")
    return manifest


def load_classifier_bundle(root: str | Path) -> list[TagClassifier]:
    root = Path(root)
    data = json.loads((root / "manifest.json").read_text())
    out = []
    for entry in data["classifiers"]:
        model = learn.load_model(root / entry["file"])
        report = TrainingReport(
            variant=entry["variant"],
            ratios=learn.SplitRatios(
                entry["ratios"]["train"],
                entry["ratios"]["validation"],
                entry["ratios"]["test"],
            ),
            seed=entry["seed"],
            epochs=entry["epochs"],
            train_accuracy=entry["train_accuracy"],
            validation_accuracy=entry["validation_accuracy"],
            test_accuracy=entry["test_accuracy"],
        )
        out.append(
            TagClassifier(
                tag=entry["tag"],
                category=entry["category"],
                model=model,
                report=report,
            )
        )
    return out
