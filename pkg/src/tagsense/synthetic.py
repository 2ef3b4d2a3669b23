"""Seeded synthetic design corpus with known ground truth.

Two design populations share one corpus:

* Classifier designs: each has a dominant color painted into its image and a
  matching companion-tag cluster, so the color tag is predictable from either
  modality. A small disjoint fraction gets a corrupted image or corrupted
  companions, capping what each single-modality model can reach. Platform and
  screen tags are randomly withheld from the raw tag list (recorded as
  predictions plus true_tags metadata) to exercise index augmentation.
* Morph designs: each carries one member of a morphological tag family plus
  two family-specific context tags, giving variants of the same concept
  near-identical co-occurrence profiles while keeping families apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .corpus import Corpus, Design, build_corpus, write_corpus

# canonical -> variants; canonical is always the most frequent member
MORPH_FAMILIES: dict[str, tuple[str, ...]] = {
    "landingpage": ("landing page", "landing-page"),
    "travel": ("travelling", "travels"),
    "ui": ("user interface",),
    "minimal": ("minimalistic", "minimalism"),
    "e-commerce": ("ecommerce", "e commerce"),
    "dashboard": ("dashboards",),
    "signup": ("sign up", "sign-up"),
    "ux": ("user experience",),
    "illustration": ("illustation",),
    "profile": ("profiles",),
}

# context tags gluing each family together; disjoint across families
FAMILY_CONTEXT: dict[str, tuple[str, ...]] = {
    "landingpage": ("hero", "conversion", "splash"),
    "travel": ("passport", "hotel", "beach"),
    "ui": ("wireframe", "mockup", "prototype"),
    "minimal": ("clean", "simple", "whitespace"),
    "e-commerce": ("basket", "product", "shopping"),
    "dashboard": ("analytics", "metrics", "admin"),
    "signup": ("onboarding", "welcome", "username"),
    "ux": ("usability", "testing", "research"),
    "illustration": ("sketch", "drawing", "artwork"),
    "profile": ("avatar", "account", "settings"),
}

TARGET_COLORS: dict[str, tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "blue": (40, 70, 220),
    "green": (40, 180, 70),
    "yellow": (230, 200, 40),
    "purple": (150, 50, 200),
}

COLOR_COMPANIONS: dict[str, tuple[str, ...]] = {
    "red": ("sunset", "valentine", "alert", "cherry"),
    "blue": ("ocean", "sky", "winter", "corporate"),
    "green": ("nature", "forest", "leaf", "mint"),
    "yellow": ("sunshine", "banana", "honey", "taxi"),
    "purple": ("violet", "lavender", "galaxy", "neon"),
}

PLATFORM_TAGS = ("iphone", "website", "android")
APP_TAGS = ("music", "food", "finance", "news", "fitness")
SCREEN_TAGS = ("login", "search", "checkout", "contact")
LAYOUT_TAGS = ("grid", "list", "chart")

# platform + app + screen conjunctive queries for the retrieval experiment
RETRIEVAL_QUERIES: tuple[tuple[str, ...], ...] = (
    ("iphone", "music", "login"),
    ("website", "finance", "checkout"),
    ("android", "food", "search"),
    ("iphone", "news", "contact"),
    ("website", "fitness", "login"),
)

IMAGE_W, IMAGE_H = 72, 56
EMBEDDING_DIM = 50


@dataclass(frozen=True)
class SyntheticCorpus:
    root: Path
    corpus_path: Path
    embeddings_path: Path
    corpus: Corpus


def _paint_image(rng: np.random.Generator, color: tuple[int, int, int] | None) -> Image.Image:
    base = int(rng.integers(215, 240))
    img = Image.new("RGB", (IMAGE_W, IMAGE_H), (base, base, base))
    draw = ImageDraw.Draw(img)
    # Muted gray furniture so the background is not perfectly flat.
    for _ in range(3):
        g = int(rng.integers(170, 210))
        x0, y0 = int(rng.integers(0, IMAGE_W - 10)), int(rng.integers(0, IMAGE_H - 6))
        draw.rectangle([x0, y0, x0 + int(rng.integers(6, 18)), y0 + int(rng.integers(3, 8))], fill=(g, g, g))
    if color is not None:
        for _ in range(int(rng.integers(4, 7))):
            jitter = rng.integers(-25, 26, size=3)
            fill = tuple(int(np.clip(c + j, 0, 255)) for c, j in zip(color, jitter))
            w = int(rng.integers(10, 28))
            h = int(rng.integers(8, 22))
            x0 = int(rng.integers(0, IMAGE_W - w))
            y0 = int(rng.integers(0, IMAGE_H - h))
            if rng.random() < 0.5:
                draw.rectangle([x0, y0, x0 + w, y0 + h], fill=fill)
            else:
                draw.ellipse([x0, y0, x0 + w, y0 + h], fill=fill)
    return img


def _choice(rng: np.random.Generator, items, size=None, replace=False, p=None):
    picked = rng.choice(np.array(items, dtype=object), size=size, replace=replace, p=p)
    if size is None:
        return str(picked)
    return [str(x) for x in picked]


def _classifier_design(rng, idx, image_dir) -> Design:
    color = _choice(rng, list(TARGET_COLORS))
    roll = rng.random()
    image_corrupt = roll < 0.08
    tag_corrupt = 0.08 <= roll < 0.16

    painted = color
    if image_corrupt:
        painted = _choice(rng, [c for c in TARGET_COLORS if c != color])
    img = _paint_image(rng, TARGET_COLORS[painted])

    companion_source = color
    if tag_corrupt:
        companion_source = _choice(rng, [c for c in TARGET_COLORS if c != color])
    companions = _choice(rng, COLOR_COMPANIONS[companion_source], size=int(rng.integers(3, 5)))

    platform = _choice(rng, PLATFORM_TAGS, p=[0.4, 0.35, 0.25])
    apps = _choice(rng, APP_TAGS, size=2)
    screens = _choice(rng, SCREEN_TAGS, size=2)
    layout = _choice(rng, LAYOUT_TAGS)

    true_tags = [color, *companions, platform, *apps, *screens, layout]
    withheld: dict[str, float] = {}
    raw = list(true_tags)
    if rng.random() < 0.5:
        raw.remove(platform)
        withheld[platform] = round(float(rng.uniform(0.55, 0.95)), 2)
    if rng.random() < 0.3:
        dropped = screens[int(rng.integers(0, 2))]
        raw.remove(dropped)
        withheld[dropped] = round(float(rng.uniform(0.55, 0.95)), 2)

    design_id = f"c{idx:04d}"
    rel_path = f"images/{design_id}.png"
    img.save(image_dir / f"{design_id}.png")
    metadata = {
        "color": color,
        "image_corrupt": str(int(image_corrupt)),
        "tag_corrupt": str(int(tag_corrupt)),
        "true_tags": json.dumps(sorted(true_tags)),
        "predicted_tags": json.dumps(withheld, sort_keys=True),
    }
    return Design(id=design_id, image_path=rel_path, raw_tags=tuple(raw), metadata=metadata)


def _morph_designs(rng, image_dir) -> list[Design]:
    designs = []
    idx = 0
    for canonical, variants in MORPH_FAMILIES.items():
        context = FAMILY_CONTEXT[canonical]
        members = [(canonical, 10)] + [(v, 6 - 2 * i) for i, v in enumerate(variants)]
        for member, repeats in members:
            for _ in range(repeats):
                idx += 1
                design_id = f"m{idx:04d}"
                img = _paint_image(rng, None)
                img.save(image_dir / f"{design_id}.png")
                picked = _choice(rng, context, size=2)
                designs.append(
                    Design(
                        id=design_id,
                        image_path=f"images/{design_id}.png",
                        raw_tags=tuple([member, *picked]),
                        metadata={"population": "morph"},
                    )
                )
    return designs


def _vocabulary_words(corpus: Corpus) -> list[str]:
    words = set()
    for tag in corpus.tag_frequency:
        words.update(tag.split())
    return sorted(words)


def _write_embeddings(corpus: Corpus, path: Path, rng: np.random.Generator) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word in _vocabulary_words(corpus):
            # Unit variance per component keeps tag-map activations on the
            # same scale as the visual branch.
            vec = rng.normal(size=EMBEDDING_DIM)
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


def generate_corpus(root: str | Path, n_classifier: int = 600, seed: int = 0) -> SyntheticCorpus:
    """Write corpus.jsonl, images/ and embeddings.txt under root."""
    root = Path(root)
    image_dir = root / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    designs = [_classifier_design(rng, i + 1, image_dir) for i in range(n_classifier)]
    designs.extend(_morph_designs(rng, image_dir))
    corpus = build_corpus(designs)

    corpus_path = root / "corpus.jsonl"
    write_corpus(corpus, corpus_path)
    embeddings_path = root / "embeddings.txt"
    _write_embeddings(corpus, embeddings_path, np.random.default_rng(seed + 1))
    return SyntheticCorpus(
        root=root,
        corpus_path=corpus_path,
        embeddings_path=embeddings_path,
        corpus=corpus,
    )


def true_tags(design: Design) -> tuple[str, ...]:
    """Ground-truth tag set recorded by the generator (raw plus withheld)."""
    stored = design.metadata.get("true_tags")
    if stored is None:
        return design.tags
    return tuple(json.loads(stored))


def recorded_predictions(design: Design) -> dict[str, float]:
    """Withheld tags with their simulated prediction scores."""
    stored = design.metadata.get("predicted_tags")
    if not stored:
        return {}
    return {str(k): float(v) for k, v in json.loads(stored).items()}
