"""End-to-end experiment runner: accuracy tables and retrieval comparison.

Reports are plain dicts with deterministic content for a fixed seed and
corpus, so serialized runs can be compared byte for byte. Cell seeds are
derived from a CRC of the cell coordinates, keeping cells independent of
evaluation order.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from . import learn
from .corpus import Corpus, PixelGrid, TagTaxonomy
from .errors import DatasetError
from .features import color_histogram
from .fusion import prepare_tag_dataset, train_tag_classifier
from .index import build_index, mann_whitney_u, retrieval_compare
from .normalize import EmbeddingTable, MorphGroup

METHODS = ("histo+svm", "histo+dt", "image-only", "tag-only", "fused")


def cell_seed(seed: int, *parts) -> int:
    text = ":".join([str(seed), *map(str, parts)])
    return zlib.crc32(text.encode("utf-8")) & 0x7FFFFFFF


def ratio_label(ratios: learn.SplitRatios) -> str:
    return ":".join(
        str(int(round(part * 100)))
        for part in (ratios.train, ratios.validation, ratios.test)
    )


def parse_ratio(label: str) -> learn.SplitRatios:
    parts = label.split(":")
    if len(parts) != 3:
        raise ValueError(f"ratio {label!r} must look like 80:10:10")
    nums = [int(p) for p in parts]
    if sum(nums) != 100:
        raise ValueError(f"ratio {label!r} must sum to 100")
    return learn.SplitRatios(*(n / 100.0 for n in nums))


def _histogram_features(samples: list[learn.Sample]) -> np.ndarray:
    rows = []
    for (inputs, _label) in samples:
        pixels = inputs[0]
        grid = PixelGrid(
            width=pixels.shape[2],
            height=pixels.shape[1],
            values=np.ascontiguousarray(pixels.transpose(1, 2, 0)),
        )
        rows.append(color_histogram(grid).values)
    return np.asarray(rows)


def _labels(samples: list[learn.Sample]) -> np.ndarray:
    return np.asarray([label for _, label in samples])


def _baseline_accuracy(method: str, ds, ratios, seed: int) -> float:
    train_part, _val, test_part = learn.split_dataset(ds.samples(), ratios, seed)
    x_train = _histogram_features(train_part)
    x_test = _histogram_features(test_part)
    y_train = _labels(train_part)
    y_test = _labels(test_part)
    if method == "histo+svm":
        svm = learn.train_svm_hinge(x_train, y_train * 2 - 1, seed=seed)
        predicted = svm.predict(x_test)
        return float((predicted == y_test * 2 - 1).mean())
    tree = learn.train_decision_tree(x_train, y_train)
    return float((tree.predict(x_test) == y_test).mean())


def run_accuracy_suite(
    corpus: Corpus,
    taxonomy: TagTaxonomy,
    tags: list[str],
    ratios: list[learn.SplitRatios],
    methods: list[str],
    seed: int,
    embeddings: EmbeddingTable,
    image_root: str | Path | None = None,
    cfg: learn.TrainConfig | None = None,
    min_freq: int = 300,
) -> dict:
    """Test accuracy for every (tag, ratio, method) cell plus averages."""
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
    missing = [t for t in tags if taxonomy.category_of(t) is None]
    if missing:
        raise DatasetError(f"tags not in taxonomy: {missing}")
    base_cfg = cfg or learn.TrainConfig()

    datasets = {
        tag: prepare_tag_dataset(
            corpus,
            taxonomy,
            tag,
            embeddings,
            min_freq=min_freq,
            seed=cell_seed(seed, "dataset", tag),
            image_root=image_root,
        )
        for tag in tags
    }

    cells: dict[str, dict[str, dict[str, dict[str, float]]]] = {}
    for tag in tags:
        ds = datasets[tag]
        category = ds.category
        for ratios_item in ratios:
            label = ratio_label(ratios_item)
            for method in methods:
                s = cell_seed(seed, tag, label, method)
                if method in ("histo+svm", "histo+dt"):
                    acc = _baseline_accuracy(method, ds, ratios_item, s)
                else:
                    run_cfg = learn.TrainConfig(
                        learning_rate=base_cfg.learning_rate,
                        epochs=base_cfg.epochs,
                        batch_size=base_cfg.batch_size,
                        seed=s,
                    )
                    clf = train_tag_classifier(ds, ratios_item, run_cfg, variant=method)
                    acc = clf.report.test_accuracy
                cells.setdefault(category, {}).setdefault(tag, {}).setdefault(label, {})[
                    method
                ] = acc

    def mean_over(tag_maps: list[dict[str, dict[str, float]]]) -> dict:
        out: dict[str, dict[str, float]] = {}
        for ratios_item in ratios:
            label = ratio_label(ratios_item)
            out[label] = {
                method: float(np.mean([m[label][method] for m in tag_maps]))
                for method in methods
            }
        return out

    categories = {
        category: {
            "tags": tag_cells,
            "average": mean_over(list(tag_cells.values())),
        }
        for category, tag_cells in cells.items()
    }
    all_tag_maps = [m for tag_cells in cells.values() for m in tag_cells.values()]
    return {
        "seed": seed,
        "ratios": [ratio_label(r) for r in ratios],
        "methods": list(methods),
        "categories": categories,
        "average": mean_over(all_tag_maps),
    }


def accuracy_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_accuracy_markdown(report: dict) -> str:
    methods = report["methods"]
    lines = []
    for label in report["ratios"]:
        lines.append(f"## Split {label}")
        lines.append("")
        lines.append("| Category | Tag | " + " | ".join(methods) + " |")
        lines.append("|---|---|" + "---|" * len(methods))
        for category in sorted(report["categories"]):
            block = report["categories"][category]
            for tag in sorted(block["tags"]):
                row = block["tags"][tag][label]
                cells = " | ".join(f"{row[m]:.4f}" for m in methods)
                lines.append(f"| {category} | {tag} | {cells} |")
            avg = block["average"][label]
            cells = " | ".join(f"{avg[m]:.4f}" for m in methods)
            lines.append(f"| {category} | *average* | {cells} |")
        avg = report["average"][label]
        cells = " | ".join(f"{avg[m]:.4f}" for m in methods)
        lines.append(f"| *all* | *average* | {cells} |")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# retrieval comparison suite


def harvest_predictions(corpus: Corpus) -> dict[str, list[tuple[str, float]]]:
    """Per-design predicted tags recorded in metadata as a JSON object."""
    out: dict[str, list[tuple[str, float]]] = {}
    for design in corpus.designs:
        stored = design.metadata.get("predicted_tags")
        if not stored:
            continue
        parsed = json.loads(stored)
        if parsed:
            out[design.id] = sorted(
                (str(tag), float(score)) for tag, score in parsed.items()
            )
    return out


def harvest_true_tags(corpus: Corpus) -> dict[str, frozenset[str]]:
    out = {}
    for design in corpus.designs:
        stored = design.metadata.get("true_tags")
        if stored:
            out[design.id] = frozenset(json.loads(stored))
    return out


def run_retrieval_suite(
    corpus: Corpus,
    queries: list[list[str]],
    seed: int,
    groups: list[MorphGroup] | None = None,
) -> dict:
    """Raw-index vs augmented-index comparison for each query.

    When designs carry ground-truth tag sets, each sampled candidate gets a
    binary relevance label (query contained in the true tags) and control vs
    experimental labels are compared with the Mann-Whitney U test.
    """
    raw_index = build_index(corpus)
    predictions = harvest_predictions(corpus)
    augmented = build_index(corpus, groups=groups, predictions=predictions)
    truth = harvest_true_tags(corpus)

    rows = []
    for query in queries:
        cmp = retrieval_compare(
            raw_index, augmented, list(query), seed=cell_seed(seed, "query", *query)
        )
        row: dict = {
            "query": list(query),
            "control_count": cmp.control_count,
            "experimental_count": cmp.experimental_count,
            "samples": {},
        }
        for size, experimental_sample in sorted(cmp.samples.items()):
            rng = np.random.default_rng(cell_seed(seed, "control", size, *query))
            take = min(size, cmp.control_count)
            picked = rng.choice(cmp.control_count, size=take, replace=False) if take else []
            control_sample = tuple(cmp.control_ids[i] for i in sorted(picked))
            entry: dict = {
                "experimental_sample": list(experimental_sample),
                "control_sample": list(control_sample),
            }
            if truth:
                relevant = lambda did: int(set(query) <= truth.get(did, frozenset()))
                control_labels = [relevant(d) for d in control_sample]
                experimental_labels = [relevant(d) for d in experimental_sample]
                entry["control_relevant"] = sum(control_labels)
                entry["experimental_relevant"] = sum(experimental_labels)
                if control_labels and experimental_labels:
                    u, p = mann_whitney_u(control_labels, experimental_labels)
                    entry["u"] = u
                    entry["p"] = p
            row["samples"][str(size)] = entry
        rows.append(row)

    report = {
        "seed": seed,
        "augmented_designs": len(predictions),
        "labels_available": bool(truth),
        "queries": rows,
    }
    if not truth:
        report["notice"] = "corpus carries no ground-truth tags; counts only"
    return report


def render_retrieval_markdown(report: dict) -> str:
    lines = [
        "| Query | Control | Experimental | " + " | ".join(
            f"p@{s}" for s in (10, 30, 50)
        ) + " |",
        "|---|---|---|---|---|---|",
    ]
    for row in report["queries"]:
        ps = []
        for size in (10, 30, 50):
            entry = row["samples"].get(str(size), {})
            ps.append(f"{entry['p']:.4f}" if "p" in entry else "-")
        lines.append(
            "| "
            + "+".join(row["query"])
            + f" | {row['control_count']} | {row['experimental_count']} | "
            + " | ".join(ps)
            + " |"
        )
    if report.get("notice"):
        lines.append("")
        lines.append(report["notice"])
    return "\n".join(lines) + "\n"
