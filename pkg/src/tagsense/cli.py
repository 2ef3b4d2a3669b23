"""Command-line front end chaining the pipeline stages.

A workspace directory (``--out``) carries state between subcommands: ``ingest``
records where the corpus lives, ``mine``/``normalize``/``train``/``predict``
drop their artifacts next to it, and ``index build``/``search``/``eval``/
``serve`` read them back. Results go to stdout, progress to stderr, files only
under the workspace.

Exit codes: 0 success, 1 usage error (bad flags or config), 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from collections import Counter
from pathlib import Path

from . import evalharness, synthetic
from .corpus import (
    Corpus,
    TagTaxonomy,
    decode_image,
    load_corpus,
    load_default_taxonomy,
    write_corpus,
)
from .errors import SchemaError, TagSenseError
from .explain import image_saliency, save_explanation_json, save_saliency_png, textual_attribution
from .features import TAG_MAP_SIZE
from .fusion import (
    TagClassifier,
    _inputs_for,
    _tag_map_tensor,
    load_classifier_bundle,
    pixel_tensor,
    predict_missing_tags,
    prepare_tag_dataset,
    resolve_image_path,
    save_classifier_bundle,
    train_tag_classifier,
)
from .index import TagIndex, build_index, search
from .learn import TrainConfig
from .normalize import (
    EmbeddingTable,
    MorphGroup,
    NormalizeConfig,
    canonicalize,
    extract_morphological_groups,
    load_embeddings,
    read_accept_list,
    train_cooccurrence_embeddings,
)
from .tagmine import MiningConfig, build_tag_graph, louvain, mine_pair_rules, write_graph_exports

log = logging.getLogger("tagsense.cli")

WORKSPACE_MANIFEST = "workspace.json"
DEFAULT_OUT = "tagsense-out"


class UsageError(Exception):
    """Raised for malformed flags or config; main() maps it to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2) here; the contract reserves 2 for data errors.
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def _shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=argparse.SUPPRESS, metavar="DIR",
                        help=f"workspace directory (default: {DEFAULT_OUT})")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="random seed (default: 0)")
    parser.add_argument("--config", default=argparse.SUPPRESS, metavar="FILE",
                        help="JSON file mirroring the flags; explicit flags win")


_SHARED_DEFAULTS = {"out": DEFAULT_OUT, "seed": 0}

_DEFAULTS: dict[str, dict[str, object]] = {
    "ingest": {"embeddings": None},
    "mine": {"tsup": 0.001, "tconf": 0.2},
    "normalize": {"theta_sem": 0.55, "theta_lex": 0.55, "dim": 32, "accept_list": None},
    "train": {"tag": None, "ratio": "80:10:10", "method": "fused",
              "learning_rate": 0.0001, "epochs": 50, "batch_size": 16, "min_freq": 300},
    "predict": {"design": None, "threshold": 0.5},
    "explain": {"design": None, "tag": None},
    "index build": {"threshold": 0.5},
    "search": {},
    "eval accuracy": {"tags": None, "ratios": "80:10:10", "methods": ",".join(evalharness.METHODS),
                      "min_freq": 300, "learning_rate": 0.0001, "epochs": 50, "batch_size": 16},
    "eval retrieval": {"queries": None},
    "serve": {"port": 8000, "host": "127.0.0.1"},
}


def build_parser() -> _Parser:
    parser = _Parser(prog="tagsense", description="tag mining, normalization, prediction, and search")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a corpus and set up the workspace")
    p.add_argument("corpus", help="path to a JSON-Lines corpus file")
    p.add_argument("--embeddings", default=argparse.SUPPRESS, metavar="FILE",
                   help="word-vector file (default: embeddings.txt next to the corpus, if present)")
    _shared_flags(p)

    p = sub.add_parser("mine", help="mine co-occurrence rules and tag communities")
    p.add_argument("--tsup", type=float, default=argparse.SUPPRESS, help="support threshold (default: 0.001)")
    p.add_argument("--tconf", type=float, default=argparse.SUPPRESS, help="confidence threshold (default: 0.2)")
    _shared_flags(p)

    p = sub.add_parser("normalize", help="group morphological tag variants and canonicalize")
    p.add_argument("--theta-sem", type=float, default=argparse.SUPPRESS,
                   help="cosine similarity threshold (default: 0.55)")
    p.add_argument("--theta-lex", type=float, default=argparse.SUPPRESS,
                   help="lexical similarity threshold (default: 0.55)")
    p.add_argument("--dim", type=int, default=argparse.SUPPRESS,
                   help="co-occurrence embedding rank (default: 32)")
    p.add_argument("--accept-list", default=argparse.SUPPRESS, metavar="FILE",
                   help="reviewed pair list; only listed pairs are merged")
    _shared_flags(p)

    p = sub.add_parser("train", help="train a per-tag classifier")
    p.add_argument("--tag", default=argparse.SUPPRESS, help="target tag")
    p.add_argument("--ratio", default=argparse.SUPPRESS, help="train:validation:test split (default: 80:10:10)")
    p.add_argument("--method", choices=("fused", "image-only", "tag-only"),
                   default=argparse.SUPPRESS, help="model variant (default: fused)")
    p.add_argument("--learning-rate", type=float, default=argparse.SUPPRESS)
    p.add_argument("--epochs", type=int, default=argparse.SUPPRESS)
    p.add_argument("--batch-size", type=int, default=argparse.SUPPRESS)
    p.add_argument("--min-freq", type=int, default=argparse.SUPPRESS,
                   help="minimum positive count for the tag (default: 300)")
    _shared_flags(p)

    p = sub.add_parser("predict", help="score missing tags for one design")
    p.add_argument("--design", default=argparse.SUPPRESS, help="design id")
    p.add_argument("--threshold", type=float, default=argparse.SUPPRESS,
                   help="minimum score to report (default: 0.5)")
    _shared_flags(p)

    p = sub.add_parser("explain", help="saliency map and tag attribution for one prediction")
    p.add_argument("--design", default=argparse.SUPPRESS, help="design id")
    p.add_argument("--tag", default=argparse.SUPPRESS, help="tag whose classifier is explained")
    _shared_flags(p)

    p = sub.add_parser("index", help="search index maintenance")
    index_sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    p = index_sub.add_parser("build", help="build the snapshot from corpus, groups, and predictions")
    p.add_argument("--threshold", type=float, default=argparse.SUPPRESS,
                   help="minimum score for predicted tags (default: 0.5)")
    _shared_flags(p)

    p = sub.add_parser("search", help="conjunctive tag search")
    p.add_argument("query", help="query tags joined by '+', e.g. iphone+e-commerce+checkout")
    _shared_flags(p)

    p = sub.add_parser("eval", help="evaluation suites")
    eval_sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    p = eval_sub.add_parser("accuracy", help="per-tag accuracy table across methods and splits")
    p.add_argument("--tags", default=argparse.SUPPRESS,
                   help="comma-separated target tags (default: every taxonomy tag meeting --min-freq)")
    p.add_argument("--ratios", default=argparse.SUPPRESS,
                   help="comma-separated split labels (default: 80:10:10)")
    p.add_argument("--methods", default=argparse.SUPPRESS,
                   help=f"comma-separated methods (default: {','.join(evalharness.METHODS)})")
    p.add_argument("--min-freq", type=int, default=argparse.SUPPRESS)
    p.add_argument("--learning-rate", type=float, default=argparse.SUPPRESS)
    p.add_argument("--epochs", type=int, default=argparse.SUPPRESS)
    p.add_argument("--batch-size", type=int, default=argparse.SUPPRESS)
    _shared_flags(p)
    p = eval_sub.add_parser("retrieval", help="control vs tag-augmented retrieval comparison")
    p.add_argument("--queries", default=argparse.SUPPRESS,
                   help="comma-separated '+'-joined queries (default: built-in benchmark set)")
    _shared_flags(p)

    p = sub.add_parser("serve", help="run the curation HTTP service")
    p.add_argument("--port", type=int, default=argparse.SUPPRESS, help="port (default: 8000)")
    p.add_argument("--host", default=argparse.SUPPRESS, help="bind address (default: 127.0.0.1)")
    _shared_flags(p)

    return parser


# ---------------------------------------------------------------------------
# option merging


def _load_config_file(path: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return {str(key).replace("-", "_"): value for key, value in obj.items()}


def _merge_options(command: str, namespace: argparse.Namespace) -> dict:
    provided = dict(vars(namespace))
    provided.pop("command", None)
    provided.pop("mode", None)
    config_path = provided.pop("config", None)

    merged: dict[str, object] = {**_SHARED_DEFAULTS, **_DEFAULTS[command]}
    if config_path is not None:
        values = _load_config_file(str(config_path))
        # Positionals stay on the command line; the config mirrors flags only.
        unknown = sorted(set(values) - set(merged))
        if unknown:
            raise UsageError(
                f"config keys {unknown} not recognized for '{command}'; "
                f"known keys: {sorted(merged)}"
            )
        merged.update(values)
    merged.update(provided)
    return merged


def _read_json(path: Path, what: str):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} at {path} is not valid JSON: {exc}") from exc


def _require(opts: dict, command: str, *names: str) -> None:
    missing = [n for n in names if opts.get(n) in (None, "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{command} requires {flags}")


def _csv_list(value) -> list[str]:
    parts = value.split(",") if isinstance(value, str) else [str(v) for v in value]
    return [p.strip() for p in parts if p.strip()]


# ---------------------------------------------------------------------------
# workspace plumbing


def _out_dir(opts: dict) -> Path:
    return Path(str(opts["out"]))


def _read_manifest(out: Path) -> dict:
    path = out / WORKSPACE_MANIFEST
    if not path.is_file():
        raise SchemaError(f"no workspace manifest at {path}; run ingest first")
    return _read_json(path, "workspace manifest")


def _raw_corpus(manifest: dict) -> Corpus:
    return load_corpus(manifest["corpus"])


def _active_corpus(out: Path, manifest: dict) -> Corpus:
    """The canonicalized corpus once normalize has run, the raw one before."""
    canonical = out / "canonical.jsonl"
    if canonical.is_file():
        return load_corpus(canonical)
    return _raw_corpus(manifest)


def _embedding_table(manifest: dict, corpus: Corpus, seed: int) -> EmbeddingTable:
    path = manifest.get("embeddings")
    if path:
        return load_embeddings(path, set(corpus.tag_frequency))
    log.info("no embedding file ingested; training %d-d co-occurrence vectors", TAG_MAP_SIZE)
    return train_cooccurrence_embeddings(corpus, dim=TAG_MAP_SIZE, seed=seed)


def _load_groups(out: Path) -> list[MorphGroup] | None:
    path = out / "groups.json"
    if not path.is_file():
        return None
    obj = _read_json(path, "morph group file")
    return [
        MorphGroup(
            canonical=g["canonical"],
            variants=frozenset(g["variants"]),
            kinds=dict(g.get("kinds", {})),
        )
        for g in obj["groups"]
    ]


def _write_groups(out: Path, groups: list[MorphGroup]) -> None:
    payload = {
        "groups": [
            {"canonical": g.canonical, "variants": sorted(g.variants), "kinds": dict(sorted(g.kinds.items()))}
            for g in groups
        ]
    }
    (out / "groups.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_predictions(out: Path) -> dict[str, list[tuple[str, float]]] | None:
    pred_dir = out / "predictions"
    if not pred_dir.is_dir():
        return None
    predictions: dict[str, list[tuple[str, float]]] = {}
    for path in sorted(pred_dir.glob("*.json")):
        obj = _read_json(path, "prediction file")
        predictions[obj["design"]] = [(p["tag"], float(p["score"])) for p in obj["predictions"]]
    return predictions or None


def _bundle(out: Path) -> list[TagClassifier]:
    models = out / "models"
    if not (models / "manifest.json").is_file():
        raise SchemaError(f"no classifier bundle under {models}; run train first")
    return load_classifier_bundle(models)


def _design_or_error(corpus: Corpus, design_id: str):
    if design_id not in corpus:
        raise SchemaError(f"no design with id {design_id!r}")
    return corpus.design(design_id)


def _safe_name(text: str) -> str:
    return re.sub(r"[^-._a-zA-Z0-9]", "_", text)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(opts: dict) -> int:
    corpus_path = Path(str(opts["corpus"])).resolve()
    corpus = load_corpus(corpus_path)
    embeddings = opts.get("embeddings")
    if embeddings is None:
        candidate = corpus_path.parent / "embeddings.txt"
        embeddings = str(candidate) if candidate.is_file() else None
    else:
        embeddings = str(Path(str(embeddings)).resolve())
        if not Path(embeddings).is_file():
            raise SchemaError(f"embedding file {embeddings} does not exist")

    out = _out_dir(opts)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "corpus": str(corpus_path),
        "image_root": str(corpus_path.parent),
        "embeddings": embeddings,
        "designs": len(corpus),
        "distinct_tags": len(corpus.tag_frequency),
    }
    (out / WORKSPACE_MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"ingested {len(corpus)} designs, {len(corpus.tag_frequency)} distinct tags")
    return 0


def _cmd_mine(opts: dict) -> int:
    out = _out_dir(opts)
    corpus = _raw_corpus(_read_manifest(out))
    try:
        cfg = MiningConfig(t_sup=float(opts["tsup"]), t_conf=float(opts["tconf"]))
    except TagSenseError as exc:
        raise UsageError(str(exc)) from exc

    log.info("mining pair rules over %d designs", len(corpus))
    rules = mine_pair_rules(corpus, cfg)
    graph = build_tag_graph(rules, corpus)
    # Modularity is undefined without edges, so strict thresholds skip clustering.
    partition = louvain(graph, seed=int(opts["seed"])) if graph.edges else None

    (out / "rules.json").write_text(
        json.dumps(
            [
                {"antecedent": r.antecedent, "consequent": r.consequent,
                 "support": r.support, "confidence": r.confidence}
                for r in rules
            ],
            indent=2,
        ) + "\n",
        encoding="utf-8",
    )
    write_graph_exports(graph, out, partition)
    n_communities = len(partition.communities()) if partition is not None else 0
    print(
        f"{len(rules)} rules, {len(graph.nodes)} tags, "
        f"{len(graph.edges)} edges, {n_communities} communities"
    )
    return 0


def _cmd_normalize(opts: dict) -> int:
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _raw_corpus(manifest)
    try:
        cfg = NormalizeConfig(theta_sem=float(opts["theta_sem"]), theta_lex=float(opts["theta_lex"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    accept = None
    if opts.get("accept_list"):
        accept = read_accept_list(str(opts["accept_list"]))

    log.info("training %s-d co-occurrence embeddings for variant detection", opts["dim"])
    emb = train_cooccurrence_embeddings(corpus, dim=int(opts["dim"]), seed=int(opts["seed"]))
    groups = extract_morphological_groups(
        corpus, emb, cfg, review_path=out / "review.csv", accept=accept
    )
    _write_groups(out, groups)
    write_corpus(canonicalize(corpus, groups), out / "canonical.jsonl")

    merged = sum(len(g.variants) for g in groups)
    print(f"{len(groups)} morphological groups covering {merged} variant tags")
    for g in groups:
        print(f"{g.canonical}: {', '.join(sorted(g.variants))}")
    return 0


def _train_config(opts: dict) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=float(opts["learning_rate"]),
            epochs=int(opts["epochs"]),
            batch_size=int(opts["batch_size"]),
            seed=int(opts["seed"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_train(opts: dict) -> int:
    _require(opts, "train", "tag")
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    try:
        ratios = evalharness.parse_ratio(str(opts["ratio"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = _train_config(opts)
    method = str(opts["method"])
    if method not in ("fused", "image-only", "tag-only"):
        raise UsageError(f"unknown method {method!r}; choose fused, image-only, or tag-only")

    corpus = _active_corpus(out, manifest)
    table = _embedding_table(manifest, corpus, int(opts["seed"]))
    ds = prepare_tag_dataset(
        corpus,
        load_default_taxonomy(),
        str(opts["tag"]),
        table,
        min_freq=int(opts["min_freq"]),
        seed=int(opts["seed"]),
        image_root=manifest["image_root"],
    )
    log.info("training %s classifier for %r on %d samples", method, ds.tag, 2 * len(ds.positives))
    classifier = train_tag_classifier(ds, ratios, cfg, variant=method)

    models = out / "models"
    existing = load_classifier_bundle(models) if (models / "manifest.json").is_file() else []
    bundle = [c for c in existing if c.tag != classifier.tag] + [classifier]
    save_classifier_bundle(bundle, models)

    r = classifier.report
    print(
        f"tag={ds.tag} method={r.variant} train={r.train_accuracy:.4f} "
        f"validation={r.validation_accuracy:.4f} test={r.test_accuracy:.4f}"
    )
    return 0


def _cmd_predict(opts: dict) -> int:
    _require(opts, "predict", "design")
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _active_corpus(out, manifest)
    design = _design_or_error(corpus, str(opts["design"]))
    table = _embedding_table(manifest, corpus, int(opts["seed"]))

    predictions = predict_missing_tags(
        design,
        _bundle(out),
        table,
        threshold=float(opts["threshold"]),
        image_root=manifest["image_root"],
    )
    pred_dir = out / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "design": design.id,
        "threshold": float(opts["threshold"]),
        "predictions": [{"tag": t, "score": round(s, 6)} for t, s in predictions],
    }
    (pred_dir / f"{_safe_name(design.id)}.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    for tag, score in predictions:
        print(f"{tag}\t{score:.4f}")
    return 0


def _cmd_explain(opts: dict) -> int:
    _require(opts, "explain", "design", "tag")
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _active_corpus(out, manifest)
    design = _design_or_error(corpus, str(opts["design"]))
    tag = str(opts["tag"]).strip().lower()

    classifier = next((c for c in _bundle(out) if c.tag == tag), None)
    if classifier is None:
        raise SchemaError(f"no trained classifier for tag {tag!r}; run train first")

    table = _embedding_table(manifest, corpus, int(opts["seed"]))
    image = decode_image(resolve_image_path(design, manifest["image_root"]))
    # Dropping the explained tag mirrors the training inputs, where the
    # target never appears in its own tag map.
    context = [t for t in design.tags if t != tag]
    inputs = _inputs_for(classifier, pixel_tensor(image), _tag_map_tensor(context, table))
    grid = image_saliency(classifier.model, inputs)
    attribution = textual_attribution(classifier.model, inputs, context, k=3)

    exp_dir = out / "explanations"
    exp_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{_safe_name(design.id)}_{_safe_name(tag)}"
    save_saliency_png(grid, exp_dir / f"{stem}.png")
    save_explanation_json(grid, attribution, exp_dir / f"{stem}.json")

    print(f"saliency: {exp_dir / (stem + '.png')}")
    for entry_tag, score in attribution.entries:
        print(f"{entry_tag}\t{score:.6f}")
    return 0


def _cmd_index_build(opts: dict) -> int:
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _active_corpus(out, manifest)
    index = build_index(
        corpus,
        groups=_load_groups(out),
        predictions=_load_predictions(out),
        threshold=float(opts["threshold"]),
    )
    index.save(out / "index.json")
    print(f"indexed {len(index.design_ids)} designs, {len(index.tags)} searchable tags")
    return 0


def _cmd_search(opts: dict) -> int:
    out = _out_dir(opts)
    snapshot = out / "index.json"
    if not snapshot.is_file():
        raise SchemaError(f"no index snapshot at {snapshot}; run index build first")
    query = [part for part in str(opts["query"]).split("+") if part.strip()]
    if not query:
        raise UsageError("query must contain at least one tag")
    try:
        index = TagIndex.load(snapshot)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SchemaError(f"index snapshot {snapshot} is corrupt: {exc}") from exc
    for design_id in search(index, query):
        print(design_id)
    return 0


def _auto_tags(corpus: Corpus, taxonomy: TagTaxonomy, min_freq: int) -> list[str]:
    counts = Counter(t for d in corpus.designs for t in set(d.tags))
    tags = sorted(
        t for t, n in counts.items()
        if n >= min_freq and taxonomy.category_of(t) is not None
    )
    if not tags:
        raise SchemaError(
            f"no taxonomy tag reaches min_freq={min_freq}; pass --tags explicitly"
        )
    return tags


def _cmd_eval_accuracy(opts: dict) -> int:
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _active_corpus(out, manifest)
    taxonomy = load_default_taxonomy()
    min_freq = int(opts["min_freq"])

    tags = _csv_list(opts["tags"]) if opts.get("tags") else _auto_tags(corpus, taxonomy, min_freq)
    try:
        ratios = [evalharness.parse_ratio(label) for label in _csv_list(opts["ratios"])]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    methods = tuple(_csv_list(opts["methods"]))

    try:
        report = evalharness.run_accuracy_suite(
            corpus,
            taxonomy,
            tags,
            ratios,
            methods=methods,
            seed=int(opts["seed"]),
            embeddings=_embedding_table(manifest, corpus, int(opts["seed"])),
            image_root=manifest["image_root"],
            cfg=_train_config(opts),
            min_freq=min_freq,
        )
    except ValueError as exc:
        # The suite rejects unrecognized method names before touching data.
        raise UsageError(str(exc)) from exc
    eval_dir = out / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    (eval_dir / "accuracy.json").write_text(evalharness.accuracy_report_json(report), encoding="utf-8")
    markdown = evalharness.render_accuracy_markdown(report)
    (eval_dir / "accuracy.md").write_text(markdown, encoding="utf-8")
    print(markdown, end="")
    return 0


def _parse_queries(value) -> list[tuple[str, ...]]:
    if value is None:
        return [tuple(q) for q in synthetic.RETRIEVAL_QUERIES]
    raw = _csv_list(value) if isinstance(value, str) else list(value)
    queries = []
    for item in raw:
        parts = item.split("+") if isinstance(item, str) else [str(t) for t in item]
        terms = tuple(t.strip().lower() for t in parts if t.strip())
        if not terms:
            raise UsageError("every query needs at least one tag")
        queries.append(terms)
    if not queries:
        raise UsageError("--queries must name at least one query")
    return queries


def _cmd_eval_retrieval(opts: dict) -> int:
    out = _out_dir(opts)
    manifest = _read_manifest(out)
    corpus = _active_corpus(out, manifest)
    report = evalharness.run_retrieval_suite(
        corpus,
        _parse_queries(opts.get("queries")),
        seed=int(opts["seed"]),
        groups=_load_groups(out),
    )
    eval_dir = out / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    (eval_dir / "retrieval.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    markdown = evalharness.render_retrieval_markdown(report)
    (eval_dir / "retrieval.md").write_text(markdown, encoding="utf-8")
    print(markdown, end="")
    return 0


def _cmd_serve(opts: dict) -> int:
    import uvicorn

    from .service import build_app, load_service_state

    out = _out_dir(opts)
    state = load_service_state(out)
    app = build_app(state)
    log.info("serving workspace %s on %s:%s", out, opts["host"], opts["port"])
    uvicorn.run(app, host=str(opts["host"]), port=int(opts["port"]), log_level="warning")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "mine": _cmd_mine,
    "normalize": _cmd_normalize,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "explain": _cmd_explain,
    "index build": _cmd_index_build,
    "search": _cmd_search,
    "eval accuracy": _cmd_eval_accuracy,
    "eval retrieval": _cmd_eval_retrieval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        namespace = build_parser().parse_args(argv)
        command = namespace.command
        if getattr(namespace, "mode", None):
            command = f"{command} {namespace.mode}"
        opts = _merge_options(command, namespace)
        return _HANDLERS[command](opts)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except TagSenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
