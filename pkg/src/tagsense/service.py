"""HTTP curation service: browse designs, review recommended tags with
explanations, accept or reject them, and search the curated index.

State lives in memory; every curation write goes through one lock, lands in
the index snapshot via write-to-temp-then-rename, and is appended to a plain
JSON-Lines decision log. Readers never take the lock.
"""

from __future__ import annotations

import datetime
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .corpus import Corpus, Design, TagTaxonomy, decode_image, load_default_taxonomy
from .errors import SchemaError, TagSenseError
from .explain import image_saliency, save_saliency_png, textual_attribution
from .fusion import (
    TagClassifier,
    _inputs_for,
    _tag_map_tensor,
    pixel_tensor,
    predict_missing_tags,
    resolve_image_path,
)
from .index import TagIndex, search
from .normalize import EmbeddingTable, MorphGroup

PAGE_SIZE = 20
DEFAULT_THRESHOLD = 0.5


@dataclass
class ServiceState:
    corpus: Corpus
    index: TagIndex
    snapshot_path: Path
    decision_log_path: Path
    assets_dir: Path
    classifiers: list[TagClassifier] = field(default_factory=list)
    embeddings: EmbeddingTable | None = None
    image_root: str | Path | None = None
    taxonomy: TagTaxonomy = field(default_factory=load_default_taxonomy)
    groups: list[MorphGroup] = field(default_factory=list)
    write_lock: threading.Lock = field(default_factory=threading.Lock)

    def classifier_for(self, tag: str) -> TagClassifier | None:
        tag = self.index.canonical(tag)
        return next((c for c in self.classifiers if c.tag == tag), None)


def load_service_state(workspace: str | Path) -> ServiceState:
    """Assemble state from a CLI workspace directory."""
    from . import cli  # deferred; the CLI owns the workspace layout

    out = Path(workspace)
    manifest = cli._read_manifest(out)
    corpus = cli._active_corpus(out, manifest)

    snapshot_path = out / "index.json"
    if not snapshot_path.is_file():
        raise SchemaError(f"no index snapshot at {snapshot_path}; run index build first")
    index = TagIndex.load(snapshot_path)

    models = out / "models"
    classifiers: list[TagClassifier] = []
    embeddings = None
    if (models / "manifest.json").is_file():
        classifiers = cli._bundle(out)
        embeddings = cli._embedding_table(manifest, corpus, seed=0)

    return ServiceState(
        corpus=corpus,
        index=index,
        snapshot_path=snapshot_path,
        decision_log_path=out / "decisions.log",
        assets_dir=out / "assets",
        classifiers=classifiers,
        embeddings=embeddings,
        image_root=manifest.get("image_root"),
        groups=cli._load_groups(out) or [],
    )


def _persist_snapshot(state: ServiceState) -> None:
    """Write-to-temp-then-rename so a crash never leaves a torn snapshot."""
    tmp = state.snapshot_path.with_name(state.snapshot_path.name + ".tmp")
    tmp.write_text(
        json.dumps(state.index.to_snapshot(), sort_keys=True) + "\n", encoding="utf-8"
    )
    os.replace(tmp, state.snapshot_path)


def _append_decision(state: ServiceState, design_id: str, tag: str, action: str) -> None:
    record = {
        "at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "design": design_id,
        "tag": tag,
        "action": action,
    }
    with open(state.decision_log_path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record) + "\n")


def _design_or_404(state: ServiceState, design_id: str) -> Design:
    if design_id not in state.corpus:
        raise HTTPException(status_code=404, detail=f"no design with id {design_id!r}")
    return state.corpus.design(design_id)


def _image_url(design: Design) -> str:
    path = Path(design.image_path)
    if path.is_absolute():
        return "/images/" + path.name
    return "/images/" + path.as_posix()


def _entry_json(tag: str, entry) -> dict:
    body = {"tag": tag, "origin": entry.origin}
    if entry.score is not None:
        body["score"] = entry.score
    return body


def _design_summary(state: ServiceState, design: Design) -> dict:
    entries = state.index.entries_for(design.id)
    visible = sorted(t for t, e in entries.items() if e.origin != "rejected")
    return {
        "id": design.id,
        "title": design.title,
        "image_url": _image_url(design),
        "tags": visible,
    }


def _recommendations(state: ServiceState, design: Design, threshold: float) -> list[dict]:
    if not state.classifiers or state.embeddings is None:
        return []
    predictions = predict_missing_tags(
        design,
        state.classifiers,
        state.embeddings,
        threshold=threshold,
        image_root=state.image_root,
    )
    entries = state.index.entries_for(design.id)
    kept = []
    for tag, score in predictions:
        existing = entries.get(state.index.canonical(tag))
        # Rejected tags stay suppressed; accepted ones are already on the design.
        if existing is not None and existing.origin != "predicted":
            continue
        kept.append({"tag": tag, "score": round(score, 6)})
    return kept


def build_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="tagsense curation service")
    state.assets_dir.mkdir(parents=True, exist_ok=True)
    app.mount("/assets", StaticFiles(directory=state.assets_dir), name="assets")
    if state.image_root is not None and Path(state.image_root).is_dir():
        app.mount("/images", StaticFiles(directory=state.image_root), name="images")

    @app.exception_handler(RequestValidationError)
    async def malformed_query(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed query"})

    @app.exception_handler(TagSenseError)
    async def data_error(request: Request, exc: TagSenseError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/designs")
    def list_designs(tag: str | None = None, page: int = 1) -> dict:
        if page < 1:
            raise HTTPException(status_code=400, detail="page must be >= 1")
        if tag is not None:
            ids = sorted(state.index.matches(state.index.canonical(tag)))
        else:
            ids = state.index.design_ids
        start = (page - 1) * PAGE_SIZE
        window = ids[start : start + PAGE_SIZE]
        return {
            "page": page,
            "page_size": PAGE_SIZE,
            "total": len(ids),
            "designs": [_design_summary(state, state.corpus.design(i)) for i in window],
        }

    @app.get("/designs/{design_id}")
    def design_detail(design_id: str) -> dict:
        design = _design_or_404(state, design_id)
        entries = state.index.entries_for(design.id)
        return {
            "id": design.id,
            "title": design.title,
            "image_url": _image_url(design),
            "tags": [_entry_json(t, entries[t]) for t in sorted(entries)],
        }

    @app.get("/designs/{design_id}/recommendations")
    def recommendations(design_id: str, threshold: float = DEFAULT_THRESHOLD) -> dict:
        design = _design_or_404(state, design_id)
        return {"design": design.id, "recommendations": _recommendations(state, design, threshold)}

    @app.get("/designs/{design_id}/explanations/{tag}")
    def explanation(design_id: str, tag: str) -> dict:
        design = _design_or_404(state, design_id)
        classifier = state.classifier_for(tag)
        if classifier is None or state.embeddings is None:
            raise HTTPException(status_code=404, detail=f"no trained classifier for tag {tag!r}")

        image = decode_image(resolve_image_path(design, state.image_root))
        context = [t for t in design.tags if t != classifier.tag]
        inputs = _inputs_for(
            classifier,
            pixel_tensor(image),
            _tag_map_tensor(context, state.embeddings),
        )
        grid = image_saliency(classifier.model, inputs)
        attribution = textual_attribution(classifier.model, inputs, context, k=3)

        stem = f"{design.id}_{classifier.tag}".replace(" ", "_").replace("/", "_")
        png_path = state.assets_dir / f"{stem}.png"
        save_saliency_png(grid, png_path)
        return {
            "design": design.id,
            "tag": classifier.tag,
            "saliency_png": f"/assets/{png_path.name}",
            "width": grid.width,
            "height": grid.height,
            "top_tags": [{"tag": t, "score": round(s, 6)} for t, s in attribution.entries],
        }

    def _curate(design_id: str, tag: str, action: str) -> dict:
        design = _design_or_404(state, design_id)
        tag = tag.strip().lower()
        if not tag:
            raise HTTPException(status_code=400, detail="tag must not be empty")
        with state.write_lock:
            if action == "accept":
                state.index.accept(design.id, tag)
            else:
                state.index.reject(design.id, tag)
            _persist_snapshot(state)
            _append_decision(state, design.id, tag, action)
        canonical = state.index.canonical(tag)
        entry = state.index.entries_for(design.id)[canonical]
        return {"design": design.id, "action": action, **_entry_json(canonical, entry)}

    @app.post("/designs/{design_id}/tags/{tag}/accept")
    def accept_tag(design_id: str, tag: str) -> dict:
        return _curate(design_id, tag, "accept")

    @app.post("/designs/{design_id}/tags/{tag}/reject")
    def reject_tag(design_id: str, tag: str) -> dict:
        return _curate(design_id, tag, "reject")

    @app.get("/search")
    def search_designs(q: str = "") -> dict:
        terms = [t for t in q.split("+") if t.strip()]
        if not terms:
            raise HTTPException(status_code=400, detail="malformed query; use q=tag+tag")
        canonical_terms = sorted({state.index.canonical(t) for t in terms})
        results = []
        for design_id in search(state.index, terms):
            entries = state.index.entries_for(design_id)
            design = state.corpus.design(design_id)
            results.append(
                {
                    **_design_summary(state, design),
                    "matches": [_entry_json(t, entries[t]) for t in canonical_terms],
                }
            )
        return {"query": canonical_terms, "results": results}

    @app.get("/vocabulary")
    def vocabulary() -> dict:
        return {
            "categories": {
                category: {sub: list(tags) for sub, tags in subcats.items()}
                for category, subcats in state.taxonomy.categories.items()
            },
            "groups": [
                {
                    "canonical": g.canonical,
                    "variants": sorted(g.variants),
                    "kinds": dict(sorted(g.kinds.items())),
                }
                for g in sorted(state.groups, key=lambda g: g.canonical)
            ],
        }

    return app
