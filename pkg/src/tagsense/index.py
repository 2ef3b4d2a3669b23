"""Augmented tag index: conjunctive search plus retrieval comparison.

Every (design, tag) pair carries a provenance: raw, normalized, predicted
(with its score), accepted, or rejected. Rejected pairs stay recorded but
never match a query, and re-adding a rejected prediction is a no-op, so a
curator's decision survives prediction refreshes.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import SchemaError
from .normalize import MorphGroup

SAMPLE_SIZES = (10, 30, 50)


@dataclass
class TagEntry:
    origin: str  # raw | normalized | predicted | accepted | rejected
    score: float | None = None


@dataclass
class TagIndex:
    canonical_map: dict[str, str] = field(default_factory=dict)
    _designs: dict[str, dict[str, TagEntry]] = field(default_factory=dict)
    _postings: dict[str, set[str]] = field(default_factory=dict)

    def canonical(self, tag: str) -> str:
        tag = tag.strip().lower()
        return self.canonical_map.get(tag, tag)

    def add_design(self, design_id: str) -> None:
        self._designs.setdefault(design_id, {})

    @property
    def design_ids(self) -> list[str]:
        return sorted(self._designs)

    def entries_for(self, design_id: str) -> dict[str, TagEntry]:
        if design_id not in self._designs:
            raise SchemaError(f"unknown design id {design_id!r}")
        return dict(self._designs[design_id])

    def matches(self, tag: str) -> set[str]:
        return set(self._postings.get(tag, ()))

    @property
    def tags(self) -> list[str]:
        return sorted(t for t, ids in self._postings.items() if ids)

    def _set(self, design_id: str, tag: str, entry: TagEntry) -> None:
        self._designs[design_id][tag] = entry
        if entry.origin == "rejected":
            self._postings.get(tag, set()).discard(design_id)
        else:
            self._postings.setdefault(tag, set()).add(design_id)

    def add_tag(self, design_id: str, tag: str, origin: str, score: float | None = None) -> None:
        """Record one provenance entry; never downgrades and never revives a rejection."""
        if design_id not in self._designs:
            raise SchemaError(f"unknown design id {design_id!r}")
        existing = self._designs[design_id].get(tag)
        if existing is not None:
            if existing.origin == "rejected":
                return
            if origin in ("normalized", "predicted") and existing.origin != origin:
                return
        self._set(design_id, tag, TagEntry(origin=origin, score=score))

    def accept(self, design_id: str, tag: str) -> None:
        """Curator keeps the tag; idempotent, overrides any earlier state."""
        if design_id not in self._designs:
            raise SchemaError(f"unknown design id {design_id!r}")
        tag = self.canonical(tag)
        previous = self._designs[design_id].get(tag)
        score = previous.score if previous is not None else None
        self._set(design_id, tag, TagEntry(origin="accepted", score=score))

    def reject(self, design_id: str, tag: str) -> None:
        """Curator removes the tag from matching; idempotent and sticky."""
        if design_id not in self._designs:
            raise SchemaError(f"unknown design id {design_id!r}")
        tag = self.canonical(tag)
        previous = self._designs[design_id].get(tag)
        score = previous.score if previous is not None else None
        self._set(design_id, tag, TagEntry(origin="rejected", score=score))

    # -- persistence ---------------------------------------------------------

    def to_snapshot(self) -> dict:
        designs = {
            did: {
                tag: (
                    {"origin": e.origin}
                    if e.score is None
                    else {"origin": e.origin, "score": e.score}
                )
                for tag, e in sorted(entries.items())
            }
            for did, entries in sorted(self._designs.items())
        }
        return {"canonical_map": dict(sorted(self.canonical_map.items())), "designs": designs}

    @classmethod
    def from_snapshot(cls, data: dict) -> TagIndex:
        idx = cls(canonical_map=dict(data.get("canonical_map", {})))
        for did, entries in data.get("designs", {}).items():
            idx.add_design(did)
            for tag, e in entries.items():
                idx._set(did, tag, TagEntry(origin=e["origin"], score=e.get("score")))
        return idx

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_snapshot(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> TagIndex:
        return cls.from_snapshot(json.loads(Path(path).read_text()))


def build_index(
    corpus: Corpus,
    groups: list[MorphGroup] | None = None,
    predictions: dict[str, list[tuple[str, float]]] | None = None,
    threshold: float = 0.5,
) -> TagIndex:
    """Index raw tags, their canonical forms, and thresholded predictions."""
    canonical_map: dict[str, str] = {}
    for g in groups or []:
        for variant in g.variants:
            canonical_map[variant] = g.canonical
    idx = TagIndex(canonical_map=canonical_map)

    known = {d.id for d in corpus.designs}
    for did in (predictions or {}):
        if did not in known:
            raise SchemaError(f"prediction references unknown design id {did!r}")

    for design in corpus.designs:
        idx.add_design(design.id)
        for tag in design.raw_tags:
            idx.add_tag(design.id, tag, "raw")
        canonical_tags = (
            design.canonical_tags
            if design.canonical_tags is not None
            else tuple(idx.canonical(t) for t in design.raw_tags)
        )
        for tag in canonical_tags:
            if tag not in design.raw_tags:
                idx.add_tag(design.id, tag, "normalized")
        for tag, score in (predictions or {}).get(design.id, ()):
            if score >= threshold:
                idx.add_tag(design.id, idx.canonical(tag), "predicted", score=float(score))
    return idx


def search(index: TagIndex, query: list[str]) -> list[str]:
    """Designs holding every query tag, best predicted evidence first.

    Query tags are canonicalized through the morph groups. Matches are
    ordered by the summed scores of the query tags they satisfy through
    predictions (descending), then by design id.
    """
    if not query:
        raise ValueError("query must contain at least one tag")
    canonical_query = [index.canonical(t) for t in query]
    result: set[str] | None = None
    for tag in canonical_query:
        ids = index.matches(tag)
        result = ids if result is None else result & ids
        if not result:
            return []

    def rank_key(did: str):
        entries = index.entries_for(did)
        predicted_sum = sum(
            e.score or 0.0
            for tag in set(canonical_query)
            if (e := entries.get(tag)) is not None and e.origin == "predicted"
        )
        return (-predicted_sum, did)

    return sorted(result, key=rank_key)


@dataclass(frozen=True)
class RetrievalComparison:
    query: tuple[str, ...]
    control_ids: tuple[str, ...]
    experimental_ids: tuple[str, ...]
    samples: dict[int, tuple[str, ...]]

    @property
    def control_count(self) -> int:
        return len(self.control_ids)

    @property
    def experimental_count(self) -> int:
        return len(self.experimental_ids)


def retrieval_compare(
    raw_index: TagIndex,
    augmented_index: TagIndex,
    query: list[str],
    seed: int = 0,
) -> RetrievalComparison:
    """Control vs experimental result sets plus seeded candidate samples."""
    control = search(raw_index, query)
    experimental = search(augmented_index, query)
    if not set(control) <= set(experimental):
        missing = sorted(set(control) - set(experimental))
        raise SchemaError(
            f"augmented index lost control results {missing[:5]}; "
            "indices do not cover the same corpus"
        )
    rng = np.random.default_rng(seed)
    samples: dict[int, tuple[str, ...]] = {}
    for size in SAMPLE_SIZES:
        take = min(size, len(experimental))
        picked = rng.choice(len(experimental), size=take, replace=False)
        samples[size] = tuple(experimental[i] for i in sorted(picked))
    return RetrievalComparison(
        query=tuple(query),
        control_ids=tuple(control),
        experimental_ids=tuple(experimental),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# Mann-Whitney U


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j + 2) / 2.0  # average of 1-based positions i+1..j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _min_u(rank_sum_a: float, n_a: int, n_b: int) -> float:
    u_a = rank_sum_a - n_a * (n_a + 1) / 2.0
    return min(u_a, n_a * n_b - u_a)


def mann_whitney_u(a: list[float], b: list[float]) -> tuple[float, float]:
    """Two-sided U test; exact by enumeration when n_a+n_b <= 20.

    U is min(U_a, U_b) with midranks for ties. The exact p is the fraction
    of all C(n_a+n_b, n_a) group labelings whose min-U is at most the
    observed one. Larger samples fall back to the normal approximation with
    tie correction and a 0.5 continuity correction.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n_a, n_b = len(a), len(b)
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    observed = _min_u(sum(ranks[:n_a]), n_a, n_b)

    n = n_a + n_b
    if n <= 20:
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n), n_a):
            total += 1
            if _min_u(sum(ranks[i] for i in combo), n_a, n_b) <= observed + 1e-9:
                hits += 1
        return observed, hits / total

    mean = n_a * n_b / 2.0
    tie_sum = 0.0
    seen: dict[float, int] = {}
    for v in pooled:
        seen[v] = seen.get(v, 0) + 1
    for count in seen.values():
        tie_sum += count**3 - count
    variance = (n_a * n_b / 12.0) * ((n + 1) - tie_sum / (n * (n - 1)))
    if variance <= 0:
        return observed, 1.0
    z = (observed - mean + 0.5) / math.sqrt(variance)
    p = min(1.0, 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0)))
    return observed, p
