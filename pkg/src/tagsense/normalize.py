"""Morphological tag grouping: embeddings, similarity filters, canonicalization.

The pipeline pairs a semantic filter (cosine over tag embeddings) with a
lexical filter (normalized edit distance) and an abbreviation rule, then
union-finds the surviving pairs into groups headed by the most frequent
member.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import Corpus, build_corpus, clean_tags
from .errors import EmbeddingError, SchemaError

log = logging.getLogger(__name__)

DEFAULT_THETA_SEM = 0.55
DEFAULT_THETA_LEX = 0.55
DEFAULT_MAX_ABBREV_RATIO = 0.6


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise EmbeddingError("embedding dimension must be positive")
        for token, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise EmbeddingError(
                    f"vector for {token!r} has shape {vec.shape}, "
                    f"expected ({self.dimension},)"
                )

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def vector_for_tag(self, tag: str) -> np.ndarray | None:
        """Look up a tag, averaging word vectors for multi-word tags.

        Returns None when no constituent word is known.
        """
        if tag in self.vectors:
            return self.vectors[tag]
        known = [self.vectors[w] for w in tag.split() if w in self.vectors]
        if not known:
            return None
        return np.mean(known, axis=0)


@dataclass(frozen=True)
class NormalizeConfig:
    theta_sem: float = DEFAULT_THETA_SEM
    theta_lex: float = DEFAULT_THETA_LEX
    max_abbrev_ratio: float = DEFAULT_MAX_ABBREV_RATIO

    def __post_init__(self) -> None:
        if not -1.0 <= self.theta_sem <= 1.0:
            raise ValueError(f"theta_sem {self.theta_sem} outside [-1, 1]")
        if not 0.0 <= self.theta_lex <= 1.0:
            raise ValueError(f"theta_lex {self.theta_lex} outside [0, 1]")
        if not 0.0 < self.max_abbrev_ratio < 1.0:
            raise ValueError(
                f"max_abbrev_ratio {self.max_abbrev_ratio} outside (0, 1)"
            )


@dataclass(frozen=True)
class MorphGroup:
    canonical: str
    variants: frozenset[str]
    kinds: dict[str, str] = field(default_factory=dict)  # variant -> synonym|abbreviation

    def __post_init__(self) -> None:
        if not self.variants:
            raise ValueError("a morph group needs at least one variant")
        if self.canonical in self.variants:
            raise ValueError(f"canonical {self.canonical!r} listed as its own variant")

    @property
    def members(self) -> frozenset[str]:
        return self.variants | {self.canonical}


@dataclass(frozen=True)
class MorphPair:
    """One candidate merge that survived both filters, kept for human review."""

    tag_a: str
    tag_b: str
    kind: str
    cosine: float
    lexsim: float


def load_embeddings(path: str | Path, vocabulary: set[str]) -> EmbeddingTable:
    """Read whitespace-delimited "token v1 ... vd" lines, keeping only vectors
    the vocabulary can use (exact tokens or words of multi-word tags)."""
    wanted: set[str] = set()
    for tag in vocabulary:
        wanted.add(tag)
        wanted.update(tag.split())

    dimension: int | None = None
    words: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dimension is None:
                dimension = len(values)
                if dimension == 0:
                    raise EmbeddingError(f"line {lineno}: no vector components")
            elif len(values) != dimension:
                raise EmbeddingError(
                    f"line {lineno}: dimension {len(values)} != {dimension}"
                )
            if token in wanted:
                try:
                    words[token] = np.array([float(v) for v in values])
                except ValueError as exc:
                    raise EmbeddingError(f"line {lineno}: {exc}") from None
    if dimension is None:
        raise EmbeddingError(f"{path}: empty embedding file")

    word_table = EmbeddingTable(dimension=dimension, vectors=words)
    vectors: dict[str, np.ndarray] = {}
    for tag in vocabulary:
        vec = word_table.vector_for_tag(tag)
        if vec is not None:
            vectors[tag] = vec
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def train_cooccurrence_embeddings(
    corpus: Corpus, dim: int, seed: int = 0
) -> EmbeddingTable:
    """Factorize the PPMI tag co-occurrence matrix into rank-dim row vectors.

    Co-occurrence means appearing on the same design. The decomposition is
    deterministic; the seed is accepted for interface symmetry with the other
    trainers but does not influence the result.
    """
    tags = sorted(corpus.tag_frequency)
    if len(tags) < 2:
        raise EmbeddingError("need at least 2 distinct tags to train embeddings")
    if dim > len(tags):
        raise EmbeddingError(f"dim {dim} exceeds distinct tag count {len(tags)}")

    index = {t: i for i, t in enumerate(tags)}
    counts = np.zeros((len(tags), len(tags)))
    for design in corpus.designs:
        present = sorted({index[t] for t in design.tags if t in index})
        for pos, i in enumerate(present):
            for j in present[pos + 1 :]:
                counts[i, j] += 1.0
                counts[j, i] += 1.0

    total = counts.sum()
    if total == 0:
        # No design carries two tags; every embedding would be zero anyway.
        zeros = {t: np.zeros(dim) for t in tags}
        return EmbeddingTable(dimension=dim, vectors=zeros)

    joint = counts / total
    marginal = joint.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(joint / np.outer(marginal, marginal))
    ppmi = np.where(np.isfinite(pmi) & (pmi > 0), pmi, 0.0)

    u, s, _ = np.linalg.svd(ppmi, full_matrices=False)
    # Directions with vanishing singular value are arbitrary basis fill; zero
    # them so identical PPMI rows map to identical embeddings.
    keep = s[:dim] > 1e-12 * max(s[0], 1.0)
    weights = np.where(keep, np.sqrt(s[:dim]), 0.0)
    rows = u[:, :dim] * weights
    return EmbeddingTable(
        dimension=dim, vectors={t: rows[index[t]].copy() for t in tags}
    )


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine similarity of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def lexical_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def _letters(s: str) -> str:
    return "".join(c for c in s if c.isalpha())


def is_abbreviation(
    short: str, full: str, max_ratio: float = DEFAULT_MAX_ABBREV_RATIO
) -> bool:
    """Ordered-subsequence abbreviation test ("ui" for "user interface")."""
    if len(short) >= len(full) or len(short) / len(full) > max_ratio:
        return False
    s, f = _letters(short), _letters(full)
    if not s or not f or s[0] != f[0]:
        return False
    it = iter(f)
    return all(c in it for c in s)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = self.parent.setdefault(x, x)
        while root != self.parent[root]:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Deterministic orientation: smaller string becomes the root.
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def components(self) -> list[set[str]]:
        groups: dict[str, set[str]] = {}
        for x in self.parent:
            groups.setdefault(self.find(x), set()).add(x)
        return list(groups.values())


def _classify_pair(a: str, b: str, cfg: NormalizeConfig) -> str | None:
    if lexical_similarity(a, b) >= cfg.theta_lex:
        return "synonym"
    if is_abbreviation(a, b, cfg.max_abbrev_ratio) or is_abbreviation(
        b, a, cfg.max_abbrev_ratio
    ):
        return "abbreviation"
    return None


def scan_similar_pairs(
    corpus: Corpus, emb: EmbeddingTable, cfg: NormalizeConfig
) -> list[MorphPair]:
    """All tag pairs passing the semantic filter and one of the form filters."""
    usable: dict[str, np.ndarray] = {}
    skipped: list[str] = []
    for tag in sorted(corpus.tag_frequency):
        vec = emb.vector_for_tag(tag)
        if vec is None or not np.linalg.norm(vec):
            skipped.append(tag)
        else:
            usable[tag] = vec
    if skipped:
        log.info(
            "skipping %d tags without usable embeddings: %s",
            len(skipped),
            ", ".join(skipped[:10]) + ("..." if len(skipped) > 10 else ""),
        )

    tags = list(usable)
    pairs: list[MorphPair] = []
    for i, a in enumerate(tags):
        for b in tags[i + 1 :]:
            cos = cosine_similarity(usable[a], usable[b])
            if cos < cfg.theta_sem:
                continue
            kind = _classify_pair(a, b, cfg)
            if kind is not None:
                pairs.append(MorphPair(a, b, kind, cos, lexical_similarity(a, b)))
    return pairs


def write_review_csv(pairs: list[MorphPair], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tag_a", "tag_b", "kind", "cosine", "lexsim"])
        for p in pairs:
            writer.writerow([p.tag_a, p.tag_b, p.kind, f"{p.cosine:.6f}", f"{p.lexsim:.6f}"])


def read_accept_list(path: str | Path) -> set[frozenset[str]]:
    """Review CSV with an extra keep column; rows marked keep survive."""
    accepted: set[frozenset[str]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if "keep" not in row:
                raise SchemaError(f"{path}: accept list needs a keep column")
            if row["keep"].strip().lower() in {"1", "true", "yes", "y"}:
                accepted.add(frozenset({row["tag_a"], row["tag_b"]}))
    return accepted


def extract_morphological_groups(
    corpus: Corpus,
    emb: EmbeddingTable,
    cfg: NormalizeConfig | None = None,
    review_path: str | Path | None = None,
    accept: set[frozenset[str]] | None = None,
) -> list[MorphGroup]:
    """Union matched pairs into groups, canonical = most frequent member.

    When `accept` is given (pairs approved during review), only those pairs
    are merged; otherwise every matched pair is.
    """
    cfg = cfg or NormalizeConfig()
    pairs = scan_similar_pairs(corpus, emb, cfg)
    if review_path is not None:
        write_review_csv(pairs, review_path)
    if accept is not None:
        pairs = [p for p in pairs if frozenset({p.tag_a, p.tag_b}) in accept]

    uf = _UnionFind()
    pair_kind: dict[frozenset[str], str] = {}
    for p in pairs:
        uf.union(p.tag_a, p.tag_b)
        pair_kind[frozenset({p.tag_a, p.tag_b})] = p.kind

    freq = corpus.tag_frequency
    groups: list[MorphGroup] = []
    for component in uf.components():
        if len(component) < 2:
            continue
        canonical = min(component, key=lambda t: (-freq.get(t, 0), t))
        variants = sorted(component - {canonical})
        kinds: dict[str, str] = {}
        for v in variants:
            direct = pair_kind.get(frozenset({v, canonical}))
            if direct is None:
                # Transitive member: fall back to its first recorded link.
                direct = next(
                    pair_kind[frozenset({v, other})]
                    for other in sorted(component)
                    if frozenset({v, other}) in pair_kind
                )
            kinds[v] = direct
        groups.append(
            MorphGroup(canonical=canonical, variants=frozenset(variants), kinds=kinds)
        )
    groups.sort(key=lambda g: g.canonical)
    return groups


def canonicalize(corpus: Corpus, groups: list[MorphGroup]) -> Corpus:
    """Rewrite every design's canonical_tags by replacing variants."""
    seen: set[str] = set()
    mapping: dict[str, str] = {}
    for group in groups:
        for member in group.members:
            if member in seen:
                raise SchemaError(f"tag {member!r} appears in two morph groups")
            seen.add(member)
        for variant in group.variants:
            mapping[variant] = group.canonical

    rewritten = [
        replace(d, canonical_tags=clean_tags([mapping.get(t, t) for t in d.raw_tags]))
        for d in corpus.designs
    ]
    return build_corpus(rewritten)
