"""Pairwise tag association mining, the tag landscape graph, and community detection."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import MiningError

DEFAULT_EXCLUDE_TAGS = frozenset(
    {"ui", "ux", "user interface", "app design", "website design"}
)


@dataclass(frozen=True)
class MiningConfig:
    t_sup: float = 0.001
    t_conf: float = 0.2
    exclude_tags: frozenset[str] = DEFAULT_EXCLUDE_TAGS

    def __post_init__(self) -> None:
        if not 0.0 < self.t_sup <= 1.0:
            raise MiningError(f"t_sup must lie in (0, 1], got {self.t_sup}")
        if not 0.0 < self.t_conf <= 1.0:
            raise MiningError(f"t_conf must lie in (0, 1], got {self.t_conf}")


@dataclass(frozen=True)
class AssociationRule:
    antecedent: str
    consequent: str
    support: float
    confidence: float


@dataclass(frozen=True)
class TagGraph:
    """Undirected tag graph; edge confidence is the max of the directed rules."""

    nodes: dict[str, int]  # tag -> corpus frequency
    edges: dict[frozenset[str], float]  # {t1, t2} -> confidence

    def neighbors(self) -> dict[str, set[str]]:
        adjacency: dict[str, set[str]] = {tag: set() for tag in self.nodes}
        for edge in self.edges:
            a, b = sorted(edge)
            adjacency[a].add(b)
            adjacency[b].add(a)
        return adjacency


@dataclass(frozen=True)
class Partition:
    assignment: dict[str, int]

    def communities(self) -> dict[int, set[str]]:
        groups: dict[int, set[str]] = defaultdict(set)
        for tag, community in self.assignment.items():
            groups[community].add(tag)
        return dict(groups)


def mine_pair_rules(corpus: Corpus, cfg: MiningConfig) -> list[AssociationRule]:
    """All directed pair rules meeting the support and confidence thresholds.

    support(t1, t2) = |designs tagged with both| / |designs|;
    confidence(t1 => t2) = support(t1, t2) / support(t1).
    """
    n = len(corpus)
    if n == 0:
        raise MiningError("cannot mine an empty corpus")

    tag_count: Counter[str] = Counter()
    pair_count: Counter[tuple[str, str]] = Counter()
    for design in corpus.designs:
        tags = sorted(set(design.raw_tags) - cfg.exclude_tags)
        tag_count.update(tags)
        pair_count.update(combinations(tags, 2))

    rules = []
    for (t1, t2), both in pair_count.items():
        support = both / n
        if support < cfg.t_sup:
            continue
        for antecedent, consequent in ((t1, t2), (t2, t1)):
            confidence = both / tag_count[antecedent]
            if confidence >= cfg.t_conf:
                rules.append(
                    AssociationRule(
                        antecedent=antecedent,
                        consequent=consequent,
                        support=support,
                        confidence=confidence,
                    )
                )
    rules.sort(key=lambda r: (-r.support, r.antecedent, r.consequent))
    return rules


def build_tag_graph(rules: list[AssociationRule], corpus: Corpus) -> TagGraph:
    """Collapse directed rules into undirected edges keeping the larger confidence."""
    edges: dict[frozenset[str], float] = {}
    nodes: dict[str, int] = {}
    for rule in rules:
        key = frozenset((rule.antecedent, rule.consequent))
        edges[key] = max(edges.get(key, 0.0), rule.confidence)
        for tag in (rule.antecedent, rule.consequent):
            nodes.setdefault(tag, corpus.tag_frequency.get(tag, 0))
    return TagGraph(nodes=nodes, edges=edges)


def modularity(graph: TagGraph, partition: Partition) -> float:
    """Unweighted modularity Q of a partition over the tag graph."""
    m = len(graph.edges)
    if m == 0:
        raise MiningError("modularity is undefined on a graph with no edges")
    missing = set(graph.nodes) - set(partition.assignment)
    if missing:
        raise MiningError(f"partition does not cover nodes: {sorted(missing)}")

    degree: Counter[str] = Counter()
    intra: Counter[int] = Counter()
    for edge in graph.edges:
        a, b = sorted(edge)
        degree[a] += 1
        degree[b] += 1
        if partition.assignment[a] == partition.assignment[b]:
            intra[partition.assignment[a]] += 1

    community_degree: Counter[int] = Counter()
    for tag in graph.nodes:
        community_degree[partition.assignment[tag]] += degree[tag]

    return sum(
        intra[c] / m - (community_degree[c] / (2 * m)) ** 2 for c in community_degree
    )


@dataclass(frozen=True)
class LouvainResult:
    partition: Partition
    pass_modularity: tuple[float, ...]  # Q after each completed pass


class _WorkGraph:
    """Weighted adjacency used internally across aggregation passes."""

    def __init__(self, n: int):
        self.n = n
        self.weights: list[dict[int, float]] = [dict() for _ in range(n)]
        self.self_loops = [0.0] * n

    def add_edge(self, a: int, b: int, w: float) -> None:
        if a == b:
            self.self_loops[a] += w
        else:
            self.weights[a][b] = self.weights[a].get(b, 0.0) + w
            self.weights[b][a] = self.weights[b].get(a, 0.0) + w

    def degree(self, v: int) -> float:
        return sum(self.weights[v].values()) + 2.0 * self.self_loops[v]

    def total_weight(self) -> float:
        m = sum(sum(ws.values()) for ws in self.weights) / 2.0
        return m + sum(self.self_loops)


def _one_pass(work: _WorkGraph, rng: np.random.Generator) -> list[int]:
    """Greedy local moves until no single move improves modularity.

    A node moves only on a strict modularity gain; among equally best
    improving targets the smallest community id wins (determinism).
    """
    m = work.total_weight()
    community = list(range(work.n))
    degrees = [work.degree(v) for v in range(work.n)]
    sigma_tot = list(degrees)

    order = np.arange(work.n)
    improved = True
    while improved:
        improved = False
        rng.shuffle(order)
        for v in order:
            v = int(v)
            own = community[v]
            k_v = degrees[v]
            links: dict[int, float] = defaultdict(float)
            for u, w in work.weights[v].items():
                links[community[u]] += w
            sigma_tot[own] -= k_v

            # Gain of joining community c once v is detached:
            # links[c]/m - sigma_tot[c]*k_v / (2*m^2)
            stay_gain = links.get(own, 0.0) / m - sigma_tot[own] * k_v / (2.0 * m * m)
            best_comm, best_gain = own, stay_gain
            for c in sorted(links):
                if c == own:
                    continue
                gain = links[c] / m - sigma_tot[c] * k_v / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_comm, best_gain = c, gain

            sigma_tot[best_comm] += k_v
            if best_comm != own:
                community[v] = best_comm
                improved = True
    return community


def _aggregate(work: _WorkGraph, community: list[int]) -> tuple[_WorkGraph, list[int]]:
    ids = sorted(set(community))
    remap = {c: i for i, c in enumerate(ids)}
    condensed = _WorkGraph(len(ids))
    for v in range(work.n):
        cv = remap[community[v]]
        condensed.self_loops[cv] += work.self_loops[v]
        for u, w in work.weights[v].items():
            if u < v:
                continue
            cu = remap[community[u]]
            condensed.add_edge(cv, cu, w)
    return condensed, [remap[c] for c in community]


def louvain_with_trace(graph: TagGraph, seed: int = 0) -> LouvainResult:
    """Two-phase greedy community detection over the unweighted tag graph."""
    if not graph.edges:
        raise MiningError("community detection needs a graph with at least one edge")

    tags = sorted(graph.nodes)
    idx = {tag: i for i, tag in enumerate(tags)}
    work = _WorkGraph(len(tags))
    for edge in graph.edges:
        a, b = sorted(edge)
        work.add_edge(idx[a], idx[b], 1.0)

    rng = np.random.default_rng(seed)
    membership = list(range(len(tags)))  # original node -> current community
    trace = []
    while True:
        before = work.n
        community = _one_pass(work, rng)
        merged = len(set(community)) < before
        work, community = _aggregate(work, community)
        membership = [community[c] for c in membership]
        assignment = {tag: membership[idx[tag]] for tag in tags}
        trace.append(modularity(graph, Partition(assignment=assignment)))
        if not merged or work.n == 1:
            break

    # Renumber communities densely, ordered by their lexicographically first tag.
    final = {tag: membership[idx[tag]] for tag in tags}
    first_member: dict[int, str] = {}
    for tag in tags:
        first_member.setdefault(final[tag], tag)
    order = sorted(first_member, key=first_member.get)
    dense = {c: i for i, c in enumerate(order)}
    return LouvainResult(
        partition=Partition(assignment={t: dense[c] for t, c in final.items()}),
        pass_modularity=tuple(trace),
    )


def louvain(graph: TagGraph, seed: int = 0) -> Partition:
    return louvain_with_trace(graph, seed).partition


def graph_to_json(graph: TagGraph, partition: Partition | None = None) -> str:
    """Node/edge list export for external visualization tools."""
    nodes = [
        {"tag": tag, "frequency": graph.nodes[tag]}
        | ({"community": partition.assignment[tag]} if partition else {})
        for tag in sorted(graph.nodes)
    ]
    edges = [
        {"source": a, "target": b, "confidence": conf}
        for (a, b), conf in sorted(
            (tuple(sorted(edge)), conf) for edge, conf in graph.edges.items()
        )
    ]
    return json.dumps({"nodes": nodes, "edges": edges}, indent=2, ensure_ascii=False)


def graph_to_edge_list(graph: TagGraph) -> str:
    lines = [
        f"{a}\t{b}\t{conf:.6f}"
        for (a, b), conf in sorted(
            (tuple(sorted(edge)), conf) for edge, conf in graph.edges.items()
        )
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_graph_exports(graph: TagGraph, out_dir: str | Path, partition: Partition | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tag_graph.json").write_text(graph_to_json(graph, partition), encoding="utf-8")
    (out / "tag_graph.tsv").write_text(graph_to_edge_list(graph), encoding="utf-8")
