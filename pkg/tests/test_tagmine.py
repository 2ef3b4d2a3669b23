import itertools
import json

import numpy as np
import pytest

from tagsense.corpus import Corpus, Design, build_corpus
from tagsense.errors import MiningError
from tagsense.tagmine import (
    AssociationRule,
    MiningConfig,
    Partition,
    TagGraph,
    build_tag_graph,
    graph_to_edge_list,
    graph_to_json,
    louvain,
    louvain_with_trace,
    mine_pair_rules,
    modularity,
)


def corpus_of(*tag_sets):
    designs = [
        Design(id=f"d{i}", image_path=f"d{i}.png", raw_tags=tuple(tags))
        for i, tags in enumerate(tag_sets)
    ]
    return build_corpus(designs)


def brute_force_rules(tag_sets, t_sup, t_conf, exclude=frozenset()):
    """Independent enumerator: check every ordered tag pair directly."""
    sets = [frozenset(t for t in tags if t not in exclude) for tags in tag_sets]
    n = len(sets)
    tags = sorted(set().union(*sets)) if sets else []
    rules = []
    for t1, t2 in itertools.permutations(tags, 2):
        both = sum(1 for s in sets if t1 in s and t2 in s)
        antecedent = sum(1 for s in sets if t1 in s)
        if antecedent == 0 or both == 0:
            continue
        support = both / n
        confidence = both / antecedent
        if support >= t_sup and confidence >= t_conf:
            rules.append((t1, t2, support, confidence))
    rules.sort(key=lambda r: (-r[2], r[0], r[1]))
    return rules


def as_tuples(rules):
    return [(r.antecedent, r.consequent, r.support, r.confidence) for r in rules]


class TestMinePairRules:
    CFG = MiningConfig(t_sup=0.4, t_conf=0.6, exclude_tags=frozenset())

    def test_four_design_example(self):
        corpus = corpus_of({"a", "b"}, {"a", "b"}, {"a", "c"}, {"b", "c"})
        rules = mine_pair_rules(corpus, self.CFG)
        assert as_tuples(rules) == [
            ("a", "b", 0.5, 2 / 3),
            ("b", "a", 0.5, 2 / 3),
        ]
        assert as_tuples(rules) == brute_force_rules(
            [{"a", "b"}, {"a", "b"}, {"a", "c"}, {"b", "c"}], 0.4, 0.6
        )

    def test_confidence_cut(self):
        corpus = corpus_of({"a", "b"}, {"a", "b"}, {"a", "c"}, {"b", "c"})
        cfg = MiningConfig(t_sup=0.4, t_conf=0.7, exclude_tags=frozenset())
        assert mine_pair_rules(corpus, cfg) == []

    def test_single_design_everything_is_one(self):
        corpus = corpus_of({"x", "y"})
        cfg = MiningConfig(t_sup=1.0, t_conf=1.0, exclude_tags=frozenset())
        rules = mine_pair_rules(corpus, cfg)
        assert as_tuples(rules) == [("x", "y", 1.0, 1.0), ("y", "x", 1.0, 1.0)]

    def test_empty_corpus_rejected(self):
        with pytest.raises(MiningError):
            mine_pair_rules(Corpus(designs=(), tag_frequency={}), self.CFG)

    def test_excluded_tags_never_appear(self):
        corpus = corpus_of({"ui", "a", "b"}, {"ui", "a", "b"})
        cfg = MiningConfig(t_sup=0.5, t_conf=0.5)
        rules = mine_pair_rules(corpus, cfg)
        assert all("ui" not in (r.antecedent, r.consequent) for r in rules)

    def test_matches_brute_force_on_random_corpora(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n_designs = int(rng.integers(1, 13))
            vocab = [f"t{i}" for i in range(int(rng.integers(2, 11)))]
            tag_sets = []
            for _ in range(n_designs):
                k = int(rng.integers(1, min(6, len(vocab)) + 1))
                tag_sets.append(set(rng.choice(vocab, size=k, replace=False)))
            t_sup = float(rng.uniform(0.05, 0.7))
            t_conf = float(rng.uniform(0.1, 0.9))
            corpus = corpus_of(*tag_sets)
            cfg = MiningConfig(t_sup=t_sup, t_conf=t_conf, exclude_tags=frozenset())
            assert as_tuples(mine_pair_rules(corpus, cfg)) == brute_force_rules(
                tag_sets, t_sup, t_conf
            )

    def test_raising_thresholds_never_adds_rules(self):
        corpus = corpus_of({"a", "b", "c"}, {"a", "b"}, {"b", "c"}, {"a", "c"}, {"a"})
        base = MiningConfig(t_sup=0.1, t_conf=0.1, exclude_tags=frozenset())
        loose = set(as_tuples(mine_pair_rules(corpus, base)))
        for t_sup, t_conf in [(0.3, 0.1), (0.1, 0.5), (0.5, 0.7)]:
            cfg = MiningConfig(t_sup=t_sup, t_conf=t_conf, exclude_tags=frozenset())
            assert set(as_tuples(mine_pair_rules(corpus, cfg))) <= loose

    def test_rule_invariant_support_le_confidence(self):
        corpus = corpus_of({"a", "b"}, {"a", "b"}, {"a", "c"}, {"b", "c"}, {"c"})
        cfg = MiningConfig(t_sup=0.1, t_conf=0.1, exclude_tags=frozenset())
        for rule in mine_pair_rules(corpus, cfg):
            assert 0 < rule.support <= rule.confidence <= 1


class TestBuildTagGraph:
    def test_edge_keeps_max_confidence(self):
        corpus = corpus_of({"a", "b"})
        rules = [
            AssociationRule("a", "b", 0.5, 0.9),
            AssociationRule("b", "a", 0.5, 0.4),
        ]
        graph = build_tag_graph(rules, corpus)
        assert graph.edges == {frozenset({"a", "b"}): 0.9}

    def test_empty_rules_empty_graph(self):
        graph = build_tag_graph([], corpus_of({"a"}))
        assert graph.nodes == {} and graph.edges == {}

    def test_path_of_three(self):
        corpus = corpus_of({"a", "b"}, {"b", "c"})
        rules = [
            AssociationRule("a", "b", 0.5, 1.0),
            AssociationRule("b", "c", 0.5, 0.5),
        ]
        graph = build_tag_graph(rules, corpus)
        assert set(graph.nodes) == {"a", "b", "c"}
        assert len(graph.edges) == 2
        assert graph.nodes["b"] == 2  # corpus frequency attribute

    def test_direction_reversal_invariance(self):
        corpus = corpus_of({"a", "b"}, {"a", "c"})
        forward = [
            AssociationRule("a", "b", 0.5, 0.7),
            AssociationRule("b", "a", 0.5, 0.3),
            AssociationRule("a", "c", 0.5, 0.6),
        ]
        reversed_rules = [
            AssociationRule("b", "a", 0.5, 0.7),
            AssociationRule("a", "b", 0.5, 0.3),
            AssociationRule("c", "a", 0.5, 0.6),
        ]
        assert build_tag_graph(forward, corpus) == build_tag_graph(reversed_rules, corpus)


def graph_from_edges(edges):
    nodes = {}
    for a, b in edges:
        nodes[a] = nodes.get(a, 0)
        nodes[b] = nodes.get(b, 0)
    return TagGraph(nodes=nodes, edges={frozenset(e): 1.0 for e in edges})


TRIANGLES = [("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]
BRIDGED = TRIANGLES + [("c", "d")]


def all_partitions(nodes):
    """Enumerate every partition of a small node set (Bell-number growth)."""
    nodes = list(nodes)
    if not nodes:
        yield []
        return
    first, rest = nodes[0], nodes[1:]
    for partial in all_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [partial[i] | {first}] + partial[i + 1 :]
        yield partial + [{first}]


def best_partition_by_enumeration(graph):
    best_q, best = -1.0, None
    for blocks in all_partitions(graph.nodes):
        assignment = {tag: i for i, block in enumerate(blocks) for tag in block}
        q = modularity(graph, Partition(assignment=assignment))
        if q > best_q:
            best_q, best = q, blocks
    return best_q, best


class TestModularity:
    def test_two_disjoint_triangles(self):
        graph = graph_from_edges(TRIANGLES)
        partition = Partition({"a": 0, "b": 0, "c": 0, "d": 1, "e": 1, "f": 1})
        assert modularity(graph, partition) == pytest.approx(0.5, abs=1e-12)

    def test_bridged_triangles(self):
        graph = graph_from_edges(BRIDGED)
        partition = Partition({"a": 0, "b": 0, "c": 0, "d": 1, "e": 1, "f": 1})
        assert modularity(graph, partition) == pytest.approx(5 / 14, abs=1e-12)
        best_q, _ = best_partition_by_enumeration(graph)
        assert best_q == pytest.approx(5 / 14, abs=1e-12)

    def test_single_community_is_zero(self):
        graph = graph_from_edges(BRIDGED)
        partition = Partition({t: 0 for t in graph.nodes})
        assert modularity(graph, partition) == pytest.approx(0.0, abs=1e-12)

    def test_zero_edges_rejected(self):
        graph = TagGraph(nodes={"a": 1}, edges={})
        with pytest.raises(MiningError):
            modularity(graph, Partition({"a": 0}))

    def test_uncovered_node_rejected(self):
        graph = graph_from_edges([("a", "b")])
        with pytest.raises(MiningError):
            modularity(graph, Partition({"a": 0}))


class TestLouvain:
    def test_two_disjoint_triangles(self):
        graph = graph_from_edges(TRIANGLES)
        partition = louvain(graph, seed=0)
        groups = sorted(sorted(g) for g in partition.communities().values())
        assert groups == [["a", "b", "c"], ["d", "e", "f"]]

    def test_bridged_triangles(self):
        graph = graph_from_edges(BRIDGED)
        partition = louvain(graph, seed=0)
        groups = sorted(sorted(g) for g in partition.communities().values())
        assert groups == [["a", "b", "c"], ["d", "e", "f"]]
        assert modularity(graph, partition) == pytest.approx(5 / 14, abs=1e-9)

    def test_complete_graph_single_community(self):
        edges = list(itertools.combinations("abcd", 2))
        graph = graph_from_edges(edges)
        partition = louvain(graph, seed=0)
        assert len(partition.communities()) == 1

    def test_beats_singletons_and_monotone_trace(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(4, 31))
            nodes = [f"n{i}" for i in range(n)]
            edges = set()
            for a, b in itertools.combinations(range(n), 2):
                if rng.random() < 0.15:
                    edges.add((nodes[a], nodes[b]))
            if not edges:
                edges.add((nodes[0], nodes[1]))
            graph = graph_from_edges(sorted(edges))
            result = louvain_with_trace(graph, seed=int(rng.integers(0, 100)))
            trace = result.pass_modularity
            assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
            singleton = Partition({t: i for i, t in enumerate(graph.nodes)})
            assert modularity(graph, result.partition) >= modularity(graph, singleton)

    def test_deterministic_for_fixed_seed(self):
        graph = graph_from_edges(BRIDGED)
        assert louvain(graph, seed=5) == louvain(graph, seed=5)

    def test_zero_edges_rejected(self):
        with pytest.raises(MiningError):
            louvain(TagGraph(nodes={"a": 1}, edges={}), seed=0)

    def test_dense_community_ids(self):
        graph = graph_from_edges(BRIDGED)
        partition = louvain(graph, seed=1)
        ids = set(partition.assignment.values())
        assert ids == set(range(len(ids)))


class TestExports:
    def test_edge_list_format(self):
        graph = graph_from_edges([("b", "a")])
        assert graph_to_edge_list(graph) == "a\tb\t1.000000\n"

    def test_json_export_round_trips(self):
        graph = graph_from_edges(TRIANGLES)
        payload = json.loads(graph_to_json(graph, louvain(graph, seed=0)))
        assert len(payload["nodes"]) == 6
        assert len(payload["edges"]) == 6
        assert {"community" in n for n in payload["nodes"]} == {True}
