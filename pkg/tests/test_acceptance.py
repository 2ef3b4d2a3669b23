"""Acceptance gate: one test per shipping criterion, each ending in a PASS line.

Every criterion is checked against an independent oracle or a frozen
quantitative floor on the bundled synthetic corpus; tolerances are stated
inline where they apply.
"""

import itertools
import time
from dataclasses import replace

import numpy as np
import pytest

from tagsense import learn, synthetic
from tagsense.cli import main
from tagsense.corpus import Corpus, Design, build_corpus, load_default_taxonomy
from tagsense.evalharness import harvest_predictions
from tagsense.fusion import prepare_tag_dataset, train_tag_classifier
from tagsense.index import build_index, mann_whitney_u, search
from tagsense.normalize import (
    MorphGroup,
    canonicalize,
    extract_morphological_groups,
    load_embeddings,
    train_cooccurrence_embeddings,
)
from tagsense.tagmine import (
    AssociationRule,
    MiningConfig,
    TagGraph,
    louvain_with_trace,
    mine_pair_rules,
    modularity,
)


def _report(criterion: str, detail: str) -> None:
    print(f"PASS {criterion}: {detail}")


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance-corpus")
    return synthetic.generate_corpus(root, n_classifier=900, seed=0)


@pytest.fixture(scope="module")
def embeddings(synth):
    return load_embeddings(synth.embeddings_path, set(synth.corpus.tag_frequency))


@pytest.fixture(scope="module")
def red_dataset(synth, embeddings):
    return prepare_tag_dataset(
        synth.corpus,
        load_default_taxonomy(),
        "red",
        embeddings,
        min_freq=50,
        seed=0,
        image_root=synth.root,
    )


# ---------------------------------------------------------------------------
# criterion 1: pair mining equals brute force


def _random_tag_corpus(rng: np.random.Generator) -> Corpus:
    pool = [f"t{i}" for i in range(10)] + ["ui", "app design"]
    vocab = [pool[i] for i in rng.choice(len(pool), size=int(rng.integers(2, 11)), replace=False)]
    designs = []
    for i in range(int(rng.integers(1, 13))):
        k = int(rng.integers(1, min(len(vocab), 6) + 1))
        tags = [vocab[j] for j in rng.choice(len(vocab), size=k, replace=False)]
        designs.append(Design(id=f"d{i}", image_path=f"d{i}.png", raw_tags=tuple(sorted(tags))))
    return build_corpus(designs)


def _brute_force_rules(corpus: Corpus, cfg: MiningConfig) -> list[AssociationRule]:
    n = len(corpus)
    tagsets = [set(d.raw_tags) - cfg.exclude_tags for d in corpus.designs]
    tags = sorted(set().union(*tagsets)) if tagsets else []
    rules = []
    for a in tags:
        for b in tags:
            if a == b:
                continue
            both = sum(1 for ts in tagsets if a in ts and b in ts)
            n_a = sum(1 for ts in tagsets if a in ts)
            support = both / n
            if support < cfg.t_sup:
                continue
            confidence = both / n_a
            if confidence >= cfg.t_conf:
                rules.append(AssociationRule(a, b, support, confidence))
    rules.sort(key=lambda r: (-r.support, r.antecedent, r.consequent))
    return rules


def test_mining_matches_brute_force_on_200_random_corpora():
    rng = np.random.default_rng(1234)
    started = time.perf_counter()
    for trial in range(200):
        corpus = _random_tag_corpus(rng)
        cfg = MiningConfig(
            t_sup=float(rng.choice([0.001, 0.1, 0.25, 0.5])),
            t_conf=float(rng.choice([0.2, 0.5, 0.9])),
        )
        assert mine_pair_rules(corpus, cfg) == _brute_force_rules(corpus, cfg), (
            f"trial {trial} diverged from enumeration"
        )
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"mining oracle took {elapsed:.2f}s, budget is 5s"
    _report("mining-oracle", f"200 random corpora match enumeration exactly in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# criterion 2: community detection


def test_louvain_bridged_triangles_and_monotone_passes():
    edges = {
        frozenset(e): 1.0
        for e in [("a", "b"), ("b", "c"), ("a", "c"),
                  ("d", "e"), ("e", "f"), ("d", "f"),
                  ("c", "d")]
    }
    graph = TagGraph(nodes={t: 1 for t in "abcdef"}, edges=edges)
    result = louvain_with_trace(graph, seed=0)
    q = modularity(graph, result.partition)
    assert abs(q - 5.0 / 14.0) <= 1e-9
    found = {frozenset(c) for c in result.partition.communities().values()}
    assert found == {frozenset("abc"), frozenset("def")}

    rng = np.random.default_rng(99)
    for trial in range(50):
        n = int(rng.integers(4, 31))
        nodes = [f"n{i}" for i in range(n)]
        random_edges = {
            frozenset((nodes[i], nodes[j])): 1.0
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.15
        }
        if not random_edges:
            random_edges = {frozenset((nodes[0], nodes[1])): 1.0}
        trace = louvain_with_trace(
            TagGraph(nodes={t: 1 for t in nodes}, edges=random_edges), seed=trial
        ).pass_modularity
        for before, after in zip(trace, trace[1:]):
            assert after >= before - 1e-12, f"trial {trial}: Q dropped {before} -> {after}"
    _report("louvain", "planted partition at Q=5/14; 50 random graphs keep Q non-decreasing")


# ---------------------------------------------------------------------------
# criterion 3: morphological normalization


def test_normalization_recovers_families_without_cross_merges(synth):
    corpus = synth.corpus
    emb = train_cooccurrence_embeddings(corpus, dim=32, seed=0)
    groups = extract_morphological_groups(corpus, emb)

    family_members = {
        name: frozenset({name, *variants})
        for name, variants in synthetic.MORPH_FAMILIES.items()
    }
    owner = {tag: name for name, members in family_members.items() for tag in members}

    recovered = sum(
        1
        for members in family_members.values()
        if any(g.members == members for g in groups)
    )
    cross_merges = [
        sorted(g.members)
        for g in groups
        if len({owner[t] for t in g.members if t in owner}) > 1
    ]
    assert not cross_merges, f"groups spanning families: {cross_merges}"
    assert recovered >= 9, f"only {recovered}/10 families recovered"
    _report(
        "normalization",
        f"{recovered}/10 families recovered, 0 cross-family merges at default thresholds",
    )


def test_canonicalize_is_idempotent_on_random_corpora():
    rng = np.random.default_rng(77)
    pool = [
        "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
        "landing page", "landingpage", "sign up", "signup", "ecommerce",
        "e-commerce", "travel", "travelling", "minimal", "minimalistic",
    ]
    for trial in range(100):
        designs = []
        for i in range(int(rng.integers(5, 16))):
            k = int(rng.integers(1, 6))
            tags = [pool[j] for j in rng.choice(len(pool), size=k, replace=False)]
            designs.append(Design(id=f"d{i}", image_path=f"d{i}.png", raw_tags=tuple(tags)))
        corpus = build_corpus(designs)

        shuffled = [pool[j] for j in rng.permutation(len(pool))]
        groups, cursor = [], 0
        for _ in range(int(rng.integers(0, 4))):
            size = int(rng.integers(2, 4))
            chunk = shuffled[cursor : cursor + size]
            cursor += size
            groups.append(MorphGroup(canonical=chunk[0], variants=frozenset(chunk[1:])))

        once = canonicalize(corpus, groups)
        promoted = build_corpus(
            [replace(d, raw_tags=d.canonical_tags, canonical_tags=None) for d in once.designs]
        )
        twice = canonicalize(promoted, groups)
        assert [d.canonical_tags for d in twice.designs] == [
            d.canonical_tags for d in once.designs
        ], f"trial {trial}: canonical tags moved on the second application"
    _report("canonicalize", "idempotent on 100 random corpora with random morph groups")


# ---------------------------------------------------------------------------
# criterion 4: gradient correctness


def _layer_probe_specs(seed: int) -> list[tuple[str, learn.ModelSpec]]:
    return [
        ("conv", learn.ModelSpec(
            input_shapes=((2, 6, 6),),
            branches=((learn.conv(3, 3), learn.flatten()),),
            head=(learn.dense(1), learn.sigmoid()),
            seed=seed,
        )),
        ("maxpool", learn.ModelSpec(
            input_shapes=((2, 6, 6),),
            branches=((learn.maxpool(), learn.flatten()),),
            head=(learn.dense(1), learn.sigmoid()),
            seed=seed,
        )),
        ("relu", learn.ModelSpec(
            input_shapes=((3, 4, 4),),
            branches=((learn.flatten(), learn.dense(6), learn.relu()),),
            head=(learn.dense(1), learn.sigmoid()),
            seed=seed,
        )),
        ("dense", learn.ModelSpec(
            input_shapes=((1, 5, 5),),
            branches=((learn.flatten(), learn.dense(4)),),
            head=(learn.dense(1), learn.sigmoid()),
            seed=seed,
        )),
        ("fused", learn.fused_model_spec(seed)),
    ]


def _max_relative_error(model: learn.Model, inputs: list[np.ndarray], rng, sample_cap: int) -> float:
    p = learn.forward(model, inputs)
    score_grads = learn.score_gradients(model, inputs)
    h = 1e-6
    worst = 0.0
    for branch, x in enumerate(inputs):
        # The sigmoid layer's derivative enters through the p(1-p) factor.
        analytic = p * (1.0 - p) * score_grads[branch]
        flat_size = x.size
        if flat_size <= sample_cap:
            picks = np.arange(flat_size)
        else:
            picks = rng.choice(flat_size, size=sample_cap, replace=False)
        for flat in picks:
            idx = np.unravel_index(int(flat), x.shape)
            plus = [a.copy() for a in inputs]
            minus = [a.copy() for a in inputs]
            plus[branch][idx] += h
            minus[branch][idx] -= h
            fd = (learn.forward(model, plus) - learn.forward(model, minus)) / (2.0 * h)
            err = abs(analytic[idx] - fd) / max(abs(fd), 1e-8)
            worst = max(worst, float(err))
    return worst


def test_gradients_match_central_differences():
    started = time.perf_counter()
    overall = 0.0
    for seed in (0, 1, 2):
        rng = np.random.default_rng(1000 + seed)
        for name, spec in _layer_probe_specs(seed):
            model = learn.build_model(spec)
            inputs = [rng.normal(0.4, 0.3, size=shape) for shape in spec.input_shapes]
            cap = 48 if name == "fused" else 10**9
            worst = _max_relative_error(model, inputs, rng, cap)
            assert worst < 1e-4, f"{name} seed {seed}: max relative error {worst:.2e}"
            overall = max(overall, worst)
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"gradient check took {elapsed:.1f}s, budget is 30s"
    _report(
        "gradients",
        f"max relative error {overall:.2e} over conv/maxpool/relu/dense/sigmoid and "
        f"the fused model, seeds 0-2, in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criteria 5 and 6: learning sanity, exact balance, chance level


def test_learning_sanity_suite(red_dataset):
    started = time.perf_counter()
    ratios = learn.SplitRatios(0.8, 0.1, 0.1)
    cfg = learn.TrainConfig(learning_rate=2e-3, epochs=15, batch_size=16, seed=0)

    scores = {}
    for variant in ("fused", "image-only", "tag-only"):
        scores[variant] = train_tag_classifier(
            red_dataset, ratios, cfg, variant=variant
        ).report.test_accuracy

    assert scores["fused"] >= 0.90, f"fused test accuracy {scores['fused']:.3f} < 0.90"
    assert scores["image-only"] >= 0.75, f"image-only {scores['image-only']:.3f} < 0.75"
    assert scores["tag-only"] >= 0.75, f"tag-only {scores['tag-only']:.3f} < 0.75"
    assert scores["fused"] >= max(scores["image-only"], scores["tag-only"])

    # Shuffled-label control: shorter schedule, larger test share, per-seed permutation.
    samples = red_dataset.samples()
    labels = [label for _, label in samples]
    control_ratios = learn.SplitRatios(0.3, 0.1, 0.6)
    shuffled_accuracies = []
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(len(samples))
        shuffled = [(inputs, labels[perm[i]]) for i, (inputs, _) in enumerate(samples)]
        train_s, val_s, test_s = learn.split_dataset(shuffled, control_ratios, seed)
        control_cfg = learn.TrainConfig(learning_rate=2e-3, epochs=3, batch_size=16, seed=seed)
        result = learn.train(
            learn.build_model(learn.fused_model_spec(seed)), train_s, control_cfg,
            validation=val_s,
        )
        shuffled_accuracies.append(learn.accuracy(result.model, test_s))

    for seed, acc in enumerate(shuffled_accuracies):
        assert 0.42 <= acc <= 0.58, (
            f"shuffled control seed {seed} reached {acc:.3f}, outside 0.5±0.08"
        )
    elapsed = time.perf_counter() - started
    assert elapsed < 180.0, f"learning suite took {elapsed:.0f}s, budget is 3 minutes"
    _report(
        "learning-sanity",
        f"fused {scores['fused']:.3f}, image-only {scores['image-only']:.3f}, "
        f"tag-only {scores['tag-only']:.3f}; shuffled controls "
        f"{[round(a, 3) for a in shuffled_accuracies]} in {elapsed:.0f}s",
    )


def test_datasets_balanced_and_constant_prediction_is_chance(red_dataset):
    assert len(red_dataset.positives) == len(red_dataset.negatives)
    samples = red_dataset.samples()
    assert sum(label for _, label in samples) * 2 == len(samples)

    model = learn.build_model(learn.fused_model_spec(0))
    for param in model.params:
        param[...] = 0.0
    chance = learn.accuracy(model, samples)
    assert chance == 0.5, f"constant predictor scored {chance}, expected exactly 0.5"
    _report(
        "balance",
        f"{len(red_dataset.positives)}+{len(red_dataset.negatives)} samples balanced; "
        "zeroed model scores exactly 0.5",
    )


# ---------------------------------------------------------------------------
# criterion 7: retrieval superset law and strict gains


def test_retrieval_superset_law_and_strict_gains(synth):
    corpus = synth.corpus
    emb = train_cooccurrence_embeddings(corpus, dim=32, seed=0)
    groups = extract_morphological_groups(corpus, emb)
    raw = build_index(corpus)
    augmented = build_index(corpus, groups, harvest_predictions(corpus))

    strict = 0
    for query in synthetic.RETRIEVAL_QUERIES:
        control = set(search(raw, list(query)))
        experimental = set(search(augmented, list(query)))
        assert control <= experimental, f"superset law broken for {query}"
        strict += len(experimental) > len(control)
    assert strict >= 4, f"strict count gains on only {strict}/5 queries"

    rng = np.random.default_rng(4242)
    pool = [f"t{i}" for i in range(6)]
    for trial in range(20):
        designs = []
        for i in range(int(rng.integers(3, 10))):
            k = int(rng.integers(1, 4))
            tags = [pool[j] for j in rng.choice(len(pool), size=k, replace=False)]
            designs.append(Design(id=f"d{i}", image_path="x.png", raw_tags=tuple(tags)))
        mini = build_corpus(designs)
        predictions = {
            d.id: [(pool[int(rng.integers(0, len(pool)))], float(rng.uniform(0.5, 1.0)))]
            for d in designs
            if rng.random() < 0.5
        }
        mini_raw = build_index(mini)
        mini_aug = build_index(mini, None, predictions or None)
        for query in [[t] for t in pool] + [[pool[0], pool[1]]]:
            assert set(search(mini_raw, query)) <= set(search(mini_aug, query)), (
                f"trial {trial}: superset law broken for {query}"
            )
    _report(
        "retrieval-superset",
        f"augmented ⊇ raw everywhere; strict gains on {strict}/5 benchmark queries",
    )


# ---------------------------------------------------------------------------
# criterion 8: exact Mann-Whitney p values


def _enumerated_p(a: list[int], b: list[int]) -> float:
    pooled = sorted(a + b)
    ranks: dict[float, float] = {}
    position = 1
    index = 0
    while index < len(pooled):
        tied = [j for j in range(index, len(pooled)) if pooled[j] == pooled[index]]
        mean_rank = (position + position + len(tied) - 1) / 2.0
        ranks[pooled[index]] = mean_rank
        position += len(tied)
        index += len(tied)
    pooled_ranks = [ranks[v] for v in pooled]

    n_a, n_b = len(a), len(b)
    observed_sum = sum(ranks[v] for v in a)
    observed_u = min(
        observed_sum - n_a * (n_a + 1) / 2.0,
        n_a * n_b - (observed_sum - n_a * (n_a + 1) / 2.0),
    )
    hits = total = 0
    for combo in itertools.combinations(range(len(pooled)), n_a):
        rank_sum = sum(pooled_ranks[i] for i in combo)
        u_a = rank_sum - n_a * (n_a + 1) / 2.0
        if min(u_a, n_a * n_b - u_a) <= observed_u + 1e-9:
            hits += 1
        total += 1
    return hits / total


def _pair_count_u(a: list[int], b: list[int]) -> float:
    u_a = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)
    return min(u_a, len(a) * len(b) - u_a)


def test_mann_whitney_exact_matches_full_enumeration():
    values = range(4)
    checked = 0
    for n_a in range(1, 8):
        for n_b in range(1, 8 - n_a + 1):
            for a in itertools.combinations_with_replacement(values, n_a):
                for b in itertools.combinations_with_replacement(values, n_b):
                    u, p = mann_whitney_u(list(a), list(b))
                    assert u == _pair_count_u(list(a), list(b)), f"U mismatch on {a} vs {b}"
                    oracle = _enumerated_p(list(a), list(b))
                    assert abs(p - oracle) <= 1e-12, (
                        f"p mismatch on {a} vs {b}: {p} != {oracle}"
                    )
                    checked += 1
    _report("mann-whitney", f"exact p equals enumeration on all {checked} sample pairs (n<=8)")


# ---------------------------------------------------------------------------
# criterion 9: deterministic evaluation reports


def test_eval_accuracy_reports_are_byte_identical(synth, tmp_path):
    ws = tmp_path / "ws"
    assert main(["ingest", str(synth.corpus_path), "--out", str(ws)]) == 0
    args = [
        "eval", "accuracy", "--tags", "red,blue", "--methods", "histo+svm,histo+dt",
        "--min-freq", "50", "--seed", "7", "--out", str(ws),
    ]
    assert main(args) == 0
    first = (ws / "eval" / "accuracy.json").read_bytes()
    assert main(args) == 0
    second = (ws / "eval" / "accuracy.json").read_bytes()
    assert first == second
    _report("determinism", f"accuracy report stable across runs ({len(first)} bytes)")
