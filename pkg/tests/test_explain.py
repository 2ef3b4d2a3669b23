"""Saliency and tag-attribution behavior, checked against direct gradients."""

import json

import numpy as np
import pytest
from PIL import Image

from tagsense import learn
from tagsense.errors import ShapeError
from tagsense.explain import (
    SaliencyGrid,
    explanation_payload,
    image_saliency,
    save_explanation_json,
    save_saliency_png,
    textual_attribution,
)
from tagsense.learn import (
    LayerSpec,
    Model,
    ModelSpec,
    build_model,
    conv,
    dense,
    flatten,
    forward_batch,
    maxpool,
    relu,
    sigmoid,
)


def small_fused_spec(seed=0):
    return ModelSpec(
        input_shapes=((3, 8, 8), (1, 6, 6)),
        branches=(
            (conv(2, 3), relu(), maxpool(), flatten()),
            (flatten(),),
        ),
        head=(dense(4), relu(), dense(1), sigmoid()),
        seed=seed,
    )


def rng_inputs(spec, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.normal(0.5, 0.4, size=s) for s in spec.input_shapes]


def presigmoid(model, inputs):
    """Score before the final sigmoid, for finite-difference oracles."""
    bare = ModelSpec(
        input_shapes=model.spec.input_shapes,
        branches=model.spec.branches,
        head=model.spec.head[:-1],
        seed=model.spec.seed,
    )
    return float(forward_batch(Model(bare, model.params), [x[None] for x in inputs])[0])


class TestImageSaliency:
    def test_zero_visual_weights_give_zero_grid(self):
        model = build_model(small_fused_spec())
        model.params[0][...] = 0.0  # conv weights
        model.params[1][...] = 0.0  # conv bias
        inputs = rng_inputs(model.spec)
        grid = image_saliency(model, inputs)
        assert grid.values.shape == (8, 8)
        assert np.all(grid.values == 0.0)

    def test_linear_model_matches_weight_pattern(self):
        spec = ModelSpec(
            input_shapes=((3, 4, 4),),
            branches=((flatten(),),),
            head=(dense(1), sigmoid()),
            seed=3,
        )
        model = build_model(spec)
        inputs = rng_inputs(spec, seed=1)
        grid = image_saliency(model, inputs)
        w = model.params[0][0].reshape(3, 4, 4)
        expected = np.abs(w).max(axis=0)
        expected /= expected.max()
        assert np.allclose(grid.values, expected, atol=1e-12)

    def test_matches_finite_differences(self):
        model = build_model(small_fused_spec(seed=1))
        inputs = rng_inputs(model.spec, seed=3)
        grid = image_saliency(model, inputs)
        assert grid.values.max() > 0  # relu path alive for this seed pair

        h = 1e-5
        fd = np.zeros((3, 8, 8))
        for c in range(3):
            for i in range(8):
                for j in range(8):
                    plus = [x.copy() for x in inputs]
                    minus = [x.copy() for x in inputs]
                    plus[0][c, i, j] += h
                    minus[0][c, i, j] -= h
                    fd[c, i, j] = (presigmoid(model, plus) - presigmoid(model, minus)) / (2 * h)
        oracle = np.abs(fd).max(axis=0)
        oracle /= oracle.max()
        assert np.allclose(grid.values, oracle, rtol=1e-3, atol=1e-8)

    def test_grid_peak_is_one(self):
        model = build_model(small_fused_spec(seed=4))
        grid = image_saliency(model, rng_inputs(model.spec, seed=2))
        assert grid.values.max() == pytest.approx(1.0)
        assert grid.values.min() >= 0.0

    def test_model_without_visual_input_rejected(self):
        model = build_model(learn.tag_only_spec())
        inputs = [np.zeros((1, 50, 50))]
        with pytest.raises(ShapeError, match="no visual input"):
            image_saliency(model, inputs)


class TestTextualAttribution:
    def test_top_k_sorted_descending(self):
        model = build_model(small_fused_spec(seed=1))
        inputs = rng_inputs(model.spec, seed=3)
        attr = textual_attribution(model, inputs, ["a", "b", "c", "d"], k=3)
        assert len(attr.entries) == 3
        scores = [s for _, s in attr.entries]
        assert scores == sorted(scores, reverse=True)
        assert {t for t, _ in attr.entries} <= {"a", "b", "c", "d"}

    def test_single_tag_design(self):
        model = build_model(small_fused_spec(seed=1))
        attr = textual_attribution(model, rng_inputs(model.spec), ["solo"])
        assert len(attr.entries) == 1
        assert attr.entries[0][0] == "solo"

    def test_zero_weights_order_by_name(self):
        model = build_model(small_fused_spec())
        for p in model.params:
            p[...] = 0.0
        attr = textual_attribution(model, rng_inputs(model.spec), ["pear", "apple", "fig"])
        assert [t for t, _ in attr.entries] == ["apple", "fig", "pear"]
        assert all(s == 0.0 for _, s in attr.entries)

    def test_tied_row_weights_give_equal_scores(self):
        # With the head reading rows 0 and 2 through identical weights, a
        # vector duplicated into both rows must score identically.
        spec = ModelSpec(
            input_shapes=((1, 4, 4),),
            branches=((flatten(),),),
            head=(dense(1), sigmoid()),
            seed=0,
        )
        model = build_model(spec)
        w = model.params[0].reshape(1, 4, 4)
        w[0, 2, :] = w[0, 0, :]
        tag_map = np.zeros((1, 4, 4))
        tag_map[0, 0] = tag_map[0, 2] = np.array([0.3, -0.7, 0.2, 0.9])
        attr = textual_attribution(model, [tag_map], ["x", "pad", "x2", "pad2"], k=4)
        scores = dict(attr.entries)
        assert scores["x"] == pytest.approx(scores["x2"], rel=1e-12)

    def test_scaling_head_scales_scores_not_order(self):
        model = build_model(small_fused_spec(seed=6))
        inputs = rng_inputs(model.spec, seed=7)
        tags = ["a", "b", "c", "d", "e"]
        base = textual_attribution(model, inputs, tags, k=5)

        scaled = model.copy()
        scaled.params[-2] *= 2.5  # final dense weight
        scaled.params[-1] *= 2.5  # final dense bias
        after = textual_attribution(scaled, inputs, tags, k=5)
        assert [t for t, _ in base.entries] == [t for t, _ in after.entries]
        for (_, s0), (_, s1) in zip(base.entries, after.entries):
            assert s1 == pytest.approx(2.5 * s0, rel=1e-9)

        grid0 = image_saliency(model, inputs)
        grid1 = image_saliency(scaled, inputs)
        assert np.allclose(grid0.values, grid1.values, atol=1e-12)

    def test_model_without_textual_input_rejected(self):
        model = build_model(learn.image_only_spec())
        with pytest.raises(ShapeError, match="no textual input"):
            textual_attribution(model, [np.zeros((3, 64, 64))], ["a"])


class TestExports:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.uniform(size=(6, 9))
        values /= values.max()
        grid = SaliencyGrid(values=values)
        path = tmp_path / "saliency.png"
        save_saliency_png(grid, path)
        with Image.open(path) as img:
            assert img.mode == "L"
            assert img.size == (9, 6)
            loaded = np.asarray(img)
        assert np.array_equal(loaded, np.round(values * 255).astype(np.uint8))

    def test_json_payload_structure(self, tmp_path):
        model = build_model(small_fused_spec(seed=3))
        inputs = rng_inputs(model.spec, seed=4)
        grid = image_saliency(model, inputs)
        attr = textual_attribution(model, inputs, ["a", "b"])
        payload = explanation_payload(grid, attr)
        assert payload["saliency"]["width"] == 8
        assert payload["saliency"]["height"] == 8
        assert len(payload["saliency"]["values"]) == 8
        assert all(len(row) == 8 for row in payload["saliency"]["values"])
        assert [e["tag"] for e in payload["top_tags"]] == [t for t, _ in attr.entries]

        out = tmp_path / "explain.json"
        save_explanation_json(grid, attr, out)
        assert json.loads(out.read_text()) == payload
