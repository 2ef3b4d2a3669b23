"""Deterministic learning kernel with hand-derived gradients.

Supports branch-and-head models: each branch transforms one input (image
tensor or tag map) into a feature vector, the concatenated vector feeds the
head, and the head ends in a single sigmoid unit. Training is plain batched
backprop with Adam. The SVM and decision-tree baselines plus dataset splits
and the accuracy metric live here too.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DatasetError, ShapeError, SnapshotError, TrainingError

Shape = tuple[int, ...]
Sample = tuple[tuple[np.ndarray, ...], int]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_EPS = 1e-12


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: int | None = None
    kernel: int | None = None
    stride: int | None = None
    out_dim: int | None = None


def conv(out_channels: int, kernel: int = 3, stride: int = 1) -> LayerSpec:
    return LayerSpec("conv", out_channels=out_channels, kernel=kernel, stride=stride)


def maxpool() -> LayerSpec:
    return LayerSpec("maxpool")


def relu() -> LayerSpec:
    return LayerSpec("relu")


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


def dense(out_dim: int) -> LayerSpec:
    return LayerSpec("dense", out_dim=out_dim)


def sigmoid() -> LayerSpec:
    return LayerSpec("sigmoid")


@dataclass(frozen=True)
class ModelSpec:
    input_shapes: tuple[Shape, ...]
    branches: tuple[tuple[LayerSpec, ...], ...]
    head: tuple[LayerSpec, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.input_shapes) != len(self.branches):
            raise ShapeError(
                f"{len(self.branches)} branches for {len(self.input_shapes)} inputs"
            )


@dataclass
class Model:
    spec: ModelSpec
    params: list[np.ndarray]

    def copy(self) -> Model:
        return Model(spec=self.spec, params=[p.copy() for p in self.params])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0001
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size >= 1 and epochs >= 0 required")


@dataclass(frozen=True)
class SplitRatios:
    train: float
    validation: float
    test: float

    def __post_init__(self) -> None:
        parts = (self.train, self.validation, self.test)
        if any(p <= 0 for p in parts):
            raise ValueError(f"all split ratios must be positive, got {parts}")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(parts)}")


# ---------------------------------------------------------------------------
# shape inference


def _shape_after(layer: LayerSpec, shape: Shape, where: str) -> Shape:
    if layer.kind == "conv":
        if len(shape) != 3:
            raise ShapeError(f"{where}: conv needs (channels, h, w), got {shape}")
        c, h, w = shape
        k, s = layer.kernel, layer.stride
        if h < k or w < k:
            raise ShapeError(f"{where}: kernel {k} larger than input {h}x{w}")
        return (layer.out_channels, (h - k) // s + 1, (w - k) // s + 1)
    if layer.kind == "maxpool":
        if len(shape) != 3:
            raise ShapeError(f"{where}: maxpool needs (channels, h, w), got {shape}")
        c, h, w = shape
        if h < 2 or w < 2:
            raise ShapeError(f"{where}: cannot pool a {h}x{w} input")
        return (c, h // 2, w // 2)
    if layer.kind in ("relu", "sigmoid"):
        return shape
    if layer.kind == "flatten":
        return (int(np.prod(shape)),)
    if layer.kind == "dense":
        if len(shape) != 1:
            raise ShapeError(f"{where}: dense needs a flat input, got {shape}")
        return (layer.out_dim,)
    raise ShapeError(f"{where}: unknown layer kind {layer.kind!r}")


def _stack_shapes(layers: tuple[LayerSpec, ...], shape: Shape, name: str) -> list[Shape]:
    shapes = [shape]
    for i, layer in enumerate(layers):
        shapes.append(_shape_after(layer, shapes[-1], f"{name} layer {i} ({layer.kind})"))
    return shapes


def infer_shapes(spec: ModelSpec) -> tuple[list[list[Shape]], list[Shape]]:
    """Per-branch and head shape traces; raises ShapeError on bad composition."""
    branch_shapes = []
    widths = []
    for b, (shape, layers) in enumerate(zip(spec.input_shapes, spec.branches)):
        trace = _stack_shapes(layers, shape, f"branch {b}")
        if len(trace[-1]) != 1:
            raise ShapeError(
                f"branch {b} must end with a flat vector, got {trace[-1]}"
            )
        branch_shapes.append(trace)
        widths.append(trace[-1][0])
    head_trace = _stack_shapes(spec.head, (sum(widths),), "head")
    return branch_shapes, head_trace


def output_shape(spec: ModelSpec) -> Shape:
    return infer_shapes(spec)[1][-1]


def _validate_binary(spec: ModelSpec) -> None:
    if not spec.head or spec.head[-1].kind != "sigmoid":
        raise ShapeError("binary model must end with a sigmoid layer")
    if output_shape(spec) != (1,):
        raise ShapeError(f"binary model must output one unit, got {output_shape(spec)}")


# ---------------------------------------------------------------------------
# parameters


def _param_shapes(spec: ModelSpec) -> list[tuple[Shape, Shape] | None]:
    """(weight shape, bias shape) per layer in walk order; None if stateless."""
    branch_shapes, head_trace = infer_shapes(spec)
    out: list[tuple[Shape, Shape] | None] = []

    def walk(layers, trace):
        for layer, in_shape in zip(layers, trace):
            if layer.kind == "conv":
                c_in = in_shape[0]
                out.append(
                    (
                        (layer.out_channels, c_in, layer.kernel, layer.kernel),
                        (layer.out_channels,),
                    )
                )
            elif layer.kind == "dense":
                out.append(((layer.out_dim, in_shape[0]), (layer.out_dim,)))
            else:
                out.append(None)

    for layers, trace in zip(spec.branches, branch_shapes):
        walk(layers, trace)
    walk(spec.head, head_trace)
    return out


def build_model(spec: ModelSpec) -> Model:
    """Seeded uniform(-a, a) init with a = sqrt(6 / (fan_in + fan_out))."""
    infer_shapes(spec)
    rng = np.random.default_rng(spec.seed)
    params: list[np.ndarray] = []
    for entry in _param_shapes(spec):
        if entry is None:
            continue
        w_shape, b_shape = entry
        if len(w_shape) == 4:
            fan_in = w_shape[1] * w_shape[2] * w_shape[3]
            fan_out = w_shape[0] * w_shape[2] * w_shape[3]
        else:
            fan_out, fan_in = w_shape
        a = math.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-a, a, size=w_shape))
        params.append(np.zeros(b_shape))
    return Model(spec=spec, params=params)


# ---------------------------------------------------------------------------
# layer forward/backward on batched float64 arrays


def _sigmoid_fn(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _conv_forward(x, w, b, stride):
    k = w.shape[2]
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    y = np.einsum("nchwij,ocij->nohw", windows, w, optimize=True)
    return y + b[None, :, None, None]


def _conv_backward(dy, x, w, stride):
    k = w.shape[2]
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    dw = np.einsum("nchwij,nohw->ocij", windows, dy, optimize=True)
    db = dy.sum(axis=(0, 2, 3))
    dx = np.zeros_like(x)
    ho, wo = dy.shape[2], dy.shape[3]
    for i in range(k):
        for j in range(k):
            dx[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += (
                np.einsum("nohw,oc->nchw", dy, w[:, :, i, j], optimize=True)
            )
    return dx, dw, db


def _pool_forward(x):
    n, c, h, w = x.shape
    ho, wo = h // 2, w // 2
    tiles = (
        x[:, :, : 2 * ho, : 2 * wo]
        .reshape(n, c, ho, 2, wo, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, 4)
    )
    idx = tiles.argmax(axis=-1)
    y = np.take_along_axis(tiles, idx[..., None], axis=-1)[..., 0]
    return y, idx


def _pool_backward(dy, idx, x_shape):
    n, c, h, w = x_shape
    ho, wo = h // 2, w // 2
    dtiles = np.zeros((n, c, ho, wo, 4))
    np.put_along_axis(dtiles, idx[..., None], dy[..., None], axis=-1)
    dx = np.zeros(x_shape)
    dx[:, :, : 2 * ho, : 2 * wo] = (
        dtiles.reshape(n, c, ho, wo, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, 2 * ho, 2 * wo)
    )
    return dx


def _run_layers(layers, params, offset, x, caches):
    """Forward through one stack; caches collect what backward needs."""
    for layer in layers:
        if layer.kind == "conv":
            w, b = params[offset], params[offset + 1]
            offset += 2
            caches.append((layer, x, w))
            x = _conv_forward(x, w, b, layer.stride)
        elif layer.kind == "dense":
            w, b = params[offset], params[offset + 1]
            offset += 2
            caches.append((layer, x, w))
            x = x @ w.T + b
        elif layer.kind == "maxpool":
            y, idx = _pool_forward(x)
            caches.append((layer, idx, x.shape))
            x = y
        elif layer.kind == "relu":
            caches.append((layer, x, None))
            x = np.maximum(x, 0.0)
        elif layer.kind == "flatten":
            caches.append((layer, x.shape, None))
            x = x.reshape(x.shape[0], -1)
        elif layer.kind == "sigmoid":
            y = _sigmoid_fn(x)
            caches.append((layer, y, None))
            x = y
    return x, offset


def _backprop_layers(caches, dy, grads, offset):
    """Walk one stack's caches in reverse, filling grads (same order as params)."""
    for layer, a, b in reversed(caches):
        if layer.kind == "conv":
            offset -= 2
            dy, dw, db = _conv_backward(dy, a, b, layer.stride)
            grads[offset], grads[offset + 1] = dw, db
        elif layer.kind == "dense":
            offset -= 2
            grads[offset], grads[offset + 1] = dy.T @ a, dy.sum(axis=0)
            dy = dy @ b
        elif layer.kind == "maxpool":
            dy = _pool_backward(dy, a, b)
        elif layer.kind == "relu":
            dy = dy * (a > 0)
        elif layer.kind == "flatten":
            dy = dy.reshape(a)
        elif layer.kind == "sigmoid":
            dy = dy * a * (1.0 - a)
    return dy, offset


def _check_batch(model: Model, inputs: list[np.ndarray]) -> None:
    spec = model.spec
    if len(inputs) != len(spec.input_shapes):
        raise ShapeError(
            f"model takes {len(spec.input_shapes)} inputs, got {len(inputs)}"
        )
    for i, (x, shape) in enumerate(zip(inputs, spec.input_shapes)):
        if x.shape[1:] != shape:
            raise ShapeError(f"input {i}: expected {shape} per sample, got {x.shape[1:]}")


def forward_batch(model: Model, inputs: list[np.ndarray]) -> np.ndarray:
    """Probabilities for a batch; inputs are (N, ...) arrays, one per branch."""
    _check_batch(model, inputs)
    offset = 0
    feats = []
    for layers, x in zip(model.spec.branches, inputs):
        y, offset = _run_layers(layers, model.params, offset, x, [])
        feats.append(y)
    joined = np.concatenate(feats, axis=1) if len(feats) > 1 else feats[0]
    out, _ = _run_layers(model.spec.head, model.params, offset, joined, [])
    return out[:, 0]


def forward(model: Model, inputs: list[np.ndarray]) -> float:
    """Probability for a single sample (inputs carry no batch dimension)."""
    return float(forward_batch(model, [x[None] for x in inputs])[0])


def bce_loss(p: float | np.ndarray, y: float | np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    losses = -(
        y * np.log(np.maximum(p, LOG_EPS))
        + (1.0 - y) * np.log(np.maximum(1.0 - p, LOG_EPS))
    )
    return float(losses.mean())


def _loss_and_grads(model: Model, inputs: list[np.ndarray], labels: np.ndarray):
    """Mean BCE over the batch plus gradients for every parameter and input.

    Relies on the head ending in sigmoid: the gradient at the pre-sigmoid
    unit is (p - y) / N, which sidesteps dividing by p(1 - p).
    """
    _validate_binary(model.spec)
    _check_batch(model, inputs)
    spec, params = model.spec, model.params
    offset = 0
    branch_caches = []
    feats = []
    for layers, x in zip(spec.branches, inputs):
        caches: list = []
        y, offset = _run_layers(layers, params, offset, x, caches)
        branch_caches.append(caches)
        feats.append(y)
    widths = [f.shape[1] for f in feats]
    joined = np.concatenate(feats, axis=1) if len(feats) > 1 else feats[0]
    head_caches: list = []
    out, end = _run_layers(spec.head, params, offset, joined, head_caches)
    probs = out[:, 0]

    loss = bce_loss(probs, labels)
    grads: list[np.ndarray | None] = [None] * len(params)
    n = probs.shape[0]
    dz = ((probs - labels) / n)[:, None]
    # The final sigmoid cache would multiply by p(1-p); dz already includes
    # the combined loss+sigmoid derivative, so skip that last cache entry.
    dj, end = _backprop_layers(head_caches[:-1], dz, grads, end)

    # Branches were walked forward in order; unwind them in reverse so the
    # parameter offset stays aligned.
    input_grads = []
    start = sum(widths)
    consumed = offset
    for caches, width in zip(reversed(branch_caches), reversed(widths)):
        start -= width
        dx, consumed = _backprop_layers(caches, dj[:, start : start + width], grads, consumed)
        input_grads.append(dx)
    input_grads.reverse()
    return loss, grads, input_grads, probs


def backward(model: Model, inputs: list[np.ndarray], y: int):
    """Gradients of bce_loss(forward(model, inputs), y) for one sample.

    Returns (parameter gradients, input gradients); both lists mirror the
    order of model.params and inputs.
    """
    batch = [x[None] for x in inputs]
    _, grads, input_grads, _ = _loss_and_grads(model, batch, np.array([float(y)]))
    return grads, [g[0] for g in input_grads]


def score_gradients(model: Model, inputs: list[np.ndarray]):
    """Gradients of the pre-sigmoid score for one sample (used by explain).

    The score gradient is the loss gradient seeded with 1 at the pre-sigmoid
    unit instead of (p - y).
    """
    _validate_binary(model.spec)
    batch = [x[None] for x in inputs]
    _check_batch(model, batch)
    spec, params = model.spec, model.params
    offset = 0
    branch_caches = []
    feats = []
    for layers, x in zip(spec.branches, batch):
        caches: list = []
        out, offset = _run_layers(layers, params, offset, x, caches)
        branch_caches.append(caches)
        feats.append(out)
    widths = [f.shape[1] for f in feats]
    joined = np.concatenate(feats, axis=1) if len(feats) > 1 else feats[0]
    head_caches: list = []
    _, end = _run_layers(spec.head, params, offset, joined, head_caches)

    grads: list[np.ndarray | None] = [None] * len(params)
    dz = np.ones((1, 1))
    dj, end = _backprop_layers(head_caches[:-1], dz, grads, end)

    input_grads = []
    start = sum(widths)
    consumed = offset
    for caches, width in zip(reversed(branch_caches), reversed(widths)):
        start -= width
        dx, consumed = _backprop_layers(caches, dj[:, start : start + width], grads, consumed)
        input_grads.append(dx[0])
    input_grads.reverse()
    return input_grads


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: Model
    loss_curve: tuple[float, ...]
    validation_accuracy: tuple[float, ...] = ()
    best_epoch: int | None = None


def _stack(samples: list[Sample], n_inputs: int):
    inputs = [
        np.stack([s[0][i] for s in samples]).astype(float) for i in range(n_inputs)
    ]
    labels = np.array([float(s[1]) for s in samples])
    return inputs, labels


def train(
    model: Model,
    samples: list[Sample],
    cfg: TrainConfig,
    validation: list[Sample] | None = None,
) -> TrainResult:
    """Adam over shuffled mini-batches; returns the best-validation snapshot
    when a validation set is supplied, else the final parameters."""
    if not samples:
        raise DatasetError("cannot train on an empty dataset")
    work = model.copy()
    n_inputs = len(work.spec.input_shapes)
    m = [np.zeros_like(p) for p in work.params]
    v = [np.zeros_like(p) for p in work.params]
    t = 0
    rng = np.random.default_rng(cfg.seed)

    curve: list[float] = []
    val_curve: list[float] = []
    best: tuple[float, int, list[np.ndarray]] | None = None
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        total = 0.0
        for lo in range(0, len(samples), cfg.batch_size):
            batch = [samples[i] for i in order[lo : lo + cfg.batch_size]]
            inputs, labels = _stack(batch, n_inputs)
            loss, grads, _, _ = _loss_and_grads(work, inputs, labels)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {lo // cfg.batch_size}"
                )
            total += loss * len(batch)
            t += 1
            for i, g in enumerate(grads):
                m[i] = ADAM_BETA1 * m[i] + (1 - ADAM_BETA1) * g
                v[i] = ADAM_BETA2 * v[i] + (1 - ADAM_BETA2) * g * g
                m_hat = m[i] / (1 - ADAM_BETA1**t)
                v_hat = v[i] / (1 - ADAM_BETA2**t)
                work.params[i] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        curve.append(total / len(samples))
        if validation:
            acc = accuracy(work, validation)
            val_curve.append(acc)
            # Ties go to the later epoch: once validation saturates, extra
            # training still tightens the decision boundary.
            if best is None or acc >= best[0]:
                best = (acc, epoch, [p.copy() for p in work.params])

    if best is not None:
        work.params = best[2]
        return TrainResult(
            model=work,
            loss_curve=tuple(curve),
            validation_accuracy=tuple(val_curve),
            best_epoch=best[1],
        )
    return TrainResult(model=work, loss_curve=tuple(curve))


def accuracy(model: Model, labeled: list[Sample], threshold: float = 0.5) -> float:
    """Fraction of samples whose thresholded probability matches the label."""
    if not labeled:
        raise DatasetError("accuracy of an empty set is undefined")
    inputs, labels = _stack(labeled, len(model.spec.input_shapes))
    probs = forward_batch(model, inputs)
    return float(((probs >= threshold) == (labels >= 0.5)).mean())


def split_dataset(items: list, ratios: SplitRatios, seed: int):
    """Seeded shuffle then contiguous cuts at the cumulative ratios."""
    n = len(items)
    if n < 3:
        raise DatasetError(f"need at least 3 items to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [items[i] for i in order]
    a = int(n * ratios.train)
    b = int(n * (ratios.train + ratios.validation))
    parts = shuffled[:a], shuffled[a:b], shuffled[b:]
    if any(not p for p in parts):
        sizes = tuple(len(p) for p in parts)
        raise DatasetError(f"split {sizes} leaves an empty part for n={n}")
    return parts


# ---------------------------------------------------------------------------
# SVM baseline (primal hinge SGD)


@dataclass
class LinearSVM:
    weights: np.ndarray
    bias: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weights + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Labels in {-1, +1}; the boundary itself maps to +1."""
        return np.where(self.decision(x) >= 0.0, 1, -1)


def train_svm_hinge(
    features: np.ndarray,
    labels: np.ndarray,
    lam: float = 0.01,
    epochs: int = 100,
    seed: int = 0,
) -> LinearSVM:
    """Pegasos-style SGD: step 1/(lam*t), L2 penalty on weights only."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise TrainingError("SVM labels must be -1 or +1")
    if len(set(y.tolist())) < 2:
        raise TrainingError("SVM needs both classes present")
    rng = np.random.default_rng(seed)
    w = np.zeros(x.shape[1])
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(x)):
            t += 1
            eta = 1.0 / (lam * t)
            if y[i] * (x[i] @ w + b) < 1.0:
                w = (1.0 - eta * lam) * w + eta * y[i] * x[i]
                b += eta * y[i]
            else:
                w = (1.0 - eta * lam) * w
    return LinearSVM(weights=w, bias=b)


# ---------------------------------------------------------------------------
# decision tree baseline (CART, Gini)


@dataclass
class TreeNode:
    prediction: int | None = None
    feature: int | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.prediction is not None

    def predict_one(self, x: np.ndarray) -> int:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.prediction

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in np.atleast_2d(x)])

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


def _gini(labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    p = labels.mean()
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _majority(labels: np.ndarray) -> int:
    ones = int(labels.sum())
    zeros = len(labels) - ones
    return 1 if ones > zeros else 0


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Lowest weighted Gini; ties keep the lowest feature then threshold."""
    n = len(y)
    best = None  # (impurity, feature, threshold, mask)
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2.0
            mask = x[:, j] <= threshold
            nl = int(mask.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            score = (nl * _gini(y[mask]) + (n - nl) * _gini(y[~mask])) / n
            if best is None or score < best[0] - 1e-12:
                best = (score, j, threshold, mask)
    return best


def train_decision_tree(
    features: np.ndarray,
    labels: np.ndarray,
    max_depth: int = 10,
    min_leaf: int = 1,
) -> TreeNode:
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2 or len(x) != len(y):
        raise DatasetError("features must be (n, d) aligned with labels")

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        sub_y = y[idx]
        if depth >= max_depth or len(set(sub_y.tolist())) == 1:
            return TreeNode(prediction=_majority(sub_y))
        found = _best_split(x[idx], sub_y, min_leaf)
        if found is None or found[0] >= _gini(sub_y) - 1e-12:
            return TreeNode(prediction=_majority(sub_y))
        _, j, threshold, mask = found
        return TreeNode(
            feature=j,
            threshold=threshold,
            left=grow(idx[mask], depth + 1),
            right=grow(idx[~mask], depth + 1),
        )

    return grow(np.arange(len(y)), 0)


# ---------------------------------------------------------------------------
# architectures


def visual_branch() -> tuple[LayerSpec, ...]:
    return (
        conv(8), relu(), maxpool(),
        conv(16), relu(), maxpool(),
        flatten(), dense(64), relu(),
    )


def textual_branch() -> tuple[LayerSpec, ...]:
    return (conv(4), relu(), maxpool(), conv(8), relu(), maxpool(), flatten())


def binary_head() -> tuple[LayerSpec, ...]:
    return (dense(32), relu(), dense(1), sigmoid())


VISUAL_INPUT: Shape = (3, 64, 64)
TEXTUAL_INPUT: Shape = (1, 50, 50)


def fused_model_spec(seed: int = 0) -> ModelSpec:
    return ModelSpec(
        input_shapes=(VISUAL_INPUT, TEXTUAL_INPUT),
        branches=(visual_branch(), textual_branch()),
        head=binary_head(),
        seed=seed,
    )


def image_only_spec(seed: int = 0) -> ModelSpec:
    return ModelSpec(
        input_shapes=(VISUAL_INPUT,),
        branches=(visual_branch(),),
        head=binary_head(),
        seed=seed,
    )


def tag_only_spec(seed: int = 0) -> ModelSpec:
    return ModelSpec(
        input_shapes=(TEXTUAL_INPUT,),
        branches=(textual_branch(),),
        head=binary_head(),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# checkpoints


def _layer_to_dict(layer: LayerSpec) -> dict:
    out = {"kind": layer.kind}
    for name in ("out_channels", "kernel", "stride", "out_dim"):
        value = getattr(layer, name)
        if value is not None:
            out[name] = value
    return out


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "input_shapes": [list(s) for s in spec.input_shapes],
        "branches": [[_layer_to_dict(l) for l in b] for b in spec.branches],
        "head": [_layer_to_dict(l) for l in spec.head],
        "seed": spec.seed,
    }


def spec_from_dict(data: dict) -> ModelSpec:
    def layer(d):
        return LayerSpec(
            kind=d["kind"],
            out_channels=d.get("out_channels"),
            kernel=d.get("kernel"),
            stride=d.get("stride"),
            out_dim=d.get("out_dim"),
        )

    return ModelSpec(
        input_shapes=tuple(tuple(s) for s in data["input_shapes"]),
        branches=tuple(tuple(layer(l) for l in b) for b in data["branches"]),
        head=tuple(layer(l) for l in data["head"]),
        seed=data["seed"],
    )


def save_model(model: Model, path: str | Path, epoch: int = 0) -> None:
    """JSON header line followed by all parameters as little-endian float64."""
    header = json.dumps(
        {"spec": spec_to_dict(model.spec), "seed": model.spec.seed, "epoch": epoch}
    )
    block = np.concatenate([p.ravel() for p in model.params]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(block.tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        block = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
        spec = spec_from_dict(header["spec"])
    except (ValueError, KeyError) as exc:
        raise SnapshotError(f"{path}: bad checkpoint header: {exc}") from None
    flat = np.frombuffer(block, dtype="<f8")
    template = build_model(spec)
    expected = sum(p.size for p in template.params)
    if flat.size != expected:
        raise SnapshotError(
            f"{path}: checkpoint holds {flat.size} parameters, model needs {expected}"
        )
    params = []
    at = 0
    for p in template.params:
        params.append(flat[at : at + p.size].reshape(p.shape).astype(float))
        at += p.size
    return Model(spec=spec, params=params)
