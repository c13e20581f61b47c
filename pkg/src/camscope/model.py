"""Minimal 1D GAP-CNN engine: forward, hand-derived backprop, Adam training.

The architecture is fixed by construction: a stack of same-padded 1D
convolutions with ReLU, global average pooling over positions, and a single
dense softmax head. Same zero-padding keeps every feature map aligned 1:1
with input positions, which is what makes per-byte activation maps exact.

All math runs in float64; given the same seed, training and inference are
bit-reproducible on the same platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    ContractViolationError,
    EmptyInputError,
    NumericError,
    WeightFormatError,
)

PROB_FLOOR = 1e-12
WEIGHT_FORMAT = "camscope-weights-v1"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    """Fixed network architecture.

    ``conv_channels`` lists the output channels of each conv layer; the last
    entry is the number of feature maps pooled by GAP and projected by the
    dense head.
    """

    input_length: int = 1500
    conv_channels: tuple = (16, 32, 64, 128, 128, 128)
    kernel_size: int = 5
    stride: int = 1
    num_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ContractViolationError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if self.stride != 1:
            raise ContractViolationError(f"stride is fixed at 1, got {self.stride}")
        if not self.conv_channels:
            raise ContractViolationError("conv_channels must be non-empty")
        if any(c < 1 for c in self.conv_channels):
            raise ContractViolationError("conv_channels must all be >= 1")
        if self.input_length < self.kernel_size:
            raise ContractViolationError(
                f"input_length ({self.input_length}) must be >= kernel_size ({self.kernel_size})"
            )
        if self.num_classes < 2:
            raise ContractViolationError(f"num_classes must be >= 2, got {self.num_classes}")

    @property
    def n_feature_maps(self):
        return self.conv_channels[-1]

    def to_dict(self):
        return {
            "input_length": self.input_length,
            "conv_channels": list(self.conv_channels),
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            input_length=int(d["input_length"]),
            conv_channels=tuple(d["conv_channels"]),
            kernel_size=int(d["kernel_size"]),
            stride=int(d.get("stride", 1)),
            num_classes=int(d["num_classes"]),
        )


@dataclass
class ModelWeights:
    """All learnable parameters: per-layer conv kernels/biases plus the dense head."""

    conv_kernels: list  # layer i: (out_ch, in_ch, kernel_size)
    conv_biases: list  # layer i: (out_ch,)
    dense_weight: np.ndarray  # (num_classes, n_feature_maps)
    dense_bias: np.ndarray  # (num_classes,)

    def named_tensors(self):
        """Stable (name, array) pairs covering every parameter tensor."""
        for i, (k, b) in enumerate(zip(self.conv_kernels, self.conv_biases)):
            yield f"conv{i}.kernel", k
            yield f"conv{i}.bias", b
        yield "dense.weight", self.dense_weight
        yield "dense.bias", self.dense_bias

    def validate(self, config: ModelConfig):
        expected = expected_shapes(config)
        for name, tensor in self.named_tensors():
            if tuple(tensor.shape) != expected[name]:
                raise ContractViolationError(
                    f"tensor {name!r} has shape {tuple(tensor.shape)}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(tensor)):
                raise NumericError(f"tensor {name!r} contains non-finite values")

    def copy(self):
        return ModelWeights(
            conv_kernels=[k.copy() for k in self.conv_kernels],
            conv_biases=[b.copy() for b in self.conv_biases],
            dense_weight=self.dense_weight.copy(),
            dense_bias=self.dense_bias.copy(),
        )


@dataclass
class Gradients:
    """Loss gradients, shape-congruent with :class:`ModelWeights`."""

    conv_kernels: list
    conv_biases: list
    dense_weight: np.ndarray
    dense_bias: np.ndarray

    def named_tensors(self):
        for i, (k, b) in enumerate(zip(self.conv_kernels, self.conv_biases)):
            yield f"conv{i}.kernel", k
            yield f"conv{i}.bias", b
        yield "dense.weight", self.dense_weight
        yield "dense.bias", self.dense_bias


@dataclass
class FeatureMapStack:
    """Post-activation maps of every conv layer for one sample; each is (channels, L)."""

    layers: list

    @property
    def last(self):
        return self.layers[-1]


@dataclass
class CamNet:
    """A configuration bound to concrete weights: the unit every op accepts."""

    config: ModelConfig
    weights: ModelWeights


def expected_shapes(config: ModelConfig):
    shapes = {}
    in_ch = 1
    for i, out_ch in enumerate(config.conv_channels):
        shapes[f"conv{i}.kernel"] = (out_ch, in_ch, config.kernel_size)
        shapes[f"conv{i}.bias"] = (out_ch,)
        in_ch = out_ch
    shapes["dense.weight"] = (config.num_classes, config.n_feature_maps)
    shapes["dense.bias"] = (config.num_classes,)
    return shapes


def init_weights(config: ModelConfig, rng: np.random.Generator) -> ModelWeights:
    """Seeded Glorot-uniform weight tensors (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    kernels, biases = [], []
    in_ch = 1
    for out_ch in config.conv_channels:
        fan_in = in_ch * config.kernel_size
        fan_out = out_ch * config.kernel_size
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        kernels.append(rng.uniform(-limit, limit, size=(out_ch, in_ch, config.kernel_size)))
        biases.append(np.zeros(out_ch))
        in_ch = out_ch
    k = config.n_feature_maps
    limit = np.sqrt(6.0 / (k + config.num_classes))
    dense_weight = rng.uniform(-limit, limit, size=(config.num_classes, k))
    dense_bias = np.zeros(config.num_classes)
    return ModelWeights(kernels, biases, dense_weight, dense_bias)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def _conv_batch(x, kernels, bias=None):
    """Same-padded cross-correlation. x: (B, in_ch, L) -> (B, out_ch, L)."""
    ksize = kernels.shape[2]
    pad = ksize // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    windows = sliding_window_view(xp, ksize, axis=2)  # (B, in_ch, L, k)
    out = np.tensordot(windows, kernels, axes=((1, 3), (1, 2)))  # (B, L, out_ch)
    out = out.transpose(0, 2, 1)
    if bias is not None:
        out = out + bias[None, :, None]
    return np.ascontiguousarray(out)


def conv1d_forward(x, kernels, biases):
    """Convolve one multi-channel sequence; output length equals input length.

    ``out[c][t] = bias[c] + sum_{i,j} kernels[c][i][j] * padded_x[i][t + j]``
    with ``kernel_size // 2`` zeros of padding on each side.
    """
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    if x.ndim != 2:
        raise ContractViolationError(f"input must be (in_ch, L), got ndim={x.ndim}")
    if kernels.ndim != 3 or kernels.shape[1] != x.shape[0]:
        raise ContractViolationError(
            f"kernels must be (out_ch, {x.shape[0]}, k), got {kernels.shape}"
        )
    if biases.shape != (kernels.shape[0],):
        raise ContractViolationError(
            f"biases must be ({kernels.shape[0]},), got {biases.shape}"
        )
    if x.shape[1] < 1:
        raise ContractViolationError("input length must be >= 1")
    return _conv_batch(x[None], kernels, biases)[0]


def relu(x):
    return np.maximum(0.0, x)


def gap(feature_maps):
    """Global average pooling: mean over positions, one value per map."""
    feature_maps = np.asarray(feature_maps, dtype=np.float64)
    if feature_maps.shape[-1] == 0:
        raise EmptyInputError("cannot pool feature maps of length 0")
    return feature_maps.mean(axis=-1)


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def dense_softmax(pooled, weight, bias):
    """Dense projection of the pooled vector followed by softmax.

    Returns (logits, probabilities); probabilities sum to 1 within 1e-9.
    """
    pooled = np.asarray(pooled, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weight.ndim != 2 or weight.shape[1] != pooled.shape[-1] or bias.shape != (weight.shape[0],):
        raise ContractViolationError(
            f"dense shapes inconsistent: pooled {pooled.shape}, W {weight.shape}, b {bias.shape}"
        )
    logits = pooled @ weight.T + bias
    if not np.all(np.isfinite(logits)):
        raise NumericError("dense layer produced non-finite logits")
    return logits, _softmax(logits)


def cross_entropy(probabilities, label):
    """Negative log-likelihood of ``label``, clamped with a 1e-12 probability floor."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if not 0 <= label < probabilities.shape[-1]:
        raise IndexError(f"label {label} out of range for {probabilities.shape[-1]} classes")
    return -np.log(max(float(probabilities[label]), PROB_FLOOR))


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------


@dataclass
class _BatchState:
    hidden: list  # post-ReLU output of each conv layer, (B, ch, L)
    pooled: np.ndarray  # (B, K)
    logits: np.ndarray  # (B, C)
    probs: np.ndarray  # (B, C)

    @property
    def last_maps(self):
        return self.hidden[-1]


def _forward_batch(net: CamNet, x) -> _BatchState:
    """Run the full network on a batch x of shape (B, L)."""
    cfg, w = net.config, net.weights
    if x.ndim != 2 or x.shape[1] != cfg.input_length:
        raise ContractViolationError(
            f"batch must be (B, {cfg.input_length}), got {x.shape}"
        )
    act = x[:, None, :].astype(np.float64, copy=False)
    hidden = []
    for kernels, bias in zip(w.conv_kernels, w.conv_biases):
        act = relu(_conv_batch(act, kernels, bias))
        hidden.append(act)
    pooled = gap(act)
    logits, probs = dense_softmax(pooled, w.dense_weight, w.dense_bias)
    return _BatchState(hidden=hidden, pooled=pooled, logits=logits, probs=probs)


def forward(net: CamNet, sample):
    """Full forward pass for one sample of length ``input_length``.

    Returns ``(FeatureMapStack, logits, probabilities)``; the stack keeps the
    per-layer activations so the last layer's maps can be reused for
    activation-map extraction without recomputation.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.shape != (net.config.input_length,):
        raise ContractViolationError(
            f"sample must have length {net.config.input_length}, got shape {sample.shape}"
        )
    state = _forward_batch(net, sample[None, :])
    stack = FeatureMapStack([h[0] for h in state.hidden])
    return stack, state.logits[0], state.probs[0]


def _conv_backward(x, kernels, dout):
    """Gradients of a same-padded conv layer.

    x: (B, in_ch, L) layer input; dout: (B, out_ch, L) gradient at the output.
    Returns (dkernels, dbias, dx).
    """
    ksize = kernels.shape[2]
    pad = ksize // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    windows = sliding_window_view(xp, ksize, axis=2)  # (B, in_ch, L, k)
    dkernels = np.tensordot(dout, windows, axes=((0, 2), (0, 2)))  # (out_ch, in_ch, k)
    dbias = dout.sum(axis=(0, 2))
    # dx is dout convolved with the kernels flipped along the tap axis and
    # transposed to map out_ch back onto in_ch.
    flipped = np.ascontiguousarray(kernels[:, :, ::-1].transpose(1, 0, 2))
    dx = _conv_batch(dout, flipped)
    return dkernels, dbias, dx


def _backward_batch(net: CamNet, x, labels, state: _BatchState) -> Gradients:
    """Analytic gradient of the mean cross-entropy over the batch."""
    cfg, w = net.config, net.weights
    batch = x.shape[0]
    length = cfg.input_length

    dlogits = state.probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch

    ddense_w = dlogits.T @ state.pooled
    ddense_b = dlogits.sum(axis=0)
    dpooled = dlogits @ w.dense_weight  # (B, K)

    # GAP distributes its gradient uniformly over positions.
    dact = np.repeat(dpooled[:, :, None] / length, length, axis=2)

    dkernels = [None] * len(w.conv_kernels)
    dbiases = [None] * len(w.conv_biases)
    for i in range(len(w.conv_kernels) - 1, -1, -1):
        dpre = dact * (state.hidden[i] > 0)  # ReLU gate
        layer_in = state.hidden[i - 1] if i > 0 else x[:, None, :]
        dkernels[i], dbiases[i], dact = _conv_backward(layer_in, w.conv_kernels[i], dpre)

    grads = Gradients(dkernels, dbiases, ddense_w, ddense_b)
    for name, tensor in grads.named_tensors():
        if not np.all(np.isfinite(tensor)):
            raise NumericError(f"non-finite gradient in {name!r}")
    return grads


def backward(net: CamNet, sample, label) -> Gradients:
    """Exact gradient of ``cross_entropy(forward(net, sample), label)``."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.shape != (net.config.input_length,):
        raise ContractViolationError(
            f"sample must have length {net.config.input_length}, got shape {sample.shape}"
        )
    if not 0 <= label < net.config.num_classes:
        raise IndexError(f"label {label} out of range for {net.config.num_classes} classes")
    x = sample[None, :]
    state = _forward_batch(net, x)
    return _backward_batch(net, x, np.array([label]), state)


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment estimates per parameter tensor plus the step counter."""

    step: int
    first: dict
    second: dict

    @classmethod
    def zeros_like(cls, weights: ModelWeights):
        return cls(
            step=0,
            first={name: np.zeros_like(t) for name, t in weights.named_tensors()},
            second={name: np.zeros_like(t) for name, t in weights.named_tensors()},
        )


def adam_step(
    weights: ModelWeights,
    grads: Gradients,
    state: AdamState,
    lr,
    beta1=ADAM_BETA1,
    beta2=ADAM_BETA2,
    eps=ADAM_EPS,
):
    """One bias-corrected Adam update, in place; returns (weights, state)."""
    state.step += 1
    t = state.step
    grad_by_name = dict(grads.named_tensors())
    for name, param in weights.named_tensors():
        g = grad_by_name[name]
        m = state.first[name]
        v = state.second[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return weights, state


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float
    per_class: list = field(default_factory=list)


def _evaluate(net: CamNet, x, y, batch_size=256):
    """Full-dataset loss/accuracy plus per-class precision, recall and F1."""
    n = x.shape[0]
    num_classes = net.config.num_classes
    total_loss = 0.0
    predictions = np.empty(n, dtype=np.int64)
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        state = _forward_batch(net, x[start:stop])
        picked = np.maximum(state.probs[np.arange(stop - start), y[start:stop]], PROB_FLOOR)
        total_loss += float(-np.log(picked).sum())
        predictions[start:stop] = np.argmax(state.probs, axis=1)
    loss = total_loss / n
    accuracy = float(np.mean(predictions == y))
    per_class = []
    for c in range(num_classes):
        tp = int(np.sum((predictions == c) & (y == c)))
        fp = int(np.sum((predictions == c) & (y != c)))
        fn = int(np.sum((predictions != c) & (y == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(precision, recall, f1))
    return loss, accuracy, per_class


def train(
    config: ModelConfig,
    x,
    y,
    epochs,
    batch_size=64,
    lr=1e-3,
    seed=0,
):
    """Train fresh weights with Adam on (x, y); deterministic for a given seed.

    x is (n, input_length) in [0, 1]; y holds class indices. Both the weight
    initialization and the per-epoch shuffles come from one seeded generator.
    Returns (ModelWeights, [EpochMetrics]) with one post-epoch evaluation of
    loss/accuracy/per-class metrics per epoch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInputError("training set must be a non-empty (n, L) array")
    if x.shape[1] != config.input_length:
        raise ContractViolationError(
            f"samples have length {x.shape[1]}, config expects {config.input_length}"
        )
    if y.shape != (x.shape[0],):
        raise ContractViolationError("labels must be one class index per sample")
    if y.min() < 0 or y.max() >= config.num_classes:
        raise IndexError(
            f"labels must lie in [0, {config.num_classes}), got range [{y.min()}, {y.max()}]"
        )

    rng = np.random.default_rng(seed)
    weights = init_weights(config, rng)
    net = CamNet(config, weights)
    state = AdamState.zeros_like(weights)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], batch_size):
            idx = order[start : start + batch_size]
            xb, yb = x[idx], y[idx]
            fwd = _forward_batch(net, xb)
            grads = _backward_batch(net, xb, yb, fwd)
            adam_step(weights, grads, state, lr)
        loss, accuracy, per_class = _evaluate(net, x, y)
        history.append(EpochMetrics(epoch=epoch, loss=loss, accuracy=accuracy, per_class=per_class))
    return weights, history


def predict(net: CamNet, sample):
    """Predicted class index (argmax, ties to the lowest index) and probabilities."""
    _, _, probs = forward(net, sample)
    return int(np.argmax(probs)), probs


def predict_batch(net: CamNet, x):
    """Vectorized prediction over (n, L): (class indices, probability rows)."""
    x = np.asarray(x, dtype=np.float64)
    state = _forward_batch(net, x)
    return np.argmax(state.probs, axis=1), state.probs


# ---------------------------------------------------------------------------
# weight file I/O
# ---------------------------------------------------------------------------


def save_weights(net: CamNet, path):
    """Write config plus all parameter tensors as a single JSON document."""
    doc = {
        "format": WEIGHT_FORMAT,
        "config": net.config.to_dict(),
        "tensors": {
            name: {"shape": list(t.shape), "data": t.ravel().tolist()}
            for name, t in net.weights.named_tensors()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_weights(path) -> CamNet:
    """Read a weight file, validating shapes against the config and rejecting
    non-finite values."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WeightFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != WEIGHT_FORMAT:
        raise WeightFormatError(
            f"unknown weight format tag {doc.get('format') if isinstance(doc, dict) else None!r}"
        )
    try:
        config = ModelConfig.from_dict(doc["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise WeightFormatError(f"bad config block: {exc}") from exc
    expected = expected_shapes(config)
    tensors = doc.get("tensors", {})
    missing = sorted(set(expected) - set(tensors))
    if missing:
        raise WeightFormatError(f"missing tensors: {missing}")
    arrays = {}
    for name, shape in expected.items():
        entry = tensors[name]
        if tuple(entry.get("shape", ())) != shape:
            raise WeightFormatError(
                f"tensor {name!r} has shape {entry.get('shape')}, expected {list(shape)}"
            )
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape)):
            raise WeightFormatError(f"tensor {name!r} has {data.size} values, expected {np.prod(shape)}")
        if not np.all(np.isfinite(data)):
            raise WeightFormatError(f"tensor {name!r} contains non-finite values")
        arrays[name] = data.reshape(shape)
    n_conv = len(config.conv_channels)
    weights = ModelWeights(
        conv_kernels=[arrays[f"conv{i}.kernel"] for i in range(n_conv)],
        conv_biases=[arrays[f"conv{i}.bias"] for i in range(n_conv)],
        dense_weight=arrays["dense.weight"],
        dense_bias=arrays["dense.bias"],
    )
    return CamNet(config, weights)
