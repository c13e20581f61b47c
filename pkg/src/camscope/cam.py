"""Per-sample class activation maps from a trained GAP-CNN.

A map is the last conv layer's feature maps weighted by the dense head's row
for one class, summed over channels. Because every layer preserves length,
position t of the map attributes directly to input position t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .model import CamNet, _forward_batch, forward

__all__ = ["LocalCam", "compute_cam", "cam_for_prediction"]


@dataclass
class LocalCam:
    """One sample's per-position impact scores for one class.

    ``raw`` holds the unnormalized weighted sum; ``normalized`` divides by
    max|raw| so values land in [-1, 1] with the zero point preserved. An
    all-zero map stays all zeros and is flagged via ``zero``.
    """

    sample_id: str
    class_index: int
    raw: np.ndarray
    normalized: np.ndarray

    @property
    def zero(self) -> bool:
        return bool(np.all(self.raw == 0.0))

    def to_dict(self):
        return {
            "sample_id": self.sample_id,
            "class_index": self.class_index,
            "raw": self.raw.tolist(),
            "normalized": self.normalized.tolist(),
            "zero": self.zero,
        }


def normalize_cam(raw):
    """Scale by max|raw| into [-1, 1]; an all-zero input maps to all zeros.

    Idempotent: normalizing a normalized map returns it unchanged.
    """
    raw = np.asarray(raw, dtype=np.float64)
    peak = np.max(np.abs(raw)) if raw.size else 0.0
    if peak == 0.0:
        return np.zeros_like(raw)
    return raw / peak

def compute_cam(net: CamNet, sample, class_index, sample_id="", feature_maps=None) -> LocalCam:
    """Activation map of ``sample`` for ``class_index``.

    ``raw[t] = sum_k dense_weight[class_index][k] * maps[k][t]`` over the last
    conv layer's post-activation maps. The dense bias is position-independent
    and deliberately left out. Pass ``feature_maps`` to reuse maps from an
    earlier forward pass.
    """
    if not 0 <= class_index < net.config.num_classes:
        raise IndexError(
            f"class {class_index} out of range for {net.config.num_classes} classes"
        )
    if feature_maps is None:
        stack, _, _ = forward(net, sample)
        feature_maps = stack.last
    elif feature_maps.shape != (net.config.n_feature_maps, net.config.input_length):
        raise ContractViolationError(
            f"feature maps must be {(net.config.n_feature_maps, net.config.input_length)},"
            f" got {feature_maps.shape}"
        )
    raw = net.weights.dense_weight[class_index] @ feature_maps
    return LocalCam(
        sample_id=sample_id,
        class_index=int(class_index),
        raw=raw,
        normalized=normalize_cam(raw),
    )


def cam_for_prediction(net: CamNet, sample, sample_id="") -> LocalCam:
    """Activation map for the sample's own predicted class (argmax, ties low)."""
    stack, _, probs = forward(net, sample)
    predicted = int(np.argmax(probs))
    return compute_cam(net, sample, predicted, sample_id=sample_id, feature_maps=stack.last)


def cams_for_predictions(net: CamNet, x, sample_ids=None, batch_size=256):
    """Predicted-class maps for every row of x, computed in batches.

    Returns a list of LocalCam in row order; equivalent to calling
    :func:`cam_for_prediction` per row but with batched forward passes.
    """
    x = np.asarray(x, dtype=np.float64)
    if sample_ids is None:
        sample_ids = [str(i) for i in range(x.shape[0])]
    if len(sample_ids) != x.shape[0]:
        raise ContractViolationError("need exactly one sample id per row")
    cams = []
    for start in range(0, x.shape[0], batch_size):
        stop = min(start + batch_size, x.shape[0])
        state = _forward_batch(net, x[start:stop])
        predicted = np.argmax(state.probs, axis=1)
        maps = state.last_maps  # (B, K, L)
        for row in range(stop - start):
            raw = net.weights.dense_weight[predicted[row]] @ maps[row]
            cams.append(
                LocalCam(
                    sample_id=sample_ids[start + row],
                    class_index=int(predicted[row]),
                    raw=raw,
                    normalized=normalize_cam(raw),
                )
            )
    return cams
