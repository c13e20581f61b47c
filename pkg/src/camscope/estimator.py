"""Scikit-learn style wrappers so the network and its activation maps
compose with pipelines, grid search and the rest of the ecosystem."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .aggregate import CamMatrix, build_aggregated_cam
from .cam import cams_for_predictions, compute_cam
from .errors import EmptyClassError
from .model import CamNet, ModelConfig, predict_batch, train


class CamNetClassifier(ClassifierMixin, BaseEstimator):
    """GAP-terminated 1D CNN classifier with built-in explanation support.

    Parameters
    ----------
    conv_channels : tuple of int, default (16, 32, 64, 128, 128, 128)
        Output channels of each convolutional layer.
    kernel_size : int, default 5
        Odd 1D kernel width; convolutions are same-padded, stride 1.
    epochs : int, default 10
    batch_size : int, default 64
    learning_rate : float, default 1e-3
        Adam learning rate (beta1 0.9, beta2 0.999, eps 1e-8).
    seed : int, default 0
        Seeds both weight initialization and epoch shuffling; fits are
        bit-reproducible.

    Attributes
    ----------
    classes_ : ndarray
        Sorted unique labels seen in fit.
    net_ : CamNet
        Trained configuration + weights.
    history_ : list of EpochMetrics
        Post-epoch loss/accuracy/per-class metrics.
    """

    def __init__(
        self,
        conv_channels=(16, 32, 64, 128, 128, 128),
        kernel_size=5,
        epochs=10,
        batch_size=64,
        learning_rate=1e-3,
        seed=0,
    ):
        self.conv_channels = conv_channels
        self.kernel_size = kernel_size
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        config = ModelConfig(
            input_length=X.shape[1],
            conv_channels=tuple(self.conv_channels),
            kernel_size=self.kernel_size,
            num_classes=len(self.classes_),
        )
        weights, history = train(
            config,
            X,
            encoded,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.learning_rate,
            seed=self.seed,
        )
        self.net_ = CamNet(config, weights)
        self.history_ = history
        self.n_features_in_ = X.shape[1]
        return self

    def _validate_for_predict(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the model was fit with {self.n_features_in_}"
            )
        return X

    def predict_proba(self, X):
        X = self._validate_for_predict(X)
        _, probs = predict_batch(self.net_, X)
        return probs

    def predict(self, X):
        X = self._validate_for_predict(X)
        indices, _ = predict_batch(self.net_, X)
        return self.classes_[indices]

    def activation_maps(self, X, sample_ids=None):
        """Per-sample LocalCam for each row's predicted class."""
        X = self._validate_for_predict(X)
        return cams_for_predictions(self.net_, X, sample_ids)

    def activation_map(self, x, label):
        """LocalCam of one sample for an explicit class label."""
        check_is_fitted(self, "net_")
        class_index = int(np.searchsorted(self.classes_, label))
        if class_index >= len(self.classes_) or self.classes_[class_index] != label:
            raise ValueError(f"unknown label {label!r}")
        return compute_cam(self.net_, np.asarray(x, dtype=np.float64), class_index)

    def aggregated_cam(self, X, label, agg_method="mean", var_method="entropy", sample_ids=None):
        """Two-indicator global explanation over the rows predicted as ``label``."""
        X = self._validate_for_predict(X)
        class_index = int(np.searchsorted(self.classes_, label))
        if class_index >= len(self.classes_) or self.classes_[class_index] != label:
            raise ValueError(f"unknown label {label!r}")
        cams = cams_for_predictions(self.net_, X, sample_ids)
        rows = [c for c in cams if c.class_index == class_index]
        if not rows:
            raise EmptyClassError(f"no sample was predicted as {label!r}")
        matrix = CamMatrix(
            class_index=class_index,
            sample_ids=[c.sample_id for c in rows],
            values=np.stack([c.normalized for c in rows]),
        )
        return build_aggregated_cam(matrix, agg_method, var_method)


class CamExtractor(TransformerMixin, BaseEstimator):
    """Transform samples into their normalized predicted-class activation maps.

    Wraps a fitted :class:`CamNetClassifier`; ``transform`` returns an
    (n_samples, n_features) array of normalized maps, one row per input row.
    """

    def __init__(self, classifier):
        self.classifier = classifier

    def fit(self, X, y=None):
        check_is_fitted(self.classifier, "net_")
        return self

    def transform(self, X):
        check_is_fitted(self.classifier, "net_")
        cams = self.classifier.activation_maps(X)
        return np.stack([c.normalized for c in cams])
