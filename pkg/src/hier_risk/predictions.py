"""Container pairing classifier probability outputs with ground truth."""

from __future__ import annotations

import numpy as np

__all__ = ["PredictionSet"]


class PredictionSet:
    """N samples of class probabilities plus ground-truth labels.

    ``probs`` is an (N, K) float64 matrix whose rows must sum to 1
    within 1e-6. Rows whose sum is not exactly 1.0 are divided by their
    sum at construction; rows already summing to exactly 1.0 are left
    untouched so clean inputs stay bit-identical. K >= 1 (collapsed
    label spaces can be a single class even though taxonomies need two).

    Attributes:
        probs: (N, K) float64, validated and renormalized as above.
        truth: (N,) int64 class indices in [0, K).
        class_names: K unique names giving the column order.
    """

    __slots__ = ("probs", "truth", "class_names", "N", "K")

    def __init__(self, probs, truth, class_names):
        probs = np.array(probs, dtype=np.float64, order="C", copy=True)
        if probs.ndim != 2:
            raise ValueError("probs must be a 2-d array")
        truth = np.array(truth, dtype=np.int64, copy=True)
        if truth.ndim != 1 or truth.shape[0] != probs.shape[0]:
            raise ValueError("truth must be 1-d with one entry per row")
        names = [str(n) for n in class_names]
        K = probs.shape[1]
        if K < 1:
            raise ValueError("need at least one class column")
        if len(names) != K:
            raise ValueError(
                f"{len(names)} class names for {K} probability columns"
            )
        if len(set(names)) != K:
            raise ValueError("class names must be unique")
        if not np.isfinite(probs).all():
            bad = int(np.where(~np.isfinite(probs).all(axis=1))[0][0])
            raise ValueError(f"row {bad}: non-finite probability")
        if probs.size and probs.min() < 0.0:
            bad = int(np.where((probs < 0.0).any(axis=1))[0][0])
            raise ValueError(f"row {bad}: negative probability")
        sums = probs.sum(axis=1)
        off = np.abs(sums - 1.0) > 1e-6
        if off.any():
            bad = int(np.where(off)[0][0])
            raise ValueError(
                f"row {bad}: probabilities sum to {sums[bad]!r}, "
                "outside the 1e-6 tolerance"
            )
        fix = sums != 1.0
        if fix.any():
            probs[fix] /= sums[fix, None]
        if truth.size:
            if truth.min() < 0 or truth.max() >= K:
                bad = int(np.where((truth < 0) | (truth >= K))[0][0])
                raise ValueError(
                    f"row {bad}: truth index {truth[bad]} out of range"
                )
        self.probs = probs
        self.truth = truth
        self.class_names = names
        self.N = probs.shape[0]
        self.K = K

    def __repr__(self) -> str:
        return f"PredictionSet(N={self.N}, K={self.K})"
