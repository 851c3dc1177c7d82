"""Cost matrices and the risk-minimizing decision rule.

The risk of predicting class k for one sample is the expected confusion
cost sum_j C[k, j] * p[j]. Taking the argmin corrects the classifier's
top-1 choice; sorting by ascending risk reorders the whole output so
that errors stay close to the truth in the hierarchy.

Determinism contract: risks accumulate in ascending j with one
fused multiply-add sweep per column, so a row's result is bit-identical
whether it is computed alone, inside a batch, or on any number of
threads (the reduction never crosses rows).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .predictions import PredictionSet
from .taxonomy import Taxonomy

__all__ = [
    "CostMatrix",
    "RankedOutput",
    "build_cost_matrix",
    "conditional_risk",
    "crm_predict",
    "crm_rerank",
    "likelihood_rank",
    "batch_apply",
    "batch_crm_top1",
]

LIKELIHOOD = "likelihood-descending"
RISK = "risk-ascending"

# Below this many rows, thread fan-out costs more than it saves.
_PARALLEL_MIN_ROWS = 8192


class CostMatrix:
    """K x K symmetric confusion-cost matrix with a zero diagonal.

    Matrices built from a taxonomy carry integer LCA heights and the
    class names in taxonomy order. Raw arrays are accepted as a side
    door for testing and are validated only for squareness, symmetry,
    and the zero diagonal.
    """

    __slots__ = ("K", "entries", "class_names", "_float_entries")

    def __init__(self, entries, class_names=None):
        e = np.array(entries, copy=True)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("cost matrix must be square")
        if e.shape[0] < 1:
            raise ValueError("cost matrix must be at least 1 x 1")
        if not np.isfinite(e.astype(np.float64)).all():
            raise ValueError("cost matrix entries must be finite")
        if not (e == e.T).all():
            raise ValueError("cost matrix must be symmetric")
        if (np.diag(e) != 0).any():
            raise ValueError("cost matrix diagonal must be zero")
        self.entries = e
        self.K = e.shape[0]
        if class_names is not None:
            class_names = [str(n) for n in class_names]
            if len(class_names) != self.K:
                raise ValueError("one class name per row required")
            if len(set(class_names)) != self.K:
                raise ValueError("class names must be unique")
        self.class_names = class_names
        self._float_entries = np.ascontiguousarray(e, dtype=np.float64)

    def scaled(self, factor: float) -> "CostMatrix":
        """Side-door copy with every entry multiplied by ``factor``."""
        return CostMatrix(self.entries * factor, self.class_names)

    def __repr__(self) -> str:
        return f"CostMatrix(K={self.K})"


@dataclass
class RankedOutput:
    """Full class ordering for one sample, best first.

    ``scores`` holds the values that induced the permutation
    (likelihoods for the likelihood basis, risks for the risk basis),
    indexed by class, not by rank. Arrays may be views into batch
    results; treat them as read-only.
    """

    permutation: np.ndarray
    scores: np.ndarray
    basis: str = field(default=LIKELIHOOD)

    def __post_init__(self):
        if self.basis not in (LIKELIHOOD, RISK):
            raise ValueError(f"unknown ranking basis {self.basis!r}")


def build_cost_matrix(tax: Taxonomy) -> CostMatrix:
    """Pairwise LCA-height matrix over the taxonomy's classes."""
    return CostMatrix(tax.lca_matrix(),
                      [tax.names[leaf] for leaf in tax.leaves])


def _check_prob_vector(p, K: int | None = None) -> np.ndarray:
    arr = np.array(p, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError("probability vector must be 1-d")
    if K is not None and arr.shape[0] != K:
        raise ValueError(f"expected {K} probabilities, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite probability entry")
    if arr.size and arr.min() < 0.0:
        raise ValueError("negative probability entry")
    s = float(arr.sum())
    if abs(s - 1.0) > 1e-6:
        raise ValueError(
            f"probabilities sum to {s!r}, outside the 1e-6 tolerance"
        )
    if s != 1.0:
        arr = arr / s
    return arr


def _risk_kernel(P: np.ndarray, Cf: np.ndarray, out=None) -> np.ndarray:
    N, K = P.shape
    if out is None:
        out = np.zeros((N, K), dtype=np.float64)
    tmp = np.empty((N, K), dtype=np.float64)
    for j in range(K):
        np.multiply(P[:, j, None], Cf[:, j], out=tmp)
        out += tmp
    return out


def _risk_matrix(P: np.ndarray, Cf: np.ndarray, threads: int = 1) -> np.ndarray:
    N = P.shape[0]
    if threads > 1 and N >= _PARALLEL_MIN_ROWS:
        out = np.zeros((N, P.shape[1]), dtype=np.float64)
        step = -(-N // threads)
        spans = [(a, min(a + step, N)) for a in range(0, N, step)]
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            futs = [pool.submit(_risk_kernel, P[a:b], Cf, out[a:b])
                    for a, b in spans]
            for f in futs:
                f.result()
        return out
    return _risk_kernel(P, Cf)


def conditional_risk(p, C: CostMatrix) -> np.ndarray:
    """Per-class risks sum_j C[k, j] * p[j] for one sample."""
    q = _check_prob_vector(p, C.K)
    return _risk_kernel(q[None, :], C._float_entries)[0]


def crm_predict(p, C: CostMatrix, use_fastpath: bool = False) -> int:
    """Class index minimizing the risk; ties go to the lowest index.

    With ``use_fastpath`` the full computation is skipped whenever
    max(p) > 0.5, in which case the argmin provably equals the argmax.
    The shortcut is off by default and bit-identical when on.
    """
    q = _check_prob_vector(p, C.K)
    if use_fastpath:
        m = int(np.argmax(q))
        if q[m] > 0.5:
            return m
    risks = _risk_kernel(q[None, :], C._float_entries)[0]
    return int(np.argmin(risks))


def crm_rerank(p, C: CostMatrix) -> RankedOutput:
    """All classes sorted by ascending risk, ties by ascending index.

    Always runs the full risk computation; the top-1 shortcut cannot
    order the remaining classes.
    """
    q = _check_prob_vector(p, C.K)
    risks = _risk_kernel(q[None, :], C._float_entries)[0]
    order = np.argsort(risks, kind="stable")
    return RankedOutput(order.astype(np.int64), risks, RISK)


def likelihood_rank(p) -> RankedOutput:
    """All classes by descending likelihood, ties by ascending index."""
    q = _check_prob_vector(p)
    order = np.argsort(-q, kind="stable")
    return RankedOutput(order.astype(np.int64), q, LIKELIHOOD)


def _normalize_basis(basis: str) -> str:
    if basis in (LIKELIHOOD, "likelihood"):
        return LIKELIHOOD
    if basis in (RISK, "crm", "risk"):
        return RISK
    raise ValueError(f"unknown ranking basis {basis!r}")


def _check_names(preds: PredictionSet, C: CostMatrix) -> None:
    if C.class_names is not None and preds.class_names != C.class_names:
        raise ValueError(
            "class order mismatch between predictions and cost matrix"
        )


def batch_apply(preds: PredictionSet, C: CostMatrix | None, basis: str,
                threads: int = 1) -> list[RankedOutput]:
    """Rank every sample under the chosen basis.

    Row i of the result is bit-identical to the single-sample call on
    row i. ``C`` may be None for the likelihood basis only. Batches are
    ranked with one vectorized argsort; the risk basis first runs the
    shared ascending-j kernel, chunked over rows when ``threads`` > 1.
    """
    b = _normalize_basis(basis)
    if b == RISK:
        if C is None:
            raise ValueError("risk basis requires a cost matrix")
        _check_names(preds, C)
        if preds.K != C.K:
            raise ValueError("prediction width does not match cost matrix")
        scores = _risk_matrix(preds.probs, C._float_entries, threads)
        order = np.argsort(scores, axis=1, kind="stable")
    else:
        if C is not None:
            _check_names(preds, C)
        scores = preds.probs
        order = np.argsort(-scores, axis=1, kind="stable")
    order = order.astype(np.int64, copy=False)
    return [RankedOutput(order[i], scores[i], b) for i in range(preds.N)]


def batch_crm_top1(preds: PredictionSet, C: CostMatrix,
                   use_fastpath: bool = False, threads: int = 1) -> np.ndarray:
    """Risk-minimizing top-1 index per row, optionally shortcut.

    The shortcut takes the argmax wherever a row's maximum exceeds 0.5
    and the full risk argmin elsewhere; output is identical either way.
    """
    _check_names(preds, C)
    if preds.K != C.K:
        raise ValueError("prediction width does not match cost matrix")
    P = preds.probs
    if not use_fastpath:
        return np.argmin(_risk_matrix(P, C._float_entries, threads), axis=1)
    top = np.argmax(P, axis=1)
    if preds.N == 0:
        return top
    conf = P[np.arange(preds.N), top]
    slow = conf <= 0.5
    if slow.any():
        risks = _risk_matrix(P[slow], C._float_entries, threads)
        top[slow] = np.argmin(risks, axis=1)
    return top
