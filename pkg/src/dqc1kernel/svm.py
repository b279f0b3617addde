"""Soft-margin kernel SVM on precomputed Gram matrices.

Training runs sequential minimal optimization with second-order
working-set selection (see ``_smo_py`` for the algorithm; a compiled
backend is selected at import).  Gram matrices here may be indefinite --
the quantum kernels store |K|, which has no PSD guarantee -- so negative
second-derivative denominators are clamped during selection and the clamp
count is surfaced in the model metadata.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import BACKEND, smo_solve
from ._smo_py import _kkt_state

__all__ = [
    "SUPPORT_TOL",
    "SvmModel",
    "CvReport",
    "train_smo",
    "predict",
    "decision_values",
    "score",
    "cross_validate",
    "rbf_gram",
]

SUPPORT_TOL = 1e-10

# Hard iteration cap: generous next to typical convergence (a few sweeps)
# but bounds the worst case on indefinite Grams at large C.
_MAX_ITER_FLOOR = 100_000
_MAX_ITER_PER_SAMPLE = 125


@dataclass
class SvmModel:
    """Trained dual solution plus the solver's exit diagnostics."""

    alphas: np.ndarray
    bias: float
    support_indices: np.ndarray
    labels: np.ndarray
    hyper_c: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "support_indices": self.support_indices.tolist(),
            "labels": self.labels.tolist(),
            "hyper_c": self.hyper_c,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        doc = json.loads(text)
        return cls(
            alphas=np.asarray(doc["alphas"], dtype=float),
            bias=float(doc["bias"]),
            support_indices=np.asarray(doc["support_indices"], dtype=int),
            labels=np.asarray(doc["labels"], dtype=int),
            hyper_c=float(doc["hyper_c"]),
            meta=doc.get("meta", {}),
        )


@dataclass
class CvReport:
    """Cross-validation scores over a (C, gamma) grid."""

    grid: list
    fold_scores: np.ndarray  # shape (len(grid), folds)
    best: tuple
    best_mean_score: float


def _gram_values(gram) -> np.ndarray:
    values = getattr(gram, "values", gram)
    return np.ascontiguousarray(values, dtype=np.float64)


def _check_labels(labels, size: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (size,):
        raise ValueError(f"expected {size} labels, got shape {labels.shape}")
    as_int = labels.astype(int)
    if not np.array_equal(as_int, labels) or not np.all(np.isin(as_int, (-1, 1))):
        raise ValueError("labels must be +1/-1")
    return as_int


def train_smo(
    gram,
    labels,
    c: float,
    tol: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
) -> SvmModel:
    """Train on a square precomputed Gram matrix.

    ``max_passes`` is the number of consecutive non-improving sweeps
    tolerated before the solver declares a stall.  ``seed`` is accepted
    for interface stability; the second-order working-set rule is fully
    deterministic so it is not consulted.
    """
    k = _gram_values(gram)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"training Gram must be square, got shape {k.shape}")
    m = k.shape[0]
    y_int = _check_labels(labels, m)
    if len(np.unique(y_int)) < 2:
        raise ValueError("training labels must contain both classes")
    if c <= 0:
        raise ValueError("C must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_passes < 1:
        raise ValueError("max_passes must be >= 1")

    y = y_int.astype(np.float64)
    max_iter = max(_MAX_ITER_FLOOR, _MAX_ITER_PER_SAMPLE * m)
    state = smo_solve(k, y, float(c), float(tol), int(max_passes), int(max_iter))
    alpha = state["alpha"]
    bias = _bias(k, y, float(c), alpha, state["grad"])
    support = np.flatnonzero(alpha > SUPPORT_TOL)
    meta = {
        "converged": state["converged"],
        "iterations": int(state["iterations"]),
        "kkt_gap": float(state["kkt_gap"]),
        "n_clamped": int(state["n_clamped"]),
        "objective": float(state["objective"]),
        "tol": tol,
        "max_passes": max_passes,
        "backend": BACKEND,
    }
    return SvmModel(
        alphas=alpha,
        bias=bias,
        support_indices=support,
        labels=y_int,
        hyper_c=float(c),
        meta=meta,
    )


def _bias(k, y, c, alpha, grad) -> float:
    """Average y_i - f_0(x_i) over free support vectors; midpoint of the
    KKT bracket when no vector is strictly inside the box."""
    free = (alpha > 0.0) & (alpha < c)
    if free.any():
        u = k[free] @ (alpha * y)
        return float(np.mean(y[free] - u))
    _, m_up, m_low = _kkt_state(k, y, c, alpha, grad)
    if not np.isfinite(m_up) or not np.isfinite(m_low):
        return 0.0
    return float(0.5 * (m_up + m_low))


def decision_values(model: SvmModel, kernel_rows) -> np.ndarray:
    """f(x) = sum_i alpha_i y_i K(x, x_i) + b for each row of kernel_rows."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=np.float64))
    if rows.shape[1] != model.alphas.shape[0]:
        raise ValueError(
            f"kernel rows have {rows.shape[1]} columns, expected "
            f"{model.alphas.shape[0]} (training size)"
        )
    return rows @ (model.alphas * model.labels) + model.bias


def predict(model: SvmModel, kernel_row) -> int:
    """Predicted label for one sample; sign(0) is +1."""
    value = decision_values(model, kernel_row)[0]
    return 1 if value >= 0.0 else -1


def score(model: SvmModel, gram_cross, labels) -> float:
    """Accuracy of the model on rows of a (test x train) Gram matrix."""
    rows = _gram_values(gram_cross)
    if rows.ndim != 2:
        raise ValueError("cross Gram must be 2-D")
    y = _check_labels(labels, rows.shape[0])
    values = decision_values(model, rows)
    predicted = np.where(values >= 0.0, 1, -1)
    return float(np.mean(predicted == y))


def rbf_gram(xs_a, xs_b, gamma: float) -> np.ndarray:
    """exp(-gamma ||x - x'||^2) for all pairs."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a = np.asarray(xs_a, dtype=np.float64)
    b = np.asarray(xs_b, dtype=np.float64)
    d2 = np.maximum(
        np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T),
        0.0,
    )
    return np.exp(-gamma * d2)


def _stratified_folds(labels: np.ndarray, folds: int, seed: int) -> list:
    """Seeded stratified fold assignment; returns test-index arrays."""
    rng = np.random.default_rng(seed)
    assignments = [[] for _ in range(folds)]
    for cls in (-1, 1):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        for f in range(folds):
            assignments[f].append(idx[f::folds])
    return [np.sort(np.concatenate(parts)) for parts in assignments]


def cross_validate(
    features,
    labels,
    folds: int,
    grid,
    seed: int = 0,
    tol: float = 1e-3,
    max_passes: int = 10,
    n_threads: int = 1,
) -> CvReport:
    """Stratified k-fold cross-validation of the RBF-kernel SVM.

    ``grid`` is a list of (C, gamma) pairs.  Fold assignment is a seeded
    stratified shuffle; each (grid point, fold) task trains on the fold
    complement and scores the held-out fold.  Tasks run on up to
    ``n_threads`` threads with results keyed by index, so the report does
    not depend on scheduling order.
    """
    x = np.asarray(features, dtype=np.float64)
    y = _check_labels(labels, x.shape[0])
    grid = [(float(c), float(g)) for c, g in grid]
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if not grid:
        raise ValueError("grid must be non-empty")
    class_sizes = [int(np.sum(y == cls)) for cls in (-1, 1)]
    if folds > min(class_sizes):
        raise ValueError(
            f"folds={folds} exceeds the minority class size {min(class_sizes)}"
        )

    fold_test = _stratified_folds(y, folds, seed)
    all_idx = np.arange(x.shape[0])
    fold_train = [np.setdiff1d(all_idx, test) for test in fold_test]

    # one full Gram per distinct gamma, sliced per fold
    gammas = sorted({g for _, g in grid})
    grams = {g: rbf_gram(x, x, g) for g in gammas}

    def run(task):
        gi, fi = task
        c_val, g_val = grid[gi]
        tr, te = fold_train[fi], fold_test[fi]
        sub = np.ascontiguousarray(grams[g_val][np.ix_(tr, tr)])
        model = train_smo(sub, y[tr], c_val, tol=tol, max_passes=max_passes)
        cross = grams[g_val][np.ix_(te, tr)]
        return score(model, cross, y[te])

    tasks = [(gi, fi) for gi in range(len(grid)) for fi in range(folds)]
    fold_scores = np.zeros((len(grid), folds))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    for (gi, fi), value in zip(tasks, results):
        fold_scores[gi, fi] = value

    means = fold_scores.mean(axis=1)
    best_index = int(np.argmax(means))
    return CvReport(
        grid=grid,
        fold_scores=fold_scores,
        best=grid[best_index],
        best_mean_score=float(means[best_index]),
    )
