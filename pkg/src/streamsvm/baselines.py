"""Comparison baselines: perceptron, block subgradient hinge, batch core-set l2-SVM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import _solve_enclosing
from .model import LinearModel
from .trainer import TrainingError, _blocks, _pad


@dataclass
class BaselineModel:
    """Weights of a plain linear baseline; ``n_updates`` counts weight changes."""

    w: np.ndarray
    n_updates: int
    algo: str

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def to_linear_model(self, C: float = 1.0) -> LinearModel:
        """Wrap as a LinearModel for the model file (no ball: R = s2 = 0)."""
        return LinearModel(self.w.copy(), 0.0, 0.0, max(1, self.n_updates), C)


@dataclass(frozen=True)
class SgdConfig:
    lam: float = 1e-4
    block_k: int = 1
    seed: int = 0
    project: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if self.block_k < 1:
            raise ValueError("block_k must be >= 1")


def train_perceptron(stream, chunk_size: int = 1024) -> BaselineModel:
    """Classical perceptron, one pass from w = 0; a zero margin counts as a mistake."""
    w = np.zeros(0)
    mistakes = 0
    for X, y, _ in _blocks(stream, chunk_size):
        w = _pad(w, X.shape[1])
        mistakes += int(_kernels.perceptron_fold(X, y, w))
    return BaselineModel(w, mistakes, "perceptron")


def train_sgd_hinge(stream, cfg: SgdConfig | None = None, chunk_size: int = 1024) -> BaselineModel:
    """Single sweep of a pegasos-style block subgradient rule.

    Block ``t`` (of ``k`` consecutive examples) uses step ``1/(lam*t)``:
    ``w <- (1 - eta*lam) w + (eta/k) * sum of y*x over margin violators``,
    violators judged against the weights before the block, followed by an
    optional projection onto the ball of radius ``1/sqrt(lam)``. A short
    final block divides by its own size.
    """
    cfg = cfg or SgdConfig()
    k = cfg.block_k
    # keep blocks from straddling read chunks
    chunk = k * max(1, math.ceil(chunk_size / k))
    w = np.zeros(0)
    t = 0
    for X, y, _ in _blocks(stream, chunk):
        w = _pad(w, X.shape[1])
        t = int(_kernels.sgd_fold(X, y, w, float(cfg.lam), k, t, bool(cfg.project)))
    return BaselineModel(w, t, f"sgd-k{k}")


def train_batch_l2svm_ref(ds, C: float = 1.0, epsilon: float = 1e-3,
                          max_iterations: int | None = None) -> LinearModel:
    """Batch (1+epsilon)-approximate l2-SVM via the core-set MEB in augmented space.

    Works on the implicit augmented points ``[y*x; e_n/sqrt(C)]``: the slack
    axes enter the solver as private per-point axes, never materialized.
    ``M`` is the number of points ever selected as farthest.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    X, y = ds.to_dense() if hasattr(ds, "to_dense") else _stack(ds)
    if X.shape[0] == 0:
        raise TrainingError("empty dataset")
    A = y[:, None] * X
    shift = A[0].copy()
    sig2 = np.full(A.shape[0], 1.0 / C)
    if max_iterations is None:
        max_iterations = math.ceil(1.0 / epsilon**2)
    gam, ub, lb, it, ok, touched = _solve_enclosing(A - shift, sig2, 0.0, epsilon, max_iterations)
    w = gam @ A
    s2 = float(gam @ gam) / C
    diff = A - w
    R = math.sqrt(float(np.max(np.einsum("ij,ij->i", diff, diff) + s2 - 2 * gam / C + 1.0 / C)))
    return LinearModel(w, R, s2, int(touched.sum()), C)


def _stack(stream):
    blocks = [(X, y) for X, y, _ in _blocks(stream, 4096)]
    if not blocks:
        return np.zeros((0, 0)), np.zeros(0)
    D = max(X.shape[1] for X, _ in blocks)
    return np.vstack([_pad(X, D) for X, _ in blocks]), np.concatenate([y for _, y in blocks])
