"""Single-pass trainers.

All trainers consume their input exactly once, in blocks of
``TrainConfig.chunk_size`` examples, so storage is constant in the stream
length (plus the lookahead buffer). They never reorder the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import islice

import numpy as np

from . import _kernels
from .data import Example
from .geometry import DEFAULT_UPDATE_TOL, Ball, MebSolverConfig, MergeSolverError, \
    enclose_ball_and_points_affine
from .model import KernelModel, KernelSpec, LinearModel, slack_unit


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    L: int = 1
    update_tol: float = DEFAULT_UPDATE_TOL
    merge: MebSolverConfig = field(default_factory=MebSolverConfig)
    xi_convention: str = "corrected"
    # stream shuffling happens upstream; the trainers never read this
    seed: int = 0
    chunk_size: int = 1024

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if self.L < 1:
            raise ValueError("lookahead L must be >= 1")
        if self.update_tol < 0:
            raise ValueError("update_tol must be >= 0")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        slack_unit(self.C, self.xi_convention)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainTrace:
    """One record per accepted (or buffered) example.

    ``R_after`` of a buffered example is the radius after the flush that
    absorbed it; ``flush`` marks the last example of each flush.
    """

    pos: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    d: np.ndarray = field(default_factory=lambda: np.zeros(0))
    R_before: np.ndarray = field(default_factory=lambda: np.zeros(0))
    R_after: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flush: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    n_examples: int = 0
    n_flushes: int = 0

    def __len__(self):
        return self.pos.shape[0]


class _TraceBuilder:
    def __init__(self):
        self.parts = []

    def add(self, pos, d, rb, ra, flush):
        self.parts.append((np.asarray(pos, dtype=np.int64), np.asarray(d, dtype=np.float64),
                           np.asarray(rb, dtype=np.float64), np.asarray(ra, dtype=np.float64),
                           np.asarray(flush, dtype=bool)))

    def build(self, n_examples, n_flushes=0) -> TrainTrace:
        if not self.parts:
            return TrainTrace(n_examples=n_examples, n_flushes=n_flushes)
        cols = [np.concatenate(c) for c in zip(*self.parts)]
        return TrainTrace(*cols, n_examples=n_examples, n_flushes=n_flushes)


def _blocks(stream, chunk: int):
    """Read ``stream`` once, yielding dense ``(X, y, start)`` blocks.

    Items are :class:`Example` objects or ``(x, y)`` pairs with dense ``x``.
    The block width is the widest vector seen so far.
    """
    it = iter(stream)
    start = 0
    dim = 0
    while True:
        items = list(islice(it, chunk))
        if not items:
            return
        rows = []
        ys = np.empty(len(items))
        for k, item in enumerate(items):
            if isinstance(item, Example):
                rows.append(item)
                dim = max(dim, item.max_index)
                ys[k] = item.label
            else:
                x, label = item
                x = np.asarray(x, dtype=np.float64).reshape(-1)
                rows.append(x)
                dim = max(dim, x.shape[0])
                ys[k] = label
        X = np.zeros((len(items), dim))
        for k, r in enumerate(rows):
            if isinstance(r, Example):
                X[k, r.indices - 1] = r.values
            else:
                X[k, :r.shape[0]] = r
        bad_label = np.flatnonzero((ys != 1) & (ys != -1))
        if bad_label.size:
            i = int(bad_label[0])
            raise TrainingError(f"stream index {start + i}: label must be -1 or +1, got {ys[i]!r}")
        bad = np.flatnonzero(~np.all(np.isfinite(X), axis=1))
        if bad.size:
            raise TrainingError(f"stream index {start + int(bad[0])}: non-finite feature value")
        yield X, ys, start
        start += len(items)


def _pad(v: np.ndarray, dim: int) -> np.ndarray:
    if v.shape[-1] >= dim:
        return v
    width = [(0, 0)] * (v.ndim - 1) + [(0, dim - v.shape[-1])]
    return np.pad(v, width)


def train_stream_l1(stream, cfg: TrainConfig | None = None) -> tuple[LinearModel, TrainTrace]:
    """One pass of the closed-form ball update in augmented space.

    For each example the distance ``d`` from the current center is
    compared with the radius. When the example lies outside, the step
    ``s = (1 - R/d)/2`` (with the radius before the update) moves the
    weights and the slack norm, and the radius becomes ``(R + d)/2``.
    """
    cfg = cfg or TrainConfig()
    inv_c = 1.0 / cfg.C
    unit = slack_unit(cfg.C, cfg.xi_convention)
    trace = _TraceBuilder()
    w = None
    state = np.zeros(3)
    n_seen = 0
    for X, y, start in _blocks(stream, cfg.chunk_size):
        n_seen = start + X.shape[0]
        first = 0
        if w is None:
            w = y[0] * X[0]
            state[:] = (0.0, unit, 1.0)
            first = 1
        w = _pad(w, X.shape[1])
        rows = X[first:]
        tp = np.empty(rows.shape[0], dtype=np.int64)
        td = np.empty(rows.shape[0])
        trb = np.empty(rows.shape[0])
        k = _kernels.l1_fold(rows, y[first:], w, state, inv_c, unit, cfg.update_tol,
                             start + first, tp, td, trb)
        if k:
            ra = 0.5 * (trb[:k] + td[:k])
            trace.add(tp[:k], td[:k], trb[:k], ra, np.ones(k, dtype=bool))
    if w is None:
        raise TrainingError("empty stream")
    model = LinearModel(w, float(state[0]), float(state[1]), int(state[2]), cfg.C, cfg.xi_convention)
    return model, trace.build(n_seen, model.M - 1)


class _LookaheadState:
    """Ball state shared by the linear lookahead pass and its kernel twin."""

    def __init__(self, cfg: TrainConfig, track_expansion: bool):
        self.cfg = cfg
        self.inv_c = 1.0 / cfg.C
        self.unit = slack_unit(cfg.C, cfg.xi_convention)
        self.w = None
        self.R = 0.0
        self.s2 = 0.0
        self.M = 0
        self.buf_x = []   # signed feature vectors y*x
        self.buf_pos = []
        self.buf_d = []
        self.buf_rb = []
        self.trace = _TraceBuilder()
        self.n_flushes = 0
        self.track = track_expansion
        self.sv = []
        self.alpha = np.zeros(0)

    def init(self, x, y):
        self.w = y * x
        self.s2 = self.unit
        self.M = 1
        if self.track:
            self.sv.append(x.copy())
            self.alpha = np.array([float(y)])

    def flush(self):
        L = len(self.buf_x)
        if not L:
            return
        dim = self.w.shape[0]
        Y = np.array([_pad(v, dim) for v in self.buf_x])
        if L == 1:
            # same arithmetic as the closed-form pass
            d = self.buf_d[0]
            s = 0.5 * (1.0 - self.R / d)
            diff = self.w - Y[0]
            self.w = self.w - s * diff
            self.s2 = self.s2 * (1.0 - s) ** 2 + s * s * self.unit
            self.R = self.R + 0.5 * (d - self.R)
            beta = np.array([1.0 - s, s])
        else:
            root = math.sqrt(self.unit)
            c0 = np.concatenate([self.w, [math.sqrt(self.s2)], np.zeros(L)])
            P = np.zeros((L, dim + 1 + L))
            P[:, :dim] = Y
            P[np.arange(L), dim + 1 + np.arange(L)] = root
            try:
                ball, beta = enclose_ball_and_points_affine(Ball(c0, self.R), P, self.cfg.merge)
            except MergeSolverError as exc:
                raise TrainingError(
                    f"lookahead flush ending at stream index {self.buf_pos[-1]}: {exc}") from exc
            self.w = beta[0] * self.w + beta[1:] @ Y
            self.s2 = beta[0] ** 2 * self.s2 + float(beta[1:] @ beta[1:]) * self.unit
            self.R = ball.radius
        if self.track:
            self.alpha = np.concatenate([beta[0] * self.alpha, beta[1:] * np.array(self._buf_y)])
            self.sv.extend(self._buf_raw)
        self.M += L
        flags = np.zeros(L, dtype=bool)
        flags[-1] = True
        self.trace.add(self.buf_pos, self.buf_d, self.buf_rb, np.full(L, self.R), flags)
        self.n_flushes += 1
        self.buf_x, self.buf_pos, self.buf_d, self.buf_rb = [], [], [], []
        self._buf_y, self._buf_raw = [], []

    def run(self, stream):
        L = self.cfg.L
        self._buf_y, self._buf_raw = [], []
        out_pos = np.empty(L, dtype=np.int64)
        out_d = np.empty(L)
        n_seen = 0
        for X, y, start in _blocks(stream, self.cfg.chunk_size):
            n_seen = start + X.shape[0]
            i = 0
            if self.w is None:
                self.init(X[0], y[0])
                i = 1
            self.w = _pad(self.w, X.shape[1])
            n = X.shape[0]
            while i < n:
                want = L - len(self.buf_x)
                cnt, i = _kernels.scan_outside(X, y, i, self.w, self.s2, self.inv_c, self.R,
                                               self.cfg.update_tol, want, out_pos, out_d)
                for k in range(cnt):
                    r = out_pos[k]
                    self.buf_x.append(y[r] * X[r])
                    self.buf_pos.append(start + r)
                    self.buf_d.append(out_d[k])
                    self.buf_rb.append(self.R)
                    if self.track:
                        self._buf_y.append(y[r])
                        self._buf_raw.append(X[r].copy())
                if len(self.buf_x) == L:
                    self.flush()
        if self.w is None:
            raise TrainingError("empty stream")
        self.flush()
        return n_seen


def train_stream_lookahead(stream, cfg: TrainConfig | None = None) -> tuple[LinearModel, TrainTrace]:
    """Single pass with a buffer of up to ``cfg.L`` examples outside the ball.

    A full buffer (and any remainder at the end of the stream) is merged
    with the current ball by one enclosing-ball solve. The solve runs on
    explicit vectors in a ``D + 1 + |buffer|`` dimensional space: the
    center's whole slack part collapses onto one axis (valid because the
    buffered examples' slack axes are fresh), and each buffered example
    gets its own slack axis.

    ``M`` counts every buffered example, so it is an upper bound on the
    number of support vectors.
    """
    cfg = cfg or TrainConfig()
    if cfg.xi_convention != "corrected" and cfg.L > 1:
        raise ValueError("lookahead L > 1 needs the corrected slack convention "
                         "(the literal recurrence has no geometric embedding)")
    st = _LookaheadState(cfg, track_expansion=False)
    n_seen = st.run(stream)
    model = LinearModel(st.w, st.R, st.s2, st.M, cfg.C, cfg.xi_convention)
    return model, st.trace.build(n_seen, st.n_flushes)


def train_stream_kernel(stream, cfg: TrainConfig | None = None,
                        kernel: KernelSpec | None = None) -> tuple[KernelModel, TrainTrace]:
    """Kernelized single pass storing signed coefficients over core vectors.

    On each update every stored coefficient shrinks by ``1 - s`` and the
    new example enters with coefficient ``s * y``. The squared norm of the
    expansion is carried as a scalar so one distance costs O(M) kernel
    evaluations.
    """
    cfg = cfg or TrainConfig()
    kernel = kernel or KernelSpec()
    if cfg.L > 1:
        if kernel.kind != "linear":
            raise ValueError("lookahead L > 1 is unsupported for non-linear kernels")
        return _kernel_linear_lookahead(stream, cfg, kernel)

    inv_c = 1.0 / cfg.C
    unit = slack_unit(cfg.C, cfg.xi_convention)
    code, gamma = kernel.code, float(kernel.gamma)
    trace = _TraceBuilder()
    sv = sv_sq = alpha = None
    state = np.zeros(4)
    n_seen = 0
    for X, y, start in _blocks(stream, cfg.chunk_size):
        n_seen = start + X.shape[0]
        first = 0
        if sv is None:
            cap = max(16, X.shape[0])
            sv = np.zeros((cap, X.shape[1]))
            sv_sq = np.zeros(cap)
            alpha = np.zeros(cap)
            sv[0] = X[0]
            sv_sq[0] = X[0] @ X[0]
            alpha[0] = y[0]
            state[:] = (0.0, unit, 1.0, _kernels.self_kernel(sv_sq[0], code))
            first = 1
        m = int(state[2])
        need = m + X.shape[0]
        if need > sv.shape[0] or X.shape[1] > sv.shape[1]:
            cap = max(need, 2 * sv.shape[0])
            dim = max(X.shape[1], sv.shape[1])
            grown = np.zeros((cap, dim))
            grown[:m, :sv.shape[1]] = sv[:m]
            sv = grown
            sv_sq = np.concatenate([sv_sq[:m], np.zeros(cap - m)])
            alpha = np.concatenate([alpha[:m], np.zeros(cap - m)])
        rows = _pad(X[first:], sv.shape[1])
        tp = np.empty(rows.shape[0], dtype=np.int64)
        td = np.empty(rows.shape[0])
        trb = np.empty(rows.shape[0])
        k = _kernels.kernel_fold(rows, y[first:], sv, sv_sq, alpha, state, inv_c, unit,
                                 cfg.update_tol, code, gamma, start + first, tp, td, trb)
        if k:
            trace.add(tp[:k], td[:k], trb[:k], 0.5 * (trb[:k] + td[:k]), np.ones(k, dtype=bool))
    if sv is None:
        raise TrainingError("empty stream")
    m = int(state[2])
    model = KernelModel(sv[:m].copy(), alpha[:m].copy(), kernel, float(state[0]), float(state[1]),
                        cfg.C, float(state[3]), m, cfg.xi_convention)
    return model, trace.build(n_seen, m - 1)


def _kernel_linear_lookahead(stream, cfg, kernel):
    if cfg.xi_convention != "corrected":
        raise ValueError("lookahead L > 1 needs the corrected slack convention")
    st = _LookaheadState(cfg, track_expansion=True)
    n_seen = st.run(stream)
    dim = st.w.shape[0]
    sv = np.array([_pad(v, dim) for v in st.sv])
    wn2 = float(st.w @ st.w)
    model = KernelModel(sv, st.alpha, kernel, st.R, st.s2, cfg.C, wn2, st.M, cfg.xi_convention)
    return model, st.trace.build(n_seen, st.n_flushes)


def _collect(stream, chunk: int, limit: int | None = None):
    blocks = []
    n = 0
    for X, y, _ in _blocks(stream, chunk):
        n += X.shape[0]
        if limit is not None and n > limit:
            raise TrainingError(f"explicit reference refuses more than {limit} examples")
        blocks.append((X, y))
    if not blocks:
        raise TrainingError("empty stream")
    D = max(X.shape[1] for X, _ in blocks)
    return np.vstack([_pad(X, D) for X, _ in blocks]), np.concatenate([y for _, y in blocks])


def _augment(X, y, C):
    N, D = X.shape
    P = np.zeros((N, D + N))
    P[:, :D] = y[:, None] * X
    P[np.arange(N), D + np.arange(N)] = 1.0 / math.sqrt(C)
    return P


def materialize_augmented(stream, C: float) -> np.ndarray:
    """Explicit augmented points ``[y*x; e_n/sqrt(C)]`` as rows."""
    X, y = _collect(stream, 4096)
    return _augment(X, y, C)


def train_explicit_reference(stream, cfg: TrainConfig | None = None,
                             max_examples: int = 2000) -> LinearModel:
    """Closed-form pass on explicitly materialized augmented vectors.

    Every example becomes ``[y*x; e_n/sqrt(C)]`` in ``R^(D+N)``, so this
    costs O(N*(D+N)) memory and exists only to check the implicit trainers.
    """
    cfg = cfg or TrainConfig()
    if cfg.xi_convention != "corrected":
        raise ValueError("the explicit reference only exists for the corrected convention")
    X, y = _collect(stream, cfg.chunk_size, max_examples)
    D = X.shape[1]
    P = _augment(X, y, cfg.C)
    c = P[0].copy()
    R = 0.0
    M = 1
    for i in range(1, P.shape[0]):
        d = float(np.linalg.norm(P[i] - c))
        if d > R * (1.0 + cfg.update_tol):
            s = 0.5 * (1.0 - R / d)
            c = c + s * (P[i] - c)
            R = R + 0.5 * (d - R)
            M += 1
    slack = c[D:]
    return LinearModel(c[:D], R, float(slack @ slack), M, cfg.C)
