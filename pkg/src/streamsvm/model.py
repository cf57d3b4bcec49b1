"""SVM models as implicit balls in the augmented feature space.

An example ``(x, y)`` with stream index ``n`` maps to ``[y*phi(x); e_n/sqrt(C)]``.
A model stores the ball center through its feature part (``w`` or kernel
expansion) and the squared norm ``s2`` of its slack part. Slack axes of
unseen examples are orthogonal to the center, so distances to fresh
examples need nothing beyond these two pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .data import FormatError

MAGIC = "streamsvm-model v1"
XI_CONVENTIONS = ("corrected", "paper_literal")


def slack_unit(C: float, xi_convention: str) -> float:
    """Squared slack coordinate contributed by one new core vector."""
    if xi_convention == "corrected":
        return 1.0 / C
    if xi_convention == "paper_literal":
        return 1.0
    raise ValueError(f"unknown xi convention {xi_convention!r}")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "normalized_dot"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be > 0")

    @property
    def code(self) -> int:
        return {"linear": _kernels.KERNEL_LINEAR, "rbf": _kernels.KERNEL_RBF,
                "normalized_dot": _kernels.KERNEL_NORMALIZED_DOT}[self.kind]

    @property
    def kappa(self) -> float | None:
        """Constant value of k(x, x), or None when it depends on x."""
        return None if self.kind == "linear" else 1.0

    def __call__(self, a, b) -> float:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        return float(_kernels.kernel_row(a.reshape(1, -1), np.array([a @ a]), b, float(b @ b),
                                         self.code, float(self.gamma))[0])

    def to_text(self) -> str:
        return f"rbf gamma={self.gamma:.17g}" if self.kind == "rbf" else self.kind


@dataclass(eq=False)
class LinearModel:
    w: np.ndarray
    R: float = 0.0
    s2: float = 0.0
    M: int = 1
    C: float = 1.0
    xi_convention: str = "corrected"

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        _check_common(self.R, self.s2, self.C, self.xi_convention)
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "LinearModel":
        return LinearModel(self.w.copy(), self.R, self.s2, self.M, self.C, self.xi_convention)

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (self.w.tobytes() == other.w.tobytes() and self.w.shape == other.w.shape
                and _same(self.R, other.R) and _same(self.s2, other.s2)
                and self.M == other.M and _same(self.C, other.C)
                and self.xi_convention == other.xi_convention)


@dataclass(eq=False)
class KernelModel:
    """Kernel expansion ``center = sum_m alpha_m phi(sv_m)``; ``alpha`` carries the label sign.

    ``wn2`` caches the squared norm of that expansion.
    """

    sv: np.ndarray
    alpha: np.ndarray
    kernel: KernelSpec = field(default_factory=KernelSpec)
    R: float = 0.0
    s2: float = 0.0
    C: float = 1.0
    wn2: float = 0.0
    M: int = 1
    xi_convention: str = "corrected"

    def __post_init__(self):
        self.sv = np.atleast_2d(np.asarray(self.sv, dtype=np.float64))
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(-1)
        if self.sv.shape[0] != self.alpha.shape[0]:
            raise ValueError("support vectors and coefficients differ in count")
        if self.alpha.size == 0:
            raise ValueError("kernel model needs at least one support vector")
        if not np.all(np.isfinite(self.alpha)):
            raise ValueError("coefficients must be finite")
        _check_common(self.R, self.s2, self.C, self.xi_convention)

    @property
    def dim(self) -> int:
        return self.sv.shape[1]

    @property
    def sv_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.sv, self.sv)

    def expanded_w(self) -> np.ndarray:
        """Primal weights; meaningful for the linear kernel only."""
        return self.alpha @ self.sv

    def __eq__(self, other):
        if not isinstance(other, KernelModel):
            return NotImplemented
        return (self.sv.shape == other.sv.shape and self.sv.tobytes() == other.sv.tobytes()
                and self.alpha.tobytes() == other.alpha.tobytes()
                and self.kernel == other.kernel and _same(self.R, other.R)
                and _same(self.s2, other.s2) and _same(self.C, other.C)
                and _same(self.wn2, other.wn2) and self.M == other.M
                and self.xi_convention == other.xi_convention)


def _same(a: float, b: float) -> bool:
    return np.float64(a).tobytes() == np.float64(b).tobytes()


def _check_common(R, s2, C, xi):
    if not (math.isfinite(R) and math.isfinite(s2) and math.isfinite(C)):
        raise ValueError("model scalars must be finite")
    if R < 0:
        raise ValueError("invariant violation: negative radius")
    if s2 < 0:
        raise ValueError("invariant violation: negative slack norm")
    if not C > 0:
        raise ValueError("invariant violation: C must be > 0")
    if xi not in XI_CONVENTIONS:
        raise ValueError(f"unknown xi convention {xi!r}")


def _check_label(y):
    if y not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {y!r}")


def aug_distance_linear(m: LinearModel, x, y: int) -> float:
    """Distance from the model's center to a fresh augmented example."""
    _check_label(y)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != m.dim:
        raise ValueError(f"dimension mismatch: x has dim {x.shape[0]}, model has {m.dim}")
    diff = m.w - y * x
    return math.sqrt(float(diff @ diff) + m.s2 + 1.0 / m.C)


def aug_distance_kernel(m: KernelModel, x, y: int) -> float:
    _check_label(y)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != m.dim:
        raise ValueError(f"dimension mismatch: x has dim {x.shape[0]}, model has {m.dim}")
    xx = float(x @ x)
    code = m.kernel.code
    f = float(m.alpha @ _kernels.kernel_row(m.sv, m.sv_sq, x, xx, code, float(m.kernel.gamma)))
    kxx = float(_kernels.self_kernel(xx, code))
    return math.sqrt(max(m.wn2 + kxx - 2.0 * y * f + m.s2 + 1.0 / m.C, 0.0))


def decision_function(m, X) -> np.ndarray:
    """Scores for the rows of ``X``; columns are zero-padded or cut to the model dim.

    Cutting is exact for linear models (absent weights are zero) and for
    kernel models only when the dropped columns are zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if isinstance(m, KernelModel):
        X = _fit_columns(X, m.dim, strict=True)
        if m.kernel.kind == "linear":
            return X @ m.expanded_w()
        out = np.empty(X.shape[0])
        sv_sq = m.sv_sq
        code, gamma = m.kernel.code, float(m.kernel.gamma)
        for i, x in enumerate(X):
            out[i] = m.alpha @ _kernels.kernel_row(m.sv, sv_sq, x, float(x @ x), code, gamma)
        return out
    w = np.asarray(m.w)
    return _fit_columns(X, w.shape[0], strict=False) @ w


def _fit_columns(X, dim, strict):
    if X.shape[1] == dim:
        return X
    if X.shape[1] < dim:
        return np.hstack([X, np.zeros((X.shape[0], dim - X.shape[1]))])
    if strict and np.any(X[:, dim:] != 0):
        raise ValueError(f"dimension mismatch: input uses features beyond model dim {dim}")
    return X[:, :dim]


def widen_model(m, dim: int):
    """Copy of ``m`` accepting ``dim`` features; the new coordinates are zero.

    Exact for every supported kernel: zero columns change no dot product or norm.
    """
    if dim < m.dim:
        raise ValueError(f"cannot narrow a model from {m.dim} to {dim} features")
    if isinstance(m, KernelModel):
        sv = np.hstack([m.sv, np.zeros((m.sv.shape[0], dim - m.dim))])
        return KernelModel(sv, m.alpha.copy(), m.kernel, m.R, m.s2, m.C, m.wn2, m.M, m.xi_convention)
    return LinearModel(np.concatenate([m.w, np.zeros(dim - m.dim)]), m.R, m.s2, m.M, m.C,
                       m.xi_convention)


def predict(m, x) -> tuple[float, int]:
    """Score and label for one input; a score of exactly 0 maps to +1."""
    score = float(decision_function(m, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
    return score, 1 if score >= 0 else -1


def predict_labels(m, X) -> np.ndarray:
    return np.where(decision_function(m, X) >= 0, 1, -1)


# ---------------------------------------------------------------------------
# model file format v1

def _g(v: float) -> str:
    return f"{v:.17g}"


def serialize_model(m) -> str:
    lines = [MAGIC]
    if isinstance(m, LinearModel):
        lines += ["kind=linear", f"C={_g(m.C)}", f"R={_g(m.R)}", f"s2={_g(m.s2)}", f"M={m.M}",
                  f"xi={m.xi_convention}", f"dim={m.dim}",
                  "w=" + " ".join(_g(v) for v in m.w.tolist())]
    elif isinstance(m, KernelModel):
        lines += ["kind=kernel", f"C={_g(m.C)}", f"R={_g(m.R)}", f"s2={_g(m.s2)}", f"M={m.M}",
                  f"xi={m.xi_convention}", f"dim={m.dim}", f"wn2={_g(m.wn2)}",
                  f"kernel={m.kernel.to_text()}", f"nsv={m.alpha.shape[0]}"]
        for a, row in zip(m.alpha.tolist(), m.sv):
            nz = np.flatnonzero((row != 0) | np.signbit(row))
            feats = " ".join(f"{i + 1}:{_g(v)}" for i, v in zip(nz.tolist(), row[nz].tolist()))
            lines.append(f"sv= {_g(a)}" + (" " + feats if feats else ""))
    else:
        raise TypeError(f"cannot serialize {type(m).__name__}")
    return "\n".join(lines) + "\n"


def _real(lineno, text, name):
    try:
        v = float(text)
    except ValueError:
        raise FormatError(lineno, f"malformed number for {name}: {text!r}") from None
    if not math.isfinite(v):
        raise FormatError(lineno, f"non-finite value for {name}")
    return v


def _int(lineno, text, name):
    try:
        return int(text)
    except ValueError:
        raise FormatError(lineno, f"malformed integer for {name}: {text!r}") from None


def deserialize_model(text: str):
    """Parse the v1 model format. Errors carry the offending line number."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        got = lines[0].strip() if lines else ""
        raise FormatError(1, f"version mismatch: expected {MAGIC!r}, got {got!r}")
    fields: dict[str, tuple[int, str]] = {}
    svs: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(lineno, f"expected key=value, got {line!r}")
        key = key.strip()
        if key == "sv":
            svs.append((lineno, value))
        elif key in fields:
            raise FormatError(lineno, f"duplicate field {key!r}")
        else:
            fields[key] = (lineno, value.strip())

    def need(key):
        if key not in fields:
            raise FormatError(len(lines), f"missing field {key!r}")
        return fields[key]

    kind_line, kind = need("kind")
    scalars = {}
    for key in ("C", "R", "s2"):
        ln, v = need(key)
        scalars[key] = _real(ln, v, key)
    ln, v = need("R")
    if scalars["R"] < 0:
        raise FormatError(ln, "invariant violation: negative radius")
    ln, v = need("s2")
    if scalars["s2"] < 0:
        raise FormatError(ln, "invariant violation: negative slack norm")
    ln, v = need("C")
    if scalars["C"] <= 0:
        raise FormatError(ln, "invariant violation: C must be > 0")
    ln, v = need("M")
    M = _int(ln, v, "M")
    if M < 1:
        raise FormatError(ln, "invariant violation: M must be >= 1")
    xi_line, xi = fields.get("xi", (0, "corrected"))
    if xi not in XI_CONVENTIONS:
        raise FormatError(xi_line, f"unknown xi convention {xi!r}")
    ln, v = need("dim")
    dim = _int(ln, v, "dim")
    if dim < 0:
        raise FormatError(ln, "negative dim")

    if kind == "linear":
        ln, v = need("w")
        w = np.array([_real(ln, t, "w") for t in v.split()], dtype=np.float64)
        if w.shape[0] != dim:
            raise FormatError(ln, f"w has {w.shape[0]} entries, dim={dim}")
        return LinearModel(w, scalars["R"], scalars["s2"], M, scalars["C"], xi)
    if kind != "kernel":
        raise FormatError(kind_line, f"unknown model kind {kind!r}")

    ln, v = need("wn2")
    wn2 = _real(ln, v, "wn2")
    ln, v = need("kernel")
    kernel = _parse_kernel(ln, v)
    ln, v = need("nsv")
    nsv = _int(ln, v, "nsv")
    if nsv != len(svs) or nsv < 1:
        raise FormatError(ln, f"nsv={nsv} but {len(svs)} sv lines")
    sv = np.zeros((nsv, dim))
    alpha = np.empty(nsv)
    for r, (ln, v) in enumerate(svs):
        toks = v.split()
        if not toks:
            raise FormatError(ln, "sv line without coefficient")
        alpha[r] = _real(ln, toks[0], "alpha")
        last = 0
        for tok in toks[1:]:
            i, sep, val = tok.partition(":")
            if not sep:
                raise FormatError(ln, f"expected idx:val, got {tok!r}")
            idx = _int(ln, i, "feature index")
            if idx <= last or idx > dim:
                raise FormatError(ln, f"feature index {idx} out of order or beyond dim")
            sv[r, idx - 1] = _real(ln, val, "feature")
            last = idx
    return KernelModel(sv, alpha, kernel, scalars["R"], scalars["s2"], scalars["C"], wn2, M, xi)


def _parse_kernel(lineno, text) -> KernelSpec:
    toks = text.split()
    if not toks:
        raise FormatError(lineno, "empty kernel spec")
    if toks[0] == "rbf":
        if len(toks) != 2 or not toks[1].startswith("gamma="):
            raise FormatError(lineno, "rbf kernel needs gamma=")
        gamma = _real(lineno, toks[1][len("gamma="):], "gamma")
        if gamma <= 0:
            raise FormatError(lineno, "rbf gamma must be > 0")
        return KernelSpec("rbf", gamma)
    if toks[0] in ("linear", "normalized_dot") and len(toks) == 1:
        return KernelSpec(toks[0])
    raise FormatError(lineno, f"unknown kernel {text!r}")


def save_model(m, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(m))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return deserialize_model(fh.read())
