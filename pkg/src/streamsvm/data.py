"""Datasets: svmlight text format, synthetic Gaussian clusters, seeded stream order."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy.special import ndtr

SYNTH_HEADER = "# streamsvm-synth v1 seed={seed} sep={sep}"


class FormatError(ValueError):
    """Malformed input text; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Example:
    """One labelled example with a sparse feature vector (1-based indices)."""

    label: int
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        if idx.size:
            if idx[0] < 1 or np.any(np.diff(idx) <= 0):
                raise ValueError("feature indices must be >= 1 and strictly increasing")
            if not np.all(np.isfinite(val)):
                raise ValueError("feature values must be finite")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, x, label: int) -> "Example":
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        nz = np.flatnonzero(x)
        return cls(label, nz + 1, x[nz])

    @property
    def max_index(self) -> int:
        return int(self.indices[-1]) if self.indices.size else 0

    def dense(self, dim: int) -> np.ndarray:
        x = np.zeros(dim)
        x[self.indices - 1] = self.values
        return x

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return (self.label == other.label
                and np.array_equal(self.indices, other.indices)
                and self.values.tobytes() == other.values.tobytes())

    def __hash__(self):
        return hash((self.label, self.indices.tobytes(), self.values.tobytes()))


@dataclass(eq=False)
class Dataset:
    examples: list
    dim: int = 0

    def __post_init__(self):
        self.examples = list(self.examples)
        needed = max((e.max_index for e in self.examples), default=0)
        if self.dim < needed:
            self.dim = needed

    def __len__(self):
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.dim == other.dim and self.examples == other.examples

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.examples], dtype=np.float64)

    def to_dense(self, dim: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(X, y)``; features beyond ``dim`` are dropped."""
        dim = self.dim if dim is None else dim
        X = np.zeros((len(self.examples), dim))
        for i, e in enumerate(self.examples):
            keep = e.indices <= dim
            X[i, e.indices[keep] - 1] = e.values[keep]
        return X, self.labels

    @classmethod
    def from_dense(cls, X, y) -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        return cls([Example.from_dense(x, int(t)) for x, t in zip(X, y)], X.shape[1])

    def normalized(self) -> "Dataset":
        """Copy with every nonzero feature vector scaled to unit Euclidean norm."""
        out = []
        for e in self.examples:
            nrm = float(np.linalg.norm(e.values))
            out.append(Example(e.label, e.indices, e.values / nrm if nrm > 0 else e.values))
        return Dataset(out, self.dim)


# ---------------------------------------------------------------------------
# svmlight text

_LABELS = {"+1": 1, "1": 1, "-1": -1}
_ZERO_ONE = {"0": -1, "1": 1, "+1": 1, "-1": -1}


def _lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_svmlight(source, zero_one: bool = False, label_map: dict | None = None,
                   skip_unmapped: bool = False, dim: int | None = None) -> Dataset:
    """Parse ``<label> <idx>:<val> ...`` lines.

    Accepted labels are ``+1``, ``1`` and ``-1``; ``zero_one`` also maps
    ``0`` to -1. ``label_map`` replaces the accepted set entirely (raw label
    string -> +/-1); with ``skip_unmapped`` other labels are dropped instead
    of rejected, which is how a binary pair is cut out of a multiclass file.
    """
    labels = label_map if label_map is not None else (_ZERO_ONE if zero_one else _LABELS)
    examples = []
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head not in labels:
            if skip_unmapped and label_map is not None and _is_number(head):
                continue
            raise FormatError(lineno, f"unexpected label {head!r}")
        n = len(tokens) - 1
        idx = np.empty(n, dtype=np.int64)
        val = np.empty(n)
        for k, tok in enumerate(tokens[1:]):
            i, sep, v = tok.partition(":")
            if not sep:
                raise FormatError(lineno, f"expected idx:val, got {tok!r}")
            try:
                idx[k] = int(i)
                val[k] = float(v)
            except ValueError:
                raise FormatError(lineno, f"unparsable feature {tok!r}") from None
        if n:
            if idx[0] < 1 or np.any(np.diff(idx) <= 0):
                raise FormatError(lineno, "feature indices must be >= 1 and strictly increasing")
            if not np.all(np.isfinite(val)):
                raise FormatError(lineno, "non-finite feature value")
        examples.append(Example(labels[head], idx, val))
    return Dataset(examples, dim or 0)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_svmlight(path, **kwargs) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_svmlight(fh, **kwargs)


def write_svmlight(ds: Dataset, header: str | None = None) -> str:
    """Serialize with 17 significant digits so that parsing reproduces ``ds``."""
    out = []
    if header:
        out.append(header if header.startswith("#") else "# " + header)
    for e in ds.examples:
        feats = " ".join(f"{i}:{v:.17g}" for i, v in zip(e.indices.tolist(), e.values.tolist()))
        out.append(("+1" if e.label > 0 else "-1") + (" " + feats if feats else ""))
    return "\n".join(out) + "\n" if out else ""


def save_svmlight(ds: Dataset, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_svmlight(ds, header))


# ---------------------------------------------------------------------------
# synthetic data

@dataclass(frozen=True)
class SynthSpec:
    n_train: int
    n_test: int
    dim: int
    separability_target: float = 0.85
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


def bayes_accuracy(separation: float) -> float:
    """Best achievable accuracy for two balanced unit-covariance Gaussians."""
    return float(ndtr(separation / 2.0))


def separation_for(target: float, tol: float = 1e-12) -> float:
    """Mean distance giving Bayes accuracy ``target``, found by bisection."""
    if not 0.5 < target <= 1.0:
        raise ValueError(f"separability target must lie in (0.5, 1], got {target}")
    lo, hi = 0.0, 80.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bayes_accuracy(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


def gen_gaussian_clusters(spec: SynthSpec) -> tuple[Dataset, Dataset]:
    """Two unit-covariance Gaussian clusters at +/- mu, one per label.

    The clusters are symmetric about the origin so that an unbiased linear
    classifier can reach the Bayes rate. Each split has an exact class
    balance (one extra positive when the size is odd).
    """
    sep = separation_for(spec.separability_target)
    rng = np.random.default_rng(spec.seed)
    direction = rng.standard_normal(spec.dim)
    direction /= np.linalg.norm(direction)
    mean = 0.5 * sep * direction

    def draw(n):
        y = np.where(np.arange(n) < (n + 1) // 2, 1.0, -1.0)
        y = y[rng.permutation(n)]
        X = y[:, None] * mean + rng.standard_normal((n, spec.dim))
        return Dataset.from_dense(X, y.astype(int))

    train = draw(spec.n_train)
    test = draw(spec.n_test)
    train.dim = test.dim = spec.dim
    return train, test


def synth_header(spec: SynthSpec) -> str:
    return SYNTH_HEADER.format(seed=spec.seed, sep=repr(spec.separability_target))


# ---------------------------------------------------------------------------
# stream order

def permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates shuffle driven by raw PCG64 output.

    Generator: ``numpy.random.PCG64(numpy.random.SeedSequence(seed))``. For
    ``i = n-1 .. 1`` draw one raw 64-bit word ``u`` and swap positions ``i``
    and ``u mod (i+1)``. Pinned to raw words so it does not depend on
    numpy's bounded-integer sampler.
    """
    order = np.arange(n)
    if n < 2:
        return order
    bits = np.random.PCG64(np.random.SeedSequence(seed))
    raw = bits.random_raw(n - 1)
    for k, i in enumerate(range(n - 1, 0, -1)):
        j = int(raw[k] % np.uint64(i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def permute_stream(ds: Dataset, seed: int) -> Dataset:
    order = permutation(len(ds), seed)
    return Dataset([ds.examples[i] for i in order], ds.dim)

