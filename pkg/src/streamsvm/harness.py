"""Experiment driver: accuracy, single-pass comparisons, lookahead sweeps, adversarial ratios.

Run ``i`` of any experiment shuffles the training stream with seed
``seed_base + i`` (see :func:`streamsvm.data.permutation`), so every row of
an output file can be reproduced on its own. Results are ordered by
algorithm and seed no matter how many worker processes produced them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baselines import SgdConfig, train_batch_l2svm_ref, train_perceptron, train_sgd_hinge
from .data import Dataset, permutation, permute_stream
from .geometry import MebSolverConfig, adversarial_stream, exact_meb, fold_stream
from .model import KernelSpec, predict_labels, widen_model
from .trainer import TrainConfig, train_stream_kernel, train_stream_l1, train_stream_lookahead

ALGOS = ("stream", "lookahead", "kernel", "perceptron", "sgd", "batch-ref")


@dataclass(frozen=True)
class HarnessConfig:
    C: float = 1.0
    L: int = 10
    seed_base: int = 0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    batch_epsilon: float = 1e-3
    xi_convention: str = "corrected"
    merge: MebSolverConfig = field(default_factory=MebSolverConfig)
    normalize: bool = False
    workers: int = 1

    def train_config(self, L: int = 1) -> TrainConfig:
        return TrainConfig(C=self.C, L=L, merge=self.merge, xi_convention=self.xi_convention)


@dataclass(frozen=True)
class RunResult:
    algo: str
    accuracy: float
    M: int
    R: float
    wall_ms: float
    seed: int
    L: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")


@dataclass(frozen=True)
class Aggregate:
    algo: str
    n: int
    mean_accuracy: float
    std_accuracy: float
    mean_M: float
    mean_R: float


@dataclass
class SweepResult:
    L: list
    mean_accuracy: list
    std_accuracy: list
    n_perms: int
    accuracies: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_perms < 1:
            raise ValueError("n_perms must be >= 1")

    def rows(self):
        return list(zip(self.L, self.mean_accuracy, self.std_accuracy))


@dataclass
class AdversarialReport:
    n: int
    R_star: float
    singleton_last: float
    singleton_first: float
    ratios: list
    seeds: list

    @property
    def ratio_min(self) -> float:
        return min(self.ratios) if self.ratios else math.nan

    @property
    def ratio_max(self) -> float:
        return max(self.ratios) if self.ratios else math.nan

    @property
    def ratio_mean(self) -> float:
        return mean(self.ratios) if self.ratios else math.nan


# ---------------------------------------------------------------------------
# evaluation

def evaluate(model, test: Dataset) -> float:
    """Fraction of ``test`` whose predicted label matches the true label."""
    if len(test) == 0:
        raise ValueError("test set is empty")
    X, y = test.to_dense()
    if X.shape[1] > model.dim and np.any(X[:, model.dim:] != 0):
        raise ValueError(f"dimension mismatch: test uses features beyond model dim {model.dim}")
    return float(np.mean(predict_labels(model, X) == y))


def read_predictions(path) -> np.ndarray:
    """One label per line (+1, 1 or -1); blank lines and ``#`` comments are skipped."""
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tok = raw.split("#", 1)[0].strip()
            if not tok:
                continue
            if tok not in ("+1", "1", "-1"):
                raise ValueError(f"{path}:{lineno}: expected a label of +1 or -1, got {tok!r}")
            labels.append(-1 if tok == "-1" else 1)
    return np.array(labels, dtype=np.int64)


def predictions_accuracy(pred, test: Dataset) -> float:
    pred = np.asarray(pred)
    if pred.shape[0] != len(test):
        raise ValueError(f"{pred.shape[0]} predictions for {len(test)} test examples")
    if len(test) == 0:
        raise ValueError("test set is empty")
    return float(np.mean(pred == test.labels))


# ---------------------------------------------------------------------------
# training dispatch

def train_model(algo: str, stream, cfg: HarnessConfig, L: int | None = None):
    """Train one model with ``algo``; returns ``(model, M, R)``.

    Baselines without a ball report ``R = nan`` and their update count as ``M``.
    """
    if algo == "stream":
        m, _ = train_stream_l1(stream, cfg.train_config(1))
        return m, m.M, m.R
    if algo == "lookahead":
        m, _ = train_stream_lookahead(stream, cfg.train_config(cfg.L if L is None else L))
        return m, m.M, m.R
    if algo == "kernel":
        m, _ = train_stream_kernel(stream, cfg.train_config(1), cfg.kernel)
        return m, m.M, m.R
    if algo == "perceptron":
        b = train_perceptron(stream)
        return b.to_linear_model(cfg.C), b.n_updates, math.nan
    if algo == "sgd":
        b = train_sgd_hinge(stream, cfg.sgd)
        return b.to_linear_model(cfg.C), b.n_updates, math.nan
    if algo == "batch-ref":
        m = train_batch_l2svm_ref(stream, cfg.C, cfg.batch_epsilon)
        return m, m.M, m.R
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {', '.join(ALGOS)}")


def _lookahead_of(algo, cfg, L):
    if L is not None:
        return L
    return cfg.L if algo == "lookahead" else 1


# worker state; set once per process so the datasets are not pickled per task
_STATE = {}


def _init(train, test, cfg):
    _STATE.update(train=train, test=test, cfg=cfg, dim=max(train.dim, test.dim))


def _one_run(task):
    algo, seed, L = task
    train, test, cfg = _STATE["train"], _STATE["test"], _STATE["cfg"]
    stream = permute_stream(train, seed)
    t0 = time.perf_counter()
    model, M, R = train_model(algo, stream, cfg, L)
    wall = 1e3 * (time.perf_counter() - t0)
    if model.dim < _STATE["dim"]:
        model = widen_model(model, _STATE["dim"])
    acc = evaluate(model, test)
    return RunResult(algo, acc, int(M), float(R), wall, seed, _lookahead_of(algo, cfg, L))


def _run_tasks(train, test, cfg, tasks):
    if cfg.normalize:
        train, test = train.normalized(), test.normalized()
    if cfg.workers <= 1 or len(tasks) < 2:
        _init(train, test, cfg)
        try:
            return [_one_run(t) for t in tasks]
        finally:
            _STATE.clear()
    with ProcessPoolExecutor(cfg.workers, initializer=_init, initargs=(train, test, cfg)) as ex:
        return list(ex.map(_one_run, tasks))


# ---------------------------------------------------------------------------
# experiments

def run_single_pass_comparison(train: Dataset, test: Dataset, algos=("stream", "lookahead"),
                               cfg: HarnessConfig | None = None, n_runs: int = 20,
                               external: dict | None = None) -> list:
    """Train every algorithm on ``n_runs`` seeded orderings of ``train``.

    ``external`` maps a column name to a file of predicted test labels from
    a solver not implemented here; each becomes one row with seed -1.
    """
    cfg = cfg or HarnessConfig()
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    for a in algos:
        if a not in ALGOS:
            raise ValueError(f"unknown algorithm {a!r}")
    tasks = [(a, cfg.seed_base + i, None) for a in algos for i in range(n_runs)]
    results = _run_tasks(train, test, cfg, tasks)
    for name, path in (external or {}).items():
        acc = predictions_accuracy(read_predictions(path), test)
        results.append(RunResult(name, acc, 0, math.nan, math.nan, -1, 0))
    return results


def run_lookahead_sweep(train: Dataset, test: Dataset, L_list=(1, 2, 5, 10, 20),
                        n_perms: int = 100, cfg: HarnessConfig | None = None) -> SweepResult:
    """Mean and standard deviation of accuracy over ``n_perms`` orderings per lookahead."""
    cfg = cfg or HarnessConfig()
    L_list = [int(L) for L in L_list]
    if not L_list:
        raise ValueError("L_list must be nonempty")
    if n_perms < 1:
        raise ValueError("n_perms must be >= 1")
    if min(L_list) < 1:
        raise ValueError("lookahead values must be >= 1")
    if len(set(L_list)) != len(L_list):
        raise ValueError("lookahead values must be distinct")
    # L = 1 is the plain streaming rule
    tasks = [("stream", cfg.seed_base + i, None) if L == 1 else ("lookahead", cfg.seed_base + i, L)
             for L in L_list for i in range(n_perms)]
    results = _run_tasks(train, test, cfg, tasks)
    acc = {}
    for L, k in zip(L_list, range(0, len(results), n_perms)):
        acc[L] = [r.accuracy for r in results[k:k + n_perms]]
    return SweepResult(L_list, [mean(acc[L]) for L in L_list], [std(acc[L]) for L in L_list],
                       n_perms, acc)


def run_adversarial_bound_check(n: int = 101, n_orderings: int = 200, seed: int = 0,
                                seed_base: int = 0) -> AdversarialReport:
    """Radius of the one-point streaming rule over the exact optimum, per ordering.

    One instance is built with ``seed``; it is folded with the far point
    last, with it first, and in ``n_orderings`` seeded random orders.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    last = adversarial_stream(n, seed, "last")
    first = adversarial_stream(n, seed, "first")
    r_star = exact_meb(last).radius

    def ratio(P):
        return fold_stream(P)[0].radius / r_star

    seeds = [seed_base + i for i in range(n_orderings)]
    ratios = [ratio(last[permutation(n, s)]) for s in seeds]
    return AdversarialReport(n, r_star, ratio(last), ratio(first), ratios, seeds)


# ---------------------------------------------------------------------------
# aggregation and output

def mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def std(values) -> float:
    """Sample standard deviation (n - 1 denominator); 0 for a single value."""
    values = list(values)
    if len(values) < 2:
        return 0.0
    m = mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (len(values) - 1))


def aggregate(results) -> list:
    """Per-algorithm mean/std, algorithms in first-appearance order and runs in seed order."""
    groups = {}
    for r in results:
        groups.setdefault(r.algo, []).append(r)
    out = []
    for algo, rows in groups.items():
        rows = sorted(rows, key=lambda r: r.seed)
        out.append(Aggregate(algo, len(rows), mean(r.accuracy for r in rows),
                             std(r.accuracy for r in rows), mean(r.M for r in rows),
                             mean(r.R for r in rows)))
    return out


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([x if isinstance(x, str) else _num(x) for x in row])
    return buf.getvalue()


def runs_csv(results, timing: bool = False) -> str:
    """Per-run rows followed by one mean and one std row per algorithm.

    Wall-clock times are left out unless ``timing`` is set, which keeps
    the file a pure function of the seeds.
    """
    header = ["kind", "algo", "seed", "L", "accuracy", "M", "R"] + (["wall_ms"] if timing else [])
    rows = []
    for r in results:
        row = ["run", r.algo, r.seed, r.L, r.accuracy, r.M, r.R]
        rows.append(row + ([r.wall_ms] if timing else []))
    for a in aggregate(results):
        pad = [""] if timing else []
        rows.append(["mean", a.algo, "", "", a.mean_accuracy, a.mean_M, a.mean_R] + pad)
        rows.append(["std", a.algo, "", "", a.std_accuracy, "", ""] + pad)
    return _csv(header, rows)


def sweep_csv(sweep: SweepResult) -> str:
    return _csv(["L", "n_perms", "mean_accuracy", "std_accuracy"],
                [[L, sweep.n_perms, m, s] for L, m, s in sweep.rows()])


def sweep_runs_csv(sweep: SweepResult, seed_base: int = 0) -> str:
    rows = [[L, seed_base + i, a] for L in sweep.L for i, a in enumerate(sweep.accuracies[L])]
    return _csv(["L", "seed", "accuracy"], rows)


def adversarial_csv(rep: AdversarialReport) -> str:
    rows = [["last", "", rep.singleton_last, rep.R_star], ["first", "", rep.singleton_first, rep.R_star]]
    rows += [["random", s, r, rep.R_star] for s, r in zip(rep.seeds, rep.ratios)]
    return _csv(["ordering", "seed", "ratio", "R_star"], rows)


def read_csv(text: str) -> list:
    """Rows as dicts with numeric fields converted back to float or int."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        conv = {}
        for k, v in row.items():
            if v == "" or k in ("kind", "algo", "ordering"):
                conv[k] = v
            else:
                try:
                    conv[k] = int(v)
                except ValueError:
                    conv[k] = float(v)
        out.append(conv)
    return out


def to_json(obj) -> str:
    """JSON text; floats use Python's round-trip repr (``NaN`` stays ``NaN``)."""
    def norm(v):
        if isinstance(v, dict):
            return {k: norm(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [norm(x) for x in v]
        if hasattr(v, "__dataclass_fields__"):
            return norm(asdict(v))
        if isinstance(v, np.generic):
            return v.item()
        return v
    return json.dumps(norm(obj), indent=2, sort_keys=True)


def with_workers(cfg: HarnessConfig, workers: int) -> HarnessConfig:
    return replace(cfg, workers=workers)
