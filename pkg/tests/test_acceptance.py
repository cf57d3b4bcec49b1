"""Acceptance criteria, one check per criterion.

Under pytest each criterion is a test and appends a PASS/FAIL line to the
terminal summary. Run as a script to get the same lines and an exit code:
0 when everything passes, 1 when a hard criterion fails, 2 when only a
soft (statistical) criterion fails.

    python3 tests/test_acceptance.py
"""

import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))
import conftest  # noqa: E402
from conftest import CountingStream, pairs  # noqa: E402

from streamsvm import harness  # noqa: E402
from streamsvm.baselines import SgdConfig, train_perceptron, train_sgd_hinge  # noqa: E402
from streamsvm.data import (Dataset, Example, SynthSpec, gen_gaussian_clusters,  # noqa: E402
                            load_svmlight, parse_svmlight, write_svmlight)
from streamsvm.geometry import (MebSolverConfig, adversarial_stream, exact_meb,  # noqa: E402
                                fold_stream, meb_core_set)
from streamsvm.model import (KernelModel, KernelSpec, LinearModel,  # noqa: E402
                             aug_distance_kernel, aug_distance_linear, deserialize_model,
                             predict_labels, serialize_model)
from streamsvm.trainer import (TrainConfig, materialize_augmented,  # noqa: E402
                               train_explicit_reference, train_stream_kernel, train_stream_l1,
                               train_stream_lookahead)

SQ2 = math.sqrt(2.0)
MERGE_TOL = MebSolverConfig().merge_tolerance


def _stream(rng, n, d, scale=1.0):
    X = rng.standard_normal((n, d)) * scale
    return pairs(X, np.where(rng.random(n) < 0.5, -1, 1))


# ---------------------------------------------------------------------------
# criteria; each returns (passed, detail, soft)

def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(100):
        C = (0.1, 1.0, 10.0)[k % 3]
        stream = _stream(rng, 300, 10)
        cfg = TrainConfig(C=C)
        m, _ = train_stream_l1(stream, cfg)
        ref = train_explicit_reference(stream, cfg)
        worst = max(worst, float(np.abs(m.w - ref.w).max()), abs(m.R - ref.R),
                    abs(m.s2 - ref.s2), abs(m.M - ref.M))
    secs = time.perf_counter() - t0
    return worst < 1e-8 and secs < 30, f"max deviation {worst:.3g} in {secs:.1f}s", False


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    lo, hi, miss, disagree = math.inf, 0.0, 0.0, 0
    for _ in range(200):
        n, d = int(rng.integers(2, 501)), int(rng.integers(1, 11))
        P = rng.standard_normal((n, d)) * rng.uniform(0.1, 10) + rng.uniform(-5, 5, d)
        ball, _ = fold_stream(P)
        miss = max(miss, float((np.linalg.norm(P - ball.center, axis=1) / ball.radius).max()) - 1)
        r_star = exact_meb(P).radius
        core, _ = meb_core_set(P, 1e-4)
        # the exact and the approximate oracle must bracket each other
        disagree += not (core.radius / (1 + 1e-4) <= r_star * (1 + 1e-12) <= core.radius * (1 + 2e-12))
        ratio = ball.radius / r_star
        lo, hi = min(lo, ratio), max(hi, ratio)
    secs = time.perf_counter() - t0
    ok = miss <= 1e-7 and lo >= 1 - 1e-12 and hi <= 1.5 + 1e-9 and not disagree and secs < 120
    detail = f"ratio in [{lo:.6f}, {hi:.6f}], max excess {miss:.2g}, {secs:.1f}s"
    return ok, detail + (f", oracles disagree on {disagree}" if disagree else ""), False


def criterion_3():
    t0 = time.perf_counter()
    P = adversarial_stream(101, 0, "last")
    ratio = fold_stream(P)[0].radius / exact_meb(P).radius
    secs = time.perf_counter() - t0
    return ratio >= (1 + SQ2) / 2 - 1e-6 and secs < 1, f"ratio {ratio:.9f} in {secs:.3f}s", False


def criterion_4():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(20):
        stream = _stream(rng, 300, 5)
        a, _ = train_stream_l1(stream)
        b, _ = train_stream_lookahead(stream, TrainConfig(L=1))
        if a.M != b.M:
            return False, f"core counts differ: {a.M} vs {b.M}", False
        scale = max(1.0, a.R)
        worst = max(worst, float(np.abs(a.w - b.w).max()) / scale, abs(a.R - b.R) / scale,
                    abs(a.s2 - b.s2) / scale)
    return worst <= MERGE_TOL, f"max relative deviation {worst:.3g}", False


def criterion_5():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(5):
        stream = _stream(rng, 50, 4)
        m, _ = train_stream_lookahead(stream, TrainConfig(L=50))
        r_star = exact_meb(materialize_augmented(stream, 1.0)).radius
        worst = max(worst, abs(m.R / r_star - 1))
    return worst <= MERGE_TOL, f"max |R/R* - 1| = {worst:.3g}", False


def criterion_6():
    rng = np.random.default_rng(606)
    worst, flips = 0.0, 0
    for _ in range(20):
        stream = _stream(rng, 200, 5)
        lm, _ = train_stream_l1(stream)
        km, _ = train_stream_kernel(stream, kernel=KernelSpec("linear"))
        Q = rng.standard_normal((500, 5))
        flips += int(np.sum(predict_labels(lm, Q) != predict_labels(km, Q)))
        for x, t in zip(Q[:50], np.where(rng.random(50) < 0.5, -1, 1)):
            a, b = aug_distance_linear(lm, x, t), aug_distance_kernel(km, x, t)
            worst = max(worst, abs(a - b) / a)
    return flips == 0 and worst <= 1e-9, f"{flips} differing labels, distance rel {worst:.3g}", False


def _synthetic():
    return gen_gaussian_clusters(SynthSpec(20000, 200, 2, 0.85, seed=0))


def criterion_7():
    t0 = time.perf_counter()
    train, test = _synthetic()
    res = harness.run_single_pass_comparison(
        train, test, ("stream", "lookahead", "batch-ref", "perceptron"), harness.HarnessConfig(L=10),
        n_runs=20)
    acc = {a.algo: a.mean_accuracy for a in harness.aggregate(res)}
    secs = time.perf_counter() - t0
    ok = (acc["lookahead"] >= acc["stream"] - 0.005
          and acc["lookahead"] >= acc["batch-ref"] - 0.03
          and min(acc["stream"], acc["lookahead"]) >= acc["perceptron"] - 0.05
          and secs < 300)
    detail = ", ".join(f"{k} {v:.4f}" for k, v in acc.items()) + f", {secs:.0f}s"
    return ok, detail, True


def criterion_8():
    train, test = _synthetic()
    sweep = harness.run_lookahead_sweep(train, test, [1, 10], 100, harness.HarnessConfig())
    s1, s10 = sweep.std_accuracy
    return s10 <= s1, f"std L=1 {s1:.5f}, L=10 {s10:.5f}", True


def criterion_9():
    rng = np.random.default_rng(909)
    items = _stream(rng, 257, 3)
    trainers = {
        "stream": lambda s: train_stream_l1(s, TrainConfig(chunk_size=16)),
        "lookahead": lambda s: train_stream_lookahead(s, TrainConfig(L=10, chunk_size=16)),
        "kernel": lambda s: train_stream_kernel(s, TrainConfig(chunk_size=16), KernelSpec("rbf", 1.0)),
        "perceptron": lambda s: train_perceptron(s, chunk_size=16),
        "sgd": lambda s: train_sgd_hinge(s, SgdConfig(block_k=5), chunk_size=16),
    }
    bad = []
    for name, train in trainers.items():
        src = CountingStream(items)
        train(src)
        if src.iterations != 1 or not np.all(src.reads == 1):
            bad.append(name)
    return not bad, "one read per example" if not bad else "repeated reads: " + ", ".join(bad), False


EXTREMES = [5e-324, -5e-324, 2.2250738585072014e-308, 1.7976931348623157e308,
            -1.7976931348623157e308, 1e-300, 1e300, 1 / 3, -2 / 3, 0.1, 123456789.12345679,
            -0.0, 1.0000000000000002, 9.999999999999999e22]


def round_trip_corpus():
    """50 deterministic (dataset, model) pairs mixing extreme values and empty vectors."""
    rng = np.random.default_rng(1010)
    cases = []
    for k in range(50):
        examples = []
        for _ in range(int(rng.integers(0, 6))):
            idx = np.sort(rng.choice(np.arange(1, 30), int(rng.integers(0, 5)), replace=False))
            vals = [EXTREMES[int(rng.integers(len(EXTREMES)))] if rng.random() < 0.6
                    else float(rng.standard_normal() * 10.0 ** rng.integers(-20, 20)) for _ in idx]
            examples.append(Example(int(rng.choice([-1, 1])), idx, vals))
        ds = Dataset(examples)
        dim = int(rng.integers(1, 6))
        if k % 2:
            w = np.array([EXTREMES[int(i)] for i in rng.integers(len(EXTREMES), size=dim)])
            model = LinearModel(w, R=abs(EXTREMES[k % len(EXTREMES)]), s2=1 / 3, M=k + 1,
                                C=float(10.0 ** rng.integers(-300, 300)))
        else:
            sv = rng.standard_normal((3, dim)) * 10.0 ** rng.integers(-100, 100)
            sv[0] = 0.0
            sv[1, 0] = -0.0
            kern = [KernelSpec("linear"), KernelSpec("rbf", 1 / 3), KernelSpec("normalized_dot")][k % 3]
            model = KernelModel(sv, [1e-300, -1 / 3, 5e-324], kern, R=1e300, s2=2.5e-310,
                                C=0.1, wn2=1 / 7, M=3)
        cases.append((ds, model))
    return cases


def criterion_10():
    failures = 0
    for ds, model in round_trip_corpus():
        back = parse_svmlight(write_svmlight(ds))
        failures += back != ds
        failures += deserialize_model(serialize_model(model)) != model
    return failures == 0, f"{failures} mismatches over 50 cases", False


def criterion_11():
    tr, te = os.environ.get("STREAMSVM_MNIST_TRAIN"), os.environ.get("STREAMSVM_MNIST_TEST")
    if not (tr and te and Path(tr).is_file() and Path(te).is_file()):
        return None, "MNIST files not supplied (STREAMSVM_MNIST_TRAIN/TEST)", False
    pair = dict(label_map={"0": -1, "1": 1}, skip_unmapped=True)
    train, test = load_svmlight(tr, **pair), load_svmlight(te, **pair)
    res = harness.run_single_pass_comparison(train, test, ("lookahead",),
                                             harness.HarnessConfig(L=10, normalize=True), 20)
    acc = harness.aggregate(res)[0].mean_accuracy
    return acc >= 0.99, f"mean accuracy {acc:.4f} over 20 orderings", False


CRITERIA = {
    1: ("implicit/explicit equivalence", criterion_1),
    2: ("enclosure and 3/2 bound", criterion_2),
    3: ("lower-bound witness", criterion_3),
    4: ("L=1 equivalence", criterion_4),
    5: ("exact MEB limit", criterion_5),
    6: ("kernel/linear agreement", criterion_6),
    7: ("synthetic regime (soft)", criterion_7),
    8: ("variance shrinkage (soft)", criterion_8),
    9: ("single-pass contract", criterion_9),
    10: ("round trips", criterion_10),
    11: ("MNIST 0 vs 1 (optional)", criterion_11),
}


def run_criterion(k):
    name, fn = CRITERIA[k]
    passed, detail, soft = fn()
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"{status} criterion {k}: {name}: {detail}"
    return passed, soft, line


# ---------------------------------------------------------------------------
# pytest entry points

@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    passed, soft, line = run_criterion(k)
    conftest.ACCEPTANCE.append(line)
    if passed is None:
        pytest.skip(line)
    if soft and not passed:
        warnings.warn(line)
        return
    assert passed, line


def main() -> int:
    code = 0
    for k in sorted(CRITERIA):
        passed, soft, line = run_criterion(k)
        print(line, flush=True)
        if passed is False:
            code = 2 if soft and code == 0 else 1 if not soft else code
    return code


if __name__ == "__main__":
    sys.exit(main())
