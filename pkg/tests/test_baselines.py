import math

import cvxpy as cp
import numpy as np
import pytest
from conftest import CountingStream, pairs

from streamsvm.baselines import SgdConfig, train_batch_l2svm_ref, train_perceptron, train_sgd_hinge
from streamsvm.data import Dataset, SynthSpec, gen_gaussian_clusters, permute_stream
from streamsvm.geometry import exact_meb
from streamsvm.harness import evaluate
from streamsvm.trainer import TrainingError, materialize_augmented


def perceptron_oracle(X, y):
    w = np.zeros(X.shape[1])
    mistakes = 0
    for x, t in zip(X, y):
        if t * float(w @ x) <= 0:
            w = w + t * x
            mistakes += 1
    return w, mistakes


def separable_unit_data(rng, n, angle):
    """Unit-norm 2-D points labelled by a line through the origin, with a margin gap."""
    theta = rng.uniform(0, 2 * np.pi, 4 * n)
    X = np.column_stack([np.cos(theta), np.sin(theta)])
    normal = np.array([np.cos(angle), np.sin(angle)])
    m = X @ normal
    keep = np.abs(m) > 0.15
    X, m = X[keep][:n], m[keep][:n]
    return X, np.where(m > 0, 1, -1)


def hard_margin_direction(X, y, rounds=8):
    """Direction maximizing the worst normalized margin, by a zooming angle grid."""
    lo, hi = 0.0, 2 * np.pi
    best = 0.0
    for _ in range(rounds):
        th = np.linspace(lo, hi, 2001)
        W = np.column_stack([np.cos(th), np.sin(th)])
        margins = (y[:, None] * (X @ W.T)).min(axis=0)
        best = th[np.argmax(margins)]
        step = th[1] - th[0]
        lo, hi = best - 5 * step, best + 5 * step
    return np.array([np.cos(best), np.sin(best)])


def conic_meb_radius(P):
    c = cp.Variable(P.shape[1])
    t = cp.Variable()
    cp.Problem(cp.Minimize(t), [cp.norm(c - p) <= t for p in P]).solve(solver="CLARABEL")
    return float(t.value)


# --- perceptron ----------------------------------------------------------

def test_perceptron_hand_trace(two_examples):
    m = train_perceptron(two_examples)
    np.testing.assert_array_equal(m.w, [1.0])
    assert m.n_updates == 1


def test_perceptron_matches_oracle_and_counts_updates(rng):
    X = rng.standard_normal((500, 4))
    y = np.where(rng.random(500) < 0.5, -1, 1)
    m = train_perceptron(pairs(X, y), chunk_size=37)
    w, mistakes = perceptron_oracle(X, y)
    np.testing.assert_array_equal(m.w, w)
    assert m.n_updates == mistakes


def test_perceptron_mistake_bound(rng):
    X, y = separable_unit_data(rng, 2000, 0.7)
    normal = np.array([np.cos(0.7), np.sin(0.7)])
    gamma = float(np.min(y * (X @ normal)))
    R = float(np.max(np.linalg.norm(X, axis=1)))
    m = train_perceptron(pairs(X, y))
    assert m.n_updates <= (R / gamma) ** 2


def test_perceptron_same_label_cone(rng):
    # positive features all lie in one open half-space of the first example
    X = rng.uniform(0.1, 1.0, (200, 3))
    m = train_perceptron(pairs(X, np.ones(200, dtype=int)))
    assert m.n_updates <= 1


# --- block subgradient ---------------------------------------------------

def test_sgd_single_example_unit_lambda():
    # t=1, eta=1: w = (1 - 1) * 0 + y x
    m = train_sgd_hinge([([0.6, -0.8], -1)], SgdConfig(lam=1.0))
    np.testing.assert_allclose(m.w, [-0.6, 0.8], atol=1e-16)
    m = train_sgd_hinge([([3.0, 4.0], 1)], SgdConfig(lam=1.0, project=False))
    np.testing.assert_allclose(m.w, [3.0, 4.0], atol=1e-16)
    # with projection the radius is 1/sqrt(lam) = 1
    m = train_sgd_hinge([([3.0, 4.0], 1)], SgdConfig(lam=1.0))
    np.testing.assert_allclose(m.w, [0.6, 0.8], atol=1e-15)


def test_sgd_one_block_is_one_update(rng):
    X = rng.standard_normal((64, 3))
    y = np.where(rng.random(64) < 0.5, -1, 1)
    m = train_sgd_hinge(pairs(X, y), SgdConfig(lam=0.5, block_k=64, project=False))
    assert m.n_updates == 1
    # every example violates the zero margin: w = (1/k) * sum y x with eta = 1/lam
    np.testing.assert_allclose(m.w, (y[:, None] * X).mean(axis=0) / 0.5, rtol=1e-12)


def test_sgd_blocks_do_not_depend_on_read_chunks(rng):
    stream = pairs(rng.standard_normal((300, 3)), np.where(rng.random(300) < 0.5, -1, 1))
    a = train_sgd_hinge(stream, SgdConfig(block_k=7), chunk_size=5)
    b = train_sgd_hinge(stream, SgdConfig(block_k=7), chunk_size=1024)
    np.testing.assert_array_equal(a.w, b.w)
    assert a.n_updates == b.n_updates == math.ceil(300 / 7)


def test_sgd_config_validation():
    with pytest.raises(ValueError):
        SgdConfig(lam=0.0)
    with pytest.raises(ValueError):
        SgdConfig(block_k=0)


def test_sgd_larger_blocks_beat_single_examples():
    train, test = gen_gaussian_clusters(SynthSpec(20000, 200, 2, 0.85, seed=0))
    acc = {1: [], 20: []}
    for seed in range(20):
        stream = permute_stream(train, seed)
        for k in acc:
            m = train_sgd_hinge(stream, SgdConfig(block_k=k))
            acc[k].append(evaluate(m.to_linear_model(), test))
    assert np.mean(acc[20]) > np.mean(acc[1])


@pytest.mark.parametrize("train", [
    train_perceptron,
    lambda s: train_sgd_hinge(s, SgdConfig(block_k=4), chunk_size=10),
])
def test_single_read_per_example(train, rng):
    src = CountingStream(pairs(rng.standard_normal((90, 2)), np.where(rng.random(90) < 0.5, -1, 1)))
    train(src)
    assert src.iterations == 1 and np.all(src.reads == 1)


# --- batch reference -----------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_batch_reference_on_tiny_sets(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 21)), int(rng.integers(1, 4))
    X = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.5, -1, 1)
    eps = 0.01
    m = train_batch_l2svm_ref(Dataset.from_dense(X, y), 1.0, eps)
    r_star = exact_meb(materialize_augmented(pairs(X, y), 1.0)).radius
    assert r_star * (1 - 1e-12) <= m.R <= (1 + eps) * r_star


@pytest.mark.parametrize("n", [100, 500])
def test_batch_reference_against_conic_solver(n):
    rng = np.random.default_rng(n)
    X = rng.standard_normal((n, 3)) + 0.5
    y = np.where(rng.random(n) < 0.5, -1, 1)
    eps = 1e-3
    m = train_batch_l2svm_ref(pairs(X, y), 2.0, eps)
    r_star = conic_meb_radius(materialize_augmented(pairs(X, y), 2.0))
    assert r_star * (1 - 1e-7) <= m.R <= (1 + eps) * r_star * (1 + 1e-7)


def test_batch_reference_approaches_hard_margin(rng):
    X, y = separable_unit_data(rng, 200, 1.1)
    m = train_batch_l2svm_ref(pairs(X, y), 1e8, 1e-4)
    ref = hard_margin_direction(X, y)
    cos = float(m.w @ ref) / float(np.linalg.norm(m.w))
    assert math.degrees(math.acos(min(1.0, cos))) <= 2.0


def test_batch_reference_tighter_epsilon_gives_smaller_radius(rng):
    X = rng.standard_normal((300, 4))
    y = np.where(rng.random(300) < 0.5, -1, 1)
    ds = Dataset.from_dense(X, y)
    assert train_batch_l2svm_ref(ds, 1.0, 0.01).R <= train_batch_l2svm_ref(ds, 1.0, 0.5).R


def test_batch_reference_errors():
    with pytest.raises(ValueError):
        train_batch_l2svm_ref(Dataset([]), 1.0, 0.0)
    with pytest.raises(TrainingError):
        train_batch_l2svm_ref(Dataset([]), 1.0, 0.1)
