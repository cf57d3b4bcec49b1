"""Time the numba and pure-numpy backends on the same workloads.

Each backend runs in its own interpreter because the choice is made at
import time (``STREAMSVM_DISABLE_JIT``). The child prints one JSON line
per workload: best wall time and a digest of the resulting model file,
so the two backends can also be checked for identical output. Solver
radii are compared to 12 significant digits since compiled reductions
may sum in a different order.

    python3 benchmarks/bench_backends.py --n 20000 --repeat 3
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

CHILD = "--child"


def _workloads(n):
    import numpy as np

    from streamsvm import _kernels, baselines, data, geometry, model, trainer

    train, _ = data.gen_gaussian_clusters(data.SynthSpec(n, 10, 2, 0.85, seed=0))
    stream = data.permute_stream(train, 0)
    small = data.permute_stream(train, 1).examples[: min(n, 2000)]
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((min(n, 5000), 10))
    Xd = rng.standard_normal((10 * n, 50))
    yd = np.where(rng.random(10 * n) < 0.5, -1.0, 1.0)

    def raw_fold():
        # the inner loop alone, on dense rows: no parsing or block assembly
        w = yd[0] * Xd[0]
        state = np.array([0.0, 1.0, 1.0])
        pos, d, rb = np.zeros(Xd.shape[0], np.int64), np.zeros(Xd.shape[0]), np.zeros(Xd.shape[0])
        _kernels.l1_fold(Xd[1:], yd[1:], w, state, 1.0, 1.0, 1e-12, 1, pos, d, rb)
        return hashlib.sha256(w.tobytes() + state.tobytes()).hexdigest()[:16]

    def digest(m):
        return hashlib.sha256(model.serialize_model(m).encode()).hexdigest()[:16]

    return {
        "l1 fold, dense": raw_fold,
        "stream L=1": lambda: digest(trainer.train_stream_l1(stream)[0]),
        "lookahead L=10": lambda: digest(trainer.train_stream_lookahead(
            stream, trainer.TrainConfig(L=10))[0]),
        "kernel rbf": lambda: digest(trainer.train_stream_kernel(
            small, kernel=model.KernelSpec("rbf", 0.5))[0]),
        "perceptron": lambda: digest(baselines.train_perceptron(stream).to_linear_model()),
        "sgd k=8": lambda: digest(baselines.train_sgd_hinge(
            stream, baselines.SgdConfig(block_k=8)).to_linear_model()),
        "core-set eps=1e-3": lambda: f"{geometry.meb_core_set(pts, 1e-3)[0].radius:.12g}",
        "batch-ref eps=1e-3": lambda: f"{baselines.train_batch_l2svm_ref(small, 1.0, 1e-3).R:.12g}",
    }


def child(n, repeat):
    from streamsvm import BACKEND

    for name, fn in _workloads(n).items():
        out = fn()  # warm-up; includes compilation on the numba path
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        print(json.dumps({"backend": BACKEND, "workload": name, "seconds": best, "digest": out}))


def run_backend(disable_jit, n, repeat):
    env = dict(os.environ, STREAMSVM_DISABLE_JIT="1" if disable_jit else "0")
    proc = subprocess.run([sys.executable, __file__, CHILD, str(n), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return [json.loads(line) for line in proc.stdout.splitlines() if line.startswith("{")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    jit = {r["workload"]: r for r in run_backend(False, args.n, args.repeat)}
    ref = {r["workload"]: r for r in run_backend(True, args.n, args.repeat)}
    print(f"{'workload':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  same output")
    mismatch = 0
    for name, a in jit.items():
        b = ref[name]
        same = a["digest"] == b["digest"]
        mismatch += not same
        print(f"{name:<20}{a['seconds']:>10.4f}{b['seconds']:>10.4f}"
              f"{b['seconds'] / a['seconds']:>8.1f}x  {'yes' if same else 'NO'}")
    return 1 if mismatch else 0


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == CHILD:
        child(int(sys.argv[2]), int(sys.argv[3]))
    else:
        sys.exit(main())
