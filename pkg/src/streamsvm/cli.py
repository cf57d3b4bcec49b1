"""Command line interface.

Exit codes: 0 success, 1 error, 2 finished but a soft check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .baselines import SgdConfig
from .data import SynthSpec, gen_gaussian_clusters, load_svmlight, permute_stream, \
    save_svmlight, synth_header
from .model import KernelSpec, load_model, predict_labels, save_model, widen_model

EXIT_OK, EXIT_ERROR, EXIT_SOFT = 0, 1, 2


def _xi(value: str) -> str:
    return value.replace("-", "_")


def _int_list(value: str) -> list:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _load(path, args):
    return load_svmlight(path, zero_one=getattr(args, "zero_one", False))


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _harness_config(args) -> harness.HarnessConfig:
    return harness.HarnessConfig(
        C=args.C, L=getattr(args, "lookahead", None) or 10, seed_base=args.seed,
        kernel=KernelSpec(args.kernel.replace("-", "_"), args.gamma),
        sgd=SgdConfig(lam=args.lam, block_k=args.block_k),
        batch_epsilon=args.epsilon, xi_convention=_xi(args.xi_convention),
        normalize=args.normalize, workers=args.workers)


def cmd_generate(args) -> int:
    if args.kind != "gaussian":
        raise ValueError(f"unknown generator kind {args.kind!r}")
    spec = SynthSpec(args.n_train, args.n_test, args.dim, args.sep, args.seed)
    train, test = gen_gaussian_clusters(spec)
    save_svmlight(train, args.out_train, synth_header(spec))
    save_svmlight(test, args.out_test, synth_header(spec))
    return EXIT_OK


def cmd_train(args) -> int:
    ds = _load(args.input, args)
    if len(ds) == 0:
        raise ValueError(f"{args.input}: no examples")
    if args.normalize:
        ds = ds.normalized()
    stream = ds if args.shuffle_seed is None else permute_stream(ds, args.shuffle_seed)
    cfg = _harness_config(args)
    model, _, _ = harness.train_model(args.algo, stream, cfg, args.lookahead)
    if model.dim < ds.dim:
        model = widen_model(model, ds.dim)
    save_model(model, args.model_out)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, _ = _load(args.input, args).to_dense()
    labels = predict_labels(model, X)
    _write(args.out, "".join("+1\n" if v > 0 else "-1\n" for v in labels))
    return EXIT_OK


def cmd_eval(args) -> int:
    test = _load(args.input, args)
    if args.predictions:
        acc = harness.predictions_accuracy(harness.read_predictions(args.predictions), test)
    else:
        if not args.model:
            raise ValueError("eval needs --model or --predictions")
        acc = harness.evaluate(load_model(args.model), test)
    print(json.dumps({"accuracy": acc, "n": len(test)}))
    return EXIT_OK


def cmd_compare(args) -> int:
    train, test = _load(args.train, args), _load(args.test, args)
    external = {}
    for item in args.external or []:
        name, sep, path = item.partition("=")
        if not sep:
            raise ValueError(f"--external expects NAME=FILE, got {item!r}")
        external[name] = path
    results = harness.run_single_pass_comparison(train, test, args.algos.split(","),
                                                 _harness_config(args), args.runs, external)
    _write(args.out, harness.runs_csv(results, timing=args.timing))
    for a in harness.aggregate(results):
        print(f"{a.algo:>12}  mean {a.mean_accuracy:.4f}  std {a.std_accuracy:.4f}  n={a.n}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    train, test = _load(args.train, args), _load(args.test, args)
    cfg = _harness_config(args)
    sweep = harness.run_lookahead_sweep(train, test, args.L, args.perms, cfg)
    _write(args.out, harness.sweep_csv(sweep))
    if args.runs_out:
        _write(args.runs_out, harness.sweep_runs_csv(sweep, cfg.seed_base))
    for L, m, s in sweep.rows():
        print(f"L={L:<4d} mean {m:.4f}  std {s:.4f}")
    lo, hi = sweep.L.index(min(sweep.L)), sweep.L.index(max(sweep.L))
    if sweep.std_accuracy[hi] > sweep.std_accuracy[lo]:
        print(f"warning: std at L={sweep.L[hi]} exceeds std at L={sweep.L[lo]}", file=sys.stderr)
        return EXIT_SOFT
    return EXIT_OK


def cmd_adversarial(args) -> int:
    rep = harness.run_adversarial_bound_check(args.n, args.orderings, args.seed)
    _write(args.out, harness.adversarial_csv(rep))
    print(f"R*={rep.R_star:.12g} last={rep.singleton_last:.9f} first={rep.singleton_first:.9f} "
          f"random=[{rep.ratio_min:.6f}, {rep.ratio_max:.6f}]")
    lower = (1.0 + np.sqrt(2.0)) / 2.0 - 1e-6
    worst = max([rep.singleton_last, rep.singleton_first] + rep.ratios)
    if rep.singleton_last < lower or worst > 1.5 + 1e-9:
        print("warning: ratio outside the expected range", file=sys.stderr)
        return EXIT_SOFT
    return EXIT_OK


def _common(p, harness_opts=True):
    p.add_argument("--zero-one", action="store_true", help="read 0/1 labels as -1/+1")
    if not harness_opts:
        return
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--kernel", choices=["linear", "rbf", "normalized-dot"], default="linear")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--xi-convention", choices=["corrected", "paper-literal"], default="corrected")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4, help="sgd regularization")
    p.add_argument("--block-k", type=int, default=1, help="sgd block size")
    p.add_argument("--epsilon", type=float, default=1e-3, help="batch-ref approximation")
    p.add_argument("--normalize", action="store_true", help="scale inputs to unit norm")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streamsvm", description="Single-pass l2-SVM via enclosing balls")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic train/test files")
    p.add_argument("--kind", default="gaussian")
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sep", type=float, default=0.85, help="target Bayes accuracy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one model in a single pass")
    p.add_argument("--algo", choices=harness.ALGOS, default="stream")
    p.add_argument("--input", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--L", dest="lookahead", type=int, default=None)
    p.add_argument("--shuffle-seed", type=int, default=None)
    p.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)
    p.add_argument("--workers", type=int, default=1, help=argparse.SUPPRESS)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write one predicted label per line")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _common(p, harness_opts=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy of a model or a prediction file, as JSON")
    p.add_argument("--model")
    p.add_argument("--predictions", help="labels from an external solver")
    p.add_argument("--input", required=True)
    _common(p, harness_opts=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="single-pass comparison over seeded orderings")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--algos", default="stream,lookahead,perceptron,sgd,batch-ref")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--L", dest="lookahead", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="seed of the first ordering")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--external", action="append", metavar="NAME=FILE")
    p.add_argument("--timing", action="store_true", help="add a wall_ms column")
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="accuracy mean/std over orderings for several lookaheads")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--L", type=_int_list, default=[1, 2, 5, 10, 20])
    p.add_argument("--perms", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="seed of the first ordering")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--runs-out", help="also write per-ordering accuracies")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("adversarial", help="approximation ratio on the worst-case stream")
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--orderings", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adversarial)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
