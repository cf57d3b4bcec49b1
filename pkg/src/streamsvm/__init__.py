"""Single-pass l2-SVM training through streaming minimum enclosing balls."""

from ._accel import BACKEND
from .baselines import BaselineModel, SgdConfig, train_batch_l2svm_ref, train_perceptron, \
    train_sgd_hinge
from .data import Dataset, Example, FormatError, SynthSpec, gen_gaussian_clusters, \
    load_svmlight, parse_svmlight, permutation, permute_stream, save_svmlight, write_svmlight
from .geometry import Ball, MebSolverConfig, MergeSolverError, adversarial_stream, \
    enclose_ball_and_points, exact_meb, fold_stream, meb_core_set, stream_update
from .harness import HarnessConfig, RunResult, SweepResult, evaluate, \
    run_adversarial_bound_check, run_lookahead_sweep, run_single_pass_comparison
from .model import KernelModel, KernelSpec, LinearModel, decision_function, deserialize_model, \
    load_model, predict, predict_labels, save_model, serialize_model
from .trainer import TrainConfig, TrainingError, TrainTrace, train_explicit_reference, \
    train_stream_kernel, train_stream_l1, train_stream_lookahead

__version__ = "0.1.0"
