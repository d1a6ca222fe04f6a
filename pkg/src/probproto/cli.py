"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or invariant error, 3 gradient
check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .classifier import Model, Weights
from .core import Codebook, Dataset, Instance, encode_instance
from .data import (
    SyntheticConfig,
    benchmark_config,
    generate_figure1_toy,
    generate_soft_label_benchmark,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    stratified_split,
)
from .gradients import finite_diff_check
from .metrics import evaluate, predict_posteriors
from .optimize import OptimizerConfig, TrainConfig, coordinate_ascent_train

GRADCHECK_TOL = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        K=args.k,
        lam=args.lam,
        rounds=args.rounds,
        seed=args.seed,
        beta_init=args.beta_init,
        kmeans_restarts=args.restarts,
    )


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(max_iterations=args.max_iter)


def _split_if_requested(data: Dataset, args) -> Dataset:
    if args.split_fraction is None:
        return data
    train, _ = stratified_split(data, args.split_fraction, args.seed)
    return train


def cmd_synth(args) -> int:
    if args.kind == "figure1":
        cfg = SyntheticConfig(n_per_class=args.n_per_class, m_range=(args.m_min, args.m_max), seed=args.seed)
        data = generate_figure1_toy(cfg)
    else:
        cfg = benchmark_config(args.n_per_class, args.seed, args.classes, m_range=(args.m_min, args.m_max))
        data = generate_soft_label_benchmark(cfg, args.smoothing)
    if args.split_fraction is not None:
        if not args.test:
            raise UsageError("--split-fraction needs --test for the held-out file")
        train, test = stratified_split(data, args.split_fraction, args.seed)
        save_dataset(train, args.out)
        save_dataset(test, args.test)
    else:
        save_dataset(data, args.out)
    return 0


def cmd_train(args) -> int:
    data = _split_if_requested(load_dataset(args.data), args)
    tc, oc = _train_config(args), _optimizer_config(args)
    if args.mode == "standard":
        model = baselines.train_standard_prototype(data, tc, oc)
        report = {"mode": "standard"}
    else:
        model, rep = coordinate_ascent_train(data, tc, oc)
        report = {"mode": "prob", **rep.as_dict()}
    save_model(model, args.out)
    report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
    _write_json(report_path, report)
    metrics = evaluate(data, model)
    _emit({"train": metrics.as_dict(), "model": args.out, "report": report_path})
    return 0


def cmd_eval(args) -> int:
    data = load_dataset(args.data)
    model = load_model(args.model)
    _emit(evaluate(data, model).as_dict())
    return 0


def cmd_predict(args) -> int:
    data = load_dataset(args.data)
    model = load_model(args.model)
    post = predict_posteriors(data, model)
    lines = [json.dumps({"id": inst.id, "posterior": row.tolist()}) for inst, row in zip(data, post)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def random_problem(rng: np.random.Generator, N: int, M: int, D: int, K: int, C: int, lam: float):
    """Random dataset and model for gradient checking."""
    instances = [
        Instance(rng.normal(size=(int(rng.integers(1, M + 1)), D)), rng.dirichlet(np.ones(C)), f"n{i}")
        for i in range(N)
    ]
    model = Model(
        Codebook(rng.normal(size=(K, D)), float(rng.uniform(0.2, 2.0))),
        Weights(rng.normal(size=(C, K)), lam),
    )
    return Dataset(instances, D=D, C=C), model


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    data, model = random_problem(rng, args.n, args.m, args.d, args.k, args.c, args.lam)
    report = finite_diff_check(data, model, args.step)
    failing = report.failing_blocks(GRADCHECK_TOL)
    _emit({**report.as_dict(), "passed": not failing})
    return 3 if failing else 0


def cmd_baseline(args) -> int:
    data = _split_if_requested(load_dataset(args.data), args)
    if args.method == "standard":
        tc, oc = _train_config(args), _optimizer_config(args)
        model = baselines.train_standard_prototype(data, tc, oc, encoding=args.encoding)
    else:
        if not args.model:
            raise UsageError(f"--method {args.method} needs --model as the starting point")
        model = load_model(args.model)
        for _ in range(args.epochs):
            for inst in data:
                if args.method == "lvq":
                    winner = int(np.argmax(encode_instance(inst.features, model.codebook, "hard")))
                    new = model.codebook.centers.copy()
                    new[winner] = baselines.lvq_update(model, inst, inst.label, winner, args.eta)
                else:
                    new = baselines.relaxed_lvq_gradient_step(model, inst, args.eta)
                model = model.replace(centers=new)
    save_model(model, args.out)
    _emit({"model": args.out, "train": evaluate(data, model).as_dict()})
    return 0


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=d.K)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--rounds", type=int, default=d.rounds)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--beta-init", type=float, default=None)
    p.add_argument("--restarts", type=int, default=d.kmeans_restarts)
    p.add_argument("--max-iter", type=int, default=OptimizerConfig().max_iterations)
    p.add_argument("--split-fraction", type=float, default=None,
                   help="train on a stratified split of --data of this size")
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="probproto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--kind", choices=["figure1", "benchmark"], default="figure1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-class", type=int, default=None)
    p.add_argument("--m-min", type=int, default=None)
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--smoothing", type=float, default=0.2)
    p.add_argument("--split-fraction", type=float, default=None)
    p.add_argument("--test", default=None, help="output file for the held-out split")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model by coordinate ascent (or the standard baseline)")
    _add_training_flags(p)
    p.add_argument("--mode", choices=["prob", "standard"], default="prob")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="print accuracy, mean log-likelihood and mean KL")
    p.add_argument("--data", "--test", dest="data", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write per-instance posteriors")
    p.add_argument("--data", "--test", dest="data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("baseline", help="standard prototype training or LVQ stepping")
    _add_training_flags(p)
    p.add_argument("--method", choices=["standard", "lvq", "relaxed-lvq"], default="standard")
    p.add_argument("--encoding", choices=["hard", "soft"], default="hard")
    p.add_argument("--model", default=None, help="starting model for LVQ stepping")
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=1)
    p.set_defaults(func=cmd_baseline)
    return parser


_SYNTH_DEFAULTS = {
    "figure1": {"n_per_class": 10, "m_min": 1, "m_max": 20},
    "benchmark": {"n_per_class": 100, "m_min": 2, "m_max": 8},
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "synth":
            for key, val in _SYNTH_DEFAULTS[args.kind].items():
                if getattr(args, key) is None:
                    setattr(args, key, val)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
