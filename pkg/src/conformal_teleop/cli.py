"""teleopd command line: data generation, training, calibration, evaluation, serving."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import conformal, netcore, regressor
from .envs import catalog
from .experiment import (ExperimentConfig, METHODS, ExperimentError, render_table,
                         run_experiment, stream_calibration, summarize,
                         train_settings_for, write_report_files)
from .envs.core import save_jsonl


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting the process."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="teleopd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a scenario dataset (JSONL)")
    gen.add_argument("--scenario", required=True, choices=sorted(catalog.SCENARIOS))
    gen.add_argument("--split", choices=("train", "calib"), default="train")
    gen.add_argument("--profile", help="calibration profile (for --split calib)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)

    train = sub.add_parser("train", help="train a controller on a dataset")
    train.add_argument("--data", required=True)
    train.add_argument("--kind", choices=("qr", "ensemble"), default="qr")
    train.add_argument("--epochs", type=int)
    train.add_argument("--learning-rate", type=float)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--alpha", type=float, default=0.1)
    train.add_argument("-o", "--output", required=True,
                       help="model JSON path (qr) or directory (ensemble)")

    calib = sub.add_parser("calibrate", help="offline adaptive calibration over a dataset")
    calib.add_argument("--model", required=True)
    calib.add_argument("--data", required=True)
    calib.add_argument("--alpha", type=float, default=0.1)
    calib.add_argument("--gamma", type=float, default=conformal.DEFAULT_GAMMA)
    calib.add_argument("--beta", type=float)
    calib.add_argument("--epsilon", type=float, default=conformal.DEFAULT_EPSILON)
    calib.add_argument("--reset-per-traj", action="store_true")
    calib.add_argument("-o", "--outdir", required=True)

    ev = sub.add_parser("eval", help="run the experiment matrix for a scenario")
    ev.add_argument("--scenario", required=True, choices=sorted(catalog.SCENARIOS))
    ev.add_argument("--profile", required=True)
    ev.add_argument("--methods", default="ACQR,QR",
                    help=f"comma-separated subset of {','.join(METHODS)}")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--alpha", type=float, default=0.1)
    ev.add_argument("--gamma", type=float, default=conformal.DEFAULT_GAMMA)
    ev.add_argument("--beta", type=float)
    ev.add_argument("--reset-per-traj", action="store_true")
    ev.add_argument("--epochs", type=int, help="override the scenario's training epochs")
    ev.add_argument("--learning-rate", type=float)
    ev.add_argument("--outdir")
    ev.add_argument("--table", action="store_true", help="print a coverage/length grid")

    srv = sub.add_parser("serve", help="host live sessions over WebSocket")
    srv.add_argument("--models-dir")
    srv.add_argument("--log-dir")
    srv.add_argument("--frontend-dir")
    srv.add_argument("--addr", help="host:port (default TELEOPD_ADDR or 127.0.0.1:8787)")

    return parser


def _cmd_gen(args) -> int:
    entry = catalog.get_scenario(args.scenario)
    if args.split == "train":
        dataset = entry.gen_train(args.seed)
    else:
        if not args.profile:
            raise UsageError(f"--profile required for calib split; one of {entry.calib_profiles()}")
        dataset = entry.gen_calib(args.profile, args.seed)
    save_jsonl(dataset, args.output)
    print(f"wrote {len(dataset.trajectories)} trajectories ({dataset.n_steps()} steps) to {args.output}")
    return 0


def _cmd_train(args) -> int:
    dataset = catalog.load_dataset(args.data)
    settings = train_settings_for(dataset.scenario)
    epochs = args.epochs if args.epochs is not None else settings.epochs
    lr = args.learning_rate if args.learning_rate is not None else settings.learning_rate
    batch = args.batch_size if args.batch_size is not None else settings.batch_size
    inputs, targets = dataset.to_training_arrays()
    cfg = netcore.TrainConfig(learning_rate=lr, epochs=epochs, batch_size=batch,
                              seed=args.seed, alpha=args.alpha)
    if args.kind == "ensemble":
        ens = regressor.ensemble_train((inputs, targets), cfg)
        regressor.save_ensemble(ens, args.output)
    else:
        n_in, n_a = inputs.shape[1], targets.shape[1]
        model = netcore.initialize(netcore.default_layer_dims(n_in, n_a), n_a,
                                   seed=args.seed, alpha=args.alpha)
        trained, curve = netcore.train(model, (inputs, targets), cfg)
        netcore.save_model(trained, args.output)
        print(f"final epoch loss {curve[-1]:.6f}" if curve else "no epochs run")
    print(f"saved {args.kind} model to {args.output}")
    return 0


def _cmd_calibrate(args) -> int:
    model, kind = netcore.load_model(args.model)
    if kind != "qr":
        raise RuntimeError(f"calibrate needs a quantile controller, got kind '{kind}'")
    dataset = catalog.load_dataset(args.data)
    beta = args.beta
    if beta is None:
        beta = catalog.get_scenario(dataset.scenario).default_beta
    config = ExperimentConfig(scenario=dataset.scenario, method="ACQR",
                              profile=dataset.profile, alpha=args.alpha,
                              gamma=args.gamma, beta=beta, epsilon=args.epsilon,
                              reset_per_traj=args.reset_per_traj,
                              model_path=args.model)
    records = stream_calibration(model, "ACQR", dataset, args.alpha, args.gamma,
                                 beta, args.epsilon, args.reset_per_traj)
    os.makedirs(args.outdir, exist_ok=True)
    write_report_files(args.outdir, config, records, beta)
    report = summarize(config, records, beta, trace_file="trace.csv")
    print(json.dumps({"coverage": report.coverage,
                      "mean_interval_length": report.mean_interval_length,
                      "n_steps": report.n_steps, "bound_ok": report.bound_ok},
                     sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for method in methods:
        if method not in METHODS:
            raise UsageError(f"unknown method '{method}'; choose from {METHODS}")
    reports = []
    for method in methods:
        config = ExperimentConfig(scenario=args.scenario, method=method,
                                  profile=args.profile, seed=args.seed,
                                  alpha=args.alpha, gamma=args.gamma, beta=args.beta,
                                  reset_per_traj=args.reset_per_traj,
                                  epochs=args.epochs, learning_rate=args.learning_rate)
        outdir = os.path.join(args.outdir, method) if args.outdir else None
        reports.append(run_experiment(config, outdir))
    if args.table:
        print(render_table(reports))
    else:
        for report in reports:
            print(json.dumps(report.as_dict(), sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(models_dir=args.models_dir, log_dir=args.log_dir,
          frontend_dir=args.frontend_dir, addr=args.addr)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "calibrate": _cmd_calibrate,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ExperimentError, netcore.TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        message = str(exc)
        if "contains no trajectories" in message:
            message = f"empty dataset: {message}"
        print(f"error: {message}", file=sys.stderr)
        return 2
    except (OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
