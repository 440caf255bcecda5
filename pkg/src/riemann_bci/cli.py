"""Command-line surface binding the pipeline end to end.

Subcommands: ``synth`` (write synthetic epoch files), ``fit`` (train and
save an MDM model), ``eval`` (accuracy/AUC report), ``crossval`` (k-fold
report) and ``simulate`` (paired adaptive / non-adaptive session replay).
Every command is deterministic given its inputs, flags and seed.

Exit codes: 0 success, 2 usage error, 3 data or contract error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import numpy as np

from . import mdm as mdm_mod
from .adaptive import FusedClassifier
from .datasets import (
    DEFAULT_P300_SNR,
    SyntheticSpec,
    default_mi_covariances,
    generate_mi,
    generate_p300,
    generate_ssvep,
    load_model,
    read_epochs,
    save_model,
    write_epochs,
)
from .errors import ContractError, NumericError
from .features import MI, P300, SSVEP, build_recipe
from .mdm import MeanConfig
from .preprocessing import BandSpec, bandpass, decimate, demean
from .simulator import (
    ADAPTIVE,
    NON_ADAPTIVE,
    SyntheticSessionConfig,
    compare_modes,
    make_level_specs,
    run_session,
    session_rows,
    synthetic_generic_model,
    synthetic_training_run,
    write_session_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _parse_shrinkage(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ContractError(f"shrinkage must be a float or 'auto', got {text!r}")


def _preprocess(epochs, args):
    if getattr(args, "band", None):
        spec = BandSpec(args.band[0], args.band[1], order=args.band_order)
        epochs = [bandpass(e, spec) for e in epochs]
    if getattr(args, "decimate_to", None):
        epochs = [decimate(e, args.decimate_to) for e in epochs]
    return [demean(e) for e in epochs]


def _synth_spec(args) -> SyntheticSpec:
    keys = dict(
        n_channels=args.channels,
        n_samples=args.samples,
        fs=args.fs,
        trials_per_class=args.trials,
        seed=args.seed,
        snr=args.snr,
    )
    if args.modality == MI:
        keys["class_covs"] = default_mi_covariances(args.channels, args.classes)
    if args.modality == SSVEP:
        keys["freqs"] = tuple(args.freqs)
    return SyntheticSpec(**keys)


def cmd_synth(args) -> int:
    spec = _synth_spec(args)
    if args.modality == MI:
        epochs = generate_mi(spec)
    elif args.modality == P300:
        epochs, _ = generate_p300(spec)
    else:
        epochs = generate_ssvep(spec)
    write_epochs(args.out, epochs, modality=args.modality)
    print(
        f"wrote {len(epochs)} trials ({spec.n_channels} ch x {spec.n_samples} "
        f"samples at {spec.fs} Hz, modality {args.modality}, seed {args.seed}) "
        f"to {args.out}"
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    epochs = _preprocess(read_epochs(args.input), args)
    recipe = build_recipe(
        args.modality,
        training=epochs,
        shrinkage=_parse_shrinkage(args.shrinkage),
        freqs=tuple(args.freqs) if args.freqs else (),
        width_hz=args.width,
        order=args.order,
    )
    cfg = MeanConfig(tol=args.mean_tol, max_iter=args.mean_max_iter)
    model = mdm_mod.fit(epochs, recipe, cfg)
    save_model(args.out, model)
    counts = ", ".join(
        f"class {z}: {c}" for z, c in zip(model.class_ids, model.counts)
    )
    print(f"fitted {len(model.class_ids)}-class model ({counts}) -> {args.out}")
    return EXIT_OK


def _scores_and_predictions(model, epochs):
    predictions = []
    scores = []
    two_class = len(model.class_ids) == 2
    for e in epochs:
        dv = mdm_mod.distances(model, e)
        predictions.append(dv.argmin_class())
        if two_class:
            lo, hi = model.class_ids
            scores.append(
                float(dv.values[model.class_ids.index(lo)])
                - float(dv.values[model.class_ids.index(hi)])
            )
    return predictions, scores


def cmd_eval(args) -> int:
    model = load_model(args.model)
    epochs = _preprocess(read_epochs(args.input), args)
    labeled = [e for e in epochs if e.label is not None]
    if not labeled:
        raise ContractError("unlabeled test set: no epoch carries a label")
    predictions, scores = _scores_and_predictions(model, labeled)
    labels = [e.label for e in labeled]
    accuracy = float(np.mean([p == l for p, l in zip(predictions, labels)]))
    rows = [("n_trials", len(labeled)), ("accuracy", accuracy)]
    if model.recipe.modality == P300 and len(model.class_ids) == 2:
        target = max(model.class_ids)
        auc = mdm_mod.auc(
            [(s, int(l == target)) for s, l in zip(scores, labels)]
        )
        rows.append(("auc", auc))
    with open(args.report, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("metric", "value"))
        writer.writerows(rows)
    for name, value in rows:
        print(f"{name}: {value}")
    return EXIT_OK


def cmd_crossval(args) -> int:
    epochs = _preprocess(read_epochs(args.input), args)
    labeled = [e for e in epochs if e.label is not None]
    if args.k < 2:
        raise ContractError(f"k must be >= 2, got {args.k}")
    if args.k > len(labeled):
        raise ContractError(
            f"k={args.k} exceeds the {len(labeled)} labeled trials"
        )
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(labeled))
    folds = np.array_split(order, args.k)
    shrinkage = _parse_shrinkage(args.shrinkage)
    cfg = MeanConfig(tol=args.mean_tol, max_iter=args.mean_max_iter)
    rows = []
    accuracies = []
    for fold_id, fold in enumerate(folds):
        test_idx = set(int(i) for i in fold)
        train = [e for i, e in enumerate(labeled) if i not in test_idx]
        test = [labeled[i] for i in sorted(test_idx)]
        recipe = build_recipe(
            args.modality,
            training=train,
            shrinkage=shrinkage,
            freqs=tuple(args.freqs) if args.freqs else (),
            width_hz=args.width,
            order=args.order,
        )
        model = mdm_mod.fit(train, recipe, cfg)
        predictions, _ = _scores_and_predictions(model, test)
        accuracy = float(np.mean([p == e.label for p, e in zip(predictions, test)]))
        accuracies.append(accuracy)
        rows.append((fold_id, len(test), accuracy))
    with open(args.report, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("fold", "n_test", "accuracy"))
        writer.writerows(rows)
        writer.writerow(("mean", len(labeled), float(np.mean(accuracies))))
    print(
        f"{args.k}-fold accuracy: mean {np.mean(accuracies):.4f} "
        f"(folds {', '.join(f'{a:.4f}' for a in accuracies)})"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    subject = SyntheticSpec(
        n_channels=args.channels,
        n_samples=args.samples,
        fs=args.fs,
        snr=args.snr,
    )
    config = SyntheticSessionConfig(
        n_items=args.items,
        n_levels=args.levels,
        max_repetitions=args.cap,
        subject=subject,
        ramp=args.ramp,
    )
    generic = synthetic_generic_model(config)
    training = synthetic_training_run(config)
    rows = []
    capped = 0
    for session in range(args.sessions):
        levels = make_level_specs(config, session_seed=args.seed + session)
        if args.mode == "both":
            comparison = compare_modes(
                levels, generic, training, shrinkage=config.shrinkage, ramp=config.ramp
            )
            rows += session_rows(session, comparison.adaptive_results)
            rows += session_rows(session, comparison.non_adaptive_results)
            results = list(comparison.adaptive_results) + list(
                comparison.non_adaptive_results
            )
        else:
            if args.mode == ADAPTIVE:
                clf = FusedClassifier(generic=generic, ramp=config.ramp)
            else:
                recipe = build_recipe(
                    P300, training=training, shrinkage=config.shrinkage
                )
                clf = mdm_mod.fit(training, recipe)
            results, _ = run_session(levels, clf, args.mode)
            rows += session_rows(session, results)
        capped += sum(1 for r in results if not r.solved)
    write_session_csv(args.out, rows)
    print(
        f"simulated {args.sessions} session(s) x {args.levels} levels "
        f"({args.mode}) -> {args.out}"
    )
    if capped:
        print(f"{capped} level run(s) hit the repetition cap of {args.cap}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riemann-bci",
        description="Riemannian minimum-distance-to-mean EEG classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="write a synthetic epoch file")
    synth.add_argument("--modality", choices=(MI, P300, SSVEP), required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--trials", type=int, default=50, help="trials per class")
    synth.add_argument("--classes", type=int, default=2, help="MI class count")
    synth.add_argument("--channels", type=int, default=8)
    synth.add_argument("--samples", type=int, default=128)
    synth.add_argument("--fs", type=float, default=128.0)
    synth.add_argument("--snr", type=float, default=DEFAULT_P300_SNR)
    synth.add_argument("--freqs", type=float, nargs="+", default=[12.0, 15.0, 20.0])
    synth.add_argument("--seed", type=int, default=0)
    synth.set_defaults(func=cmd_synth)

    def add_pipeline_flags(p, with_modality=True):
        if with_modality:
            p.add_argument("--modality", choices=(MI, P300, SSVEP), required=True)
        p.add_argument("--band", type=float, nargs=2, metavar=("LOW", "HIGH"))
        p.add_argument("--band-order", type=int, default=4)
        p.add_argument("--decimate-to", type=float)
        p.add_argument("--shrinkage", default="auto")
        p.add_argument("--freqs", type=float, nargs="+")
        p.add_argument("--width", type=float, default=2.0)
        p.add_argument("--order", type=int, default=5)
        p.add_argument("--mean-tol", type=float, default=None)
        p.add_argument("--mean-max-iter", type=int, default=1500)

    fit = sub.add_parser("fit", help="train an MDM model from an epoch file")
    fit.add_argument("--in", dest="input", required=True)
    fit.add_argument("--out", required=True)
    add_pipeline_flags(fit)
    fit.set_defaults(func=cmd_fit)

    evl = sub.add_parser("eval", help="evaluate a model on an epoch file")
    evl.add_argument("--model", required=True)
    evl.add_argument("--in", dest="input", required=True)
    evl.add_argument("--report", required=True)
    evl.add_argument("--band", type=float, nargs=2, metavar=("LOW", "HIGH"))
    evl.add_argument("--band-order", type=int, default=4)
    evl.add_argument("--decimate-to", type=float)
    evl.set_defaults(func=cmd_eval)

    cv = sub.add_parser("crossval", help="k-fold cross-validation report")
    cv.add_argument("--in", dest="input", required=True)
    cv.add_argument("--report", required=True)
    cv.add_argument("--k", type=int, default=8)
    cv.add_argument("--seed", type=int, default=0)
    add_pipeline_flags(cv)
    cv.set_defaults(func=cmd_crossval)

    sim = sub.add_parser("simulate", help="replay synthetic selection sessions")
    sim.add_argument("--out", required=True)
    sim.add_argument("--mode", choices=(ADAPTIVE, NON_ADAPTIVE, "both"), default="both")
    sim.add_argument("--sessions", type=int, default=1)
    sim.add_argument("--levels", type=int, default=12)
    sim.add_argument("--items", type=int, default=12)
    sim.add_argument("--cap", type=int, default=8)
    sim.add_argument("--ramp", type=int, default=40)
    sim.add_argument("--channels", type=int, default=6)
    sim.add_argument("--samples", type=int, default=96)
    sim.add_argument("--fs", type=float, default=96.0)
    sim.add_argument("--snr", type=float, default=0.85)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
