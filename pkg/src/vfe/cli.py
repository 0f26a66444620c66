"""Command-line entry point: ``vfe <simulate|profile|evaluate|predict|inspect>``.

Exit codes: 0 success, 2 usage or invalid spec, 3 I/O, 4 pipeline or data,
5 model schema.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .config import IMU_CHANNELS, KINDS, load_config
from .errors import InvalidSpec, IoError, UsageError, VFEError
from .evaluation import hold_one_out, write_report
from .features import concat_features
from .model import load_model, predict, ridge_fit, save_model
from .pipeline import STAGES, process_directory
from .session import discover_sessions, format_csv, load_session
from .simulator import CORPUS_WANDER_LB, SimulationSpec, make_corpus


def _config(args, **extra):
    return load_config(getattr(args, "config", None), kind=getattr(args, "kind", None),
                       ridge_lambda=getattr(args, "lam", None), **extra)


def _session_dirs(corpus_dir):
    dirs = discover_sessions(corpus_dir)
    if not dirs:
        raise IoError(f"no session bundles found under {corpus_dir}")
    return dirs


def cmd_simulate(args):
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    base = None
    if args.config:
        try:
            base = SimulationSpec.from_dict(json.loads(Path(args.config).read_text()))
        except FileNotFoundError as exc:
            raise IoError(f"simulation config not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{args.config}: invalid JSON ({exc})") from exc
    specs = make_corpus(args.out, n_sessions=args.n, base_seed=args.seed, base=base,
                        wander_lb=args.wander)
    counts = {}
    for s in specs:
        counts[s.trajectory.kind] = counts.get(s.trajectory.kind, 0) + 1
    mix = ", ".join(f"{k} {v}" for k, v in counts.items())
    print(f"wrote {len(specs)} sessions to {args.out} ({mix}); manifest.json lists the specs")
    return 0


def cmd_profile(args):
    config = _config(args)
    processed = [process_directory(d, config) for d in _session_dirs(args.corpus)]
    features = concat_features([p.features for p in processed])
    model = ridge_fit(features, config.model.ridge_lambda, config.config_hash)
    save_model(model, args.out)
    print(f"trained {model.kind} model on {len(processed)} sessions ({features.n_samples} samples), "
          f"{len(model.weights)} weights -> {args.out}")
    return 0


def cmd_evaluate(args):
    config = _config(args)
    sessions = []
    for d in _session_dirs(args.corpus):
        sessions.append(load_session(d))
    report = hold_one_out(sessions, config.kind, config)
    written = write_report(report, args.out, traces=args.traces)
    if args.figures:
        from .plotting import write_report_figures

        stem = Path(args.out).with_suffix("") if Path(args.out).suffix == ".json" else Path(args.out)
        written += write_report_figures(report, stem.parent / f"{stem.name}_figures")
    print(report.summary_line())
    if report.outlier_sessions:
        print(f"outlier sessions: {', '.join(report.outlier_sessions)}")
    print(f"wrote {len(written)} files next to {written[0]}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    # kind and lambda default to the model's, so an unchanged config hashes equal
    lam = model.ridge_lambda if args.lam is None else args.lam
    config = load_config(args.config, kind=model.kind, ridge_lambda=lam)
    if model.pipeline_config_hash and model.pipeline_config_hash != config.config_hash:
        print(f"warning: model was trained with config {model.pipeline_config_hash}, "
              f"current config is {config.config_hash}; proceeding", file=sys.stderr)
    processed = process_directory(args.session, config, use_force=args.align_with_force)
    features = processed.features
    estimate = predict(model, features)
    column = "force_pct" if model.kind == "relative" else "force_est"
    atomic_write_text(args.out, format_csv(("t", column), np.column_stack([features.t, estimate])))
    print(f"wrote {features.n_samples} predictions to {args.out}")
    return 0


def _channel_csvs(out_dir, t, series, stage):
    for name in IMU_CHANNELS:
        atomic_write_text(out_dir / f"{stage}_{name}.csv",
                          format_csv(("t", stage), np.column_stack([t, series[name]])))


def cmd_inspect(args):
    if args.stage not in STAGES:
        raise UsageError(f"unknown stage {args.stage!r}; choose from {', '.join(STAGES)}")
    config = _config(args)
    processed = process_directory(args.session, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = processed.uniform.t
    if args.stage == "filtered":
        _channel_csvs(out, t, processed.filtered, "filtered")
    elif args.stage == "envelope":
        _channel_csvs(out, t, processed.envelopes, "envelope")
    elif args.stage == "repaired":
        _channel_csvs(out, t, processed.repaired, "repaired")
        fs = processed.sample_rate
        t0 = float(t[0])
        detected = ["channel,start_s,end_s,drop_ratio"]
        spans = ["channel,start_s,end_s"]
        for name in IMU_CHANNELS:
            for seg in processed.segments[name]:
                detected.append(f"{name},{t0 + seg.start / fs!r},{t0 + seg.end / fs!r},{float(seg.drop_ratio)!r}")
            for seg in processed.repair_spans[name]:
                spans.append(f"{name},{t0 + seg.start / fs!r},{t0 + seg.end / fs!r}")
        atomic_write_text(out / "segments.csv", "\n".join(detected) + "\n")
        atomic_write_text(out / "repair_spans.csv", "\n".join(spans) + "\n")
    elif args.stage == "aligned":
        a = processed.aligned
        cols = [a.t, a.force] + [a.envelopes[c] for c in IMU_CHANNELS]
        atomic_write_text(out / "aligned.csv",
                          format_csv(("t", "force_n") + IMU_CHANNELS, np.column_stack(cols)))
        lags = {"accel_lag": a.accel_lag.lag_samples, "gyro_lag": a.gyro_lag.lag_samples,
                "accel_peak_correlation": a.accel_lag.peak_correlation,
                "gyro_peak_correlation": a.gyro_lag.peak_correlation,
                "common_length": a.common_length}
        atomic_write_text(out / "alignment.json", json.dumps(lags, indent=2) + "\n")
    else:
        atomic_write_text(out / f"features_{config.kind}.csv", processed.features.to_csv())
    print(f"wrote stage {args.stage!r} for {processed.session_id} to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="vfe", description="Vibration-based force estimation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_options(p, kind=True):
        p.add_argument("--config", help="pipeline config JSON (missing keys take defaults)")
        if kind:
            p.add_argument("--kind", choices=KINDS, help="feature set (overrides the config)")
        p.add_argument("--lambda", dest="lam", type=float, help="ridge penalty (overrides the config)")

    p = sub.add_parser("simulate", help="write a synthetic session corpus")
    p.add_argument("--out", required=True, help="corpus directory")
    p.add_argument("--n", type=int, default=15, help="number of sessions (default 15)")
    p.add_argument("--seed", type=int, default=7, help="base seed (default 7)")
    p.add_argument("--wander", type=float, default=CORPUS_WANDER_LB,
                   help=f"force wander SD in lb (default {CORPUS_WANDER_LB})")
    p.add_argument("--config", help="SimulationSpec JSON used as the base for every session")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile", help="train a model on every session of a corpus")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="model JSON path")
    pipeline_options(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("evaluate", help="hold-one-out cross-validation report")
    p.add_argument("corpus")
    p.add_argument("--out", default="report", help="report path stem; .json and .csv are written")
    p.add_argument("--traces", action="store_true", help="also write per-fold (t, y_true, y_pred) CSVs")
    p.add_argument("--figures", action="store_true", help="also render report figures (PNG)")
    pipeline_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="apply a model to one session")
    p.add_argument("session")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--align-with-force", action="store_true",
                   help="read force.csv and align envelopes to it (benchtop replay)")
    pipeline_options(p, kind=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="dump one intermediate stage of a session")
    p.add_argument("session")
    p.add_argument("--stage", required=True, help=f"one of {', '.join(STAGES)}")
    p.add_argument("--out", required=True, help="output directory")
    pipeline_options(p)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VFEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IoError.exit_code


if __name__ == "__main__":
    sys.exit(main())
