"""Command line entry point: ``wristhrv {synth,analyze,train,eval,plot-export}``.

Exit codes: 0 ok, 2 bad arguments, 3 I/O or parse failure, 4 insufficient
data, 5 too few training samples, 6 weight/feature shape mismatch.  Every
failure writes one ``error[<code>] <Kind>: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import pipeline, synth
from .errors import (
    CorruptFile,
    EmptyStream,
    InsufficientData,
    InsufficientHistory,
    InvalidConfig,
    IoFailure,
    MalformedLine,
    NonMonotonicTimestamp,
    ShapeMismatch,
    TooFewSamples,
    VersionMismatch,
)
from .model import TrainConfig, load_weights, save_weights, train

EXIT_ARGS = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_SAMPLES = 5
EXIT_SHAPE = 6

_EXIT_FOR = (
    ((InvalidConfig,), EXIT_ARGS),
    ((IoFailure, MalformedLine, NonMonotonicTimestamp, EmptyStream, CorruptFile, VersionMismatch, OSError), EXIT_IO),
    ((InsufficientData,), EXIT_DATA),
    ((TooFewSamples, InsufficientHistory), EXIT_SAMPLES),
    ((ShapeMismatch,), EXIT_SHAPE),
)


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"error[{EXIT_ARGS}] BadArguments: {message}\n")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ref", required=True, help="reference device IBI csv (t_ms,ibi_ms)")
    p.add_argument("--watch", required=True, help="watch IBI csv (t_ms,ibi_ms)")
    p.add_argument("--accel", required=True, help="watch accelerometer csv (t_ms,ax_g,ay_g,az_g)")
    p.add_argument(
        "--clock-offset", default="auto",
        help="'auto' (estimate), 'none', or milliseconds added to watch/accel timestamps",
    )
    p.add_argument("--split", type=float, default=0.8, help="temporal training fraction (default 0.8)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wristhrv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic two-device session")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=int, default=21600, help="seconds (default 6 h)")
    p.add_argument("--profile", default="mixed", help="'mixed', 'rest' or start:end:intensity,...")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="movement vs error correlation and raw RMSE")
    _add_inputs(p)
    p.add_argument("--report", help="also write the key=value report here")

    p = sub.add_parser("train", help="train the error regressor")
    _add_inputs(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weights-out", required=True)
    p.add_argument("--history-out", help="per-epoch losses csv (default: <weights-out>.history.csv)")

    p = sub.add_parser("eval", help="evaluate raw vs adjusted RMSSD on the test split")
    _add_inputs(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--report", help="key=value report file (default: print only)")

    p = sub.add_parser("plot-export", help="write raw and EMA-smoothed series for plotting")
    _add_inputs(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--ema", type=float, default=0.05, help="EMA smoothing factor in (0, 1]")
    p.add_argument("--out", required=True, help="output csv")
    return parser


def _clock_offset(text: str):
    if text in ("auto", "none"):
        return text
    try:
        return int(text)
    except ValueError:
        raise CliError(EXIT_ARGS, "BadArguments", f"--clock-offset must be auto, none or an integer, got {text!r}")


def _prepare(args) -> pipeline.Prepared:
    if not 0.0 < args.split < 1.0:
        raise CliError(EXIT_ARGS, "BadArguments", "--split must lie in (0, 1)")
    return pipeline.prepare(args.ref, args.watch, args.accel, _clock_offset(args.clock_offset))


def _load_weights(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    w = load_weights(data)
    w.check_shapes()
    return w


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def cmd_synth(args) -> None:
    if args.duration <= 0:
        raise CliError(EXIT_ARGS, "BadArguments", "--duration must be positive")
    profile = synth.parse_profile(args.profile, args.duration)
    cfg = synth.SynthConfig(seed=args.seed, duration_s=args.duration, activity_profile=profile)
    session = synth.generate(cfg)
    paths = synth.export(session, args.out)
    print(f"seed={args.seed}")
    print(f"duration_s={args.duration}")
    print(f"ref_beats={len(session.true_ibi)}")
    print(f"watch_beats={len(session.watch_ibi)}")
    print(f"accel_samples={len(session.accel)}")
    for start, end, level in profile:
        print(f"segment={start:g}:{end:g} intensity={level:g}")
    for path in paths:
        print(f"file={path} bytes={os.path.getsize(path)}")


def cmd_analyze(args) -> None:
    report = pipeline.analyze(_prepare(args))
    lines = pipeline.report_lines(report)
    print("\n".join(lines))
    if args.report:
        _write_text(args.report, "\n".join(lines) + "\n")


def cmd_train(args) -> None:
    prep = _prepare(args)
    samples = pipeline.samples_for(prep, args.split)
    cfg = TrainConfig(
        seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.lr, split_fraction=args.split,
    )
    weights, history = train(samples, cfg)
    try:
        Path(args.weights_out).write_bytes(save_weights(weights))
    except OSError as exc:
        raise IoFailure(f"cannot write {args.weights_out}: {exc}") from exc
    history_path = args.history_out or f"{args.weights_out}.history.csv"
    _write_text(history_path, history.to_csv())
    print(f"samples={len(samples)} train={samples.n_train} test={len(samples) - samples.n_train}")
    for i, (a, b) in enumerate(zip(history.train_loss, history.val_loss), start=1):
        print(f"epoch={i} train_loss={a:.6f} val_loss={b:.6f}")
    print(f"weights={args.weights_out}")
    print(f"history={history_path}")


def cmd_eval(args) -> None:
    weights = _load_weights(args.weights)
    report = pipeline.evaluate(_prepare(args), weights, args.split)
    lines = pipeline.report_lines(report)
    print("\n".join(lines))
    if args.report:
        _write_text(args.report, "\n".join(lines) + "\n")


def cmd_plot_export(args) -> None:
    if not 0.0 < args.ema <= 1.0:
        raise CliError(EXIT_ARGS, "BadArguments", "--ema must lie in (0, 1]")
    weights = _load_weights(args.weights)
    text = pipeline.plot_series_csv(weights, _prepare(args), args.ema, args.split)
    _write_text(args.out, text)
    print(f"rows={text.count(chr(10)) - 3}")
    print(f"out={args.out}")


COMMANDS = {
    "synth": cmd_synth,
    "analyze": cmd_analyze,
    "train": cmd_train,
    "eval": cmd_eval,
    "plot-export": cmd_plot_export,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ARGS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error[{exc.code}] {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        for kinds, code in _EXIT_FOR:
            if isinstance(exc, kinds):
                print(f"error[{code}] {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
