"""Command-line entry point: `ditherlab demod | train | compare`.

Option precedence: command-line flags override config-file keys, which
override built-in defaults.  The config file is flat `key = value` text
(keys named like the long flags, underscores or dashes both accepted).

Exit codes: 0 success, 1 usage error, 2 data or I/O error.
"""

import argparse
import os
import sys
import time
from pathlib import Path

from . import __version__
from .mnist import IdxError, SubsetTooLargeError, load_mnist
from .network import Activation
from .regularize import Regime, standard_regimes
from .reporting import EmptyDataError, _Panel, write_csv, write_manifest, write_svg
from .signals import analyze_distortion, envelope_fundamental_hz, \
    parallel_dither_waveshape, power_db, relu_waveshape, synth_am, welch_psd
from .training import TrainConfig, run_comparison, run_regime

MNIST_DIR_ENV = "DITHERLAB_MNIST_DIR"

_DEMOD_DEFAULTS = {
    "carrier_hz": 10000.0,
    "mod_hz": 100.0,
    "sample_rate": 44100.0,
    "duration_s": 10.0,
    "replicas": 100,
    "dither_half_width": 0.5,
    "segment": 8192,
    "seed": 0,
    "out_dir": "out",
}

_TRAIN_DEFAULTS = {
    "mnist_dir": None,
    "regime": "baseline",
    "lr": 0.01,
    "epochs": 100,
    "subset": 256,
    "replicas": 100,
    "dither_half_width": 0.5,
    "dropout": 0.5,
    "activation": "relu",
    "beta": 0.0,
    "shuffle": True,
    "workers": 1,
    "seed": 0,
    "out_dir": "out",
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ditherlab",
                     description="ReLU demodulation and parallel-dither experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir")
        p.add_argument("--config", help="flat key = value config file")

    demod = sub.add_parser("demod", help="ReLU demodulation spectra with/without parallel dither")
    add_shared(demod)
    demod.add_argument("--carrier-hz", type=float)
    demod.add_argument("--mod-hz", type=float)
    demod.add_argument("--sample-rate", type=float)
    demod.add_argument("--duration-s", type=float)
    demod.add_argument("--replicas", type=int)
    demod.add_argument("--dither-half-width", type=float)
    demod.add_argument("--segment", type=int)

    def add_train_flags(p):
        add_shared(p)
        p.add_argument("--mnist-dir")
        p.add_argument("--lr", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--subset", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--dither-half-width", type=float)
        p.add_argument("--dropout", type=float)
        p.add_argument("--activation", choices=["relu", "biased-sigmoid"])
        p.add_argument("--beta", type=float)
        p.add_argument("--shuffle", action=argparse.BooleanOptionalAction)
        p.add_argument("--workers", type=int)

    train = sub.add_parser("train", help="train one regime, write its error curve")
    add_train_flags(train)
    train.add_argument("--regime", choices=["baseline", "dropout", "parallel_dither",
                                            "parallel_dither_dropout"])

    compare = sub.add_parser("compare", help="train all four regimes from shared weights")
    add_train_flags(compare)
    return parser


def _read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise DataError(f"cannot read config file {path}: {e}")
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _coerce(value, default):
    if not isinstance(value, str):
        return value
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"cannot parse boolean from {value!r}")
    for kind in (int, float):
        if isinstance(default, kind):
            try:
                return kind(value)
            except ValueError:
                raise UsageError(f"cannot parse {value!r} as {kind.__name__}")
    return value


def _resolve(args, defaults: dict) -> dict:
    opts = dict(defaults)
    if args.config:
        file_values = _read_config_file(args.config)
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in file_values.items():
            opts[key] = _coerce(value, defaults[key])
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            opts[key] = flag_value
    return opts


def _spectrum_rows(spectrum):
    return [(f, p) for f, p in zip(spectrum.freqs, power_db(spectrum.power))]


def _report_rows(variant, report, signal_hz):
    rows = [(variant, "signal", f"{signal_hz:g}", report.signal_power_db),
            (variant, "noise_floor", "", report.noise_floor_db),
            (variant, "distortion_total", "", report.distortion_power_db)]
    rows += [(variant, "distortion_peak", f"{f:g}", p) for f, p in report.peaks]
    return rows


def cmd_demod(args) -> int:
    opts = _resolve(args, _DEMOD_DEFAULTS)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    wave = synth_am(opts["carrier_hz"], opts["mod_hz"], opts["sample_rate"], opts["duration_s"])
    plain = relu_waveshape(wave)
    dithered = parallel_dither_waveshape(wave, opts["replicas"],
                                         opts["dither_half_width"], opts["seed"])
    spec_plain = welch_psd(plain, segment=opts["segment"])
    spec_dith = welch_psd(dithered, segment=opts["segment"])
    # rectified envelope lands at 2x the modulator; the AM input bands at
    # carrier +/- modulator pass through linearly and are not distortion
    env_hz = envelope_fundamental_hz(opts["mod_hz"])
    am_bands = [opts["carrier_hz"] - opts["mod_hz"], opts["carrier_hz"] + opts["mod_hz"]]
    rep_plain = analyze_distortion(spec_plain, env_hz, exclude_hz=am_bands)
    rep_dith = analyze_distortion(spec_dith, env_hz, exclude_hz=am_bands)

    artifacts = {
        "plain": out / "spectrum_plain.csv",
        "dithered": out / "spectrum_dithered.csv",
        "report_csv": out / "distortion_report.csv",
        "report_txt": out / "distortion_report.txt",
        "plot": out / "demod.svg",
    }
    write_csv(artifacts["plain"], ["freq_hz", "power_db"], _spectrum_rows(spec_plain))
    write_csv(artifacts["dithered"], ["freq_hz", "power_db"], _spectrum_rows(spec_dith))
    write_csv(artifacts["report_csv"], ["variant", "quantity", "freq_hz", "power_db"],
              _report_rows("plain", rep_plain, env_hz)
              + _report_rows("dithered", rep_dith, env_hz))

    lines = []
    for variant, rep in (("plain ReLU", rep_plain), ("parallel-dithered ReLU", rep_dith)):
        lines.append(f"{variant}:")
        lines.append(f"  demodulated envelope peak at {env_hz:g} Hz: "
                     f"{rep.signal_power_db:.2f} dB")
        lines.append(f"  noise floor (median): {rep.noise_floor_db:.2f} dB")
        lines.append(f"  distortion aggregate: {rep.distortion_power_db:.2f} dB "
                     f"({len(rep.peaks)} peaks)")
    artifacts["report_txt"].write_text("\n".join(lines) + "\n")
    print("\n".join(lines))

    panels = []
    for title, spec in (("ReLU", spec_plain), (f"{opts['replicas']}x parallel-dithered ReLU",
                                               spec_dith)):
        keep = spec.freqs > 0
        panel = _Panel(title, "frequency (cycles/s, log)", "PSD (dB)", log_x=True)
        panel.add("", spec.freqs[keep], power_db(spec.power[keep]))
        panels.append(panel)
    write_svg(artifacts["plot"], panels)

    write_manifest(out / "manifest.json", opts, [opts["seed"]],
                   sorted(artifacts.values()), {"total": time.perf_counter() - t0},
                   __version__)
    return 0


def _load_data(opts):
    mnist_dir = opts["mnist_dir"] or os.environ.get(MNIST_DIR_ENV)
    if not mnist_dir:
        raise UsageError(f"--mnist-dir not given and {MNIST_DIR_ENV} not set")
    try:
        return load_mnist(mnist_dir, train_subset=opts["subset"])
    except SubsetTooLargeError as e:
        raise UsageError(str(e))
    except (FileNotFoundError, OSError, IdxError) as e:
        raise DataError(str(e))


def _train_config(opts, regime) -> TrainConfig:
    kind = opts["activation"].replace("-", "_")
    return TrainConfig(
        regime=regime,
        activation=Activation(kind, opts["beta"]),
        lr=opts["lr"],
        epochs=opts["epochs"],
        train_subset=opts["subset"],
        init_seed=opts["seed"],
        run_seed=opts["seed"],
        shuffle=opts["shuffle"],
        n_workers=opts["workers"],
    )


def _make_regime(opts) -> Regime:
    kind = opts["regime"]
    if kind == "baseline":
        return Regime.baseline()
    if kind == "dropout":
        return Regime.with_dropout(opts["dropout"])
    if kind == "parallel_dither":
        return Regime.parallel_dither(opts["replicas"], opts["dither_half_width"])
    return Regime.parallel_dither_dropout(opts["replicas"], opts["dither_half_width"],
                                          opts["dropout"])


def cmd_train(args) -> int:
    opts = _resolve(args, _TRAIN_DEFAULTS)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    train, test = _load_data(opts)
    config = _train_config(opts, _make_regime(opts))
    curve = run_regime(config, train, test)
    curve_path = out / "error_curve.csv"
    write_csv(curve_path, ["epoch", "test_error"], list(enumerate(curve.errors)))
    print(f"{curve.label}: initial error {curve.errors[0]:.4f}, final {curve.final:.4f}")
    write_manifest(out / "manifest.json", opts, [opts["seed"]], [curve_path],
                   {"total": time.perf_counter() - t0}, __version__)
    return 0


def cmd_compare(args) -> int:
    opts = _resolve(args, _TRAIN_DEFAULTS)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    train, test = _load_data(opts)
    regimes = standard_regimes(opts["replicas"], opts["dither_half_width"], opts["dropout"])
    config = _train_config(opts, regimes[0])
    curves = run_comparison(config, train, test, regimes=regimes)

    combined_path = out / "comparison.csv"
    header = ["epoch"] + [c.label for c in curves]
    rows = [[epoch] + [float(c.errors[epoch]) for c in curves]
            for epoch in range(len(curves[0].errors))]
    write_csv(combined_path, header, rows)

    dropout_final = next(c for c in curves if c.label == "dropout").final
    summary_rows = []
    for c in curves:
        reach = next((e for e, v in enumerate(c.errors) if v <= dropout_final), "")
        summary_rows.append((c.label, c.final, int(c.errors.argmin()), reach))
    summary_path = out / "summary.csv"
    write_csv(summary_path, ["regime", "final_error", "best_epoch",
                             "epochs_to_reach_dropout_final"], summary_rows)
    for row in summary_rows:
        print(f"{row[0]}: final error {row[1]:.4f} (best at epoch {row[2]})")

    panel = _Panel("Test error by regime", "full-sweep iteration", "test error")
    for c in curves:
        panel.add(c.label, range(len(c.errors)), c.errors)
    plot_path = out / "comparison.svg"
    write_svg(plot_path, [panel])

    write_manifest(out / "manifest.json", opts, [opts["seed"]],
                   [combined_path, summary_path, plot_path],
                   {"total": time.perf_counter() - t0}, __version__)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"demod": cmd_demod, "train": cmd_train, "compare": cmd_compare}[args.command]
        return handler(args)
    except UsageError as e:
        print(f"ditherlab: {e}", file=sys.stderr)
        return 1
    except (DataError, EmptyDataError, OSError) as e:
        print(f"ditherlab: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"ditherlab: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
