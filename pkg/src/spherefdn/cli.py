"""Command line: roots, freqs, design, render, analyze.

Exit codes: 0 success/pass, 1 verification failed, 2 usage or config error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import pipeline
from .acoustics import box_mode_series, sphere_mode_series
from .allpass import DesignFailure, RetuneError
from .analysis import find_peaks, magnitude_spectrum, match_and_score
from .bessel import BesselDomainError, RootBracketError, find_roots
from .config import ConfigError, load_config, with_sample_rate
from .fdn import FdnState, StabilityError, process, render

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    s = f"{v:.9g}"
    return s if any(ch in s for ch in ".enai") else s + ".0"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _project(args):
    if not args.config:
        raise UsageError("this command needs --config PATH")
    cfg = load_config(args.config)
    if args.sample_rate is not None:
        cfg = with_sample_rate(cfg, args.sample_rate)
    return cfg


def cmd_roots(args) -> int:
    if args.n_max < 0 or args.s_max < 1:
        raise UsageError("--n-max must be >= 0 and --s-max >= 1")
    buf = io.StringIO()
    buf.write("n,s,z\n")
    for n in range(args.n_max + 1):
        for s, z in enumerate(find_roots(n, args.s_max).roots, start=1):
            buf.write(f"{n},{s},{_num(z)}\n")
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_freqs(args) -> int:
    cfg = _project(args)
    buf = io.StringIO()
    buf.write("label,s,frequency_hz\n")
    if cfg.shape == "sphere":
        for ser in sphere_mode_series(cfg.sphere):
            for s, f in enumerate(ser.frequencies, start=1):
                buf.write(f"{ser.label},{s},{_num(f)}\n")
    else:
        for t in pipeline._box_triplets(cfg):
            ser = box_mode_series(cfg.box, t, cfg.band_hz)
            for s, f in enumerate(ser.frequencies, start=1):
                buf.write(f"{':'.join(map(str, t))},{s},{_num(f)}\n")
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _project(args)
    channels = pipeline.design_channels(cfg)
    for ch in channels:
        note = f" retuned to {ch.retuned_to:g} Hz" if ch.retuned_to is not None else ""
        print(f"channel {ch.label}: {ch.kind}, D={ch.design.delay_samples}, E={ch.design.residual:.3e}{note}",
              file=sys.stderr)
    doc = pipeline.dump_document(pipeline.design_document(cfg, channels))
    _emit(doc, args.output)
    if args.output:
        phase_path = Path(args.output).with_suffix(".phase.csv")
        phase_path.write_text(pipeline.phase_csv(cfg, channels), encoding="utf-8", newline="\n")
    return EXIT_OK


def _network(args):
    if not args.config:
        raise UsageError("render needs --config PATH (project config or design document)")
    text = Path(args.config).read_text(encoding="utf-8")
    if pipeline.is_design_document(text):
        fdn = pipeline.fdn_from_document(text, args.config)
        if args.sample_rate is not None and args.sample_rate != fdn.sample_rate:
            raise UsageError("a design document is tied to its sample rate; redesign instead of overriding")
        return fdn
    cfg = _project(args)
    return pipeline.assemble(cfg, pipeline.design_channels(cfg))


def read_wav(path) -> tuple[float, np.ndarray]:
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise UsageError(f"{path}: only mono WAVE input is supported")
    if data.dtype == np.int16:
        x = data.astype(float) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(float)
    else:
        raise UsageError(f"{path}: sample format {data.dtype} not supported (16-bit int or 32-bit float)")
    return float(rate), x


def cmd_render(args) -> int:
    fdn = _network(args)
    if not args.output:
        raise UsageError("render needs --output PATH")
    if args.impulse == (args.input is not None):
        raise UsageError("give either --impulse or an input WAVE file")
    if args.impulse:
        y = render(fdn, seconds=args.seconds)
    else:
        rate, x = read_wav(args.input)
        if rate != fdn.sample_rate:
            raise UsageError(f"input is {rate:g} Hz but the network runs at {fdn.sample_rate:g} Hz")
        y = process(fdn, FdnState.for_config(fdn), x)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("render produced non-finite samples")
    wavfile.write(args.output, int(round(fdn.sample_rate)), y.astype(np.float32))
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _project(args)
    rate, x = read_wav(args.input)
    spectrum = magnitude_spectrum(x, rate)
    peaks = find_peaks(spectrum, max_freq=cfg.band_hz * 1.1)
    tol = cfg.tolerance_percent if args.tolerance is None else args.tolerance
    report = match_and_score(peaks, pipeline.references(cfg), window_percent=max(6.0, tol))
    buf = io.StringIO()
    buf.write("f_measured,f_theory,n,s,sharpness_percent\n")
    for m in report.matches:
        label, s = m.label
        buf.write(f"{m.f_measured:.3f},{m.f_theory:.3f},{label},{s},{m.sharpness_percent:.1f}\n")
    for f, (label, s) in report.unmatched:
        buf.write(f",{f:.3f},{label},{s},\n")
    _emit(buf.getvalue(), args.output)
    failures = report.failures(tol)
    for f, (label, s) in failures:
        print(f"unmatched: n={label} s={s} f={f:.1f} Hz", file=sys.stderr)
    print(f"{'PASS' if not failures else 'FAIL'}: {len(report.matches)} matched, "
          f"{len(failures)} outside {tol:g}%", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--sample-rate", type=float, metavar="HZ", help="override the configured sample rate")
    common.add_argument("--seed", default="none", help="accepted for uniformity; nothing here is random")

    p = argparse.ArgumentParser(prog="spherefdn", description="Sphere and box resonator reverberation tools.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("roots", parents=[common], help="zeros of j'_n as CSV")
    r.add_argument("--n-max", type=int, default=9)
    r.add_argument("--s-max", type=int, default=6)
    r.set_defaults(func=cmd_roots)

    sub.add_parser("freqs", parents=[common], help="mode frequencies as CSV").set_defaults(func=cmd_freqs)
    sub.add_parser("design", parents=[common], help="fit channel filters, write a design document").set_defaults(
        func=cmd_design)

    rn = sub.add_parser("render", parents=[common], help="run the network, write a 32-bit float WAVE")
    rn.add_argument("input", nargs="?")
    rn.add_argument("--impulse", action="store_true")
    rn.add_argument("--seconds", type=float, default=2.0)
    rn.set_defaults(func=cmd_render)

    a = sub.add_parser("analyze", parents=[common], help="compare a rendered spectrum with theory")
    a.add_argument("input")
    a.add_argument("--tolerance", type=float, help="percent; defaults to the config value")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DesignFailure, RootBracketError, StabilityError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, RetuneError, BesselDomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
