"""Batch command line: build, validate, deform, lengths, spectra, series.

Exit status: 0 on success, 1 when a verdict fails (identities violated,
convergence not declared, validation rejected), 2 on input or schema
errors.  Machine-readable output goes to files (written atomically);
stdout carries a short human summary.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import config
from .asymptotic import (convergence_report, decay_svg, ratio_series,
                         series_csv_lines)
from .currents import current_length, parse_combo
from .eigen import DegenerateSpectrumError
from .reps import (NewtonDivergenceError, RepresentationError,
                   build_octagon_fuchsian, deform, default_sample, load_rep,
                   save_rep, sym_power_lift, validate)
from .spectrum import identity_report, length_vector, spectrum, spectrum_csv_lines
from .words import (IdentityClassError, Word, WordSyntaxError,
                    enumerate_classes)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _tolerances(args) -> config.Tolerances:
    tol = config.from_env()
    overrides = {}
    for item in args.tol or []:
        name, _, value = item.partition("=")
        if not value:
            raise WordSyntaxError(f"--tol expects NAME=VALUE, got {item!r}")
        overrides[name] = float(value)
    return tol.with_overrides(overrides)


def _fmt(x: float) -> str:
    return format(x, ".12g")


def cmd_rep_build(args) -> int:
    tol = _tolerances(args)
    rep = build_octagon_fuchsian(tol)
    if args.n > 2:
        rep = sym_power_lift(rep, args.n)
    save_rep(rep, args.out)
    print(f"wrote {rep.provenance} representation (n={rep.n}, "
          f"relator '{rep.presentation.relator}') to {args.out}")
    return 0


def cmd_rep_validate(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    sample = default_sample(args.max_len)
    report = validate(rep, sample, tolerances=tol)
    print(report.summary())
    return 0 if report.hitchin_plausible else 1


def cmd_rep_deform(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    out = deform(rep, args.seed, args.epsilon, tol)
    save_rep(out, args.out)
    print(f"wrote deformed representation (seed {args.seed}, "
          f"epsilon {args.epsilon:g}) to {args.out}")
    return 0


def cmd_length(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    lv = length_vector(rep, Word.parse(args.word), tol)
    for i, value in enumerate(lv.values, start=1):
        print(f"l{i} = {_fmt(value)}")
    return 0


def cmd_spectrum(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    entries = spectrum(rep, args.max_len, tol)
    _atomic_write(args.out, "\n".join(spectrum_csv_lines(entries)) + "\n")
    print(f"{len(entries)} classes up to length {args.max_len} "
          f"-> {args.out} (shortest l1 = {_fmt(entries[0].lengths.values[0])})")
    return 0


def cmd_identities(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    report = identity_report(rep, enumerate_classes(args.max_len), tol)
    print(report.summary())
    return 0 if report.passed else 1


def cmd_current(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    if args.combo_file:
        with open(args.combo_file) as fh:
            text = fh.read()
    else:
        text = args.combo.replace(";", "\n")
    combo = parse_combo(text)
    if not combo:
        print("empty combination; all lengths vanish")
        return 0
    kind = "measure-class" if combo.is_measure_class else "signed"
    print(f"canonical {kind} combination:")
    for line in str(combo).splitlines():
        print(f"  {line}")
    for i in range(1, rep.n + 1):
        print(f"l{i} = {_fmt(current_length(rep, combo, i))}")
    return 0


def cmd_asymptotic(args) -> int:
    tol = _tolerances(args)
    rep = load_rep(args.rep, tol)
    series = ratio_series(rep, Word.parse(args.alpha), Word.parse(args.beta),
                          args.m_max, tol)
    _atomic_write(args.out, "\n".join(series_csv_lines(series)) + "\n")
    report = convergence_report(series, tol.conv_tail_tol,
                                tol.conv_min_corr, tol.conv_exact_floor)
    if args.plot:
        _atomic_write(args.plot, decay_svg(series) + "\n")
    for i in range(series.n):
        rate = "exact" if np.isnan(report.rate[i]) else _fmt(report.rate[i])
        print(f"i={i + 1}: limit {_fmt(report.limit_estimate[i])} "
              f"(ratio {_fmt(report.ratio_limit[i])}), rate {rate}, "
              f"tail {report.tail_residual[i]:.3e}, "
              f"converged {'yes' if report.converged[i] else 'NO'}")
    print(f"series -> {args.out}")
    return 0 if report.all_converged else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lenspec",
        description="Length spectra of genus-2 surface group representations")
    parser.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="tolerance override (repeatable); environment "
                             "variables LENSPEC_TOL_<NAME> also apply")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rep-build", help="build the octagon representation")
    p.add_argument("--model", choices=["octagon"], default="octagon")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rep_build)

    p = sub.add_parser("rep-validate", help="validate a representation file")
    p.add_argument("--rep", required=True)
    p.add_argument("--max-len", type=int, default=4)
    p.set_defaults(func=cmd_rep_validate)

    p = sub.add_parser("rep-deform", help="deform along the relator variety")
    p.add_argument("--rep", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rep_deform)

    p = sub.add_parser("length", help="length vector of one word")
    p.add_argument("--rep", required=True)
    p.add_argument("--word", required=True)
    p.set_defaults(func=cmd_length)

    p = sub.add_parser("spectrum", help="bounded length spectrum to CSV")
    p.add_argument("--rep", required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("identities", help="sum-zero and flip identity sweep")
    p.add_argument("--rep", required=True)
    p.add_argument("--max-len", type=int, default=4)
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("current", help="lengths of a weighted combination")
    p.add_argument("--rep", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--combo-file")
    group.add_argument("--combo",
                       help="inline combination, ';' separates terms")
    p.set_defaults(func=cmd_current)

    p = sub.add_parser("asymptotic", help="eigenvalue ratio series to CSV")
    p.add_argument("--rep", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--m-max", type=int, default=40)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.set_defaults(func=cmd_asymptotic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WordSyntaxError, IdentityClassError, RepresentationError,
            NewtonDivergenceError, FileNotFoundError, KeyError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateSpectrumError as exc:
        print(f"degenerate spectrum: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
