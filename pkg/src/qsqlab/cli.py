"""Command line entry point: ``qsqlab <experiment> --seed S [options]``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import experiments as ex

INT_KEYS = {"n", "k", "trials", "samples", "seed"}
FLOAT_KEYS = {"tau", "eps", "eta"}
STR_KEYS = {"policy"}


def parse_number(text: str) -> float:
    """Accept decimals and fractions such as 1/6."""
    try:
        num, _, den = text.strip().partition("/")
        return float(Fraction(num) / Fraction(den)) if den else float(Fraction(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def read_config(path: str) -> dict:
    """Flat key=value file; blank lines and # comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key in INT_KEYS:
                out[key] = int(val)
            elif key in FLOAT_KEYS:
                out[key] = parse_number(val)
            elif key in STR_KEYS:
                out[key] = val
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsqlab", description="Quantum statistical query learning lab.")
    p.add_argument("experiment", help="one of: " + ", ".join(sorted(ex.EXPERIMENTS)))
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--tau", type=parse_number)
    p.add_argument("--eps", type=parse_number)
    p.add_argument("--eta", type=parse_number)
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--policy")
    p.add_argument("--out", help="directory for report.json and tables/")
    p.add_argument("--config", help="key=value file; command line flags take precedence")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            values.update(read_config(args.config))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    for key in INT_KEYS | FLOAT_KEYS | STR_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if values.get("seed") is None:
        print("error: --seed is required", file=sys.stderr)
        return 2
    cfg = ex.ExperimentConfig(experiment=args.experiment, out=args.out, **values)
    try:
        report = ex.run(cfg)
    except ex.UnknownExperiment:
        print(f"error: unknown experiment {args.experiment!r}; choose from {', '.join(sorted(ex.EXPERIMENTS))}",
              file=sys.stderr)
        return 2
    except ex.PreconditionError as exc:
        print(f"error: precondition violated: {exc}", file=sys.stderr)
        return 2
    if args.out:
        report.write(args.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.claim}: {c.value:.6g} {c.relation} {c.expected:.6g}")
    for note in report.notes:
        print(f"note: {note}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
