"""Command line entry point.

Exit codes: 0 success, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from ..problem import ConfigurationError, DomainError
from . import io
from .experiments import EXPERIMENTS, ExperimentConfig, UsageError, run

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

# key=value config file keys -> ExperimentConfig fields
_FIELDS = {
    "seed": ("seed", int),
    "trials": ("trials", int),
    "mode": ("mode", str),
    "engine": ("engine", str),
    "set_val": ("set_val", float),
    "out": ("output_path", str),
    "format": ("format", str),
    "n": ("n", int),
    "m": ("m", int),
    "p": ("p_grid", None),
    "n_list": ("n_list", None),
    "workers": ("workers", int),
    "kernel": ("kernel", str),
    "max_iterations": ("max_iterations", int),
    "ci_half_width": ("ci_half_width", float),
    "max_trials": ("max_trials", int),
    "max_qubits": ("max_qubits", int),
}


def parse_p_grid(text: str) -> tuple:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(Fraction(part))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad p value {part!r}") from exc
    return tuple(values)


def parse_n_list(text: str) -> tuple:
    """Register sizes as ``10,12,14`` or an inclusive range ``10-26``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError as exc:
            raise UsageError(f"bad n-list entry {part!r}") from exc
    return tuple(out)


def _convert(key: str, raw: str):
    field_name, typ = _FIELDS[key]
    if key == "p":
        return field_name, parse_p_grid(raw)
    if key == "n_list":
        return field_name, parse_n_list(raw)
    try:
        if typ is int:
            return field_name, int(raw, 0)
        return field_name, typ(raw)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise io.OutputError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        name, value = _convert(key, raw)
        values[name] = value
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="feedback-grover", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override its entries")
        sp.add_argument("--seed", type=lambda s: int(s, 0))
        sp.add_argument("--trials", type=int)
        sp.add_argument("--mode", choices=["idealized", "physical", "both"])
        sp.add_argument("--engine", choices=["full", "compact"])
        sp.add_argument("--set-val", dest="set_val", type=float)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--p", help="comma-separated probabilities, e.g. 1/64,1/4")
        sp.add_argument("--n-list", dest="n_list", help="register sizes, e.g. 10-26")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--kernel", choices=["step", "fast"])
        sp.add_argument("--max-iterations", dest="max_iterations", type=int)
        sp.add_argument("--ci-half-width", dest="ci_half_width", type=float)
        sp.add_argument("--max-trials", dest="max_trials", type=int)
        sp.add_argument("--max-qubits", dest="max_qubits", type=int)
    return parser


_AUDIT_DEFAULT_P = tuple(Fraction(x) for x in ("1/64", "1/16", "1/8", "1/4", "3/8", "1/2"))


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values = {"experiment": args.experiment}
    if args.experiment in ("audit", "scaling"):
        values["mode"] = "both"
    if args.experiment == "audit":
        values["p_grid"] = _AUDIT_DEFAULT_P
    if args.config:
        values.update(read_config_file(args.config))
    for key, (field_name, _) in _FIELDS.items():
        raw = getattr(args, "out" if key == "out" else key, None)
        if raw is None:
            continue
        if key in ("p", "n_list"):
            values[field_name] = _convert(key, raw)[1]
        else:
            values[field_name] = raw
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        config = config_from_args(argv)
        report = run(config)
        if config.format == "csv":
            text = io.render_csv(report.rows, report.columns)
        else:
            extra = dict(report.extra)
            extra["notes"] = report.notes
            text = io.render_json(report.experiment, config.to_dict(), report.rows, extra)
        for note in report.notes:
            print(f"note: {note}", file=sys.stderr)
        io.emit(text, config.output_path)
    except (UsageError, ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
