"""
Command Line Interface

Three verbs:
- eval: evaluate xi, c-function, plancherel, norm, gamma or delta as CSV rows
- table: export the c-function table or the Plancherel density table
- verify: run a named verification suite and write a JSON report

Exit codes: 0 when everything passed, 1 when a check failed, 2 on
usage or configuration errors.

Usage:
    python cli.py eval xi --t 0,1,2
    python cli.py eval c-function --side plus --j 1 --mu 0
    python cli.py table c-table --jmax 4 --mu-max 5 --out c_table.csv
    python cli.py verify group-core --seed 42 --out report.json
"""

import argparse
import csv
import io
import logging
import os
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError as PydanticValidationError

from adjunction import plancherel_density, plancherel_table
from exceptions import ConfigError, HarmonicAnalysisError
from group_core import group_norm, modular_delta, xi_diagonal
from intertwiners import c_function, c_table, complex_gamma
from models import GroupElement, QuadratureScheme, SpectralGrid, SuiteConfig, SuiteReport
from utils import dump_json, load_settings, metrics, setup_logging
from verification import SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

EVAL_OBJECTS = ("xi", "c-function", "plancherel", "norm", "gamma", "delta")
TABLES = ("c-table", "plancherel-table")

# Dotted config sections and the SuiteConfig field each one fills.
CONFIG_SECTIONS = {"quadrature": "quadrature", "grid": "grid"}
SUITE_KEYS = ("suite", "seed", "tolerance_scale", "json_path", "csv_path", "coarse")


class UsageError(HarmonicAnalysisError):
    """Malformed command line parameters."""


def parse_floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from e


def parse_complexes(text: str) -> List[complex]:
    try:
        return [complex(item.strip().replace(" ", "")) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise UsageError(f"expected comma-separated complex numbers, got {text!r}") from e


def parse_group_element(text: str) -> GroupElement:
    """'a,b,c,d' as the matrix [[a, b], [c, d]]."""
    entries = parse_floats(text)
    if len(entries) != 4:
        raise UsageError(f"a group element needs four entries, got {text!r}")
    return GroupElement(entries=entries)


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a dotenv-style config file with dotted section prefixes.

    Args:
        path (str): file with lines like quadrature.k_nodes=48 or suite.seed=7

    Returns:
        Dict[str, Any]: nested overrides for SuiteConfig

    Raises:
        ConfigError: if the file is missing or holds an unknown key
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    overrides: Dict[str, Any] = {}
    for key, value in dotenv_values(path).items():
        section, _, name = key.partition(".")
        if not name:
            raise ConfigError(f"config key without a section: {key}", {"key": key})
        if section in CONFIG_SECTIONS:
            overrides.setdefault(CONFIG_SECTIONS[section], {})[name] = value
        elif section == "suite" and name in SUITE_KEYS:
            overrides[name] = value
        else:
            raise ConfigError(f"unknown config key: {key}", {"key": key})
    logger.debug(f"loaded {len(overrides)} config override(s) from {path}")
    return overrides


def build_suite_config(args: argparse.Namespace) -> SuiteConfig:
    """File values first, then command line flags, then validation."""
    settings = load_settings()
    values: Dict[str, Any] = {"seed": settings["seed"]}
    if args.config:
        values.update(load_config_file(args.config))
    values["suite"] = args.suite
    if args.seed is not None:
        values["seed"] = args.seed
    if args.tolerance_scale is not None:
        values["tolerance_scale"] = args.tolerance_scale
    if args.coarse:
        values["coarse"] = True
    if args.out:
        values["json_path"] = args.out
    elif "json_path" not in values and settings["out_dir"]:
        values["json_path"] = os.path.join(settings["out_dir"], f"report-{args.suite}.json")
    try:
        return SuiteConfig.model_validate(values)
    except PydanticValidationError as e:
        raise ConfigError("invalid configuration", {"errors": str(e)}) from e


def _scheme(args: argparse.Namespace) -> QuadratureScheme:
    scheme = QuadratureScheme()
    return scheme.coarse() if args.coarse else scheme


def _grid(args: argparse.Namespace) -> SpectralGrid:
    try:
        return SpectralGrid(jmax=args.jmax, dmu=args.dmu, mu_max=args.mu_max)
    except PydanticValidationError as e:
        raise UsageError("invalid spectral grid", {"errors": str(e)}) from e


def write_rows(header: Sequence[str], rows: Iterable[Sequence[Any]], path: Optional[str]) -> None:
    """CSV with minimal quoting, to a file or stdout."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            handle.write(buffer.getvalue())
        logger.info(f"wrote {path}")
    else:
        sys.stdout.write(buffer.getvalue())


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def eval_rows(args: argparse.Namespace) -> Tuple[List[str], List[List[str]]]:
    """Header and rows for one eval object."""
    if args.object == "xi":
        ts = parse_floats(args.t)
        values = xi_diagonal(np.asarray(ts), _scheme(args))
        return ["t", "xi"], [[_fmt(t), _fmt(v)] for t, v in zip(ts, values)]
    if args.object == "c-function":
        rows = []
        for mu in parse_complexes(args.mu):
            value = c_function(args.side, args.j, mu)
            rows.append([args.side, str(args.j), _fmt(mu.real), _fmt(mu.imag), _fmt(value.real), _fmt(value.imag)])
        return ["side", "j", "mu_re", "mu_im", "re", "im"], rows
    if args.object == "plancherel":
        mus = parse_floats(args.mu)
        values = plancherel_density(args.parity, np.asarray(mus))
        return ["parity", "mu", "density"], [[args.parity, _fmt(m), _fmt(v)] for m, v in zip(mus, values)]
    if args.object == "norm":
        g = parse_group_element(args.g)
        return ["g", "norm"], [[args.g, _fmt(group_norm(g))]]
    if args.object == "gamma":
        rows = []
        for z in parse_complexes(args.z):
            value = complex(complex_gamma(z))
            rows.append([_fmt(z.real), _fmt(z.imag), _fmt(value.real), _fmt(value.imag)])
        return ["z_re", "z_im", "re", "im"], rows
    g = parse_group_element(args.g)
    side = "upper" if args.side == "plus" else "lower"
    return ["g", "side", "delta"], [[args.g, side, _fmt(modular_delta(g, side))]]


def cmd_eval(args: argparse.Namespace) -> int:
    header, rows = eval_rows(args)
    write_rows(header, rows, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------

def cmd_table(args: argparse.Namespace) -> int:
    grid = _grid(args)
    if args.name == "c-table":
        table = c_table(args.side, grid)
        if args.out:
            table.to_csv(args.out)
            return EXIT_OK
        rows = []
        for k, j in enumerate(table.js):
            for i, mu in enumerate(table.mu):
                value = table.values[i, k]
                rows.append([args.side, int(j), _fmt(mu), _fmt(value.real), _fmt(value.imag),
                             int(table.poles[i, k])])
        write_rows(["side", "j", "mu", "re", "im", "pole"], rows, None)
        return EXIT_OK

    mu, even, odd = plancherel_table(grid)
    # The densities are even in mu; rows start at mu = 0.
    keep = mu >= 0.0
    if args.parity:
        values = even if args.parity == "even" else odd
        write_rows(["mu", "density"], [[_fmt(m), _fmt(v)] for m, v in zip(mu[keep], values[keep])], args.out)
    else:
        write_rows(["mu", "even", "odd"],
                   [[_fmt(m), _fmt(e), _fmt(o)] for m, e, o in zip(mu[keep], even[keep], odd[keep])],
                   args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def write_report(report: SuiteReport, config: SuiteConfig) -> None:
    text = dump_json(report.to_report_dict())
    if config.json_path:
        with open(config.json_path, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info(f"wrote report to {config.json_path}")
    else:
        sys.stdout.write(text)
    if config.csv_path:
        rows = [[c.name, c.anchor, _fmt(c.residual_sup), _fmt(c.residual_l2), _fmt(c.tolerance),
                 c.samples, int(c.passed)] for c in sorted(report.checks, key=lambda c: c.name)]
        write_rows(["test-name", "anchor", "residual-sup", "residual-l2", "tolerance", "samples", "pass"],
                   rows, config.csv_path)


def cmd_verify(args: argparse.Namespace) -> int:
    config = build_suite_config(args)
    logger.info(f"verifying {config.suite} (seed {config.seed}, tolerance scale {config.tolerance_scale})")
    report = run_suite(config)
    write_report(report, config)
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        logger.error(f"{len(failed)} check(s) failed: {', '.join(sorted(failed))}")
        return EXIT_FAILED
    logger.info(f"all {len(report.checks)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dotenv-style config file with dotted keys")
    common.add_argument("--seed", type=int, help="random seed (default SL2_SEED or 42)")
    common.add_argument("--tolerance-scale", type=float, help="multiplies every check tolerance")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--coarse", action="store_true", help="use the half-resolution quadrature")
    common.add_argument("--log-level", help="override LOG_LEVEL")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--jmax", type=int, default=16)
    grid.add_argument("--dmu", type=float, default=0.05)
    grid.add_argument("--mu-max", type=float, default=20.0)

    parser = argparse.ArgumentParser(prog="cli.py", description="SL(2,R) harmonic analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[common], help="evaluate a single object")
    p_eval.add_argument("object", choices=EVAL_OBJECTS)
    p_eval.add_argument("--t", default="0", help="comma-separated t values for xi")
    p_eval.add_argument("--side", choices=("plus", "minus"), default="plus")
    p_eval.add_argument("--j", type=int, default=0)
    p_eval.add_argument("--mu", default="1", help="comma-separated mu values (complex allowed)")
    p_eval.add_argument("--parity", choices=("even", "odd"), default="even")
    p_eval.add_argument("--g", default="1,0,0,1", help="matrix entries a,b,c,d")
    p_eval.add_argument("--z", default="1", help="comma-separated complex arguments for gamma")
    p_eval.set_defaults(handler=cmd_eval)

    p_table = sub.add_parser("table", parents=[common, grid], help="export a table as CSV")
    p_table.add_argument("name", choices=TABLES)
    p_table.add_argument("parity", nargs="?", choices=("even", "odd"))
    p_table.add_argument("--side", choices=("plus", "minus"), default="plus")
    p_table.set_defaults(handler=cmd_table)

    p_verify = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p_verify.add_argument("suite", choices=SUITES + ("all",))
    p_verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    setup_logging(level=args.log_level)
    try:
        return args.handler(args)
    except HarmonicAnalysisError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return EXIT_USAGE
    finally:
        metrics.log_summary()


if __name__ == "__main__":
    sys.exit(main())
