"""Command-line entry point.

Every subcommand writes one artifact (JSON, CSV or PGM) to ``--output`` or,
for text formats, to stdout.  Exit status: 0 on success, 1 when the input
fails validation, 2 when a numerical tolerance cannot be met.
"""

import argparse
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import carpet, gauss, pairings
from .fields import MuSchedule
from .testfns import QuadratureError, parse_test_function

SUBCOMMANDS = ("gauss", "revival", "carpet", "pair", "sweep")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
THREADS_ENV = "TALBOT_THREADS"


class ConfigError(ValueError):
    """The configuration does not describe a valid run."""


class Files(dict):
    """Binary outputs keyed by path, written together at the end of a run."""


# -- number formatting ------------------------------------------------------


def _fmt_number(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent=0):
    """JSON with every float at 17 significant digits and non-finite values as null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, int, float)):
        return _fmt_number(obj)
    if isinstance(obj, Fraction):
        return json.dumps(f"{obj.numerator}/{obj.denominator}")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _complex_fields(prefix, z):
    z = complex(z)
    return {f"{prefix}_re": z.real, f"{prefix}_im": z.imag}


# -- parsing helpers --------------------------------------------------------


def parse_rational(text):
    """Exact rational from 'p/q' or an integer string."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {text!r}") from exc


def parse_real(text):
    """'p/q' stays an exact Fraction; anything else becomes a float."""
    if text is None or isinstance(text, (float, Fraction)):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if "/" in s:
        return parse_rational(s)
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"not a real number: {text!r}") from exc


def thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class RunConfig:
    """A complete description of one run: subcommand, its parameters, output path."""

    subcommand: str
    params: dict = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}; expected one of {SUBCOMMANDS}")

    def get(self, name, default=None):
        value = self.params.get(name)
        return default if value is None else value

    def require(self, name):
        value = self.params.get(name)
        if value is None:
            raise ConfigError(f"{self.subcommand}: missing required parameter {name!r}")
        return value


# -- subcommands ------------------------------------------------------------


def _int_triple(cfg, name):
    vals = cfg.params.get(name)
    if vals is None:
        return None
    if len(vals) != 3:
        raise ConfigError(f"--{name} takes three integers")
    return [int(v) for v in vals]


def run_gauss(cfg):
    gamma, g = _int_triple(cfg, "gamma"), _int_triple(cfg, "g")
    if (gamma is None) == (g is None):
        raise ConfigError("gauss: give exactly one of --gamma P Q M or --g A B C")
    if gamma is not None:
        p, q, m = gamma
        value = gauss.gamma_sum(p, q, m)
        cases = gauss.gamma_via_cases(p, q, m)
        return {
            "p": p, "q": q, "m": m,
            **_complex_fields("value", value),
            "modulus": abs(value),
            "sqrt_q": math.sqrt(q),
            **_complex_fields("via_cases", cases),
        }
    a, b, c = g
    value = gauss.gauss_sum(a, b, c)
    return {"a": a, "b": b, "c": c, **_complex_fields("value", value), "modulus": abs(value), "sqrt_c": math.sqrt(c)}


def run_revival(cfg):
    p, q = int(cfg.require("p")), int(cfg.require("q"))
    comb = carpet.revival_comb(p, q)
    out = {
        "p": p,
        "q": q,
        "shift": comb.shift,
        "locations": [float(x) for x in comb.locations],
        "weights": [{**_complex_fields("w", w), "modulus": abs(w)} for w in comb.weights],
    }
    if cfg.get("check", False):
        sigma = float(cfg.get("sigma", 1 / (16 * q)))
        n_max = int(cfg.get("n_max", math.ceil(10 / sigma)))
        rep = carpet.smoothed_comb_check(p, q, sigma, n_max)
        max_error = float(cfg.get("max_error", 1e-6))
        ratio_rtol = float(cfg.get("ratio_rtol", 0.02))
        out["check"] = {
            "sigma": sigma,
            "n_max": n_max,
            "max_error": rep.max_error,
            "peak_ratios": [float(x) for x in rep.peak_ratios],
            "expected_ratio": rep.expected_ratio,
            "passed": rep.passed(max_error, ratio_rtol),
        }
        if not out["check"]["passed"]:
            return out, EXIT_NUMERICAL
    return out


def run_carpet(cfg):
    if cfg.output is None:
        raise ConfigError("carpet: --output is required for the PGM image")
    fld = cfg.get("field", "v")
    r = cfg.get("r")
    grid = carpet.render(
        fld,
        width=int(cfg.get("width", 1024)),
        height=int(cfg.get("height", 1024)),
        sigma=float(cfg.get("sigma", 0.005)),
        n_max=int(cfg.get("n_max", 4096)),
        r=None if r is None else float(r),
        zeta_range=(float(cfg.get("zeta_min", 0.0)), float(cfg.get("zeta_max", 2.0))),
        threads=thread_count(),
    )
    files = Files({cfg.output: carpet.to_pgm(grid)})
    row = cfg.get("row")
    if row is not None:
        row = int(row)
        if not 0 <= row < grid.height:
            raise ConfigError(f"carpet: row {row} outside [0, {grid.height})")
        files[cfg.get("row_output", cfg.output + f".row{row}.csv")] = carpet.row_csv(grid, row).encode()
    return files


def _test_function(cfg):
    spec = cfg.get("phi", "gaussian")
    if isinstance(spec, str):
        if spec != "gaussian":
            raise ConfigError(f"--phi {spec!r}: only 'gaussian' can be given by flags; use a config file for trigpoly")
        spec = {
            "type": "gaussian",
            "center": cfg.get("center", 0.0),
            "width": cfg.get("width", 1.0),
            "modulation": cfg.get("modulation", 0.0),
        }
    return parse_test_function(spec)


def _line(cfg):
    kind = cfg.require("line")
    vals = {name: parse_real(cfg.params.get(name)) for name in ("zeta", "xi", "m", "k")}
    wanted = {"horizontal": ("zeta",), "vertical": ("xi",), "oblique": ("m", "k")}.get(kind, ())
    vals = {name: v for name, v in vals.items() if name in wanted}
    if kind == "oblique" and vals.get("k") is None:
        vals["k"] = 0.0
    return pairings.LineSpec(kind, restriction=cfg.get("restriction", "half"), **vals)


def run_pair(cfg):
    line = _line(cfg)
    fld = cfg.get("field", "v")
    r = cfg.get("r")
    r = None if r is None else float(r)
    n_max = cfg.get("n_max")
    tol = cfg.get("tol")
    res = pairings.pair_line(
        line, fld, _test_function(cfg), None if n_max is None else int(n_max), r, None if tol is None else float(tol)
    )
    return {
        "line": line.kind,
        "field": fld,
        "r": r,
        **_complex_fields("value", res.value),
        "tail_bound": res.tail_bound,
        "n_max": res.n_max,
    }


def run_sweep(cfg):
    line = _line(cfg)
    grid = cfg.get("r_grid", pairings.DEFAULT_R_GRID)
    if isinstance(grid, str):
        grid = grid.split(",")
    grid = [float(x) for x in grid]
    mu = cfg.get("mu")
    mu = MuSchedule(float(cfg.get("mu_alpha", 0.2)), float(cfg.get("mu_scale", 1.0))) if mu is None else int(mu)
    s = cfg.get("s")
    s = None if s is None else float(s)
    if s is not None and not s > 0.5:
        raise ConfigError(f"sweep: hs_error needs s > 1/2, got {s}")
    phi = _test_function(cfg)
    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = pairings.sweep(line, phi, grid, mu, s, executor=pool)
    else:
        records = pairings.sweep(line, phi, grid, mu, s)
    buf = io.StringIO()
    pairings.write_csv(records, buf)
    return buf.getvalue()


HANDLERS = {"gauss": run_gauss, "revival": run_revival, "carpet": run_carpet, "pair": run_pair, "sweep": run_sweep}


def _emit(result, output, stdout):
    if isinstance(result, Files):
        for path, data in result.items():
            with open(path, "wb") as fh:
                fh.write(data)
        return
    text = result if isinstance(result, str) else dumps(result) + "\n"
    if output is None:
        stdout.write(text)
    else:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)


def run(config, stdout=None, stderr=None):
    """Execute ``config``; return the process exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        result = HANDLERS[config.subcommand](config)
        status = EXIT_OK
        if isinstance(result, tuple):
            result, status = result
        _emit(result, config.output, stdout)
        return status
    except (pairings.ToleranceError, QuadratureError) as exc:
        stderr.write(f"talbot {config.subcommand}: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError) as exc:
        stderr.write(f"talbot {config.subcommand}: invalid input: {exc}\n")
        return EXIT_INVALID


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_line_args(p):
    p.add_argument("--line", choices=pairings.LINE_KINDS)
    p.add_argument("--zeta", help="height of a horizontal line, decimal or p/q")
    p.add_argument("--xi", help="abscissa of a vertical line")
    p.add_argument("--m", help="slope of the oblique line zeta = m xi - k")
    p.add_argument("--k", help="offset of the oblique line (default 0)")
    p.add_argument("--restriction", choices=pairings.RESTRICTIONS)
    p.add_argument("--phi", help="test function type (gaussian); trigpoly needs a config file")
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--modulation", type=float)


def build_parser():
    parser = _Parser(prog="talbot", description="Talbot effect: Gauss sums, revivals, carpets and pairings.")
    parser.add_argument("--config", help="JSON file; its keys override command-line flags")
    parser.add_argument("--output", "-o", help="output file (default: stdout for JSON and CSV)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    g = sub.add_parser("gauss", help="Gauss sums G(a,b,c) and revival weights Gamma(p,q;m)")
    g.add_argument("--gamma", nargs=3, metavar=("P", "Q", "M"))
    g.add_argument("--g", nargs=3, metavar=("A", "B", "C"))

    rv = sub.add_parser("revival", help="revival comb at zeta = p/q")
    rv.add_argument("--p", type=int)
    rv.add_argument("--q", type=int)
    rv.add_argument("--check", action="store_true", default=None, help="run the mollified comb comparison")
    rv.add_argument("--sigma", type=float)
    rv.add_argument("--n-max", dest="n_max", type=int)

    c = sub.add_parser("carpet", help="render a Talbot carpet as a 16-bit PGM")
    c.add_argument("--field", choices=("v", "w"))
    c.add_argument("--r", type=float)
    c.add_argument("--width", type=int)
    c.add_argument("--height", type=int)
    c.add_argument("--sigma", type=float)
    c.add_argument("--n-max", dest="n_max", type=int)
    c.add_argument("--zeta-min", dest="zeta_min", type=float)
    c.add_argument("--zeta-max", dest="zeta_max", type=float)
    c.add_argument("--row", type=int, help="also dump this zeta-row as CSV")
    c.add_argument("--row-output", dest="row_output")

    pr = sub.add_parser("pair", help="pair v or w_r with a test function along a line")
    _add_line_args(pr)
    pr.add_argument("--field", choices=("v", "w"))
    pr.add_argument("--r", type=float)
    pr.add_argument("--n-max", dest="n_max", type=int)
    pr.add_argument("--tol", type=float, help="fail with status 2 if the tail bound exceeds this")

    sw = sub.add_parser("sweep", help="error decomposition over an r-grid (CSV)")
    _add_line_args(sw)
    sw.add_argument("--r-grid", dest="r_grid", help="comma-separated, strictly increasing")
    sw.add_argument("--mu", type=int, help="fixed low-band cutoff instead of floor(r^alpha)")
    sw.add_argument("--mu-alpha", dest="mu_alpha", type=float)
    sw.add_argument("--mu-scale", dest="mu_scale", type=float)
    sw.add_argument("--s", type=float, help="Sobolev order for the H^-s column (horizontal lines)")
    for p in (g, rv, c, pr, sw):
        # also accepted after the subcommand; SUPPRESS keeps a top-level value
        p.add_argument("--output", "-o", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return parser


def config_from_args(argv):
    """Merge parsed flags with an optional JSON config (config wins)."""
    args = build_parser().parse_args(argv)
    values = {k: v for k, v in vars(args).items() if v is not None}
    path = values.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    subcommand = values.pop("subcommand", None)
    if subcommand is None:
        raise ConfigError("no subcommand given on the command line or in the config")
    output = values.pop("output", None)
    values.pop("verbose", None)
    return RunConfig(subcommand, values, output), args.verbose


def main(argv=None):
    try:
        config, verbose = config_from_args(argv)
    except ConfigError as exc:
        sys.stderr.write(f"talbot: invalid input: {exc}\n")
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
