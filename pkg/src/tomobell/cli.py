"""Command-line interface.

Settings come from built-in defaults, then an optional YAML file
(``--config``), then command-line flags; flags win. Config-file keys are
the long flag names with dashes or underscores (``mean_photon``,
``crystal_phase``, ``alpha2`` ...), plus an optional ``sweep`` mapping with
``start``/``stop``/``steps`` or ``values``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import math
import operator
import re
import sys

import yaml

from . import oracle, selftest
from .model import (DEFAULT_BLOCKS, CHSH_ANGLES, ConfigError, InvalidParameterError,
                    NumericalError, SweepSpec, lambda_from_mean_photon,
                    validate_run_config)
from .runner import (CSV_COLUMNS, SweepRow, csv_row, default_workers, dump_events, run_single,
                     run_sweep, write_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "crystal_phase": math.pi,
    "eta": 0.85,
    "alpha": CHSH_ANGLES.alpha,
    "beta": CHSH_ANGLES.beta,
    "alpha2": CHSH_ANGLES.alpha_prime,
    "beta2": CHSH_ANGLES.beta_prime,
    "samples": 10**6,
    "blocks": DEFAULT_BLOCKS,
    "seed": 0,
    "format": "csv",
}
DEFAULT_MEAN_PHOTON = 0.5
SWEEP_DEFAULTS = {
    "phi": {"start": 0.0, "stop": 2 * math.pi, "steps": 17},
    "eta": {"values": [0.65, 0.75, 0.85, 0.95, 1.0]},
}
RUN_KEYS = ("lambda", "mean_photon", "crystal_phase", "eta", "alpha", "beta", "alpha2", "beta2",
            "samples", "blocks", "seed", "workers", "out", "format")

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text) -> float:
    """Real number, optionally written with ``pi``: ``0.3``, ``3*pi/8``, ``3pi/8``, ``-pi``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    src = re.sub(r"([0-9.])\s*pi", r"\1*pi", str(text).strip())

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(src, mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def parse_lambda(text) -> complex:
    """Real or complex gain: ``0.5``, ``0.3+0.2j``."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return complex(text)
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError:
        return complex(parse_number(text))


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML file with run settings (flags override it)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lambda_", metavar="L", help="complex gain, |L| < 1")
    g.add_argument("--mean-photon", help="mean photon number per mode N (sets |L|, real gain)")
    p.add_argument("--crystal-phase", help="phase phi of the second twin beam [rad] (default pi)")
    p.add_argument("--eta", help="detector efficiency in (0.5, 1] (default 0.85)")
    p.add_argument("--alpha", help="angle alpha [rad] (default 0)")
    p.add_argument("--beta", help="angle beta [rad] (default 3pi/8)")
    p.add_argument("--alpha2", help="angle alpha' [rad] (default pi/4)")
    p.add_argument("--beta2", help="angle beta' [rad] (default pi/8)")
    p.add_argument("--samples", help="events per run (default 1e6)")
    p.add_argument("--blocks", help="statistical blocks (default 20)")
    p.add_argument("--seed", help="master seed (default 0)")
    p.add_argument("--workers", help="worker threads (default $TOMOBELL_WORKERS or 1)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "report"), help="csv table or JSON report (default csv)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="tomobell", description="Tomographic Bell-test simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="single Monte-Carlo run")
    sim.add_argument("--dump", help="also write the raw event stream to this file")
    sim.add_argument("--dump-format", choices=("csv", "binary"), default="csv")

    for name, var in (("sweep-phi", "phi"), ("sweep-eta", "eta")):
        sp = sub.add_parser(name, parents=[common], help=f"sweep over {var}")
        sp.add_argument("--start")
        sp.add_argument("--stop")
        sp.add_argument("--steps", type=int)
        sp.add_argument("--values", help="comma-separated explicit sweep points")

    sub.add_parser("oracle", parents=[common], help="exact values only, no sampling")

    st = sub.add_parser("selftest", help="kernel unbiasedness and sampler goodness-of-fit suites")
    st.add_argument("--samples", type=int, default=200_000, help="samples per kernel check")
    st.add_argument("--draws", type=int, default=100_000, help="draws per chi-square test")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _load_file(path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into one settings mapping."""
    from_file = _load_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(from_file) - set(RUN_KEYS) - {"sweep"}
    if unknown:
        raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
    if "lambda" in from_file and "mean_photon" in from_file:
        raise ConfigError(["config file sets both lambda and mean_photon; give exactly one"])

    flags = {k: getattr(args, "lambda_" if k == "lambda" else k, None) for k in RUN_KEYS}
    flags = {k: v for k, v in flags.items() if v is not None}

    settings = dict(DEFAULTS)
    settings["workers"] = default_workers()
    settings.update({k: v for k, v in from_file.items() if k != "sweep"})
    if "lambda" in flags or "mean_photon" in flags:
        settings.pop("lambda", None)
        settings.pop("mean_photon", None)
    settings.update(flags)
    if "lambda" not in settings and "mean_photon" not in settings:
        settings["mean_photon"] = DEFAULT_MEAN_PHOTON
    settings["sweep_file"] = from_file.get("sweep") or {}
    return settings


def config_from_settings(settings: dict, sweep_var: str | None = None, args=None):
    errors = []

    def num(key, conv=parse_number):
        try:
            return conv(settings[key])
        except (ValueError, TypeError) as exc:
            errors.append(f"{key}: {exc}")
            return None

    if "lambda" in settings:
        lam = num("lambda", parse_lambda)
    else:
        n = num("mean_photon")
        lam = None
        if n is not None:
            try:
                lam = lambda_from_mean_photon(n)
            except InvalidParameterError as exc:
                errors.append(str(exc))
    phi = num("crystal_phase")
    eta = num("eta")
    angles = [num(k) for k in ("alpha", "beta", "alpha2", "beta2")]
    samples = num("samples", lambda v: int(parse_number(v)))
    blocks = num("blocks", lambda v: int(parse_number(v)))
    seed = num("seed", lambda v: int(parse_number(v)))
    workers = num("workers", lambda v: int(parse_number(v)))

    sweep = None
    if sweep_var is not None:
        spec = dict(SWEEP_DEFAULTS[sweep_var])
        spec.update(settings.get("sweep_file", {}))
        if args is not None:
            if args.values:
                spec = {"values": args.values.split(",")}
            elif any(v is not None for v in (args.start, args.stop, args.steps)):
                spec.pop("values", None)
                base = SWEEP_DEFAULTS["phi"] if sweep_var == "phi" else {"start": 0.65, "stop": 1.0, "steps": 5}
                spec = {"start": args.start if args.start is not None else spec.get("start", base["start"]),
                        "stop": args.stop if args.stop is not None else spec.get("stop", base["stop"]),
                        "steps": args.steps if args.steps is not None else spec.get("steps", base["steps"])}
        try:
            if "values" in spec:
                sweep = SweepSpec(sweep_var, tuple(parse_number(v) for v in spec["values"]))
            else:
                sweep = SweepSpec.linspace(sweep_var, parse_number(spec["start"]),
                                           parse_number(spec["stop"]), int(spec["steps"]))
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"sweep: {exc}")
        except ConfigError as exc:
            errors.extend(exc.errors)

    if errors:
        raise ConfigError(errors)
    return validate_run_config((lam, phi), angles, eta, samples, blocks, seed,
                               workers=workers, output_path=settings.get("out"), sweep=sweep)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _summary(report) -> str:
    b = report.bell
    return (f"B = {b.value:.4f} +- {b.std_error:.4f} (exact {report.analytic.bell:.5f}); "
            f"{report.violation_sigmas:.1f} sigma above 2; "
            f"{report.samples_per_second:.3g} events/s [{report.backend}]")


def cmd_simulate(args, settings) -> int:
    config = config_from_settings(settings)
    report = run_single(config)
    fh, close = _open_out(config.output_path)
    try:
        if settings["format"] == "report":
            fh.write(report.to_json() + "\n")
        else:
            write_csv([SweepRow("none", float("nan"), report)], config, fh)
    finally:
        if close:
            fh.close()
    if args.dump:
        dump_events(config, args.dump, binary=args.dump_format == "binary")
    print(_summary(report), file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args, settings, var: str) -> int:
    config = config_from_settings(settings, var, args)
    fh, close = _open_out(config.output_path)
    as_csv = settings["format"] == "csv"
    try:
        if as_csv:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)

            def on_row(row):
                writer.writerow(csv_row(row, config))
                fh.flush()
                print(f"{var} = {row.value:.5g}: " + (_summary(row.report) if row.ok else row.error),
                      file=sys.stderr)
        else:
            def on_row(row):
                print(f"{var} = {row.value:.5g}: " + (_summary(row.report) if row.ok else row.error),
                      file=sys.stderr)
        rows = run_sweep(config, on_row=on_row)
        if not as_csv:
            doc = [{"sweep_variable": r.variable, "sweep_value": r.value,
                    "report": r.report.to_dict() if r.ok else None, "error": r.error} for r in rows]
            fh.write(json.dumps(doc, indent=2) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK if all(r.ok for r in rows) else EXIT_NUMERIC


def cmd_oracle(args, settings) -> int:
    config = config_from_settings(settings)
    p, ang = config.params, config.angles
    cs = [oracle.correlation_exact(p, a, b) for a, b in ang.pairs()]
    doc = {
        "lambda": [p.lam.real, p.lam.imag], "crystal_phase": p.phi, "mean_photon": p.mean_photon,
        "angles": [ang.alpha, ang.beta, ang.alpha_prime, ang.beta_prime],
        "correlations": cs,
        "correlations_closed_form": [float(oracle.correlation_closed_form(p.phi, a, b)) for a, b in ang.pairs()],
        "bell": oracle.bell_exact(p, ang),
        "bell_closed_form": oracle.bell_closed_form(p.phi, ang),
        "p11": oracle.pair_probability_exact(p),
        "n_max": oracle.DEFAULT_NMAX,
        "truncation_deficit": oracle.state_deficit(oracle.build_state(p)),
    }
    fh, close = _open_out(config.output_path)
    try:
        if settings["format"] == "csv":
            fh.write(",".join(doc) + "\n")
            fh.write(",".join(json.dumps(v).replace(",", ";") for v in doc.values()) + "\n")
        else:
            fh.write(json.dumps(doc, indent=2) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = (selftest.kernel_unbiasedness(states=tuple(selftest.REFERENCE_STATES),
                                           n_samples=args.samples, seed=args.seed)
              + selftest.sampler_goodness_of_fit(n_draws=args.draws, seed=args.seed)
              + selftest.vacuum_variance_checks(n_draws=args.draws * 10, seed=args.seed))
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest(args)
        settings = resolve_settings(args)
        if args.command == "simulate":
            return cmd_simulate(args, settings)
        if args.command == "oracle":
            return cmd_oracle(args, settings)
        return cmd_sweep(args, settings, "phi" if args.command == "sweep-phi" else "eta")
    except (ConfigError, InvalidParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except yaml.YAMLError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
