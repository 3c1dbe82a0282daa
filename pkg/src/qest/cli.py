"""``qest`` command line: bounds, scaling sweeps, Monte-Carlo estimation,
randomized verification, and replay of saved JSON reports.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 dimension cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .errors import DimensionCapError, QestError, SpecError
from .estimate import EstimationConfig, operating_point, run_monte_carlo
from .fisher import bound_chain
from .probespec import coupling_summary, parse_probe_spec
from .report import FORMATS, ReportError, emit_report
from .scaling import MODES, scaling_sweep
from .verify import SUITES, run_suite

log = logging.getLogger("qest")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

BOUNDS_COLUMNS = [
    "n_systems", "degree", "gamma", "t", "seminorm_h0", "combinatorial_bound", "strictly_tighter",
    "delta_gamma_bound", "qfi", "sqrt_qfi", "two_delta_K", "seminorm_K", "t_seminorm_h0", "all_ordered",
]
SCALING_COLUMNS = ["N", "seminorm_h0", "qfi", "bound", "delta_mc", "exponent_fit"]
ESTIMATE_COLUMNS = [
    "protocol", "n_systems", "degree", "nu", "batches", "seed", "gamma_true", "t",
    "mean_estimate", "slope", "delta_gamma", "bound", "ratio",
]
VERIFY_COLUMNS = ["suite", "cases", "seed", "passed", "n_failures"]


def _read_spec(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc.strerror or exc}") from None


# --- commands: each takes a JSON-able config and returns the report dict ------

def run_bounds(config: dict) -> dict:
    spec = parse_probe_spec(config["spec_text"])
    summary = coupling_summary(spec)
    chain = bound_chain(None, spec, config["gamma"], config["t"])
    row = {
        "n_systems": spec.n_systems,
        "degree": spec.degree,
        "gamma": config["gamma"],
        "t": config["t"],
        "seminorm_h0": summary.seminorm_h0,
        "combinatorial_bound": summary.seminorm_bound,
        "strictly_tighter": summary.strictly_tighter,
        "delta_gamma_bound": 1.0 / (config["t"] * summary.seminorm_h0) if summary.seminorm_h0 > 0 else None,
        **{k: v for k, v in chain.as_dict().items() if k in BOUNDS_COLUMNS},
    }
    return {"command": "bounds", "config": config, "chain": chain.as_dict(), "rows": [row], "columns": BOUNDS_COLUMNS}


def run_scaling(config: dict) -> dict:
    spec = parse_probe_spec(config["spec_text"])
    result = scaling_sweep(
        spec,
        range(config["n_min"], config["n_max"] + 1),
        mode=config["mode"],
        t=config["t"],
        gamma=config["gamma"],
        nu=config["nu"],
        seed=config["seed"],
        batches=config["batches"],
    )
    return {"command": "scaling", "config": config, **result.as_dict(), "columns": SCALING_COLUMNS}


def run_estimate(config: dict) -> dict:
    spec = parse_probe_spec(config["spec_text"])
    gamma = config["gamma"]
    if gamma is None:
        gamma = operating_point(spec, config["t"])
    report = run_monte_carlo(
        spec,
        EstimationConfig(nu=config["nu"], gamma_true=gamma, t=config["t"], seed=config["seed"], batches=config["batches"]),
    )
    data = report.as_dict()
    row = {c: data[c] for c in ESTIMATE_COLUMNS}
    return {"command": "estimate", "config": config, **data, "rows": [row], "columns": ESTIMATE_COLUMNS}


def run_verify(config: dict) -> dict:
    result = run_suite(config["suite"], config["cases"], config["seed"])
    data = result.as_dict()
    row = {c: data[c] for c in VERIFY_COLUMNS}
    return {"command": "verify", "config": config, **data, "rows": [row], "columns": VERIFY_COLUMNS}


RUNNERS = {"bounds": run_bounds, "scaling": run_scaling, "estimate": run_estimate, "verify": run_verify}


# --- argument parsing -----------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qest {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=FORMATS, default="json")
        sp.add_argument("--plot", help="also render a PNG figure to this path")

    b = sub.add_parser("bounds", help="seminorm, sensitivity bound and precision chain of a spec")
    b.add_argument("spec")
    b.add_argument("--gamma", type=float, default=0.0)
    b.add_argument("--time", type=_positive_float, default=1.0)
    outputs(b)

    s = sub.add_parser("scaling", help="sweep N and fit the scaling exponent")
    s.add_argument("spec")
    s.add_argument("--n-min", type=_positive_int, required=True)
    s.add_argument("--n-max", type=_positive_int, required=True)
    s.add_argument("--mode", choices=MODES, default="bound")
    s.add_argument("--time", type=_positive_float, default=1.0)
    s.add_argument("--gamma", type=float, default=0.0, help="gamma for the QFI column")
    s.add_argument("--nu", type=_positive_int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--batches", type=_positive_int, default=100)
    outputs(s)

    e = sub.add_parser("estimate", help="seeded Monte-Carlo parity estimation")
    e.add_argument("spec")
    e.add_argument("--gamma", type=float, default=None, help="true gamma (default: operating point)")
    e.add_argument("--time", type=_positive_float, default=1.0)
    e.add_argument("--nu", type=_positive_int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--batches", type=_positive_int, default=100)
    outputs(e)

    v = sub.add_parser("verify", help="randomized property suites")
    v.add_argument("--suite", choices=SUITES, required=True)
    v.add_argument("--cases", type=_positive_int, default=100)
    v.add_argument("--seed", type=int, default=0)
    outputs(v)

    r = sub.add_parser("rerun", help="reproduce a JSON report from its embedded configuration")
    r.add_argument("report")
    r.add_argument("--out")
    r.add_argument("--format", choices=FORMATS, default="json")
    r.add_argument("--plot")
    return p


def config_from_args(args) -> dict:
    if args.command == "verify":
        return {"suite": args.suite, "cases": args.cases, "seed": args.seed}
    config = {"spec_path": args.spec, "spec_text": _read_spec(args.spec), "t": args.time, "gamma": args.gamma}
    if args.command == "scaling":
        if args.n_max < args.n_min:
            raise SpecError(f"--n-max {args.n_max} is below --n-min {args.n_min}")
        config.update(n_min=args.n_min, n_max=args.n_max, mode=args.mode, nu=args.nu, seed=args.seed, batches=args.batches)
    elif args.command == "estimate":
        config.update(nu=args.nu, seed=args.seed, batches=args.batches)
    return config


def _load_saved(path: str) -> tuple[str, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            saved = json.load(fh)
        return saved["command"], saved["config"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SpecError(f"cannot replay {path}: not a qest JSON report ({exc})") from None


def _plot(data: dict, path: str) -> None:
    from . import plotting

    {"bounds": plotting.plot_chain, "scaling": plotting.plot_scaling, "estimate": plotting.plot_estimates}.get(
        data["command"], lambda d, p: log.warning("no figure for the %s command", d["command"])
    )(data, path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="qest: %(message)s")
    try:
        if args.command == "rerun":
            command, config = _load_saved(args.report)
        else:
            command, config = args.command, config_from_args(args)
        data = RUNNERS[command](config)
        emit_report(data, args.format, args.out)
        if args.plot:
            _plot(data, args.plot)
    except DimensionCapError as exc:
        print(f"qest: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (SpecError, ReportError, ValueError) as exc:
        print(f"qest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QestError as exc:
        print(f"qest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if command == "verify" and not data["passed"]:
        print(f"qest: suite {config['suite']} failed {data['n_failures']} of {config['cases']} cases", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
