"""``round-sim`` command line: run, sweep, validate."""
import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, RoundSimError
from .harness import SWEEP_AXES, emit, format_results, run_scenario, summarize, sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parse_values(axis, text):
    conv = int if axis == "n_vehicles" else float
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {text!r}", "--values") from None


def _write(results, fmt, out):
    if out:
        emit(results, fmt, out)
    else:
        sys.stdout.write(format_results(results, fmt))


def build_parser():
    p = argparse.ArgumentParser(prog="round-sim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    sw = sub.add_parser("sweep", help="run a scenario across one parameter")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True)
    sw.add_argument("--repeats", type=int, default=1)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", required=True)
    sw.add_argument("--format", choices=("csv", "json"), default="csv")

    val = sub.add_parser("validate", help="parse a config and exit")
    val.add_argument("--config", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"ok: {args.config}")
            return EXIT_OK
        if args.command == "run":
            if args.seed is not None:
                cfg = cfg.replace(seed=args.seed)
            _write([run_scenario(cfg)], args.format, args.out)
            return EXIT_OK
        values = _parse_values(args.axis, args.values)
        results = sweep(cfg, args.axis, values, repeats=args.repeats, jobs=args.jobs)
        _write(summarize(results, args.repeats), args.format, args.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RoundSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
