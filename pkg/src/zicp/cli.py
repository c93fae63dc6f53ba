"""Command-line interface.

Subcommands: ``fit``, ``simulate``, ``bias-study``, ``coverage-study``,
``gof``, ``ppplot``.  Exit codes: 0 success, 1 malformed input, 2
identifiability error, 3 non-convergence.  All commands are
deterministic under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .errors import (DataFormatError, IdentifiabilityError, NonConvergenceError,
                     ZicpError)
from .inference import McemConfig, mcem_fit
from .model import KINDS, Theta, simulate_hierarchy, uniform_design
from .specfun import RngStream
from .studies import (StudyGrid, bias_study, coverage_study, gof_histogram,
                      ppplot_data, read_dataset_csv, write_bias_csv,
                      write_coverage_csv, write_dataset_csv, write_gof_csv,
                      write_latent_csv, write_ppplot_csv)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_UNIDENTIFIABLE = 2
EXIT_NONCONVERGED = 3


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        raise _CliError(message)


def _parse_theta(text: str) -> Theta:
    parts = text.split(",")
    if len(parts) != 4:
        raise _CliError(f"--theta needs four comma-separated values, got {text!r}")
    try:
        return Theta(*(float(p) for p in parts))
    except (ValueError, ZicpError) as exc:
        raise _CliError(f"invalid --theta {text!r}: {exc}") from None


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _mcem_config(payload: dict) -> McemConfig:
    known = {"g_schedule", "max_iter", "stop_decimals", "l_ref", "seed", "kind"}
    unknown = set(payload) - known
    if unknown:
        raise DataFormatError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(payload)
    if "g_schedule" in kwargs:
        kwargs["g_schedule"] = tuple(int(g) for g in kwargs["g_schedule"])
    try:
        return McemConfig(**kwargs)
    except (TypeError, ZicpError) as exc:
        raise DataFormatError(f"invalid config: {exc}") from None


def _study_grid(payload: dict) -> StudyGrid:
    try:
        theta = Theta(*(float(v) for v in payload["theta_true"]))
        mcem = _mcem_config(payload.get("mcem", {}))
        return StudyGrid(
            s_values=tuple(int(v) for v in payload["s_values"]),
            m_values=tuple(int(v) for v in payload["m_values"]),
            replicates=int(payload["replicates"]),
            theta_true=theta,
            level=float(payload.get("level", 0.90)),
            seed=int(payload.get("seed", 0)),
            kind=payload.get("kind", "cont"),
            mcem=mcem,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid grid: {exc}") from None


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_fit(args) -> int:
    config = _mcem_config(_load_json(args.config))
    if config.kind is None:
        raise DataFormatError("fit config must set 'kind' (cont or disc)")
    dataset = read_dataset_csv(args.data, config.kind)
    fit = mcem_fit(dataset, config)
    _write_json(fit.to_dict(level=args.level), args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    theta = _parse_theta(args.theta)
    design = uniform_design(args.strata, args.per_stratum, args.effort)
    dataset, truth = simulate_hierarchy(theta, design, args.kind, RngStream(args.seed))
    write_dataset_csv(dataset, args.out)
    if args.latent:
        write_latent_csv(dataset, truth, args.latent)
    return EXIT_OK


def _cmd_bias(args) -> int:
    grid = _study_grid(_load_json(args.grid))
    write_bias_csv(bias_study(grid), args.out)
    return EXIT_OK


def _cmd_coverage(args) -> int:
    grid = _study_grid(_load_json(args.grid))
    write_coverage_csv(coverage_study(grid), args.out)
    return EXIT_OK


def _cmd_gof(args) -> int:
    payload = _load_json(args.fit)
    try:
        kind = payload["kind"]
        theta = Theta(**{k: float(v) for k, v in payload["theta_hat"].items()})
    except (KeyError, TypeError, ZicpError) as exc:
        raise DataFormatError(f"{args.fit}: not a fit result ({exc})") from None
    dataset = read_dataset_csv(args.data, kind)
    result = gof_histogram(dataset, theta, args.replicates, bins=args.bins,
                           rng=RngStream(args.seed))
    write_gof_csv(result, args.out)
    return EXIT_OK


def _cmd_ppplot(args) -> int:
    dataset = read_dataset_csv(args.data, "cont")
    write_ppplot_csv(ppplot_data(dataset), args.out)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="zicp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the model to a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True, help="JSON file mirroring McemConfig")
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--level", type=float, default=0.90)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="simulate a dataset CSV")
    p.add_argument("--theta", required=True, help="a,b,c,d")
    p.add_argument("--strata", type=int, required=True)
    p.add_argument("--per-stratum", type=int, required=True)
    p.add_argument("--kind", choices=KINDS, default="cont")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--effort", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--latent", default=None, help="also write the latent-truth CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bias-study", help="relative-bias grid study")
    p.add_argument("--grid", required=True, help="JSON grid spec")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bias)

    p = sub.add_parser("coverage-study", help="confidence-region coverage grid study")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("gof", help="averaged-histogram goodness of fit")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True, help="fit JSON from `zicp fit`")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("ppplot", help="gamma random-effect probability-plot data")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ppplot)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except IdentifiabilityError as exc:
        print(f"error: unidentifiable: {exc}", file=sys.stderr)
        return EXIT_UNIDENTIFIABLE
    except NonConvergenceError as exc:
        print(f"error: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ZicpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
