"""Command-line interface: ``profsampler {fit,sample,simulate,study} [flags]``.

Settings come from three layers, later ones winning: built-in defaults, a
``--config`` file of ``key = value`` lines (``#`` starts a comment; keys are
flag names with or without the leading dashes, ``-`` and ``_`` alike), and
command-line flags.

Exit status: 0 on success, 1 on usage or file errors, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import __version__
from .cox import CoxProfile
from .data import DataError, load_csv, save_csv
from .harness import StudyAbortedError, emit_tables, run_study, write_manifest
from .inference import fit
from .propodds import PoProfile
from .sampler import ChainConfig, Prior, chain_quantile
from .simulate import CoxSimConfig, TuningError, simulate_cox, tune_censor_horizon

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
COMMANDS = ("fit", "sample", "simulate", "study")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError("must be a nonnegative integer")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise ValueError("must be a 64-bit unsigned integer")
    return v


def _number_or_auto(text: str):
    if text.strip() == "auto":
        return "auto"
    v = float(text)
    if not v > 0:
        raise ValueError("must be positive or 'auto'")
    return v


def _int_list(text: str) -> list[int]:
    vals = [int(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _model(text: str) -> str:
    if text not in ("cox", "po"):
        raise ValueError("must be 'cox' or 'po'")
    return text


@dataclass(frozen=True)
class Option:
    convert: Callable
    default: object
    help: str
    commands: tuple[str, ...] = COMMANDS


OPTIONS: dict[str, Option] = {
    "model": Option(_model, "cox", "cox or po", ("fit", "sample", "study")),
    "data": Option(str, None, "input CSV with header time,event,z", ("fit", "sample")),
    "n": Option(_positive_int, None, "sample size", ("simulate",)),
    "reps": Option(_positive_int, None, "replications per sample size", ("study",)),
    "ns": Option(_int_list, None, "comma-separated sample sizes", ("study",)),
    "theta_true": Option(float, 1.0, "true coefficient", ("simulate", "study")),
    "censor_horizon": Option(_number_or_auto, "auto",
                             "censoring upper bound t_n, or auto (tune to 90%% events)",
                             ("simulate",)),
    "chain_length": Option(_positive_int, 5000, "Metropolis steps", ("sample", "study")),
    "burn_in": Option(_nonneg_int, 1000, "discarded (and adaptation) steps", ("sample", "study")),
    "thin": Option(_positive_int, 1, "keep every k-th draw", ("sample", "study")),
    "prior": Option(Prior.parse, Prior(), "flat or normal:MEAN:SD", ("sample", "study")),
    "proposal_sd": Option(_number_or_auto, "auto", "proposal sd or auto", ("sample", "study")),
    "step": Option(_number_or_auto, "auto", "difference step or auto (n^-1/2)",
                   ("fit", "sample", "study")),
    "seed": Option(_seed, 0, "RNG seed"),
    "out": Option(str, None, "output CSV (simulate) or directory (study)",
                  ("simulate", "study")),
    "dump": Option(str, None, "alias of --out for simulate", ("simulate",)),
    "dump_draws": Option(str, None, "write chain draws to this CSV", ("sample",)),
    "workers": Option(_positive_int, 1, "worker processes", ("study",)),
}
REQUIRED = {"fit": ("data",), "sample": ("data",), "simulate": ("n",), "study": ("ns", "reps")}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="profsampler", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="key = value settings file (flags override it)")
        for key, opt in OPTIONS.items():
            if cmd in opt.commands:
                p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS,
                               metavar=key.upper(), help=opt.help)
    return parser


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` file into raw strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def resolve_settings(command: str, flags: dict[str, str], config: dict[str, str]) -> dict:
    """Merge defaults < config file < flags, converting every value."""
    settings = {k: o.default for k, o in OPTIONS.items() if command in o.commands}
    for layer, origin in ((config, "config file"), (flags, "command line")):
        for key, raw in layer.items():
            if key not in settings:
                raise UsageError(f"unknown setting {key!r} in {origin} for '{command}'")
            try:
                settings[key] = OPTIONS[key].convert(raw)
            except ValueError as exc:
                raise UsageError(f"invalid value {raw!r} for {key}: {exc}") from None
    if command == "simulate" and settings.get("dump") and not settings.get("out"):
        settings["out"] = settings["dump"]
    for key in REQUIRED[command]:
        if settings.get(key) is None:
            raise UsageError(f"'{command}' requires --{key.replace('_', '-')}")
    return settings


def _chain_config(s: dict) -> ChainConfig:
    try:
        return ChainConfig(length=s["chain_length"], burn_in=s["burn_in"], thin=s["thin"],
                           proposal_sd=s["proposal_sd"], seed=s["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_model(s: dict):
    try:
        data = load_csv(s["data"])
    except (OSError, DataError) as exc:
        raise UsageError(f"cannot read {s['data']}: {exc}") from None
    return CoxProfile(data) if s["model"] == "cox" else PoProfile(data)


def cmd_fit(s, out):
    res = fit(_load_model(s), step=s["step"])
    out.write(f"model = {s['model']}\n")
    out.write(res.to_text())
    out.write(f"seed = {s['seed']}\n")


def cmd_sample(s, out):
    res = fit(_load_model(s), chain_cfg=_chain_config(s), prior=s["prior"], step=s["step"])
    summ = res.chain_summary
    out.write(f"model = {s['model']}\nprior = {s['prior']}\n")
    out.write(res.to_text())
    for a in (0.025, 0.05, 0.5, 0.95, 0.975):
        out.write(f"quantile_{a:g} = {chain_quantile(res.chain, a):.10g}\n")
    out.write(f"draws = {len(res.chain)}\n")
    for w in res.chain.warnings:
        out.write(f"warning = {w}\n")
    if summ is not None and s["dump_draws"]:
        res.chain.to_csv(s["dump_draws"])
        out.write(f"draws_file = {s['dump_draws']}\n")


def cmd_simulate(s, out):
    horizon = s["censor_horizon"]
    if horizon == "auto":
        horizon = tune_censor_horizon(s["theta_true"], s["n"], 0.9, seed=s["seed"])
    data = simulate_cox(CoxSimConfig(n=s["n"], censor_horizon=horizon,
                                     theta_true=s["theta_true"], seed=s["seed"]))
    target = s["out"]
    if target:
        try:
            save_csv(data, target)
        except OSError as exc:
            raise UsageError(f"cannot write {target}: {exc}") from None
    else:
        out.write("time,event,z\n")
        for t, e, z in zip(data.time, data.event, data.z):
            out.write(f"{t:.17g},{int(e)},{z:.17g}\n")
    dest = out if target else sys.stderr
    dest.write(f"seed = {s['seed']}\ncensor_horizon = {horizon:.10g}\n")


def cmd_study(s, out):
    if s["model"] != "cox":
        raise UsageError("the study simulates Cox data only; use --model cox")
    if s["out"] is None:
        raise UsageError("'study' requires --out")
    start = time.perf_counter()
    summaries = run_study(s["ns"], s["reps"], s["theta_true"], _chain_config(s), s["seed"],
                          workers=s["workers"], prior=s["prior"], step=s["step"])
    wall = time.perf_counter() - start
    try:
        paths = emit_tables(summaries, s["out"])
        settings = {k: s[k] for k in ("ns", "reps", "theta_true", "chain_length", "burn_in",
                                      "thin", "proposal_sd", "step", "workers")}
        settings["prior"] = str(s["prior"])
        paths.append(write_manifest(Path(s["out"]) / "manifest.txt", seed=s["seed"],
                                    settings=settings, summaries=summaries, wall_time=wall))
    except OSError as exc:
        raise UsageError(f"cannot write results: {exc}") from None
    out.write(f"seed = {s['seed']}\n")
    for p in paths:
        out.write(f"wrote {p}\n")


HANDLERS = {"fit": cmd_fit, "sample": cmd_sample, "simulate": cmd_simulate, "study": cmd_study}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return EXIT_OK if not exc.code else EXIT_USAGE
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        config = {}
        if getattr(args, "config", None):
            try:
                config = read_config(args.config)
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from None
        settings = resolve_settings(args.command, flags, config)
        HANDLERS[args.command](settings, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, StudyAbortedError, TuningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
