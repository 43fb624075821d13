"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 computation error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import metadata

import numpy as np

from .characterize import (
    NOT_AOM,
    ac_satisfied,
    construct_pessimistic_representation,
    intersect_orders,
    is_aom,
    revealed_preference_pac,
)
from .core import AOMError, Menu, Preference, canonical_menu
from .inference import (
    BoundTarget,
    confidence_set,
    estimate_choice_rule,
    joint_attention_bounds,
    attention_bound_lower,
    attention_bound_upper,
    test_preference,
)
from .io import DataError, emit_report, load_dataset, write_dataset
from .simulation import LogitDesign, monte_carlo_bounds, monte_carlo_table, population_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COMPUTE = 0, 1, 2, 3

KIND_NAMES = {"aom": "AC", "ac": "AC", "ram": "RAM", "binary": "BINARY_ETA"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _kinds(text: str) -> list[str]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if part not in KIND_NAMES:
            raise UsageError(f"unknown constraint family {part!r}; use aom, ram, binary")
        out.append(KIND_NAMES[part])
    return out


def _pref(text, alphabet) -> Preference:
    return Preference.parse(text, alphabet)


def _target(text: str, alphabet) -> tuple[int, Menu]:
    if "@" not in text:
        raise UsageError(f"target {text!r} must look like a@a;b;c")
    alt, menu = text.split("@", 1)
    return alphabet.index(alt.strip()), canonical_menu(menu.split(";"), alphabet)


def _pairs(pairs, alphabet) -> list[list[str]]:
    return sorted([alphabet.label(b), alphabet.label(a)] for b, a in pairs)


def _common(p):
    p.add_argument("--data", required=True, help="CSV dataset")
    p.add_argument("--format", default="long", choices=["long", "counts"])


def _inference_opts(p):
    p.add_argument("--constraints", default="aom", help="comma list of aom, ram, binary")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--two-step", dest="method", action="store_const", const="two_step")
    g.add_argument("--one-step", dest="method", action="store_const", const="one_step")
    p.set_defaults(method="two_step")
    p.add_argument("--c3", type=float, default=0.005)
    p.add_argument("--mc-draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aom", description="Preference and attention elicitation under attention overload.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    output = _Parser(add_help=False)
    output.add_argument("--report", default="json", choices=["json", "table"], help="report format")
    output.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("simulate", help="draw a dataset from the logit attention design")
    p.add_argument("--report", default="json", choices=["json", "table"], help="report format")
    p.add_argument("--model", default="logit", choices=["logit"])
    p.add_argument("--varsigma", type=float, default=2.0)
    p.add_argument("--n-alts", type=int, default=6)
    p.add_argument("--n-per-menu", type=int, default=200)
    p.add_argument("--pref", default=None, help="true preference, default a1>a2>...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV file to write the dataset to")
    p.add_argument("--data-format", default="long", choices=["long", "counts"])

    p = sub.add_parser("test", help="test one preference", parents=[output])
    _common(p)
    p.add_argument("--pref", required=True)
    _inference_opts(p)

    p = sub.add_parser("elicit", help="confidence set for the preference", parents=[output])
    _common(p)
    _inference_opts(p)
    p.add_argument("--population", action="store_true", help="treat frequencies as exact probabilities")

    p = sub.add_parser("bounds", help="attention frequency bounds", parents=[output])
    _common(p)
    p.add_argument("--target", action="append", required=True, help="a@a;b;c (repeatable)")
    p.add_argument("--pref", default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--joint", action="store_true")
    p.add_argument("--mc-draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("feasibility", help="exact AOM checks on the plug-in choice rule", parents=[output])
    _common(p)
    p.add_argument("--pref", default=None)

    p = sub.add_parser("reproduce-table1", help="rejection-rate table for the logit design", parents=[output])
    p.add_argument("--reps", type=int, default=0, help="0 = population rows only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-menu", type=int, default=200)
    p.add_argument("--mc-draws", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--c3", type=float, default=0.005)

    p = sub.add_parser("reproduce-figure1", help="attention bound table for the logit design", parents=[output])
    p.add_argument("--reps", type=int, default=0, help="0 = population bounds only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-menu", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    return parser


def _simulate(args) -> dict:
    design = LogitDesign(args.n_alts, args.varsigma, args.n_per_menu, args.pref)
    data = design.sample(args.seed)
    write_dataset(data, args.out, args.data_format)
    return {
        "dataset": args.out,
        "observations": len(data),
        "menus": len(design.domain),
        "true_preference": design.pref.format(design.alphabet),
    }


def _test(args) -> dict:
    data = load_dataset(args.data, args.format)
    pref = _pref(args.pref, data.alphabet)
    res = test_preference(
        data, pref, _kinds(args.constraints), args.eta, args.alpha, args.method, args.c3, args.mc_draws, args.seed
    )
    out = res.summary()
    out["preference"] = pref.format(data.alphabet)
    return out


def _elicit(args) -> dict:
    data = load_dataset(args.data, args.format)
    al = data.alphabet
    if args.population:
        rel = revealed_preference_pac(estimate_choice_rule(data))
        if rel is NOT_AOM:
            return {"mode": "population", "aom": False, "survivors": [], "revealed": []}
        return {
            "mode": "population",
            "aom": True,
            "survivors": [p.format(al) for p in rel.survivors],
            "revealed": _pairs(rel.pairs, al),
        }
    cs = confidence_set(data, args.alpha, _kinds(args.constraints), args.eta, args.method, args.c3, args.mc_draws, args.seed)
    return {
        "mode": "inference",
        "alpha": args.alpha,
        "confidence_set": [p.format(al) for p in cs.members],
        "revealed": _pairs(intersect_orders(cs.members), al),
        "specification_rejected": cs.specification_rejected,
        "statistics": [
            {"preference": r.pref.format(al), "statistic": r.statistic, "cv": r.cv, "reject": r.reject}
            for r in cs.results
        ],
    }


def _bounds(args) -> dict:
    data = load_dataset(args.data, args.format)
    al = data.alphabet
    pref = _pref(args.pref, al) if args.pref else None
    parsed = [_target(t, al) for t in args.target]
    if args.joint:
        targets = [BoundTarget(a, S, "lower") for a, S in parsed]
        if pref is not None:
            targets += [BoundTarget(a, S, "upper", pref) for a, S in parsed]
        ests = joint_attention_bounds(data, targets, args.alpha, args.mc_draws, args.seed)
    else:
        pi_hat = estimate_choice_rule(data)
        ests = [attention_bound_lower(pi_hat, a, S, args.alpha) for a, S in parsed]
        if pref is not None:
            ests += [attention_bound_upper(pi_hat, pref, a, S, args.alpha) for a, S in parsed]
    return {"joint": args.joint, "alpha": args.alpha, "bounds": [e.summary(al) for e in ests]}


def _feasibility(args) -> dict:
    data = load_dataset(args.data, args.format)
    al = data.alphabet
    pi = estimate_choice_rule(data)
    out = {}
    witness = is_aom(pi) if al.size <= 9 else None
    out["aom"] = witness is not None if al.size <= 9 else None
    out["witness"] = witness.format(al) if witness is not None else None
    pref = _pref(args.pref, al) if args.pref else witness
    if pref is not None:
        ok, worst = ac_satisfied(pi, pref)
        out["preference"] = pref.format(al)
        out["ac_satisfied"] = ok
        if worst is not None:
            out["worst_constraint"] = {"constraint": worst[0].describe(al), "value": worst[1]}
        if ok:
            mu = construct_pessimistic_representation(pi, pref)
            out["representation"] = {
                S.format(al): {Menu(int(b)).format(al): float(m) for b, m in zip(*mu.items(S)) if m > 1e-12}
                for S in mu.menus
            }
    return out


def _table1(args) -> dict:
    design = LogitDesign(n_per_menu=args.n_per_menu)
    pop = population_table(design)
    out = {"restrictions": pop["restrictions"], "population": pop["rows"]}
    if args.reps > 0:
        out["monte_carlo"] = monte_carlo_table(
            design, args.reps, args.seed, alpha=args.alpha, c3=args.c3, draws=args.mc_draws
        )
    return out


def _figure1(args) -> dict:
    design = LogitDesign(n_per_menu=args.n_per_menu)
    rows = monte_carlo_bounds(design, args.reps, args.seed, alpha=args.alpha)
    if args.reps == 0:
        for r in rows:
            r.pop("lower_p95"), r.pop("upper_p05")
    return {"reps": args.reps, "bounds": rows}


HANDLERS = {
    "simulate": _simulate,
    "test": _test,
    "elicit": _elicit,
    "bounds": _bounds,
    "feasibility": _feasibility,
    "reproduce-table1": _table1,
    "reproduce-figure1": _figure1,
}


def run_command(argv) -> dict:
    """Parse ``argv`` and run the subcommand; returns the report.

    Raises :class:`UsageError` for bad arguments and library errors for
    data or computation failures.
    """
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required")
    results = HANDLERS[args.command](args)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "report"}
    return {
        "command": args.command,
        "status": "ok",
        "config": config,
        "results": results,
        "provenance": {"version": _version(), "numpy": np.__version__},
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report = run_command(argv)
    except UsageError as err:
        sys.stderr.write(f"usage error: {err}\n")
        return EXIT_USAGE
    except (DataError, FileNotFoundError, KeyError, ValueError) as err:
        sys.stderr.write(f"data error: {err}\n")
        return EXIT_DATA
    except (AOMError, ArithmeticError, RuntimeError) as err:
        return _fail(argv, err)
    target = None if args.command == "simulate" else args.out
    emit_report(report, args.report, target)
    return EXIT_OK


def _fail(argv, err) -> int:
    sys.stderr.write(f"computation error: {err}\n")
    emit_report({"command": argv[0] if argv else None, "status": "failed", "error": str(err)}, "json", sys.stderr)
    return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
