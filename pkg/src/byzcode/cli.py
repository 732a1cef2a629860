"""Command-line interface: ``byzcode info|maxent|regions|simulate``.

Sensors are numbered from 1 on the command line and in every output file.
Exit status is 0 on success (protocol errors inside simulated sessions are
data, not failures), 2 for bad arguments or malformed input files, 1 for
other I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from pathlib import Path

from . import __version__
from .errors import FormatError, InvalidArgument
from .info_core import (
    SCHEMA_VERSION,
    JointPmf,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from .maxent import fabrication_target, solve_sum_rate_star
from .protocol.session import SimParams
from .protocol.trials import run_trials, summarize
from .regions import dfr_k, first_violation, gap_demo, min_sum_rate_point, rfr_k

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 1, 2


def load_pmf(path: str | Path) -> JointPmf:
    """Read a pmf JSON file; parse errors report the line and column."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return JointPmf.from_dict(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(obj, out: str | None) -> None:
    text = _dump(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _label(s) -> str:
    return "".join(f"X{i + 1}" for i in sorted(s))


def _sensor_list(text: str | None, m: int) -> list[int]:
    if not text:
        return []
    try:
        ids = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidArgument(f"--traitors: expected comma-separated sensor numbers, got {text!r}") from exc
    if any(not 1 <= i <= m for i in ids):
        raise InvalidArgument(f"--traitors: sensor numbers must be in 1..{m}")
    return sorted({i - 1 for i in ids})


def _parse_rates(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise InvalidArgument(f"--rates: expected comma-separated numbers, got {text!r}") from exc


# -- commands -------------------------------------------------------------

def info_data(p: JointPmf) -> dict:
    m = p.m
    subsets = []
    for size in range(1, m + 1):
        for s in itertools.combinations(range(m), size):
            subsets.append({"set": [i + 1 for i in s], "H": entropy(p, s)})
    pairs = []
    for a, b in itertools.combinations(range(m), 2):
        rest = [i for i in range(m) if i not in (a, b)]
        pairs.append({
            "pair": [a + 1, b + 1],
            "MI": mutual_information(p, {a}, {b}),
            "CMI_given_rest": conditional_mutual_information(p, {a}, {b}, rest),
        })
    return {"schema": SCHEMA_VERSION, "alphabet_sizes": list(p.alphabet_sizes), "entropies": subsets, "pairs": pairs}


def cmd_info(args) -> int:
    data = info_data(load_pmf(args.dist))
    if args.json:
        _emit(data, None)
        return EXIT_OK
    lines = [f"{'subset':<16}{'H (bits)':>12}"]
    for row in data["entropies"]:
        lines.append(f"{_label(i - 1 for i in row['set']):<16}{row['H']:>12.6f}")
    if data["pairs"]:
        lines.append("")
        lines.append(f"{'pair':<16}{'I':>12}{'I | rest':>12}")
        for row in data["pairs"]:
            a, b = row["pair"]
            lines.append(f"{f'X{a};X{b}':<16}{row['MI']:>12.6f}{row['CMI_given_rest']:>12.6f}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def maxent_data(p: JointPmf, t: int) -> tuple[dict, JointPmf]:
    sol = solve_sum_rate_star(p, t)
    cover, best = sol.argmax
    data = {
        "schema": SCHEMA_VERSION,
        "t": t,
        "R_star": sol.R_star,
        "H_p": entropy(p, range(p.m)),
        "argmax_cover": cover.as_lists(),
        "per_cover": [
            {"cover": c.as_lists(), "H": r.H, "iterations": r.iterations, "marginal_error": r.marginal_error}
            for c, r in sol.per_cover
        ],
    }
    return data, best.q_star


def cmd_maxent(args) -> int:
    p = load_pmf(args.dist)
    data, q_star = maxent_data(p, args.t)
    if args.emit_qtilde:
        Path(args.emit_qtilde).write_text(_dump(q_star.to_dict()))
    _emit(data, args.out)
    return EXIT_OK


def cmd_regions_check(args) -> int:
    p = load_pmf(args.dist)
    rates = _parse_rates(args.rates)
    k = dfr_k(p.m, args.t) if args.mode == "dfr" else rfr_k(p.m, args.t)
    bad = first_violation(rates, p, k)
    _emit({
        "schema": SCHEMA_VERSION,
        "mode": args.mode,
        "t": args.t,
        "k": k,
        "rates": rates,
        "achievable": bad is None,
        "first_violation": None if bad is None else {**bad.describe(), "slack": bad.slack(rates)},
    }, args.out)
    return EXIT_OK


def cmd_regions_minsum(args) -> int:
    p = load_pmf(args.dist)
    total, point = min_sum_rate_point(p, args.k)
    _emit({"schema": SCHEMA_VERSION, "k": args.k, "min_sum_rate": total, "rates": list(point.rates)}, args.out)
    return EXIT_OK


def cmd_regions_gap(args) -> int:
    p = load_pmf(args.dist)
    _emit({"schema": SCHEMA_VERSION, **gap_demo(p).to_dict()}, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = load_pmf(args.dist)
    traitors = _sensor_list(args.traitors, p.m)
    strategy = args.strategy.lower()
    q_tilde = None
    if strategy == "fabricate":
        if not args.qtilde:
            raise InvalidArgument("--strategy fabricate needs --qtilde (a pmf file or 'auto')")
        if args.qtilde == "auto":
            q_tilde = fabrication_target(p, args.t, traitors)[1].q_star
        else:
            q_tilde = load_pmf(args.qtilde)
    if args.trials < 1:
        raise InvalidArgument("--trials must be >= 1")
    params = SimParams(
        k=args.k, rounds=args.rounds, epsilon=args.eps, C=args.C, seed=args.seed, t=args.t,
        typ_eps=args.typ_eps, decoder=args.decoder,
    )
    results = run_trials(p, params, args.trials, traitors, strategy, q_tilde)
    summary = summarize(results)
    report = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "config": {
            "dist": str(args.dist),
            "pmf": p.to_dict(),
            "traitors": [i + 1 for i in traitors],
            "strategy": strategy,
            "qtilde": args.qtilde,
            "trials": args.trials,
            "params": params.to_dict(),
        },
        "results": summary,
        "R_star": solve_sum_rate_star(p, args.t).R_star,
    }
    Path(args.out).write_text(_dump(report))
    with open(args.log, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "honest_error", "session_error_kind", "sum_rate_bits_per_symbol", "final_cover"])
        for r in results:
            w.writerow(r.csv_row())
    sys.stdout.write(
        f"honest error rate {summary['honest_error_rate']:.4f}, mean sum rate "
        f"{summary['mean_sum_rate']:.4f} bits/symbol (R* = {report['R_star']:.4f})\n"
    )
    return EXIT_OK


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="byzcode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="entropies of every subset and pairwise (conditional) mutual information")
    p.add_argument("--dist", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("maxent", help="minimum variable-rate sum rate R* for t traitors")
    p.add_argument("--dist", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--emit-qtilde", metavar="PATH", help="write the maximizing distribution as pmf JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_maxent)

    regions = sub.add_parser("regions", help="fixed-rate achievable regions")
    rsub = regions.add_subparsers(dest="regions_command", required=True)
    p = rsub.add_parser("check", help="test a rate vector against the fixed-rate region")
    p.add_argument("--dist", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--rates", required=True, help="comma-separated rates, one per sensor")
    p.add_argument("--mode", choices=["dfr", "rfr"], default="rfr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_regions_check)
    p = rsub.add_parser("minsum", help="smallest sum rate in R_k")
    p.add_argument("--dist", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regions_minsum)
    p = rsub.add_parser("gap", help="variable-rate vs randomized fixed-rate sum rate for three sensors, t = 1")
    p.add_argument("--dist", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regions_gap)

    p = sub.add_parser("simulate", help="Monte Carlo runs of the variable-rate protocol")
    p.add_argument("--dist", required=True)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--traitors", default="", help="comma-separated sensor numbers")
    p.add_argument("--strategy", default="honest", choices=["honest", "gibberish", "fabricate", "collide"],
                   type=str.lower)
    p.add_argument("--qtilde", help="fabrication pmf file, or 'auto' for the best one the traitors can simulate")
    p.add_argument("--k", type=int, default=200)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--C", type=int, default=64)
    p.add_argument("--typ-eps", type=float, default=None, help="typicality tolerance for cover pruning")
    p.add_argument("--decoder", choices=["auto", "lazy", "exhaustive"], default="auto")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="report.json")
    p.add_argument("--log", default="trials.csv")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArgument, FormatError) as exc:
        print(f"byzcode: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"byzcode: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
