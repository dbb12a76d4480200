"""Command-line front end: ``coupling-lab {simulate,verify,bounds,oracle}``.

Exit codes: 0 pass, 1 property failure, 2 usage error, 3 runtime error,
4 instance too large for exact enumeration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from . import oracle, stats
from .bounds import ComparisonRow, compare_tails
from .coupling import CouplingModel
from .errors import CouplingLabError, InstanceTooLarge, InvalidArgument, InvalidPopulation
from .population import Population, parse_values, two_color_urn
from .reports import TestReport, format_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME, EXIT_TOO_LARGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: dict | None
    values: str | None
    urn: str | None
    n: int
    trials: int | None
    seed: int | None
    format: str
    out: str | None
    q: list[str] | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def header(self) -> str:
        return "# config: " + json.dumps(self.to_dict(), sort_keys=True) + "\n"


def _parse_urn(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--urn expects 'a,b', got {text!r}") from exc
    return a, b


def _population(args) -> Population:
    if (args.values is None) == (args.urn is None):
        raise UsageError("give exactly one of --values or --urn")
    if args.values is not None:
        return parse_values(args.values)
    return two_color_urn(*_parse_urn(args.urn))


def _model(args) -> CouplingModel:
    if args.model == "kfold":
        if args.k is None:
            raise UsageError("--model kfold needs --k")
        return CouplingModel.kfold(args.k)
    if args.model == "surreplacement":
        if args.d is None:
            raise UsageError("--model surreplacement needs --d")
        return CouplingModel.surreplacement(args.d)
    return CouplingModel.replacement()


def _config(args, model: CouplingModel | None) -> RunConfig:
    return RunConfig(
        command=args.command,
        model=model.describe() if model else None,
        values=getattr(args, "values", None),
        urn=getattr(args, "urn", None),
        n=args.n,
        trials=getattr(args, "trials", None),
        seed=getattr(args, "seed", None),
        format=args.format,
        out=args.out,
        q=getattr(args, "q_list", None),
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# commands ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    pop, model = _population(args), _model(args)
    trials = args.trials or 100_000
    args.trials = trials
    cfg = _config(args, model)
    emp = stats.collect(pop, model, args.n, trials, args.seed)
    sidecar = {"config": cfg.to_dict(), "summary": emp.summary()}
    if args.format == "json":
        payload = dict(sidecar)
        payload["counts"] = [{"s": s, "t": t, "count": c} for (s, t), c in sorted(emp.counts.items())]
        _emit(_dumps(payload), args.out)
    else:
        _emit(cfg.header() + emp.to_csv(), args.out)
        if args.out is not None:
            Path(str(args.out) + ".json").write_text(_dumps(sidecar))
    return EXIT_OK


def monte_carlo_suite(pop: Population, model: CouplingModel, n: int, trials: int,
                      seed: int, workers: int | None = None) -> list[TestReport]:
    emp = stats.collect(pop, model, n, trials, seed, workers=workers)
    want_S = oracle.exact_without_replacement(pop, n)
    want_T = oracle.exact_marginal_T(pop, model, n)
    reports = [
        stats.martingale_test(emp),
        stats.marginal_gof_test(emp, want_S, want_T),
        stats.convex_function_test(emp),
        stats.means_test(emp),
    ]
    if model.kind == "surreplacement":
        reports.append(stats.surreplacement_law_test(pop, model.d, n, trials, seed, workers=workers))
    return reports


def cmd_verify(args) -> int:
    pop, model = _population(args), _model(args)
    cfg = _config(args, model)
    reports: list[TestReport] = []
    run_mc = args.trials is not None
    try:
        _, exact = oracle.exact_suite(pop, model, args.n)
        reports.extend(exact)
    except InstanceTooLarge:
        run_mc = True
    if run_mc:
        trials = args.trials or 1_000_000
        reports.extend(monte_carlo_suite(pop, model, args.n, trials, args.seed))
    ok = all(r.passed for r in reports)
    if args.format == "json":
        _emit(_dumps({"config": cfg.to_dict(), "passed": ok,
                      "reports": [r.to_dict() for r in reports]}), args.out)
    else:
        _emit(cfg.header() + format_table(reports), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _parse_q(text: str) -> list[str]:
    """``0.1,0.2`` or ``start:stop:step`` (inclusive), kept as decimal text."""
    if ":" in text:
        try:
            start, stop, step = (Fraction(x) for x in text.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad --q range {text!r}") from exc
        if step <= 0:
            raise UsageError("--q range step must be positive")
        out, x = [], start
        while x <= stop:
            out.append(oracle.fraction_to_decimal(x))
            x += step
        return out
    parts = [p.strip() for p in text.split(",")]
    for p in parts:
        try:
            Fraction(p)
        except ValueError as exc:
            raise UsageError(f"bad --q value {p!r}") from exc
    return parts


def cmd_bounds(args) -> int:
    if args.urn is None:
        raise UsageError("bounds needs --urn a,b")
    a, b = _parse_urn(args.urn)
    if a < 0 or b < 0 or a + b < 1 or not 1 <= args.n <= a + b:
        raise UsageError("need a, b >= 0, a + b >= 1 and 1 <= n <= a + b")
    args.q_list = _parse_q(args.q)
    cfg = _config(args, None)
    rows: list[ComparisonRow] = []
    for qs in args.q_list:
        q = float(Fraction(qs))
        if q < 0:
            raise UsageError("q must be non-negative")
        rows.append(compare_tails(a, b, args.n, q))
    ok = all(r.valid for r in rows)
    if args.format == "json":
        _emit(_dumps({"config": cfg.to_dict(), "passed": ok,
                      "rows": [asdict(r) for r in rows]}), args.out)
    else:
        lines = [",".join(ComparisonRow.CSV_COLUMNS)] + [",".join(r.csv_fields()) for r in rows]
        _emit(cfg.header() + "\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    pop, model = _population(args), _model(args)
    cfg = _config(args, model)
    try:
        joint, reports = oracle.exact_suite(pop, model, args.n)
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    ok = all(r.passed for r in reports)
    payload = joint.to_dict()
    payload["config"] = cfg.to_dict()
    payload["checks"] = [r.to_dict() for r in reports]
    payload["passed"] = ok
    _emit(_dumps(payload), args.out)
    return EXIT_OK if ok else EXIT_FAIL


# argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coupling-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_model=True, fmt="csv"):
        if with_model:
            p.add_argument("--model", choices=["replacement", "kfold", "surreplacement"],
                           default="replacement")
            p.add_argument("--k", type=int)
            p.add_argument("--d", type=int)
            p.add_argument("--values", help="comma-separated decimal values, e.g. 0,1,2.5")
        p.add_argument("--urn", help="two-colour urn 'a,b': a ones and b zeros")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--format", choices=["csv", "json"], default=fmt)
        p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo joint counts of (S_n, T_n)")
    common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="exact checks, or the Monte Carlo suite")
    common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="exact tails next to the Chernoff bound")
    common(p, with_model=False)
    p.add_argument("--q", required=True, help="list '0.1,0.2' or range 'start:stop:step'")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle", help="exact joint law as JSON")
    common(p, fmt="json")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    seed = getattr(args, "seed", None)
    if seed is not None and not 0 <= seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, InvalidArgument, InvalidPopulation) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (CouplingLabError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
