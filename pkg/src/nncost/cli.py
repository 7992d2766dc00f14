"""Command-line front end: estimate, validate, search, sweep.

Exit codes: 0 success, 1 internal error, 2 input/parse/schema error,
3 formula-vs-measurement mismatch in validate, 4 infeasible search space.
Reports go to standard output (or the -o path, written atomically);
diagnostics go to standard error. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import bayesopt, costmodel, interp, search
from .arch import BitwidthConfig, parse_spec
from .errors import (InfeasibleSpace, NNCostError, SchemaError,
                     SpecSyntaxError, ValidationError)


def _emit(text: str, path: str | None):
    """Write the report to stdout or atomically to a file."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nncost-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc


def _load_json(path: str) -> dict:
    text = _read_file(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(f"{path}: malformed JSON: {exc}") from exc


def _bits(args) -> BitwidthConfig:
    return BitwidthConfig(b_w=args.bw, b_i=args.bi, b_a=args.ba)


def cmd_estimate(args) -> int:
    net = parse_spec(_read_file(args.spec))
    bits = _bits(args)
    scheme = search.parse_scheme(args.scheme, bits.b_w)
    report = costmodel.cost_report(net, bits, scheme)
    if args.format == "json":
        _emit(report.to_json_text() + "\n", args.output)
    else:
        _emit(report.to_csv(), args.output)
    return 0


def cmd_validate(args) -> int:
    net = parse_spec(_read_file(args.spec))
    bits = BitwidthConfig()
    scheme = search.parse_scheme("uniform", bits.b_w)
    mode = "float" if args.mode == "float" else interp.FixedPoint(bits, scheme)
    record = interp.audit(net, bits, scheme, seed=args.seed, mode=mode,
                          esn_feedback=args.esn_feedback)
    _emit(record.to_json_text() + "\n", args.output)
    if record.max_abs_delta == 0:
        return 0
    print("layer  type     analytic_rm  measured  delta", file=sys.stderr)
    for entry in record.per_layer:
        measured = entry.mults + entry.shifts
        print(f"{entry.layer_index:>5}  {entry.layer_type:<8} "
              f"{entry.analytic_rm:>11}  {measured:>8}  {entry.delta:>5}",
              file=sys.stderr)
    return 3


def _space_and_task(args) -> tuple[search.SearchSpace, search.Task]:
    space = search.SearchSpace.from_json(_load_json(args.space))
    task = search.task_from_json(_load_json(args.task))
    return space, task


def cmd_search(args) -> int:
    space, task = _space_and_task(args)
    if args.budget_nabs is not None:
        space = search.SearchSpace(
            dimensions=space.dimensions, template=space.template,
            metric="nabs", budget=args.budget_nabs, bits=space.bits,
            scheme=space.scheme)
    objective = search.make_objective(space, task, k=args.folds,
                                      eval_seed=args.seed)
    # space.feasible also screens out structurally invalid candidates
    # (e.g. zero-width convolutions), with or without a budget.
    best, history = bayesopt.bo_optimize(
        objective, space, max_iters=args.iters, n_init=args.init,
        seed=args.seed, constraint=space.feasible)
    _emit(search.search_history_csv(space, history), args.output)
    params = space.decode(best.theta)
    print(f"best score {best.score!r} at {json.dumps(params, sort_keys=True)}"
          f" cost {json.dumps(best.cost, sort_keys=True)}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    space, task = _space_and_task(args)
    try:
        budgets = [int(b) for b in args.budgets.split(",") if b]
    except ValueError as exc:
        raise SpecSyntaxError(f"bad --budgets value: {exc}") from exc
    if not budgets:
        raise SpecSyntaxError("--budgets must list at least one integer")
    if args.metric is not None:
        space = search.SearchSpace(
            dimensions=space.dimensions, template=space.template,
            metric=args.metric, budget=space.budget, bits=space.bits,
            scheme=space.scheme)
    result = search.complexity_sweep(space, task, budgets, iters=args.iters,
                                     seed=args.seed, n_init=args.init,
                                     k=args.folds)
    _emit(result.to_csv(), args.output)
    best = max(result.points, key=lambda p: p.best_score)
    print(f"best over sweep: score {best.best_score!r} at budget "
          f"{best.budget} ({json.dumps(best.best_params, sort_keys=True)})",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nncost",
        description="Inference-cost estimation, interpreter audits and "
                    "complexity-budgeted architecture search.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="analytic RM/BOP/NABS report")
    est.add_argument("spec")
    est.add_argument("--bw", type=int, default=8)
    est.add_argument("--bi", type=int, default=8)
    est.add_argument("--ba", type=int, default=8)
    est.add_argument("--scheme", default="uniform")
    est.add_argument("--format", choices=("csv", "json"), default="csv")
    est.add_argument("-o", "--output", default=None)
    est.set_defaults(func=cmd_estimate)

    val = sub.add_parser("validate",
                         help="audit analytic counts against execution")
    val.add_argument("spec")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--mode", choices=("float", "fixed"), default="float")
    val.add_argument("--esn-feedback", action="store_true")
    val.add_argument("-o", "--output", default=None)
    val.set_defaults(func=cmd_validate)

    srch = sub.add_parser("search", help="budgeted architecture search")
    srch.add_argument("space")
    srch.add_argument("task")
    srch.add_argument("--iters", type=int, default=20)
    srch.add_argument("--init", type=int, default=5)
    srch.add_argument("--seed", type=int, default=0)
    srch.add_argument("--budget-nabs", type=int, default=None)
    srch.add_argument("--folds", type=int, default=3)
    srch.add_argument("-o", "--output", default=None)
    srch.set_defaults(func=cmd_search)

    swp = sub.add_parser("sweep", help="score-vs-budget frontier")
    swp.add_argument("space")
    swp.add_argument("task")
    swp.add_argument("--budgets", required=True,
                     help="comma-separated ascending budgets")
    swp.add_argument("--iters", type=int, default=10)
    swp.add_argument("--init", type=int, default=5)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--metric", choices=("rm", "bop", "nabs"), default=None)
    swp.add_argument("--folds", type=int, default=3)
    swp.add_argument("-o", "--output", default=None)
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, SpecSyntaxError, SchemaError, ValidationError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSpace as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NNCostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
