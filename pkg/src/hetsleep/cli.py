"""``hetsleep`` command-line front end.

Exit codes: 0 success, 2 bad input, 3 infeasible without admission control,
4 instance too large for exhaustive search.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Any, Sequence

from hetsleep import harness
from hetsleep import power_model as pm
from hetsleep.errors import ContractViolation, InfeasibleScenario, ParseError, TooLarge, ValidationError
from hetsleep.nonuniform import classify_regimes
from hetsleep.power_model import Evaluation, OperationMode
from hetsleep.scenario import Scenario, is_uniform, load_scenario
from hetsleep.uniform import threshold_lambda_off, threshold_lambda_on
from hetsleep.validation import exhaustive_search, monte_carlo_validate

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_TOO_LARGE = 0, 2, 3, 4

SOLVE_COLUMNS = ["algorithm", "mode", "active_sbs", "p_t_w", "p_het_w", "mbs_w", "u_pt_w",
                 "sbs_w", "feasible_before_admission", "admitted_fraction"]
THRESHOLD_COLUMNS = ["sbs", "lambda_per_m2", "lambda_th_off", "lambda_th_on", "regime"]
VALIDATE_COLUMNS = ["p_t_analytic", "p_t_empirical_mean", "std_error", "z_score", "n_draws",
                    "outage_rate", "approx_error_z", "seed"]


def _solution_row(s: Scenario, algorithm: str, mode: OperationMode, ev: Evaluation,
                  feasible: bool, a: float) -> dict[str, Any]:
    pw = s.power
    return {"algorithm": algorithm, "mode": mode.bits(), "active_sbs": mode.n_active,
            "p_t_w": ev.p_t, "p_het_w": ev.p_het, "mbs_w": ev.mbs_power,
            "u_pt_w": pw.u_slope * ev.p_t, "sbs_w": ev.sbs_power,
            "feasible_before_admission": feasible, "admitted_fraction": a}


def _emit(args: argparse.Namespace, rows: list[dict[str, Any]], columns: Sequence[str],
          meta: dict[str, Any] | None = None) -> None:
    if args.format == "json":
        doc: dict[str, Any] = {"rows": [{k: r[k] for k in columns} for r in rows]}
        if meta:
            doc.update(meta)
        text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    else:
        text = harness.to_csv(rows, columns)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario)
    all_on = pm.evaluate(s, OperationMode.all_on(s.n_sbs))
    if not all_on.feasible and not args.admission:
        raise InfeasibleScenario(
            f"all-on transmit power {all_on.p_t:.6g} W exceeds cap {s.power.p_t_max:.6g} W; "
            "rerun with --admission")
    res = harness.run_alg(s, args.algorithm)
    scaled = s
    if not res.feasible_before:
        scaled = harness.scale_macro_densities(s, OperationMode.all_on(s.n_sbs),
                                               res.admitted_fraction)
    algo = args.algorithm
    if algo == "auto":
        algo = "uniform" if is_uniform(scaled) else "nonuniform"
    _emit(args, [_solution_row(s, algo, res.mode, res.eval, res.feasible_before,
                               res.admitted_fraction)], SOLVE_COLUMNS)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario)
    mode, ev = exhaustive_search(s)
    _emit(args, [_solution_row(s, "exhaustive", mode, ev, True, 1.0)], SOLVE_COLUMNS)
    return EXIT_OK


def cmd_thresholds(args: argparse.Namespace) -> int:
    """Uncapped density thresholds; reported next to, never instead of, the solution."""
    s = load_scenario(args.scenario)
    uncapped = s.with_power(p_t_max=math.inf)
    rows = []
    if is_uniform(s):
        off, on = threshold_lambda_off(uncapped), threshold_lambda_on(uncapped)
        lam = s.lambdas[0]
        regime = "off" if lam < off else "on" if lam > on else "mixed"
        rows.append({"sbs": "all", "lambda_per_m2": lam, "lambda_th_off": off,
                     "lambda_th_on": on, "regime": regime})
    reg = classify_regimes(uncapped)
    for m, lam in enumerate(s.lambdas):
        regime = ("forced_on" if m in reg.forced_on else
                  "forced_off" if m in reg.forced_off else "free")
        rows.append({"sbs": m, "lambda_per_m2": lam, "lambda_th_off": reg.lambda_th_off[m],
                     "lambda_th_on": reg.lambda_th_on[m], "regime": regime})
    _emit(args, rows, THRESHOLD_COLUMNS, {"p_t_max_assumed": "inf"})
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario)
    mode = OperationMode.from_bits(args.mode)
    if len(mode) != s.n_sbs:
        raise ValidationError(f"mode has {len(mode)} bits but scenario has {s.n_sbs} SBSs")
    rep = monte_carlo_validate(s, mode, args.draws, args.seed)
    if args.format == "csv":
        row = dict(rep.to_dict(), z_score=rep.z_score)
        _emit(args, [row], VALIDATE_COLUMNS)
    else:
        text = json.dumps(dict(rep.to_dict(), z_score=rep.z_score), indent=2) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def _spec(args: argparse.Namespace) -> harness.SweepSpec:
    spec = harness.load_sweep_spec(args.spec)
    if args.workers is not None:
        spec = harness.SweepSpec(**{**spec.__dict__, "workers": args.workers})
    return spec


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec(args)
    _emit(args, harness.run_sweep(spec), harness.SWEEP_COLUMNS, {"sigma2": spec.sigma2})
    return EXIT_OK


def cmd_table2(args: argparse.Namespace) -> int:
    spec = _spec(args)
    summary, detail = harness.table2_benchmark(spec)
    if args.detail:
        _emit(args, detail, harness.TABLE2_DETAIL_COLUMNS, {"sigma2": spec.sigma2})
    else:
        _emit(args, summary, harness.TABLE2_COLUMNS, {"sigma2": spec.sigma2})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetsleep", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, default_format: str = "csv") -> None:
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=["csv", "json"], default=default_format)

    sp = sub.add_parser("solve", help="optimal on/off mode for a scenario")
    sp.add_argument("scenario")
    sp.add_argument("--algorithm", choices=["auto", "uniform", "nonuniform"], default="auto")
    sp.add_argument("--admission", action="store_true",
                    help="thin macro-served users when all-on exceeds the transmit cap")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exhaustive search (M <= 24)")
    sp.add_argument("scenario")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("thresholds", help="uncapped density thresholds")
    sp.add_argument("scenario")
    common(sp)
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("validate", help="Monte-Carlo check of the transmit-power model")
    sp.add_argument("scenario")
    sp.add_argument("--mode", required=True, help="bit string, 1 = active, first SBS first")
    sp.add_argument("--draws", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, default_format="json")
    sp.set_defaults(func=cmd_validate)

    for name, fn, help_ in (("sweep", cmd_sweep, "lambda0 sweep over schemes"),
                            ("table2", cmd_table2, "exhaustive vs heuristic ratio table")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("spec")
        sp.add_argument("--workers", type=int, default=None)
        if name == "table2":
            sp.add_argument("--detail", action="store_true", help="per-seed rows")
        common(sp)
        sp.set_defaults(func=fn)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError, ContractViolation, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleScenario as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TooLarge as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE


if __name__ == "__main__":
    sys.exit(main())
