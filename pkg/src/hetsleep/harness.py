"""Experiment harness: random densities, admission control, benchmark schemes,
lambda0 sweeps and the exhaustive-vs-heuristic ratio table.

Everything here is deterministic in the seeds it is given; rows are sorted
before emission so parallel and serial runs give identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from hetsleep import defaults
from hetsleep import power_model as pm
from hetsleep.errors import ContractViolation, ParseError, ValidationError
from hetsleep.nonuniform import solve_nonuniform
from hetsleep.power_model import Evaluation, OperationMode
from hetsleep.scenario import Scenario, is_uniform, load_scenario
from hetsleep.uniform import solve_uniform
from hetsleep.validation import exhaustive_search

SCHEMES = ("alg", "always_on", "prob_on")
ADMISSION_TOL_W = 1e-6

SWEEP_COLUMNS = [
    "lambda0_per_m2", "seed", "sigma2", "scheme", "estimate", "p_het_w", "mbs_w",
    "u_pt_w", "sbs_w", "active_sbs", "feasible_before_admission", "admitted_fraction",
]
TABLE2_COLUMNS = ["lambda0_per_m2", "n_seeds", "sigma2", "mean_ratio", "min_ratio", "max_ratio"]
TABLE2_DETAIL_COLUMNS = ["lambda0_per_m2", "seed", "sigma2", "p_het_opt_w", "p_het_alg2_w",
                         "ratio", "admitted_fraction"]


@dataclass(frozen=True)
class SweepSpec:
    lambda0_grid: tuple[float, ...]
    seeds: tuple[int, ...] = (0,)
    sigma2: float = defaults.DEFAULT_SIGMA2
    schemes: tuple[str, ...] = SCHEMES
    p_active: float = 0.7
    density_ratio: float = defaults.DENSITY_RATIO
    prob_draws: int = 64
    scenario: str | None = None
    workers: int = 1
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        grid = tuple(float(v) for v in self.lambda0_grid)
        object.__setattr__(self, "lambda0_grid", grid)
        object.__setattr__(self, "seeds", tuple(int(v) for v in self.seeds))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not grid:
            raise ValidationError("lambda0_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("lambda0_grid must be strictly increasing")
        if not 0 <= self.p_active <= 1:
            raise ValidationError("p_active must lie in [0, 1]")
        if self.sigma2 < 0:
            raise ValidationError("sigma2 must be >= 0")
        if not self.seeds:
            raise ValidationError("seeds must not be empty")
        bad = set(self.schemes) - set(SCHEMES)
        if bad:
            raise ValidationError(f"unknown schemes {sorted(bad)}")


def load_sweep_spec(path: str | Path) -> SweepSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    known = {f for f in SweepSpec.__dataclass_fields__ if f != "extra"}
    kwargs = {k: v for k, v in doc.items() if k in known}
    if kwargs.get("scenario"):
        kwargs["scenario"] = str((path.parent / kwargs["scenario"]).resolve())
    if "lambda0_grid" not in kwargs:
        raise ValidationError(f"{path}: lambda0_grid is required")
    return SweepSpec(**kwargs, extra={k: v for k, v in doc.items() if k not in known})


# --- scenario generation ---------------------------------------------------


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def generate_scenario(base: Scenario, lambda0: float, sigma2: float, seed: int,
                      density_ratio: float = defaults.DENSITY_RATIO) -> Scenario:
    """Draw small-cell densities i.i.d. uniform on ratio*lambda0 +- sqrt(3 sigma2)."""
    centre = density_ratio * lambda0
    half = math.sqrt(3.0 * sigma2)
    if centre - half <= 0:
        raise ValidationError(
            f"density range lower bound {centre - half:.3g} is not positive "
            f"(lambda0={lambda0:g}, sigma2={sigma2:g})")
    lam = _rng(seed, 0).uniform(centre - half, centre + half, size=base.n_sbs)
    return base.with_densities(lambda0, [float(v) for v in lam])


def table2_template(seed: int) -> Scenario:
    """Random 20-SBS layout used by the ratio benchmark when no scenario is given."""
    pos = defaults.random_layout(defaults.TABLE2_M, defaults.R_MACRO, defaults.TABLE2_R_SMALL,
                                 _rng(seed, 2), min_dist=2 * defaults.TABLE2_R_SMALL)
    return defaults.reference_scenario(pos, r_small=defaults.TABLE2_R_SMALL)


# --- admission control -----------------------------------------------------


def scale_macro_densities(s: Scenario, mode: OperationMode, a: float) -> Scenario:
    lam = [v * a if t == 0 else v for v, t in zip(s.lambdas, mode.theta)]
    return s.with_densities(s.lambda0 * a, lam)


def admission_control(s: Scenario, mode: OperationMode) -> tuple[Scenario, float]:
    """Thin macro-served users so the MBS runs just at its transmit-power cap.

    Scaling every macro-served density by ``a`` scales the expected user count
    and the efficiency numerator alike, so only the traffic factor moves and
    P_t(a) is increasing in ``a``.  The returned scenario satisfies
    ``P_max - 1e-6 W <= P_t <= P_max``.
    """
    ev = pm.evaluate(s, mode)
    p_max = s.power.p_t_max
    if ev.p_t <= p_max:
        raise ContractViolation("admission control called on a feasible operating point")
    pref, q, z = pm.noise_prefactor(s), pm.rate_exponent(s), ev.efficiency_factor

    def p_t(a: float) -> float:
        return pref * math.expm1(min(q * a * ev.mu, 700.0)) * z

    lo, hi = 0.0, 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if p_t(mid) > p_max:
            hi = mid
        else:
            lo = mid
        if p_max - p_t(lo) <= ADMISSION_TOL_W * 0.5 or hi - lo < 1e-17:
            break
    a = lo
    scaled = scale_macro_densities(s, mode, a)
    while pm.evaluate(scaled, mode).p_t > p_max:
        a = math.nextafter(a, 0.0)
        scaled = scale_macro_densities(s, mode, a)
    return scaled, a


# --- schemes ---------------------------------------------------------------


def solve(s: Scenario, algorithm: str = "auto") -> tuple[OperationMode, Evaluation]:
    if algorithm not in ("auto", "uniform", "nonuniform"):
        raise ValidationError(f"unknown algorithm {algorithm!r}")
    if algorithm == "uniform" or (algorithm == "auto" and is_uniform(s)):
        sol = solve_uniform(s)
        return sol.mode, sol.eval
    cand = solve_nonuniform(s)
    return cand.mode, cand.eval


@dataclass(frozen=True)
class SchemeResult:
    mode: OperationMode | None
    eval: Evaluation
    feasible_before: bool
    admitted_fraction: float


def _run_mode(s: Scenario, mode: OperationMode) -> SchemeResult:
    ev = pm.evaluate(s, mode)
    if ev.feasible:
        return SchemeResult(mode, ev, True, 1.0)
    scaled, a = admission_control(s, mode)
    return SchemeResult(mode, pm.evaluate(scaled, mode), False, a)


def run_alg(s: Scenario, algorithm: str = "auto") -> SchemeResult:
    all_on = OperationMode.all_on(s.n_sbs)
    if pm.evaluate(s, all_on).feasible:
        mode, ev = solve(s, algorithm)
        return SchemeResult(mode, ev, True, 1.0)
    scaled, a = admission_control(s, all_on)
    mode, ev = solve(scaled, "auto" if algorithm == "uniform" else algorithm)
    return SchemeResult(mode, ev, False, a)


def sample_prob_mode(m: int, p_active: float, rng: np.random.Generator) -> OperationMode:
    return OperationMode(tuple(int(v) for v in (rng.random(m) < p_active)))


def _fmt(v: Any) -> Any:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def _row(lambda0: float, seed: int, sigma2: float, scheme: str, estimate: str, s: Scenario,
         p_t: float, n_active: float, feasible: bool, a: float) -> dict[str, Any]:
    pw = s.power
    sbs = s.n_sbs * pw.p_sbs_sleep + n_active * pw.delta_p
    mbs = pw.p_base_macro + pw.u_slope * p_t
    return {
        "lambda0_per_m2": lambda0, "seed": seed, "sigma2": sigma2, "scheme": scheme,
        "estimate": estimate, "p_het_w": mbs + sbs, "mbs_w": mbs, "u_pt_w": pw.u_slope * p_t,
        "sbs_w": sbs, "active_sbs": n_active, "feasible_before_admission": feasible,
        "admitted_fraction": a,
    }


def sweep_cell(base: Scenario, spec: SweepSpec, lambda0: float, seed: int) -> list[dict[str, Any]]:
    s = generate_scenario(base, lambda0, spec.sigma2, seed, spec.density_ratio)
    rows = []
    args = (lambda0, seed, spec.sigma2)
    if "alg" in spec.schemes:
        r = run_alg(s)
        rows.append(_row(*args, "alg", "exact", s, r.eval.p_t, float(r.mode.n_active),
                         r.feasible_before, r.admitted_fraction))
    if "always_on" in spec.schemes:
        r = _run_mode(s, OperationMode.all_on(s.n_sbs))
        rows.append(_row(*args, "always_on", "exact", s, r.eval.p_t, float(s.n_sbs),
                         r.feasible_before, r.admitted_fraction))
    if "prob_on" in spec.schemes:
        rng = _rng(seed, 1)
        draws = [_run_mode(s, sample_prob_mode(s.n_sbs, spec.p_active, rng))
                 for _ in range(max(1, spec.prob_draws))]
        first = draws[0]
        rows.append(_row(*args, "prob_on", "sampled", s, first.eval.p_t, float(first.mode.n_active),
                         first.feasible_before, first.admitted_fraction))
        # SBS term in closed form; MBS term averaged over activation draws
        rows.append(_row(*args, "prob_on", "expected", s,
                         float(np.mean([d.eval.p_t for d in draws])),
                         s.n_sbs * spec.p_active,
                         all(d.feasible_before for d in draws),
                         float(np.mean([d.admitted_fraction for d in draws]))))
    return rows


def _base_for(spec: SweepSpec) -> Scenario:
    if spec.scenario:
        return load_scenario(spec.scenario)
    return defaults.reference_scenario()


def _sweep_task(task: tuple[SweepSpec, float, int]) -> list[dict[str, Any]]:
    spec, lambda0, seed = task
    return sweep_cell(_base_for(spec), spec, lambda0, seed)


def _scheme_key(row: dict[str, Any]) -> tuple:
    return (row["lambda0_per_m2"], row["seed"], SCHEMES.index(row["scheme"]), row["estimate"])


def _map(fn, tasks: list, workers: int) -> list:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_sweep(spec: SweepSpec) -> list[dict[str, Any]]:
    tasks = [(spec, lam, seed) for lam in spec.lambda0_grid for seed in spec.seeds]
    rows = [r for chunk in _map(_sweep_task, tasks, spec.workers) for r in chunk]
    return sorted(rows, key=_scheme_key)


# --- exhaustive vs heuristic ratio ---------------------------------------


def _table2_task(task: tuple[SweepSpec, float, int]) -> dict[str, Any]:
    spec, lambda0, seed = task
    base = load_scenario(spec.scenario) if spec.scenario else table2_template(seed)
    s = generate_scenario(base, lambda0, spec.sigma2, seed, spec.density_ratio)
    a = 1.0
    all_on = OperationMode.all_on(s.n_sbs)
    if not pm.evaluate(s, all_on).feasible:
        s, a = admission_control(s, all_on)
    _, opt = exhaustive_search(s)
    _, alg = solve(s)
    return {"lambda0_per_m2": lambda0, "seed": seed, "sigma2": spec.sigma2,
            "p_het_opt_w": opt.p_het, "p_het_alg2_w": alg.p_het,
            "ratio": opt.p_het / alg.p_het, "admitted_fraction": a}


def table2_benchmark(spec: SweepSpec) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Per-lambda0 summary and per-seed detail of P_het(optimal) / P_het(heuristic)."""
    tasks = [(spec, lam, seed) for lam in spec.lambda0_grid for seed in spec.seeds]
    detail = sorted(_map(_table2_task, tasks, spec.workers),
                    key=lambda r: (r["lambda0_per_m2"], r["seed"]))
    summary = []
    for lam in spec.lambda0_grid:
        ratios = [r["ratio"] for r in detail if r["lambda0_per_m2"] == lam]
        summary.append({"lambda0_per_m2": lam, "n_seeds": len(ratios), "sigma2": spec.sigma2,
                        "mean_ratio": float(np.mean(ratios)), "min_ratio": float(np.min(ratios)),
                        "max_ratio": float(np.max(ratios))})
    return summary, detail


# --- output ----------------------------------------------------------------


def to_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in columns})
    return buf.getvalue()
