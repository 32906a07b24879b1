"""Polynomial-time SBS sleeping for heterogeneous user densities.

Problem shape: minimising total power over on/off modes is a knapsack-like
problem once the handed-over load ``L`` is fixed.  The heuristic here

1. fixes SBSs whose density is so low (high) that sleeping (staying on) is
   optimal whatever the others do,
2. orders the remaining SBSs by power-saving efficiency ``Q_m(L)`` (saving
   per handed-over user); the ordering only changes at pairwise crossing
   loads, so O(M^2) orderings cover the whole load range,
3. for every ordering, tries each prefix whose handed-over load falls in
   that ordering's load interval, and keeps the cheapest feasible mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from hetsleep import power_model as pm
from hetsleep.errors import DegenerateLoad, InfeasibleScenario
from hetsleep.power_model import Evaluation, OperationMode
from hetsleep.roots import bisect_increasing, bisect_vectorized
from hetsleep.scenario import Scenario
from hetsleep.uniform import f_helper, f_values

log = logging.getLogger(__name__)

PRESCAN_POINTS = 17
SWITCH_ATOL = 1e-9
SWITCH_MAX_ITER = 300


@dataclass(frozen=True)
class RegimeClassification:
    forced_on: tuple[int, ...]
    forced_off: tuple[int, ...]
    free: tuple[int, ...]
    lambda_th_off: tuple[float, ...] = field(default=(), compare=False)
    lambda_th_on: tuple[float, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class SwitchingPoint:
    pair: tuple[int, int]
    load_l: float


@dataclass(frozen=True)
class Candidate:
    mode: OperationMode
    eval: Evaluation
    list_id: str


# --- knapsack rewrite ------------------------------------------------------


def _check_load(s: Scenario, load: float) -> float:
    x = pm.base_load(s) + load
    if x == 0:
        raise DegenerateLoad("no macro-cell users")
    return x


def phat(s: Scenario, load: float) -> float:
    """MBS-side consumption term with load ``load`` handed over but A_0 weights only."""
    return f_helper(s, _check_load(s, load)) * pm.upsilon(s)


def delta_m(s: Scenario, m: int, load: float) -> float:
    """Net HetNet saving from putting SBS ``m`` to sleep at handed-over load ``load``."""
    f = f_helper(s, _check_load(s, load))
    return s.power.delta_p - f * float(pm.cell_weights(s)[m])


def power_saving_efficiency(s: Scenario, m: int, load: float) -> float:
    """Saving per handed-over user, ``delta_m / (lambda_m pi R_s^2)``."""
    return delta_m(s, m, load) / float(pm.cell_loads(s)[m])


def handed_over_load(s: Scenario, mode: OperationMode) -> float:
    return float(np.sum(pm.cell_loads(s)[np.asarray(mode.theta) == 0]))


# --- density regimes -------------------------------------------------------


def _off_threshold(s: Scenario, m: int, ups: float, loads: np.ndarray, weights: np.ndarray,
                   d_a: np.ndarray) -> float:
    area_s, dp = s.small_area, s.power.delta_p
    x_rest = pm.base_load(s) + float(loads.sum() - loads[m])
    w_rest = ups + float(weights.sum() - weights[m])
    f_rest = f_helper(s, x_rest)

    def g(lam: float) -> float:
        own = lam * area_s
        return (w_rest + own * d_a[m]) * (f_helper(s, x_rest + own) - f_rest) + f_rest * own * d_a[m] - dp

    return bisect_increasing(g)


def _on_threshold(s: Scenario, m: int, ups: float, d_a: np.ndarray) -> float:
    area_s, dp = s.small_area, s.power.delta_p
    x0 = pm.base_load(s)
    f0 = f_helper(s, x0)

    def g(lam: float) -> float:
        own = lam * area_s
        f1 = f_helper(s, x0 + own)
        return ups * (f1 - f0) + f1 * own * d_a[m] - dp

    return bisect_increasing(g)


def classify_regimes(s: Scenario) -> RegimeClassification:
    """Split SBSs into provably-off, provably-on and undecided sets.

    The off decision assumes no transmit-power cap; the on decision holds
    with or without it.
    """
    ups = pm.upsilon(s)
    loads, weights = pm.cell_loads(s), pm.cell_weights(s)
    d_a = pm.sbs_distances_array(s) ** s.channel.alpha
    th_off, th_on = [], []
    forced_on, forced_off, free = [], [], []
    for m, lam in enumerate(s.lambdas):
        lo = _off_threshold(s, m, ups, loads, weights, d_a)
        hi = _on_threshold(s, m, ups, d_a)
        th_off.append(lo)
        th_on.append(hi)
        is_on, is_off = lam > hi, lam < lo
        if is_on and not is_off:
            forced_on.append(m)
        elif is_off and not is_on:
            forced_off.append(m)
        else:
            free.append(m)
    return RegimeClassification(tuple(forced_on), tuple(forced_off), tuple(free),
                                tuple(th_off), tuple(th_on))


# --- switching points ------------------------------------------------------


def _q_matrix(s: Scenario, idx: np.ndarray, loads_l: np.ndarray) -> np.ndarray:
    """Q_m(L) for SBSs ``idx`` (rows) at total handed-over loads ``loads_l`` (cols)."""
    ell = pm.cell_loads(s)[idx]
    d_a = pm.sbs_distances_array(s)[idx] ** s.channel.alpha
    f = f_values(s, pm.base_load(s) + np.asarray(loads_l))
    return s.power.delta_p / ell[:, None] - d_a[:, None] * f[None, :]


def switching_points(s: Scenario, free: tuple[int, ...] | None = None,
                     load_offset: float = 0.0) -> list[SwitchingPoint]:
    """Loads where two SBSs swap efficiency order, sorted ascending.

    ``free`` restricts the pairs (default: all SBSs); ``load_offset`` is the
    load already handed over by SBSs fixed asleep, so candidate loads span
    ``[load_offset, load_offset + sum of free loads]``.
    """
    if free is None:
        free = tuple(range(s.n_sbs))
    idx = np.asarray(free, dtype=int)
    if idx.size < 2:
        return []
    ell = pm.cell_loads(s)[idx]
    lo, hi = load_offset, load_offset + float(ell.sum())
    iu, ju = np.triu_indices(idx.size, k=1)
    a_const = s.power.delta_p * (1.0 / ell[iu] - 1.0 / ell[ju])
    d_a = pm.sbs_distances_array(s)[idx] ** s.channel.alpha
    b_coef = d_a[iu] - d_a[ju]
    base = pm.base_load(s)

    def diff(load: np.ndarray, sel: np.ndarray) -> np.ndarray:
        return a_const[sel] - b_coef[sel] * f_values(s, base + load)

    grid = np.linspace(lo, hi, PRESCAN_POINTS)
    vals = a_const[:, None] - b_coef[:, None] * f_values(s, base + grid)[None, :]
    sgn = np.sign(vals)
    flips = (sgn[:, :-1] * sgn[:, 1:]) < 0
    n_flips = flips.sum(axis=1)
    if np.any(n_flips > 1):
        bad = [(int(idx[iu[k]]), int(idx[ju[k]])) for k in np.flatnonzero(n_flips > 1)]
        log.warning("pairs with more than one efficiency crossing: %s", bad)
    pair_k, seg = np.nonzero(flips)
    if pair_k.size == 0:
        return []
    a, b = grid[seg], grid[seg + 1]
    roots = bisect_vectorized(lambda x: diff(x, pair_k), a, b,
                              max_iter=SWITCH_MAX_ITER, atol=SWITCH_ATOL)
    pts = [SwitchingPoint((int(idx[iu[k]]), int(idx[ju[k]])), float(min(max(r, lo), hi)))
           for k, r in zip(pair_k, roots)]
    pts.sort(key=lambda p: (p.load_l, p.pair))
    return pts


# --- main solver -----------------------------------------------------------


def _mode_from(s: Scenario, off: list[int]) -> OperationMode:
    return OperationMode.from_off_set(s.n_sbs, off)


def enumerate_candidates(s: Scenario, regimes: RegimeClassification) -> list[Candidate]:
    """All feasible candidate modes visited by the power-saving-list sweep."""
    loads, weights = pm.cell_loads(s), pm.cell_weights(s)
    pw = s.power
    forced_off = list(regimes.forced_off)
    free = list(regimes.free)
    l_off = float(loads[forced_off].sum()) if forced_off else 0.0
    w_off = float(weights[forced_off].sum()) if forced_off else 0.0
    base, ups = pm.base_load(s), pm.upsilon(s)

    out: list[Candidate] = []
    seen: set[frozenset[int]] = set()

    def add(off: list[int], list_id: str) -> None:
        key = frozenset(off)
        if key in seen:
            return
        seen.add(key)
        mode = _mode_from(s, off)
        ev = pm.evaluate(s, mode)
        if ev.feasible:
            out.append(Candidate(mode, ev, list_id))

    add([], "all_on")
    add(forced_off, "forced_only")
    if not free:
        return out

    pts = switching_points(s, tuple(free), l_off)
    hi = l_off + float(loads[free].sum())
    bounds = [l_off] + [p.load_l for p in pts] + [hi]

    q0 = _q_matrix(s, np.asarray(free), np.asarray([l_off]))[:, 0]
    order = [free[i] for i in sorted(range(len(free)), key=lambda i: (-q0[i], free[i]))]
    pos = {m: i for i, m in enumerate(order)}
    p_max = pw.p_t_max

    for k in range(len(bounds) - 1):
        a, b = bounds[k], bounds[k + 1]
        arr = np.asarray(order)
        cum_l = l_off + np.cumsum(loads[arr])
        cum_w = w_off + np.cumsum(weights[arr])
        sel = np.flatnonzero((cum_l >= a) & (cum_l <= b))
        if sel.size:
            pt = f_values(s, base + cum_l[sel]) * (ups + cum_w[sel]) / pw.u_slope
            for j, p_t in zip(sel, pt):
                if p_t <= p_max:
                    add(forced_off + order[: j + 1], f"list{k}:prefix{j + 1}")
        if k < len(pts):
            m, n = pts[k].pair
            i, j = pos[m], pos[n]
            order[i], order[j] = n, m
            pos[m], pos[n] = j, i
    return out


def solve_nonuniform(s: Scenario) -> Candidate:
    all_on = pm.evaluate(s, OperationMode.all_on(s.n_sbs))
    if not all_on.feasible:
        raise InfeasibleScenario(
            f"all-on transmit power {all_on.p_t:.6g} W exceeds cap {s.power.p_t_max:.6g} W")
    regimes = classify_regimes(s)
    forced_only = _mode_from(s, list(regimes.forced_off))
    if regimes.forced_off and not pm.evaluate(s, forced_only).feasible:
        # low-density rule ignores the cap; release those SBSs to the search
        regimes = RegimeClassification(
            regimes.forced_on, (), tuple(sorted(regimes.free + regimes.forced_off)),
            regimes.lambda_th_off, regimes.lambda_th_on)
    cands = enumerate_candidates(s, regimes)
    best = cands[0]
    for c in cands[1:]:
        if c.eval.p_het < best.eval.p_het:
            best = c
    return best
