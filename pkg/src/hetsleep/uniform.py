"""Optimal SBS sleeping for identical user densities, and the density thresholds.

With equal densities the closest SBSs are always the first ones worth
switching off, so the optimum is a distance prefix.  The search walks that
prefix and stops at the first SBS whose extra MBS consumption reaches the
SBS saving, or whose deactivation would break the transmit-power cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hetsleep import power_model as pm
from hetsleep.errors import DegenerateLoad, InfeasibleScenario, ValidationError
from hetsleep.power_model import Evaluation, OperationMode
from hetsleep.roots import bisect_increasing
from hetsleep.scenario import Scenario, distance_order, is_uniform


@dataclass(frozen=True)
class UniformSolution:
    mode: OperationMode
    m_th: int
    m_th1: int
    m_th2: int
    order: tuple[int, ...]
    eval: Evaluation
    delta_pm: tuple[float, ...]


def f_prefactor(s: Scenario) -> float:
    """u Gamma N0 W / (-D ln(1-eps) r0^alpha)."""
    return s.power.u_slope * pm.noise_prefactor(s) / s.channel.r0**s.channel.alpha


def f_limit(s: Scenario) -> float:
    """Value of :func:`f_helper` as the user count tends to zero."""
    return f_prefactor(s) * pm.rate_exponent(s)


def f_helper(s: Scenario, x: float) -> float:
    """MBS consumption per unit path-loss-weighted load at ``x`` expected users.

    Increasing in ``x``; ``x == 0`` raises :class:`DegenerateLoad` (use
    :func:`f_limit`).
    """
    if x == 0:
        raise DegenerateLoad("f(x) undefined at x = 0; use f_limit")
    if x < 0:
        raise ValueError("x must be > 0")
    try:
        growth = math.expm1(pm.rate_exponent(s) * x)
    except OverflowError:
        return math.inf
    return f_prefactor(s) * growth / x


def f_values(s: Scenario, x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`f_helper` (x > 0)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return f_prefactor(s) * np.expm1(pm.rate_exponent(s) * x) / x


def prefix_pt(s: Scenario, order: list[int]) -> np.ndarray:
    """MBS transmit power with the first k SBSs of ``order`` off, k = 0..M."""
    loads = pm.cell_loads(s)[order]
    weights = pm.cell_weights(s)[order]
    x = pm.base_load(s) + np.concatenate([[0.0], np.cumsum(loads)])
    num = pm.upsilon(s) + np.concatenate([[0.0], np.cumsum(weights)])
    return f_values(s, x) * num / s.power.u_slope


def solve_uniform(s: Scenario, check_uniform: bool = True) -> UniformSolution:
    if check_uniform and not is_uniform(s):
        raise ValidationError("solve_uniform needs identical user densities")
    order = distance_order(s)
    pt = prefix_pt(s, order)
    p_max = s.power.p_t_max
    if pt[0] > p_max:
        raise InfeasibleScenario(
            f"all-on transmit power {pt[0]:.6g} W exceeds cap {p_max:.6g} W")
    m = s.n_sbs
    dpm = s.power.u_slope * np.diff(pt)
    stop1 = np.flatnonzero(dpm >= s.power.delta_p)
    m_th1 = int(stop1[0]) if stop1.size else m
    stop2 = np.flatnonzero(pt[1:] > p_max)
    m_th2 = int(stop2[0]) if stop2.size else m
    m_th = min(m_th1, m_th2)
    mode = pm.prefix_off_mode(s, order, m_th)
    return UniformSolution(
        mode=mode,
        m_th=m_th,
        m_th1=m_th1,
        m_th2=m_th2,
        order=tuple(order),
        eval=pm.evaluate(s, mode),
        delta_pm=tuple(float(v) for v in dpm),
    )


# --- density thresholds (no transmit-power cap) ---------------------------


def _off_residual(s: Scenario):
    d = pm.sbs_distances_array(s)
    a = s.channel.alpha
    k0 = pm.macro_disc_integral(s)
    area0, area_s = math.pi * s.r_macro**2, s.small_area
    d_far = float(d.max()) ** a
    dp = s.power.delta_p

    def g(lam: float) -> float:
        f_full = f_helper(s, lam * area0)
        f_one = f_helper(s, lam * (area0 - area_s))
        return lam * k0 * (f_full - f_one) + lam * area_s * d_far * f_one - dp

    return g


def _on_residual(s: Scenario):
    d = np.sort(pm.sbs_distances_array(s))
    a = s.channel.alpha
    k0 = pm.macro_disc_integral(s)
    m = s.n_sbs
    area0, area_s = math.pi * s.r_macro**2, s.small_area
    rest = float(np.sum(d[1:] ** a))
    d_near = float(d[0]) ** a
    dp = s.power.delta_p

    def g(lam: float) -> float:
        f_one = f_helper(s, lam * (area0 - (m - 1) * area_s))
        f_all = f_helper(s, lam * (area0 - m * area_s))
        return (lam * k0 - lam * area_s * rest) * (f_one - f_all) + f_all * lam * area_s * d_near - dp

    return g


def threshold_lambda_off(s: Scenario) -> float:
    """Macro density below which every SBS sleeps when the power cap is absent."""
    if s.n_sbs < 1:
        raise ValidationError("thresholds need at least one SBS")
    return bisect_increasing(_off_residual(s))


def threshold_lambda_on(s: Scenario) -> float:
    """Macro density above which every SBS stays on when the power cap is absent."""
    if s.n_sbs < 1:
        raise ValidationError("thresholds need at least one SBS")
    return bisect_increasing(_on_residual(s))
