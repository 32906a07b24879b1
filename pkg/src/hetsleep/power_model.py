"""Analytic MBS transmit power and total HetNet power for an SBS on/off mode.

The MBS transmit power factorises into a traffic factor ``T`` (exponential
in the expected macro-user count) and an efficiency factor ``Z`` (average
per-user path-loss compensation).  Small-cell path-loss integrals use the
centre-point shortcut ``int_{A_m} g dS ~= pi R_s^2 d_m^alpha / r0^alpha``;
the exact integral lives in :mod:`hetsleep.validation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hetsleep.errors import DegenerateLoad, ValidationError
from hetsleep.scenario import Scenario, distance_order, sbs_distances

LN2 = math.log(2.0)


@dataclass(frozen=True)
class OperationMode:
    """Binary on/off vector; ``theta[m] == 1`` means SBS m is active."""

    theta: tuple[int, ...]

    def __post_init__(self) -> None:
        theta = tuple(int(t) for t in self.theta)
        if any(t not in (0, 1) for t in theta):
            raise ValidationError("operation mode entries must be 0 or 1")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def all_on(cls, m: int) -> "OperationMode":
        return cls((1,) * m)

    @classmethod
    def all_off(cls, m: int) -> "OperationMode":
        return cls((0,) * m)

    @classmethod
    def from_off_set(cls, m: int, off: Sequence[int]) -> "OperationMode":
        theta = [1] * m
        for i in off:
            theta[i] = 0
        return cls(tuple(theta))

    @classmethod
    def from_bits(cls, bits: str) -> "OperationMode":
        return cls(tuple(int(c) for c in bits.strip()))

    def bits(self) -> str:
        return "".join(str(t) for t in self.theta)

    @property
    def n_active(self) -> int:
        return sum(self.theta)

    @property
    def off(self) -> list[int]:
        return [m for m, t in enumerate(self.theta) if t == 0]

    def __len__(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class Evaluation:
    p_t: float
    traffic_factor: float
    efficiency_factor: float
    p_het: float
    feasible: bool
    mu: float
    sbs_power: float

    @property
    def mbs_power(self) -> float:
        """Total MBS consumption (base level plus load-dependent part)."""
        return self.p_het - self.sbs_power


# --- shared constants ------------------------------------------------------


def noise_prefactor(s: Scenario) -> float:
    """Gamma N0 W / (-D ln(1-eps)), in W."""
    ch, q = s.channel, s.qos
    return ch.gamma_cap * ch.n0 * q.bandwidth_w / (-ch.d_ref_loss * math.log1p(-q.epsilon))


def rate_exponent(s: Scenario) -> float:
    """2^(b/W) - 1."""
    return math.expm1(s.qos.rate_b / s.qos.bandwidth_w * LN2)


def macro_disc_integral(s: Scenario) -> float:
    """(2 pi / (alpha+2)) (R0^(alpha+2) + alpha r0^(alpha+2) / 2).

    Equals r0^alpha times the integral of g(r) over the macro disc.
    """
    a, r0 = s.channel.alpha, s.channel.r0
    return 2.0 * math.pi / (a + 2.0) * (s.r_macro ** (a + 2.0) + a * r0 ** (a + 2.0) / 2.0)


def cell_loads(s: Scenario) -> np.ndarray:
    """Expected users per small cell, lambda_m pi R_s^2."""
    return np.asarray(s.lambdas) * s.small_area


def sbs_distances_array(s: Scenario) -> np.ndarray:
    return np.asarray(sbs_distances(s), dtype=float)


def cell_weights(s: Scenario) -> np.ndarray:
    """lambda_m pi R_s^2 d_m^alpha (per-cell path-loss-weighted load)."""
    return cell_loads(s) * sbs_distances_array(s) ** s.channel.alpha


def base_load(s: Scenario) -> float:
    """Expected users in A_0 (never offloadable)."""
    return s.lambda0 * s.area_a0


def upsilon(s: Scenario) -> float:
    """Path-loss-weighted A_0 load: lambda0 (disc integral - sum pi R_s^2 d^alpha)."""
    d = sbs_distances_array(s)
    return s.lambda0 * (macro_disc_integral(s) - s.small_area * float(np.sum(d ** s.channel.alpha)))


def _theta(s: Scenario, mode: OperationMode) -> np.ndarray:
    if len(mode) != s.n_sbs:
        raise ValidationError(f"mode has {len(mode)} entries, scenario has {s.n_sbs} SBSs")
    return np.asarray(mode.theta, dtype=bool)


def macro_mu(s: Scenario, mode: OperationMode) -> float:
    """Expected number of users served by the MBS."""
    off = ~_theta(s, mode)
    return base_load(s) + float(np.sum(cell_loads(s)[off]))


# --- per-user and aggregate powers -----------------------------------------


def per_user_tx_power(s: Scenario, r_k: float, k_users: int) -> float:
    """MBS power that keeps one of ``k_users`` users at distance ``r_k`` in QoS.

    Raises OverflowError when 2^(K b / W) is not representable.
    """
    if k_users < 1:
        raise ValueError("K must be >= 1")
    if r_k < 0:
        raise ValueError("r_k must be >= 0")
    growth = math.expm1(k_users * s.qos.rate_b * LN2 / s.qos.bandwidth_w)
    path = max(1.0, (r_k / s.channel.r0) ** s.channel.alpha)
    return noise_prefactor(s) * growth / k_users * path


def _expm1_or_inf(x: float) -> float:
    try:
        return math.expm1(x)
    except OverflowError:
        return math.inf


def traffic_factor(s: Scenario, mode: OperationMode) -> float:
    return noise_prefactor(s) * _expm1_or_inf(rate_exponent(s) * macro_mu(s, mode))


def efficiency_factor(s: Scenario, mode: OperationMode) -> float:
    mu = macro_mu(s, mode)
    if mu == 0:
        raise DegenerateLoad("no macro-cell users: efficiency factor is 0/0")
    off = ~_theta(s, mode)
    num = upsilon(s) + float(np.sum(cell_weights(s)[off]))
    return num / (s.channel.r0 ** s.channel.alpha * mu)


def traffic_factor_uniform(s: Scenario, mode: OperationMode) -> float:
    """Traffic factor written for identical densities (uses lambda0 only)."""
    h = mode.n_active
    x = s.lambda0 * math.pi * (s.r_macro**2 - h * s.r_small**2)
    return noise_prefactor(s) * _expm1_or_inf(rate_exponent(s) * x)


def efficiency_factor_uniform(s: Scenario, mode: OperationMode) -> float:
    """Efficiency factor written for identical densities (density cancels)."""
    th = _theta(s, mode)
    d = sbs_distances_array(s)
    a = s.channel.alpha
    num = macro_disc_integral(s) - s.small_area * float(np.sum(d[th] ** a))
    den = s.channel.r0**a * math.pi * (s.r_macro**2 - mode.n_active * s.r_small**2)
    return num / den


def hetnet_power(s: Scenario, p_t: float, n_active: int) -> float:
    pw = s.power
    return pw.p_base_macro + pw.u_slope * p_t + s.n_sbs * pw.p_sbs_sleep + n_active * pw.delta_p


def evaluate(s: Scenario, mode: OperationMode) -> Evaluation:
    mu = macro_mu(s, mode)
    t = traffic_factor(s, mode)
    if mu == 0:
        z, p_t = 0.0, 0.0
    else:
        z = efficiency_factor(s, mode)
        p_t = t * z
    pw = s.power
    sbs = s.n_sbs * pw.p_sbs_sleep + mode.n_active * pw.delta_p
    return Evaluation(
        p_t=p_t,
        traffic_factor=t,
        efficiency_factor=z,
        p_het=hetnet_power(s, p_t, mode.n_active),
        feasible=p_t <= pw.p_t_max,
        mu=mu,
        sbs_power=sbs,
    )


def prefix_off_mode(s: Scenario, order: Sequence[int], k: int) -> OperationMode:
    """Mode with the first ``k`` SBSs of ``order`` asleep and the rest active."""
    return OperationMode.from_off_set(s.n_sbs, order[:k])


def delta_p_macro(s: Scenario, m: int) -> float:
    """Extra MBS consumption from turning off the m-th closest SBS (1-based).

    SBSs closer than the m-th are already asleep, farther ones are active.
    """
    if not 1 <= m <= s.n_sbs:
        raise ValueError(f"m must lie in 1..{s.n_sbs}")
    order = distance_order(s)
    after = evaluate(s, prefix_off_mode(s, order, m)).p_t
    before = evaluate(s, prefix_off_mode(s, order, m - 1)).p_t
    return s.power.u_slope * (after - before)
