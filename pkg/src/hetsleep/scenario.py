"""Problem instance: geometry, user densities, channel, QoS and power parameters.

All quantities are stored in linear SI units. Decibel values only exist in
the JSON files read by :func:`load_scenario` and written by
:func:`save_scenario`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from hetsleep.errors import ParseError, ValidationError

DEFAULT_UNIFORM_RTOL = 1e-9


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    """Path loss, noise and coding-loss parameters of the macro link.

    ``d_ref_loss`` is the linear reference gain (e.g. -35 dB -> 3.16e-4) and
    ``n0`` the noise density in W/Hz.
    """

    d_ref_loss: float
    r0: float
    alpha: float
    n0: float
    gamma_cap: float = 1.0

    def __post_init__(self) -> None:
        _require(self.r0 > 0, "channel.r0 must be > 0")
        _require(self.alpha > 0, "channel.alpha must be > 0")
        _require(self.gamma_cap >= 1, "channel.gamma must be >= 1")
        _require(self.d_ref_loss > 0, "channel.d_ref_loss must be > 0")
        _require(self.n0 > 0, "channel.n0 must be > 0")


@dataclass(frozen=True)
class QosParams:
    rate_b: float
    epsilon: float
    bandwidth_w: float

    def __post_init__(self) -> None:
        _require(0 < self.epsilon < 1, "qos.epsilon must lie in (0, 1)")
        _require(self.rate_b > 0, "qos.rate_bps must be > 0")
        _require(self.bandwidth_w > 0, "qos.bandwidth_hz must be > 0")


@dataclass(frozen=True)
class PowerParams:
    """MBS load-dependent model and the two SBS consumption levels (W)."""

    p_base_macro: float
    u_slope: float
    p_t_max: float
    p_sbs_active: float
    p_sbs_sleep: float

    def __post_init__(self) -> None:
        _require(self.p_base_macro > 0, "power.p_base_w must be > 0")
        _require(self.u_slope > 0, "power.u must be > 0")
        _require(self.p_t_max > 0, "power.p_t_max_w must be > 0")
        _require(self.p_sbs_sleep >= 0, "power.p_sbs_sleep_w must be >= 0")
        _require(
            self.p_sbs_active > self.p_sbs_sleep,
            "power.p_sbs_active_w must exceed power.p_sbs_sleep_w",
        )

    @property
    def delta_p(self) -> float:
        """Power saved by putting one SBS to sleep."""
        return self.p_sbs_active - self.p_sbs_sleep


@dataclass(frozen=True)
class Scenario:
    r_macro: float
    r_small: float
    sbs_positions: tuple[tuple[float, float], ...]
    lambda0: float
    lambdas: tuple[float, ...]
    channel: ChannelParams
    qos: QosParams
    power: PowerParams
    _dist: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pos = tuple((float(x), float(y)) for x, y in self.sbs_positions)
        object.__setattr__(self, "sbs_positions", pos)
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "_dist", tuple(math.hypot(x, y) for x, y in pos))
        validate(self)

    @property
    def n_sbs(self) -> int:
        return len(self.sbs_positions)

    @property
    def small_area(self) -> float:
        return math.pi * self.r_small**2

    @property
    def macro_area(self) -> float:
        return math.pi * self.r_macro**2

    @property
    def area_a0(self) -> float:
        """Area of the macro disc outside every small-cell disc."""
        return self.macro_area - self.n_sbs * self.small_area

    def with_densities(self, lambda0: float, lambdas: Sequence[float]) -> "Scenario":
        return replace(self, lambda0=float(lambda0), lambdas=tuple(lambdas))

    def with_power(self, **kwargs: float) -> "Scenario":
        return replace(self, power=replace(self.power, **kwargs))

    def with_channel(self, **kwargs: float) -> "Scenario":
        return replace(self, channel=replace(self.channel, **kwargs))

    def with_qos(self, **kwargs: float) -> "Scenario":
        return replace(self, qos=replace(self.qos, **kwargs))

    def permuted(self, order: Sequence[int]) -> "Scenario":
        """Same instance with SBSs listed in ``order``."""
        return replace(
            self,
            sbs_positions=tuple(self.sbs_positions[i] for i in order),
            lambdas=tuple(self.lambdas[i] for i in order),
        )


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def validate(s: Scenario) -> None:
    """Raise :class:`ValidationError` naming the first violated invariant."""
    _require(s.r_small > 0, "geometry.r_small_m must be > 0")
    _require(s.r_small < s.r_macro, "geometry.r_small_m must be < r_macro_m")
    _require(len(s.lambdas) == len(s.sbs_positions),
             "densities.lambdas_per_m2 must have one entry per SBS")
    _require(s.lambda0 > 0, "densities.lambda0_per_m2 must be > 0")
    for m, lam in enumerate(s.lambdas):
        _require(lam > 0, f"densities.lambdas_per_m2[{m}] must be > 0")
    # tiny slack so that layouts touching the boundary survive a JSON round-trip
    slack = 1e-9 * s.r_macro
    for m, d in enumerate(s._dist):
        _require(d > 0, f"SBS {m} coincides with the MBS at the origin")
        _require(d + s.r_small <= s.r_macro + slack,
                 f"SBS {m} disc exits the macro-cell (|x|+R_s > R_0)")
    if s.n_sbs > 1:
        p = np.asarray(s.sbs_positions)
        gap = np.hypot(p[:, None, 0] - p[None, :, 0], p[:, None, 1] - p[None, :, 1])
        np.fill_diagonal(gap, np.inf)
        i, j = np.unravel_index(np.argmin(gap), gap.shape)
        _require(gap[i, j] >= 2 * s.r_small - slack,
                 f"SBS discs {min(i, j)} and {max(i, j)} overlap")


def sbs_distances(s: Scenario) -> list[float]:
    """Distances |x_m| from the MBS, in input order."""
    return list(s._dist)


def distance_order(s: Scenario) -> list[int]:
    """SBS indices sorted by distance to the MBS; ties keep index order."""
    return sorted(range(s.n_sbs), key=lambda m: (s._dist[m], m))


def is_uniform(s: Scenario, tol: float = DEFAULT_UNIFORM_RTOL) -> bool:
    return all(abs(lam - s.lambda0) <= tol * s.lambda0 for lam in s.lambdas)


# --- JSON boundary -------------------------------------------------------


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    try:
        g, dens, ch, q, pw = (doc[k] for k in ("geometry", "densities", "channel", "qos", "power"))
        positions = [tuple(p) for p in g["sbs_positions_m"]]
        if any(len(p) != 2 for p in positions):
            raise ParseError("geometry.sbs_positions_m entries must be [x, y] pairs")
        return Scenario(
            r_macro=float(g["r_macro_m"]),
            r_small=float(g["r_small_m"]),
            sbs_positions=tuple(positions),
            lambda0=float(dens["lambda0_per_m2"]),
            lambdas=tuple(float(v) for v in dens["lambdas_per_m2"]),
            channel=ChannelParams(
                d_ref_loss=db_to_linear(float(ch["d_db"])),
                r0=float(ch["r0_m"]),
                alpha=float(ch["alpha"]),
                n0=dbm_to_watt(float(ch["n0_dbm_hz"])),
                gamma_cap=float(ch.get("gamma", 1.0)),
            ),
            qos=QosParams(
                rate_b=float(q["rate_bps"]),
                epsilon=float(q["epsilon"]),
                bandwidth_w=float(q["bandwidth_hz"]),
            ),
            power=PowerParams(
                p_base_macro=float(pw["p_base_w"]),
                u_slope=float(pw["u"]),
                p_t_max=float(pw["p_t_max_w"]),
                p_sbs_active=float(pw["p_sbs_active_w"]),
                p_sbs_sleep=float(pw["p_sbs_sleep_w"]),
            ),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"scenario document is missing or mistypes {exc}") from exc


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    return {
        "geometry": {
            "r_macro_m": s.r_macro,
            "r_small_m": s.r_small,
            "sbs_positions_m": [list(p) for p in s.sbs_positions],
        },
        "densities": {"lambda0_per_m2": s.lambda0, "lambdas_per_m2": list(s.lambdas)},
        "channel": {
            "d_db": _exact_inverse(linear_to_db, db_to_linear, s.channel.d_ref_loss),
            "r0_m": s.channel.r0,
            "alpha": s.channel.alpha,
            "n0_dbm_hz": _exact_inverse(watt_to_dbm, dbm_to_watt, s.channel.n0),
            "gamma": s.channel.gamma_cap,
        },
        "qos": {
            "rate_bps": s.qos.rate_b,
            "epsilon": s.qos.epsilon,
            "bandwidth_hz": s.qos.bandwidth_w,
        },
        "power": {
            "p_base_w": s.power.p_base_macro,
            "u": s.power.u_slope,
            "p_t_max_w": s.power.p_t_max,
            "p_sbs_active_w": s.power.p_sbs_active,
            "p_sbs_sleep_w": s.power.p_sbs_sleep,
        },
    }


def _exact_inverse(to_db, from_db, x: float) -> float:
    """dB value that converts back to exactly ``x`` when one exists nearby."""
    y = to_db(x)
    cand = [y]
    lo = hi = y
    for _ in range(8):
        lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        cand += [lo, hi]
    for c in cand:
        if from_db(c) == x:
            return c
    return y


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return scenario_from_dict(doc)


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")
