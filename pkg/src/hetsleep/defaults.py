"""Reference parameter set and default layouts used by the CLI and tests.

Channel, QoS and power values are the usual macro/small-cell reference set
(712 W + 14.5 P_t macro, 10 W / 3 W SBS, 40 W transmit cap).  The geometry
is a repo choice: R0 = 500 m, R_s = 10 m, M = 144 SBSs on a
12 x 12 grid with 60 m pitch centred on the MBS.  The 20-SBS benchmark
layout uses R_s = 20 m with random disjoint placement.
"""

from __future__ import annotations

import math

import numpy as np

from hetsleep.scenario import ChannelParams, PowerParams, QosParams, Scenario, db_to_linear, dbm_to_watt

R_MACRO = 500.0
R_SMALL = 10.0
TABLE2_R_SMALL = 20.0
TABLE2_M = 20
GRID_SIDE = 12
GRID_PITCH = 60.0
DEFAULT_SIGMA2 = 1e-5
DENSITY_RATIO = 50.0


def reference_channel() -> ChannelParams:
    return ChannelParams(d_ref_loss=db_to_linear(-35.0), r0=1.0, alpha=2.5,
                         n0=dbm_to_watt(-174.0), gamma_cap=1.0)


def reference_qos() -> QosParams:
    return QosParams(rate_b=0.1e6, epsilon=0.05, bandwidth_w=10e6)


def reference_power() -> PowerParams:
    return PowerParams(p_base_macro=712.0, u_slope=14.5, p_t_max=40.0,
                       p_sbs_active=10.0, p_sbs_sleep=3.0)


def grid_layout(side: int = GRID_SIDE, pitch: float = GRID_PITCH) -> list[tuple[float, float]]:
    """side x side square grid centred on the origin (no SBS at the origin for even side)."""
    offs = (np.arange(side) - (side - 1) / 2.0) * pitch
    return [(float(x), float(y)) for y in offs for x in offs]


def random_layout(n: int, r_macro: float, r_small: float, rng: np.random.Generator,
                  min_dist: float = 0.0, max_tries: int = 100_000) -> list[tuple[float, float]]:
    """Disjoint SBS discs inside the macro disc by sequential rejection sampling.

    ``min_dist`` keeps SBS centres at least that far from the MBS.
    """
    pts: list[tuple[float, float]] = []
    r_max = r_macro - r_small
    for _ in range(max_tries):
        if len(pts) == n:
            return pts
        r = r_max * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        if r < max(min_dist, 1e-9):
            continue
        x, y = r * math.cos(phi), r * math.sin(phi)
        if all(math.hypot(x - a, y - b) >= 2.0 * r_small for a, b in pts):
            pts.append((x, y))
    raise RuntimeError(f"could not place {n} disjoint SBS discs")


def reference_scenario(positions: list[tuple[float, float]] | None = None,
                       lambda0: float = 1e-3, lambdas: list[float] | None = None,
                       r_macro: float = R_MACRO, r_small: float = R_SMALL) -> Scenario:
    """Reference parameters on a given layout (default: the 144-SBS grid)."""
    if positions is None:
        positions = grid_layout()
    if lambdas is None:
        lambdas = [DENSITY_RATIO * lambda0] * len(positions)
    return Scenario(
        r_macro=r_macro,
        r_small=r_small,
        sbs_positions=tuple(positions),
        lambda0=lambda0,
        lambdas=tuple(lambdas),
        channel=reference_channel(),
        qos=reference_qos(),
        power=reference_power(),
    )
