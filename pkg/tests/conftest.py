"""Shared scenario factories for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hetsleep import defaults
from hetsleep.scenario import Scenario
from hetsleep.uniform import threshold_lambda_off, threshold_lambda_on


def random_scenario(rng: np.random.Generator, m: int, uniform: bool = False,
                    r_macro: float | None = None, r_small: float | None = None,
                    lambda0: float | None = None, spread: float = 5.0) -> Scenario:
    """Reference parameters on a random disjoint layout.

    Uniform scenarios put every small cell at the macro density; otherwise
    small-cell densities are log-uniform within a factor ``spread`` of 50 lambda0.
    """
    if r_macro is None:
        r_macro = float(rng.uniform(200.0, 600.0))
    if r_small is None:
        r_small = float(rng.uniform(0.02, 0.06)) * r_macro
    if lambda0 is None:
        lambda0 = float(10 ** rng.uniform(-4.0, -1.5)) if uniform else float(10 ** rng.uniform(-4.3, -2.7))
    pos = defaults.random_layout(m, r_macro, r_small, rng, min_dist=r_small)
    if uniform:
        lam = [lambda0] * m
    else:
        lam = list(50 * lambda0 * np.exp(rng.uniform(-math.log(spread), math.log(spread), m)))
    return defaults.reference_scenario(pos, lambda0, lam, r_macro=r_macro, r_small=r_small)


def random_uniform_scenario(rng: np.random.Generator, m: int) -> Scenario:
    """Identical densities placed between the all-off and all-on thresholds.

    The SBS active power and the transmit cap are randomised too, so that the
    optimum stops anywhere along the distance order.
    """
    base = random_scenario(rng, m, uniform=True, lambda0=1e-3)
    p1 = float(10 ** rng.uniform(math.log10(4.0), 2.3))
    cap = math.inf if rng.random() < 0.5 else 40.0
    base = base.with_power(p_sbs_active=p1, p_t_max=cap)
    uncapped = base.with_power(p_t_max=math.inf)
    lo, hi = threshold_lambda_off(uncapped), threshold_lambda_on(uncapped)
    lam = float(10 ** rng.uniform(math.log10(0.97 * lo), math.log10(1.03 * hi)))
    return base.with_densities(lam, [lam] * m)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def small_scenario() -> Scenario:
    """Four SBSs at fixed, well-separated positions."""
    return defaults.reference_scenario(
        [(60.0, 0.0), (0.0, -80.0), (-100.0, 20.0), (30.0, 110.0)],
        lambda0=4e-4, lambdas=[1e-3, 2e-3, 5e-4, 1e-3], r_macro=150.0, r_small=3.0)


@pytest.fixture
def grid_scenario() -> Scenario:
    return defaults.reference_scenario(lambda0=1e-3)
