"""Independent oracles for the analytic model and the optimisers.

* :func:`exhaustive_search` enumerates all 2^M modes (M <= 24).
* :func:`monte_carlo_validate` simulates PPP users and Rayleigh fading and
  compares the empirical MBS transmit power with the closed form.
* :func:`exact_cell_integral` integrates the path-loss profile over a small
  cell by quadrature, without the centre-point shortcut.

Random streams: draws are processed in blocks of ``BLOCK_DRAWS``; block ``b``
uses child ``b`` of ``SeedSequence(seed)`` (PCG64), and the fading audit uses
one extra child after the last block.  Results therefore depend only on
``(seed, n_draws)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from hetsleep import power_model as pm
from hetsleep.errors import ContractViolation, InfeasibleScenario, TooLarge
from hetsleep.power_model import Evaluation, OperationMode
from hetsleep.scenario import Scenario

MAX_EXHAUSTIVE_M = 24
CHUNK_MODES = 1 << 16
BLOCK_DRAWS = 20_000
MIN_DRAWS = 1000


# --- exhaustive search -----------------------------------------------------


def _mode_bits(start: int, stop: int, m: int) -> np.ndarray:
    """Rows are theta vectors of mode indices start..stop-1, theta_1 as MSB."""
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)


def _chunk_powers(s: Scenario, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P_t, P_het) for each row of ``theta`` straight from T(theta) Z(theta)."""
    ch, q, pw = s.channel, s.qos, s.power
    a = ch.alpha
    area_s = math.pi * s.r_small**2
    lam = np.asarray(s.lambdas)
    d = np.hypot(*np.asarray(s.sbs_positions, dtype=float).reshape(-1, 2).T)
    off = ~theta
    mu = s.lambda0 * (math.pi * s.r_macro**2 - s.n_sbs * area_s) + off @ (lam * area_s)
    pref = ch.gamma_cap * ch.n0 * q.bandwidth_w / (-ch.d_ref_loss * math.log(1.0 - q.epsilon))
    with np.errstate(over="ignore"):
        t = pref * np.expm1((2.0 ** (q.rate_b / q.bandwidth_w) - 1.0) * mu)
    disc = 2.0 * math.pi * s.lambda0 / (a + 2.0) * (s.r_macro ** (a + 2.0) + a * ch.r0 ** (a + 2.0) / 2.0)
    num = disc - s.lambda0 * area_s * np.sum(d**a) + off @ (lam * area_s * d**a)
    with np.errstate(invalid="ignore"):
        z = np.where(mu > 0, num / (ch.r0**a * np.where(mu > 0, mu, 1.0)), 0.0)
        p_t = np.where(mu > 0, t * z, 0.0)
    n_on = theta.sum(axis=1)
    p_het = pw.p_base_macro + pw.u_slope * p_t + s.n_sbs * pw.p_sbs_sleep + n_on * (pw.p_sbs_active - pw.p_sbs_sleep)
    return p_t, p_het


def exhaustive_search(s: Scenario) -> tuple[OperationMode, Evaluation]:
    """Minimum-total-power feasible mode over all 2^M modes.

    Exact ties go to the lexicographically smallest theta.
    """
    m = s.n_sbs
    if m > MAX_EXHAUSTIVE_M:
        raise TooLarge(f"exhaustive search capped at M = {MAX_EXHAUSTIVE_M}, got {m}")
    best_val, best_idx = math.inf, -1
    total = 1 << m
    for start in range(0, total, CHUNK_MODES):
        stop = min(total, start + CHUNK_MODES)
        theta = _mode_bits(start, stop, m)
        p_t, p_het = _chunk_powers(s, theta)
        p_het = np.where(p_t <= s.power.p_t_max, p_het, np.inf)
        k = int(np.argmin(p_het))
        if p_het[k] < best_val:
            best_val, best_idx = float(p_het[k]), start + k
    if best_idx < 0:
        raise InfeasibleScenario("no operation mode satisfies the transmit-power cap")
    mode = OperationMode(tuple(int(b) for b in _mode_bits(best_idx, best_idx + 1, m)[0]))
    return mode, pm.evaluate(s, mode)


# --- exact path-loss integrals --------------------------------------------


def _g_scaled(r: float, r0: float, a: float) -> float:
    """r0^alpha g(r) = max(r0, r)^alpha."""
    return max(r, r0) ** a


def exact_cell_integral(s: Scenario, m: int, epsrel: float = 1e-10) -> float:
    """Integral of max(r0, r)^alpha over small cell ``m`` (polar about its centre).

    The closed form replaces this with ``pi R_s^2 d_m^alpha``.
    """
    x, y = s.sbs_positions[m]
    r0, a = s.channel.r0, s.channel.alpha

    def inner(phi: float, rho: float) -> float:
        return _g_scaled(math.hypot(x + rho * math.cos(phi), y + rho * math.sin(phi)), r0, a) * rho

    val, _ = integrate.dblquad(inner, 0.0, s.r_small, 0.0, 2.0 * math.pi, epsabs=0.0, epsrel=epsrel)
    return val


def exact_efficiency_factor(s: Scenario, mode: OperationMode) -> float:
    """Efficiency factor with every small-cell integral evaluated by quadrature."""
    exact = np.asarray([exact_cell_integral(s, m) for m in range(s.n_sbs)])
    lam = np.asarray(s.lambdas)
    off = np.asarray(mode.theta) == 0
    num = s.lambda0 * (pm.macro_disc_integral(s) - exact.sum()) + float(np.sum(lam[off] * exact[off]))
    return num / (s.channel.r0**s.channel.alpha * pm.macro_mu(s, mode))


# --- Monte-Carlo -----------------------------------------------------------


@dataclass
class McReport:
    p_t_analytic: float
    p_t_empirical_mean: float
    std_error: float
    n_draws: int
    outage_rate: float
    approx_error_z: float
    outage_per_user: list[float] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_draws < 1 or self.std_error < 0 or not 0 <= self.outage_rate <= 1:
            raise ValueError("inconsistent Monte-Carlo report")

    @property
    def z_score(self) -> float:
        diff = self.p_t_empirical_mean - self.p_t_analytic
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.std_error

    def to_dict(self) -> dict:
        return asdict(self)


def _uniform_in_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def _sample_a0(rng: np.random.Generator, n: int, s: Scenario, centres: np.ndarray) -> np.ndarray:
    """Uniform points in the macro disc outside every small cell (rejection)."""
    out = np.empty((0, 2))
    rs2 = s.r_small**2
    while out.shape[0] < n:
        need = n - out.shape[0]
        pts = _uniform_in_disc(rng, int(need * 1.1) + 16, s.r_macro)
        if centres.size:
            inside = np.zeros(pts.shape[0], dtype=bool)
            for cx, cy in centres:
                inside |= (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 < rs2
            pts = pts[~inside]
        out = np.vstack((out, pts[:need]))
    return out


def _sample_users(rng: np.random.Generator, s: Scenario, mode: OperationMode,
                  counts: np.ndarray) -> np.ndarray:
    """Distances to the MBS of all users of a block, grouped by draw."""
    off = [m for m, t in enumerate(mode.theta) if t == 0]
    weights = np.asarray([s.lambda0 * s.area_a0] + [s.lambdas[m] * s.small_area for m in off])
    cum = np.cumsum(weights / weights.sum())
    cum[-1] = 1.0
    n = int(counts.sum())
    region = np.searchsorted(cum, rng.random(n), side="right")
    centres = np.asarray(s.sbs_positions, dtype=float).reshape(-1, 2)
    pos = np.empty((n, 2))
    sel = region == 0
    pos[sel] = _sample_a0(rng, int(sel.sum()), s, centres)
    for k, m in enumerate(off, start=1):
        sel = region == k
        pos[sel] = _uniform_in_disc(rng, int(sel.sum()), s.r_small) + centres[m]
    return np.hypot(pos[:, 0], pos[:, 1])


def _per_user_power(s: Scenario, r: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorised transmit power per user given its distance and the user count."""
    ch, q = s.channel, s.qos
    growth = np.expm1(k * q.rate_b * math.log(2.0) / q.bandwidth_w) / k
    return pm.noise_prefactor(s) * growth * np.maximum(1.0, (r / ch.r0) ** ch.alpha)


def outage_check(s: Scenario, r: np.ndarray, k: np.ndarray, rng: np.random.Generator,
                 fading_draws: int) -> np.ndarray:
    """Empirical outage probability per user at the QoS-sized transmit power.

    Each user sees ``fading_draws`` unit-mean exponential fading gains; an
    outage is an achieved rate below the target.
    """
    ch, q = s.channel, s.qos
    p_t = _per_user_power(s, r, k)
    gain = ch.d_ref_loss / np.maximum(1.0, (r / ch.r0) ** ch.alpha)
    h = rng.exponential(1.0, size=(r.size, fading_draws))
    bw = q.bandwidth_w / k
    p_r = (p_t * gain)[:, None] * h
    rate = bw[:, None] * np.log2(1.0 + p_r / (ch.gamma_cap * ch.n0 * bw)[:, None])
    return (rate < q.rate_b).mean(axis=1)


def monte_carlo_validate(s: Scenario, mode: OperationMode, n_draws: int, seed: int,
                         outage_users: int = 20, fading_draws: int = 100_000,
                         exact_z: bool = True) -> McReport:
    if n_draws < MIN_DRAWS:
        raise ContractViolation(f"n_draws must be >= {MIN_DRAWS}")
    mu = pm.macro_mu(s, mode)
    analytic = pm.evaluate(s, mode).p_t
    n_blocks = -(-n_draws // BLOCK_DRAWS)
    children = np.random.SeedSequence(seed).spawn(n_blocks + 1)
    total = total_sq = 0.0
    kept_r: list[np.ndarray] = []
    kept_k: list[np.ndarray] = []
    n_kept = 0
    for b in range(n_blocks):
        rng = np.random.Generator(np.random.PCG64(children[b]))
        size = min(BLOCK_DRAWS, n_draws - b * BLOCK_DRAWS)
        counts = rng.poisson(mu, size=size)
        r = _sample_users(rng, s, mode, counts)
        owner = np.repeat(np.arange(size), counts)
        k_user = counts[owner].astype(float)
        per_draw = np.bincount(owner, weights=_per_user_power(s, r, k_user), minlength=size) if r.size else np.zeros(size)
        total += float(per_draw.sum())
        total_sq += float(np.dot(per_draw, per_draw))
        if n_kept < outage_users and r.size:
            take = min(outage_users - n_kept, r.size)
            kept_r.append(r[:take])
            kept_k.append(k_user[:take])
            n_kept += take
    mean = total / n_draws
    var = max(total_sq / n_draws - mean * mean, 0.0) * n_draws / max(n_draws - 1, 1)
    se = math.sqrt(var / n_draws)

    per_user: list[float] = []
    if n_kept:
        rng = np.random.Generator(np.random.PCG64(children[n_blocks]))
        per_user = [float(v) for v in outage_check(s, np.concatenate(kept_r), np.concatenate(kept_k),
                                                   rng, fading_draws)]
    outage = float(np.mean(per_user)) if per_user else 0.0

    approx_err = 0.0
    if exact_z and mu > 0 and s.n_sbs:
        z_exact = exact_efficiency_factor(s, mode)
        approx_err = abs(pm.efficiency_factor(s, mode) - z_exact) / abs(z_exact)
    return McReport(
        p_t_analytic=analytic,
        p_t_empirical_mean=mean,
        std_error=se,
        n_draws=n_draws,
        outage_rate=outage,
        approx_error_z=approx_err,
        outage_per_user=per_user,
        seed=seed,
    )
