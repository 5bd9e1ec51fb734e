"""Deterministic flow of charge laws and constants under renormalization.

One step maps the one-site law mu_b to mu_{b+1}, the one-site law of the
renormalized environment. Clusters are built from n+1 positive charges and
n internal gaps l in [1, L_b]; a gap l contributes 2K_b - floor(1.5 log l)
to the clustered intensity with weight (1 - c_b)^{l-1}. Gaps are grouped by
m = floor(1.5 log l) and each group is summed in closed form, so the cost
depends on log L_b only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import polygamma

from ._numeric import level_ranges
from .bounds import compute_constants
from .environment import ChargeLaw
from .errors import InvalidArgumentError, TruncationOverflowError
from .renorm import RenormParams, k_b_default, lift_C, renorm_constants

DEFAULT_TOL = 1e-12
HISTORY_COLUMNS = ("b", "q_b", "c_b", "ctilde_b", "mu0", "lost_mass", "C_b", "rough_bound", "domination_ratio")


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one law step.

    ``c_b`` and ``ctilde_b`` include mass already lost to truncation, since
    that mass is made of positive charges. ``mass_defect`` is the gap
    between the mu_{b+1}(0) obtained by mass bookkeeping and the closed form.
    """

    b: int
    q_b: float
    c_b: float
    ctilde_b: float
    mu0_closed_form: float
    mass_defect: float
    dropped: float
    series_tail: float
    lost_from_input: float
    n_terms: int


def gap_level_weights(c: float, l_b: int) -> np.ndarray:
    """r[m] = sum of (1-c)^{l-1} over l in [1, L_b] with floor(1.5 log l) = m."""
    ranges = level_ranges(l_b)
    r = np.zeros(ranges[-1][0] + 1)
    if c >= 1.0:
        r[0] = 1.0
        return r
    lq = math.log1p(-c)
    for m, lo, hi in ranges:
        # (1-c)^{lo-1} (1 - (1-c)^{hi-lo+1}) / c
        head = (lo - 1) * lq
        if head < -745.0:
            break
        r[m] = math.exp(head) * -math.expm1((hi - lo + 1) * lq) / c
    return r


def _kahan_add(acc, comp, x):
    y = x - comp
    t = acc + y
    comp = (t - acc) - y
    return t, comp


def _step(mu: ChargeLaw, params: RenormParams, x_max: int | None, tol: float) -> tuple[ChargeLaw, StepRecord]:
    b = mu.level
    if params.b != b:
        raise InvalidArgumentError(f"law level {b} differs from params level {params.b}")
    if x_max is None:
        x_max = default_x_max(mu, params)
    if x_max < b + 1:
        raise InvalidArgumentError("x_max must be at least b + 1")
    k_b, l_b = params.k_b, params.l_b
    # known atoms on absolute positions 0..x_max; atoms above x_max join the lost mass
    top = min(mu.x_max, x_max)
    mu_hat = np.zeros(x_max + 1)
    mu_hat[b : top + 1] = mu.atoms[: top - b + 1]
    lost_in = mu.lost_mass + math.fsum(mu.atoms[top - b + 1 :])
    c_known = math.fsum(mu_hat)
    c_true = c_known + lost_in
    if not c_true > 0:
        raise InvalidArgumentError("law has no positive charges")
    ct_true = math.fsum(mu_hat[b + 1 :]) + lost_in
    q = math.exp(l_b * math.log1p(-c_true)) if c_true < 1.0 else 0.0
    # mass ratio between consecutive cluster sizes, known atoms only
    ratio = (1.0 - q) * c_known / c_true
    if ratio >= 1.0 - 1e-15:
        raise TruncationOverflowError(f"q_b = {q:.3g}: blocks are too long to tabulate at this density")

    # one (gap, charge) factor: the gap shifts the value by 2K - m with weight r[m]
    r = gap_level_weights(c_true, l_b)
    g_lo = b + 2 * k_b - (r.size - 1)
    if g_lo < 1:
        raise InvalidArgumentError(f"K = {k_b} too small for L = {l_b}: cluster values would drop below 1")
    g_full = np.convolve(mu_hat[b:], r[::-1])
    g = np.zeros(g_lo + g_full.size)
    g[g_lo:] = g_full

    acc = q * np.where(np.arange(x_max + 1) >= b + 1, mu_hat, 0.0)
    comp = np.zeros(x_max + 1)
    cur = mu_hat
    n_terms = 0
    dropped = 0.0
    while True:
        n_terms += 1
        full = np.convolve(cur, g)
        # mass cut here would have seeded all later terms too
        dropped += q * math.fsum(full[x_max + 1 :]) / (1.0 - ratio)
        cur = full[: x_max + 1]
        acc, comp = _kahan_add(acc, comp, q * cur)
        mass = math.fsum(cur)
        series_tail = q * mass * ratio / (1.0 - ratio)
        if mass == 0.0 or series_tail <= tol:
            break
    # clusters that contain at least one charge of unknown intensity
    if lost_in > 0.0:
        lost_from_input = q * lost_in + (1.0 - q) * c_true - q * c_known * ratio / (1.0 - ratio)
    else:
        lost_from_input = 0.0
    atoms = np.maximum(acc[b + 1 :], 0.0)
    lost = max(dropped + series_tail + lost_from_input, 0.0)
    mass0 = 1.0 - math.fsum(atoms) - lost
    closed = 1.0 - (q * ct_true + (1.0 - q) * c_true)
    new_law = ChargeLaw(mass0, atoms, b + 1, lost)
    rec = StepRecord(b, q, c_true, ct_true, closed, mass0 - closed, dropped, series_tail, lost_from_input, n_terms)
    return new_law, rec


def default_x_max(mu: ChargeLaw, params: RenormParams) -> int:
    """20 (b + 2 K_b) plus the span of the current support."""
    return 20 * (params.b + 2 * params.k_b) + mu.atoms.size


def step_law(mu: ChargeLaw, params: RenormParams, x_max: int | None = None, tol: float = DEFAULT_TOL) -> ChargeLaw:
    """mu_{b+1}(x) = q mu_b(x) 1{x >= b+1} + q (Q_b mu_b)(x) on [b+1, x_max]."""
    return _step(mu, params, x_max, tol)[0]


def domination_check(mu: ChargeLaw) -> float:
    """max_x mu(x) e^{2x/3 + sqrt(x)} over the known atoms (0 for no atoms)."""
    pos = mu.atoms > 0
    if not pos.any():
        return 0.0
    x = mu.support[pos].astype(np.float64)
    with np.errstate(over="ignore"):
        return float(np.exp(np.log(mu.atoms[pos]) + 2.0 * x / 3.0 + np.sqrt(x)).max())


def rough_upper_bound(mu: ChargeLaw, c_const: float, a_const: float | None = None) -> float:
    """E omega_1 + (1 - mu(0)) log(C / A). Lost mass enters the second term
    only; its contribution to the mean is unknown."""
    a = compute_constants().a if a_const is None else a_const
    return mu.mean() + (1.0 - mu.mass0) * math.log(c_const / a)


def constant_flow(cal_c: float, beta: int, n_levels: int, k0: float, big_b: float) -> np.ndarray:
    """C_beta, C_{beta+1}, ... with C_{b+1} = (1 + B e^{-K_b} C_b) C_b."""
    out = np.empty(n_levels + 1)
    c = cal_c
    out[0] = c
    for i in range(n_levels):
        c = lift_C(c, k_b_default(beta + i, cal_c, k0), big_b)
        out[i + 1] = c
    return out


def smallness_condition(beta: int, k0: float, big_b: float) -> float:
    """B e^{1-K_0} sum_{a >= beta} a^{-2}, enclosed from above; at most log 2
    guarantees C_b <= 2 cal_c at every level."""
    return big_b * math.exp(1.0 - k0) * float(polygamma(1, beta)) * (1.0 + 1e-12)


@dataclass
class FlowState:
    """Current law and constant plus the per-level history."""

    law: ChargeLaw
    c_b_const: float
    level: int
    tol: float
    mode: str
    history: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def record(self, a_const: float) -> dict:
        row = {
            "b": self.level,
            "q_b": math.nan,
            "c_b": self.law.positive_mass,
            "ctilde_b": self.law.c_tilde_b + self.law.lost_mass,
            "mu0": self.law.mass0,
            "lost_mass": self.law.lost_mass,
            "C_b": self.c_b_const,
            "rough_bound": rough_upper_bound(self.law, self.c_b_const, a_const),
            "domination_ratio": domination_check(self.law),
        }
        return row

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, extrasaction="ignore")
            w.writeheader()
            for row in self.history:
                w.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()})


def params_for_level(state: FlowState, cal_c: float, k0: float, big_b: float, k_override=None, l_override=None) -> RenormParams:
    return renorm_constants(state.level, cal_c, k0, big_b, c=state.c_b_const, k_b=k_override, l_b=l_override)


def step_constant(state: FlowState, params: RenormParams) -> float:
    """Advance C_b to (1 + B e^{-K_b} C_b) C_b."""
    return lift_C(state.c_b_const, params.k_b, params.big_b)


def iterate(
    mu_start: ChargeLaw,
    cal_c: float,
    b_max: int,
    x_max: int | None = None,
    tol: float = DEFAULT_TOL,
    k_override: int | None = None,
    l_override: int | None = None,
    constants=None,
    max_lost: float | None = None,
) -> FlowState:
    """Run the law and constant flow from level mu_start.level up to b_max.

    Without overrides the level-dependent K_b, L_b are used ("level" mode);
    otherwise K and L are fixed at the given values ("override" mode).
    Truncation losses above ``max_lost`` (default 100 tol) abort the run.
    """
    pc = constants or compute_constants()
    mode = "level" if k_override is None and l_override is None else "override"
    max_lost = 100.0 * tol if max_lost is None else max_lost
    state = FlowState(mu_start, float(cal_c), mu_start.level, tol, mode)
    state.history.append(state.record(pc.a))
    while state.level < b_max:
        params = params_for_level(state, cal_c, pc.k0, pc.big_b, k_override, l_override)
        new_law, rec = _step(state.law, params, x_max, tol)
        if new_law.lost_mass > max_lost:
            raise TruncationOverflowError(
                f"level {state.level + 1}: lost mass {new_law.lost_mass:.3g} exceeds {max_lost:.3g}; raise x_max"
            )
        state.c_b_const = step_constant(state, params)
        state.law = new_law
        state.level += 1
        state.steps.append(rec)
        row = state.record(pc.a)
        row["q_b"] = rec.q_b
        state.history.append(row)
    return state
