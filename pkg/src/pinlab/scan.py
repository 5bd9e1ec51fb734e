"""Bisection scan for the localization threshold p_c(beta).

At fixed beta the charge law puts mass p at beta. The free energy of the
charge partition function is estimated at each probe p; p is declared
localized when the estimate exceeds both epsilon and three standard errors.
The same per-beta seed is reused at every probe (common random numbers), so
that the comparison between neighbouring p values is not swamped by noise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import compute_constants
from .environment import ChargeLaw
from .errors import InvalidArgumentError, ScanError
from .partition import FreeEnergyEstimate, free_energy_estimate
from .renewal import annealed_critical_p

MAX_DEPTH = 20


@dataclass(frozen=True)
class Probe:
    p: float
    value: float
    stderr: float
    localized: bool


@dataclass(frozen=True)
class ScanResult:
    beta: int
    p_c_est: float
    p_low: float
    p_high: float
    f_low: float
    f_high: float
    slope: float
    slope_tolerance: float
    annealed_p: float
    n_charges: int
    replicas: int
    seed: int
    epsilon: float
    probes: tuple = field(default=(), repr=False)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["probes"] = [asdict(p) for p in self.probes]
        return rec

    def row(self) -> dict:
        rec = self.to_record()
        rec.pop("probes")
        return rec


def two_atom_law(beta: int, p: float) -> ChargeLaw:
    """(1 - p) delta_0 + p delta_beta."""
    if not 0 < p <= 1:
        raise InvalidArgumentError("p must lie in (0, 1]")
    return ChargeLaw(1.0 - p, np.array([p]), int(beta))


def is_localized(est: FreeEnergyEstimate, epsilon: float) -> bool:
    return est.value >= epsilon and est.value > 3.0 * est.stderr


def beta_seed(seed: int, beta: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(beta)]).generate_state(1, np.uint64)[0])


def scan_critical(
    beta_grid,
    n_charges: int,
    replicas: int,
    seed: int,
    C: float,
    epsilon: float = 1e-9,
    max_depth: int = MAX_DEPTH,
    rtol: float = 1e-2,
    threads: int = 1,
) -> list[ScanResult]:
    """Bisect log p between p^a(beta)/2 and 1 for every beta in the grid."""
    if not epsilon > 0:
        raise InvalidArgumentError("epsilon must be positive")
    if replicas < 2:
        raise InvalidArgumentError("need at least 2 replicas for a standard error")
    max_depth = min(int(max_depth), MAX_DEPTH)
    out = []
    for beta in beta_grid:
        beta = int(beta)
        s = beta_seed(seed, beta)
        p_a = annealed_critical_p(beta)
        probes = []

        def probe(p):
            est = free_energy_estimate(two_atom_law(beta, p), C, n_charges, replicas, s, threads)
            pr = Probe(p, est.value, est.stderr, is_localized(est, epsilon))
            probes.append(pr)
            return pr

        lo, hi = probe(min(p_a / 2.0, 1.0)), probe(1.0)
        if lo.localized or not hi.localized:
            raise ScanError(
                f"beta={beta}: bracket [{lo.p:.4g}, {hi.p:.4g}] does not straddle the threshold "
                f"(f_low={lo.value:.3g}+-{lo.stderr:.2g}, f_high={hi.value:.3g}+-{hi.stderr:.2g})"
            )
        for _ in range(max_depth):
            if hi.p / lo.p <= 1.0 + rtol:
                break
            mid = probe(math.sqrt(lo.p * hi.p))
            if mid.localized:
                hi = mid
            else:
                lo = mid
        p_c = math.sqrt(lo.p * hi.p)
        # half the log-bracket width plus an O(1/beta) allowance of size K_0
        tau = (0.5 * math.log(hi.p / lo.p) + compute_constants().k0) / beta
        out.append(
            ScanResult(
                beta, p_c, lo.p, hi.p, lo.value, hi.value, -math.log(p_c) / beta, tau, p_a,
                int(n_charges), int(replicas), s, float(epsilon), tuple(probes),
            )
        )
    return out
