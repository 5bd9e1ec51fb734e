"""Partition functions in log domain and quenched free-energy estimates.

Two dynamic programs are provided. ``exact_partition`` is the site-indexed
pinning partition function of a renewal with reward omega_n at each contact
and the constraint that N is a renewal point. ``charge_partition`` is the
upper-bound partition function indexed by charges, where every jump between
two visited charges is weighted by C / (distance)^{3/2}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ._numeric import logsumexp, spawn_generators
from .environment import ChargeLaw, Environment, sample_environment, to_sites
from .errors import InfeasibleStrategyError, InvalidArgumentError
from .renewal import (
    InterArrivalLaw,
    RenewalFunction,
    annealed_m,
    homogeneous_pinning_free_energy,
)


@dataclass(frozen=True, order=True)
class LogWeight:
    """Nonnegative scalar stored as its natural logarithm (-inf for zero)."""

    logval: float

    def __post_init__(self):
        v = float(self.logval)
        if math.isnan(v) or v == math.inf:
            raise InvalidArgumentError(f"invalid log-weight {self.logval!r}")
        object.__setattr__(self, "logval", v)

    @classmethod
    def from_value(cls, x: float) -> LogWeight:
        if x < 0:
            raise InvalidArgumentError("LogWeight holds nonnegative values only")
        return cls(math.log(x) if x > 0 else -math.inf)

    @classmethod
    def zero(cls) -> LogWeight:
        return cls(-math.inf)

    @classmethod
    def one(cls) -> LogWeight:
        return cls(0.0)

    @property
    def value(self) -> float:
        return math.exp(self.logval)

    def __add__(self, other: LogWeight) -> LogWeight:
        return LogWeight(float(np.logaddexp(self.logval, other.logval)))

    def __mul__(self, other: LogWeight) -> LogWeight:
        return LogWeight(self.logval + other.logval)

    def __truediv__(self, other: LogWeight) -> LogWeight:
        if other.logval == -math.inf:
            raise ZeroDivisionError("division by a zero LogWeight")
        return LogWeight(self.logval - other.logval)

    def __float__(self) -> float:
        return self.logval


@dataclass(frozen=True)
class FreeEnergyEstimate:
    """Monte Carlo estimate of lim (1/t_n) log Z_n over independent replicas."""

    value: float
    stderr: float
    n_charges: int
    replicas: int
    seed: int
    t_n_mean: float
    law: str = ""
    C: float = float("nan")
    samples: tuple = ()

    def to_record(self) -> dict:
        rec = asdict(self)
        rec.pop("samples")
        return rec


def _log_k_padded(k: InterArrivalLaw, n: int) -> np.ndarray:
    """log K(0..n), -inf beyond the law's horizon."""
    out = np.full(n + 1, -math.inf)
    m = min(n, k.n_max)
    out[: m + 1] = k.log_probs()[: m + 1]
    return out


def exact_partition(sites, k: InterArrivalLaw) -> LogWeight:
    """log of E[exp(sum_n omega_n 1{n in tau}) 1{N in tau}] by O(N^2) DP."""
    omega = np.asarray(sites, dtype=np.float64)
    n = omega.size
    if n < 1:
        raise InvalidArgumentError("need at least one site")
    logk = _log_k_padded(k, n)
    z = np.empty(n + 1)
    z[0] = 0.0
    for m in range(1, n + 1):
        # z[j] + log K(m - j) for j = 0..m-1
        z[m] = omega[m - 1] + logsumexp(z[:m] + logk[m:0:-1])
    return LogWeight(z[n])


def _charge_dp(t: np.ndarray, eta: np.ndarray, log_c: float) -> np.ndarray:
    """W(0..n) in log domain for locations t_0..t_n and intensities eta_1..eta_n."""
    n = t.size - 1
    tf = t.astype(np.float64)
    w = np.empty(n + 1)
    w[0] = 0.0
    for j in range(1, n + 1):
        a = w[:j] - 1.5 * np.log(tf[j] - tf[:j])
        m = a.max()
        w[j] = eta[j - 1] + log_c + m + math.log(np.exp(a - m).sum())
    return w


def charge_partition(env: Environment, n: int, C: float) -> LogWeight:
    """log Z_n(omega, C): sum over charge subsets ending at charge n."""
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= env.n:
        raise InvalidArgumentError(f"charge count {n} outside 1..{env.n}")
    if not C > 0:
        raise InvalidArgumentError("C must be positive")
    n = int(n)
    w = _charge_dp(env.t[: n + 1], env.etas[:n].astype(np.float64), math.log(C))
    return LogWeight(w[n])


@dataclass(frozen=True)
class RenewalBoundCheck:
    exact: LogWeight
    bound: LogWeight
    holds: bool

    @property
    def margin(self) -> float:
        """log(bound) - log(exact); nonnegative when the inequality holds."""
        return self.bound.logval - self.exact.logval


def miao_check(env: Environment, k: InterArrivalLaw, u: RenewalFunction, rtol: float = 1e-12) -> RenewalBoundCheck:
    """Compare Z_{t_n, omega} with the charge partition at C = cal_c."""
    span = env.span
    if span > u.n_max:
        raise InvalidArgumentError(f"environment span {span} exceeds renewal horizon {u.n_max}")
    exact = exact_partition(to_sites(env), k)
    bound = charge_partition(env, env.n, u.cal_c)
    return RenewalBoundCheck(exact, bound, exact.logval <= bound.logval + rtol * max(1.0, abs(bound.logval)))


def strategy_lower_bound(env: Environment, beta: int, k_plus: InterArrivalLaw) -> LogWeight:
    """log of e^{beta n} prod_l K(t_l - t_{l-1}): contribution of the paths that
    return to the wall exactly at every charge. The endpoint tail factor is
    left out, which can only lower the value."""
    if np.any(env.etas != beta):
        raise InvalidArgumentError("every intensity must equal beta")
    gaps = env.gaps
    if gaps.max() > k_plus.n_max:
        raise InvalidArgumentError(f"gap {gaps.max()} beyond the law horizon {k_plus.n_max}")
    kp = k_plus.probs[gaps]
    if np.any(kp == 0.0):
        bad = int(gaps[np.argmax(kp == 0.0)])
        raise InfeasibleStrategyError(f"gap {bad} has zero return probability")
    return LogWeight(float(beta) * env.n + float(np.log(kp).sum()))


def _replica_value(args):
    law, C, n_charges, rng = args
    env = sample_environment(law, n_charges, rng)
    t = env.t
    w = _charge_dp(t, env.etas.astype(np.float64), math.log(C))
    return w[-1] / t[-1], float(t[-1])


def free_energy_estimate(
    law: ChargeLaw,
    C: float,
    n_charges: int,
    replicas: int,
    seed: int,
    threads: int = 1,
) -> FreeEnergyEstimate:
    """Mean over replicas of (1/t_n) log Z_n(omega, C).

    Replica i uses stream i of the seed, and values are reduced in replica
    order, so the result does not depend on ``threads``.
    """
    if replicas < 1:
        raise InvalidArgumentError("replicas must be >= 1")
    if not C > 0:
        raise InvalidArgumentError("C must be positive")
    if law.c_b <= 0:
        raise InvalidArgumentError("law has no positive charges (c_b = 0)")
    gens = spawn_generators(seed, replicas)
    jobs = [(law, C, n_charges, g) for g in gens]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_replica_value, jobs))
    else:
        out = [_replica_value(j) for j in jobs]
    vals = np.array([v for v, _ in out])
    spans = np.array([s for _, s in out])
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("nan")
    return FreeEnergyEstimate(
        value=float(vals.mean()),
        stderr=stderr,
        n_charges=int(n_charges),
        replicas=int(replicas),
        seed=int(seed),
        t_n_mean=float(spans.mean()),
        law=_describe(law),
        C=float(C),
        samples=tuple(vals.tolist()),
    )


def _describe(law: ChargeLaw) -> str:
    if law.atoms.size == 1:
        return f"two_atom(level={law.level},mass={law.c_b:.6g})"
    return f"charge_law(level={law.level},x_max={law.x_max},c_b={law.c_b:.6g})"


def rough_free_energy_bound(law: ChargeLaw, C: float, a_const: float) -> float:
    """E omega_1 + P(omega_1 > 0) log(C / A), an upper bound on the free energy."""
    return law.mean() + law.c_b * math.log(C / a_const)


def exact_free_energy_annealed(beta: float, p: float, k: InterArrivalLaw) -> float:
    """Annealed free energy: homogeneous model with reward log M(beta, p)."""
    if not 0 <= p <= 1:
        raise InvalidArgumentError("p must lie in [0, 1]")
    return homogeneous_pinning_free_energy(k, math.log(annealed_m(beta, p)))
