"""Terminating renewal processes.

Inter-arrival laws K(n), the renewal function U(n) = P(n in tau), the
constant of the bound U(n) <= cal_c n^{-3/2}, and the exactly solvable
homogeneous pinning model that gives the annealed free energy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma, gammaincc

from ._numeric import logsumexp
from .errors import InvalidArgumentError

DEFAULT_N_MAX = 2**16


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class InterArrivalLaw:
    """Sub-probability law K on {1, ..., n_max}.

    ``probs[n]`` is K(n); ``probs[0]`` is always 0. ``c_k`` is the constant in
    K(n) ~ c_k / n^{1+alpha} along the support of the law. ``tail_mass`` is the
    mass the untruncated law puts beyond ``n_max`` (0 for laws that are
    normalized on the horizon).
    """

    probs: np.ndarray
    alpha: float
    c_k: float
    tail_mass: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size < 2:
            raise InvalidArgumentError("probs must be a 1-d array covering n = 0..n_max")
        if probs[0] != 0.0:
            raise InvalidArgumentError("K(0) must be 0")
        if np.any(probs < 0):
            raise InvalidArgumentError("negative inter-arrival mass")
        if math.fsum(probs) > 1.0 + 1e-12:
            raise InvalidArgumentError("inter-arrival masses sum above 1")
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def delta(self) -> float:
        return math.fsum(self.probs)

    def __call__(self, n: int) -> float:
        return float(self.probs[n]) if 0 <= n <= self.n_max else 0.0

    def log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def tail_constant_ratio(self, n: int) -> float:
        """K(n) n^{1+alpha} / c_k; close to 1 deep in the power-law regime."""
        return self.probs[n] * n ** (1.0 + self.alpha) / self.c_k

    def to_csv(self, path) -> None:
        _write_columns(path, ("n", "mass"), self.probs)

    @classmethod
    def from_csv(cls, path, alpha=0.5, c_k=float("nan"), tail_mass=0.0):
        return cls(_read_columns(path, ("n", "mass")), alpha, c_k, tail_mass, name=Path(path).stem)


@dataclass(frozen=True)
class RenewalFunction:
    """U(0..n_max) of a renewal law with the bound constant ``cal_c``.

    ``cal_c`` is max U(n) n^{3/2} over 1 <= n <= n_max; ``argmax`` records
    where it was attained. Outside the computed range nothing is claimed.
    """

    u: np.ndarray
    cal_c: float
    argmax: int
    law: InterArrivalLaw = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.u.size - 1

    def to_csv(self, path) -> None:
        _write_columns(path, ("n", "u"), self.u)


def srw_first_return_law(n_max: int = DEFAULT_N_MAX) -> InterArrivalLaw:
    """First return to zero of the simple random walk kept strictly positive.

    K(2n) = Catalan(n-1) / 4^n, K(odd) = 0. Total mass of the full law is 1/2;
    the part beyond ``n_max`` is recorded in ``tail_mass``.
    """
    if n_max < 2:
        raise InvalidArgumentError("horizon must be at least 2")
    if n_max % 2:
        raise InvalidArgumentError("horizon must be even")
    half = n_max // 2
    k = np.empty(half)
    k[0] = 0.25
    # K(2n+2)/K(2n) = Catalan(n)/(4 Catalan(n-1)) = (2n-1)/(2(n+1))
    i = np.arange(1, half, dtype=np.float64)
    k[1:] = 0.25 * np.cumprod((2.0 * i - 1.0) / (2.0 * (i + 1.0)))
    probs = np.zeros(n_max + 1)
    probs[2::2] = k
    c_k = 2.0**1.5 / (4.0 * math.sqrt(math.pi))
    tail = 0.5 - math.fsum(k)
    return InterArrivalLaw(probs, 0.5, c_k, max(tail, 0.0), name="srw_first_return")


def power_law_law(alpha: float, delta: float, n_max: int = DEFAULT_N_MAX) -> InterArrivalLaw:
    """K(n) = delta n^{-(1+alpha)} / sum_{m<=n_max} m^{-(1+alpha)}."""
    if not alpha > 0:
        raise InvalidArgumentError("alpha must be positive")
    if not 0 < delta < 1:
        raise InvalidArgumentError("delta must lie in (0, 1); the law must be terminating")
    if n_max < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    w = np.arange(1, n_max + 1, dtype=np.float64) ** -(1.0 + alpha)
    z = math.fsum(w)
    probs = np.zeros(n_max + 1)
    probs[1:] = delta * w / z
    return InterArrivalLaw(probs, alpha, delta / z, 0.0, name=f"power_law(alpha={alpha},delta={delta})")


def renewal_function(k: InterArrivalLaw) -> RenewalFunction:
    """U(0) = 1, U(n) = sum_{m=1}^{n} K(m) U(n-m)."""
    probs = k.probs
    n_max = k.n_max
    u = np.zeros(n_max + 1)
    u[0] = 1.0
    for n in range(1, n_max + 1):
        u[n] = np.dot(probs[1 : n + 1], u[n - 1 :: -1])
    scaled = u[1:] * np.arange(1, n_max + 1, dtype=np.float64) ** 1.5
    j = int(np.argmax(scaled))
    return RenewalFunction(_frozen(u), float(scaled[j]), j + 1, k)


def asymptotic_cal_c(k: InterArrivalLaw) -> float:
    """c_k / (1 - delta)^2 with delta the full mass (horizon tail included).

    This is the limit of U(n) n^{3/2} for alpha = 1/2. For the simple random
    walk U(n) n^{3/2} increases towards it, so it bounds the whole sequence.
    """
    if k.alpha != 0.5:
        raise InvalidArgumentError("the n^{-3/2} limit needs alpha = 1/2")
    return k.c_k / (1.0 - (k.delta + k.tail_mass)) ** 2


def _tail_factor(k: InterArrivalLaw, f: float) -> float:
    """sum_{n > n_max} K(n) e^{-f n} / tail_mass under the power-law continuation
    K(n) ~ n^{-1-alpha}: e^{-x} - x^alpha Gamma(1-alpha, x) with x = f n_max."""
    x = f * k.n_max
    if k.alpha >= 1.0:
        return math.exp(-x)
    a = 1.0 - k.alpha
    return max(math.exp(-x) - x**k.alpha * float(gammaincc(a, x) * gamma(a)), 0.0)


def homogeneous_pinning_free_energy(k: InterArrivalLaw, h: float, xtol: float = 1e-300) -> float:
    """Free energy of the renewal pinned with reward ``h`` at every renewal.

    Zero when e^h delta <= 1 with delta the full mass (tail beyond the
    horizon included), otherwise the root F of sum_n K(n) e^{h - F n} = 1.
    Mass beyond the horizon enters the root through :func:`_tail_factor`.
    The tiny default ``xtol`` leaves convergence to the relative tolerance,
    since F vanishes quadratically at the threshold.
    """
    if not math.isfinite(h):
        raise OverflowError(f"reward h={h} is not finite")
    log_delta = math.log(k.delta + k.tail_mass)
    if h + log_delta <= 0.0:
        return 0.0
    logk = k.log_probs()[1:]
    n = np.arange(1, k.n_max + 1, dtype=np.float64)
    support = np.isfinite(logk)
    logk, n = logk[support], n[support]

    def excess(f):
        total = logsumexp(logk - f * n)
        if k.tail_mass > 0.0:
            tail = k.tail_mass * _tail_factor(k, f)
            if tail > 0.0:
                total = float(np.logaddexp(total, math.log(tail)))
        return h + total

    upper = h - math.log(k.delta) + 1.0
    if not math.isfinite(upper) or upper > 1e300:
        raise OverflowError("free-energy root beyond representable range")
    return float(brentq(excess, 0.0, upper, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def annealed_m(beta: float, p: float) -> float:
    """M(beta, p) = E e^{omega_1} = p e^beta + 1 - p."""
    return p * math.exp(beta) + (1.0 - p)


def annealed_critical_p(beta: float) -> float:
    """p^a(beta) = 1 / (e^beta - 1)."""
    if not beta > 0:
        raise InvalidArgumentError("beta must be positive")
    return 1.0 / math.expm1(beta)


def _write_columns(path, header, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, v in enumerate(values):
            w.writerow((i, format(float(v), ".17g")))


def _read_columns(path, header) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        raise InvalidArgumentError(f"{path}: expected header {','.join(header)}")
    idx = [int(r[0]) for r in rows[1:]]
    if idx != list(range(len(idx))):
        raise InvalidArgumentError(f"{path}: indices must run 0, 1, 2, ...")
    return np.array([float(r[1]) for r in rows[1:]])
