"""Small exact-arithmetic and RNG helpers used across modules."""

from __future__ import annotations

import math
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp as _logsumexp

_GUARD_DIGITS = 30


def _context_for(log_value: float) -> Context:
    digits = int(max(log_value, 0.0) / math.log(10)) + _GUARD_DIGITS
    return Context(prec=max(digits, 50), Emax=10**9, Emin=-(10**9))


def floor_exp_two_thirds(s) -> int:
    """Return floor(exp(2 s / 3)) exactly, for integer or float ``s``."""
    ctx = _context_for(2.0 * float(s) / 3.0)
    arg = ctx.divide(ctx.multiply(Decimal(2), Decimal(s)), Decimal(3))
    return int(ctx.exp(arg).to_integral_value(rounding=ROUND_FLOOR))


@lru_cache(maxsize=64)
def level_thresholds(m_max: int) -> tuple[int, ...]:
    """Thresholds T_m = ceil(e^{2m/3}) for m = 0..m_max+1.

    For an integer l >= 1, floor(1.5 log l) = m  iff  T_m <= l < T_{m+1}.
    Built by repeated multiplication in a Decimal context wide enough that
    the ceilings are exact.
    """
    ctx = _context_for(2.0 * (m_max + 1) / 3.0)
    step = ctx.exp(ctx.divide(Decimal(2), Decimal(3)))
    value = Decimal(1)
    out = []
    for _ in range(m_max + 2):
        out.append(int(value.to_integral_value(rounding=ROUND_CEILING, context=ctx)))
        value = ctx.multiply(value, step)
    return tuple(out)


def floor_three_halves_log(values) -> np.ndarray:
    """Exact floor(1.5 log l) for an array of positive integers below 2^62."""
    arr = np.asarray(values, dtype=np.int64)
    if arr.size and arr.min() < 1:
        raise ValueError("floor_three_halves_log needs positive integers")
    cap = np.iinfo(np.int64).max
    thr = np.array([min(t, cap) for t in level_thresholds(66)[1:]], dtype=np.int64)
    return np.searchsorted(thr, arr, side="right").astype(np.int64)


def level_ranges(l_max: int) -> list[tuple[int, int, int]]:
    """Group {1, ..., l_max} by m = floor(1.5 log l).

    Returns triples (m, lo, hi) with lo <= hi covering [1, l_max] in order.
    """
    if l_max < 1:
        return []
    m_top = math.floor(1.5 * math.log(l_max)) + 1
    thr = level_thresholds(m_top)
    out = []
    for m in range(m_top + 1):
        lo, hi = thr[m], thr[m + 1] - 1
        if lo > l_max:
            break
        out.append((m, lo, min(hi, l_max)))
    return out


def logsumexp(a: np.ndarray) -> float:
    """scipy's logsumexp as a float; -inf for an empty input."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return -math.inf
    return float(_logsumexp(a))


def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent PCG64 streams derived from one 64-bit seed.

    Stream ``i`` depends only on (seed, i), never on how many workers run.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
