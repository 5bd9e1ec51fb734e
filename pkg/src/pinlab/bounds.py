"""Absolute constants of the renormalization and numerical lemma checks.

Every check returns a :class:`BoundCheck`. Hypotheses of a lemma are
checked first; if they fail the check raises instead of reporting a
violation, so that ``holds = False`` always means a genuine counterexample
within the stated hypotheses.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from ._numeric import floor_exp_two_thirds, floor_three_halves_log, level_ranges, logsumexp
from .errors import InadmissibleParametersError, InvalidArgumentError
from .renorm import k_b_default


@dataclass(frozen=True)
class ProofConstants:
    """A = 1/zeta(3/2) with a rigorous enclosure, gamma_0, K_0 and B.

    K_0 and B are computed from the lower end of the A enclosure, which
    makes both of them safe over-approximations.
    """

    a: float
    a_lo: float
    a_hi: float
    gamma0: float
    k0: float
    big_b: float
    tail_terms: int


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one numerical lemma check.

    With ``log_scale`` the ``value`` and ``bound`` fields are natural logs.
    """

    lemma: str
    params: dict
    value: float
    bound: float
    holds: bool
    log_scale: bool = False
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return asdict(self)


def _g_upper(gamma: float, k_max: int = 400) -> float:
    """Upper enclosure of g(gamma) = sum_k k^{5/2} gamma^k (gamma < 1/2)."""
    k = np.arange(1, k_max + 1, dtype=np.float64)
    terms = k**2.5 * gamma**k
    # beyond k_max, successive ratios are at most ((k_max+2)/(k_max+1))^{5/2} gamma
    r = ((k_max + 2) / (k_max + 1)) ** 2.5 * gamma
    if r >= 1.0:
        return math.inf
    nxt = (k_max + 1) ** 2.5 * gamma ** (k_max + 1)
    return math.fsum(terms) + nxt / (1.0 - r)


def _gamma_predicate(gamma: float) -> bool:
    return _g_upper(gamma) <= gamma + 8.0 * gamma * gamma


def zeta_three_halves_enclosure(n_terms: int) -> tuple[float, float]:
    """Bracket sum_{n>=1} n^{-3/2} by a partial sum and integral tails."""
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    partial = math.fsum(n**-1.5)
    lo = partial + 2.0 / math.sqrt(n_terms + 1)
    hi = partial + 2.0 / math.sqrt(n_terms)
    return math.nextafter(lo, 0.0), math.nextafter(hi, math.inf)


@lru_cache(maxsize=8)
def compute_constants(tail_terms: int = 10**6) -> ProofConstants:
    """Certified A, gamma_0, K_0 = -log(A gamma_0) and B = 8/A.

    g(gamma) - gamma - 8 gamma^2 = gamma^2 (2^{5/2} - 8 + sum_{k>=3} k^{5/2}
    gamma^{k-2}) and the bracket is increasing, so the predicate holds on
    the whole interval (0, gamma_0] as soon as it holds at gamma_0.
    """
    if tail_terms < 10**4:
        raise InvalidArgumentError("tail_terms must be at least 10^4")
    z_lo, z_hi = zeta_three_halves_enclosure(tail_terms)
    a_lo, a_hi = 1.0 / z_hi, 1.0 / z_lo
    lo, hi = 1e-6, 0.49
    if not _gamma_predicate(lo) or _gamma_predicate(hi):
        raise RuntimeError("gamma_0 bisection is not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _gamma_predicate(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    gamma0 = lo * (1.0 - 1e-9)
    assert _gamma_predicate(gamma0)
    k0 = math.nextafter(-math.log(a_lo * gamma0), math.inf)
    big_b = math.nextafter(8.0 / a_lo, math.inf)
    return ProofConstants(0.5 * (a_lo + a_hi), a_lo, a_hi, gamma0, k0, big_b, tail_terms)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InadmissibleParametersError(message)


def theta_plus_values(n_max: int, c_const: float, k_exp: float) -> np.ndarray:
    """Theta(0..n_max) for the terminating renewal with K(n) = C e^{-K} n^{-3/2}."""
    w = c_const * math.exp(-k_exp) * np.arange(1, n_max + 1, dtype=np.float64) ** -1.5
    th = np.zeros(n_max + 1)
    th[0] = 1.0
    for m in range(1, n_max + 1):
        th[m] = np.dot(th[:m], w[m - 1 :: -1])
    return th


def theta_plus(n_max: int, c_const: float, k_exp: float, constants: ProofConstants | None = None) -> BoundCheck:
    """Check Theta_N <= (1 + B C e^{-K}) C e^{-K} N^{-3/2} for all N <= n_max."""
    pc = constants or compute_constants()
    _require(c_const > 0, "C must be positive")
    _require(k_exp >= pc.k0 + math.log(c_const), f"K = {k_exp} below K_0 + log C = {pc.k0 + math.log(c_const)}")
    th = theta_plus_values(n_max, c_const, k_exp)[1:]
    ce = c_const * math.exp(-k_exp)
    n = np.arange(1, n_max + 1, dtype=np.float64)
    bound = (1.0 + pc.big_b * ce) * ce * n**-1.5
    ratio = th / bound
    j = int(np.argmax(ratio))
    return BoundCheck(
        "theta_plus",
        {"n_max": n_max, "C": c_const, "K": k_exp},
        float(th[j]),
        float(bound[j]),
        bool(np.all(th <= bound)),
        extra={"worst_n": j + 1, "worst_ratio": float(ratio[j])},
    )


def conv_power_bound(k_max: int, n_max: int, constants: ProofConstants | None = None) -> BoundCheck:
    """Worst ratio q^{*k}(n) n^{3/2} / (A k^{5/2}) over k <= k_max, n <= n_max.

    Truncating q at n_max does not change q^{*k}(n) for n <= n_max.
    """
    pc = constants or compute_constants()
    a = pc.a
    n = np.arange(0, n_max + 1, dtype=np.float64)
    q = np.zeros(n_max + 1)
    q[1:] = a * n[1:] ** -1.5
    qk = q.copy()
    worst, where = 0.0, (1, 1)
    for k in range(1, k_max + 1):
        if k > 1:
            qk = np.convolve(qk, q)[: n_max + 1]
        # A k^{5/2} / n^{3/2} = k^{5/2} q(n); k = 1 gives ratio 1 exactly
        ratio = qk[1:] / (q[1:] * k**2.5)
        j = int(np.argmax(ratio))
        if ratio[j] > worst:
            worst, where = float(ratio[j]), (k, j + 1)
    return BoundCheck(
        "conv_power_bound",
        {"k_max": k_max, "n_max": n_max},
        worst,
        1.0,
        worst <= 1.0,
        extra={"worst_k": where[0], "worst_n": where[1]},
    )


def xi_log_value(b: float, c_const: float, points) -> float:
    """log Xi(b, C, {t_0 < ... < t_N}) by a DP over the last visited point."""
    t = np.asarray(points, dtype=np.float64)
    n = t.size - 1
    step = math.log(c_const) + b
    x = np.empty(n + 1)
    x[0] = 0.0
    for j in range(1, n + 1):
        x[j] = step + logsumexp(x[:j] - 1.5 * np.log(t[j] - t[:j]))
    return float(x[n] - b)


def xi(b: float, c_const: float, k_exp: float, points, constants: ProofConstants | None = None) -> BoundCheck:
    """Check Xi <= (1 + B C e^{-K}) C / (t_N - t_0)^{3/2} (log scale)."""
    pc = constants or compute_constants()
    t = np.asarray(points, dtype=np.int64)
    if t.size < 2:
        raise InvalidArgumentError("need at least two points")
    _require(c_const > 0, "C must be positive")
    _require(k_exp >= pc.k0 + math.log(c_const), f"K = {k_exp} below K_0 + log C")
    gaps = np.diff(t)
    threshold = floor_exp_two_thirds(b + k_exp)
    # an integer gap exceeds e^{2(b+K)/3} iff it exceeds its floor
    _require(bool(np.all(gaps > threshold)), f"a gap is not larger than e^(2(b+K)/3) ~ {threshold}")
    log_val = xi_log_value(b, c_const, t)
    log_bound = math.log1p(pc.big_b * c_const * math.exp(-k_exp)) + math.log(c_const) - 1.5 * math.log(t[-1] - t[0])
    return BoundCheck(
        "xi",
        {"b": b, "C": c_const, "K": k_exp, "n_points": int(t.size)},
        log_val,
        log_bound,
        log_val <= log_bound + 1e-12 * max(1.0, abs(log_bound)),
        log_scale=True,
    )


def _root_weights(b: int, z_max: int, theta: float) -> np.ndarray:
    """f(x) = e^{-sqrt(x) + theta x} 1{x >= b} for x = 0..z_max."""
    x = np.arange(z_max + 1, dtype=np.float64)
    f = np.exp(-np.sqrt(x) + theta * x)
    f[:b] = 0.0
    return f


def a_mb_values(m: int, b: int, z_max: int, theta: float = 0.0) -> np.ndarray:
    """e^{theta z} A_{m,b}(z) for z = 0..z_max by m-1 direct convolutions.

    All terms are positive, so direct summation keeps a relative error of
    order z_max * eps at every z; FFT round-off would not. ``theta`` only
    shifts magnitudes away from underflow for large z.
    """
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    f = _root_weights(b, z_max, theta)
    out = np.zeros(z_max + 1)
    if m * b > z_max:
        return out
    tail = f[b:]
    # cur holds the values at z = j*b, j*b+1, ..., z_max
    cur = tail.copy()
    for j in range(2, m + 1):
        cur = np.convolve(cur, tail)[: z_max + 1 - j * b]
    out[m * b :] = cur
    return out


def a_mb(m: int, b: int, z: int, check_hypotheses: bool = True) -> BoundCheck:
    """Check A_{m,b}(z) <= e^{-sqrt(z) - (m-1) sqrt(b) / 4} by exact summation."""
    if check_hypotheses:
        _require(m >= 2, "m must be >= 2")
        _require(b >= 100, "b must be >= 100")
    params = {"m": m, "b": b, "z": z}
    bound = math.exp(-math.sqrt(z) - (m - 1) * math.sqrt(b) / 4.0)
    if z < m * b:
        return BoundCheck("a_mb", params, 0.0, bound, True, extra={"empty_sum": True})
    value = float(a_mb_values(m, b, z)[z])
    return BoundCheck("a_mb", params, value, bound, value <= bound)


def a_mb_sweep(m: int, b: int, z_lo: int, z_hi: int) -> BoundCheck:
    """Worst case of the A_{m,b} bound over z in [z_lo, z_hi]."""
    _require(m >= 2 and b >= 100, "need m >= 2 and b >= 100")
    vals = a_mb_values(m, b, z_hi)
    z = np.arange(z_lo, z_hi + 1)
    v = vals[z_lo:]
    bound = np.exp(-np.sqrt(z) - (m - 1) * math.sqrt(b) / 4.0)
    ratio = v / bound
    j = int(np.argmax(ratio))
    return BoundCheck(
        "a_mb",
        {"m": m, "b": b, "z_lo": z_lo, "z_hi": z_hi},
        float(v[j]),
        float(bound[j]),
        bool(np.all(v <= bound)),
        extra={"worst_z": int(z[j]), "worst_ratio": float(ratio[j])},
    )


def _level_weights(l_max: int) -> tuple[np.ndarray, int]:
    """Counts of l in [1, l_max] per m = floor(1.5 log l), scaled by e^{-2m/3}."""
    rng = level_ranges(l_max)
    m_top = rng[-1][0]
    w = np.zeros(m_top + 1)
    for m, lo, hi in rng:
        w[m] = math.exp(math.log(hi - lo + 1) - 2.0 * m / 3.0)
    return w, m_top


def b_nb_sufficient_condition(n: int, b: int, k_b: int) -> float:
    """-sqrt(b)/8 + 4K/3 + sqrt(2K/n) + 1 + log(2(b+K)/3); negative values
    make the lemma's proof go through."""
    return -math.sqrt(b) / 8.0 + 4.0 * k_b / 3.0 + math.sqrt(2.0 * k_b / n) + 1.0 + math.log(2.0 * (b + k_b) / 3.0)


def b_nb(
    n: int,
    b: int,
    x: int,
    cal_c: float | None = None,
    k_b: int | None = None,
    l_b: int | None = None,
    mode: str = "aggregate",
    constants: ProofConstants | None = None,
) -> BoundCheck:
    """Check B_{n,b}(x) <= e^{-2x/3 - sqrt(x) - n sqrt(b)/8} (log scale).

    K_b comes from the default formula with ``cal_c`` unless overridden;
    L_b = floor(e^{2(b+K_b)/3}) unless overridden. ``mode='brute'`` loops
    over l in [1, L_b] directly (n = 1 only) and serves as the oracle.
    """
    pc = constants or compute_constants()
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if mode not in ("aggregate", "brute"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if k_b is None:
        if cal_c is None:
            raise InvalidArgumentError("give cal_c or k_b")
        k_b = k_b_default(b, cal_c, pc.k0)
    if l_b is None:
        l_b = floor_exp_two_thirds(b + k_b)
    if mode == "brute" and (n != 1 or l_b > 10**5):
        raise InvalidArgumentError("brute mode needs n = 1 and L_b <= 10^5")
    w, m_top = _level_weights(l_b)
    # y = x + s - 2 n K with s the sum of the n levels
    y_max = x + n * m_top - 2 * n * k_b
    params = {"n": n, "b": b, "x": x, "k_b": k_b, "l_b": l_b if l_b < 2**63 else f"~e^{math.log(l_b):.6g}", "mode": mode}
    log_bound = -2.0 * x / 3.0 - math.sqrt(x) - n * math.sqrt(b) / 8.0
    cond = b_nb_sufficient_condition(n, b, k_b)
    if y_max < (n + 1) * b:
        return BoundCheck("b_nb", params, -math.inf, log_bound, True, True, {"sufficient_condition": cond})
    theta = 1.0 / (2.0 * math.sqrt(max(y_max, 1)))
    a_scaled = a_mb_values(n + 1, b, y_max, theta)
    with np.errstate(divide="ignore"):
        log_a = np.log(a_scaled)
    if mode == "aggregate":
        ws = w.copy()
        for _ in range(n - 1):
            ws = np.convolve(ws, w)
        s = np.arange(ws.size)
        y = x + s - 2 * n * k_b
        ok = (y >= (n + 1) * b) & (y <= y_max) & (ws > 0)
        with np.errstate(divide="ignore"):
            terms = np.log(ws[ok]) + log_a[y[ok]] - theta * y[ok]
        log_val = -2.0 / 3.0 * (x - 2 * n * k_b) + logsumexp(terms)
    else:
        m = floor_three_halves_log(np.arange(1, l_b + 1))
        y = x + m - 2 * k_b
        ok = y >= 2 * b
        terms = -2.0 / 3.0 * y[ok] + log_a[y[ok]] - theta * y[ok]
        log_val = logsumexp(terms)
    return BoundCheck(
        "b_nb",
        params,
        float(log_val),
        log_bound,
        bool(log_val <= log_bound),
        True,
        {"sufficient_condition": cond, "sufficient_condition_holds": cond < 0},
    )
