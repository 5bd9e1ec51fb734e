"""One renormalization step at level b.

Charges are grouped into blocks separated by gaps larger than L_b. Blocks
made of one charge of intensity exactly b ("good" charges) are erased, the
others are clustered into one charge whose intensity is given by ``phi``,
and the gaps between blocks are shortened by L_b.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._numeric import floor_exp_two_thirds, floor_three_halves_log
from .environment import Environment
from .errors import (
    EmptyRenormalizationError,
    InadmissibleParametersError,
    InvalidArgumentError,
    PreconditionError,
)
from .partition import LogWeight, charge_partition

L_B_LIMIT = 2**62


@dataclass(frozen=True)
class RenormParams:
    """Constants of the level-b map. ``c`` is the current constant C."""

    b: int
    k_b: int
    l_b: int
    c: float
    k0: float
    big_b: float
    cal_c: float

    @property
    def subset_count_ok(self) -> bool:
        """2^n - 1 <= e^{(n-1) K_b} for every block size n."""
        return self.k_b >= 2.0 * math.log(2.0)

    @property
    def dominates_constant(self) -> bool:
        return self.k_b >= math.log(2.0 * self.cal_c)

    @property
    def removing_ok(self) -> bool:
        return self.k_b >= self.k0 + math.log(self.c)

    @property
    def l_b_fits(self) -> bool:
        return self.l_b < L_B_LIMIT

    @property
    def admissible(self) -> bool:
        return self.subset_count_ok and self.dominates_constant and self.removing_ok and self.l_b_fits

    def flags(self) -> dict:
        return {
            "subset_count_ok": self.subset_count_ok,
            "dominates_constant": self.dominates_constant,
            "removing_ok": self.removing_ok,
            "l_b_fits": self.l_b_fits,
        }

    def with_c(self, c: float) -> RenormParams:
        return replace(self, c=float(c))


def k_b_default(b: int, cal_c: float, k0: float) -> int:
    """floor(K_0 + log+(2 cal_c) + 2 log b)."""
    return math.floor(k0 + max(math.log(2.0 * cal_c), 0.0) + 2.0 * math.log(b))


def renorm_constants(
    b: int,
    cal_c: float,
    k0: float,
    big_b: float = float("nan"),
    c: float | None = None,
    k_b: int | None = None,
    l_b: int | None = None,
) -> RenormParams:
    """K_b and L_b at level b. ``k_b`` and ``l_b`` override the default formulas."""
    if isinstance(b, bool) or int(b) != b or b < 1:
        raise InvalidArgumentError("level b must be a positive integer")
    if not cal_c > 0:
        raise InvalidArgumentError("cal_c must be positive")
    if not k0 > 0:
        raise InvalidArgumentError("k0 must be positive")
    b = int(b)
    kb = k_b_default(b, cal_c, k0) if k_b is None else int(k_b)
    lb = floor_exp_two_thirds(b + kb) if l_b is None else int(l_b)
    if lb < 1:
        raise InvalidArgumentError("L_b must be >= 1")
    return RenormParams(b, kb, lb, float(cal_c if c is None else c), float(k0), float(big_b), float(cal_c))


def smallest_admissible_level(cal_c: float, k0: float, big_b: float, b_max: int = 10_000) -> RenormParams:
    """First b >= 1 whose default constants pass every admissibility flag."""
    for b in range(1, b_max + 1):
        p = renorm_constants(b, cal_c, k0, big_b)
        if p.admissible:
            return p
    raise InadmissibleParametersError(f"no admissible level up to b = {b_max}")


class BlockKind(enum.Enum):
    ORIGIN = "origin"
    GOOD = "good"
    ISOLATED_HEAVY = "isolated_heavy"
    BAD = "bad"


@dataclass(frozen=True)
class Block:
    """Charges sigma..tau: internal gaps Delta_{sigma+1..tau} and intensities."""

    index: int
    sigma: int
    tau: int
    gaps: np.ndarray
    etas: np.ndarray
    kind: BlockKind

    @property
    def size(self) -> int:
        return self.tau - self.sigma + 1


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks Y_0, Y_1, ... of an environment at level b.

    ``sigma[k]`` and ``tau[k]`` are the first and last charge index of Y_k
    (charge 0 is the origin with eta_0 = 0). ``s`` lists S_1 < S_2 < ... (the
    non-good blocks with index >= 1). ``phi`` holds Phi(Y_k) for every block.
    The last block is cut by the end of the environment; ``last_complete``
    is False since the gap after it is unknown.
    """

    env: Environment = field(repr=False)
    params: RenormParams
    sigma: np.ndarray
    tau: np.ndarray
    kinds: tuple
    phi: np.ndarray
    s: np.ndarray
    last_complete: bool = False

    @property
    def n_blocks(self) -> int:
        return self.sigma.size

    @property
    def eta_hat_0(self) -> int:
        return int(self.phi[0])

    def block(self, k: int) -> Block:
        sg, tu = int(self.sigma[k]), int(self.tau[k])
        etas = np.concatenate(([0], self.env.etas))[sg : tu + 1]
        return Block(k, sg, tu, self.env.gaps[sg:tu], etas, self.kinds[k])

    @property
    def blocks(self) -> list[Block]:
        return [self.block(k) for k in range(self.n_blocks)]

    def count(self, kind: BlockKind) -> int:
        return sum(1 for x in self.kinds[1:] if x is kind)

    def delta_hat(self) -> np.ndarray:
        """Delta_{sigma_k} - L_b for k = 1, 2, ..."""
        return self.env.gaps[self.sigma[1:] - 1] - self.params.l_b

    def n_of_omega(self, n_surviving: int) -> int:
        """tau_{S_N}: last charge of the N-th surviving block."""
        if not 1 <= n_surviving <= self.s.size:
            raise PreconditionError(f"only {self.s.size} surviving blocks, asked for {n_surviving}")
        return int(self.tau[self.s[n_surviving - 1]])


def phi(gaps, etas, k_b: int) -> int:
    """Clustered intensity: sum eta - sum floor(1.5 log Delta) + 2 (n-1) K_b.

    ``etas`` has n entries and ``gaps`` the n-1 internal gaps. A singleton
    returns its intensity.
    """
    gaps = np.asarray(gaps, dtype=np.int64).reshape(-1)
    etas = np.asarray(etas, dtype=np.int64).reshape(-1)
    if gaps.size != etas.size - 1:
        raise InvalidArgumentError("a block with n charges has n-1 internal gaps")
    if etas.size == 1:
        return int(etas[0])
    return int(etas.sum() - floor_three_halves_log(gaps).sum() + 2 * (etas.size - 1) * int(k_b))


def decompose(env: Environment, params: RenormParams) -> BlockDecomposition:
    """Split the charges of ``env`` into blocks at level ``params.b``."""
    if not params.l_b_fits:
        raise InadmissibleParametersError(f"L_b = {params.l_b} does not fit in 62 bits")
    gaps, etas = env.gaps, env.etas
    n = env.n
    b, lb, kb = params.b, params.l_b, params.k_b
    if etas.min() < b:
        raise InvalidArgumentError(f"intensity {etas.min()} below level {b}")
    # sigma_j for j >= 1 are the charges k with Delta_k > L_b
    starts = np.flatnonzero(gaps > lb) + 1
    sigma = np.concatenate(([0], starts)).astype(np.int64)
    tau = np.concatenate((sigma[1:] - 1, [n])).astype(np.int64)
    size = tau - sigma + 1

    # intensities and floor-log gaps with the origin prepended at index 0
    eta_full = np.concatenate(([0], etas))
    internal = gaps <= lb
    flog = np.zeros(n + 1, dtype=np.int64)
    flog[1:][internal] = floor_three_halves_log(gaps[internal])
    # gap i sits between charges i-1 and i; block sums over charges sigma..tau
    # and over internal gaps sigma+1..tau
    eta_sum = np.add.reduceat(eta_full, sigma)
    flog_shift = flog.copy()
    flog_shift[sigma] = 0
    flog_sum = np.add.reduceat(flog_shift, sigma)
    phis = eta_sum - flog_sum + 2 * (size - 1) * kb
    phis = np.where(size == 1, eta_full[sigma], phis)

    first_eta = eta_full[sigma]
    kinds = [BlockKind.ORIGIN if tau[0] == 0 else BlockKind.BAD]
    for k in range(1, sigma.size):
        if size[k] >= 2:
            kinds.append(BlockKind.BAD)
        elif first_eta[k] == b:
            kinds.append(BlockKind.GOOD)
        else:
            kinds.append(BlockKind.ISOLATED_HEAVY)
    kinds_arr = np.array([k is not BlockKind.GOOD for k in kinds])
    kinds_arr[0] = False
    s = np.flatnonzero(kinds_arr).astype(np.int64)
    return BlockDecomposition(env, params, sigma, tau, tuple(kinds), phis.astype(np.int64), s)


def apply_T(env: Environment, params: RenormParams, drop_incomplete: bool = False) -> tuple[Environment, int]:
    """Renormalized environment and eta_hat_0.

    With ``drop_incomplete`` the block cut by the end of ``env`` is discarded,
    which keeps the output an unbiased sample of the renormalized law.
    """
    dec = decompose(env, params)
    return _apply(dec, drop_incomplete), dec.eta_hat_0


def _apply(dec: BlockDecomposition, drop_incomplete: bool = False) -> Environment:
    s = dec.s
    if drop_incomplete and s.size and s[-1] == dec.n_blocks - 1:
        s = s[:-1]
    if s.size == 0:
        raise EmptyRenormalizationError("no surviving block: every block is a good charge")
    dhat = dec.delta_hat()
    cum = np.concatenate(([0], np.cumsum(dhat)))
    new_t = cum[s]
    new_gaps = np.diff(np.concatenate(([0], new_t)))
    return Environment(new_gaps, dec.phi[s], dec.params.b + 1)


def lift_C(c: float, k_b: int, big_b: float) -> float:
    """(1 + B e^{-K_b} C) C."""
    if not c > 0:
        raise InvalidArgumentError("C must be positive")
    return (1.0 + big_b * math.exp(-k_b) * c) * c


@dataclass(frozen=True)
class ZboundCheck:
    lhs: LogWeight
    rhs: LogWeight
    n_of_omega_N: int
    n_surviving: int
    t_prime_N: int
    t_n: int
    holds: bool

    @property
    def margin(self) -> float:
        return self.rhs.logval - self.lhs.logval

    @property
    def bookkeeping_ok(self) -> bool:
        return self.n_surviving <= self.n_of_omega_N and self.t_prime_N <= self.t_n


def verify_zbound(env: Environment, params: RenormParams, n_surviving: int, rtol: float = 1e-12) -> ZboundCheck:
    """Compare log Z_{n(omega,N)}(omega, C) with eta_hat_0 + log Z_N(T_b omega, T_b C)."""
    if not params.admissible:
        bad = [k for k, v in params.flags().items() if not v]
        raise InadmissibleParametersError(f"inadmissible level-{params.b} constants: {', '.join(bad)}")
    if not 0 < params.c <= 2.0 * params.cal_c * (1 + 1e-15):
        raise PreconditionError(f"C = {params.c} outside (0, 2 cal_c]")
    dec = decompose(env, params)
    n_omega = dec.n_of_omega(n_surviving)
    env_new = _apply(dec)
    lhs = charge_partition(env, n_omega, params.c)
    c_new = lift_C(params.c, params.k_b, params.big_b)
    rhs = LogWeight(dec.eta_hat_0 + charge_partition(env_new, n_surviving, c_new).logval)
    t_prime = int(env_new.t[n_surviving])
    t_n = int(env.t[n_omega])
    holds = lhs.logval <= rhs.logval + rtol * max(1.0, abs(rhs.logval))
    return ZboundCheck(lhs, rhs, n_omega, int(n_surviving), t_prime, t_n, bool(holds))


@dataclass(frozen=True)
class RenormResult:
    env: Environment
    decomposition: BlockDecomposition

    def side_record(self) -> dict:
        d = self.decomposition
        p = d.params
        return {
            "b": p.b,
            "k_b": p.k_b,
            "l_b": p.l_b,
            "eta_hat_0": d.eta_hat_0,
            "n_blocks_good": d.count(BlockKind.GOOD),
            "n_blocks_bad": d.count(BlockKind.BAD),
            "n_isolated_heavy": d.count(BlockKind.ISOLATED_HEAVY),
        }


def renormalize(env: Environment, params: RenormParams) -> RenormResult:
    dec = decompose(env, params)
    return RenormResult(_apply(dec), dec)
