"""Charge laws and charge environments.

An environment is stored in run-length form: gaps Delta_k between
consecutive positive charges and their integer intensities eta_k. The site
sequence omega_1..omega_N and the locations t_k are derived views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._numeric import as_generator
from .errors import DegenerateEnvironmentError, InvalidArgumentError

ENV_MAGIC = "#pinlab-env v1"


@dataclass(frozen=True)
class ChargeLaw:
    """Law on {0} U {level, level+1, ..., x_max}.

    ``atoms[i]`` is mu(level + i). ``lost_mass`` is probability that was
    pushed beyond ``x_max`` by truncation; it counts as positive charge of
    unknown (large) intensity.
    """

    mass0: float
    atoms: np.ndarray
    level: int
    lost_mass: float = 0.0

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        if atoms.ndim != 1:
            raise InvalidArgumentError("atoms must be one-dimensional")
        if np.any(atoms < 0):
            raise InvalidArgumentError("negative atom")
        if int(self.level) != self.level or self.level < 1:
            raise InvalidArgumentError("level must be a positive integer")
        total = math.fsum([self.mass0, math.fsum(atoms), self.lost_mass])
        if abs(total - 1.0) > 1e-12:
            raise InvalidArgumentError(f"masses sum to {total!r}, not 1")
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "level", int(self.level))

    @property
    def x_max(self) -> int:
        return self.level + self.atoms.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.level, self.x_max + 1)

    @property
    def c_b(self) -> float:
        """Mass of the known positive atoms, mu([b, x_max])."""
        return math.fsum(self.atoms)

    @property
    def c_tilde_b(self) -> float:
        """mu([b+1, x_max])."""
        return math.fsum(self.atoms[1:])

    @property
    def positive_mass(self) -> float:
        """1 - mu(0), lost mass included."""
        return math.fsum(self.atoms) + self.lost_mass

    def __call__(self, x: int) -> float:
        if x == 0:
            return self.mass0
        i = x - self.level
        return float(self.atoms[i]) if 0 <= i < self.atoms.size else 0.0

    def mean(self) -> float:
        """E omega_1 over the known atoms (lost mass excluded)."""
        return math.fsum(self.support * self.atoms)

    def conditional(self) -> np.ndarray:
        """mu(x)/c_b on the support: the law of one positive charge."""
        return self.atoms / self.c_b

    @classmethod
    def from_atoms(cls, level: int, atoms, lost_mass: float = 0.0) -> ChargeLaw:
        atoms = np.asarray(atoms, dtype=np.float64)
        return cls(1.0 - math.fsum(atoms) - lost_mass, atoms, level, lost_mass)


def mu_beta(beta: int, c: float) -> ChargeLaw:
    """Two-atom law (1 - e^{-c beta}) delta_0 + e^{-c beta} delta_beta."""
    if isinstance(beta, bool) or int(beta) != beta or beta < 1:
        raise InvalidArgumentError("beta must be a positive integer")
    if not c > 0:
        raise InvalidArgumentError("c must be positive")
    mass = math.exp(-c * beta)
    return ChargeLaw(-math.expm1(-c * beta), np.array([mass]), int(beta))


@dataclass(frozen=True)
class Environment:
    """Positive charges in run-length form.

    ``gaps[k-1]`` = Delta_k = t_k - t_{k-1} (t_0 = 0) and ``etas[k-1]`` = eta_k.
    """

    gaps: np.ndarray
    etas: np.ndarray
    level: int | None = None

    def __post_init__(self):
        gaps = np.array(self.gaps, dtype=np.int64).reshape(-1)
        etas = np.array(self.etas, dtype=np.int64).reshape(-1)
        if gaps.size == 0:
            raise DegenerateEnvironmentError("environment has no positive charge")
        if gaps.shape != etas.shape:
            raise InvalidArgumentError("gaps and etas differ in length")
        if gaps.min() < 1:
            raise InvalidArgumentError("gaps must be >= 1")
        if etas.min() < 1:
            raise InvalidArgumentError("intensities must be positive integers")
        gaps.flags.writeable = False
        etas.flags.writeable = False
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "etas", etas)

    def __len__(self) -> int:
        return self.gaps.size

    @property
    def n(self) -> int:
        return self.gaps.size

    @property
    def t(self) -> np.ndarray:
        """Locations t_0 = 0, t_1, ..., t_n."""
        return np.concatenate(([0], np.cumsum(self.gaps)))

    @property
    def span(self) -> int:
        return int(self.gaps.sum())

    def prefix(self, n: int) -> Environment:
        if not 1 <= n <= self.n:
            raise InvalidArgumentError(f"prefix length {n} outside 1..{self.n}")
        return Environment(self.gaps[:n], self.etas[:n], self.level)

    def __eq__(self, other):
        if not isinstance(other, Environment):
            return NotImplemented
        return np.array_equal(self.gaps, other.gaps) and np.array_equal(self.etas, other.etas)

    def __hash__(self):
        return hash((self.gaps.tobytes(), self.etas.tobytes()))


def sample_environment(law: ChargeLaw, n_charges: int, seed) -> Environment:
    """n_charges i.i.d. (gap, intensity) pairs drawn from ``law``.

    Gaps are geometric on {1, 2, ...} with parameter c_b; intensities follow
    mu(.)/c_b. ``seed`` is an int or a numpy Generator (one stream per replica).
    """
    c = law.c_b
    if not c > 0:
        raise InvalidArgumentError("law has no positive charges (c_b = 0)")
    if n_charges < 1:
        raise InvalidArgumentError("need at least one charge")
    rng = as_generator(seed)
    gaps = rng.geometric(min(c, 1.0), size=n_charges)
    if law.atoms.size == 1:
        etas = np.full(n_charges, law.level, dtype=np.int64)
    else:
        etas = law.level + rng.choice(law.atoms.size, size=n_charges, p=law.conditional())
    return Environment(gaps, etas, law.level)


def to_sites(env: Environment, horizon: int | None = None) -> np.ndarray:
    """omega_1..omega_N with omega_{t_k} = eta_k and zeros elsewhere."""
    t = env.t
    n_sites = int(t[-1]) if horizon is None else int(horizon)
    if n_sites > t[-1]:
        raise InvalidArgumentError(f"horizon {n_sites} exceeds the last charge at {t[-1]}")
    if n_sites < 0:
        raise InvalidArgumentError("negative horizon")
    sites = np.zeros(n_sites, dtype=np.int64)
    keep = t[1:] <= n_sites
    sites[t[1:][keep] - 1] = env.etas[keep]
    return sites


def from_sites(sites, level: int | None = None) -> Environment:
    """Inverse of :func:`to_sites` on the span up to the last positive charge."""
    sites = np.asarray(sites)
    pos = np.flatnonzero(sites > 0)
    if pos.size == 0:
        raise DegenerateEnvironmentError("all-zero site sequence")
    if np.any(sites < 0):
        raise InvalidArgumentError("negative charge")
    t = pos + 1
    gaps = np.diff(np.concatenate(([0], t)))
    return Environment(gaps, sites[pos], level)


def write_env(env: Environment, path) -> None:
    level = env.level if env.level is not None else int(env.etas.min())
    lines = [f"{ENV_MAGIC} level={level}"]
    lines += [f"{d},{e}" for d, e in zip(env.gaps.tolist(), env.etas.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_env(path) -> Environment:
    """Load and validate an environment file."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(ENV_MAGIC):
        raise InvalidArgumentError(f"{path}: missing '{ENV_MAGIC}' header")
    try:
        level = int(text[0].split("level=")[1])
    except (IndexError, ValueError) as exc:
        raise InvalidArgumentError(f"{path}: bad header {text[0]!r}") from exc
    gaps, etas = [], []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        try:
            d, e = line.split(",")
            gaps.append(int(d))
            etas.append(int(e))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'gap,eta', got {line!r}") from exc
    env = Environment(gaps, etas, level)
    if env.etas.min() < level:
        raise InvalidArgumentError(f"{path}: intensity below level {level}")
    return env


def even_sublattice(env: Environment) -> Environment:
    """Keep only the charges sitting on even sites (locations xi_l of the
    hit-every-charge strategy for the simple random walk)."""
    t = env.t[1:]
    keep = t % 2 == 0
    if not keep.any():
        raise DegenerateEnvironmentError("no charge on an even site")
    tk = t[keep]
    return Environment(np.diff(np.concatenate(([0], tk))), env.etas[keep], env.level)
