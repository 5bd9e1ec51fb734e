import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pinlab.environment import (
    ChargeLaw,
    Environment,
    even_sublattice,
    from_sites,
    mu_beta,
    read_env,
    sample_environment,
    to_sites,
    write_env,
)
from pinlab.errors import DegenerateEnvironmentError, InvalidArgumentError

envs = st.integers(1, 30).flatmap(
    lambda n: st.builds(
        Environment,
        st.lists(st.integers(1, 50), min_size=n, max_size=n),
        st.lists(st.integers(1, 20), min_size=n, max_size=n),
    )
)


def test_mu_beta_two_atoms():
    law = mu_beta(6, 0.7)
    assert law(6) == pytest.approx(math.exp(-4.2), rel=1e-15)
    assert law(0) + law(6) == pytest.approx(1.0, abs=1e-15)
    assert law(7) == 0.0 and law.c_tilde_b == 0.0
    assert law.mean() == pytest.approx(6 * math.exp(-4.2))
    with pytest.raises(InvalidArgumentError):
        mu_beta(0, 0.5)
    with pytest.raises(InvalidArgumentError):
        mu_beta(3, -1.0)


def test_charge_law_validation():
    with pytest.raises(InvalidArgumentError):
        ChargeLaw(0.5, np.array([0.2]), 3)
    with pytest.raises(InvalidArgumentError):
        ChargeLaw(1.1, np.array([-0.1]), 3)
    law = ChargeLaw.from_atoms(4, [0.1, 0.05], lost_mass=0.01)
    assert law.mass0 == pytest.approx(0.84)
    assert law.positive_mass == pytest.approx(0.16)
    assert law.x_max == 5
    np.testing.assert_allclose(law.conditional(), [2 / 3, 1 / 3])


def test_environment_basics():
    env = Environment([3, 1, 4], [5, 6, 5], level=5)
    np.testing.assert_array_equal(env.t, [0, 3, 4, 8])
    assert env.n == len(env) == 3 and env.span == 8
    assert env.prefix(2) == Environment([3, 1], [5, 6])
    assert hash(env) == hash(Environment([3, 1, 4], [5, 6, 5]))
    with pytest.raises(DegenerateEnvironmentError):
        Environment([], [])
    with pytest.raises(InvalidArgumentError):
        Environment([0, 2], [1, 1])
    with pytest.raises(InvalidArgumentError):
        env.prefix(4)


@settings(max_examples=100, deadline=None)
@given(envs)
def test_sites_round_trip(env):
    sites = to_sites(env)
    assert sites.size == env.span
    assert np.count_nonzero(sites) == env.n
    assert from_sites(sites) == env


def test_to_sites_horizon():
    env = Environment([2, 3], [4, 5])
    np.testing.assert_array_equal(to_sites(env, 3), [0, 4, 0])
    with pytest.raises(InvalidArgumentError):
        to_sites(env, 6)
    with pytest.raises(DegenerateEnvironmentError):
        from_sites([0, 0, 0])


@settings(max_examples=30, deadline=None)
@given(envs)
def test_file_round_trip(tmp_path_factory, env):
    path = tmp_path_factory.mktemp("env") / "e.txt"
    env = Environment(env.gaps, env.etas, level=int(env.etas.min()))
    write_env(env, path)
    back = read_env(path)
    assert back == env and back.level == env.level


def test_read_env_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1,2\n")
    with pytest.raises(InvalidArgumentError, match="header"):
        read_env(p)
    p.write_text("#pinlab-env v1 level=3\n4,5\nx,y\n")
    with pytest.raises(InvalidArgumentError, match=":3:"):
        read_env(p)
    p.write_text("#pinlab-env v1 level=3\n4,2\n")
    with pytest.raises(InvalidArgumentError, match="below level"):
        read_env(p)


def test_sampling_is_deterministic():
    law = ChargeLaw.from_atoms(3, [0.05, 0.03, 0.02])
    a = sample_environment(law, 500, 11)
    b = sample_environment(law, 500, 11)
    c = sample_environment(law, 500, 12)
    assert a == b and a != c


def test_sampled_intensities_chi_square():
    law = ChargeLaw.from_atoms(3, [0.05, 0.03, 0.02])
    env = sample_environment(law, 20_000, 5)
    counts = np.bincount(env.etas - 3, minlength=3)
    expected = law.conditional() * env.n
    assert stats.chisquare(counts, expected).pvalue > 1e-4


def test_sampled_gaps_geometric():
    law = mu_beta(4, 0.5)
    env = sample_environment(law, 20_000, 9)
    c = law.c_b
    # bin gaps into [1], [2], ..., [k], [k+1, inf)
    k = 20
    obs = np.bincount(np.minimum(env.gaps, k + 1), minlength=k + 2)[1:]
    probs = [(1 - c) ** (j - 1) * c for j in range(1, k + 1)]
    probs.append(1 - sum(probs))
    assert stats.chisquare(obs, np.array(probs) * env.n).pvalue > 1e-4
    assert env.gaps.mean() == pytest.approx(1 / c, rel=0.05)


def test_sampling_errors():
    with pytest.raises(InvalidArgumentError):
        sample_environment(ChargeLaw(1.0, np.array([0.0]), 2), 5, 0)
    with pytest.raises(InvalidArgumentError):
        sample_environment(mu_beta(2, 0.1), 0, 0)


def test_even_sublattice():
    env = Environment([2, 1, 3, 2], [5, 6, 7, 8])  # t = 2, 3, 6, 8
    ev = even_sublattice(env)
    np.testing.assert_array_equal(ev.t, [0, 2, 6, 8])
    np.testing.assert_array_equal(ev.etas, [5, 7, 8])
    with pytest.raises(DegenerateEnvironmentError):
        even_sublattice(Environment([1, 2], [1, 1]))
