import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinlab.errors import InvalidArgumentError
from pinlab.renewal import (
    InterArrivalLaw,
    annealed_critical_p,
    annealed_m,
    asymptotic_cal_c,
    homogeneous_pinning_free_energy,
    power_law_law,
    renewal_function,
    srw_first_return_law,
)

from oracles import compositions


def positive_excursions(length):
    """Count +-1 paths of the given length that stay > 0 and end at 0."""
    steps = np.array(np.meshgrid(*[[-1, 1]] * length, indexing="ij")).reshape(length, -1).T
    s = np.cumsum(steps, axis=1)
    ok = np.all(s[:, :-1] > 0, axis=1) & (s[:, -1] == 0)
    return int(ok.sum())


@pytest.mark.parametrize("n", range(1, 9))
def test_srw_law_matches_path_enumeration(srw, n):
    assert srw(2 * n) == positive_excursions(2 * n) / 4**n
    assert srw(2 * n - 1) == 0.0


def test_srw_small_values_and_mass(srw):
    assert srw(2) == 0.25 and srw(4) == 0.0625 and srw(6) == 0.03125
    assert math.isclose(srw.delta + srw.tail_mass, 0.5, rel_tol=1e-14)
    # tail of the first-return law decays like n^{-1/2}
    assert 0.0 < srw.tail_mass < 0.01
    assert srw.tail_constant_ratio(2**16) == pytest.approx(1.0, abs=1e-4)


def test_srw_rejects_odd_horizon():
    with pytest.raises(InvalidArgumentError):
        srw_first_return_law(11)


def test_renewal_function_matches_composition_sum(srw_small, srw_u):
    for n in range(1, 15):
        brute = sum(math.prod(srw_small(p) for p in parts) for parts in compositions(n))
        assert srw_u.u[n] == pytest.approx(brute, rel=1e-13, abs=1e-300)


def test_srw_renewal_closed_form(srw_u):
    # U(2n) for the positive-excursion renewal equals P(walk at 0 at 2n, no
    # negative excursion) = Catalan-type closed form via generating functions:
    # sum_n U(2n) s^{2n} = 2 / (1 + sqrt(1 - s^2))
    s = 0.3
    n = np.arange(0, srw_u.n_max + 1, 2)
    gf = float(np.sum(srw_u.u[n] * s ** n))
    assert gf == pytest.approx(2.0 / (1.0 + math.sqrt(1.0 - s * s)), rel=1e-13)


def test_cal_c_below_asymptotic_limit(srw, srw_u):
    lim = asymptotic_cal_c(srw)
    assert srw_u.cal_c <= lim
    assert lim == pytest.approx(2**1.5 / math.sqrt(math.pi), rel=1e-12)
    # U(n) n^{3/2} increases on the even lattice, so the max is at the horizon
    assert srw_u.argmax == srw_u.n_max


def test_power_law_law_normalization():
    k = power_law_law(0.5, 0.4, 1000)
    assert k.delta == pytest.approx(0.4, rel=1e-14)
    assert k(7) / k(3) == pytest.approx((3 / 7) ** 1.5)
    with pytest.raises(InvalidArgumentError):
        power_law_law(0.5, 1.0, 10)


def test_law_validation():
    with pytest.raises(InvalidArgumentError):
        InterArrivalLaw(np.array([0.1, 0.5]), 0.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        InterArrivalLaw(np.array([0.0, 0.7, 0.6]), 0.5, 1.0)


def test_csv_round_trip(tmp_path, srw_small, srw_u):
    srw_small.to_csv(tmp_path / "k.csv")
    back = InterArrivalLaw.from_csv(tmp_path / "k.csv")
    np.testing.assert_array_equal(back.probs, srw_small.probs)
    srw_u.to_csv(tmp_path / "u.csv")


@pytest.mark.parametrize("h", [0.7, 1.0, 2.0, 4.0])
def test_homogeneous_free_energy_closed_form(srw, h):
    # SRW: sum_n K(n) s^n = (1 - sqrt(1 - s^2)) / 2
    closed = -0.5 * math.log(1.0 - (1.0 - 2.0 * math.exp(-h)) ** 2)
    # near criticality the horizon tail is modelled, so compare in absolute terms
    assert homogeneous_pinning_free_energy(srw, h) == pytest.approx(closed, rel=1e-8, abs=1e-10)


def test_homogeneous_free_energy_zero_below_threshold(srw):
    assert homogeneous_pinning_free_energy(srw, math.log(2.0)) == 0.0
    assert homogeneous_pinning_free_energy(srw, -3.0) == 0.0
    with pytest.raises(OverflowError):
        homogeneous_pinning_free_energy(srw, math.inf)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.0, 3.0))
def test_homogeneous_free_energy_monotone(h, dh):
    k = srw_first_return_law(2**12)
    assert homogeneous_pinning_free_energy(k, h + dh) >= homogeneous_pinning_free_energy(k, h)


def test_annealed_point():
    for beta in range(1, 9):
        p = annealed_critical_p(beta)
        assert annealed_m(beta, p) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(InvalidArgumentError):
        annealed_critical_p(0.0)
