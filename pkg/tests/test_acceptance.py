"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test prints one PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import math
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_charge_log_partition, brute_exact_log_partition
from pinlab.bounds import a_mb_values, conv_power_bound, theta_plus, xi, xi_log_value
from pinlab.environment import ChargeLaw, Environment, sample_environment
from pinlab.errors import EmptyRenormalizationError
from pinlab.flow import _step, smallness_condition
from pinlab.partition import charge_partition, exact_partition, free_energy_estimate
from pinlab.renewal import (
    annealed_critical_p,
    annealed_m,
    homogeneous_pinning_free_energy,
    power_law_law,
    srw_first_return_law,
)
from pinlab.renorm import k_b_default, renormalize, smallest_admissible_level, verify_zbound
from pinlab.scan import two_atom_law


def record(number, title, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}; {detail}; {elapsed:.1f}s (limit {limit:g}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_dp_vs_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    laws = [srw_first_return_law(64), power_law_law(0.5, 0.45, 64)]
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(1, 13))
        if i % 2 == 0:
            sites = rng.choice([0.0, 0.0, 0.0, 1.5, 3.0], size=n)
            k = laws[(i // 2) % 2]
            got = exact_partition(sites, k).logval
            ref = brute_exact_log_partition(sites, k)
        else:
            env = Environment(rng.integers(1, 40, n), rng.integers(1, 8, n))
            c = float(rng.uniform(0.2, 3.0))
            got = charge_partition(env, n, c).logval
            ref = brute_charge_log_partition(env.t, env.etas, c)
        if math.isinf(ref):
            assert got == ref
            continue
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    elapsed = time.perf_counter() - t0
    record(1, "DP vs enumeration on 200 instances", worst <= 1e-10, f"worst rel err {worst:.2e}", elapsed, 10)


def test_criterion_02_srw_first_return():
    t0 = time.perf_counter()
    k = srw_first_return_law(10_000)
    exact = True
    for n in range(1, 9):
        length = 2 * n
        steps = np.array(np.meshgrid(*[[-1, 1]] * length, indexing="ij")).reshape(length, -1).T
        s = np.cumsum(steps, axis=1)
        count = int((np.all(s[:, :-1] > 0, axis=1) & (s[:, -1] == 0)).sum())
        exact &= k(2 * n) == count / 4**n
    partial = math.fsum(k.probs[: 2 * 5000 + 1])
    elapsed = time.perf_counter() - t0
    ok = exact and abs(partial - 0.5) <= 1e-2
    record(2, "SRW first-return law", ok, f"enumeration exact={exact}, partial sum {partial:.6f}", elapsed, 5)


def test_criterion_03_annealed_solver():
    t0 = time.perf_counter()
    k = srw_first_return_law()
    worst_root, ok = 0.0, True
    for beta in range(1, 9):
        pa = annealed_critical_p(beta)

        def f(p):
            return homogeneous_pinning_free_energy(k, math.log(annealed_m(beta, p)))

        ok &= f(pa) == 0.0 and f(1.05 * pa) > 0.0
        lo, hi = 0.5 * pa, 2.0 * pa
        while hi - lo > 1e-12 * pa:
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if f(mid) > 0.0 else (mid, hi)
        worst_root = max(worst_root, abs(0.5 * (lo + hi) - pa) / pa)
    elapsed = time.perf_counter() - t0
    ok &= worst_root <= 1e-8
    record(3, "annealed root at p^a(beta), beta=1..8", ok, f"worst relative root error {worst_root:.2e}", elapsed, 5)


def test_criterion_04_renewal_theta_and_conv_power(constants, cal_c):
    t0 = time.perf_counter()
    pairs = []
    for c in (0.5, 1.0, cal_c, 1.5 * cal_c, 2.0 * cal_c):
        for dk in (0.0, 2.0):
            pairs.append((c, constants.k0 + math.log(c) + dk))
    checks = [theta_plus(10_000, c, kk, constants) for c, kk in pairs]
    worst_theta = max(ch.extra["worst_ratio"] for ch in checks)
    conv = conv_power_bound(64, 4096, constants)
    elapsed = time.perf_counter() - t0
    ok = all(ch.holds for ch in checks) and conv.holds
    detail = f"theta worst ratio {worst_theta:.4f} over 10 pairs, conv worst ratio {conv.value:.4f}"
    record(4, "Theta_N bound and convolution powers", ok, detail, elapsed, 60)


def test_criterion_05_xi(constants, cal_c):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in range(1, 15):
        gaps = rng.integers(1, 50, n)
        pts = np.concatenate(([0], np.cumsum(gaps)))
        b, c = float(rng.integers(1, 6)), float(rng.uniform(0.3, 3.0))
        ref = brute_charge_log_partition(pts, [b] * n, c) - b
        worst = max(worst, abs(xi_log_value(b, c, pts) - ref) / max(abs(ref), 1.0))
    held = 0
    for _ in range(100):
        b = int(rng.integers(1, 8))
        c = float(rng.uniform(0.1, 2.0 * cal_c))
        k = constants.k0 + math.log(c) + float(rng.uniform(0.0, 3.0))
        thr = math.floor(math.exp(2.0 * (b + k) / 3.0))
        gaps = thr + 1 + rng.integers(0, 4 * thr, int(rng.integers(1, 40)))
        held += xi(b, c, k, np.concatenate(([0], np.cumsum(gaps))), constants).holds
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and held == 100
    record(5, "Xi DP and bound", ok, f"DP worst rel err {worst:.2e}, bound holds on {held}/100", elapsed, 60)


def test_criterion_06_a_mb():
    t0 = time.perf_counter()
    z2 = np.arange(200, 2001)
    r2 = a_mb_values(2, 100, 2000)[z2] / np.exp(-np.sqrt(z2) - 2.5)
    z3 = np.arange(300, 1201)
    r3 = a_mb_values(3, 100, 1200)[z3] / np.exp(-np.sqrt(z3) - 5.0)
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(r2 <= 1.0) and np.all(r3 <= 1.0))
    detail = (
        f"A_2,100 worst ratio {r2.max():.4f} at z={z2[r2.argmax()]} ({int((r2 > 1).sum())} z fail), "
        f"A_3,100 worst ratio {r3.max():.4f}"
    )
    record(6, "A_{m,b} bound by exact summation", ok, detail, elapsed, 120)


def test_criterion_07_zbound(constants, cal_c):
    t0 = time.perf_counter()
    p = smallest_admissible_level(cal_c, constants.k0, constants.big_b)
    rng = np.random.default_rng(7)
    checked, violations, empty = 0, 0, 0
    while checked < 1000:
        c = math.exp(rng.uniform(math.log(0.2), math.log(5.0))) / p.l_b
        env = sample_environment(ChargeLaw.from_atoms(p.b, [0.6 * c, 0.3 * c, 0.1 * c]), 150, rng)
        try:
            n_new = renormalize(env, p).env.n
        except EmptyRenormalizationError:
            empty += 1
            continue
        chk = verify_zbound(env, p, int(rng.integers(1, n_new + 1)))
        violations += not (chk.holds and chk.bookkeeping_ok)
        checked += 1
    elapsed = time.perf_counter() - t0
    detail = f"b={p.b} K={p.k_b} L={p.l_b}: {violations} violations in {checked} envs ({empty} empty skipped)"
    record(7, "Zbound on sampled environments", violations == 0, detail, elapsed, 600)


def test_criterion_08_law_recursion_vs_monte_carlo(constants, cal_c):
    t0 = time.perf_counter()
    p = smallest_admissible_level(cal_c, constants.k0, constants.big_b)
    mu = ChargeLaw.from_atoms(p.b, [0.006, 0.003, 0.001])
    new, rec = _step(mu, p, 1500, 1e-14)
    rng = np.random.default_rng(8)
    counts = np.zeros(new.x_max + 1)
    sites = n_surv = 0
    while n_surv < 100_000:
        env = renormalize(sample_environment(mu, 100_000, rng), p).env
        etas = env.etas[env.etas <= new.x_max]
        counts += np.bincount(etas, minlength=new.x_max + 1)
        sites += env.span
        n_surv += env.n
    emp = counts / sites
    emp[0] = 1.0 - n_surv / sites
    model = np.array([new(x) for x in range(new.x_max + 1)])
    tv = 0.5 * (np.abs(emp - model).sum() + new.lost_mass)
    elapsed = time.perf_counter() - t0
    ok = tv < 0.01 and abs(rec.mass_defect) <= 1e-9
    detail = f"TV {tv:.2e} over {n_surv} survivors, |mu(0) - closed form| {abs(rec.mass_defect):.1e}"
    record(8, "one-site law of T_b(omega) vs recursion", ok, detail, elapsed, 300)


def test_criterion_09_constant_flow(constants, cal_c):
    t0 = time.perf_counter()
    beta = next(b for b in range(1, 1000) if smallness_condition(b, constants.k0, constants.big_b) <= math.log(2))
    getcontext().prec = 60
    c = Decimal(cal_c)
    big_b = Decimal(constants.big_b)
    worst = c
    for i in range(50):
        k = k_b_default(beta + i, cal_c, constants.k0)
        c = (1 + big_b * Decimal(-k).exp() * c) * c
        worst = max(worst, c)
    elapsed = time.perf_counter() - t0
    ok = worst <= 2 * Decimal(cal_c)
    record(9, f"C_b <= 2 cal_c over 50 levels from beta={beta}", ok, f"max C_b / cal_c = {worst / Decimal(cal_c):.6f}", elapsed, 1)


@pytest.mark.slow
def test_criterion_10_phase_bracketing(cal_c):
    t0 = time.perf_counter()
    beta = 6
    loc = free_energy_estimate(two_atom_law(beta, math.exp(-0.55 * beta)), cal_c, 20_000, 32, 610)
    deloc = free_energy_estimate(two_atom_law(beta, annealed_critical_p(beta) / 2), cal_c, 20_000, 32, 611)
    elapsed = time.perf_counter() - t0
    ok_loc = loc.value > 3 * loc.stderr
    ok_deloc = abs(deloc.value) <= 3 * deloc.stderr
    detail = (
        f"c=0.55: F={loc.value:.4g} ({loc.value / loc.stderr:.0f} stderr, {'ok' if ok_loc else 'bad'}); "
        f"p^a/2: F={deloc.value:.3g} ({deloc.value / deloc.stderr:.1f} stderr, {'ok' if ok_deloc else 'bad'})"
    )
    record(10, "phase bracketing at beta=6", ok_loc and ok_deloc, detail, elapsed, 1800)
