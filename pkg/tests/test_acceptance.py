"""Acceptance suite: one pass/fail line per criterion, at full size.

Run alone with ``pytest tests/test_acceptance.py -v`` (about 15 minutes on
one core) or as a script with ``python3 tests/test_acceptance.py``.  Lines
are printed in the pytest terminal summary.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from adaptive_icic.coordinator import (bstar_bits, csi_cost, evaluate, no_icic_profile,
                                       select_joint, static_icic_profile)
from adaptive_icic.experiments import ExperimentConfig, compare_3cell_samples, placement_budgets
from adaptive_icic.network import build_scenario, db_to_linear
from adaptive_icic.profiles import FeedbackConfig, two_cell_profiles
from adaptive_icic.rates import rate_bf, rate_i2, rate_i3, residual_kappa, user_rate
from adaptive_icic.simulator import (mc_profile_rates, sample_interference_power,
                                     sample_signal_power, sample_zf_leakage)
from adaptive_icic.validation import mc_compare, random_geometries, special_function_suite

NT, ALPHA = 4, 3.7
PLACEMENTS = 2000
SEED = 2024


def record(criterion, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] C{criterion} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


# --------------------------------------------------------------------------
# 1. special functions against quadrature
# --------------------------------------------------------------------------

def test_c1_special_functions():
    t0 = time.perf_counter()
    checks = special_function_suite(200, seed=SEED, rtol=1e-8)
    elapsed = time.perf_counter() - t0
    ok = all(c.passed for c in checks)
    detail = ", ".join(f"{c.name.split()[0]} {c.detail.split()[3]}" for c in checks)
    record(1, "closed forms vs quadrature, 200 sets, rel 1e-8", ok, f"max rel err {detail}")
    record(1, "runtime < 60 s", elapsed < 60, f"{elapsed:.1f} s")
    assert ok and elapsed < 60


# --------------------------------------------------------------------------
# 2. closed form vs Monte Carlo
# --------------------------------------------------------------------------

def test_c2_closed_form_vs_monte_carlo():
    t0 = time.perf_counter()
    geos = random_geometries(25, 25, SEED, nt=NT, alpha=ALPHA)
    res = mc_compare(geos, 1_000_000, SEED, level=0.99)
    elapsed = time.perf_counter() - t0
    n = len(res)
    inside = sum(r[5] for r in res)
    worst = max(abs(r[3] - r[4].mean) / r[4].half_width(0.99) for r in res)
    literal = inside == n
    record(2, "every rate inside the 99% MC CI (50 geometries, 1e6 trials)", literal,
           f"{inside}/{n} inside; worst |cf - mc| = {worst:.2f} x CI half width")
    # misses expected by chance alone are Binomial(n, 0.01)
    p_cov = stats.binomtest(n - inside, n, 0.01, alternative="greater").pvalue
    record(2, "coverage consistent with 99% (binomial test)", p_cov > 0.01,
           f"{n - inside} misses, p = {p_cov:.3f}")
    bonf = all(r[4].contains(r[3], 1 - 0.01 / n) for r in res)
    record(2, "every rate inside the Bonferroni-corrected 99% CI", bonf,
           f"level 1 - 0.01/{n}")
    record(2, "runtime < 20 min", elapsed < 1200, f"{elapsed / 60:.1f} min")
    assert literal and elapsed < 1200


# --------------------------------------------------------------------------
# 3. gain distributions
# --------------------------------------------------------------------------

def test_c3_distributions():
    n = 1_000_000
    rng = np.random.default_rng(SEED)
    ok = True
    for m in range(NT):
        d = stats.kstest(sample_signal_power(NT, m, n, rng), stats.gamma(NT - m).cdf).statistic
        ok &= record(3, f"signal power with {m} ZF victims ~ Gamma({NT - m})", d < 0.002,
                     f"KS {d:.5f} (< 0.002)")
    for m in (0, 1):
        d = stats.kstest(sample_interference_power(NT, m, n, rng), stats.expon().cdf).statistic
        ok &= record(3, f"uncanceled interference ({m} victims) ~ Exp(1)", d < 0.002,
                     f"KS {d:.5f} (< 0.002)")
    assert ok


# --------------------------------------------------------------------------
# 4. limited feedback
# --------------------------------------------------------------------------

def test_c4_rvq_residual_interference():
    ok = True
    for b in (4, 8, 10, 14):
        x = sample_zf_leakage(NT, b, 1_000_000, np.random.default_rng(SEED + b))
        k = residual_kappa(b, NT)
        err = x.mean() / k - 1
        ok &= record(4, f"ZF leakage mean, B={b}, within 2% of 2^(-B/(Nt-1))",
                     abs(err) <= 0.02, f"mean {x.mean():.5g} vs {k:.5g} ({100 * err:+.1f}%)")
    assert ok


def test_c4_theorem3_vs_monte_carlo():
    fb = FeedbackConfig.uniform(2, 10, 10)
    worst = 0.0
    for x2 in np.round(np.arange(0.05, 1.0, 0.1), 10):
        scen, b = build_scenario("two_cell", (-0.1, x2), 10.0, ALPHA, NT)
        profs = two_cell_profiles()
        mc = mc_profile_rates(scen, b, profs, 100_000,
                              np.random.SeedSequence(SEED, spawn_key=(int(x2 * 1e3),)), fb)
        for p in profs:
            for u in range(2):
                worst = max(worst, abs(user_rate(p, b, u, NT, fb) / mc[p][u].mean - 1))
    ok = record(4, "LFB approximation within 5% of RVQ Monte Carlo (B=10, 2-cell sweep)",
                worst <= 0.05, f"worst relative gap {100 * worst:.2f}%")
    assert ok


# --------------------------------------------------------------------------
# 5. headline numbers
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig(experiment="compare3", placements=PLACEMENTS, seed=SEED,
                            nt=NT, alpha=ALPHA)


@pytest.fixture(scope="module")
def headline(cfg):
    return compare_3cell_samples(cfg, 15.0)


def test_c5_headline_gains(headline):
    # throughput is per user; edge throughput is the 5th percentile of user rates
    rates, _ = headline
    none, adapt = rates[:, 0].ravel(), rates[:, 2].ravel()
    g_avg = 100 * (adapt.mean() / none.mean() - 1)
    g_p5 = 100 * (np.percentile(adapt, 5) / np.percentile(none, 5) - 1)
    a = record(5, "average gain at 15 dB = 53% +/- 10 pp", abs(g_avg - 53) <= 10,
               f"{g_avg:.1f}% over {rates.shape[0]} placements")
    b = record(5, "5th-percentile gain at 15 dB = 210% +/- 40 pp", abs(g_p5 - 210) <= 40,
               f"{g_p5:.1f}%")
    assert a and b


def test_c5_bstar():
    b = bstar_bits(float(db_to_linear(15.0)), NT, 2.0)
    assert record(5, "bstar_bits(15 dB, 4, 2) = 18", b == 18, str(b))


def test_c5_bstar_gap(cfg):
    ok = True
    for p0_db in (0.0, 5.0, 10.0, 15.0):
        bits = bstar_bits(float(db_to_linear(p0_db)), NT, 2.0)
        fb = FeedbackConfig.uniform(3, bits, bits)
        perf, lfb = [], []
        for budget in placement_budgets(cfg, p0_db):
            perf += select_joint(budget, NT)[1].user_rates
            lfb += select_joint(budget, NT, fb)[1].user_rates
        gap_avg = np.mean(perf) - np.mean(lfb)
        gap_p5 = np.percentile(perf, 5) - np.percentile(lfb, 5)
        ok &= record(5, f"B_s = B_I = B* = {bits} at {p0_db:g} dB: user-rate gap to perfect CSI <= 1",
                     gap_avg <= 1 and gap_p5 <= 1,
                     f"average {gap_avg:.3f}, edge {gap_p5:.3f} bps/Hz")
    assert ok


# --------------------------------------------------------------------------
# 6. region structure
# --------------------------------------------------------------------------

def _region_shares(p0_db):
    grid = np.round(np.arange(0.025, 1.0, 0.05), 10)
    counts = {}
    for x1 in grid:
        for x2 in grid:
            _, b = build_scenario("two_cell", (-x1, x2), p0_db, ALPHA, NT)
            lab = select_joint(b, NT)[0].label()
            counts[lab] = counts.get(lab, 0) + 1
    return counts, grid.size ** 2


def test_c6_regions():
    c, n = _region_shares(-5.0)
    a = record(6, "(BF,BF) covers > 50% at -5 dB", c.get("(BF,BF)", 0) > n / 2,
               f"{c.get('(BF,BF)', 0)}/{n}")
    c, n = _region_shares(10.0)
    b = record(6, "(IC,IC) covers > 50% at 10 dB", c.get("(IC,IC)", 0) > n / 2,
               f"{c.get('(IC,IC)', 0)}/{n}")
    c, n = _region_shares(5.0)
    d = record(6, "all four profiles appear at 5 dB", len(c) == 4,
               ", ".join(f"{k} {v}" for k, v in sorted(c.items())))
    assert a and b and d


# --------------------------------------------------------------------------
# 7. structural properties
# --------------------------------------------------------------------------

def test_c7_adaptive_dominates_and_csi_cost(cfg, headline):
    small = ExperimentConfig(experiment="compare3", placements=300, seed=SEED + 1)
    data = [headline[0]] + [compare_3cell_samples(small, p0)[0]
                            for p0 in (-5.0, 0.0, 5.0, 10.0, 20.0)]
    sums = np.vstack(data).sum(axis=2)
    tol = 1e-12 * sums.max()
    dom = bool(np.all(sums[:, 2] >= np.maximum(sums[:, 0], sums[:, 1]) - tol))
    a = record(7, "adaptive >= no-ICIC and static on every geometry", dom,
               f"{len(sums)} geometries")
    budgets = placement_budgets(small, 15.0) + placement_budgets(small, 0.0)
    static = static_icic_profile(3)
    bad = 0
    for budget in budgets:
        prof, rep = select_joint(budget, NT)
        cost = csi_cost(prof)
        if cost > 9 or (cost == 9) != (prof == static):
            bad += 1
    b = record(7, "csi_cost(adaptive) <= 9, equal only for all-IC(both)", bad == 0,
               f"{bad} violations in {len(budgets)} selections")
    assert a and b


def test_c7_reduction_chain_and_symmetry():
    rng = np.random.default_rng(SEED)
    worst_chain = worst_sym = 0.0
    for _ in range(200):
        a, d1, d2 = 10.0 ** rng.uniform(-2, 2, 3)
        m = int(rng.integers(1, 9))
        worst_chain = max(worst_chain,
                          abs(rate_i3(a, d1, 0.0, m) - rate_i2(a, d1, m)),
                          abs(rate_i2(a, 0.0, m) - rate_bf(a, m)))
        worst_sym = max(worst_sym, abs(rate_i3(a, d1, d2, m) - rate_i3(a, d2, d1, m)))
    a = record(7, "reduction chain rate_i3 -> rate_i2 -> rate_bf", worst_chain <= 1e-15,
               f"max abs diff {worst_chain:.1e}")
    b = record(7, "rate_i3 interferer swap symmetry", worst_sym <= 1e-15,
               f"max abs diff {worst_sym:.1e}")
    assert a and b


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
