"""Oracle suites: closed forms checked against independent computations.

Each suite returns a list of :class:`Check` records so the CLI and the test
suite can print one pass/fail line per check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .coordinator import candidate_profiles
from .network import build_scenario
from .numerics import (expected_log_oracle, integral_i1, integral_i2, integral_i3, quad_i1,
                       quad_i2, quad_i3)
from .rates import rate_bf, rate_i2, rate_i3, residual_kappa, user_rate
from .simulator import (mc_profile_rates, sample_interference_power, sample_signal_power)

__all__ = ["Check", "special_function_suite", "rate_oracle_suite", "mc_suite",
           "distribution_suite", "run_all"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _rel(x, ref):
    return abs(x - ref) / max(abs(ref), 1e-300)


def random_special_params(n: int, seed) -> list:
    """``(a, b, m, n, M, gamma)`` sets with log-uniform ``a, b, gamma`` in
    [0.01, 100] and integer orders up to 8."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a, b, g = 10.0 ** rng.uniform(-2, 2, 3)
        m, k = (int(x) for x in rng.integers(0, 9, 2))
        out.append((float(a), float(b), m, max(k, 1), int(rng.integers(1, 9)), float(g)))
    return out


def special_function_suite(n: int = 200, seed=0, rtol: float = 1e-8) -> list:
    """I1, I2, I3 and the selfish-beamforming rate against adaptive quadrature."""
    worst = {"i1": 0.0, "i2": 0.0, "i3": 0.0, "rate_bf": 0.0}
    for a, b, m, k, shape, g in random_special_params(n, seed):
        worst["i1"] = max(worst["i1"], _rel(integral_i1(a, b, m, k), quad_i1(a, b, m, k)))
        worst["i2"] = max(worst["i2"], _rel(integral_i2(a, b, m, k), quad_i2(a, b, m, k)))
        # I3 with negative orders exercises the exponential-integral branch
        m3 = m - 4
        worst["i3"] = max(worst["i3"], _rel(integral_i3(a, b, m3), quad_i3(a, b, m3)))
        worst["rate_bf"] = max(worst["rate_bf"], _rel(rate_bf(g, shape),
                                                      expected_log_oracle("pure_gamma", (g, shape))))
    return [Check(f"{name} vs quadrature ({n} sets)", w <= rtol,
                  f"max rel err {w:.2e} (tol {rtol:.0e})") for name, w in worst.items()]


def rate_oracle_suite(n: int = 20, seed=1, rtol: float = 1e-6) -> list:
    """One- and two-interferer rates against the density-integration oracle."""
    rng = np.random.default_rng(seed)
    w2 = w3 = 0.0
    for _ in range(n):
        g, d1, d2 = 10.0 ** rng.uniform(-1, 2, 3)
        shape = int(rng.integers(1, 5))
        w2 = max(w2, _rel(rate_i2(g, d1, shape),
                          expected_log_oracle("gamma_ratio_1", (g, d1, shape))))
        w3 = max(w3, _rel(rate_i3(g, d1, d2, shape),
                          expected_log_oracle("gamma_ratio_2", (g, d1, d2, shape))))
    return [Check(f"one-interferer rate vs oracle ({n} sets)", w2 <= rtol, f"max rel err {w2:.2e}"),
            Check(f"two-interferer rate vs oracle ({n} sets)", w3 <= rtol, f"max rel err {w3:.2e}")]


def random_geometries(n2: int, n3: int, seed, p0_db_range=(-5.0, 15.0), nt: int = 4,
                      alpha: float = 3.7) -> list:
    """``(scenario, budget)`` pairs: 2-cell users on the BS axis and random
    3-cell placements, each with a random edge SNR."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n2):
        x1, x2 = rng.uniform(0.02, 0.98, 2)
        out.append(build_scenario("two_cell", (-x1, x2), rng.uniform(*p0_db_range), alpha, nt))
    for _ in range(n3):
        ss = np.random.SeedSequence(int(rng.integers(2 ** 32)))
        out.append(build_scenario("three_cell", "random", rng.uniform(*p0_db_range), alpha, nt,
                                  seed=ss))
    return out


def mc_compare(geometries, trials: int, seed=0, level: float = 0.99, workers: int = 1):
    """Closed-form per-user rates against Monte Carlo for every feasible profile.

    Returns
    -------
    list of tuple
        ``(geometry index, profile, user, closed form, McEstimate, inside)``.
    """
    rows = []
    for g, (scen, budget) in enumerate(geometries):
        profs = candidate_profiles(budget, scen.nt)
        mc = mc_profile_rates(scen, budget, profs, trials,
                              np.random.SeedSequence(seed, spawn_key=(g,)), workers=workers)
        for prof in profs:
            for u in range(scen.n_cells):
                cf = user_rate(prof, budget, u, scen.nt)
                est = mc[prof][u]
                rows.append((g, prof, u, cf, est, est.contains(cf, level)))
    return rows


def mc_suite(n2: int = 3, n3: int = 3, trials: int = 20_000, seed=0, level: float = 0.99) -> list:
    """Closed form inside the Monte Carlo CI.

    With many comparisons a few misses are expected by chance, so the
    pass rule is a Bonferroni bound: every comparison must lie inside the
    ``1 - (1 - level) / N`` interval.
    """
    rows = mc_compare(random_geometries(n2, n3, seed), trials, seed, level)
    n = len(rows)
    inside = sum(r[5] for r in rows)
    strict = 1.0 - (1.0 - level) / n
    ok = all(r[4].contains(r[3], strict) for r in rows)
    return [Check(f"closed form vs Monte Carlo ({n} rates, {trials} trials)", ok,
                  f"{inside}/{n} inside {level:.0%} CI; all inside Bonferroni CI: {ok}")]


def distribution_suite(n: int = 200_000, nt: int = 4, seed=2, ks_tol: float | None = None) -> list:
    """KS tests of the gain distributions behind the closed forms."""
    tol = ks_tol if ks_tol is not None else 1.63 / math.sqrt(n)  # ~1% level
    out = []
    rng = np.random.default_rng(seed)
    for m in range(nt):
        x = sample_signal_power(nt, m, n, rng)
        d = stats.kstest(x, stats.gamma(nt - m).cdf).statistic
        out.append(Check(f"signal power, {m} victims ~ Gamma({nt - m})", d < tol,
                         f"KS {d:.4f} (tol {tol:.4f})"))
    x = sample_interference_power(nt, 1, n, rng)
    d = stats.kstest(x, stats.expon().cdf).statistic
    out.append(Check("uncanceled interference ~ Exp(1)", d < tol, f"KS {d:.4f} (tol {tol:.4f})"))
    k = residual_kappa(10, nt)
    out.append(Check("residual factor kappa(10 bits)", abs(k - 2 ** (-10 / (nt - 1))) < 1e-15,
                     f"{k:.6g}"))
    return out


def run_all(trials: int = 20_000, seed=0) -> list:
    """Quick versions of every suite."""
    return (special_function_suite(60, seed) + rate_oracle_suite(10, seed + 1)
            + distribution_suite(100_000, seed=seed + 2)
            + mc_suite(trials=trials, seed=seed))
