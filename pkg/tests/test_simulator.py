import math

import numpy as np
import pytest
from scipy import stats

from adaptive_icic.network import build_scenario
from adaptive_icic.profiles import BF, IC, FeedbackConfig, StrategyProfile, two_cell_profiles
from adaptive_icic.rates import quantization_xi, rate_bf, user_rate
from adaptive_icic.simulator import (Codebook, McEstimate, beamformer_eigen, beamformer_zf,
                                     complex_normal, mc_ergodic_rate, mc_profile_rates,
                                     random_codebook, rvq_quantize, sample_interference_power,
                                     sample_quantization_error, sample_signal_power)


def test_complex_normal_unit_variance():
    z = complex_normal(np.random.default_rng(0), (200_000,))
    assert abs(np.mean(np.abs(z) ** 2) - 1) < 0.01
    assert abs(np.mean(z.real ** 2) - 0.5) < 0.01


def test_eigen_beamformer():
    e1 = np.array([1, 0, 0, 0], dtype=complex)
    assert np.allclose(beamformer_eigen(e1), e1)
    h = complex_normal(np.random.default_rng(1), (4,))
    c = 2.0 * np.exp(0.7j)
    assert np.allclose(beamformer_eigen(c * h), np.exp(0.7j) * beamformer_eigen(h))
    with pytest.raises(ValueError):
        beamformer_eigen(np.zeros(4))


def test_zf_orthogonality_and_optimality():
    rng = np.random.default_rng(2)
    for k in (1, 2, 3):
        h = complex_normal(rng, (5000, 4))
        v = complex_normal(rng, (5000, k, 4))
        f = beamformer_zf(h, v)
        leak = np.abs(np.einsum("nkt,nt->nk", v.conj(), f)) / np.linalg.norm(v, axis=-1)
        assert leak.max() < 1e-10
        assert np.allclose(np.linalg.norm(f, axis=-1), 1.0)
    # already-orthogonal victim leaves the eigen-beamformer unchanged
    h = np.array([1, 1j, 0, 0]) / math.sqrt(2)
    v = np.array([0, 0, 1, 0], dtype=complex)
    assert np.allclose(beamformer_zf(h, v), h)


def test_zf_errors():
    h = np.ones(3, dtype=complex)
    with pytest.raises(ValueError):
        beamformer_zf(h, np.ones((3, 3), dtype=complex))
    with pytest.raises(np.linalg.LinAlgError):
        beamformer_zf(h, np.array([[1, 0, 0], [2, 0, 0]], dtype=complex))


def test_rvq_exact_codeword_and_ties():
    rng = np.random.default_rng(3)
    cb = random_codebook(4, 4, rng)
    assert np.allclose(np.linalg.norm(cb.vectors, axis=1), 1.0) and cb.size == 16
    idx, c = rvq_quantize(3.0 * cb.vectors[7] * 1j, cb)
    assert idx == 7 and abs(abs(np.vdot(c, cb.vectors[7])) - 1) < 1e-12
    dup = Codebook(np.vstack([cb.vectors[2], cb.vectors[2]]))
    assert rvq_quantize(cb.vectors[2], dup)[0] == 0
    with pytest.raises(ValueError):
        random_codebook(-1, 4, rng)


def test_quantization_error_matches_xi():
    s = sample_quantization_error(4, 10, 200_000, np.random.default_rng(4))
    assert abs(s.mean() / (1 - quantization_xi(10, 4)) - 1) < 0.01


@pytest.mark.parametrize("victims", [0, 1, 2])
def test_gain_distributions_small_sample(victims):
    n = 50_000
    x = sample_signal_power(4, victims, n, np.random.default_rng(5 + victims))
    assert stats.kstest(x, stats.gamma(4 - victims).cdf).pvalue > 1e-3
    y = sample_interference_power(4, victims, n, np.random.default_rng(9 + victims))
    assert stats.kstest(y, stats.expon().cdf).pvalue > 1e-3


def test_mc_estimate_half_width():
    est = McEstimate.from_moments(10.0, 30.0, 10)
    assert est.mean == 1.0
    assert est.half_width_95 == pytest.approx(1.959963984540054 * est.std / math.sqrt(10))
    assert est.half_width(0.95) == pytest.approx(est.half_width_95, rel=1e-9)
    assert est.contains(1.0) and not est.contains(1.0 + 2 * est.half_width(0.99))


def test_mc_matches_closed_form_bf_ic():
    scen, b = build_scenario("two_cell", (-0.1, 0.5), 10.0)
    prof = StrategyProfile((BF, IC(0)))
    est = mc_ergodic_rate(scen, b, prof, 100_000, seed=11)
    ref = rate_bf(b.received_snr[0, 0], 4)
    assert est[0].contains(ref, 0.999)
    for p in two_cell_profiles():
        r = mc_ergodic_rate(scen, b, p, 60_000, seed=12)
        for u in range(2):
            assert r[u].contains(user_rate(p, b, u, 4), 0.999)


def test_mc_low_snr_rates_vanish():
    scen, b = build_scenario("two_cell", (-0.5, 0.5), -40.0)
    prof = StrategyProfile((BF, BF))
    est = mc_ergodic_rate(scen, b, prof, 5000, seed=0)
    assert all(e.mean < 0.01 for e in est)
    assert est[0].contains(user_rate(prof, b, 0, 4), 0.999)


def test_mc_seed_determinism_independent_of_workers():
    scen, b = build_scenario("three_cell", "random", 5.0, seed=2)
    profs = [StrategyProfile((BF, BF, BF)), StrategyProfile((IC(1, 2), IC(0), BF))]
    fb = FeedbackConfig.uniform(3, 6, 8)
    a = mc_profile_rates(scen, b, profs, 3000, seed=5, fb=fb, block_size=1000)
    c = mc_profile_rates(scen, b, profs, 3000, seed=5, fb=fb, block_size=1000, workers=2)
    d = mc_profile_rates(scen, b, profs, 3000, seed=6, fb=fb, block_size=1000)
    for p in profs:
        assert [e.mean for e in a[p]] == [e.mean for e in c[p]]
        assert [e.mean for e in a[p]] != [e.mean for e in d[p]]


def test_mc_sum_slot():
    scen, b = build_scenario("two_cell", (-0.2, 0.3), 5.0)
    p = StrategyProfile((BF, BF))
    r = mc_profile_rates(scen, b, [p], 4000, seed=1, include_sum=True)[p]
    assert len(r) == 3 and r[2].mean == pytest.approx(r[0].mean + r[1].mean)


def test_mc_rejects_infeasible_before_sampling():
    scen, b = build_scenario("three_cell", "random", 5.0, nt=2, seed=0)
    with pytest.raises(ValueError):
        mc_ergodic_rate(scen, b, StrategyProfile((IC(1, 2), BF, BF)), 10)
    with pytest.raises(ValueError):
        mc_ergodic_rate(scen, b, StrategyProfile((BF, BF, BF)), 0)
