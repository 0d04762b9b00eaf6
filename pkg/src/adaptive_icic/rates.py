"""Closed-form ergodic rates of a zero-forcing / beamforming multicell downlink.

Three building blocks, all in bps/Hz with ``Z ~ Gamma(M, 1)`` the signal gain
and ``Y_k`` independent unit exponentials (interference gains):

``rate_bf(g, M)``          E log2(1 + g Z)
``rate_i2(g1, g2, M)``     E log2(1 + g1 Z / (1 + g2 Y))
``rate_i3(a, d1, d2, M)``  E log2(1 + a Z / (1 + d1 Y1 + d2 Y2))

Per-user rates for a strategy profile dispatch to these according to which
neighbours interfere and how many zero-forcing constraints the home BS
spends.  With limited feedback the signal SNR is scaled by ``xi`` and every
cancelled neighbour leaves a residual ``kappa * P``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .network import LinkBudget
from .numerics import LOG2E, expn_scaled, i1_table
from .profiles import FeedbackConfig, StrategyProfile

__all__ = [
    "RateParams",
    "FeedbackFactors",
    "rate_bf",
    "rate_i2",
    "rate_i3",
    "rate",
    "quantization_xi",
    "residual_kappa",
    "feedback_factors",
    "user_rate",
    "user_rate_2cell",
    "user_rate_3cell",
    "user_rate_3cell_lfb",
    "user_rate_lfb",
    "sum_rate",
]

#: Below this SNR the signal is treated as absent.
MIN_SIGNAL_SNR = 1e-12
#: Interferers weaker than this (linear) are dropped; the closed forms divide by them.
MIN_INTERFERER_SNR = 1e-10
#: Relative interferer gap below which rate_i3 switches to symmetric
#: perturbation plus Richardson extrapolation.
EQUAL_INTERFERER_GAP = 1e-3


@dataclass(frozen=True)
class RateParams:
    """Arguments of one closed-form rate evaluation."""

    signal_snr: float
    interferer_snrs: tuple = ()
    signal_dof: int = 1

    def __post_init__(self):
        object.__setattr__(self, "interferer_snrs", tuple(float(x) for x in self.interferer_snrs))
        if self.signal_dof < 1 or int(self.signal_dof) != self.signal_dof:
            raise ValueError(f"signal_dof must be a positive integer, got {self.signal_dof!r}")
        if len(self.interferer_snrs) > 2:
            raise ValueError("at most two interferers are supported")
        vals = (self.signal_snr, *self.interferer_snrs)
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"SNRs must be finite and >= 0, got {vals}")


@dataclass(frozen=True)
class FeedbackFactors:
    """Mean squared CDI alignment ``xi`` and mean ZF leakage ``kappa``."""

    xi: float = 1.0
    kappa: float = 0.0


def _check_snr(snr, name="snr"):
    if not (snr >= 0 and math.isfinite(snr)):
        raise ValueError(f"{name} must be finite and nonnegative, got {snr!r}")


def _check_dof(m):
    if m < 1 or int(m) != m:
        raise ValueError(f"degrees of freedom must be a positive integer, got {m!r}")


@lru_cache(maxsize=1 << 16)
def _rate_bf(snr: float, m: int) -> float:
    # Gamma(-k, 1/g) / g^k = exp(-1/g) E_{k+1}(1/g), so the sum needs scaled E_n only
    return LOG2E * float(np.sum(expn_scaled(m, 1.0 / snr)))


def rate_bf(snr: float, m: int) -> float:
    """Ergodic rate ``E[log2(1 + snr Z)]`` with ``Z ~ Gamma(m, 1)``.

    Raises
    ------
    ValueError
        For ``snr <= 0`` or ``m < 1``.  SNRs below ``MIN_SIGNAL_SNR`` give 0.
    """
    if not (snr > 0 and math.isfinite(snr)):
        raise ValueError(f"snr must be positive and finite, got {snr!r}")
    _check_dof(m)
    if snr < MIN_SIGNAL_SNR:
        return 0.0
    return _rate_bf(float(snr), int(m))


@lru_cache(maxsize=1 << 16)
def _weighted_i1_sum(g1: float, g2: float, m: int) -> float:
    """sum_{i<m} sum_{l<=i} g1^(l+1-i) / (i-l)! * I1(1/g1, g1/g2, i, l+1)."""
    table, _ = i1_table(1.0 / g1, g1 / g2, m - 1, m, triangular=True)
    total = 0.0
    for i in range(m):
        for l in range(i + 1):
            total += g1 ** (l + 1 - i) / math.factorial(i - l) * table[i, l + 1]
    return total


def rate_i2(signal_snr: float, interferer_snr: float, m: int) -> float:
    """Ergodic rate with one Rayleigh interferer.

    ``E[log2(1 + g1 Z / (1 + g2 Y))]``, ``Z ~ Gamma(m, 1)``, ``Y ~ Exp(1)``.
    Interferers below ``MIN_INTERFERER_SNR`` reduce to :func:`rate_bf`.
    """
    g1, g2 = float(signal_snr), float(interferer_snr)
    if not g1 > 0:
        raise ValueError(f"signal_snr must be positive, got {g1!r}")
    _check_snr(g1, "signal_snr")
    _check_snr(g2, "interferer_snr")
    _check_dof(m)
    if g1 < MIN_SIGNAL_SNR:
        return 0.0
    if g2 < MIN_INTERFERER_SNR:
        return rate_bf(g1, m)
    return LOG2E * _weighted_i1_sum(g1, g2, int(m)) / g2


def _rate_i3_distinct(a, d1, d2, m):
    s1 = _weighted_i1_sum(a, d1, m)
    s2 = _weighted_i1_sum(a, d2, m)
    return LOG2E * (s1 - s2) / (d1 - d2)


def rate_i3(signal_snr: float, d1: float, d2: float, m: int) -> float:
    """Ergodic rate with two independent Rayleigh interferers.

    ``E[log2(1 + a Z / (1 + d1 Y1 + d2 Y2))]``.  Symmetric in ``(d1, d2)``
    exactly (arguments are sorted first).  When the interferers are within a
    relative gap of ``EQUAL_INTERFERER_GAP`` the closed form, which divides
    by ``d1 - d2``, is evaluated at two wider symmetric splits around the
    midpoint and extrapolated back in the squared gap.
    """
    a = float(signal_snr)
    if not a > 0:
        raise ValueError(f"signal_snr must be positive, got {a!r}")
    _check_snr(a, "signal_snr")
    _check_snr(d1, "d1")
    _check_snr(d2, "d2")
    _check_dof(m)
    hi, lo = (float(d1), float(d2)) if d1 >= d2 else (float(d2), float(d1))
    if a < MIN_SIGNAL_SNR:
        return 0.0
    if hi < MIN_INTERFERER_SNR:
        return rate_bf(a, m)
    if lo < MIN_INTERFERER_SNR:
        return rate_i2(a, hi, m)
    return _rate_i3(a, hi, lo, int(m))


@lru_cache(maxsize=1 << 16)
def _rate_i3(a, hi, lo, m):
    if (hi - lo) >= EQUAL_INTERFERER_GAP * hi:
        return _rate_i3_distinct(a, hi, lo, m)
    # f(h) = R(mid + h, mid - h) is even in h: fit f0 + c h^2 from h = H, 2H
    mid = 0.5 * (hi + lo)
    g = 0.5 * (hi - lo)
    big = EQUAL_INTERFERER_GAP * mid
    f1 = _rate_i3_distinct(a, mid + big, mid - big, m)
    f2 = _rate_i3_distinct(a, mid + 2 * big, mid - 2 * big, m)
    c = (f2 - f1) / (3.0 * big * big)
    f0 = f1 - c * big * big
    return f0 + c * g * g


def rate(params: RateParams) -> float:
    """Dispatch a :class:`RateParams` to the matching closed form."""
    ints = params.interferer_snrs
    if params.signal_snr < MIN_SIGNAL_SNR:
        return 0.0
    if len(ints) == 0:
        return rate_bf(params.signal_snr, params.signal_dof)
    if len(ints) == 1:
        return rate_i2(params.signal_snr, ints[0], params.signal_dof)
    return rate_i3(params.signal_snr, ints[0], ints[1], params.signal_dof)


# ---------------------------------------------------------------------------
# limited feedback factors
# ---------------------------------------------------------------------------

def _check_nt(nt):
    if nt < 2 or int(nt) != nt:
        raise ValueError(f"nt must be an integer >= 2, got {nt!r}")


def quantization_xi(bits, nt: int) -> float:
    """``E[cos^2 theta] = 1 - L beta(L, nt/(nt-1))`` for an RVQ codebook of
    ``L = 2**bits`` vectors.  ``bits = inf`` gives 1."""
    _check_nt(nt)
    bits = float(bits)
    if bits < 0:
        raise ValueError("bits must be >= 0")
    if math.isinf(bits):
        return 1.0
    L = 2.0 ** bits
    y = nt / (nt - 1.0)
    # betaln stays accurate for huge L where lgamma differences cancel
    log_lbeta = math.log(L) + special.betaln(L, y)
    return float(-math.expm1(log_lbeta))


def residual_kappa(bits, nt: int) -> float:
    """Mean residual interference ``2 ** (-bits / (nt - 1))`` after ZF on
    quantized CDI.  ``bits = inf`` gives 0."""
    _check_nt(nt)
    bits = float(bits)
    if bits < 0:
        raise ValueError("bits must be >= 0")
    return 2.0 ** (-bits / (nt - 1))


def feedback_factors(bits, nt: int) -> FeedbackFactors:
    return FeedbackFactors(quantization_xi(bits, nt), residual_kappa(bits, nt))


# ---------------------------------------------------------------------------
# per-user rates for strategy profiles
# ---------------------------------------------------------------------------

def _validate(profile: StrategyProfile, budget: LinkBudget, user: int, nt: int):
    if profile.n_cells != budget.n_cells:
        raise ValueError(f"profile has {profile.n_cells} BSs but the budget has {budget.n_cells}")
    if not 0 <= user < budget.n_cells:
        raise IndexError(f"user {user} out of range")
    for j, s in enumerate(profile):
        if s.constraints > nt - 1:
            raise ValueError(f"BS {j} cannot cancel toward {s.constraints} users with nt={nt}")


def user_rate_params(profile: StrategyProfile, budget: LinkBudget, user: int, nt: int,
                     fb: FeedbackConfig | None = None) -> RateParams:
    """Signal SNR, interferers and signal dof seen by ``user``."""
    _validate(profile, budget, user, nt)
    p = budget.received_snr
    dof = nt - profile[user].constraints
    if fb is None:
        sig = p[user, user]
        ints = [p[user, j] for j in range(budget.n_cells)
                if j != user and not profile.cancels(j, user)]
    else:
        if fb.n_cells != budget.n_cells:
            raise ValueError("feedback config and budget disagree on the number of cells")
        sig = quantization_xi(fb.bits[user][user], nt) * p[user, user]
        ints = []
        for j in range(budget.n_cells):
            if j == user:
                continue
            if profile.cancels(j, user):
                ints.append(residual_kappa(fb.bits[user][j], nt) * p[user, j])
            else:
                ints.append(p[user, j])
    return RateParams(float(sig), tuple(float(x) for x in ints), dof)


def user_rate(profile: StrategyProfile, budget: LinkBudget, user: int, nt: int,
              fb: FeedbackConfig | None = None) -> float:
    """Closed-form ergodic rate of ``user`` under ``profile``.

    Perfect CSI when ``fb`` is None; otherwise the limited-feedback
    approximation (the signal SNR is scaled by ``xi`` of the home link and a
    cancelling neighbour leaves residual interference ``kappa * P``).
    """
    return rate(user_rate_params(profile, budget, user, nt, fb))


def user_rate_2cell(profile: StrategyProfile, budget: LinkBudget, user: int, nt: int) -> float:
    """Perfect-CSI rate in a 2-cell network.

    ========  ============================
    profile   rate of user 0
    ========  ============================
    (BF,BF)   rate_i2(P00, P01, nt)
    (BF,IC)   rate_bf(P00, nt)
    (IC,IC)   rate_bf(P00, nt - 1)
    (IC,BF)   rate_i2(P00, P01, nt - 1)
    ========  ============================
    """
    if budget.n_cells != 2:
        raise ValueError("user_rate_2cell needs a 2-cell budget")
    return user_rate(profile, budget, user, nt)


def user_rate_3cell(profile: StrategyProfile, budget: LinkBudget, user: int, nt: int) -> float:
    """Perfect-CSI rate in a 3-cell network; the signal has
    ``nt - |victims of the home BS|`` degrees of freedom."""
    if budget.n_cells != 3:
        raise ValueError("user_rate_3cell needs a 3-cell budget")
    return user_rate(profile, budget, user, nt)


def user_rate_lfb(profile: StrategyProfile, budget: LinkBudget, fb: FeedbackConfig,
                  user: int, nt: int) -> float:
    """Limited-feedback approximation for 2- or 3-cell networks."""
    _check_nt(nt)
    return user_rate(profile, budget, user, nt, fb)


def user_rate_3cell_lfb(profile: StrategyProfile, budget: LinkBudget, fb: FeedbackConfig,
                        user: int, nt: int) -> float:
    if budget.n_cells != 3:
        raise ValueError("user_rate_3cell_lfb needs a 3-cell budget")
    return user_rate_lfb(profile, budget, fb, user, nt)


def sum_rate(profile: StrategyProfile, budget: LinkBudget, nt: int,
             fb: FeedbackConfig | None = None) -> float:
    return sum(user_rate(profile, budget, u, nt, fb) for u in range(budget.n_cells))
