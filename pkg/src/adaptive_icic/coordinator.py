"""Strategy selection, CSI-cost accounting and feedback-bit design.

The joint selector enumerates every feasible profile (4 for two cells, 27
for three cells with the reduced per-BS sets) and keeps the one with the
largest closed-form sum rate.  Ties go to the profile with fewer
zero-forcing constraints (less CSI to feed back), then lexicographic order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import LinkBudget
from .profiles import (BF, IC, FeedbackConfig, Strategy, StrategyProfile,
                       enumerate_profiles, reduced_strategy_set, two_cell_profiles)
from .rates import user_rate

__all__ = [
    "RateReport",
    "candidate_profiles",
    "no_icic_profile",
    "static_icic_profile",
    "select_joint",
    "evaluate",
    "select_distributed",
    "nearest_victim",
    "csi_cost",
    "bstar_bits",
    "allocate_bits",
    "PAPER_BIT_PAIRS",
]

#: (B_s, B_I) pairs with B_s + 2 B_I = 30 used for adaptive bit allocation.
PAPER_BIT_PAIRS = ((10, 10), (8, 11), (6, 12), (4, 13), (2, 14))

_REL_TIE = 1e-12


@dataclass
class RateReport:
    """Per-user rates of a selected profile plus aggregates."""

    profile: StrategyProfile
    user_rates: list
    csi_cost: int
    mc: list = field(default_factory=list)

    @property
    def sum_rate(self) -> float:
        return float(sum(self.user_rates))

    @property
    def min_rate(self) -> float:
        return float(min(self.user_rates))


def nearest_victim(budget: LinkBudget, bs: int) -> int:
    """Neighbour whose user receives the most power from ``bs`` (lowest index on ties)."""
    p = budget.received_snr
    others = [k for k in range(budget.n_cells) if k != bs]
    return max(others, key=lambda k: (p[k, bs], -k))


def candidate_profiles(budget: LinkBudget, nt: int) -> list[StrategyProfile]:
    """Feasible profiles for the cluster, in tie-break order."""
    k = budget.n_cells
    if k == 2:
        profs = two_cell_profiles()
    elif k == 3:
        sets = [reduced_strategy_set(b, nearest_victim(budget, b)) for b in range(3)]
        profs = list(enumerate_profiles(sets))
    else:
        raise ValueError(f"only 2- and 3-cell clusters are supported, got {k}")
    profs = [p for p in profs if p.feasible(nt)]
    return sorted(profs, key=StrategyProfile.sort_key)


def no_icic_profile(n_cells: int) -> StrategyProfile:
    return StrategyProfile((BF,) * n_cells)


def static_icic_profile(n_cells: int) -> StrategyProfile:
    """Every BS cancels toward all of its neighbours."""
    return StrategyProfile(tuple(IC(*[k for k in range(n_cells) if k != b])
                                 for b in range(n_cells)))


def csi_cost(profile: StrategyProfile) -> int:
    """Channel directions fed back: one home link per user plus one per
    (user, helper BS) pair where the helper cancels toward that user."""
    return profile.n_cells + profile.total_constraints


def _user_rates(profile, budget, nt, fb):
    return [user_rate(profile, budget, u, nt, fb) for u in range(budget.n_cells)]


def evaluate(profile: StrategyProfile, budget: LinkBudget, nt: int,
             fb: FeedbackConfig | None = None) -> RateReport:
    return RateReport(profile, _user_rates(profile, budget, nt, fb), csi_cost(profile))


def _argmax(reports: Sequence[RateReport]) -> RateReport:
    # reports arrive in tie-break order; only a strictly larger rate displaces
    best = reports[0]
    for rep in reports[1:]:
        if rep.sum_rate > best.sum_rate * (1 + _REL_TIE) + 1e-300:
            best = rep
    return best


def select_joint(budget: LinkBudget, nt: int, fb: FeedbackConfig | None = None,
                 profiles: Sequence[StrategyProfile] | None = None):
    """Exhaustive sum-rate maximization over the cluster's strategy profiles.

    Parameters
    ----------
    budget : LinkBudget
        2- or 3-cell average received SNRs.
    nt : int
        Antennas per BS; profiles needing more than ``nt - 1`` constraints at
        some BS are skipped.
    fb : FeedbackConfig, optional
        Use the limited-feedback rate approximation.
    profiles : sequence, optional
        Restrict the search (defaults to :func:`candidate_profiles`).

    Returns
    -------
    (StrategyProfile, RateReport)
    """
    if profiles is None:
        profiles = candidate_profiles(budget, nt)
    else:
        profiles = sorted((p for p in profiles if p.feasible(nt)), key=StrategyProfile.sort_key)
    if not profiles:
        raise ValueError(f"no feasible profile with nt={nt}")
    best = _argmax([evaluate(p, budget, nt, fb) for p in profiles])
    return best.profile, best


def select_distributed(budget: LinkBudget, nt: int, outer_noise_floor: float = 0.0,
                       fb: FeedbackConfig | None = None) -> StrategyProfile:
    """Single-pass distributed selection.

    Each BS assumes its neighbours beamform selfishly, treats out-of-cluster
    interference as extra white noise of power ``outer_noise_floor``
    (relative to unit thermal noise), and picks the strategy from its
    reduced set that maximizes the cluster sum rate under that assumption.
    No messages are exchanged after the user locations, and there is no
    iteration.
    """
    if outer_noise_floor < 0:
        raise ValueError("outer_noise_floor must be >= 0")
    k = budget.n_cells
    local = budget.scaled(1.0 + outer_noise_floor)
    chosen = []
    for b in range(k):
        if k == 3:
            options = reduced_strategy_set(b, nearest_victim(local, b))
        else:
            options = [BF, IC(1 - b)]
        options = sorted((s for s in options if s.constraints <= nt - 1),
                         key=lambda s: (s.constraints, sorted(s.victims)))
        reps = []
        for s in options:
            strategies = [BF] * k
            strategies[b] = s
            reps.append(evaluate(StrategyProfile(tuple(strategies)), local, nt, fb))
        chosen.append(_argmax(reps).profile[b])
    return StrategyProfile(tuple(chosen), mode="distributed")


def bstar_bits(p0: float, nt: int, delta_r: float) -> int:
    """Helper-link feedback bits for a rate loss of at most ``log2(delta_r)``.

    ``ceil((nt - 1) * log2(2 p0 / (delta_r - 1)))`` clamped at 0; ``p0`` is
    the linear edge SNR.
    """
    if not delta_r > 1:
        raise ValueError(f"delta_r must be > 1, got {delta_r!r}")
    if not p0 > 0:
        raise ValueError(f"p0 must be positive, got {p0!r}")
    if nt < 2:
        raise ValueError("nt must be >= 2")
    if math.isinf(delta_r):
        return 0
    b = (nt - 1) * math.log2(2.0 * p0 / (delta_r - 1.0))
    # absorb roundoff so that exact integers are not bumped up
    return max(0, math.ceil(b - 1e-9))


def allocate_bits(budget: LinkBudget, nt: int, total_bits: int | None = None,
                  allowed_pairs: Sequence[tuple] = PAPER_BIT_PAIRS):
    """Jointly pick a (B_s, B_I) pair and a profile under the LFB approximation.

    Every user spends ``B_s`` bits on its home link and ``B_I`` bits on each
    helper link.  Ties go to the larger ``B_s``.

    Returns
    -------
    (pair, StrategyProfile, float)
        The winning bit pair, profile and sum rate.
    """
    pairs = [tuple(int(x) for x in p) for p in allowed_pairs]
    if not pairs:
        raise ValueError("allowed_pairs must not be empty")
    k = budget.n_cells
    if total_bits is not None:
        for bs, bi in pairs:
            if bs + (k - 1) * bi != total_bits:
                raise ValueError(f"pair {(bs, bi)} does not spend exactly {total_bits} bits")
    best = None
    for pair in sorted(pairs, key=lambda p: -p[0]):
        fb = FeedbackConfig.uniform(k, *pair)
        prof, rep = select_joint(budget, nt, fb)
        if best is None or rep.sum_rate > best[2] * (1 + _REL_TIE):
            best = (pair, prof, rep.sum_rate)
    return best
