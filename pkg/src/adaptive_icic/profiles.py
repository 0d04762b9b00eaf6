"""Transmission strategies, strategy profiles and feedback-bit configurations.

Cells, users and base stations are indexed from 0; user ``i`` is served by
BS ``i``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = ["Strategy", "BF", "IC", "StrategyProfile", "FeedbackConfig",
           "two_cell_profiles", "reduced_strategy_set"]


@dataclass(frozen=True, order=True)
class Strategy:
    """One BS's choice: beamform selfishly (no victims) or zero-force toward
    the users in ``victims``."""

    victims: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "victims", frozenset(int(v) for v in self.victims))

    @property
    def is_bf(self) -> bool:
        return not self.victims

    @property
    def constraints(self) -> int:
        return len(self.victims)

    def label(self, short: bool = False) -> str:
        if self.is_bf:
            return "BF"
        if short:
            return "IC"
        return "IC(" + ",".join(str(v) for v in sorted(self.victims)) + ")"

    def __repr__(self):
        return self.label()


BF = Strategy()


def IC(*victims: int) -> Strategy:
    """Zero-forcing strategy toward the given users."""
    if not victims:
        raise ValueError("IC needs at least one victim")
    return Strategy(frozenset(victims))


@dataclass(frozen=True)
class StrategyProfile:
    """Strategies of all coordinated BSs, in BS order."""

    strategies: tuple
    mode: str = "joint"

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.mode not in ("joint", "distributed"):
            raise ValueError(f"mode must be 'joint' or 'distributed', got {self.mode!r}")
        k = len(self.strategies)
        for i, s in enumerate(self.strategies):
            if i in s.victims:
                raise ValueError(f"BS {i} cannot cancel toward its own user")
            if any(v < 0 or v >= k for v in s.victims):
                raise ValueError(f"BS {i} has victims outside the cluster: {sorted(s.victims)}")

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, i):
        return self.strategies[i]

    def __iter__(self):
        return iter(self.strategies)

    @property
    def n_cells(self) -> int:
        return len(self.strategies)

    @property
    def total_constraints(self) -> int:
        return sum(s.constraints for s in self.strategies)

    def cancels(self, bs: int, user: int) -> bool:
        return user in self.strategies[bs].victims

    def feasible(self, nt: int) -> bool:
        return all(s.constraints <= nt - 1 for s in self.strategies)

    def label(self) -> str:
        short = self.n_cells == 2
        return "(" + ",".join(s.label(short) for s in self.strategies) + ")"

    def __repr__(self):
        return f"StrategyProfile{self.label()}"

    def sort_key(self):
        """Tie-break order: fewer zero-forcing constraints, then lexicographic."""
        return (self.total_constraints,
                tuple((s.constraints, tuple(sorted(s.victims))) for s in self.strategies))


def two_cell_profiles() -> list[StrategyProfile]:
    """The four 2-cell profiles (BF,BF), (BF,IC), (IC,BF), (IC,IC)."""
    opts = [(BF, IC(1)), (BF, IC(0))]
    return [StrategyProfile((s1, s2)) for s1 in opts[0] for s2 in opts[1]]


def reduced_strategy_set(bs: int, nearest: int, n_cells: int = 3) -> list[Strategy]:
    """{BF, IC(nearest neighbour), IC(all neighbours)} for one BS."""
    others = [j for j in range(n_cells) if j != bs]
    if nearest not in others:
        raise ValueError(f"nearest victim {nearest} is not a neighbour of BS {bs}")
    return [BF, IC(nearest), IC(*others)]


def _as_bits(x) -> float:
    x = float(x)
    if x < 0 or math.isnan(x):
        raise ValueError(f"feedback bits must be >= 0, got {x!r}")
    if math.isfinite(x) and x != int(x):
        raise ValueError(f"feedback bits must be integers, got {x!r}")
    return x


@dataclass(frozen=True)
class FeedbackConfig:
    """Feedback bits ``bits[i][j]`` that user ``i`` spends on the channel
    direction toward BS ``j``.  ``math.inf`` means perfect CDI."""

    bits: tuple

    def __post_init__(self):
        rows = tuple(tuple(_as_bits(b) for b in row) for row in self.bits)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("bits must be a square matrix")
        object.__setattr__(self, "bits", rows)

    @classmethod
    def uniform(cls, n_cells: int, home_bits, helper_bits) -> "FeedbackConfig":
        """``B_s`` bits toward the home BS and ``B_I`` toward every helper BS."""
        return cls(tuple(tuple(home_bits if i == j else helper_bits for j in range(n_cells))
                         for i in range(n_cells)))

    @property
    def n_cells(self) -> int:
        return len(self.bits)

    def codebook_size(self, user: int, bs: int) -> float:
        return 2.0 ** self.bits[user][bs]

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=float)


def enumerate_profiles(strategy_sets: Sequence[Iterable[Strategy]], mode="joint"):
    """Cartesian product of per-BS strategy sets."""
    for combo in itertools.product(*strategy_sets):
        yield StrategyProfile(combo, mode=mode)
