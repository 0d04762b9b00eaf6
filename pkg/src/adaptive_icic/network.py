"""Cell layouts, path loss and user placement.

Noise has unit power, so every received power here is an SNR.

Layouts
-------
``two_cell``
    BSs at ``(-R, 0)`` and ``(+R, 0)``; the shared cell edge passes through
    the origin.
``three_cell``
    Hexagonal cells of circumradius ``R`` meeting at a common corner placed
    at the origin.  The BSs sit on a circle of radius ``R`` around it, so the
    inter-site distance is ``sqrt(3) R``.  Random users are dropped in the
    *shadow region*: the 120-degree sector of each hexagon that faces the
    common corner (a rhombus with corners at the BS, the common corner and
    the two hexagon vertices next to it), minus the disc of radius
    ``min_home_distance * R`` around the BS.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import StrategyProfile

__all__ = [
    "LinkBudget",
    "Scenario",
    "ShadowRegion",
    "db_to_linear",
    "linear_to_db",
    "received_power",
    "bs_positions",
    "build_scenario",
    "sample_shadow_users",
    "dump_scenario",
    "load_scenario",
]

LAYOUTS = ("two_cell", "three_cell")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def received_power(distance, p0: float, cell_radius: float, alpha: float):
    """Average received SNR ``p0 * (R / d) ** alpha`` at distance ``d``.

    Raises
    ------
    ValueError
        If any distance is not strictly positive.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be > 0 (user co-located with a BS?)")
    out = p0 * (cell_radius / d) ** alpha
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class LinkBudget:
    """Average received SNRs ``received_snr[i, j]`` of user ``i`` from BS ``j``."""

    edge_snr_p0: float
    cell_radius: float
    pathloss_exp: float
    received_snr: np.ndarray

    def __post_init__(self):
        p = np.array(self.received_snr, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("received_snr must be a square matrix")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("received_snr entries must be finite and nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "received_snr", p)

    @classmethod
    def from_positions(cls, bs_xy, user_xy, p0: float, cell_radius: float,
                       alpha: float) -> "LinkBudget":
        d = distance_matrix(user_xy, bs_xy)
        return cls(float(p0), float(cell_radius), float(alpha),
                   received_power(d, p0, cell_radius, alpha))

    @property
    def n_cells(self) -> int:
        return self.received_snr.shape[0]

    def __getitem__(self, idx):
        return self.received_snr[idx]

    def scaled(self, factor: float) -> "LinkBudget":
        """All powers divided by ``factor`` (noise inflated by ``factor``)."""
        return LinkBudget(self.edge_snr_p0 / factor, self.cell_radius, self.pathloss_exp,
                          self.received_snr / factor)

    def swapped(self, perm) -> "LinkBudget":
        """Relabel cells: new cell ``k`` is old cell ``perm[k]``."""
        perm = list(perm)
        return LinkBudget(self.edge_snr_p0, self.cell_radius, self.pathloss_exp,
                          self.received_snr[np.ix_(perm, perm)])


def distance_matrix(user_xy, bs_xy) -> np.ndarray:
    u = np.asarray(user_xy, dtype=float)
    b = np.asarray(bs_xy, dtype=float)
    return np.linalg.norm(u[:, None, :] - b[None, :, :], axis=-1)


def bs_positions(layout: str, cell_radius: float) -> np.ndarray:
    if layout == "two_cell":
        return np.array([[-cell_radius, 0.0], [cell_radius, 0.0]])
    if layout == "three_cell":
        ang = np.deg2rad(90.0 + 120.0 * np.arange(3))
        return cell_radius * np.column_stack([np.cos(ang), np.sin(ang)])
    raise ValueError(f"unknown layout {layout!r}; expected one of {LAYOUTS}")


@dataclass(frozen=True)
class ShadowRegion:
    """Where random 3-cell users are dropped (see module docstring)."""

    min_home_distance: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.min_home_distance < 1.0:
            raise ValueError("min_home_distance must be in [0, 1)")


def _rot(v, deg):
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def shadow_sector(cell: int, cell_radius: float) -> np.ndarray:
    """Corners (BS, vertex, common corner, vertex) of the cell's shadow sector."""
    bs = bs_positions("three_cell", cell_radius)[cell]
    u = -bs / cell_radius
    va = bs + cell_radius * _rot(u, 60.0)
    vb = bs + cell_radius * _rot(u, -60.0)
    return np.array([bs, va, np.zeros(2), vb])


def sample_shadow_users(rng: np.random.Generator, cell_radius: float,
                        region: ShadowRegion = ShadowRegion()) -> np.ndarray:
    """One uniform user per cell inside its shadow sector."""
    users = np.empty((3, 2))
    rmin = region.min_home_distance * cell_radius
    for k in range(3):
        bs, va, _, vb = shadow_sector(k, cell_radius)
        while True:
            u, v = rng.random(2)
            p = bs + u * (va - bs) + v * (vb - bs)
            if np.hypot(*(p - bs)) >= rmin:
                users[k] = p
                break
    return users


@dataclass(frozen=True, eq=False)
class Scenario:
    """Positions of BSs and their single active users, plus antenna count."""

    layout: str
    bs_positions: np.ndarray
    user_positions: np.ndarray
    nt: int
    cell_radius: float = 1000.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}")
        bs = np.array(self.bs_positions, dtype=float)
        us = np.array(self.user_positions, dtype=float)
        if bs.shape != us.shape or bs.shape[1] != 2:
            raise ValueError("need one 2-D user position per BS")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError("nt must be a positive integer")
        d = distance_matrix(us, bs)
        if np.any(d <= 0):
            raise ValueError("a user is co-located with a BS")
        for i in range(len(us)):
            # ties on the cell boundary are allowed
            if d[i, i] > d[i].min() * (1 + 1e-12):
                raise ValueError(f"user {i} at {us[i].tolist()} is outside its home cell")
        for a in (bs, us):
            a.setflags(write=False)
        object.__setattr__(self, "bs_positions", bs)
        object.__setattr__(self, "user_positions", us)
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def n_cells(self) -> int:
        return len(self.bs_positions)

    def distances(self) -> np.ndarray:
        return distance_matrix(self.user_positions, self.bs_positions)

    def link_budget(self, p0: float, alpha: float = 3.7) -> LinkBudget:
        return LinkBudget.from_positions(self.bs_positions, self.user_positions, p0,
                                         self.cell_radius, alpha)

    def check_profile(self, profile: StrategyProfile):
        if profile.n_cells != self.n_cells:
            raise ValueError(f"profile has {profile.n_cells} BSs, scenario has {self.n_cells}")
        if not profile.feasible(self.nt):
            raise ValueError(f"profile {profile.label()} needs more than nt-1={self.nt - 1} "
                             "zero-forcing constraints at some BS")


def build_scenario(layout: str, placement="random", p0_db: float = 10.0,
                   alpha: float = 3.7, nt: int = 4, seed=None,
                   cell_radius: float = 1000.0,
                   region: ShadowRegion = ShadowRegion()):
    """Build a scenario and its link budget.

    Parameters
    ----------
    layout : {"two_cell", "three_cell"}
    placement : "random" or array-like
        For ``two_cell`` a pair ``(x1, x2)`` puts user ``i`` at ``(x_i R, 0)``,
        e.g. ``(-0.1, 0.3)``.  An ``(K, 2)`` array gives positions in units of
        ``R``.  ``"random"`` (three_cell only) drops users uniformly in the
        shadow region using ``seed``.
    p0_db : float
        Edge SNR in dB.
    alpha : float
        Path-loss exponent.
    nt : int
        BS antennas.
    seed : int or numpy SeedSequence, optional

    Returns
    -------
    (Scenario, LinkBudget)
    """
    bs = bs_positions(layout, cell_radius)
    meta = {}
    if isinstance(placement, str):
        if placement != "random":
            raise ValueError(f"unknown placement {placement!r}")
        if layout != "three_cell":
            raise ValueError("random placement is defined for the three_cell layout")
        rng = np.random.default_rng(seed)
        users = sample_shadow_users(rng, cell_radius, region)
        meta["seed"] = seed
    else:
        arr = np.asarray(placement, dtype=float)
        if arr.ndim == 1:
            if layout != "two_cell" or arr.shape != (2,):
                raise ValueError("1-D placement means (x1, x2) on the two-cell BS axis")
            arr = np.column_stack([arr, np.zeros(2)])
        users = arr * cell_radius
    scen = Scenario(layout, bs, users, nt, cell_radius, meta)
    return scen, scen.link_budget(float(db_to_linear(p0_db)), alpha)


# ---------------------------------------------------------------------------
# plain-text key/value serialization
# ---------------------------------------------------------------------------

def _fmt_points(a) -> str:
    return "; ".join(f"{x!r},{y!r}" for x, y in np.asarray(a, dtype=float).tolist())


def _parse_points(s: str) -> np.ndarray:
    return np.array([[float(t) for t in p.split(",")] for p in s.split(";") if p.strip()])


def dump_scenario(scenario: Scenario, budget: LinkBudget | None = None) -> str:
    """Serialize to ``key = value`` lines (``#`` starts a comment).

    Keys: ``layout``, ``nt``, ``cell_radius``, ``bs_positions``,
    ``user_positions`` (``x,y; x,y; ...`` in meters) and, when a budget is
    given, ``p0_db`` and ``alpha``.
    """
    lines = ["# adaptive_icic scenario",
             f"layout = {scenario.layout}",
             f"nt = {scenario.nt}",
             f"cell_radius = {scenario.cell_radius!r}",
             f"bs_positions = {_fmt_points(scenario.bs_positions)}",
             f"user_positions = {_fmt_points(scenario.user_positions)}"]
    if budget is not None:
        lines.append(f"p0_db = {float(linear_to_db(budget.edge_snr_p0))!r}")
        lines.append(f"alpha = {budget.pathloss_exp!r}")
    return "\n".join(lines) + "\n"


def parse_key_values(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {raw!r}")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def load_scenario(text: str):
    """Inverse of :func:`dump_scenario`; returns ``(Scenario, LinkBudget or None)``."""
    kv = parse_key_values(text)
    try:
        scen = Scenario(kv["layout"], _parse_points(kv["bs_positions"]),
                        _parse_points(kv["user_positions"]), int(kv["nt"]),
                        float(kv.get("cell_radius", 1000.0)))
    except KeyError as e:
        raise ValueError(f"scenario text is missing key {e.args[0]!r}") from None
    budget = None
    if "p0_db" in kv:
        budget = scen.link_budget(float(db_to_linear(float(kv["p0_db"]))),
                                  float(kv.get("alpha", 3.7)))
    return scen, budget
