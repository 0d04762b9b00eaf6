"""Experiment runners that emit plot-ready CSV.

Every runner takes an :class:`ExperimentConfig`, is deterministic given the
config (including its seed), and returns the CSV text.  Each data row
carries a ``config_hash`` column identifying the config that produced it.

Random 3-cell placements are drawn from ``SeedSequence(seed,
spawn_key=(k,))`` for placement ``k``, so the first ``n`` placements are the
same whatever the ensemble size, and every P0 value sees the same users.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .coordinator import (PAPER_BIT_PAIRS, allocate_bits, bstar_bits, csi_cost, evaluate,
                          no_icic_profile, select_joint, static_icic_profile)
from .network import ShadowRegion, build_scenario, db_to_linear, parse_key_values
from .profiles import FeedbackConfig, two_cell_profiles
from .simulator import mc_profile_rates

__all__ = [
    "ExperimentConfig",
    "EnsembleStats",
    "EXPERIMENTS",
    "load_config",
    "placement_budgets",
    "run_sim_vs_calc",
    "run_regions",
    "run_compare_3cell",
    "run_csi_cost",
    "run_feedback",
    "run_experiment",
    "gnuplot_script",
]

EXPERIMENTS = ("simvcalc", "regions", "compare3", "csicost", "feedback")

_DEFAULT_P0 = {
    "simvcalc": (10.0,),
    "regions": (-5.0, 5.0, 10.0),
    "compare3": (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
    "csicost": (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
    "feedback": (0.0, 5.0, 10.0, 15.0),
}
_LISTS = ("p0_db", "sweep", "bit_pairs")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    Attributes
    ----------
    experiment : str
        One of :data:`EXPERIMENTS`.
    p0_db : tuple of float
        Edge-SNR sweep in dB; empty means the experiment's default.
    alpha, nt, cell_radius : path-loss exponent, BS antennas, cell radius.
    trials : int
        Monte Carlo trials per sweep point (``simvcalc`` only).
    seed : int
    placements : int
        Random 3-cell placements per P0.
    sweep : tuple of float
        ``simvcalc``: user-2 positions ``x2`` (units of R).  ``regions``:
        grid coordinates used for both users.  Empty means the default.
    user1_x : float
        Fixed user-1 position for ``simvcalc``.
    bits : float or None
        ``simvcalc``: uniform feedback bits per link (None = perfect CSI).
    delta_r : float
        Allowed rate-loss factor for the helper-link bit rule.
    home_bits : int
        ``B_s`` of the fixed-home-bits feedback mode.
    total_bits, bit_pairs
        Budget and candidate ``(B_s, B_I)`` pairs for adaptive allocation;
        the first pair is the uniform baseline.
    min_home_distance : float
        Inner exclusion radius of the shadow region (units of R).
    workers : int
        Worker processes (does not change the output).
    out : str
        Output path; ``-`` means stdout.  Not part of the hash.
    """

    experiment: str = "compare3"
    p0_db: tuple = ()
    alpha: float = 3.7
    nt: int = 4
    cell_radius: float = 1000.0
    trials: int = 10_000
    seed: int = 1
    placements: int = 2000
    sweep: tuple = ()
    user1_x: float = -0.1
    bits: float | None = None
    delta_r: float = 2.0
    home_bits: int = 6
    total_bits: int = 30
    bit_pairs: tuple = PAPER_BIT_PAIRS
    min_home_distance: float = 0.0
    workers: int = 1
    out: str = "-"

    def __post_init__(self):
        object.__setattr__(self, "p0_db", tuple(float(x) for x in self.p0_db))
        object.__setattr__(self, "sweep", tuple(float(x) for x in self.sweep))
        object.__setattr__(self, "bit_pairs",
                           tuple((int(a), int(b)) for a, b in self.bit_pairs))
        self.validate()

    def validate(self):
        """Raise ValueError on any inconsistent setting."""
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"expected one of {', '.join(EXPERIMENTS)}")
        if not all(math.isfinite(x) for x in self.p0_db):
            raise ValueError("p0_db values must be finite")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive")
        if int(self.nt) != self.nt or self.nt < 2:
            raise ValueError("nt must be an integer >= 2")
        if self.experiment in ("compare3", "csicost", "feedback") and self.nt < 3:
            raise ValueError("3-cell experiments need nt >= 3 for static ICIC")
        if not self.cell_radius > 0:
            raise ValueError("cell_radius must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.placements < 1:
            raise ValueError("placements must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.experiment == "simvcalc":
            if not -1.0 < self.user1_x < 0.0:
                raise ValueError("user1_x must lie in user 1's cell, (-1, 0)")
            if any(not 0.0 <= x < 1.0 for x in self.sweep):
                raise ValueError("simvcalc sweep points must lie in [0, 1)")
        if self.experiment == "regions" and any(not 0.0 < x < 1.0 for x in self.sweep):
            raise ValueError("regions grid points must lie in (0, 1)")
        if self.bits is not None and (self.bits < 0 or self.bits != int(self.bits)):
            raise ValueError("bits must be a nonnegative integer")
        if not self.delta_r > 1:
            raise ValueError("delta_r must be > 1")
        if self.home_bits < 0:
            raise ValueError("home_bits must be >= 0")
        if not self.bit_pairs:
            raise ValueError("bit_pairs must not be empty")
        for bs, bi in self.bit_pairs:
            if min(bs, bi) < 0 or bs + 2 * bi != self.total_bits:
                raise ValueError(f"bit pair {(bs, bi)} does not spend total_bits="
                                 f"{self.total_bits} over one home and two helper links")
        ShadowRegion(self.min_home_distance)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def p0_values(self) -> tuple:
        return self.p0_db or _DEFAULT_P0[self.experiment]

    @property
    def sweep_values(self) -> tuple:
        if self.sweep:
            return self.sweep
        if self.experiment == "simvcalc":
            return tuple(np.round(np.arange(0.05, 1.0, 0.1), 10))
        return tuple(np.round(np.arange(0.025, 1.0, 0.05), 10))

    def config_hash(self) -> str:
        """Short digest of every field that can change the output."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d["p0_db"] = list(self.p0_values)
        d["sweep"] = list(self.sweep_values) if self.experiment in ("simvcalc", "regions") else []
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _parse_list(s: str) -> list:
    return [t for t in s.replace(";", ",").replace(" ", ",").split(",") if t]


def config_from_mapping(kv: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from string ``key: value`` pairs (file or CLI)."""
    base = base or ExperimentConfig(experiment=kv.get("experiment", "compare3"))
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    out = {}
    for k, v in kv.items():
        if k not in types:
            raise ValueError(f"unknown config key {k!r}")
        cur = getattr(base, k)
        if k == "bit_pairs":
            nums = [int(x) for x in _parse_list(v.replace("/", ","))]
            if len(nums) % 2:
                raise ValueError("bit_pairs needs an even number of integers")
            out[k] = tuple(zip(nums[::2], nums[1::2]))
        elif k in _LISTS:
            out[k] = tuple(float(x) for x in _parse_list(v))
        elif k == "bits":
            out[k] = None if v.lower() in ("none", "inf", "") else float(v)
        elif isinstance(cur, bool):
            out[k] = v.lower() in ("1", "true", "yes")
        elif isinstance(cur, int):
            out[k] = int(v)
        elif isinstance(cur, float):
            out[k] = float(v)
        else:
            out[k] = v
    return replace(base, **out)


def load_config(text: str) -> ExperimentConfig:
    """Parse the ``key = value`` config format (``#`` starts a comment).

    List values (``p0_db``, ``sweep``) are comma separated; ``bit_pairs``
    is written ``10/10, 8/11, ...``.
    """
    return config_from_mapping(parse_key_values(text))


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass
class EnsembleStats:
    """Per-user throughput over a placement ensemble.

    ``mean`` is the average user rate, ``p5`` the 5th percentile of the
    per-user rate distribution (cell-edge throughput) and
    ``half_width_95`` the 95% CI of ``mean`` computed from per-placement
    means, since users of one placement are correlated.
    """

    mean: float
    p5: float
    half_width_95: float
    n: int

    @classmethod
    def of(cls, values) -> "EnsembleStats":
        """``values``: user rates, shape ``(placements, users)`` or ``(placements,)``."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        per = v.mean(axis=1)
        n = per.size
        hw = 1.959963984540054 * per.std(ddof=1) / math.sqrt(n) if n > 1 else math.nan
        return cls(float(v.mean()), float(np.percentile(v.ravel(), 5)), float(hw), int(n))


def _placement_positions(cfg: ExperimentConfig, k: int) -> np.ndarray:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(k,))
    scen, _ = build_scenario("three_cell", "random", 0.0, cfg.alpha, cfg.nt, ss,
                             cfg.cell_radius, ShadowRegion(cfg.min_home_distance))
    return scen


def placement_budgets(cfg: ExperimentConfig, p0_db: float) -> list:
    """Link budgets of the config's random 3-cell placements at ``p0_db``."""
    p0 = float(db_to_linear(p0_db))
    return [_placement_positions(cfg, k).link_budget(p0, cfg.alpha)
            for k in range(cfg.placements)]


def _pmap(fn, items, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(x) for x in items]


def _rows_to_csv(header, rows, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["config_hash"])
    h = cfg.config_hash()
    for r in rows:
        w.writerow([_fmt(x) for x in r] + [h])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _col(label: str) -> str:
    return label.strip("()").replace(",", "_")


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _simvcalc_point(args):
    cfg, p0_db, x2 = args
    scen, budget = build_scenario("two_cell", (cfg.user1_x, x2), p0_db, cfg.alpha, cfg.nt,
                                  cell_radius=cfg.cell_radius)
    fb = None if cfg.bits is None else FeedbackConfig.uniform(2, cfg.bits, cfg.bits)
    profs = two_cell_profiles()
    seed = np.random.SeedSequence(cfg.seed, spawn_key=(int(round(x2 * 1e6)),))
    mc = mc_profile_rates(scen, budget, profs, cfg.trials, seed, fb, include_sum=True)
    row = [p0_db, x2]
    for prof in profs:
        row += [evaluate(prof, budget, cfg.nt, fb).sum_rate, mc[prof][-1].mean,
                mc[prof][-1].half_width_95]
    return row


def run_sim_vs_calc(cfg: ExperimentConfig) -> str:
    """Two-cell sum rates along a user-2 sweep: closed form vs Monte Carlo.

    Columns: ``p0_db, x2`` and, per profile, ``<P>_calc, <P>_mc,
    <P>_mc_hw95`` (95% half width of the Monte Carlo sum rate).
    """
    header = ["p0_db", "x2"]
    for prof in two_cell_profiles():
        c = _col(prof.label())
        header += [f"{c}_calc", f"{c}_mc", f"{c}_mc_hw95"]
    jobs = [(cfg, p0, x2) for p0 in cfg.p0_values for x2 in cfg.sweep_values]
    return _rows_to_csv(header, _pmap(_simvcalc_point, jobs, cfg.workers), cfg)


def _regions_point(args):
    cfg, p0_db, x1, x2 = args
    _, budget = build_scenario("two_cell", (-x1, x2), p0_db, cfg.alpha, cfg.nt,
                               cell_radius=cfg.cell_radius)
    prof, rep = select_joint(budget, cfg.nt)
    return [p0_db, x1, x2, prof.label(), rep.sum_rate]


def run_regions(cfg: ExperimentConfig) -> str:
    """Selected 2-cell profile on a grid of user distances from the cell edge.

    User 1 sits at ``(-x1 R, 0)`` and user 2 at ``(x2 R, 0)``.
    Columns: ``p0_db, x1, x2, profile, sum_rate``.
    """
    g = cfg.sweep_values
    jobs = [(cfg, p0, x1, x2) for p0 in cfg.p0_values for x1 in g for x2 in g]
    return _rows_to_csv(["p0_db", "x1", "x2", "profile", "sum_rate"],
                        _pmap(_regions_point, jobs, cfg.workers), cfg)


def _compare_point(args):
    cfg, p0_db, k = args
    p0 = float(db_to_linear(p0_db))
    budget = _placement_positions(cfg, k).link_budget(p0, cfg.alpha)
    reps = [evaluate(no_icic_profile(3), budget, cfg.nt),
            evaluate(static_icic_profile(3), budget, cfg.nt),
            select_joint(budget, cfg.nt)[1]]
    return [r.user_rates for r in reps], [r.csi_cost for r in reps]


def compare_3cell_samples(cfg: ExperimentConfig, p0_db: float):
    """User rates and CSI costs of no-ICIC, static and adaptive ICIC.

    Returns
    -------
    rates : array, shape (placements, 3 systems, 3 users)
    costs : array, shape (placements, 3 systems)
    """
    jobs = [(cfg, p0_db, k) for k in range(cfg.placements)]
    out = _pmap(_compare_point, jobs, cfg.workers)
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


_SYSTEMS = ("no_icic", "static", "adaptive")


def run_compare_3cell(cfg: ExperimentConfig) -> str:
    """Average and 5th-percentile user throughput of the three systems.

    Columns: ``p0_db, placements`` then ``<sys>_avg, <sys>_avg_hw95,
    <sys>_p5`` (bps/Hz per user) for no-ICIC, static and adaptive ICIC,
    then the adaptive gains over no-ICIC in percent.
    """
    header = ["p0_db", "placements"]
    for s in _SYSTEMS:
        header += [f"{s}_avg", f"{s}_avg_hw95", f"{s}_p5"]
    header += ["gain_avg_pct", "gain_p5_pct"]
    rows = []
    for p0 in cfg.p0_values:
        rates, _ = compare_3cell_samples(cfg, p0)
        stats = [EnsembleStats.of(rates[:, c]) for c in range(3)]
        row = [p0, cfg.placements]
        for st in stats:
            row += [st.mean, st.half_width_95, st.p5]
        row += [100 * (stats[2].mean / stats[0].mean - 1), 100 * (stats[2].p5 / stats[0].p5 - 1)]
        rows.append(row)
    return _rows_to_csv(header, rows, cfg)


def run_csi_cost(cfg: ExperimentConfig) -> str:
    """Placement-averaged CSI cost (channel directions fed back).

    Columns: ``p0_db, placements, no_icic, static, adaptive``.
    """
    rows = []
    for p0 in cfg.p0_values:
        _, costs = compare_3cell_samples(cfg, p0)
        rows.append([p0, cfg.placements] + [float(c) for c in costs.mean(axis=0)])
    return _rows_to_csv(["p0_db", "placements"] + list(_SYSTEMS), rows, cfg)


FEEDBACK_MODES = ("perfect", "no_icic", "bstar", "home_fixed", "uniform", "allocated")


def _feedback_point(args):
    cfg, p0_db, k, bstar = args
    p0 = float(db_to_linear(p0_db))
    budget = _placement_positions(cfg, k).link_budget(p0, cfg.alpha)
    out = [select_joint(budget, cfg.nt)[1].user_rates,
           evaluate(no_icic_profile(3), budget, cfg.nt).user_rates]
    for bs, bi in ((bstar, bstar), (cfg.home_bits, bstar), cfg.bit_pairs[0]):
        out.append(select_joint(budget, cfg.nt, FeedbackConfig.uniform(3, bs, bi))[1].user_rates)
    pair, prof, _ = allocate_bits(budget, cfg.nt, cfg.total_bits, cfg.bit_pairs)
    out.append(evaluate(prof, budget, cfg.nt, FeedbackConfig.uniform(3, *pair)).user_rates)
    return out


def feedback_samples(cfg: ExperimentConfig, p0_db: float) -> np.ndarray:
    """User rates for :data:`FEEDBACK_MODES`, shape ``(placements, 6, 3)``."""
    bstar = bstar_bits(float(db_to_linear(p0_db)), cfg.nt, cfg.delta_r)
    jobs = [(cfg, p0_db, k, bstar) for k in range(cfg.placements)]
    return np.array(_pmap(_feedback_point, jobs, cfg.workers))


def run_feedback(cfg: ExperimentConfig) -> str:
    """Adaptive ICIC under the limited-feedback rate model.

    Modes: ``perfect`` (perfect CSI), ``no_icic`` (perfect CSI, all BF),
    ``bstar`` (B_s = B_I = B*), ``home_fixed`` (B_s = home_bits, B_I = B*),
    ``uniform`` (first bit pair, e.g. (10, 10)) and ``allocated`` (best
    pair per placement under the fixed total).  Columns: ``p0_db,
    placements, bstar`` then ``<mode>_avg, <mode>_p5`` in bps/Hz per user.
    """
    header = ["p0_db", "placements", "bstar"]
    for m in FEEDBACK_MODES:
        header += [f"{m}_avg", f"{m}_p5"]
    rows = []
    for p0 in cfg.p0_values:
        data = feedback_samples(cfg, p0)
        row = [p0, cfg.placements, bstar_bits(float(db_to_linear(p0)), cfg.nt, cfg.delta_r)]
        for c in range(len(FEEDBACK_MODES)):
            st = EnsembleStats.of(data[:, c])
            row += [st.mean, st.p5]
        rows.append(row)
    return _rows_to_csv(header, rows, cfg)


_RUNNERS = {
    "simvcalc": run_sim_vs_calc,
    "regions": run_regions,
    "compare3": run_compare_3cell,
    "csicost": run_csi_cost,
    "feedback": run_feedback,
}


def run_experiment(cfg: ExperimentConfig) -> str:
    return _RUNNERS[cfg.experiment](cfg)


_GNUPLOT_Y = {
    "simvcalc": ("x2", [f"{_col(p.label())}_{s}" for p in two_cell_profiles() for s in ("calc", "mc")]),
    "compare3": ("p0_db", [f"{s}_{m}" for s in _SYSTEMS for m in ("avg", "p5")]),
    "csicost": ("p0_db", list(_SYSTEMS)),
    "feedback": ("p0_db", [f"{m}_{s}" for m in FEEDBACK_MODES for s in ("avg", "p5")]),
}


def gnuplot_script(cfg: ExperimentConfig, csv_path: str) -> str:
    """A gnuplot script plotting the CSV at ``csv_path`` (columns by name)."""
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set grid", "set ylabel 'bps/Hz'"]
    if cfg.experiment == "regions":
        lines += ["set xlabel 'x1 / R'", "set ylabel 'x2 / R'",
                  "# one panel per p0_db; profile label in column 4",
                  f"plot '{csv_path}' using 2:3:4 with labels"]
        return "\n".join(lines) + "\n"
    x, ys = _GNUPLOT_Y[cfg.experiment]
    lines.append(f"set xlabel '{x}'")
    if cfg.experiment == "csicost":
        lines[-2] = "set ylabel 'channel directions'"
    parts = [f"'{csv_path}' using '{x}':'{y}' with linespoints title '{y}'" for y in ys]
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"
