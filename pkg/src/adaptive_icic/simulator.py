"""Channel-level Monte Carlo simulation of the coordinated downlink.

Trials are processed in fixed-size blocks.  Block ``b`` draws its channels
from ``SeedSequence(seed, spawn_key=(b, link))``, so results depend only on
``(seed, trials, block_size)`` and never on how blocks are spread over
worker processes.  Block sums are reduced in block order.

Conventions: ``h[..., i, j, :]`` is the channel from BS ``j`` to user ``i``
with i.i.d. CN(0, 1) entries, and the effective gain of precoder ``f`` is
``|h^H f|^2``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import LinkBudget, Scenario
from .profiles import FeedbackConfig, Strategy, StrategyProfile

__all__ = [
    "McEstimate",
    "Codebook",
    "complex_normal",
    "beamformer_eigen",
    "beamformer_zf",
    "random_codebook",
    "rvq_quantize",
    "mc_ergodic_rate",
    "mc_profile_rates",
    "sample_signal_power",
    "sample_interference_power",
    "sample_zf_leakage",
    "sample_quantization_error",
]

DEFAULT_BLOCK = 4096
Z95 = 1.959963984540054
_CODEBOOK_TAG = 7919
_MAX_CORR_ELEMS = 1 << 22


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean of ``log2(1 + SINR)`` with its 95% half width."""

    mean: float
    half_width_95: float
    trials: int
    std: float = float("nan")

    def half_width(self, level: float = 0.95) -> float:
        from scipy.stats import norm
        return float(norm.ppf(0.5 + level / 2) * self.std / math.sqrt(self.trials))

    def contains(self, value: float, level: float = 0.95) -> bool:
        return abs(value - self.mean) <= self.half_width(level)

    @classmethod
    def from_moments(cls, total: float, total_sq: float, trials: int) -> "McEstimate":
        mean = total / trials
        var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
        std = math.sqrt(var)
        return cls(mean, Z95 * std / math.sqrt(trials), trials, std)


# ---------------------------------------------------------------------------
# channels and precoders
# ---------------------------------------------------------------------------

def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: two real normals scaled by 1/sqrt(2)."""
    z = rng.standard_normal((*np.atleast_1d(shape), 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _inner(f, h):
    # f^H h along the last axis
    return np.einsum("...k,...k->...", f.conj(), h)


def beamformer_eigen(h_own: np.ndarray) -> np.ndarray:
    """Unit vector along ``h_own`` (batched over leading axes).

    Raises
    ------
    ValueError
        If any channel is the zero vector.
    """
    h = np.asarray(h_own, dtype=complex)
    nrm = np.linalg.norm(h, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("cannot beamform along a zero channel")
    return h / nrm


def _orthonormal_basis(v: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Gram-Schmidt (applied twice) on the rows ``v[..., k, :]``."""
    q = np.array(v, dtype=complex)
    k = q.shape[-2]
    scale = np.linalg.norm(q, axis=-1)
    for c in range(k):
        col = q[..., c, :]
        for _ in range(2):
            for p in range(c):
                qp = q[..., p, :]
                col = col - qp * _inner(qp, col)[..., None]
        nrm = np.linalg.norm(col, axis=-1)
        if np.any(nrm <= rank_tol * np.maximum(scale[..., c], 1e-300)):
            raise np.linalg.LinAlgError("victim channels are rank deficient")
        q[..., c, :] = col / nrm[..., None]
    return q


def beamformer_zf(h_own: np.ndarray, victims: np.ndarray) -> np.ndarray:
    """Zero-forcing precoder: ``h_own`` projected on the nullspace of the
    victim channels, normalized.

    Parameters
    ----------
    h_own : array, shape (..., nt)
    victims : array, shape (..., k, nt)
        ``1 <= k <= nt - 1`` channels to protect.

    Raises
    ------
    ValueError
        If ``k`` is outside ``[1, nt - 1]``.
    numpy.linalg.LinAlgError
        If the victim channels are (numerically) linearly dependent.
    """
    h = np.asarray(h_own, dtype=complex)
    v = np.asarray(victims, dtype=complex)
    if v.ndim == h.ndim:
        v = v[..., None, :]
    nt, k = h.shape[-1], v.shape[-2]
    if not 1 <= k <= nt - 1:
        raise ValueError(f"can cancel toward 1..{nt - 1} users with nt={nt}, asked for {k}")
    q = _orthonormal_basis(v)
    w = h.copy()
    for _ in range(2):
        for c in range(k):
            w = w - q[..., c, :] * _inner(q[..., c, :], w)[..., None]
    return beamformer_eigen(w)


# ---------------------------------------------------------------------------
# random vector quantization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Codebook:
    """``L`` isotropic unit-norm vectors (rows of ``vectors``)."""

    vectors: np.ndarray
    seed: object = None

    @property
    def size(self) -> int:
        return self.vectors.shape[0]


def random_codebook(bits: int, nt: int, rng) -> Codebook:
    """RVQ codebook of ``2**bits`` vectors drawn uniformly on the unit sphere."""
    if bits < 0 or int(bits) != bits:
        raise ValueError("bits must be a nonnegative integer")
    seed = rng if isinstance(rng, (int, np.random.SeedSequence)) else None
    gen = np.random.default_rng(rng)
    return Codebook(beamformer_eigen(complex_normal(gen, (2 ** int(bits), nt))), seed)


def rvq_quantize(h: np.ndarray, codebook) -> tuple[np.ndarray, np.ndarray]:
    """Nearest codeword to the direction of ``h`` by ``|h~^H c|``.

    Batched over the leading axes of ``h``.  Ties go to the lowest index.

    Returns
    -------
    index : int array
    direction : complex array, same shape as ``h``
    """
    cb = codebook.vectors if isinstance(codebook, Codebook) else np.asarray(codebook)
    h = beamformer_eigen(h)
    flat = h.reshape(-1, h.shape[-1])
    idx = np.empty(flat.shape[0], dtype=np.intp)
    step = max(1, _MAX_CORR_ELEMS // cb.shape[0])
    for s in range(0, flat.shape[0], step):
        corr = np.abs(flat[s:s + step] @ cb.conj().T)
        idx[s:s + step] = np.argmax(corr, axis=-1)
    idx = idx.reshape(h.shape[:-1])
    return (int(idx) if idx.ndim == 0 else idx), cb[idx]


# ---------------------------------------------------------------------------
# ergodic rates
# ---------------------------------------------------------------------------

def _block_sizes(trials: int, block_size: int):
    n_full, rest = divmod(trials, block_size)
    return [block_size] * n_full + ([rest] if rest else [])


def _child(seed, *key) -> np.random.SeedSequence:
    """Substream ``key`` of an int seed or of a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(seed, spawn_key=key)


def _block_rng(seed, block: int, link: int) -> np.random.Generator:
    return np.random.default_rng(_child(seed, block, link))


def _draw_channels(seed, block: int, n: int, k: int, nt: int) -> np.ndarray:
    h = np.empty((n, k, k, nt), dtype=complex)
    for i in range(k):
        for j in range(k):
            h[:, i, j, :] = complex_normal(_block_rng(seed, block, i * k + j), (n, nt))
    return h


def _cdi(h, bits, seed, block):
    """Directions known at the BSs: exact, or RVQ-quantized per link with a
    fresh per-block codebook for every (user, BS) pair."""
    n, k, _, nt = h.shape
    if bits is None:
        return beamformer_eigen(h)
    out = np.empty_like(h)
    for i in range(k):
        for j in range(k):
            b = bits[i][j]
            if math.isinf(b):
                out[:, i, j] = beamformer_eigen(h[:, i, j])
            else:
                ss = _child(seed, _CODEBOOK_TAG, block, i, j)
                _, out[:, i, j] = rvq_quantize(h[:, i, j], random_codebook(int(b), nt, ss))
    return out


def _precoder(cdi, bs: int, strat: Strategy):
    own = cdi[:, bs, bs]
    if strat.is_bf:
        return own
    vict = np.stack([cdi[:, v, bs] for v in sorted(strat.victims)], axis=1)
    return beamformer_zf(own, vict)


def _block_moments(args):
    """Per-profile, per-user sums of log2(1+SINR) and their squares."""
    seed, block, n, p, nt, profiles, bits = args
    k = p.shape[0]
    h = _draw_channels(seed, block, n, k, nt)
    cdi = _cdi(h, bits, seed, block)
    # gain[(j, strategy)][:, i] = |h_ij^H f_j|^2
    gains = {}
    for prof in profiles:
        for j, s in enumerate(prof):
            if (j, s) not in gains:
                f = _precoder(cdi, j, s)
                gains[(j, s)] = np.abs(np.einsum("nik,nk->ni", h[:, :, j, :].conj(), f)) ** 2
    # slot k holds the per-trial sum over users
    out = np.zeros((len(profiles), k + 1, 2))
    for q, prof in enumerate(profiles):
        total = np.zeros(n)
        for i in range(k):
            sig = p[i, i] * gains[(i, prof[i])][:, i]
            den = 1.0
            for j in range(k):
                if j != i:
                    den = den + p[i, j] * gains[(j, prof[j])][:, i]
            r = np.log2(1.0 + sig / den)
            total += r
            out[q, i, 0] = r.sum()
            out[q, i, 1] = np.dot(r, r)
        out[q, k, 0] = total.sum()
        out[q, k, 1] = np.dot(total, total)
    return out


def mc_profile_rates(scenario: Scenario, budget: LinkBudget,
                     profiles: Sequence[StrategyProfile], trials: int, seed=0,
                     fb: FeedbackConfig | None = None, block_size: int = DEFAULT_BLOCK,
                     workers: int = 1, include_sum: bool = False) -> dict:
    """Monte Carlo ergodic rates of several profiles on common channel draws.

    Returns
    -------
    dict
        ``{profile: [McEstimate for user 0, user 1, ...]}``; with
        ``include_sum`` one more estimate for the per-trial sum rate is
        appended.

    Raises
    ------
    ValueError
        If ``trials < 1`` or a profile is infeasible for ``scenario.nt``
        (checked before any sampling).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    profiles = list(profiles)
    for prof in profiles:
        scenario.check_profile(prof)
    if budget.n_cells != scenario.n_cells:
        raise ValueError("budget and scenario disagree on the number of cells")
    bits = None if fb is None else fb.bits
    p = np.asarray(budget.received_snr)
    jobs = [(seed, b, n, p, scenario.nt, profiles, bits)
            for b, n in enumerate(_block_sizes(int(trials), int(block_size)))]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_block_moments, jobs))
    else:
        parts = [_block_moments(j) for j in jobs]
    acc = np.zeros_like(parts[0])
    for part in parts:
        acc += part
    slots = scenario.n_cells + (1 if include_sum else 0)
    return {prof: [McEstimate.from_moments(acc[q, i, 0], acc[q, i, 1], int(trials))
                   for i in range(slots)]
            for q, prof in enumerate(profiles)}


def mc_ergodic_rate(scenario: Scenario, budget: LinkBudget, profile: StrategyProfile,
                    trials: int, seed=0, fb: FeedbackConfig | None = None,
                    block_size: int = DEFAULT_BLOCK, workers: int = 1) -> list[McEstimate]:
    """Per-user Monte Carlo ergodic rates for one profile.

    Precoders use the true channel directions (perfect CSI) or, when ``fb``
    is given, RVQ-quantized directions with ``fb.bits[i][j]`` bits per link.
    """
    return mc_profile_rates(scenario, budget, [profile], trials, seed, fb,
                            block_size, workers)[profile]


# ---------------------------------------------------------------------------
# samplers used by distribution checks
# ---------------------------------------------------------------------------

def sample_signal_power(nt: int, n_victims: int, n: int, rng) -> np.ndarray:
    """``|h^H f|^2`` for eigen-beamforming (``n_victims = 0``) or ZF toward
    ``n_victims`` independent users."""
    rng = np.random.default_rng(rng)
    h = complex_normal(rng, (n, nt))
    if n_victims == 0:
        f = beamformer_eigen(h)
    else:
        f = beamformer_zf(h, complex_normal(rng, (n, n_victims, nt)))
    return np.abs(_inner(h, f)) ** 2


def sample_interference_power(nt: int, n_victims: int, n: int, rng) -> np.ndarray:
    """``|g^H f|^2`` for a user ``g`` that the precoder ignores."""
    rng = np.random.default_rng(rng)
    h = complex_normal(rng, (n, nt))
    if n_victims == 0:
        f = beamformer_eigen(h)
    else:
        f = beamformer_zf(h, complex_normal(rng, (n, n_victims, nt)))
    g = complex_normal(rng, (n, nt))
    return np.abs(_inner(g, f)) ** 2


def sample_zf_leakage(nt: int, bits: int, n: int, rng, codebook_every: int = 1024) -> np.ndarray:
    """Residual interference ``|g^H f|^2`` when ``f`` zero-forces the
    RVQ-quantized direction of victim channel ``g`` (own direction exact).
    A fresh codebook is drawn every ``codebook_every`` samples."""
    rng = np.random.default_rng(rng)
    out = np.empty(n)
    for s in range(0, n, codebook_every):
        m = min(codebook_every, n - s)
        cb = random_codebook(bits, nt, rng)
        h = complex_normal(rng, (m, nt))
        g = complex_normal(rng, (m, nt))
        _, g_hat = rvq_quantize(g, cb)
        f = beamformer_zf(h, g_hat)
        out[s:s + m] = np.abs(_inner(g, f)) ** 2
    return out


def sample_quantization_error(nt: int, bits: int, n: int, rng, codebook_every: int = 1024) -> np.ndarray:
    """``sin^2`` of the angle between a channel direction and its RVQ codeword."""
    rng = np.random.default_rng(rng)
    out = np.empty(n)
    for s in range(0, n, codebook_every):
        m = min(codebook_every, n - s)
        cb = random_codebook(bits, nt, rng)
        h = complex_normal(rng, (m, nt))
        _, c = rvq_quantize(h, cb)
        out[s:s + m] = 1.0 - np.abs(_inner(beamformer_eigen(h), c)) ** 2
    return out
