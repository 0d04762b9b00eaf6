"""Exponential integrals, the I1/I2/I3 integral family and quadrature oracles.

Every closed-form ergodic rate in :mod:`adaptive_icic.rates` reduces to the
integral

    I1(a, b, m, n) = int_0^inf x^m exp(-a x) / ((x + b)^n (x + 1)) dx

which is expanded by partial fractions into

    I2(a, b, m, n) = int_0^inf x^m exp(-a x) / (x + b)^n dx
    I3(a, b, m)    = int_b^inf x^m exp(-a x) dx.

The expansions alternate in sign, so every table entry carries a magnitude
(sum of absolute values of the terms that produced it).  The ratio of that
magnitude to the value is a condition number; entries whose condition
number exceeds ``CANCELLATION_LIMIT`` are recomputed by adaptive
quadrature.

All functions work with exponentially *scaled* quantities internally
(``exp(ab) * I3``, ``exp(x) * E_n(x)``) so that nothing overflows when
``ab`` is large.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

__all__ = [
    "CANCELLATION_LIMIT",
    "ConvergenceError",
    "QuadratureSpec",
    "exp_integral_e1",
    "exp_integral_e1_scaled",
    "expn_scaled",
    "integral_i3",
    "integral_i2",
    "integral_i1",
    "i1_table",
    "quad_i1",
    "quad_i2",
    "quad_i3",
    "expected_log_oracle",
]

EULER_GAMMA = 0.57721566490153286061
LOG2E = 1.0 / math.log(2.0)

#: Largest tolerated ratio of sum(|terms|) to |result| before a closed-form
#: entry is replaced by quadrature.  1e6 keeps the expected relative error
#: of accepted entries below ~1e-10.
CANCELLATION_LIMIT = 1e6

_CF_EPS = 1e-16
_CF_MAXITER = 10_000


class ConvergenceError(RuntimeError):
    """Raised when an adaptive quadrature hits its subdivision limit."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive quadrature oracle."""

    abs_tol: float = 1e-300
    rel_tol: float = 1e-12
    max_subdivisions: int = 500

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


# ---------------------------------------------------------------------------
# Exponential integrals
# ---------------------------------------------------------------------------

def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!), used for x <= 1
    total = 0.0
    term = 1.0
    for k in range(1, 60):
        term *= -x / k
        inc = term / k
        total += inc
        if abs(inc) < 1e-17 * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _expn_cf_scaled(n: int, x: float) -> float:
    """exp(x) * E_n(x) by the modified Lentz continued fraction (x > 1)."""
    tiny = 1e-300
    b = x + n
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXITER):
        an = -i * (n - 1 + i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ConvergenceError(f"E_{n}({x}) continued fraction did not converge")


def exp_integral_e1_scaled(x: float) -> float:
    """Return ``exp(x) * E1(x)`` for ``x > 0``.

    Finite for every positive ``x``; behaves like ``1/x`` for large ``x``.
    """
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise ValueError(f"E1 requires x > 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _expn_cf_scaled(1, x)


def exp_integral_e1(x: float) -> float:
    """Exponential integral of the first order, ``int_x^inf exp(-t)/t dt``.

    Parameters
    ----------
    x : float
        Positive argument.

    Returns
    -------
    float
        ``E1(x)``.  Underflows gracefully to 0 for very large ``x``.

    Raises
    ------
    ValueError
        If ``x <= 0``.
    """
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise ValueError(f"E1 requires x > 0, got {x!r}")
    if x <= 1.0:
        return _e1_series(x)
    if x > 745.0:
        return 0.0
    return _expn_cf_scaled(1, x) * math.exp(-x)


def expn_scaled(nmax: int, x: float) -> np.ndarray:
    """Return ``[exp(x) E_1(x), ..., exp(x) E_nmax(x)]``.

    For ``x <= 1`` the values come from the E1 series followed by the
    forward recurrence ``E_{n+1} = (exp(-x) - x E_n) / n`` (stable there);
    for ``x > 1`` each order uses its own continued fraction.  ``x = 0`` is
    accepted for orders ``n >= 2`` only (``E_n(0) = 1/(n-1)``).
    """
    if nmax < 1:
        return np.empty(0)
    x = float(x)
    out = np.empty(nmax)
    if x < 0 or math.isnan(x):
        raise ValueError(f"E_n requires x >= 0, got {x!r}")
    if x == 0.0:
        out[0] = math.inf
        for n in range(2, nmax + 1):
            out[n - 1] = 1.0 / (n - 1)
        return out
    if x <= 1.0:
        out[0] = exp_integral_e1_scaled(x)
        for n in range(1, nmax):
            out[n] = (1.0 - x * out[n - 1]) / n
        return out
    for n in range(1, nmax + 1):
        out[n - 1] = _expn_cf_scaled(n, x)
    return out


# ---------------------------------------------------------------------------
# Closed-form integral family
# ---------------------------------------------------------------------------

def _j3_table(a: float, b: float, kmin: int, kmax: int) -> np.ndarray:
    """``exp(ab) * I3(a, b, k)`` for ``k = kmin..kmax`` (all entries >= 0)."""
    out = np.zeros(kmax - kmin + 1)
    if kmax >= 0:
        # exp(ab) I3(a,b,k) = k/a * exp(ab) I3(a,b,k-1) + b^k / a
        prev = 1.0 / a
        if kmin <= 0:
            out[-kmin] = prev
        for k in range(1, kmax + 1):
            prev = k / a * prev + b ** k / a
            if k >= kmin:
                out[k - kmin] = prev
    if kmin <= -1:
        # I3(a,b,-p-1) = b^-p E_{p+1}(ab)
        pmax = -kmin - 1
        en = expn_scaled(pmax + 1, a * b)
        for p in range(0, pmax + 1):
            k = -p - 1
            if k <= kmax:
                out[k - kmin] = en[p] / b ** p
    return out


def _i2_table(a: float, b: float, mmax: int, nmax: int):
    """Values and term magnitudes of I2(a, b, m, n) for m<=mmax, n<=nmax."""
    j3 = _j3_table(a, b, -nmax, mmax)
    val = np.zeros((mmax + 1, nmax + 1))
    mag = np.zeros_like(val)
    for m in range(mmax + 1):
        i = np.arange(m + 1)
        coef = special.comb(m, i) * (-b) ** (m - i)
        for n in range(nmax + 1):
            terms = coef * j3[i - n + nmax]
            val[m, n] = terms.sum()
            mag[m, n] = np.abs(terms).sum()
    return val, mag


def _i1_closed(a: float, b: float, mmax: int, nmax: int):
    one_val, one_mag = _i2_table(a, 1.0, mmax, nmax + 1)
    if b == 1.0:
        # the integrand collapses to x^m e^{-ax} / (x+1)^{n+1}
        return one_val[:, 1:].copy(), one_mag[:, 1:].copy()
    b_val, b_mag = _i2_table(a, b, mmax, nmax)
    val = np.zeros((mmax + 1, nmax + 1))
    mag = np.zeros_like(val)
    for n in range(nmax + 1):
        last = 1.0 / (b - 1.0) ** n
        v = last * one_val[:, 1]
        g = abs(last) * one_mag[:, 1]
        for i in range(1, n + 1):
            c = (-1.0) ** (i - 1) / (1.0 - b) ** i
            v = v + c * b_val[:, n - i + 1]
            g = g + abs(c) * b_mag[:, n - i + 1]
        val[:, n] = v
        mag[:, n] = g
    return val, mag


def _check_ab(a, b, need_b_positive=True):
    if not (a > 0 and math.isfinite(a)):
        raise ValueError(f"a must be positive and finite, got {a!r}")
    if need_b_positive:
        if not (b > 0 and math.isfinite(b)):
            raise ValueError(f"b must be positive and finite, got {b!r}")
    elif not (b >= 0 and math.isfinite(b)):
        raise ValueError(f"b must be nonnegative and finite, got {b!r}")


def _check_mn(m, n):
    if m < 0 or n < 0 or int(m) != m or int(n) != n:
        raise ValueError(f"m and n must be nonnegative integers, got {m!r}, {n!r}")


def i1_table(a: float, b: float, mmax: int, nmax: int, triangular: bool = False,
             spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Evaluate ``I1(a, b, m, n)`` for all ``m <= mmax`` and ``n <= nmax``.

    With ``triangular=True`` only the entries ``n <= m + 1`` (the ones the
    rate formulas use) are guaranteed accurate; the rest are left as NaN.

    Returns
    -------
    values : ndarray, shape (mmax+1, nmax+1)
    fallback : ndarray of bool, same shape
        True where cancellation forced a quadrature evaluation.
    """
    _check_ab(a, b)
    _check_mn(mmax, nmax)
    return _i1_table_cached(float(a), float(b), int(mmax), int(nmax), bool(triangular), spec)


@lru_cache(maxsize=65536)
def _i1_table_cached(a, b, mmax, nmax, triangular, spec):
    val, mag = _i1_closed(a, b, mmax, nmax)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = ~(val > 0) | ~np.isfinite(val) | (mag > CANCELLATION_LIMIT * np.abs(val))
    if triangular:
        m_idx, n_idx = np.indices(val.shape)
        unused = n_idx > m_idx + 1
        val[unused] = np.nan
        bad &= ~unused
    for m, n in zip(*np.nonzero(bad)):
        val[m, n] = quad_i1(a, b, int(m), int(n), spec)
    val.setflags(write=False)
    bad.setflags(write=False)
    return val, bad


def integral_i3(a: float, b: float, m: int) -> float:
    """``I3(a, b, m) = int_b^inf x^m exp(-a x) dx`` in closed form.

    ``m >= 0`` uses the finite sum, ``m = -1`` gives ``E1(ab)`` and
    ``m <= -2`` the generalized exponential integral ``b^(m+1) E_{-m}(ab)``.
    """
    _check_ab(a, b, need_b_positive=False)
    if int(m) != m:
        raise ValueError(f"m must be an integer, got {m!r}")
    m = int(m)
    if m <= -1 and b == 0:
        raise ValueError("integrand is singular at 0: need b > 0 when m <= -1")
    return float(_j3_table(a, b, m, m)[0]) * math.exp(-a * b)


def integral_i2(a: float, b: float, m: int, n: int) -> float:
    """``I2(a, b, m, n) = int_0^inf x^m exp(-a x) / (x + b)^n dx``.

    Evaluated by the binomial expansion over I3; falls back to quadrature if
    the alternating expansion is ill-conditioned.
    """
    _check_ab(a, b)
    _check_mn(m, n)
    val, mag = _i2_table(float(a), float(b), int(m), int(n))
    v, g = val[m, n], mag[m, n]
    if not (v > 0) or g > CANCELLATION_LIMIT * v:
        return quad_i2(a, b, m, n)
    return float(v)


def integral_i1(a: float, b: float, m: int, n: int, full_output: bool = False):
    """``I1(a, b, m, n) = int_0^inf x^m exp(-a x) / ((x + b)^n (x + 1)) dx``.

    Parameters
    ----------
    a, b : float
        Positive parameters.
    m, n : int
        Nonnegative integer exponents.
    full_output : bool, optional
        If True also return a dict with key ``"fallback"`` telling whether the
        closed form was replaced by quadrature.

    Notes
    -----
    At ``b = 1`` the partial-fraction expansion is undefined and the exact
    identity ``I1(a, 1, m, n) = I2(a, 1, m, n + 1)`` is used instead.
    """
    val, bad = i1_table(a, b, m, n)
    v = float(val[m, n])
    if full_output:
        return v, {"fallback": bool(bad[m, n])}
    return v


# ---------------------------------------------------------------------------
# Quadrature oracles
# ---------------------------------------------------------------------------

def _quad(f, lo, hi, spec: QuadratureSpec) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                             limit=spec.max_subdivisions, full_output=1)
    value, err = res[0], res[1]
    if len(res) > 3 and res[2].get("last", 0) >= spec.max_subdivisions:
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] hit the subdivision limit "
            f"({spec.max_subdivisions}); estimate {value!r} +/- {err!r}")
    return value


def _quad_pieces(f, breaks, spec: QuadratureSpec) -> float:
    """Integrate ``f`` over [0, inf) split at the given interior points."""
    pts = sorted({0.0, *(p for p in breaks if p > 0 and math.isfinite(p))})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += _quad(f, lo, hi, spec)
    return total + _quad(f, pts[-1], math.inf, spec)


def _scale_points(a, b, m):
    # where the integrand changes character: the pole scales and the peak
    peak = m / a
    return [min(b, 1.0), max(b, 1.0), peak, (m + 20.0) / a, 0.1 * min(b, 1.0)]


def quad_i3(a: float, b: float, m: int, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Adaptive-quadrature value of ``I3(a, b, m)``."""
    _check_ab(a, b, need_b_positive=m <= -1)
    # substitute x = b + t
    def f(t):
        x = b + t
        return math.exp(m * math.log(x) - a * x) if x > 0 else (1.0 if m == 0 else 0.0)
    return _quad_pieces(f, [max(m, 0) / a, (abs(m) + 20.0) / a, b], spec)


def quad_i2(a: float, b: float, m: int, n: int,
            spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Adaptive-quadrature value of ``I2(a, b, m, n)``."""
    _check_ab(a, b)
    _check_mn(m, n)

    def f(x):
        if x == 0.0:
            return b ** (-n) if m == 0 else 0.0
        return math.exp(m * math.log(x) - a * x - n * math.log(x + b))
    return _quad_pieces(f, _scale_points(a, b, m), spec)


def quad_i1(a: float, b: float, m: int, n: int,
            spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Adaptive-quadrature value of ``I1(a, b, m, n)``."""
    _check_ab(a, b)
    _check_mn(m, n)

    def f(x):
        if x == 0.0:
            return b ** (-n) if m == 0 else 0.0
        return math.exp(m * math.log(x) - a * x - n * math.log(x + b) - math.log1p(x))
    return _quad_pieces(f, _scale_points(a, b, m), spec)


# ---------------------------------------------------------------------------
# E[log2(1 + X)] oracle
# ---------------------------------------------------------------------------

def _log_gamma_mean(s: float, shape: int, spec: QuadratureSpec) -> float:
    """E[log2(1 + s Z)] for Z ~ Gamma(shape, 1), by quadrature of the density."""
    if s <= 0:
        return 0.0
    lg = math.lgamma(shape)

    def f(z):
        if z == 0.0:
            return 0.0
        return math.log1p(s * z) * math.exp((shape - 1) * math.log(z) - z - lg)
    pts = [min(1.0 / s, 1.0), float(shape - 1), shape + 10.0 * math.sqrt(shape), shape + 40.0]
    return LOG2E * _quad_pieces(f, pts, spec)


def expected_log_oracle(density_kind: str, params, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Independent numerical value of ``E[log2(1 + X)]``.

    Parameters
    ----------
    density_kind : {"pure_gamma", "gamma_ratio_1", "gamma_ratio_2"}
        ``pure_gamma``: ``X = g Z`` with params ``(g, M)``.
        ``gamma_ratio_1``: ``X = g1 Z / (1 + g2 Y)`` with params ``(g1, g2, M)``.
        ``gamma_ratio_2``: ``X = g Z / (1 + d1 Y1 + d2 Y2)`` with params
        ``(g, d1, d2, M)``.
        ``Z ~ Gamma(M, 1)`` and the ``Y`` are independent unit exponentials.
    params : sequence of float
    spec : QuadratureSpec

    Notes
    -----
    The interference sum ``W`` is integrated against its density, with the
    inner expectation over ``Z`` done by a nested quadrature.  Nothing here
    touches the closed forms.

    Raises
    ------
    ConvergenceError
        If any quadrature exhausts its subdivision budget.
    """
    params = [float(p) for p in params]
    if density_kind == "pure_gamma":
        g, shape = params
        _check_shape(shape)
        return _log_gamma_mean(g, int(shape), spec)
    if density_kind == "gamma_ratio_1":
        g1, g2, shape = params
        _check_shape(shape)
        if g2 < 0:
            raise ValueError("interferer power must be nonnegative")
        if g2 == 0:
            return _log_gamma_mean(g1, int(shape), spec)
        # W = g2 Y has density exp(-w/g2)/g2; substitute y = w / g2
        def f(y):
            return math.exp(-y) * _log_gamma_mean(g1 / (1.0 + g2 * y), int(shape), spec)
        return _quad_pieces(f, [1.0 / g2, 1.0, 10.0, 40.0], spec)
    if density_kind == "gamma_ratio_2":
        g, d1, d2, shape = params
        _check_shape(shape)
        if d1 < 0 or d2 < 0:
            raise ValueError("interferer powers must be nonnegative")
        d1, d2 = max(d1, d2), min(d1, d2)
        if d2 == 0:
            return expected_log_oracle("gamma_ratio_1", (g, d1, shape), spec)
        rate_gap = 1.0 / d2 - 1.0 / d1

        def density(w):
            # hypoexponential density, written with expm1 so d1 ~ d2 is safe
            if rate_gap == 0.0:
                return w * math.exp(-w / d1) / (d1 * d1)
            return math.exp(-w / d1) * -math.expm1(-w * rate_gap) / (d1 - d2)

        def f(w):
            return density(w) * _log_gamma_mean(g / (1.0 + w), int(shape), spec)
        return _quad_pieces(f, [1.0, d2, d1, 5.0 * d1, 40.0 * d1], spec)
    raise ValueError(f"unknown density kind {density_kind!r}")


def _check_shape(shape):
    if shape < 1 or int(shape) != shape:
        raise ValueError(f"shape must be a positive integer, got {shape!r}")
