"""Lower bounds on the probability that the pursuit recovers a signal.

Two bounds are implemented, for measurements ``y = A x`` with A an
m-by-n matrix of i.i.d. normal(0, 1/m) entries and x supported on K of
the n coordinates.

Disparity-aware bound
    For a signal class with disparity budget ``phi`` (see
    :mod:`omp_lab.phi`), with ``eta = 1 - sqrt(K/m) - eps``,

        P >= max over eps in (0, U] of
             (1 - exp(-eps^2 m / 2))
             * prod_{k=1..K} (1 - x_k)^(n - K)

        x_k = exp(-eta^2 m / (2 phi(k))) / (sqrt(pi m / (2 phi(k))) * eta)

    where U = 1 - sqrt(K/m) - sqrt(2 phi(K) / (m pi)).  At eps = U the
    denominator of x_K equals 1 exactly, and each x_k stays below 1 on
    the whole interval, so every factor is positive.

Baseline bound
    The phi-free reference,

        P >= max over eps in (0, sqrt(m/K) - 1) of
             (1 - exp(-eps^2 m / 2))
             * (1 - exp(-(sqrt(m/K) - 1 - eps)^2 / 2))^(K (n - K))

All arithmetic runs in the log domain: with n - K in the thousands the
per-term factors sit extremely close to 1, and ``log(1 - e^-a)`` is
computed by the standard two-branch rule so neither tiny nor huge ``a``
loses precision.  The maximization evaluates a 1024-point grid over the
feasible interval and polishes the best point by golden-section search.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .phi import PhiFunction

__all__ = [
    "BoundResult",
    "log1mexp",
    "disparity_interval_upper",
    "baseline_interval_upper",
    "log_disparity_bound_at",
    "log_baseline_bound_at",
    "disparity_bound_at",
    "baseline_bound_at",
    "disparity_bound",
    "baseline_bound",
]

_GRID_POINTS = 1024
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_EPS_TOL = 1e-9

_LN2 = math.log(2.0)


def log1mexp(a: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """``log(1 - exp(-a))`` for ``a >= 0``, accurate at both extremes.

    Small ``a`` goes through ``log(-expm1(-a))``, large ``a`` through
    ``log1p(-exp(-a))``; the switch at ``ln 2`` keeps full precision on
    both branches.  ``a = 0`` yields ``-inf``.
    """
    arr = np.asarray(a, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0.0):
        raise ValueError("log1mexp requires a >= 0")
    out = np.empty_like(arr)
    small = arr < _LN2
    with np.errstate(divide="ignore"):
        out[small] = np.log(-np.expm1(-arr[small]))
    out[~small] = np.log1p(-np.exp(-arr[~small]))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class BoundResult:
    """A maximized bound value with the maximizer that produced it.

    ``value`` is clamped to [0, 1]; ``log_value`` keeps the unclamped
    log (``-inf`` when the bound degenerates).  ``epsilon_star`` is the
    maximizing free parameter, ``None`` when the feasible interval is
    empty.  ``interval_upper`` reports the interval endpoint even when
    it is nonpositive, so infeasibility is inspectable.
    """

    value: float
    log_value: float
    epsilon_star: Optional[float]
    interval_upper: float
    feasible: bool


def _check_problem(m: int, n: int, K: int) -> None:
    m = operator.index(m)
    n = operator.index(n)
    K = operator.index(K)
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 1 <= K < n:
        raise ValueError(f"need 1 <= K < n, got K={K}, n={n}")


def disparity_interval_upper(m: int, K: int, phi: PhiFunction) -> float:
    """Upper endpoint ``1 - sqrt(K/m) - sqrt(2 phi(K) / (m pi))``.

    Positive iff the disparity-aware bound has a nonempty feasible
    interval.
    """
    return 1.0 - math.sqrt(K / m) - math.sqrt(2.0 * phi(K) / (m * math.pi))


def baseline_interval_upper(m: int, K: int) -> float:
    """Upper endpoint ``sqrt(m/K) - 1`` of the baseline bound's interval."""
    return math.sqrt(m / K) - 1.0


def log_disparity_bound_at(
    m: int,
    n: int,
    K: int,
    phi: PhiFunction,
    eps: Union[float, np.ndarray],
) -> Union[float, np.ndarray]:
    """Log of the disparity-aware bound at fixed ``eps`` (vectorized).

    Returns ``-inf`` wherever ``eps`` is outside ``(0, 1 - sqrt(K/m))``
    or some product factor is nonpositive.
    """
    _check_problem(m, n, K)
    eps_arr = np.asarray(eps, dtype=float)
    scalar = eps_arr.ndim == 0
    eps_arr = np.atleast_1d(eps_arr).astype(float)
    out = np.full(eps_arr.shape, -np.inf)
    eta = 1.0 - math.sqrt(K / m) - eps_arr
    ok = (eps_arr > 0.0) & (eta > 0.0)
    if np.any(ok):
        e = eps_arr[ok]
        h = eta[ok]
        log_eta = np.log(h)
        half_m_eta_sq = 0.5 * m * h * h
        sum_terms = np.zeros(e.shape)
        for k in range(1, K + 1):
            phik = phi(k)
            logx = (
                -half_m_eta_sq / phik
                - 0.5 * math.log(math.pi * m / (2.0 * phik))
                - log_eta
            )
            below_one = logx < 0.0
            term = np.where(
                below_one,
                log1mexp(np.where(below_one, -logx, 1.0)),
                -np.inf,
            )
            sum_terms = sum_terms + term
        out[ok] = log1mexp(0.5 * m * e * e) + (n - K) * sum_terms
    return float(out[0]) if scalar else out


def log_baseline_bound_at(
    m: int,
    n: int,
    K: int,
    eps: Union[float, np.ndarray],
) -> Union[float, np.ndarray]:
    """Log of the baseline bound at fixed ``eps`` (vectorized).

    Returns ``-inf`` outside the open interval ``(0, sqrt(m/K) - 1)``.
    """
    _check_problem(m, n, K)
    eps_arr = np.asarray(eps, dtype=float)
    scalar = eps_arr.ndim == 0
    eps_arr = np.atleast_1d(eps_arr).astype(float)
    out = np.full(eps_arr.shape, -np.inf)
    gap = baseline_interval_upper(m, K) - eps_arr
    ok = (eps_arr > 0.0) & (gap > 0.0)
    if np.any(ok):
        e = eps_arr[ok]
        g = gap[ok]
        out[ok] = log1mexp(0.5 * m * e * e) + (K * (n - K)) * log1mexp(0.5 * g * g)
    return float(out[0]) if scalar else out


def disparity_bound_at(
    m: int, n: int, K: int, phi: PhiFunction, eps: float
) -> float:
    """Disparity-aware bound at fixed ``eps``, clamped to [0, 1]."""
    return _clamp_exp(float(log_disparity_bound_at(m, n, K, phi, eps)))


def baseline_bound_at(m: int, n: int, K: int, eps: float) -> float:
    """Baseline bound at fixed ``eps``, clamped to [0, 1]."""
    return _clamp_exp(float(log_baseline_bound_at(m, n, K, eps)))


def _clamp_exp(log_value: float) -> float:
    if log_value == -np.inf:
        return 0.0
    return min(1.0, math.exp(min(log_value, 0.0)))


def _maximize_log(
    log_f: Callable[[np.ndarray], np.ndarray],
    upper: float,
    closed_upper: bool,
) -> tuple[float, float]:
    """Grid scan plus golden-section polish of a log objective on (0, upper].

    ``closed_upper`` keeps the endpoint itself on the grid; otherwise the
    grid stays strictly interior.  Returns ``(eps_star, log_value)``.
    """
    if closed_upper:
        grid = upper * np.arange(1, _GRID_POINTS + 1) / _GRID_POINTS
    else:
        grid = upper * np.arange(1, _GRID_POINTS + 1) / (_GRID_POINTS + 1)
    values = log_f(grid)
    i = int(np.argmax(values))
    best_eps = float(grid[i])
    best_val = float(values[i])

    a = float(grid[i - 1]) if i > 0 else 0.0
    b = float(grid[i + 1]) if i + 1 < grid.size else (upper if closed_upper else upper)
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = float(log_f(np.array([c]))[0])
    fd = float(log_f(np.array([d]))[0])
    while b - a > _EPS_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = float(log_f(np.array([c]))[0])
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = float(log_f(np.array([d]))[0])
    mid = 0.5 * (a + b)
    fmid = float(log_f(np.array([mid]))[0])
    if fmid > best_val:
        best_eps, best_val = mid, fmid
    return best_eps, best_val


def disparity_bound(m: int, n: int, K: int, phi: PhiFunction) -> BoundResult:
    """Maximize the disparity-aware bound over its feasible interval.

    Infeasible geometry (nonpositive interval endpoint) yields a result
    with ``value = 0`` and ``feasible = False`` rather than an error, so
    sweeps over parameter grids can record every point.
    """
    _check_problem(m, n, K)
    upper = disparity_interval_upper(m, K, phi)
    if not upper > 0.0:
        return BoundResult(
            value=0.0,
            log_value=-np.inf,
            epsilon_star=None,
            interval_upper=upper,
            feasible=False,
        )
    eps_star, log_val = _maximize_log(
        lambda e: log_disparity_bound_at(m, n, K, phi, e), upper, closed_upper=True
    )
    return BoundResult(
        value=_clamp_exp(log_val),
        log_value=log_val,
        epsilon_star=eps_star,
        interval_upper=upper,
        feasible=True,
    )


def baseline_bound(m: int, n: int, K: int) -> BoundResult:
    """Maximize the baseline bound over its open feasible interval."""
    _check_problem(m, n, K)
    upper = baseline_interval_upper(m, K)
    if not upper > 0.0:
        return BoundResult(
            value=0.0,
            log_value=-np.inf,
            epsilon_star=None,
            interval_upper=upper,
            feasible=False,
        )
    eps_star, log_val = _maximize_log(
        lambda e: log_baseline_bound_at(m, n, K, e), upper, closed_upper=False
    )
    return BoundResult(
        value=_clamp_exp(log_val),
        log_value=log_val,
        epsilon_star=eps_star,
        interval_upper=upper,
        feasible=True,
    )
