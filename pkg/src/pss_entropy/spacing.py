"""Univariate m-spacing primitives.

Order statistics are 1-based in the formulas below and clamped: any index
below 1 reads the sample minimum and any index above ``n`` reads the maximum.
"""

import bisect
import math

import numpy as np

from .errors import DegenerateDataError, InvalidInputError


def as_sorted_sample(values):
    """Return ``values`` as a sorted, finite float64 array of length >= 2."""
    s = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if s.size < 2:
        raise InvalidInputError("a spacing sample needs at least two values")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("sample contains non-finite values")
    return s


def default_m(n):
    """Spacing rate ``floor(sqrt(n) + 1/2)``, clamped to ``n - 1``."""
    n = int(n)
    if n < 2:
        raise InvalidInputError(f"default_m needs n >= 2, got {n}")
    return min(int(math.floor(math.sqrt(n) + 0.5)), n - 1)


def _check_m(n, m):
    m = int(m)
    if not 1 <= m < n:
        raise InvalidInputError(f"spacing parameter m={m} must satisfy 1 <= m < n={n}")
    return m


def order_stat(s, i):
    """Clamped 1-based order statistic ``x_(i)``."""
    n = len(s)
    return s[min(max(i, 1), n) - 1]


def xi_grid(s, m):
    """Averaged grid points ``xi_0 .. xi_{n+1}``.

    ``xi_i`` (1 <= i <= n) is the mean of the clamped order statistics
    ``x_(i-m) .. x_(i+m-1)``; the ends are pinned to the sample minimum and
    maximum.
    """
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    m = _check_m(n, m)
    padded = np.concatenate([np.full(m, s[0]), s, np.full(m, s[-1])])
    # window for xi_i starts at padded index i - 1
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * m)[:n]
    xi = np.empty(n + 2)
    xi[0] = s[0]
    xi[1:-1] = windows.mean(axis=1)
    xi[-1] = s[-1]
    return xi


def locate(grid, x):
    """Interval index ``i`` with ``xi_i < x <= xi_{i+1}``.

    The leftmost interval is closed, so ``x == xi_0`` maps to 0.  Returns
    ``None`` when ``x`` lies outside ``[xi_0, xi_{n+1}]``.
    """
    if x < grid[0] or x > grid[-1]:
        return None
    return max(bisect.bisect_left(grid, x) - 1, 0)


def spacing_window(s, m, i):
    """The m-spacing ``x_(i+m) - x_(i-m)`` with clamped indices."""
    return order_stat(s, i + m) - order_stat(s, i - m)


def spacing_density(s, m, grid, x):
    """Sample-spacing density at ``x``.

    Returns 0 outside the empirical support and ``None`` when the spacing for
    the located interval is zero (duplicate-saturated window).
    """
    n = len(s)
    i = locate(grid, x)
    if i is None:
        return 0.0
    delta = spacing_window(s, m, i)
    if delta <= 0:
        return None
    return 2.0 * m / (n * delta)


def vasicek_entropy(s, m):
    """Vasicek m-spacing entropy estimate in nats.

    Zero spacings are dropped from the average; a sample whose spacings are
    all zero raises :class:`DegenerateDataError`.
    """
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    m = _check_m(n, m)
    idx = np.arange(1, n + 1)
    hi = s[np.minimum(idx + m, n) - 1]
    lo = s[np.maximum(idx - m, 1) - 1]
    delta = hi - lo
    ok = delta > 0
    if not ok.any():
        raise DegenerateDataError("all m-spacings are zero (constant sample)")
    return float(np.mean(np.log(n / (2.0 * m) * delta[ok])))
