"""Spherical Bessel functions of the first kind and the zeros of their derivative.

The zeros z_ns of j'_n fix the mode series of a rigid spherical cavity.
Everything here is plain numpy; evaluation accepts scalars or arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 12
MAX_ROOTS = 64

_SERIES_BELOW = 0.5
_ROOT_XTOL = 1e-12


class BesselDomainError(ValueError):
    """Order or argument outside the supported domain."""


class RootBracketError(ArithmeticError):
    """The root scan ran out of search window before finding a sign change."""

    def __init__(self, n: int, s: int, x_max: float):
        super().__init__(f"no bracket for root s={s} of j'_{n} below x={x_max:.3f}")
        self.n = n
        self.s = s


@dataclass(frozen=True)
class RootTable:
    """Ascending zeros of j'_n, indexed s = 1, 2, ... (roots[0] is s = 1).

    Orders other than 1 carry an explicit 0.0 as their first entry, the
    dc resonance convention used by the mode tables.
    """

    order: int
    roots: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.roots, dtype=float)
        if r.size and np.any(np.diff(r) <= 0):
            raise ValueError("roots must be strictly ascending")
        if self.order != 1 and r.size and r[0] != 0.0:
            raise ValueError(f"order {self.order} must start with the dc root 0.0")
        if self.order == 1 and r.size and r[0] <= 0.0:
            raise ValueError("order 1 has no dc root")

    def __len__(self) -> int:
        return len(self.roots)

    def root(self, s: int) -> float:
        """Root number ``s`` (1-based)."""
        return self.roots[s - 1]


def _check_order(n) -> int:
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 0:
        raise BesselDomainError(f"order must be a non-negative integer, got {n!r}")
    return int(n)


def _series(n: int, x: np.ndarray) -> np.ndarray:
    # x^n/(2n+1)!! * sum_k (-x^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1))
    lead = np.ones_like(x)
    for k in range(1, n + 1):
        lead = lead * x / (2 * k + 1)
    term = np.ones_like(x)
    total = np.ones_like(x)
    h = -0.5 * x * x
    for k in range(1, 40):
        term = term * h / (k * (2 * n + 2 * k + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return lead * total


def _closed_form(n: int, x: np.ndarray) -> np.ndarray:
    s, c = np.sin(x), np.cos(x)
    if n == 0:
        return s / x
    if n == 1:
        return s / x**2 - c / x
    return (3.0 / x**2 - 1.0) * s / x - 3.0 * c / x**2


def _upward(n: int, x: np.ndarray) -> np.ndarray:
    prev = _closed_form(0, x)
    cur = _closed_form(1, x)
    for k in range(1, n):
        prev, cur = cur, (2 * k + 1) / x * cur - prev
    return cur


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    # Downward recurrence, normalised with sum_k (2k+1) j_k^2 = 1.
    start = n + 20 + int(math.sqrt(40.0 * (n + 1))) + int(np.max(x))
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    want = np.zeros_like(x)
    j0 = j1 = None
    norm = (2 * start + 1) * cur**2
    for k in range(start, 0, -1):
        prev = (2 * k + 1) / x * cur - nxt
        nxt, cur = cur, prev
        if k - 1 == n:
            want = cur.copy()
        norm = norm + (2 * (k - 1) + 1) * cur**2
        big = np.abs(cur) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            cur, nxt, want = cur * scale, nxt * scale, want * scale
            norm = norm * scale**2
    j0, j1 = cur, nxt
    true0 = _closed_form(0, x)
    true1 = _closed_form(1, x)
    sign = np.where(np.abs(true0) >= np.abs(true1), np.sign(true0 * j0), np.sign(true1 * j1))
    return sign * want / np.sqrt(norm)


def spherical_j(n: int, x):
    """Spherical Bessel function j_n(x) for n <= 12.

    Uses the closed forms for n <= 2, upward recurrence for x > n, Miller's
    downward recurrence below that, and the power series for x < 0.5.
    At x == 0 the analytic limit is returned.
    """
    n = _check_order(n)
    if n > MAX_ORDER + 1:
        raise BesselDomainError(f"order {n} above supported maximum {MAX_ORDER}")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise BesselDomainError("argument must be finite")
    if np.any(xa < 0):
        raise BesselDomainError("argument must be non-negative")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)

    small = flat < _SERIES_BELOW
    if np.any(small):
        out[small] = _series(n, flat[small])
    rest = ~small
    if np.any(rest):
        xr = flat[rest]
        if n <= 2:
            out[rest] = _closed_form(n, xr)
        else:
            up = xr > n
            vals = np.empty_like(xr)
            if np.any(up):
                vals[up] = _upward(n, xr[up])
            if np.any(~up):
                vals[~up] = _miller(n, xr[~up])
            out[rest] = vals
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def spherical_j_prime(n: int, x):
    """Derivative j'_n(x) from j'_n = [n j_{n-1} - (n+1) j_{n+1}] / (2n+1)."""
    n = _check_order(n)
    if n > MAX_ORDER:
        raise BesselDomainError(f"order {n} above supported maximum {MAX_ORDER}")
    upper = spherical_j(n + 1, x)
    if n == 0:
        return -upper
    return (n * spherical_j(n - 1, x) - (n + 1) * upper) / (2 * n + 1)


def _bisect(n: int, lo: float, hi: float, flo: float) -> float:
    while hi - lo > _ROOT_XTOL * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        fm = spherical_j_prime(n, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_roots(n: int, count: int) -> RootTable:
    """First ``count`` zeros of j'_n, dc convention included for n != 1.

    Sign changes are bracketed on a grid of width pi/8 starting at
    max(0.1, n/2), then bisected.
    """
    n = _check_order(n)
    if n > MAX_ORDER:
        raise BesselDomainError(f"order {n} above supported maximum {MAX_ORDER}")
    if not 1 <= count <= MAX_ROOTS:
        raise ValueError(f"count must be in [1, {MAX_ROOTS}], got {count}")

    roots = [] if n == 1 else [0.0]
    step = math.pi / 8
    x0 = max(0.1, n / 2)
    # roots sit roughly pi apart past x ~ n, so this window always suffices
    x_max = x0 + (count + 2) * math.pi + 2.0 * n + 10.0
    grid = np.arange(x0, x_max + step, step)
    vals = spherical_j_prime(n, grid)
    for i in range(len(grid) - 1):
        if len(roots) >= count:
            break
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(_bisect(n, float(grid[i]), float(grid[i + 1]), float(a)))
    if len(roots) < count:
        raise RootBracketError(n, len(roots) + 1, x_max)
    return RootTable(order=n, roots=tuple(roots[:count]))


def normalized_spacing(table: RootTable) -> list[float]:
    """Differences of contiguous roots divided by pi; entry i is (z_{i+2} - z_{i+1})/pi."""
    if len(table) < 2:
        raise ValueError("need at least two roots to form a spacing")
    r = np.asarray(table.roots)
    return list(np.diff(r) / math.pi)
