"""Bisection on Sturm sequences for symmetric tridiagonal matrices.

Two counting routines live here:

* :func:`sturm_count` - the textbook LDL^T pivot count for a symmetric
  tridiagonal (diag ``d``, off-diagonal ``e``).  Absolute accuracy ~ eps*||T||.
* :func:`birth_death_count` - counts eigenvalues of the reduced birth-death
  matrix K with K[k,k] = up[k] + down[k], K[k,k+1]^2 = up[k+1]*down[k].  K
  carries exactly the non-zero spectrum of the birth-death generator, and the
  stationary-qd form of the recurrence below only adds and multiplies positive
  quantities away from the target, so small eigenvalues keep their relative
  accuracy even when they sit 20 decades below the largest rate.
"""

from __future__ import annotations

import math

import numpy as np

_TINY = float(np.finfo(float).tiny)
_EPS = float(np.finfo(float).eps)


def sturm_count(d, e, x: float) -> int:
    """Number of eigenvalues strictly below ``x``."""
    d = np.asarray(d, dtype=float).tolist()
    e2 = (np.asarray(e, dtype=float) ** 2).tolist()
    x = float(x)
    count = 0
    q = d[0] - x
    if q == 0.0:
        q = -_TINY
    if q < 0:
        count += 1
    for k in range(1, len(d)):
        q = d[k] - x - e2[k - 1] / q  # a -TINY pivot sends this to +inf, which still counts right
        if q == 0.0:
            q = -_TINY
        if q < 0:
            count += 1
    return count


def _sturm_count_vec(d: np.ndarray, e2: np.ndarray, x: np.ndarray) -> np.ndarray:
    q = d[0] - x
    q[q == 0.0] = -_TINY
    count = (q < 0).astype(int)
    with np.errstate(over="ignore", divide="ignore"):
        for k in range(1, d.size):
            q = d[k] - x - e2[k - 1] / q
            q[q == 0.0] = -_TINY
            count += q < 0
    return count


def gershgorin_bounds(d, e) -> tuple[float, float]:
    d = np.asarray(d, dtype=float)
    r = np.zeros_like(d)
    if d.size > 1:
        ae = np.abs(np.asarray(e, dtype=float))
        r[:-1] += ae
        r[1:] += ae
    return float(np.min(d - r)), float(np.max(d + r))


def tridiag_eigvalsh(d, e, rtol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """All eigenvalues (ascending) by simultaneous bisection, one interval per index."""
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n = d.size
    if n == 0:
        return np.empty(0)
    lo0, hi0 = gershgorin_bounds(d, e)
    span = max(hi0 - lo0, abs(hi0), abs(lo0), _TINY)
    atol = 4 * _EPS * span
    lo = np.full(n, lo0 - atol)
    hi = np.full(n, hi0 + atol)
    idx = np.arange(n)
    e2 = e**2
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(np.abs(lo), np.abs(hi)) + atol):
            break
        mid = 0.5 * (lo + hi)
        below = _sturm_count_vec(d, e2, mid.copy())
        go_left = below > idx  # eigenvalue idx lies below mid
        hi = np.where(go_left, mid, hi)
        lo = np.where(go_left, lo, mid)
    return 0.5 * (lo + hi)


def birth_death_count(up, down, x: float) -> int:
    """Eigenvalues below ``x`` of the reduced birth-death matrix.

    ``up[k]`` is the rate k -> k+1 and ``down[k]`` the rate k+1 -> k for the
    M-1 links of an M-state chain; the reduced matrix has size M-1.
    """
    a = up.tolist() if isinstance(up, np.ndarray) else list(up)
    b = down.tolist() if isinstance(down, np.ndarray) else list(down)
    count = 0
    t = a[0] - x
    dk = b[0] + t
    if dk == 0.0:
        dk = -_TINY
    if dk < 0:
        count += 1
    for k in range(1, len(a)):
        t = a[k] * (t / dk) - x
        dk = b[k] + t
        if dk == 0.0:
            dk = -_TINY
        if dk < 0:
            count += 1
    return count


def birth_death_smallest(up, down, rtol: float = 1e-12) -> float:
    """Smallest eigenvalue of a positive-definite reduced birth-death matrix.

    Geometric bisection, so the result is accurate to ``rtol`` relative even
    for eigenvalues far below the matrix norm.  Returns 0.0 if the matrix is
    singular (an isolated link with both rates zero).
    """
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    if up.size == 0:
        raise ValueError("need at least one link")
    hi = float(np.min(up + down))  # Rayleigh quotient of a unit vector bounds lambda_min
    if hi <= 0.0:
        return 0.0
    hi *= 1.0 + 1e-15
    while birth_death_count(up, down, hi) == 0:
        hi *= 2.0
    lo = hi
    while True:
        lo *= 1e-4
        if lo < 1e-300:
            if birth_death_count(up, down, _TINY) > 0:
                return 0.0
            lo = _TINY
            break
        if birth_death_count(up, down, lo) == 0:
            break
    # invariant: count(lo) == 0 < count(hi)
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo) * math.sqrt(hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if birth_death_count(up, down, mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def birth_death_eigvals(up, down, rtol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of the reduced birth-death matrix (the non-zero spectrum of A)."""
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    off = np.sqrt(up[1:] * down[:-1])
    _, top = gershgorin_bounds(up + down, off)
    vals = np.empty(up.size)
    for i in range(up.size):
        hi, lo = top * (1 + 4 * _EPS) + _TINY, 0.0
        while hi > 1e-300:
            if birth_death_count(up, down, 0.5 * hi) > i:
                hi *= 0.5
            else:
                lo = 0.5 * hi
                break
        while lo > 0.0 and hi - lo > rtol * lo:
            mid = math.sqrt(lo) * math.sqrt(hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
            if birth_death_count(up, down, mid) > i:
                hi = mid
            else:
                lo = mid
        vals[i] = 0.5 * (lo + hi)
    return vals
