"""Fitting the ensemble parameters.

``solve_z`` fixes the single fitness constant of the strength-induced
bipartite configuration model so that the expected number of links equals
the observed one. ``solve_bicm`` solves the full degree-constrained model
when degrees are known. The remaining helpers are the sparse-limit closed
form and the moment expansion of expected degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

# rows per block are chosen so a block holds about this many pairs
BLOCK_PAIRS = 1 << 16


class CalibrationError(ValueError):
    """Calibration failed to converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class InfeasibleTargetError(CalibrationError):
    """The requested constraint cannot be met by any finite parameter."""


@dataclass(frozen=True)
class CalibrationResult:
    z: float
    residual: float
    iterations: int
    method_tag: str  # "bracketed_root", "sparse_closed_form" or "degenerate"
    target: float


@dataclass(frozen=True)
class BicmMultipliers:
    x: np.ndarray
    y: np.ndarray
    max_degree_residual: float
    iterations: int


def row_blocks(n_rows: int, n_cols: int, block_pairs: int = BLOCK_PAIRS) -> Iterator[slice]:
    """Consecutive row slices covering ``range(n_rows)``, about
    ``block_pairs`` pairs each. Fixed layout, so reductions are reproducible.
    """
    step = max(1, block_pairs // max(n_cols, 1))
    for lo in range(0, n_rows, step):
        yield slice(lo, min(lo + step, n_rows))


def _link_sums(z: float, V: np.ndarray, C: np.ndarray) -> tuple[float, float]:
    """Return ``<L>(z)`` and its derivative with respect to ``z``."""
    total = []
    deriv = []
    for blk in row_blocks(V.size, C.size):
        x = np.multiply.outer(V[blk], C)
        den = 1.0 + z * x
        total.append(float(np.sum(z * x / den)))
        deriv.append(float(np.sum(x / (den * den))))
    return math.fsum(total), math.fsum(deriv)


def expected_link_count(z: float, V: Sequence[float], C: Sequence[float]) -> float:
    """``sum_{i,a} z V_i C_a / (1 + z V_i C_a)``."""
    if z < 0:
        raise ValueError("z must be non-negative")
    if z == 0:
        return 0.0
    V = np.asarray(V, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    return _link_sums(float(z), V, C)[0]


def default_tolerance(L: float) -> float:
    return 1e-10 * max(1.0, float(L))


def solve_z(
    V: Sequence[float],
    C: Sequence[float],
    L: float,
    tolerance: Optional[float] = None,
    max_iter: int = 200,
) -> CalibrationResult:
    """Find the unique ``z > 0`` with ``<L>(z) = L``.

    The sparse estimate ``L / W**2`` is always a lower bracket because
    ``x / (1 + x) <= x``; the upper end is found by doubling. Inside the
    bracket, Newton steps with the analytic derivative are taken when they
    land strictly inside, geometric bisection otherwise.

    ``L <= 0`` returns a ``"degenerate"`` result with ``z = 0`` (the empty
    ensemble). ``L`` at or above the number of pairs with ``V_i C_a > 0``
    raises :class:`InfeasibleTargetError`.
    """
    V = np.asarray(V, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if (V < 0).any() or (C < 0).any():
        raise ValueError("strengths must be non-negative")
    L = float(L)
    tol = default_tolerance(L) if tolerance is None else float(tolerance)
    if L <= 0:
        if L < 0:
            raise ValueError("target link count must be non-negative")
        return CalibrationResult(0.0, 0.0, 0, "degenerate", L)
    ceiling = int(np.count_nonzero(V > 0)) * int(np.count_nonzero(C > 0))
    if L >= ceiling:
        raise InfeasibleTargetError(
            f"target L={L:g} needs z -> infinity: only {ceiling} pairs have "
            "positive strength product"
        )
    # only nodes with positive strength contribute
    V = V[V > 0]
    C = C[C > 0]
    W = math.fsum(V.tolist())
    Wc = math.fsum(C.tolist())

    lo = L / (W * Wc)
    f_lo, df_lo = _link_sums(lo, V, C)
    it = 1
    if abs(f_lo - L) <= tol:
        return CalibrationResult(lo, abs(f_lo - L), it, "bracketed_root", L)
    hi = lo
    f_hi = f_lo
    while f_hi < L:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi, _ = _link_sums(hi, V, C)
        it += 1
        if it > max_iter:
            raise CalibrationError("failed to bracket the root", abs(f_hi - L))
    if abs(f_hi - L) <= tol:
        return CalibrationResult(hi, abs(f_hi - L), it, "bracketed_root", L)

    z = lo
    f, df = _link_sums(z, V, C)
    while it < max_iter:
        it += 1
        step = z - (f - L) / df if df > 0 else -1.0
        if lo < step < hi:
            z_new = step
        else:
            z_new = math.sqrt(lo * hi)
        f_new, df_new = _link_sums(z_new, V, C)
        if abs(f_new - L) <= tol:
            return CalibrationResult(z_new, abs(f_new - L), it, "bracketed_root", L)
        if f_new < L:
            lo = z_new
        else:
            hi = z_new
        # bracket at machine resolution: nothing left to refine
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            raise CalibrationError(
                f"bracket collapsed at z={z_new!r} with residual {abs(f_new - L):.3e}",
                abs(f_new - L),
            )
        z, f, df = z_new, f_new, df_new
    raise CalibrationError(
        f"no convergence after {max_iter} iterations (residual {abs(f - L):.3e})",
        abs(f - L),
    )


def sparse_z(V: Sequence[float], C: Sequence[float], L: float) -> float:
    """First-order estimate ``L / W**2``.

    Valid when every ``z V_i C_a`` is much smaller than one.
    """
    W = math.fsum(np.asarray(V, dtype=np.float64).tolist())
    if W <= 0:
        raise ValueError("total weight must be positive")
    return float(L) / (W * W)


def bicm_expected_degrees(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xy = np.multiply.outer(x, y)
    p = xy / (1.0 + xy)
    return p.sum(axis=1), p.sum(axis=0)


def solve_bicm(
    k: Sequence[int],
    d: Sequence[int],
    tolerance: float = 1e-8,
    damping: float = 0.5,
    max_iter: int = 100_000,
) -> BicmMultipliers:
    """Lagrange multipliers of the bipartite configuration model.

    Damped fixed-point iteration on ``x_i = k_i / sum_a y_a / (1 + x_i y_a)``
    and the symmetric update for ``y``, started from ``x ~ k``, ``y ~ d``.
    Nodes of zero degree get zero multipliers. A node whose degree equals
    the number of nodes it could link to is saturated (its multiplier would
    diverge) and is rejected.
    """
    k = np.asarray(k, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if (k < 0).any() or (d < 0).any():
        raise ValueError("degrees must be non-negative")
    if abs(k.sum() - d.sum()) > 0.5:
        raise InfeasibleTargetError(f"degree totals differ: {k.sum():g} vs {d.sum():g}")
    kp, dp = k > 0, d > 0
    n_avail_for_holders = int(np.count_nonzero(dp))
    n_avail_for_issuers = int(np.count_nonzero(kp))
    if (kp & (k >= n_avail_for_holders)).any():
        i = int(np.flatnonzero(kp & (k >= n_avail_for_holders))[0])
        raise InfeasibleTargetError(
            f"holder {i} is saturated (k={k[i]:g} with {n_avail_for_holders} reachable issuers)"
        )
    if (dp & (d >= n_avail_for_issuers)).any():
        a = int(np.flatnonzero(dp & (d >= n_avail_for_issuers))[0])
        raise InfeasibleTargetError(
            f"issuer {a} is saturated (d={d[a]:g} with {n_avail_for_issuers} reachable holders)"
        )

    kk, dd = k[kp], d[dp]
    L = kk.sum()
    x = kk / math.sqrt(L) if L > 0 else kk.copy()
    y = dd / math.sqrt(L) if L > 0 else dd.copy()
    resid = np.inf
    it = 0
    while it < max_iter:
        it += 1
        x_fp = kk / (y / (1.0 + np.multiply.outer(x, y))).sum(axis=1)
        x = damping * x + (1.0 - damping) * x_fp
        y_fp = dd / (x[:, None] / (1.0 + np.multiply.outer(x, y))).sum(axis=0)
        y = damping * y + (1.0 - damping) * y_fp
        if it % 10 == 0 or it == 1:
            ek, ed = bicm_expected_degrees(x, y)
            resid = max(np.abs(ek - kk).max(initial=0.0), np.abs(ed - dd).max(initial=0.0))
            if resid <= tolerance:
                break
    if resid > tolerance:
        raise CalibrationError(
            f"BiCM iteration did not converge: max degree residual {resid:.3e}", resid
        )
    X = np.zeros_like(k)
    Y = np.zeros_like(d)
    X[kp] = x
    Y[dp] = y
    return BicmMultipliers(X, Y, float(resid), it)


@dataclass(frozen=True)
class FitnessMoments:
    """Raw moments ``mu_1..mu_K`` of issuer strengths and ``lam_1..lam_K``
    of holder strengths."""

    mu: np.ndarray
    lam: np.ndarray

    @property
    def order(self) -> int:
        return int(self.mu.size)


def fitness_moments(V: Sequence[float], C: Sequence[float], order: int = 5) -> FitnessMoments:
    """Empirical raw moments; ``mu_1 = W / M`` and ``lam_1 = W / N``."""
    V = np.asarray(V, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    t = np.arange(1, order + 1)
    mu = np.array([np.mean(C**n) for n in t])
    lam = np.array([np.mean(V**n) for n in t])
    return FitnessMoments(mu, lam)


@dataclass(frozen=True)
class SeriesEstimate:
    value: float
    last_term: float
    reliable: bool


def expected_degree_continuous(
    z: float,
    V_i: float,
    moments: FitnessMoments,
    M: int,
    order: Optional[int] = None,
) -> SeriesEstimate:
    """Truncated moment series ``M * sum_t (-1)^(t+1) (z V_i)^t mu_t``.

    ``last_term`` is the magnitude of the last retained term. The estimate is
    marked unreliable when the successive-term ratio ``z V_i mu_{t+1}/mu_t``
    is at least one at the tail, where the series does not converge.
    """
    K = moments.order if order is None else order
    if K < 1 or K > moments.order:
        raise ValueError(f"order must be in [1, {moments.order}]")
    x = z * V_i
    if x == 0:
        return SeriesEstimate(0.0, 0.0, True)
    terms = [M * (-1) ** t * x ** (t + 1) * moments.mu[t] for t in range(K)]
    reliable = True
    if K >= 2:
        ratio = x * moments.mu[K - 1] / moments.mu[K - 2]
        reliable = ratio < 1.0
    return SeriesEstimate(math.fsum(terms), abs(terms[-1]), reliable)
