"""Sparse weighted bipartite networks and their exact marginals.

Holders are indexed ``0..N-1`` (rows) and issuers ``0..M-1`` (columns).
Edges are stored holder-major (sorted by holder, then issuer), and a stored
edge always has a strictly positive weight, so ``a[i, a] == 1`` if and only
if the pair is present in the edge list. The dense ``N x M`` matrix is never
built here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class NetworkError(ValueError):
    """Raised when edges or marginals violate a network invariant."""


def _default_labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{k}" for k in range(n))


@dataclass(frozen=True, eq=False)
class BipartiteNetwork:
    """Immutable sparse biadjacency of ``n_holders`` x ``n_issuers``.

    Use :func:`build_network` rather than the constructor; it validates and
    canonicalises the edge list.
    """

    n_holders: int
    n_issuers: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    holder_labels: tuple[str, ...]
    issuer_labels: tuple[str, ...]
    # CSR row pointer, derived
    indptr: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_holders, self.n_issuers)

    @property
    def n_links(self) -> int:
        return int(self.rows.size)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights.tolist())

    def holder_edges(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Issuer indices and weights of holder ``i``, in issuer order."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.cols[lo:hi], self.weights[lo:hi]

    def pair_keys(self) -> np.ndarray:
        """Sorted flat keys ``i * M + a`` of the stored edges."""
        return self.rows * np.int64(self.n_issuers) + self.cols

    def to_dense(self) -> np.ndarray:
        """Dense weight matrix. Intended for small networks and tests."""
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.weights
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BipartiteNetwork):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.holder_labels == other.holder_labels
            and self.issuer_labels == other.issuer_labels
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None  # type: ignore[assignment]


def build_network(
    n_holders: int,
    n_issuers: int,
    edges: Iterable[tuple[int, int, float]] | None = None,
    *,
    rows: Optional[Sequence[int]] = None,
    cols: Optional[Sequence[int]] = None,
    weights: Optional[Sequence[float]] = None,
    holder_labels: Optional[Sequence[str]] = None,
    issuer_labels: Optional[Sequence[str]] = None,
) -> BipartiteNetwork:
    """Validate an edge list and return the canonical network.

    Edges are given either as ``(holder, issuer, weight)`` triples or as the
    three parallel arrays ``rows``, ``cols``, ``weights``.

    Raises
    ------
    NetworkError
        On a duplicate pair, an index out of range, or a weight that is not
        strictly positive and finite.
    """
    if n_holders < 0 or n_issuers < 0:
        raise NetworkError("node counts must be non-negative")
    if edges is not None:
        triples = list(edges)
        r = np.array([t[0] for t in triples], dtype=np.int64)
        c = np.array([t[1] for t in triples], dtype=np.int64)
        w = np.array([t[2] for t in triples], dtype=np.float64)
    else:
        r = np.asarray(rows if rows is not None else [], dtype=np.int64)
        c = np.asarray(cols if cols is not None else [], dtype=np.int64)
        w = np.asarray(weights if weights is not None else [], dtype=np.float64)
    if not (r.shape == c.shape == w.shape) or r.ndim != 1:
        raise NetworkError("rows, cols and weights must be 1-d of equal length")

    bad = (r < 0) | (r >= n_holders) | (c < 0) | (c >= n_issuers)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NetworkError(
            f"edge ({int(r[k])}, {int(c[k])}) out of range for "
            f"{n_holders} x {n_issuers} network"
        )
    bad = ~(np.isfinite(w) & (w > 0))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NetworkError(
            f"edge ({int(r[k])}, {int(c[k])}) has non-positive or non-finite "
            f"weight {w[k]!r}"
        )

    order = np.lexsort((c, r))
    r, c, w = r[order], c[order], w[order]
    if r.size > 1:
        dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
        if dup.any():
            k = int(np.flatnonzero(dup)[0])
            raise NetworkError(f"duplicate pair ({int(r[k])}, {int(c[k])})")

    hl = tuple(holder_labels) if holder_labels is not None else _default_labels("h", n_holders)
    il = tuple(issuer_labels) if issuer_labels is not None else _default_labels("i", n_issuers)
    if len(hl) != n_holders or len(il) != n_issuers:
        raise NetworkError("label count does not match node count")

    indptr = np.zeros(n_holders + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n_holders), out=indptr[1:])
    for a in (r, c, w, indptr):
        a.setflags(write=False)
    return BipartiteNetwork(n_holders, n_issuers, r, c, w, hl, il, indptr)


@dataclass(frozen=True, eq=False)
class StrengthSequences:
    """Holder strengths ``V``, issuer strengths ``C`` and total weight ``W``.

    ``W`` defaults to ``sum(V)``. The two totals must agree within ``rtol``
    relative to ``W``.
    """

    V: np.ndarray
    C: np.ndarray
    W: float
    holder_labels: Optional[tuple[str, ...]] = None
    issuer_labels: Optional[tuple[str, ...]] = None

    @classmethod
    def from_arrays(
        cls,
        V: Sequence[float],
        C: Sequence[float],
        W: Optional[float] = None,
        *,
        rtol: float = 1e-9,
        holder_labels: Optional[Sequence[str]] = None,
        issuer_labels: Optional[Sequence[str]] = None,
    ) -> "StrengthSequences":
        V = np.array(V, dtype=np.float64)
        C = np.array(C, dtype=np.float64)
        if V.ndim != 1 or C.ndim != 1:
            raise NetworkError("strength sequences must be 1-d")
        if not (np.isfinite(V).all() and np.isfinite(C).all()):
            raise NetworkError("strengths must be finite")
        if (V < 0).any() or (C < 0).any():
            raise NetworkError("strengths must be non-negative")
        sv, sc = math.fsum(V.tolist()), math.fsum(C.tolist())
        if W is None:
            W = sv
        if abs(sv - sc) > rtol * abs(W):
            raise NetworkError(
                f"holder total {sv!r} and issuer total {sc!r} differ beyond "
                f"relative tolerance {rtol:g}"
            )
        V.setflags(write=False)
        C.setflags(write=False)
        return cls(
            V,
            C,
            float(W),
            tuple(holder_labels) if holder_labels is not None else None,
            tuple(issuer_labels) if issuer_labels is not None else None,
        )

    @property
    def n_holders(self) -> int:
        return int(self.V.size)

    @property
    def n_issuers(self) -> int:
        return int(self.C.size)

    @property
    def n_positive_pairs(self) -> int:
        """Number of pairs with ``V_i * C_a > 0``; the link-count ceiling."""
        return int(np.count_nonzero(self.V > 0)) * int(np.count_nonzero(self.C > 0))


@dataclass(frozen=True)
class DegreeSequences:
    k: np.ndarray
    d: np.ndarray
    L: int


def strengths(net: BipartiteNetwork) -> StrengthSequences:
    """Row sums ``V``, column sums ``C`` and total ``W`` of ``net``.

    ``V`` and ``C`` are accumulated edge by edge in canonical (holder-major)
    order; ``W`` is the correctly rounded sum of all weights (``math.fsum``).
    """
    V = np.bincount(net.rows, weights=net.weights, minlength=net.n_holders)
    C = np.bincount(net.cols, weights=net.weights, minlength=net.n_issuers)
    V.setflags(write=False)
    C.setflags(write=False)
    return StrengthSequences(V, C, net.total_weight, net.holder_labels, net.issuer_labels)


def degrees(net: BipartiteNetwork) -> DegreeSequences:
    k = np.bincount(net.rows, minlength=net.n_holders).astype(np.int64)
    d = np.bincount(net.cols, minlength=net.n_issuers).astype(np.int64)
    return DegreeSequences(k, d, net.n_links)


def density(net: BipartiteNetwork) -> float:
    """Link density ``L / (N * M)``."""
    pairs = net.n_holders * net.n_issuers
    if pairs == 0:
        raise NetworkError("density undefined for a network with no pairs")
    return net.n_links / pairs
