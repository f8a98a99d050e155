"""Average nearest-neighbour degrees and strengths.

Nodes without neighbours (zero degree, or zero expected degree for the
ensemble versions) have no defined average; those entries are masked in the
returned ``numpy.ma`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import BipartiteNetwork, degrees, strengths
from ..models import Model, MecapmModel


@dataclass(frozen=True)
class AnnReport:
    """Per-node nearest-neighbour averages paired with the node's own value.

    ``quantity`` is ``"degree"`` (holder ``d_nn`` vs ``k``, issuer ``k_nn``
    vs ``d``) or ``"strength"`` (holder ``C_nn`` vs ``V``, issuer ``V_nn``
    vs ``C``).
    """

    quantity: str
    holder_value: np.ndarray
    holder_nn: np.ma.MaskedArray
    issuer_value: np.ndarray
    issuer_nn: np.ma.MaskedArray


def _masked_ratio(num: np.ndarray, den: np.ndarray) -> np.ma.MaskedArray:
    den = np.asarray(den, dtype=np.float64)
    ok = den > 0
    vals = np.zeros(den.shape)
    vals[ok] = num[ok] / den[ok]
    return np.ma.masked_array(vals, mask=~ok)


def _neighbour_average(net: BipartiteNetwork, holder_prop, issuer_prop, k, d):
    # sum over neighbours: holders see issuer_prop, issuers see holder_prop
    h_sum = np.bincount(net.rows, weights=issuer_prop[net.cols], minlength=net.n_holders)
    i_sum = np.bincount(net.cols, weights=holder_prop[net.rows], minlength=net.n_issuers)
    return _masked_ratio(h_sum, k), _masked_ratio(i_sum, d)


def ann_degrees(net: BipartiteNetwork) -> AnnReport:
    deg = degrees(net)
    k = deg.k.astype(np.float64)
    d = deg.d.astype(np.float64)
    h, i = _neighbour_average(net, k, d, k, d)
    return AnnReport("degree", deg.k, h, deg.d, i)


def ann_strengths(net: BipartiteNetwork) -> AnnReport:
    deg = degrees(net)
    s = strengths(net)
    h, i = _neighbour_average(net, s.V, s.C, deg.k, deg.d)
    return AnnReport("strength", s.V, h, s.C, i)


@dataclass(frozen=True)
class ExpectedAnn:
    degree: AnnReport
    strength: AnnReport
    # dense-limit constants printed for MECAPM, kept only as a diagnostic
    dense_limit: Optional[dict] = None


def expected_degrees(model: Model) -> tuple[np.ndarray, np.ndarray]:
    """Expected holder and issuer degrees, one row at a time."""
    N, M = model.shape
    k = np.empty(N)
    d = np.zeros(M)
    for i in range(N):
        p = model.probability_row(i)
        k[i] = p.sum()
        d += p
    return k, d


def expected_ann(model: Model) -> ExpectedAnn:
    """Plug-in expectations of the four nearest-neighbour averages.

    ``<d_nn_i> = sum_a p_ia <d_a> / <k_i>`` and analogues, with ``p`` the
    model's link probabilities (``q`` for MECAPM).
    """
    s = model.strengths
    N, M = model.shape
    k, d = expected_degrees(model)
    h_deg = np.empty(N)
    h_str = np.empty(N)
    i_deg = np.zeros(M)
    i_str = np.zeros(M)
    for i in range(N):
        p = model.probability_row(i)
        h_deg[i] = p @ d
        h_str[i] = p @ s.C
        i_deg += p * k[i]
        i_str += p * s.V[i]
    degree = AnnReport("degree", k, _masked_ratio(h_deg, k), d, _masked_ratio(i_deg, d))
    strength = AnnReport("strength", s.V, _masked_ratio(h_str, k), s.C, _masked_ratio(i_str, d))
    dense = None
    if isinstance(model, MecapmModel):
        dense = mecapm_dense_limit_ann(N, M, s.W)
    return ExpectedAnn(degree, strength, dense)


def mecapm_dense_limit_ann(N: int, M: int, W: float) -> dict:
    """Dense-limit (all ``q -> 1``) nearest-neighbour constants.

    ``"as_printed"`` pairs holder ``d_nn`` with ``N - 1`` and issuer
    ``k_nn`` with ``M - 1`` as usually quoted; ``"complete_graph"`` are the values of the complete ``N x M`` graph,
    which the exact expectations approach as every ``q`` tends to one.
    """
    return {
        "as_printed": {
            "holder_d_nn": N - 1,
            "issuer_k_nn": M - 1,
            "holder_C_nn": W / (M - 1) if M > 1 else None,
            "issuer_V_nn": W / (N - 1) if N > 1 else None,
        },
        "complete_graph": {
            "holder_d_nn": float(N),
            "issuer_k_nn": float(M),
            "holder_C_nn": W / M,
            "issuer_V_nn": W / N,
        },
    }
