"""Fire-sale systemicness from portfolio overlap.

The overlap of holder ``i`` is ``Gamma_i = sum_{j,a} w_ja l_a w_ia``, which
with the column sums ``C_a`` equals ``sum_a w_ia l_a C_a``. Under homogeneous
illiquidity, leverage and returns the systemicness of ``i`` is proportional
to the pure overlap ``sum_a w_ia C_a``; ratios of it between a
reconstruction and the truth are what the ensemble formulas below predict.

Ensemble variances come in two flavours:

``method="exact"``
    The variance of ``X_i = sum_a w_ia Cw_a`` over the ensemble, with
    ``Cw_a = sum_j w_ja`` the random column total (which contains ``w_ia``
    itself). Derived from independence across pairs.
``method="decoupled"``
    The widely quoted closed forms. They equal ``sum_a Var(w_ia * Y_a)``
    with ``Y_a`` an independent copy of the column total, so they ignore
    the dependence between a holder's weight and its own column. Kept for
    comparison; they underestimate the variance when a holder is a large
    part of a column.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import BipartiteNetwork, strengths
from ..models import EcapmModel, MecapmModel, Model

METHODS = ("exact", "decoupled")


@dataclass(frozen=True)
class SystemicnessInputs:
    illiquidity: np.ndarray
    leverage: np.ndarray
    returns: np.ndarray
    equity: float

    def __post_init__(self):
        if not self.equity > 0:
            raise ValueError("total equity must be positive")
        if (np.asarray(self.illiquidity) < 0).any():
            raise ValueError("illiquidity must be non-negative")

    @classmethod
    def homogeneous(cls, n_holders: int, n_issuers: int) -> "SystemicnessInputs":
        return cls(np.ones(n_issuers), np.ones(n_holders), np.ones(n_holders), 1.0)


def overlap_terms(net: BipartiteNetwork, inputs: Optional[SystemicnessInputs] = None) -> np.ndarray:
    """``Gamma_i`` for every holder (``l = 1`` when ``inputs`` is None)."""
    C = strengths(net).C
    per_edge = net.weights * C[net.cols]
    if inputs is not None:
        per_edge = per_edge * np.asarray(inputs.illiquidity)[net.cols]
    return np.bincount(net.rows, weights=per_edge, minlength=net.n_holders)


def overlap_term(net: BipartiteNetwork, i: int, inputs: Optional[SystemicnessInputs] = None) -> float:
    cols, w = net.holder_edges(i)
    C = strengths(net).C
    l = 1.0 if inputs is None else np.asarray(inputs.illiquidity)[cols]
    return float(np.sum(w * l * C[cols]))


def systemicness(net: BipartiteNetwork, inputs: SystemicnessInputs, i: int) -> float:
    """``S_i = Gamma_i V_i B_i r_i / E``."""
    if not inputs.equity > 0:
        raise ValueError("total equity must be positive")
    V_i = float(net.weights[net.indptr[i]:net.indptr[i + 1]].sum())
    gamma = overlap_term(net, i, inputs)
    return gamma * V_i / inputs.equity * float(inputs.leverage[i]) * float(inputs.returns[i])


def _masked_ratio(num: np.ndarray, den: np.ndarray) -> np.ma.MaskedArray:
    ok = den > 0
    vals = np.zeros(den.shape)
    vals[ok] = num[ok] / den[ok]
    return np.ma.masked_array(vals, mask=~ok)


def relative_systemicness(truth: BipartiteNetwork, reconstructed: BipartiteNetwork) -> np.ma.MaskedArray:
    """Per-holder overlap ratio reconstructed / truth; masked where the
    truth's overlap is zero."""
    if truth.shape != reconstructed.shape:
        raise ValueError(f"dimension mismatch: {truth.shape} vs {reconstructed.shape}")
    return _masked_ratio(overlap_terms(reconstructed), overlap_terms(truth))


# -- ensemble moments ---------------------------------------------------------

def _column_aggregates(model: Model) -> dict:
    N, M = model.shape
    agg = {"mean": np.zeros(M), "var": np.zeros(M), "mean_sq": np.zeros(M), "sq_over_p": np.zeros(M)}
    for i in range(N):
        m = model.mean_row(i)
        agg["mean"] += m
        agg["var"] += model.variance_row(i)
        agg["mean_sq"] += m * m
        if isinstance(model, EcapmModel):
            p = model.probability_row(i)
            pos = p > 0
            agg["sq_over_p"][pos] += m[pos] ** 2 / p[pos]
    return agg


def expected_overlaps(model: Model) -> np.ndarray:
    """``<sum_{j,a} w_ia w_ja>`` for every holder."""
    N, _ = model.shape
    col_mean = _column_aggregates(model)["mean"]
    out = np.empty(N)
    for i in range(N):
        m = model.mean_row(i)
        out[i] = np.sum(model.moment_row(i, 2) + m * (col_mean - m))
    return out


def expected_systemicness_ratios(truth: BipartiteNetwork, model: Model) -> np.ma.MaskedArray:
    """Expected relative systemicness of every holder; masked where the
    truth's overlap is zero."""
    if truth.shape != model.shape:
        raise ValueError(f"dimension mismatch: {truth.shape} vs {model.shape}")
    return _masked_ratio(expected_overlaps(model), overlap_terms(truth))


def expected_systemicness_ratio(truth: BipartiteNetwork, model: Model, i: int) -> Optional[float]:
    r = expected_systemicness_ratios(truth, model)
    return None if r.mask[i] else float(r[i])


def _exact_row(model: Model, i: int, agg: dict) -> float:
    m1 = model.mean_row(i)
    m2 = model.moment_row(i, 2)
    va = model.variance_row(i)
    rest_mean = agg["mean"] - m1
    rest_var = np.maximum(agg["var"] - va, 0.0)
    terms = (
        model.square_variance_row(i)
        + m2 * rest_var
        + va * rest_mean**2
        + 2.0 * rest_mean * model.square_covariance_row(i)
    )
    return float(terms.sum())


def _decoupled_row(model: Model, i: int, agg: dict) -> float:
    C = model.strengths.C
    w = model.mean_row(i)
    if isinstance(model, EcapmModel):
        p = model.probability_row(i)
        pos = p > 0
        pre = np.zeros_like(w)
        pre[pos] = w[pos] ** 2 / p[pos]
        return float(np.sum(pre * (agg["sq_over_p"] + C**2 * (1.0 - p) - agg["mean_sq"])))
    if isinstance(model, MecapmModel):
        return float(np.sum(
            w * ((1 + 2 * w) * agg["mean_sq"] + C * (1 + C) + C * w * (2 + C))
        ))
    return 0.0


def systemicness_variances(model: Model, method: str = "exact") -> np.ndarray:
    """Ensemble variance of every holder's overlap ``sum_{j,a} w_ia w_ja``."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    agg = _column_aggregates(model)
    row = _exact_row if method == "exact" else _decoupled_row
    return np.array([row(model, i, agg) for i in range(model.shape[0])])


def systemicness_variance(model: Model, i: int, method: str = "exact") -> float:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    agg = _column_aggregates(model)
    return (_exact_row if method == "exact" else _decoupled_row)(model, i, agg)


def systemicness_sigma_ratios(
    ecapm: EcapmModel, mecapm: MecapmModel, method: str = "exact"
) -> np.ma.MaskedArray:
    """``sigma_ECAPM / sigma_MECAPM`` per holder; masked where the MECAPM
    standard deviation is zero."""
    se = np.sqrt(systemicness_variances(ecapm, method))
    sm = np.sqrt(systemicness_variances(mecapm, method))
    return _masked_ratio(se, sm)


def systemicness_sigma_ratio(
    ecapm: EcapmModel, mecapm: MecapmModel, i: int, method: str = "exact"
) -> Optional[float]:
    se = np.sqrt(systemicness_variance(ecapm, i, method))
    sm = np.sqrt(systemicness_variance(mecapm, i, method))
    return None if sm == 0 else float(se / sm)


@dataclass(frozen=True)
class SystemicnessReport:
    holder_strength: np.ndarray
    observed_overlap: np.ndarray
    expected_ratio: dict          # kind -> masked array
    sigma: dict                   # kind -> array of standard deviations
    sigma_ratio: np.ma.MaskedArray
    method: str


def systemicness_report(
    truth: BipartiteNetwork,
    models: Sequence[Model],
    method: str = "exact",
) -> SystemicnessReport:
    """Expected ratios and standard deviations for every holder and model.

    ``sigma_ratio`` is ECAPM over MECAPM and is present only when both
    kinds are among ``models``.
    """
    expected, sigma = {}, {}
    by_kind = {}
    for model in models:
        kind = model.kind.value
        by_kind[kind] = model
        expected[kind] = expected_systemicness_ratios(truth, model)
        sigma[kind] = np.sqrt(systemicness_variances(model, method))
    ratio = np.ma.masked_all(truth.n_holders)
    if "ecapm" in sigma and "mecapm" in sigma:
        ratio = _masked_ratio(sigma["ecapm"], sigma["mecapm"])
    return SystemicnessReport(
        strengths(truth).V, overlap_terms(truth), expected, sigma, ratio, method
    )


__all__ = [
    "SystemicnessInputs", "SystemicnessReport", "overlap_term", "overlap_terms",
    "systemicness", "relative_systemicness", "expected_overlaps",
    "expected_systemicness_ratio", "expected_systemicness_ratios",
    "systemicness_variance", "systemicness_variances", "systemicness_sigma_ratio",
    "systemicness_sigma_ratios", "systemicness_report",
]
