"""Link-placement accuracy: confusion counts and classifier scores."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..core import BipartiteNetwork
from ..models import Model


@dataclass(frozen=True)
class ConfusionCounts:
    """True/false positive/negative counts. Expected counts are fractional."""

    tp: float
    tn: float
    fp: float
    fn: float

    @property
    def total(self) -> float:
        return self.tp + self.tn + self.fp + self.fn

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassifierScores:
    """Rates in [0, 1]; None marks a 0/0 score."""

    tpr: Optional[float]
    spc: Optional[float]
    fpr: Optional[float]
    ppv: Optional[float]
    acc: Optional[float]

    def as_dict(self) -> dict:
        return asdict(self)


def _check_shapes(a, b) -> None:
    if tuple(a) != tuple(b):
        raise ValueError(f"dimension mismatch: {tuple(a)} vs {tuple(b)}")


def confusion(truth: BipartiteNetwork, candidate: BipartiteNetwork) -> ConfusionCounts:
    _check_shapes(truth.shape, candidate.shape)
    tp = int(np.intersect1d(truth.pair_keys(), candidate.pair_keys(), assume_unique=True).size)
    L, Lc = truth.n_links, candidate.n_links
    nm = truth.n_holders * truth.n_issuers
    return ConfusionCounts(tp, nm - L - Lc + tp, Lc - tp, L - tp)


def expected_confusion(truth: BipartiteNetwork, model: Model) -> ConfusionCounts:
    """Ensemble-average confusion counts of ``model`` against ``truth``.

    ``<TP> = sum over true links of p``, ``<FP> = sum over true non-links of
    p``; the other two follow from the true link count. Exact for any
    ensemble, calibrated or not.
    """
    _check_shapes(truth.shape, model.shape)
    tp_parts = []
    all_parts = []
    for i in range(truth.n_holders):
        p = model.probability_row(i)
        cols, _ = truth.holder_edges(i)
        tp_parts.append(float(p[cols].sum()))
        all_parts.append(float(p.sum()))
    tp = math.fsum(tp_parts)
    fp = math.fsum(all_parts) - tp
    L = truth.n_links
    nm = truth.n_holders * truth.n_issuers
    # clip rounding-level negatives (e.g. p == 1 on every true link)
    return ConfusionCounts(
        max(tp, 0.0), max((nm - L) - fp, 0.0), max(fp, 0.0), max(L - tp, 0.0)
    )


def mecapm_dense_limit_confusion(truth: BipartiteNetwork) -> ConfusionCounts:
    """Counts in the limit where every MECAPM probability tends to one."""
    L = truth.n_links
    nm = truth.n_holders * truth.n_issuers
    return ConfusionCounts(float(L), 0.0, float(nm - L), 0.0)


def _div(num: float, den: float) -> Optional[float]:
    return None if den == 0 else num / den


def classifier_scores(counts: ConfusionCounts) -> ClassifierScores:
    """TPR, specificity, FPR, precision and accuracy of ``counts``.

    For expected counts these are ratios of expectations.
    """
    c = counts
    if min(c.tp, c.tn, c.fp, c.fn) < 0:
        raise ValueError("confusion counts must be non-negative")
    spc = _div(c.tn, c.fp + c.tn)
    return ClassifierScores(
        tpr=_div(c.tp, c.tp + c.fn),
        spc=spc,
        fpr=None if spc is None else 1.0 - spc,
        ppv=_div(c.tp, c.tp + c.fp),
        acc=_div(c.tp + c.tn, c.total),
    )
