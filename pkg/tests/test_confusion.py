import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecapm.calibration import solve_z
from ecapm.core import StrengthSequences, build_network, strengths
from ecapm.indicators import (
    ConfusionCounts,
    classifier_scores,
    confusion,
    expected_confusion,
    mecapm_dense_limit_confusion,
)
from ecapm.models import EcapmModel, MecapmModel

from conftest import networks


def test_confusion_identity_and_empty(example3):
    N, M, L = 2, 3, 3
    c = confusion(example3, example3)
    assert (c.tp, c.tn, c.fp, c.fn) == (L, N * M - L, 0, 0)
    c = confusion(example3, build_network(2, 3, []))
    assert (c.tp, c.tn, c.fp, c.fn) == (0, N * M - L, 0, L)


def test_confusion_hand_count():
    t = build_network(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
    c = build_network(2, 2, [(0, 0, 3.0), (0, 1, 1.0)])
    assert confusion(t, c).as_dict() == {"tp": 1, "tn": 1, "fp": 1, "fn": 1}


def test_confusion_dimension_mismatch(example3):
    with pytest.raises(ValueError, match="dimension"):
        confusion(example3, build_network(3, 3, []))


@given(networks(max_holders=5, max_issuers=5), st.data())
def test_confusion_against_dense_and_identities(truth, data):
    N, M = truth.shape
    cand_pairs = data.draw(st.sets(st.tuples(st.integers(0, N - 1), st.integers(0, M - 1))))
    cand = build_network(N, M, [(i, a, 1.0) for i, a in cand_pairs])
    a, b = truth.to_dense() > 0, cand.to_dense() > 0
    c = confusion(truth, cand)
    assert c.tp == (a & b).sum() and c.tn == (~a & ~b).sum()
    assert c.fp == (~a & b).sum() and c.fn == (a & ~b).sum()
    assert c.tp + c.fn == truth.n_links
    assert c.tn + c.fp == N * M - truth.n_links
    assert c.total == N * M


def test_expected_confusion_symmetric():
    truth = build_network(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
    m = EcapmModel(StrengthSequences.from_arrays([1, 1], [1, 1]), 1.0)
    c = expected_confusion(truth, m)
    assert (c.tp, c.tn, c.fp, c.fn) == pytest.approx((1, 1, 1, 1), abs=1e-15)


def test_expected_confusion_perfect_model():
    # p saturates to 1 on the support and is 0 elsewhere
    s = StrengthSequences.from_arrays([1e10, 0.0], [1e10, 0.0])
    truth = build_network(2, 2, [(0, 0, 1e10)])
    c = expected_confusion(truth, EcapmModel(s, 1e300))
    assert (c.tp, c.tn, c.fp, c.fn) == (1.0, 3.0, 0.0, 0.0)


@given(networks(max_holders=6, max_issuers=6, min_links=2))
def test_expected_confusion_table_identities(truth):
    s = strengths(truth)
    N, M = truth.shape
    L = truth.n_links
    if L >= s.n_positive_pairs:
        return
    m = EcapmModel(s, solve_z(s.V, s.C, L).z)
    c = expected_confusion(truth, m)
    A = truth.to_dense() > 0
    x = m.z * np.outer(s.V, s.C)
    p = x / (1 + x)
    assert c.tp == pytest.approx(p[A].sum(), rel=1e-12)
    # calibrated: <L> = L, so FP = FN = L - TP
    assert c.fn == pytest.approx(L - c.tp, abs=1e-8)
    assert c.fp == pytest.approx(L - c.tp, abs=1e-8)
    assert c.total == pytest.approx(N * M, rel=1e-12)
    me = expected_confusion(truth, MecapmModel(s))
    q = np.outer(s.V, s.C) / s.W
    q = q / (1 + q)
    assert me.tp == pytest.approx(q[A].sum(), rel=1e-12)
    assert me.fp == pytest.approx(q[~A].sum(), rel=1e-12, abs=1e-12)


def test_dense_limit_confusion(example3):
    c = mecapm_dense_limit_confusion(example3)
    assert c.as_dict() == {"tp": 3, "tn": 0, "fp": 3, "fn": 0}


def test_classifier_scores_examples():
    s = classifier_scores(ConfusionCounts(tp=2, tn=3, fp=1, fn=2))
    assert s.tpr == 0.5 and s.spc == 0.75 and s.ppv == pytest.approx(2 / 3) and s.acc == 5 / 8
    assert s.fpr == pytest.approx(1 - s.spc)
    perfect = classifier_scores(ConfusionCounts(tp=4, tn=5, fp=0, fn=0))
    assert (perfect.tpr, perfect.spc, perfect.ppv, perfect.acc) == (1.0, 1.0, 1.0, 1.0)


def test_classifier_scores_undefined_marked():
    s = classifier_scores(ConfusionCounts(tp=0, tn=4, fp=0, fn=0))
    assert s.tpr is None and s.ppv is None and s.spc == 1.0 and s.acc == 1.0


def test_accuracy_matches_table_formula():
    rng = np.random.default_rng(1)
    V, C = 1 + rng.pareto(2.0, 10), 1 + rng.pareto(2.0, 12)
    C *= V.sum() / C.sum()
    s = StrengthSequences.from_arrays(V, C)
    m = EcapmModel(s, solve_z(V, C, 30).z)
    truth = build_network(10, 12, [(i, a, 1.0) for i in range(10) for a in range(3)])
    c = expected_confusion(truth, m)
    NM = 120
    acc = classifier_scores(c).acc
    assert acc == pytest.approx(1 - 2 * 30 / NM + 2 * c.tp / NM, rel=1e-12)
    assert acc <= 1
