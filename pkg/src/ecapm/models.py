"""CAPM, MECAPM and ECAPM reconstruction ensembles.

All three share the expected weights ``V_i C_a / W``. They differ in how
links are placed and how weights fluctuate:

* CAPM: every pair with a positive strength product is linked, weight fixed.
* MECAPM: weights are geometric on ``{0, 1, 2, ...}`` with mean
  ``V_i C_a / W``; a link exists when the weight is positive.
* ECAPM: links are Bernoulli with ``p = z V_i C_a / (1 + z V_i C_a)`` and a
  linked pair carries the degree-corrected weight ``(1/z + V_i C_a) / W``.

Probabilities and moments are computed one holder row at a time; nothing of
size ``N x M`` is stored.

Randomness. The uniform variate for holder ``i``, issuer ``a`` in draw ``d``
is word ``d * M + a`` of a Philox stream keyed by ``seed`` with counter word
1 set to ``i``. It is therefore a pure function of ``(seed, i, d, a)``;
rows and draws can be generated in any order or in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .core import BipartiteNetwork, StrengthSequences, build_network


class ModelKind(str, Enum):
    CAPM = "capm"
    MECAPM = "mecapm"
    ECAPM = "ecapm"


def _check_strengths(strengths: StrengthSequences) -> None:
    if not strengths.W > 0:
        raise ValueError("total weight W must be positive")


@dataclass(frozen=True)
class CapmModel:
    """Deterministic CAPM: the fully connected matrix of expected weights."""

    strengths: StrengthSequences
    kind = ModelKind.CAPM

    def __post_init__(self):
        _check_strengths(self.strengths)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.strengths.n_holders, self.strengths.n_issuers)

    def mean_row(self, i: int) -> np.ndarray:
        s = self.strengths
        return s.V[i] * s.C / s.W

    def probability_row(self, i: int) -> np.ndarray:
        return (self.mean_row(i) > 0).astype(np.float64)

    def moment_row(self, i: int, n: int) -> np.ndarray:
        """Raw moment ``E[w**n]`` of every weight in row ``i``."""
        return self.mean_row(i) ** n

    def variance_row(self, i: int) -> np.ndarray:
        return np.zeros(self.strengths.n_issuers)

    def square_variance_row(self, i: int) -> np.ndarray:
        """``Var(w**2)`` for every pair of row ``i``."""
        return np.zeros(self.strengths.n_issuers)

    def square_covariance_row(self, i: int) -> np.ndarray:
        """``Cov(w**2, w)`` for every pair of row ``i``."""
        return np.zeros(self.strengths.n_issuers)


@dataclass(frozen=True)
class MecapmModel(CapmModel):
    """Strength-constrained maximum-entropy ensemble with geometric weights."""

    kind = ModelKind.MECAPM

    def probability_row(self, i: int) -> np.ndarray:
        w = self.mean_row(i)
        return w / (1.0 + w)

    def moment_row(self, i: int, n: int) -> np.ndarray:
        m = self.mean_row(i)
        if n == 1:
            return m
        if n == 2:
            return m * (1 + 2 * m)
        if n == 3:
            return m * (1 + m * (6 + 6 * m))
        if n == 4:
            return m * (1 + m * (14 + m * (36 + 24 * m)))
        raise ValueError("moments available up to order 4")

    def variance_row(self, i: int) -> np.ndarray:
        m = self.mean_row(i)
        return m * (1 + m)

    # central forms of the geometric moments, free of cancellation
    def square_variance_row(self, i: int) -> np.ndarray:
        m = self.mean_row(i)
        return m * (1 + m * (13 + m * (32 + 20 * m)))

    def square_covariance_row(self, i: int) -> np.ndarray:
        m = self.mean_row(i)
        return m * (1 + m * (5 + 4 * m))


@dataclass(frozen=True)
class EcapmModel(CapmModel):
    """Fitness-induced topology with degree-corrected CAPM weights."""

    z: float = 0.0
    kind = ModelKind.ECAPM

    def __post_init__(self):
        super().__post_init__()
        if not (self.z > 0 and math.isfinite(self.z)):
            raise ValueError("z must be positive and finite")

    def probability_row(self, i: int) -> np.ndarray:
        s = self.strengths
        with np.errstate(over="ignore", invalid="ignore"):
            x = self.z * (s.V[i] * s.C)
            return np.where(np.isinf(x), 1.0, x / (1.0 + x))

    def conditional_weight_row(self, i: int) -> np.ndarray:
        """``(1/z + V_i C_a) / W``; zero where the link is impossible."""
        s = self.strengths
        vc = s.V[i] * s.C
        return np.where(vc > 0, (1.0 / self.z + vc) / s.W, 0.0)

    def moment_row(self, i: int, n: int) -> np.ndarray:
        return self.conditional_weight_row(i) ** n * self.probability_row(i)

    def variance_row(self, i: int) -> np.ndarray:
        m = self.mean_row(i)
        p = self.probability_row(i)
        out = np.zeros_like(m)
        pos = p > 0
        out[pos] = m[pos] ** 2 * (1.0 / p[pos] - 1.0)
        return out

    def square_variance_row(self, i: int) -> np.ndarray:
        c = self.conditional_weight_row(i)
        p = self.probability_row(i)
        return c**4 * p * (1.0 - p)

    def square_covariance_row(self, i: int) -> np.ndarray:
        c = self.conditional_weight_row(i)
        p = self.probability_row(i)
        return c**3 * p * (1.0 - p)


Model = Union[CapmModel, MecapmModel, EcapmModel]


def make_model(kind: Union[str, ModelKind], strengths: StrengthSequences,
               z: Optional[float] = None) -> Model:
    kind = ModelKind(kind)
    if kind is ModelKind.ECAPM:
        if z is None:
            raise ValueError("ECAPM needs a calibrated z")
        return EcapmModel(strengths, z)
    if kind is ModelKind.MECAPM:
        return MecapmModel(strengths)
    return CapmModel(strengths)


# -- per-pair quantities ---------------------------------------------------

def capm_weight(strengths: StrengthSequences, i: int, a: int) -> float:
    if not strengths.W > 0:
        raise ValueError("CAPM weight undefined for W = 0")
    return float(strengths.V[i] * strengths.C[a] / strengths.W)


def ecapm_link_probability(model: EcapmModel, i: int, a: int) -> float:
    x = float(model.z * (model.strengths.V[i] * model.strengths.C[a]))
    return 1.0 if math.isinf(x) else x / (1.0 + x)


def ecapm_conditional_weight(model: EcapmModel, i: int, a: int) -> float:
    s = model.strengths
    vc = s.V[i] * s.C[a]
    if vc <= 0:
        raise ValueError(f"pair ({i}, {a}) cannot be linked: zero strength product")
    return float((1.0 / model.z + vc) / s.W)


def mecapm_link_probability(model: MecapmModel, i: int, a: int) -> float:
    w = capm_weight(model.strengths, i, a)
    return w / (1.0 + w)


@dataclass(frozen=True)
class WeightLaw:
    mean: float
    variance: float
    link_probability: float
    conditional_weight: Optional[float] = None


def weight_law(model: Model, i: int, a: int) -> WeightLaw:
    """Mean, variance and link probability of the weight of pair ``(i, a)``."""
    mean = capm_weight(model.strengths, i, a)
    p = float(model.probability_row(i)[a])
    var = float(model.variance_row(i)[a])
    cw = None
    if isinstance(model, EcapmModel) and mean > 0:
        cw = ecapm_conditional_weight(model, i, a)
    return WeightLaw(mean, var, p, cw)


@dataclass(frozen=True)
class SigmaRatio:
    """ECAPM-to-MECAPM weight standard deviation ratio of one pair.

    ``exact`` is ``sqrt(w/(1+w)) * sqrt(1/p - 1)``; ``approx`` drops the
    first factor. ``flag`` is ``"no_link"`` when the expected weight is zero
    and ``"deterministic_link"`` when ``p == 1``; ``approx`` is None for
    ``"no_link"``.
    """

    exact: float
    approx: Optional[float]
    flag: Optional[str] = None


def weight_sigma_ratio(model: EcapmModel, i: int, a: int) -> SigmaRatio:
    mean = capm_weight(model.strengths, i, a)
    if mean == 0:
        return SigmaRatio(0.0, None, "no_link")
    p = ecapm_link_probability(model, i, a)
    if p >= 1.0:
        return SigmaRatio(0.0, 0.0, "deterministic_link")
    s_e = math.sqrt(mean * mean * (1.0 / p - 1.0))
    s_m = math.sqrt(mean * (1.0 + mean))
    return SigmaRatio(s_e / s_m, math.sqrt(1.0 / p - 1.0))


def expected_weight_matrix_row(model: Model, i: int) -> np.ndarray:
    """Expected weights of holder ``i``; identical for all model kinds."""
    return model.mean_row(i)


# -- sampling ----------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _philox(seed: int, i: int) -> np.random.Philox:
    if seed < 0 or seed >= 1 << 128:
        raise ValueError("seed must be in [0, 2**128)")
    return np.random.Philox(key=[seed & _MASK64, seed >> 64], counter=[0, i, 0, 0])


def row_uniforms(seed: int, i: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of row stream ``i`` as uniforms in (0, 1)."""
    bg = _philox(seed, i)
    bg.advance(start // 4)
    raw = bg.random_raw(start % 4 + count)[start % 4:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _weights_from_uniforms(model: Model, i: int, u: np.ndarray) -> np.ndarray:
    """Map uniforms (shape ``(..., M)``) to sampled weights of row ``i``."""
    if isinstance(model, EcapmModel):
        p = model.probability_row(i)
        return np.where(u < p, model.conditional_weight_row(i), 0.0)
    if isinstance(model, MecapmModel):
        m = model.mean_row(i)
        out = np.zeros(u.shape)
        pos = m > 0
        # log q = -log1p(1/m), accurate for q near one
        log_q = -np.log1p(1.0 / m[pos])
        out[..., pos] = np.floor(np.log(u[..., pos]) / log_q)
        return out
    return np.broadcast_to(model.mean_row(i), u.shape).copy()


def sample_row(model: Model, seed: int, i: int, draw: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Issuer indices and weights of holder ``i`` in draw ``draw``."""
    M = model.strengths.n_issuers
    u = row_uniforms(seed, i, draw * M, M)
    w = _weights_from_uniforms(model, i, u)
    cols = np.flatnonzero(w > 0)
    return cols, w[cols]


def sample(model: Model, seed: int, draw: int = 0) -> BipartiteNetwork:
    """One network from the ensemble of ``model``; deterministic in ``(seed, draw)``."""
    N, M = model.shape
    rows, cols, weights = [], [], []
    for i in range(N):
        c, w = sample_row(model, seed, i, draw)
        rows.append(np.full(c.size, i, dtype=np.int64))
        cols.append(c)
        weights.append(w)
    s = model.strengths
    return build_network(
        N, M,
        rows=np.concatenate(rows) if rows else [],
        cols=np.concatenate(cols) if cols else [],
        weights=np.concatenate(weights) if weights else [],
        holder_labels=s.holder_labels,
        issuer_labels=s.issuer_labels,
    )


def sample_ecapm(model: EcapmModel, seed: int, draw: int = 0) -> BipartiteNetwork:
    if not isinstance(model, EcapmModel):
        raise TypeError("sample_ecapm needs an EcapmModel")
    return sample(model, seed, draw)


def sample_mecapm(model: MecapmModel, seed: int, draw: int = 0) -> BipartiteNetwork:
    if not isinstance(model, MecapmModel):
        raise TypeError("sample_mecapm needs a MecapmModel")
    return sample(model, seed, draw)


MAX_DENSE_BATCH = 50_000_000


def sample_dense(model: Model, seed: int, n_draws: int, first_draw: int = 0) -> np.ndarray:
    """Draws ``first_draw .. first_draw+n_draws-1`` as a dense array of shape
    ``(n_draws, N, M)``.

    Uses the same streams as :func:`sample`, so draw ``d`` here equals
    ``sample(model, seed, d)``. Meant for Monte Carlo checks on small
    instances.
    """
    N, M = model.shape
    if n_draws * N * M > MAX_DENSE_BATCH:
        raise ValueError("batch too large for dense sampling")
    out = np.empty((n_draws, N, M))
    for i in range(N):
        u = row_uniforms(seed, i, first_draw * M, n_draws * M).reshape(n_draws, M)
        out[:, i, :] = _weights_from_uniforms(model, i, u)
    return out
