"""Synthetic ground truths drawn from the ECAPM law itself.

Real holdings data are confidential, so test networks are generated: draw
heavy-tailed fitnesses, calibrate ``z`` to a target density and sample one
ECAPM network. The network's realized marginals (not the input fitnesses)
are what a reconstruction should be fed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import InfeasibleTargetError, solve_z
from .core import BipartiteNetwork, StrengthSequences, build_network, strengths
from .models import EcapmModel, sample_ecapm

DISTRIBUTIONS = ("pareto", "lognormal", "uniform")


@dataclass(frozen=True)
class FitnessSpec:
    """``kind`` with two parameters:

    * ``pareto``: ``(exponent, minimum)``, density ~ x**-(exponent+1) above
      ``minimum``; mean ``exponent * minimum / (exponent - 1)``
    * ``lognormal``: ``(location, scale)`` of the underlying normal
    * ``uniform``: ``(lo, hi)`` with ``0 < lo <= hi``
    """

    kind: str
    params: tuple[float, float]
    n: int
    seed: int

    def __post_init__(self):
        a, b = self.params
        if self.kind not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        if self.kind == "pareto" and not (a > 1 and b > 0):
            raise ValueError("pareto needs exponent > 1 and minimum > 0")
        if self.kind == "lognormal" and not b >= 0:
            raise ValueError("lognormal scale must be non-negative")
        if self.kind == "uniform" and not (0 < a <= b):
            raise ValueError("uniform needs 0 < lo <= hi")

    @classmethod
    def parse(cls, text: str, n: int, seed: int) -> "FitnessSpec":
        """From ``"kind:a:b"``, e.g. ``"pareto:2.5:1e4"``."""
        kind, a, b = text.split(":")
        return cls(kind, (float(a), float(b)), n, seed)


def generate_fitness(spec: FitnessSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    a, b = spec.params
    if spec.kind == "pareto":
        # numpy's pareto is the Lomax law; shift by one for the classical form
        return b * (1.0 + rng.pareto(a, spec.n))
    if spec.kind == "lognormal":
        return rng.lognormal(a, b, spec.n)
    return rng.uniform(a, b, spec.n)


@dataclass(frozen=True)
class GroundTruth:
    network: BipartiteNetwork
    z: float
    target_links: int
    realized_links: int
    fitness_V: np.ndarray
    fitness_C: np.ndarray
    strengths: StrengthSequences


def generate_ground_truth(
    V: Sequence[float],
    C: Sequence[float],
    target_density: float,
    seed: int,
    noise: Optional[float] = None,
) -> GroundTruth:
    """Calibrate ECAPM on fitnesses ``(V, C)`` and draw one network.

    ``C`` is rescaled to the total of ``V`` first. The target link count is
    ``round(target_density * N * M)``, clipped to the feasible range.
    ``noise``, if given, multiplies every drawn weight by an independent
    log-normal factor ``exp(noise * g)``, ``g ~ N(0, 1)`` (a mis-specified
    truth); the realized strengths include the noise.
    """
    if not 0 < target_density < 1:
        raise ValueError("target density must lie in (0, 1)")
    V = np.asarray(V, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    C = C * (V.sum() / C.sum())
    fit = StrengthSequences.from_arrays(V, C)
    if fit.n_positive_pairs < 2:
        raise InfeasibleTargetError("need at least two linkable pairs for a random topology")
    L = int(round(target_density * V.size * C.size))
    L = min(max(L, 1), fit.n_positive_pairs - 1)
    z = solve_z(V, C, L).z
    net = sample_ecapm(EcapmModel(fit, z), seed)
    if noise:
        rng = np.random.default_rng([seed, 1])
        factors = np.exp(noise * rng.standard_normal(net.n_links))
        net = build_network(
            net.n_holders, net.n_issuers,
            rows=net.rows, cols=net.cols, weights=net.weights * factors,
        )
    return GroundTruth(net, z, L, net.n_links, V, C, strengths(net))
