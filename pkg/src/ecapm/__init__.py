"""Reconstruction of weighted bipartite holder/issuer networks.

CAPM, MECAPM and ECAPM ensembles built from strength sequences (plus the
total link count for ECAPM), with samplers and validation indicators.
"""
__version__ = "0.1.0"

from .calibration import (
    BicmMultipliers,
    CalibrationError,
    CalibrationResult,
    InfeasibleTargetError,
    expected_link_count,
    solve_bicm,
    solve_z,
    sparse_z,
)
from .core import (
    BipartiteNetwork,
    DegreeSequences,
    NetworkError,
    StrengthSequences,
    build_network,
    degrees,
    density,
    strengths,
)
from .models import (
    CapmModel,
    EcapmModel,
    MecapmModel,
    ModelKind,
    WeightLaw,
    make_model,
    sample,
    sample_ecapm,
    sample_mecapm,
    weight_law,
    weight_sigma_ratio,
)
