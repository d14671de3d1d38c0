"""Transmit covariance models, eigen-structures, and channel sampling."""

from .covariance import (
    CovarianceMatrix,
    GroupEigenStructure,
    OneRingParams,
    eigen_decompose,
    one_ring_covariance,
    one_ring_covariance_batch,
    one_ring_lags,
    psd_sqrt,
)
from .ensemble import (
    OneRingPopulation,
    UnitaryEnsemble,
    draw_group_factors,
    group_channels,
    haar_unitary,
    sample_channels,
    synthesize_unitary_ensemble,
)
from .serialization import SCHEMA_VERSION, dumps, from_dict, loads, to_dict
from .spectrum import (
    EigenvalueSpectrum,
    flat_spectrum,
    one_ring_spectrum,
    spectrum_mass,
    szego_logdet_rate,
)

__all__ = [
    "CovarianceMatrix",
    "EigenvalueSpectrum",
    "GroupEigenStructure",
    "OneRingParams",
    "OneRingPopulation",
    "SCHEMA_VERSION",
    "UnitaryEnsemble",
    "draw_group_factors",
    "dumps",
    "eigen_decompose",
    "flat_spectrum",
    "from_dict",
    "group_channels",
    "haar_unitary",
    "loads",
    "one_ring_covariance",
    "one_ring_covariance_batch",
    "one_ring_lags",
    "one_ring_spectrum",
    "psd_sqrt",
    "sample_channels",
    "spectrum_mass",
    "szego_logdet_rate",
    "synthesize_unitary_ensemble",
    "to_dict",
]
