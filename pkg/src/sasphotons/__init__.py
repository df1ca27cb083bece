"""Simulation and coincidence analysis of correlated Stokes/anti-Stokes photon pairs."""

from .coincidence import (
    CoincidenceHistogram,
    CorrelatedRateResult,
    extract_correlated_rate,
    g2_curve,
    histogram,
)
from .fitting import (
    FitResult,
    SpectralRateSeries,
    fit_cross_section_scaling,
    fit_power_law,
    fit_step_constants,
    raman_peak_area,
)
from .physics import (
    CollectionConfig,
    LaserConfig,
    MaterialModel,
    PotentialBand,
    Spectrum,
    bose_occupation,
    delta_k,
    interaction_amplitude_from_rate,
    pair_rate,
    photons_per_pulse,
    project_enhancement,
    step_potential,
    v0_from_raman_area,
)
from .constants import energy_to_shift, shift_to_energy
from .montecarlo import ChannelProbabilities, EventStream, derive_probabilities, merge_streams, simulate
from .spatial import ApertureCurve, SpatialProfile, fit_profile, ratio_curve, transmitted_fraction

__version__ = "0.1.0"
