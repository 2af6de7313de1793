"""bpm-spdc: birefringent phase-matched waveguide design and photon-pair statistics.

The package has two halves that meet in the CLI:

- optics: wavelength-dependent refractive indices with thermal corrections
  (:mod:`bpm_spdc.dispersion`), type-1 phase-matching solvers, thermal tuning
  and frequency-doubling spectra (:mod:`bpm_spdc.phasematch`);
- counting: an event-level simulator of a heralded pair source producing
  timestamp streams (:mod:`bpm_spdc.montecarlo`) and estimators that reduce
  streams to pair rate, CAR, heralding efficiency and heralded g2
  (:mod:`bpm_spdc.photonstats`).

Coincidence kernels come from :mod:`bpm_spdc.kernels`, which transparently
prefers a compiled extension and falls back to pure NumPy.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .dispersion import (
    DispersionError,
    MaterialDispersion,
    MaterialFormatError,
    WavelengthRangeError,
    index_extraordinary_at_angle,
    index_extraordinary_principal,
    index_ordinary,
    load_material,
    parse_material,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .materials import builtin_names, builtin_path
from .montecarlo import (
    CoincidenceHistogram,
    MonteCarloError,
    ResourceLimitError,
    SourceModel,
    TagFileError,
    TagStream,
    coincidence_histogram,
    count_rates,
    generate_tags,
    read_tags,
    write_tags,
)
from .phasematch import (
    MultipleRootsError,
    NoCrossingError,
    PhaseMatchError,
    PhaseMatchSolution,
    ShgSpectrum,
    WaveguideConfig,
    delta_k,
    shg_spectrum,
    solve_pm_angle,
    solve_pm_wavelength,
    tuning_rate,
)
from .photonstats import (
    CountRates,
    LossBudget,
    PhotonStatsError,
    SpdcMetrics,
    UndefinedEstimateError,
    analytic_forward,
    brightness_fit,
    car_from_histogram,
    compute_metrics,
    g2h_zero,
    heralding_efficiency_from_counts,
    heralding_efficiency_from_loss,
    pgr,
    predicted_car,
)


def load_builtin(name: str) -> MaterialDispersion:
    """Load one of the packaged material files by name (with or without .mat)."""
    return load_material(builtin_path(name))


__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    # dispersion
    "DispersionError",
    "MaterialDispersion",
    "MaterialFormatError",
    "WavelengthRangeError",
    "index_extraordinary_at_angle",
    "index_extraordinary_principal",
    "index_ordinary",
    "load_material",
    "parse_material",
    "load_builtin",
    "builtin_names",
    "builtin_path",
    # phase matching
    "MultipleRootsError",
    "NoCrossingError",
    "PhaseMatchError",
    "PhaseMatchSolution",
    "ShgSpectrum",
    "WaveguideConfig",
    "delta_k",
    "shg_spectrum",
    "solve_pm_angle",
    "solve_pm_wavelength",
    "tuning_rate",
    # simulation
    "CoincidenceHistogram",
    "MonteCarloError",
    "ResourceLimitError",
    "SourceModel",
    "TagFileError",
    "TagStream",
    "coincidence_histogram",
    "count_rates",
    "generate_tags",
    "read_tags",
    "write_tags",
    # estimators
    "CountRates",
    "LossBudget",
    "PhotonStatsError",
    "SpdcMetrics",
    "UndefinedEstimateError",
    "analytic_forward",
    "brightness_fit",
    "car_from_histogram",
    "compute_metrics",
    "g2h_zero",
    "heralding_efficiency_from_counts",
    "heralding_efficiency_from_loss",
    "pgr",
    "predicted_car",
]
