"""Saturable Kerr spectroscopy toolkit for Rydberg exciton series.

Forward-models the linear and third-order optical response of a
hydrogen-like exciton series (with Rydberg-blockade saturation), generates
synthetic off-axis interferograms, and inverts them into phase-shift
curves, n2 spectra and saturation-intensity scaling laws.
"""

from .blockade import BlockadeMode, broadened_linewidth, predict_isat, saturable_scale
from .config import (
    ExcitonSeriesConfig,
    SpectralGrid,
    default_config,
    exciton_energy,
    load_config,
    save_config,
)
from .fitting import FitResult, extract_n2, fit_powerlaw, fit_saturable, isat_near_resonance
from .images import ComplexFieldMap, ScalarFieldMap, read_png16, read_rkf, write_rkf
from .interferometry import (
    PhaseShiftCurve,
    bin_by_intensity,
    demodulate_phase,
    gaussian_beam,
    locate_carrier_peaks,
    subtract_reference,
    synthesize_interferogram,
    unwrap_phase,
)
from .response import (
    KerrResponse,
    SusceptibilitySpectrum,
    chi1,
    chi3,
    coupling_strength,
    n2_spectrum,
    nonlinear_absorption,
    oscillator_strength,
    phase_shift,
    propagating_field_squared,
    total_index,
    transmission,
)

__version__ = "0.1.0"
