"""Closed-form optical response of the exciton series.

The linear susceptibility is a sum of Lorentzian lines,

    chi1(E) = eps_b * sum_n f_n * Delta_LT / (E_Tn - E - i*Gamma_n),

and the third-order susceptibility a double sum over state pairs,

    chi3(E) = -chi3_0 * sum_{n,n'} F_{nn'} * Gamma_n' * E_Tn /
              ( [(E_Tn' - E)^2 + Gamma_n'^2] * [E_Tn^2 - E^2 - 2i*E*Gamma_n] ),

truncated at the configured n range.  From these the module derives the
nonlinear absorption, the intensity-dependent refractive index, the Kerr
phase shift and the nonlinear index n2.

Intensities are mW/mm^2 throughout.  The in-crystal field is obtained from
|E_prop|^2 = 2 * |2 / (1 + sqrt(eps_b))|^2 * zeta * P with P in W/m^2, so
one mW/mm^2 contributes 1000 W/m^2 worth of field squared.

All functions are pure; arrays of energies and intensities broadcast
against each other.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import blockade as _blockade
from .blockade import BlockadeMode
from .config import (
    HBARC_EV_UM,
    ExcitonSeriesConfig,
    SpectralGrid,
    exciton_energy,
)
from .errors import NumericsError

MW_MM2_TO_W_M2 = 1000.0

SPECTRUM_HEADER = ("energy_eV,re_chi1,im_chi1,re_chi3,im_chi3,"
                   "n2_mm2_per_mW,alpha3_per_um")


@dataclass(frozen=True)
class SusceptibilitySpectrum:
    """Sampled complex chi1 (dimensionless) and chi3 (m^2/V^2)."""

    grid: SpectralGrid
    chi1: np.ndarray
    chi3: np.ndarray

    def __post_init__(self):
        for name in ("chi1", "chi3"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (len(self.grid),):
                raise ValueError(f"{name} must have exactly the grid's length")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class KerrResponse:
    """n2 spectrum plus absorption and phase shift samples.

    ``phase_shift`` has shape (n_energies, n_intensities) for the stored
    ``intensities`` and is exactly zero in any I = 0 column.
    """

    grid: SpectralGrid
    n2: np.ndarray                # mm^2/mW
    alpha3: np.ndarray            # 1/um
    intensities: np.ndarray       # mW/mm^2
    phase_shift: np.ndarray       # rad


def oscillator_strength(n: int, cfg: ExcitonSeriesConfig) -> float:
    """Oscillator strength of the nP line.

    f_n = 32 (n^2 - 1) / (3 n^5) * [ n (r0 + 2 a*) / (2 (r0 + n a*)) ]^6,
    zero exactly at n = 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n = float(n)
    r0, a = cfg.coherence_radius, cfg.bohr_radius
    bracket = n * (r0 + 2.0 * a) / (2.0 * (r0 + n * a))
    return 32.0 * (n * n - 1.0) / (3.0 * n**5) * bracket**6


def coupling_strength(n: int, n_prime: int, cfg: ExcitonSeriesConfig) -> float:
    """Pair coupling F_{nn'} entering the third-order sum.

    F = (n'^2 - 1)(n^2 - 1) / n'^5 * (A / n^gamma + B / n^beta); vanishes
    whenever either index is 1.
    """
    if n < 1 or n_prime < 1:
        raise ValueError("n and n' must be >= 1")
    n = float(n)
    npr = float(n_prime)
    return ((npr * npr - 1.0) * (n * n - 1.0) / npr**5
            * (cfg.coupling_a / n**cfg.gamma_exp + cfg.coupling_b / n**cfg.beta_exp))


def _linewidth(n: int, cfg: ExcitonSeriesConfig, intensity, mode: BlockadeMode):
    """Linewidth at the given in-crystal intensity, broadened if requested."""
    base = cfg.linewidth(n)
    if mode.broadens:
        return _blockade.broadened_linewidth(n, intensity, mode, base)
    return base


def chi1(energy, cfg: ExcitonSeriesConfig, intensity=0.0,
         mode: BlockadeMode | None = None):
    """Linear susceptibility at photon energy E (eV), scalar or array.

    In the broadening blockade modes the linewidths grow with the
    intensity argument; otherwise intensity is ignored.
    """
    mode = mode or BlockadeMode.none()
    e_arr, i_arr = np.broadcast_arrays(np.asarray(energy, dtype=float),
                                       np.asarray(intensity, dtype=float))
    out = np.zeros(e_arr.shape, dtype=complex)
    for n in cfg.n_range():
        f_n = oscillator_strength(n, cfg)
        gamma = _linewidth(n, cfg, i_arr, mode)
        e_tn = exciton_energy(n, cfg)
        out += cfg.epsilon_b * f_n * cfg.delta_lt / (e_tn - e_arr - 1j * gamma)
    return out if out.ndim else complex(out)


def chi3(energy, cfg: ExcitonSeriesConfig, intensity=0.0,
         mode: BlockadeMode | None = None):
    """Third-order susceptibility in m^2/V^2, blockade applied per mode.

    The saturable mode multiplies every term of a given n' family by
    1 / (1 + I / I_sat(n')): n' indexes the squared Lorentzian that sets
    the line shape, so the state resonant with the probe is the one whose
    density saturates.  The broadening mode feeds power-broadened
    linewidths into both Lorentzian factors.
    """
    mode = mode or BlockadeMode.none()
    e_arr, i_arr = np.broadcast_arrays(np.asarray(energy, dtype=float),
                                       np.asarray(intensity, dtype=float))
    out = np.zeros(e_arr.shape, dtype=complex)
    if cfg.chi3_0 == 0.0:
        return out if out.ndim else complex(out)
    energies = {n: exciton_energy(n, cfg) for n in cfg.n_range()}
    for npr in cfg.n_range():
        gamma_p = _linewidth(npr, cfg, i_arr, mode)
        e_tp = energies[npr]
        lorentz = (e_tp - e_arr) ** 2 + gamma_p**2
        if mode.saturates:
            isat = _blockade.isat_for(npr, mode, cfg.quantum_defect)
            scale = _blockade.saturable_scale(i_arr, isat)
        else:
            scale = 1.0
        for n in cfg.n_range():
            gamma_n = _linewidth(n, cfg, i_arr, mode)
            e_tn = energies[n]
            coupling = coupling_strength(n, npr, cfg)
            denom = lorentz * (e_tn**2 - e_arr**2 - 2j * e_arr * gamma_n)
            out += scale * coupling * gamma_p * e_tn / denom
    out *= -cfg.chi3_0
    return out if out.ndim else complex(out)


def susceptibility_spectrum(grid: SpectralGrid, cfg: ExcitonSeriesConfig,
                            intensity=0.0,
                            mode: BlockadeMode | None = None) -> SusceptibilitySpectrum:
    return SusceptibilitySpectrum(grid,
                                  chi1(grid.energies, cfg, intensity, mode),
                                  chi3(grid.energies, cfg, intensity, mode))


def propagating_field_squared(power_density, cfg: ExcitonSeriesConfig):
    """|E_prop|^2 in V^2/m^2 for an incident power density in W/m^2.

    |E_prop|^2 = 2 * |2 / (1 + sqrt(eps_b))|^2 * zeta * P.
    """
    power_density = np.asarray(power_density, dtype=float)
    if np.any(power_density < 0):
        raise ValueError("power density must be >= 0")
    trans = abs(2.0 / (1.0 + np.sqrt(cfg.epsilon_b))) ** 2
    out = 2.0 * trans * cfg.vacuum_impedance * power_density
    return out if out.ndim else float(out)


def field_squared_per_intensity(cfg: ExcitonSeriesConfig) -> float:
    """V^2/m^2 of in-crystal field squared per mW/mm^2 of intensity."""
    return propagating_field_squared(MW_MM2_TO_W_M2, cfg)


def nonlinear_absorption(energy, intensity, cfg: ExcitonSeriesConfig,
                         mode: BlockadeMode | None = None):
    """Absorption coefficient in 1/um including the chi3 correction.

    alpha = (E / hbar c) / sqrt(eps_b) * (Im chi1 + |E_prop|^2 Im chi3);
    at zero intensity this is the linear absorption coefficient.
    """
    e_arr = np.asarray(energy, dtype=float)
    k_vac = e_arr / HBARC_EV_UM
    field_sq = field_squared_per_intensity(cfg) * np.asarray(intensity, dtype=float)
    im_part = (chi1(energy, cfg, intensity, mode).imag
               + field_sq * chi3(energy, cfg, intensity, mode).imag)
    out = k_vac / np.sqrt(cfg.epsilon_b) * im_part
    return out if np.ndim(out) else float(out)


def linear_absorption(energy, cfg: ExcitonSeriesConfig):
    """Low-power absorption coefficient in 1/um."""
    return nonlinear_absorption(energy, 0.0, cfg)


def optical_density(energy, cfg: ExcitonSeriesConfig):
    """-ln of the low-power transmission through the crystal."""
    return linear_absorption(energy, cfg) * cfg.crystal_length


def transmission(energy, cfg: ExcitonSeriesConfig):
    return np.exp(-optical_density(energy, cfg))


def average_internal_intensity(energy, intensity, cfg: ExcitonSeriesConfig):
    """Average of I0 * exp(-z/z0) over the crystal thickness.

    Uses the low-power absorption length z0 = 1/alpha; approaches the
    input intensity in the transparent limit.
    """
    od = optical_density(energy, cfg)
    od = np.asarray(od, dtype=float)
    factor = np.ones_like(od)
    nz = od > 0
    factor[nz] = -np.expm1(-od[nz]) / od[nz]
    out = factor * np.asarray(intensity, dtype=float)
    return out if out.ndim else float(out)


def total_index(energy, intensity, cfg: ExcitonSeriesConfig,
                mode: BlockadeMode | None = None):
    """Complex refractive index n(E, I), principal square root.

    n^2 = eps_b + chi1 + |E_prop(I)|^2 * chi3.  The intensity argument is
    the in-crystal average intensity in mW/mm^2.
    """
    field_sq = field_squared_per_intensity(cfg) * np.asarray(intensity, dtype=float)
    n_sq = (cfg.epsilon_b + chi1(energy, cfg, intensity, mode)
            + field_sq * chi3(energy, cfg, intensity, mode))
    return np.sqrt(n_sq)


def _phase_factor(energy, cfg: ExcitonSeriesConfig):
    """omega L / c = k_vac * L in radians."""
    e_arr = np.asarray(energy, dtype=float)
    if cfg.wavelength is not None:
        k_um = 2.0 * np.pi / (cfg.wavelength * 1e-3)
        return k_um * cfg.crystal_length * np.ones_like(e_arr)
    return e_arr / HBARC_EV_UM * cfg.crystal_length


def phase_shift(energy, intensity, cfg: ExcitonSeriesConfig,
                mode: BlockadeMode | None = None):
    """Kerr phase shift (omega L / c) * Re[n(I_avg) - n(0)] in radians.

    ``intensity`` is the intensity entering the crystal; it is attenuated
    to the in-crystal average before evaluating the index, so the result
    is directly comparable with curves binned against measured input
    intensity.  Exactly zero at I = 0.
    """
    e_arr, i_arr = np.broadcast_arrays(np.asarray(energy, dtype=float),
                                       np.asarray(intensity, dtype=float))
    i_avg = average_internal_intensity(e_arr, i_arr, cfg)
    delta_n = total_index(e_arr, i_avg, cfg, mode).real - total_index(e_arr, 0.0, cfg, mode).real
    out = _phase_factor(e_arr, cfg) * delta_n
    return out if np.ndim(out) else float(out)


def n2_point(energy, cfg: ExcitonSeriesConfig):
    """Nonlinear index in mm^2/mW from the zero-intensity slope.

    n2 = kappa * Re chi3 / (2 * Re n_lin) with kappa the field squared per
    unit intensity and n_lin the linear index, i.e. the analytic
    derivative of Re n with respect to intensity at I = 0 with the real
    parts split.  This form vanishes identically when Re chi3 does and
    keeps the zero crossings pinned to the resonances.
    """
    n_lin = total_index(energy, 0.0, cfg)
    kappa = field_squared_per_intensity(cfg)
    out = kappa * np.asarray(chi3(energy, cfg)).real / (2.0 * np.asarray(n_lin).real)
    return out if np.ndim(out) else float(out)


def n2_spectrum(grid: SpectralGrid, cfg: ExcitonSeriesConfig,
                mode: BlockadeMode | None = None,
                intensities=(),
                absorption_intensity: float = 0.0) -> KerrResponse:
    """Evaluate n2, absorption and optional phase-shift samples on a grid."""
    e = grid.energies
    n2 = n2_point(e, cfg)
    alpha = nonlinear_absorption(e, absorption_intensity, cfg, mode)
    intensities = np.asarray(intensities, dtype=float)
    if intensities.size:
        phases = phase_shift(e[:, None], intensities[None, :], cfg, mode)
    else:
        phases = np.zeros((e.size, 0))
    return KerrResponse(grid, np.asarray(n2), np.asarray(alpha), intensities, phases)


def render_spectrum_csv(grid: SpectralGrid, cfg: ExcitonSeriesConfig,
                        mode: BlockadeMode | None = None,
                        intensity: float = 0.0,
                        chi3_only: bool = False,
                        seed: int | None = None) -> str:
    """Render the spectrum CSV (LF endings, '.' decimals) as a string."""
    e = grid.energies
    c3 = np.asarray(chi3(e, cfg, intensity, mode))
    columns = [e]
    if chi3_only:
        header = "energy_eV,re_chi3,im_chi3"
        columns += [c3.real, c3.imag]
    else:
        header = SPECTRUM_HEADER
        c1 = np.asarray(chi1(e, cfg, intensity, mode))
        n2 = np.asarray(n2_point(e, cfg))
        alpha = np.asarray(nonlinear_absorption(e, intensity, cfg, mode))
        columns += [c1.real, c1.imag, c3.real, c3.imag, n2, alpha]
    for col in columns:
        if not np.all(np.isfinite(col)):
            raise NumericsError("spectrum evaluation produced non-finite values")
    buf = io.StringIO()
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    buf.write(header + "\n")
    for row in zip(*columns):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
