"""Off-axis interferogram synthesis and numerical phase extraction.

Synthesis writes the camera-plane intensity of a tilted reference beam
interfering with a signal beam,

    I(r) = A^2 + |B|^2 + 2 A |B| cos(k_c . r + phi_S(r) - phi_R(r)),

and extraction inverts that picture: locate the carrier peak in the 2-D
Fourier magnitude, isolate it with a tapered circular window, recenter,
inverse transform, take the argument, unwrap, subtract a low-power
reference phase and bin the result against the intensity picture.

Grid conventions: maps are row-major (y, x); carriers are given in
rad/pixel as (kx, ky); Fourier-domain coordinates are signed bins in the
fftshifted frame.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    CarrierSeparationError,
    GridMismatchError,
    PeakDetectionError,
)
from .images import ComplexFieldMap, ScalarFieldMap

#: Minimum DC-to-sideband distance, in FFT bins, for clean isolation.
MIN_CARRIER_BINS = 4.0
#: Raised-cosine edge width of the sideband window, in bins.
TAPER_BINS = 4.0
#: Pixels of border excluded from accuracy metrics (FFT edge effects).
BORDER_PX = 16


def pixel_grids(shape):
    """Row and column index grids (y, x) for a map of the given shape."""
    ny, nx = shape
    return np.mgrid[0:ny, 0:nx].astype(float)


def gaussian_beam(power_mw: float, sigma_um: float, shape=(512, 512),
                  pixel_pitch: float = 2.5, center=None) -> ScalarFieldMap:
    """Gaussian intensity profile in mW/mm^2 with peak P / (2 pi sigma^2).

    The integrated power over an infinite plane equals ``power_mw``; a
    grid narrower than 2 sigma gets a warning flag on the returned map
    because the sampled profile then misses a significant power fraction.
    """
    if power_mw < 0:
        raise ValueError("power must be >= 0")
    if sigma_um <= 0:
        raise ValueError("sigma must be > 0")
    ny, nx = shape
    yy, xx = pixel_grids(shape)
    # integer default center so one pixel samples the exact peak value
    cy, cx = center if center is not None else (ny // 2, nx // 2)
    r_sq_um = ((yy - cy) ** 2 + (xx - cx) ** 2) * pixel_pitch**2
    sigma_mm = sigma_um * 1e-3
    peak = power_mw / (2.0 * np.pi * sigma_mm**2)
    values = peak * np.exp(-r_sq_um / (2.0 * sigma_um**2))
    warnings_ = ()
    if min(ny, nx) * pixel_pitch < 2.0 * sigma_um:
        warnings_ = (f"grid extent {min(ny, nx) * pixel_pitch:.0f} um is below "
                     f"2 sigma = {2 * sigma_um:.0f} um",)
    return ScalarFieldMap(values, pixel_pitch, warnings_)


def gaussian_phase_map(peak_rad: float, sigma_um: float, shape=(512, 512),
                       pixel_pitch: float = 2.5, center=None) -> ScalarFieldMap:
    """Gaussian phase bump, peak value in radians."""
    bump = gaussian_beam(2.0 * np.pi * (sigma_um * 1e-3) ** 2, sigma_um, shape,
                         pixel_pitch, center)
    return ScalarFieldMap(peak_rad * bump.values, pixel_pitch)


def synthesize_interferogram(signal: ComplexFieldMap, ref_amplitude: float,
                             carrier, ref_curvature: float = 0.0) -> ScalarFieldMap:
    """Camera intensity of signal + tilted quasi-flat reference.

    ``carrier`` is (kx, ky) in rad/pixel; ``ref_curvature`` adds a
    parabolic reference phase in rad/pixel^2 about the image center.
    Raises CarrierSeparationError when the carrier sideband would sit
    within MIN_CARRIER_BINS of DC.
    """
    if ref_amplitude < 0:
        raise ValueError("reference amplitude must be >= 0")
    kx, ky = float(carrier[0]), float(carrier[1])
    ny, nx = signal.values.shape
    bins = np.hypot(kx * nx, ky * ny) / (2.0 * np.pi)
    if bins < MIN_CARRIER_BINS:
        raise CarrierSeparationError(
            f"carrier sideband at {bins:.2f} bins from DC; increase the "
            f"reference tilt so it exceeds {MIN_CARRIER_BINS:.0f} bins")
    yy, xx = pixel_grids((ny, nx))
    phi_ref = ref_curvature * ((yy - (ny - 1) / 2.0) ** 2 + (xx - (nx - 1) / 2.0) ** 2)
    amp = np.abs(signal.values)
    phi_sig = np.angle(signal.values)
    total = (ref_amplitude**2 + amp**2
             + 2.0 * ref_amplitude * amp
             * np.cos(kx * xx + ky * yy + phi_sig - phi_ref))
    return ScalarFieldMap(total, signal.pixel_pitch)


def fourier_magnitude(img: ScalarFieldMap) -> ScalarFieldMap:
    """Centered magnitude of the 2-D DFT of an image."""
    mag = np.abs(np.fft.fftshift(np.fft.fft2(img.values)))
    return ScalarFieldMap(mag, img.pixel_pitch)


def _signed_coords(index, shape):
    """(kx, ky) signed bins of an fftshifted array index (row, col)."""
    ny, nx = shape
    return index[1] - nx // 2, index[0] - ny // 2


def locate_carrier_peaks(magnitude: ScalarFieldMap, threshold_factor: float = 0.9,
                         floor: float = 1e-5):
    """Find the DC peak plus the conjugate carrier pair by thresholding.

    Binarizes the (fftshifted) Fourier magnitude at a threshold descending
    geometrically from the global maximum until exactly three 8-connected
    components appear, then reads off each component's peak position.
    Returns ``(dc, plus, minus)`` as signed-bin (kx, ky) pairs with
    ``plus`` on the kx > 0 side (ky > 0 when kx = 0).

    Raises PeakDetectionError when no threshold yields three components
    or the sidebands are not conjugate-symmetric within one bin.
    """
    mag = magnitude.values
    peak = float(mag.max())
    if peak <= 0:
        raise PeakDetectionError("Fourier magnitude is identically zero")
    structure = np.ones((3, 3), dtype=int)  # 8-neighbourhood
    threshold = peak * threshold_factor
    components = None
    while threshold > peak * floor:
        labels, count = ndimage.label(mag >= threshold, structure=structure)
        if count == 3:
            components = labels
            break
        threshold *= threshold_factor
    if components is None:
        raise PeakDetectionError(
            "descending threshold never isolated exactly three Fourier "
            "peaks; fringes are missing or ambiguous")
    positions = []
    for label in (1, 2, 3):
        masked = np.where(components == label, mag, -np.inf)
        positions.append(np.unravel_index(int(np.argmax(masked)), mag.shape))
    coords = [_signed_coords(p, mag.shape) for p in positions]
    coords.sort(key=lambda c: c[0] ** 2 + c[1] ** 2)
    dc, side_a, side_b = coords
    if abs(side_a[0] + side_b[0]) > 1 or abs(side_a[1] + side_b[1]) > 1:
        raise PeakDetectionError(
            f"sidebands {side_a} and {side_b} are not conjugate-symmetric")
    if (side_a[0], side_a[1]) > (0, 0):
        plus, minus = side_a, side_b
    else:
        plus, minus = side_b, side_a
    return dc, plus, minus


def _sideband_window(shape, center, radius, taper=TAPER_BINS):
    """Circular window with raised-cosine edge, in the fftshifted frame."""
    ny, nx = shape
    yy, xx = pixel_grids(shape)
    rho = np.hypot(xx - (nx // 2 + center[0]), yy - (ny // 2 + center[1]))
    inner = max(radius - taper, 0.0)
    window = np.zeros(shape)
    window[rho <= inner] = 1.0
    edge = (rho > inner) & (rho <= radius)
    window[edge] = 0.5 * (1.0 + np.cos(np.pi * (rho[edge] - inner) / max(taper, 1e-9)))
    return window


def _remove_residual_tilt(field: np.ndarray) -> np.ndarray:
    """Divide out the sub-bin carrier ramp left by integer recentering.

    The ramp is estimated from the amplitude-weighted mean phase step
    between neighbouring pixels along each axis, skipping the border
    frame where windowing ringing corrupts the gradient.  The weighting
    makes the estimate accurate for beam-shaped amplitudes; genuine
    linear phase content of the signal is removed along with the ramp.
    """
    b = BORDER_PX if min(field.shape) > 4 * BORDER_PX else 0
    core = field[b:field.shape[0] - b, b:field.shape[1] - b]
    gx = np.angle(np.sum(core[:, 1:] * np.conj(core[:, :-1])))
    gy = np.angle(np.sum(core[1:, :] * np.conj(core[:-1, :])))
    yy, xx = pixel_grids(field.shape)
    return field * np.exp(-1j * (gx * xx + gy * yy))


def demodulate_phase(interferogram: ScalarFieldMap,
                     window_radius: float | None = None,
                     sideband_sign: int = +1,
                     remove_tilt: bool = True) -> ScalarFieldMap:
    """Recover the wrapped signal-minus-reference phase of an interferogram.

    Isolates the +carrier Fourier peak (or the conjugate one for
    ``sideband_sign = -1``) inside a tapered circular window whose radius
    defaults to half the DC-to-sideband distance, shifts it to zero wave
    vector and returns the argument of the inverse transform in (-pi, pi].
    Propagates PeakDetectionError when the carrier cannot be located.
    """
    spectrum = np.fft.fftshift(np.fft.fft2(interferogram.values))
    _, plus, minus = locate_carrier_peaks(
        ScalarFieldMap(np.abs(spectrum), interferogram.pixel_pitch))
    target = plus if sideband_sign >= 0 else minus
    distance = float(np.hypot(*target))
    radius = window_radius if window_radius is not None else distance / 2.0
    window = _sideband_window(spectrum.shape, target, radius)
    cropped = np.roll(spectrum * window, shift=(-target[1], -target[0]), axis=(0, 1))
    field = np.fft.ifft2(np.fft.ifftshift(cropped))
    if remove_tilt:
        field = _remove_residual_tilt(field)
    return interferogram.with_values(np.angle(field))


def unwrap_phase(wrapped: ScalarFieldMap) -> ScalarFieldMap:
    """Sequential per-axis unwrap: rows first, then a column stitch.

    Exact whenever true phase gradients stay below pi per pixel along the
    scan paths.  If wrapped-scale jumps survive in the output the map is
    flagged through its warnings tuple rather than raising.
    """
    rows = np.unwrap(wrapped.values, axis=1)
    first_col = np.unwrap(rows[:, 0])
    out = rows + (first_col - rows[:, 0])[:, None]
    residual = int(np.count_nonzero(np.abs(np.diff(out, axis=0)) > np.pi)
                   + np.count_nonzero(np.abs(np.diff(out, axis=1)) > np.pi))
    extra = ()
    if residual:
        extra = (f"{residual} residual jumps above pi remain after unwrapping",)
    return wrapped.with_values(out, extra)


def subtract_reference(high_power: ScalarFieldMap, low_power: ScalarFieldMap,
                       intensity: ScalarFieldMap | None = None,
                       anchor_fraction: float = 0.02) -> ScalarFieldMap:
    """Difference of two unwrapped phase maps, high minus low.

    Shared systematics (reference curvature, aberrations) cancel exactly.
    When the matching intensity picture is supplied, the result is
    re-anchored so the mean phase over near-zero-intensity pixels (below
    ``anchor_fraction`` of the peak) is zero.
    """
    high_power.require_same_grid(low_power, "phase maps")
    diff = high_power.values - low_power.values
    if intensity is not None:
        high_power.require_same_grid(intensity, "phase and intensity maps")
        mask = intensity.values <= anchor_fraction * intensity.values.max()
        if np.any(mask):
            diff = diff - diff[mask].mean()
    return high_power.with_values(diff, low_power.warnings)


@dataclass
class PhaseShiftCurve:
    """Binned phase shift versus intensity with per-bin scatter.

    Intensities ascend, the lowest bin is anchored to zero phase and only
    bins with at least one pixel are retained.
    """

    intensities: np.ndarray   # mW/mm^2
    mean_phase: np.ndarray    # rad
    std_phase: np.ndarray     # rad
    pixel_counts: np.ndarray

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=float)
        self.mean_phase = np.asarray(self.mean_phase, dtype=float)
        self.std_phase = np.asarray(self.std_phase, dtype=float)
        self.pixel_counts = np.asarray(self.pixel_counts, dtype=int)
        n = self.intensities.size
        if not (self.mean_phase.size == self.std_phase.size
                == self.pixel_counts.size == n):
            raise ValueError("curve arrays must have equal length")
        if n and np.any(np.diff(self.intensities) <= 0):
            raise ValueError("curve intensities must be strictly increasing")
        if np.any(self.std_phase < 0) or np.any(self.pixel_counts <= 0):
            raise ValueError("std_phase must be >= 0 and pixel_counts > 0")

    def __len__(self):
        return self.intensities.size

    def to_csv(self, seed: int | None = None) -> str:
        buf = io.StringIO()
        if seed is not None:
            buf.write(f"# seed={seed}\n")
        buf.write("intensity_mW_mm2,dphi_rad,std_rad,npix\n")
        for i, phi, std, npx in zip(self.intensities, self.mean_phase,
                                    self.std_phase, self.pixel_counts):
            buf.write(f"{float(i)!r},{float(phi)!r},{float(std)!r},{int(npx)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PhaseShiftCurve":
        rows = [line for line in text.splitlines()
                if line and not line.startswith("#")]
        if not rows or rows[0].split(",")[0] != "intensity_mW_mm2":
            raise ValueError("not a phase-shift curve CSV")
        data = np.array([[float(v) for v in line.split(",")] for line in rows[1:]])
        if data.size == 0:
            raise ValueError("phase-shift curve CSV has no data rows")
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3].astype(int))


def bin_by_intensity(phase: ScalarFieldMap, intensity: ScalarFieldMap,
                     n_bins: int = 30,
                     tolerance: float | None = None) -> PhaseShiftCurve:
    """Average the phase map over sets of pixels of equal intensity.

    Bin centers span [0, I_max].  Each bin selects the pixels within a
    half-window of its center: ``tolerance`` (a fraction of I_max) sets
    that half-window explicitly, the default tiles the full range without
    overlap.  Per-bin errors are the standard deviation of the masked
    phase pixels.  The curve is anchored so the zero-intensity bin reads
    exactly zero phase.
    """
    phase.require_same_grid(intensity, "phase and intensity maps")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    i_vals = intensity.values.ravel()
    p_vals = phase.values.ravel()
    i_max = float(i_vals.max())
    if i_max <= 0:
        raise ValueError("intensity map has no positive pixels to bin")
    centers = np.linspace(0.0, i_max, n_bins)
    spacing = i_max / (n_bins - 1)
    half = tolerance * i_max if tolerance is not None else spacing / 2.0
    if half <= 0:
        raise ValueError("tolerance must be positive")

    kept_i, kept_phi, kept_std, kept_n = [], [], [], []
    for center in centers:
        mask = np.abs(i_vals - center) <= half
        count = int(np.count_nonzero(mask))
        if count == 0:
            continue
        kept_i.append(float(i_vals[mask].mean()))
        kept_phi.append(float(p_vals[mask].mean()))
        kept_std.append(float(p_vals[mask].std()))
        kept_n.append(count)
    if not kept_i:
        raise ValueError("no pixels fell into any intensity bin")
    order = np.argsort(kept_i)
    i_arr = np.asarray(kept_i)[order]
    phi_arr = np.asarray(kept_phi)[order]
    # anchor Delta phi(0) = 0: the lowest bin sits at the mean intensity of
    # its pixels, not exactly at zero, so extrapolate the first two bins
    # back to I = 0 before subtracting
    if len(i_arr) >= 2 and i_arr[1] > i_arr[0]:
        slope0 = (phi_arr[1] - phi_arr[0]) / (i_arr[1] - i_arr[0])
        offset = phi_arr[0] - slope0 * i_arr[0]
    else:
        offset = phi_arr[0]
    phi_arr = phi_arr - offset
    return PhaseShiftCurve(i_arr, phi_arr,
                           np.asarray(kept_std)[order],
                           np.asarray(kept_n)[order])


def add_intensity_jitter(img: ScalarFieldMap, fraction: float,
                         rng: np.random.Generator) -> ScalarFieldMap:
    """Global multiplicative intensity fluctuation of the given r.m.s. size."""
    factor = 1.0 + fraction * rng.standard_normal()
    return img.with_values(img.values * factor)


def add_shot_noise(img: ScalarFieldMap, peak_counts: float,
                   rng: np.random.Generator) -> ScalarFieldMap:
    """Poisson shot noise with the image peak mapped to ``peak_counts``."""
    if peak_counts <= 0:
        raise ValueError("peak_counts must be positive")
    top = float(img.values.max())
    if top <= 0:
        return img
    scale = peak_counts / top
    counts = rng.poisson(np.clip(img.values, 0.0, None) * scale)
    return img.with_values(counts / scale)
