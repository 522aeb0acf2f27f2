"""Nonlinear least-squares estimators for the Kerr analysis.

The workhorse is a damped Gauss-Newton loop (Levenberg-style damping,
start 1e-3, x10 on a rejected step, x0.1 on an accepted one) used for the
saturable phase-shift fit.  The saturation-intensity scaling law is a
linear regression in log-log space.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import ExcitonSeriesConfig, exciton_energy
from .errors import InsufficientDataError, PeakNotResolvableError
from .interferometry import PhaseShiftCurve

MAX_ITERATIONS = 200
REL_TOL = 1e-10


@dataclass
class FitResult:
    """Parameter estimates with standard errors and convergence info."""

    params: dict[str, float]
    sigmas: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "sigmas": self.sigmas,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "warnings": self.warnings,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def saturable_model(intensity, alpha, isat):
    """f(I) = alpha * I / (1 + I / I_sat)."""
    intensity = np.asarray(intensity, dtype=float)
    return alpha * intensity / (1.0 + intensity / isat)


def _saturable_jacobian(intensity, alpha, isat):
    denom = 1.0 + intensity / isat
    d_alpha = intensity / denom
    d_isat = alpha * intensity**2 / (isat**2 * denom**2)
    return np.column_stack([d_alpha, d_isat])


def _weights_from_std(std, explicit, unweighted):
    if unweighted or (explicit is None and (std is None or np.all(std == 0))):
        return None
    if explicit is not None:
        w = np.asarray(explicit, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be >= 0")
        return w
    std = np.asarray(std, dtype=float)
    floor = std[std > 0].min()
    return 1.0 / np.maximum(std, floor) ** 2


def _gauss_newton(model, jacobian, x, y, w, p0, positive=()):
    """Damped Gauss-Newton minimization of the weighted residual."""
    p = np.asarray(p0, dtype=float)
    sqrt_w = np.sqrt(w) if w is not None else np.ones_like(y)

    def cost(params):
        r = sqrt_w * (model(x, *params) - y)
        return float(r @ r), r

    lam = 1e-3
    current, r = cost(p)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        jac = sqrt_w[:, None] * jacobian(x, *p)
        jtj = jac.T @ jac
        grad = jac.T @ r
        try:
            step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), -grad)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        candidate = p + step
        if any(candidate[i] <= 0 for i in positive):
            lam *= 10.0
            continue
        new_cost, new_r = cost(candidate)
        if new_cost <= current:
            rel_change = np.max(np.abs(step) / np.maximum(np.abs(candidate), 1e-300))
            p, current, r = candidate, new_cost, new_r
            lam = max(lam * 0.1, 1e-14)
            if rel_change < REL_TOL:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e14:
                break
    jac = sqrt_w[:, None] * jacobian(x, *p)
    return p, math.sqrt(current), converged, iterations, jac


def _parameter_sigmas(jac, residual_norm, n_points):
    """Standard errors from the reduced-chi-square-scaled covariance."""
    n_params = jac.shape[1]
    dof = max(n_points - n_params, 1)
    scale = residual_norm**2 / dof
    try:
        cov = scale * np.linalg.inv(jac.T @ jac)
        sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        sig = np.full(n_params, np.inf)
    return sig


def fit_saturable(curve: PhaseShiftCurve, weights=None,
                  unweighted: bool = False) -> FitResult:
    """Fit alpha * I / (1 + I / I_sat) to a binned phase-shift curve.

    Weighting defaults to inverse variance from the per-bin standard
    deviations when any are available.  The initial slope comes from the
    two lowest-intensity bins and the initial I_sat from the point where
    the secant slope has dropped to half of it.

    The all-zero curve is degenerate: alpha is 0 but I_sat carries no
    information, which is flagged with an infinite sigma sentinel.
    """
    i = np.asarray(curve.intensities, dtype=float)
    phi = np.asarray(curve.mean_phase, dtype=float)
    if i.size < 3 or np.unique(i).size < 3:
        raise InsufficientDataError(
            "saturable fit needs at least 3 bins with distinct intensities")
    if np.any(i < 0):
        raise ValueError("intensities must be >= 0")

    scale = np.max(np.abs(phi))
    if scale == 0.0:
        return FitResult(params={"alpha": 0.0, "isat": float(i[-1])},
                         sigmas={"alpha": 0.0, "isat": float("inf")},
                         residual_norm=0.0, converged=True, iterations=0,
                         warnings=["flat curve: I_sat is unidentifiable"])

    nz = i > 0
    alpha0 = (phi[1] - phi[0]) / (i[1] - i[0])
    if alpha0 == 0.0:
        alpha0 = (phi[nz] / i[nz])[np.argmax(np.abs(phi[nz] / i[nz]))]
    secant = np.where(nz, np.divide(phi, i, out=np.zeros_like(phi), where=nz), 0.0)
    below = nz & (np.abs(secant) <= np.abs(alpha0) / 2.0)
    isat0 = float(i[below][0]) if np.any(below) else float(i[-1])

    w = _weights_from_std(curve.std_phase, weights, unweighted)
    p, res_norm, converged, iterations, jac = _gauss_newton(
        saturable_model, _saturable_jacobian, i, phi, w,
        (alpha0, isat0), positive=(1,))
    sig = _parameter_sigmas(jac, res_norm, i.size)
    notes = [] if converged else ["fit did not converge; best parameters returned"]
    return FitResult(params={"alpha": float(p[0]), "isat": float(p[1])},
                     sigmas={"alpha": float(sig[0]), "isat": float(sig[1])},
                     residual_norm=res_norm, converged=converged,
                     iterations=iterations, warnings=notes)


def extract_n2(alpha: float, transmission: float, length_um: float,
               wavelength_nm: float) -> float:
    """Nonlinear index in mm^2/mW from the initial slope and transmission.

    n2 = alpha / (k z0) with k = 2 pi / lambda and the effective length
    z0 = -L / ln T set by the low-power absorption.  z0 is clamped to the
    crystal length so the transparent limit recovers alpha / (k L); the
    clamp (including the T >= 1 case) emits a warning rather than failing.
    """
    if length_um <= 0 or wavelength_nm <= 0:
        raise ValueError("length and wavelength must be positive")
    if transmission <= 0:
        raise ValueError(f"transmission must be positive, got {transmission}")
    if transmission >= 1.0:
        warnings.warn("transmission >= 1; clamping effective length to L")
        z0_um = length_um
    else:
        z0_um = -length_um / math.log(transmission)
        if z0_um > length_um:
            warnings.warn("absorption length exceeds crystal; clamping to L")
            z0_um = length_um
    k_per_um = 2.0 * math.pi / (wavelength_nm * 1e-3)
    return alpha / (k_per_um * z0_um)


def fit_powerlaw(ns, isats, delta: float) -> FitResult:
    """Least-squares power law I_sat = A (n - delta)^b in log-log space.

    Returns the amplitude A, the exponent b and the exponent's standard
    error from the regression residuals.
    """
    ns = np.asarray(ns, dtype=float)
    isats = np.asarray(isats, dtype=float)
    if ns.size != isats.size:
        raise ValueError("ns and isats must have equal length")
    if ns.size < 3 or np.unique(ns).size < 3:
        raise InsufficientDataError("power-law fit needs at least 3 distinct n values")
    if np.any(isats <= 0):
        raise ValueError("all saturation intensities must be positive")
    if np.any(ns - delta <= 0):
        raise ValueError("n - delta must be positive for every point")

    x = np.log(ns - delta)
    y = np.log(isats)
    x_mean = x.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    slope = float(np.sum((x - x_mean) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x_mean)
    resid = y - (intercept + slope * x)
    dof = max(ns.size - 2, 1)
    s_sq = float(resid @ resid) / dof
    sig_slope = math.sqrt(s_sq / sxx)
    sig_intercept = math.sqrt(s_sq * (1.0 / ns.size + x_mean**2 / sxx))
    amplitude = math.exp(intercept)
    return FitResult(
        params={"amplitude": amplitude, "exponent": slope},
        sigmas={"amplitude": amplitude * sig_intercept, "exponent": sig_slope},
        residual_norm=float(np.linalg.norm(resid)),
        converged=True, iterations=1)


def _fwhm_window(energies, absorption, center_energy, max_offset):
    """FWHM interval of the absorption peak nearest center_energy."""
    inside = np.abs(energies - center_energy) <= max_offset
    if not np.any(inside):
        return None
    idx = np.flatnonzero(inside)
    peak_rel = int(np.argmax(absorption[idx]))
    peak = idx[peak_rel]
    if peak == 0 or peak == energies.size - 1:
        return None
    if absorption[peak] <= absorption[peak - 1] or absorption[peak] <= absorption[peak + 1]:
        # plateau or shoulder, not a local maximum
        if not (absorption[peak] > absorption[max(peak - 1, 0)]
                and absorption[peak] > absorption[min(peak + 1, energies.size - 1)]):
            return None
    half = absorption[peak] / 2.0

    def crossing(direction):
        j = peak
        while 0 < j < energies.size - 1:
            j += direction
            if absorption[j] <= half:
                # linear interpolation between j and the previous sample
                e1, e2 = energies[j - direction], energies[j]
                a1, a2 = absorption[j - direction], absorption[j]
                if a1 == a2:
                    return e2
                return e1 + (half - a1) * (e2 - e1) / (a2 - a1)
        return None

    lo = crossing(-1)
    hi = crossing(+1)
    if lo is None or hi is None:
        return None
    return min(lo, hi), max(lo, hi)


def isat_near_resonance(energies, isat_values, absorption, n: int,
                        cfg: ExcitonSeriesConfig) -> float:
    """Average I_sat(E) over one FWHM of the nP absorption peak.

    ``energies`` (ascending, eV) carries both the I_sat samples and the
    low-power absorption spectrum.  Raises PeakNotResolvableError when the
    nP peak has no local maximum with half-height crossings on both sides.
    """
    energies = np.asarray(energies, dtype=float)
    isat_values = np.asarray(isat_values, dtype=float)
    absorption = np.asarray(absorption, dtype=float)
    if not (energies.size == isat_values.size == absorption.size):
        raise ValueError("spectra must share one energy grid")
    center = exciton_energy(n, cfg)
    if n + 1 <= cfg.n_max:
        spacing = exciton_energy(n + 1, cfg) - center
    else:
        spacing = center - exciton_energy(n - 1, cfg)
    window = _fwhm_window(energies, absorption, center, spacing / 2.0)
    if window is None:
        raise PeakNotResolvableError(
            f"absorption peak for n = {n} is not resolvable on this grid")
    lo, hi = window
    mask = (energies >= lo) & (energies <= hi)
    if not np.any(mask):
        raise PeakNotResolvableError(
            f"no samples inside the FWHM window of the n = {n} peak")
    return float(isat_values[mask].mean())
