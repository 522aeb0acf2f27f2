import csv
import io

import numpy as np
import pytest

from rydkerr import response as R
from rydkerr.blockade import BlockadeMode
from rydkerr.config import SpectralGrid, default_config, exciton_energy
from rydkerr.errors import NumericsError

HBARC_EV_UM = 0.1973269804


# ---------------------------------------------------------------------------
# oscillator strengths

def test_oscillator_strength_vanishes_at_n1(cfg):
    assert R.oscillator_strength(1, cfg) == 0.0


def test_oscillator_strength_pure_coulomb_values():
    cfg0 = default_config(rydberg_energy=0.092, epsilon_b=7.5, delta_lt=2e-6,
                          coherence_radius=0.0, gamma0=0.010)
    assert R.oscillator_strength(2, cfg0) == pytest.approx(1.0, rel=1e-14)
    # 32 * 8 / (3 * 243) = 256 / 729
    assert R.oscillator_strength(3, cfg0) == pytest.approx(256 / 729, rel=1e-14)


def test_oscillator_strength_positive(cfg):
    for n in range(2, 30):
        assert R.oscillator_strength(n, cfg) > 0.0
    with pytest.raises(ValueError):
        R.oscillator_strength(0, cfg)


# ---------------------------------------------------------------------------
# chi1

def test_chi1_single_lorentzian_hand_value(single_line_cfg):
    # eps_b f dLT / (E_T - E - i Gamma) with the detuning equal to Gamma:
    # 7.5e-3 / (1e-4 - 1e-4 i) = 37.5 + 37.5 i
    value = R.chi1(2.1699, single_line_cfg)
    assert value.real == pytest.approx(37.5, rel=1e-10)
    assert value.imag == pytest.approx(37.5, rel=1e-10)


def test_chi1_on_resonance_is_imaginary(single_line_cfg):
    e_t = exciton_energy(2, single_line_cfg)
    value = R.chi1(e_t, single_line_cfg)
    expected = 7.5 * 1.0 * 1e-3 / 1e-4
    assert value.imag == pytest.approx(expected, rel=1e-12)
    assert abs(value.real) < 1e-9 * abs(value.imag)


def test_chi1_decays_far_from_resonance(single_line_cfg):
    near = abs(R.chi1(2.17 - 1e-3, single_line_cfg))
    far = abs(R.chi1(2.17 - 0.2, single_line_cfg))
    assert far < 1e-2 * near


def test_chi1_linearity_over_disjoint_ranges(cfg):
    lo = cfg.replace(n_min=2, n_max=7)
    hi = cfg.replace(n_min=8, n_max=14)
    e = np.linspace(2.14, 2.172, 400)
    total = R.chi1(e, cfg)
    split = R.chi1(e, lo) + R.chi1(e, hi)
    # exact up to float summation order
    np.testing.assert_allclose(split, total, rtol=1e-12)


def test_chi1_lorentzian_symmetry(single_line_cfg):
    e_t = exciton_energy(2, single_line_cfg)
    for delta in (1e-5, 3e-4, 2e-3):
        above = R.chi1(e_t + delta, single_line_cfg)
        below = R.chi1(e_t - delta, single_line_cfg)
        assert above.real == pytest.approx(-below.real, rel=1e-12)
        assert above.imag == pytest.approx(below.imag, rel=1e-12)


def test_chi1_imaginary_part_nonnegative(cfg):
    e = np.linspace(2.13, 2.175, 2000)
    assert np.all(R.chi1(e, cfg).imag >= 0)


def test_chi1_kramers_kronig_consistency(single_line_cfg):
    """Re chi1 must match the principal-value transform of Im chi1."""
    gamma = 1e-4
    e_t = exciton_energy(2, single_line_cfg)

    def kk_real(e_test, half_width=2000 * gamma, n=400001):
        h = 2 * half_width / n
        offsets = (np.arange(n) - n // 2 + 0.5) * h  # symmetric, skips the pole
        im = np.asarray(R.chi1(e_test + offsets, single_line_cfg)).imag
        return np.sum(im / offsets) * h / np.pi

    for detuning in (-5 * gamma, -2 * gamma, 2 * gamma, 5 * gamma):
        e_test = e_t + detuning
        re_exact = complex(R.chi1(e_test, single_line_cfg)).real
        assert kk_real(e_test) == pytest.approx(re_exact, rel=1e-3)


# ---------------------------------------------------------------------------
# chi3 and couplings

def test_coupling_strength_zero_at_n1(cfg):
    assert R.coupling_strength(1, 7, cfg) == 0.0
    assert R.coupling_strength(7, 1, cfg) == 0.0


def test_coupling_strength_value(cfg):
    # (3*3/32) * (4.53 / 2^1.8 + 3.41 / 2^1.62)
    assert R.coupling_strength(2, 2, cfg) == pytest.approx(0.6778954177870474,
                                                           rel=1e-12)


def test_chi3_zero_prefactor(cfg):
    off = cfg.replace(chi3_0=0.0)
    e = np.linspace(2.16, 2.172, 50)
    assert np.all(R.chi3(e, off) == 0)


def test_chi3_single_pair_oracle():
    """One (n, n') = (2, 2) term against plain complex arithmetic."""
    cfg2 = default_config(rydberg_energy=0.008, epsilon_b=7.5, delta_lt=1e-3,
                          coherence_radius=0.0, quantum_defect=0.0,
                          n_min=2, n_max=2, base_linewidths={2: 1e-4},
                          extra_broadening=0.0)
    e = 2.1700
    e_t = 2.1721 - 0.008 / 4
    gamma = 1e-4
    coupling = (3 * 3 / 32) * (4.53 / 2**1.8 + 3.41 / 2**1.62)
    oracle = (-0.6e-11 * coupling * gamma * e_t
              / (((e_t - e) ** 2 + gamma**2)
                 * (e_t**2 - e**2 - 2j * e * gamma)))
    assert complex(R.chi3(e, cfg2)) == pytest.approx(oracle, rel=1e-13)
    # frozen value from that arithmetic
    assert complex(R.chi3(e, cfg2)) == pytest.approx(
        -5.084449927693774e-05 - 5.0843327771561284e-05j, rel=1e-12)


def test_chi3_vanishes_for_huge_linewidths(cfg):
    e = exciton_energy(10, cfg) - 1e-5
    narrow = abs(R.chi3(e, cfg))
    wide_cfg = cfg.replace(gamma0=None,
                           base_linewidths={n: 10.0 for n in range(2, 15)})
    assert abs(R.chi3(e, wide_cfg)) < 1e-6 * narrow


def test_chi3_finite_on_dense_grid(cfg):
    e = np.linspace(2.14, 2.174, 3000)
    vals = R.chi3(e, cfg)
    assert np.all(np.isfinite(vals))


# ---------------------------------------------------------------------------
# field, absorption, index

def test_propagating_field_squared_values(cfg):
    assert R.propagating_field_squared(0.0, cfg) == 0.0
    unit = cfg.replace(epsilon_b=1.0)
    assert R.propagating_field_squared(3.0, unit) == pytest.approx(
        2 * 376.73 * 3.0)
    nine = cfg.replace(epsilon_b=9.0)
    # 2 * (2/4)^2 * 376.73
    assert R.propagating_field_squared(1.0, nine) == pytest.approx(188.365)


def test_propagating_field_linear(cfg):
    p = np.array([0.0, 1.0, 2.5, 7.0])
    vals = R.propagating_field_squared(p, cfg)
    np.testing.assert_allclose(vals, vals[1] * p, rtol=1e-14)


def test_absorption_zero_without_imaginary_parts(cfg):
    transparent = cfg.replace(delta_lt=1e-30, chi3_0=0.0)
    assert R.nonlinear_absorption(2.17, 5.0, transparent) == pytest.approx(0.0, abs=1e-20)


def test_absorption_reduces_to_linear_at_zero_intensity(cfg):
    e = exciton_energy(10, cfg)
    assert R.nonlinear_absorption(e, 0.0, cfg) == R.linear_absorption(e, cfg)


def test_absorption_bleaches_on_resonance(cfg, sat_mode):
    # couplings scaled so the chi3 correction stays perturbative at
    # saturation-scale intensities
    weak = cfg.replace(coupling_a=cfg.coupling_a * 1e-3,
                       coupling_b=cfg.coupling_b * 1e-3)
    e = exciton_energy(10, weak)
    alphas = [R.nonlinear_absorption(e, i, weak, sat_mode) for i in (0.0, 0.2, 0.5)]
    assert alphas[0] > alphas[1] > alphas[2] > 0


def test_total_index_background_only(cfg):
    bare = cfg.replace(delta_lt=1e-30, chi3_0=0.0)
    assert complex(R.total_index(2.165, 0.0, bare)) == pytest.approx(
        np.sqrt(7.5), rel=1e-9)


def test_total_index_ignores_chi3_at_zero_intensity(cfg):
    e = exciton_energy(9, cfg) - 5e-5
    with_chi3 = R.total_index(e, 0.0, cfg)
    without = R.total_index(e, 0.0, cfg.replace(chi3_0=0.0))
    assert complex(with_chi3) == complex(without)


def test_total_index_first_order_taylor(cfg):
    e = exciton_energy(10, cfg) - 20 * cfg.linewidth(10)
    i = 1e-5
    n0 = complex(R.total_index(e, 0.0, cfg))
    n_i = complex(R.total_index(e, i, cfg))
    field_sq = R.field_squared_per_intensity(cfg) * i
    taylor = (field_sq * complex(R.chi3(e, cfg)) / (2 * n0)).real
    assert n_i.real - n0.real == pytest.approx(taylor, rel=1e-5)


# ---------------------------------------------------------------------------
# phase shift and n2

def test_phase_shift_zero_at_zero_intensity(cfg, sat_mode):
    e = exciton_energy(8, cfg) - 1e-4
    assert R.phase_shift(e, 0.0, cfg) == 0.0
    assert R.phase_shift(e, 0.0, cfg, sat_mode) == 0.0


def test_phase_shift_sign_flips_across_resonance(cfg):
    e_t = exciton_energy(10, cfg)
    gamma = cfg.linewidth(10)
    red = R.phase_shift(e_t - gamma / 2, 0.1, cfg)
    blue = R.phase_shift(e_t + gamma / 2, 0.1, cfg)
    assert red * blue < 0


def test_phase_shift_low_intensity_slope_matches_n2(cfg):
    """d(phase)/dI at I = 0 equals k L n2 where absorption is negligible."""
    thin = cfg.replace(delta_lt=1e-8)
    e = exciton_energy(10, thin) - 3 * thin.linewidth(10)
    i0 = 1e-9
    slope = R.phase_shift(e, i0, thin) / i0
    k_l = e / HBARC_EV_UM * thin.crystal_length
    assert slope == pytest.approx(k_l * R.n2_point(e, thin), rel=1e-2)


def test_phase_shift_monotone_before_saturation(cfg, sat_mode):
    e = exciton_energy(10, cfg) - 0.5 * cfg.linewidth(10)
    i = np.linspace(0.0, 2.0, 40)
    phi = R.phase_shift(e, i, cfg, sat_mode)
    assert np.all(np.diff(np.abs(phi)) > 0)


def test_phase_shift_continuous_in_intensity(cfg, sat_mode):
    e = exciton_energy(9, cfg) + cfg.linewidth(9)
    i = np.linspace(0.0, 5.0, 2001)
    phi = R.phase_shift(e, i, cfg, sat_mode)
    steps = np.abs(np.diff(phi))
    assert steps.max() < 5 * np.median(steps) + 1e-12


def test_n2_zero_when_chi3_off(cfg):
    grid = SpectralGrid.from_range(2.16, 2.172, 1e-5)
    spec = R.n2_spectrum(grid, cfg.replace(chi3_0=0.0))
    assert np.all(spec.n2 == 0.0)


def test_n2_crosses_zero_at_isolated_resonance(single_line_cfg):
    e_t = exciton_energy(2, single_line_cfg)
    gamma = 1e-4
    grid = SpectralGrid.from_range(e_t - 5 * gamma, e_t + 5 * gamma, gamma / 50)
    n2 = R.n2_point(grid.energies, single_line_cfg)
    sign_changes = np.flatnonzero(np.sign(n2[:-1]) != np.sign(n2[1:]))
    crossings = grid.energies[sign_changes]
    assert len(crossings) >= 1
    assert np.min(np.abs(crossings - e_t)) <= grid.step


def test_kerr_response_shapes(cfg, sat_mode):
    grid = SpectralGrid.from_range(2.1705, 2.1715, 1e-5)
    resp = R.n2_spectrum(grid, cfg, sat_mode, intensities=(0.0, 0.5, 2.0))
    assert resp.phase_shift.shape == (len(grid), 3)
    np.testing.assert_array_equal(resp.phase_shift[:, 0], 0.0)
    assert resp.n2.shape == (len(grid),)
    assert resp.alpha3.shape == (len(grid),)


def test_susceptibility_spectrum_invariants(cfg):
    grid = SpectralGrid.from_range(2.167, 2.172, 2e-6)
    spec = R.susceptibility_spectrum(grid, cfg)
    assert np.all(spec.chi1.imag >= 0)
    assert spec.chi1.shape == (len(grid),)


# ---------------------------------------------------------------------------
# CSV export

def test_spectrum_csv_layout(cfg):
    grid = SpectralGrid.from_range(2.170, 2.1701, 2e-5)
    text = R.render_spectrum_csv(grid, cfg)
    lines = text.splitlines()
    assert lines[0] == ("energy_eV,re_chi1,im_chi1,re_chi3,im_chi3,"
                        "n2_mm2_per_mW,alpha3_per_um")
    rows = list(csv.reader(io.StringIO(text)))
    assert len(rows) == len(grid) + 1
    first = [float(v) for v in rows[1]]
    assert first[0] == grid.energies[0]
    assert first[1] == pytest.approx(complex(R.chi1(grid.energies[0], cfg)).real)


def test_spectrum_csv_deterministic(cfg):
    grid = SpectralGrid.from_range(2.170, 2.1705, 1e-5)
    assert R.render_spectrum_csv(grid, cfg) == R.render_spectrum_csv(grid, cfg)


def test_spectrum_csv_chi3_only_zero(cfg):
    grid = SpectralGrid.from_range(2.170, 2.1701, 2e-5)
    text = R.render_spectrum_csv(grid, cfg.replace(chi3_0=0.0), chi3_only=True)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["energy_eV", "re_chi3", "im_chi3"]
    for row in rows[1:]:
        assert float(row[1]) == 0.0 and float(row[2]) == 0.0


def test_spectrum_csv_rejects_nonfinite(cfg):
    grid = SpectralGrid.from_range(2.170, 2.1701, 2e-5)
    broken = cfg.replace(chi3_0=float("1e308"), delta_lt=1e308)
    with np.errstate(all="ignore"), pytest.raises((NumericsError, OverflowError)):
        R.render_spectrum_csv(grid, broken)
