from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from rhs_wmmse.em_coupling import (
    ArrayGeometry,
    CouplingConfig,
    MediumParams,
    assemble_coupling,
    azimuth_cut,
    build_coupling,
    coupling_fs,
    coupling_strength,
    coupling_wg,
    far_field_pattern,
    green_field,
    green_field_terms,
    wavenumber,
)
from rhs_wmmse.exceptions import InvalidArgumentError, SingularityError

C0 = 2.99792458e8


def test_medium_speed_matches_c0():
    med = MediumParams()
    assert abs(med.speed - med.c0) / med.c0 < 1e-6


def test_medium_rejects_nonpositive():
    with pytest.raises(InvalidArgumentError):
        MediumParams(mu=0.0)


class TestWavenumber:
    def test_definition_inversion(self):
        f = C0 / (2 * np.pi)
        assert_allclose(wavenumber(f), 1.0, rtol=1e-6)

    def test_28ghz(self):
        assert_allclose(wavenumber(28e9), 2 * np.pi * 28e9 / C0, rtol=1e-9)
        assert abs(wavenumber(28e9) - 586.8366) < 1e-3

    def test_linear_in_f(self):
        assert wavenumber(2 * 17e9) == 2 * wavenumber(17e9)

    @pytest.mark.parametrize("f", [0.0, -1.0])
    def test_nonpositive(self, f):
        with pytest.raises(InvalidArgumentError):
            wavenumber(f)


class TestGreenField:
    f = 28e9

    def test_axial(self):
        k = wavenumber(self.f)
        R = 3e-3
        e = np.array([0.0, 0.0, 1.0])
        H = green_field(np.zeros(3), R * e, e, self.f)
        pref = np.exp(-1j * k * R) / (4 * np.pi * R)
        assert_allclose(H, pref * (1 / R**2 - 1j * k / R) * 2 * e, rtol=1e-12)
        rad, _ = green_field_terms(np.zeros(3), R * e, e, self.f)
        assert np.linalg.norm(rad) <= 1e-12 * np.linalg.norm(H)

    def test_broadside(self):
        k = wavenumber(self.f)
        R = 5e-3
        e = np.array([0.0, 0.0, 1.0])
        H = green_field(np.zeros(3), np.array([R, 0, 0]), e, self.f)
        pref = np.exp(-1j * k * R) / (4 * np.pi * R)
        assert_allclose(e @ H, pref * (k**2 - 1 / R**2 + 1j * k / R), rtol=1e-12)

    def test_far_zone_ratio(self):
        k = wavenumber(self.f)
        R = 100.0 / k
        e = np.array([0.0, 1.0, 0.0])
        rad, near = green_field_terms(np.zeros(3), np.array([0, 0, R]), e, self.f)
        ratio = np.linalg.norm(near) / np.linalg.norm(rad)
        assert ratio < 0.011
        # independent magnitude: sqrt(1/(kR)^4 + 1/(kR)^2)
        assert_allclose(ratio, np.sqrt(1e-8 + 1e-4), rtol=1e-12)

    def test_coincident_points(self):
        with pytest.raises(SingularityError):
            green_field(np.ones(3), np.ones(3), np.array([0, 0, 1.0]), self.f)

    def test_transversality_random(self, rng):
        for _ in range(200):
            src, obs = rng.normal(size=3) * 0.01, rng.normal(size=3) * 0.01
            e = rng.normal(size=3)
            e /= np.linalg.norm(e)
            rad, _ = green_field_terms(src, obs, e, self.f)
            R_hat = (obs - src) / np.linalg.norm(obs - src)
            assert abs(rad @ R_hat) <= 1e-12 * np.linalg.norm(rad)


class TestArrayGeometry:
    def test_ula_positions(self):
        g = ArrayGeometry.ula(5, 2e-3)
        assert_allclose(g.element_positions[:, 0], (np.arange(1, 6) - 3) * 2e-3)
        assert_allclose(np.linalg.norm(g.orientation), 1.0, atol=1e-12)

    def test_orientation_normalized(self):
        g = ArrayGeometry.ula(2, 1e-3, orientation=(0, 0, 3.0))
        assert_allclose(g.orientation, [0, 0, 1])

    def test_min_separation(self):
        with pytest.raises(SingularityError):
            ArrayGeometry(np.zeros((2, 3)), np.zeros((1, 3)), 1e-3)


class TestCouplingFS:
    f = 28e9

    def test_single_element(self):
        assert_array_equal(coupling_fs(ArrayGeometry.ula(1, 1e-3), self.f), np.zeros((1, 1)))

    def test_two_elements_broadside(self):
        d = 2.68e-3
        g = ArrayGeometry.ula(2, d)
        Xi = coupling_fs(g, self.f)
        H = green_field(g.element_positions[0], g.element_positions[1], g.orientation, self.f)
        assert_allclose(Xi[1, 0], g.orientation @ H, rtol=1e-12)
        assert Xi[0, 0] == 0 and Xi[1, 1] == 0

    def test_decay_with_distance(self):
        k = wavenumber(self.f)
        d = 0.5 / k  # kd < 1
        Xi = coupling_fs(ArrayGeometry.ula(3, d), self.f)
        assert abs(Xi[2, 0]) < abs(Xi[1, 0])

    def test_symmetric_random_geometry(self, rng):
        pos = rng.uniform(-0.01, 0.01, (7, 3))
        g = ArrayGeometry(pos, np.zeros((1, 3)), 1e-3, np.array([0.3, -0.2, 0.9]))
        Xi = coupling_fs(g, self.f)
        assert np.linalg.norm(Xi - Xi.T) <= 1e-12 * np.linalg.norm(Xi)
        assert_array_equal(np.diag(Xi), 0)

    def test_matches_pointwise_green(self, rng):
        pos = rng.uniform(-0.01, 0.01, (4, 3))
        g = ArrayGeometry(pos, np.zeros((1, 3)), 1e-3, np.array([1.0, 1.0, 0.0]))
        Xi = coupling_fs(g, self.f)
        for a in range(4):
            for b in range(4):
                if a != b:
                    H = green_field(pos[b], pos[a], g.orientation, self.f)
                    assert_allclose(Xi[a, b], g.orientation @ H, rtol=1e-12)


class TestCouplingWG:
    def test_zero_strength(self):
        g = ArrayGeometry.ula(4, 1e-3)
        assert_array_equal(coupling_wg(g, 28e9, CouplingConfig(rho_plus=0, rho_minus=0)), 0)

    def test_unit_formula(self):
        g = ArrayGeometry.ula(2, 1e-3)
        Xi = coupling_wg(g, 28e9, CouplingConfig(alpha_wg=0.0, beta_wg=0.0))
        assert_allclose(Xi, [[0, 1], [1, 0]])

    def test_directional_strengths(self):
        g = ArrayGeometry.ula(3, 1e-3)
        cfg = CouplingConfig(rho_plus=1.0, rho_minus=0.5, alpha_wg=0.15, beta_wg=1.0)
        Xi = coupling_wg(g, 28e9, cfg)
        ref = np.exp(-(0.15 + 1j))
        assert_allclose(Xi[1, 0], ref, rtol=1e-14)
        assert_allclose(Xi[0, 1], 0.5 * ref, rtol=1e-14)
        assert_allclose(Xi[2, 0], np.exp(-(0.15 + 1j) * 2), rtol=1e-14)
        assert_array_equal(np.diag(Xi), 0)

    def test_physical_distance_mode(self):
        d = 2.68e-3
        g = ArrayGeometry.ula(2, d)
        Xi = coupling_wg(g, 28e9, CouplingConfig(distance_mode="physical"))
        assert_allclose(Xi[1, 0], np.exp(-(0.15 + 1j) * d), rtol=1e-14)


class TestAssemble:
    def test_no_targets(self, rng):
        fs = rng.normal(size=(4, 4)) + 0j
        wg = rng.normal(size=(4, 4)) + 0j
        cm = assemble_coupling(fs, wg, CouplingConfig())
        assert_allclose(cm.total[0], fs + wg)

    def test_halving(self):
        fs = np.full((2, 2), 0.1) - 0.1 * np.eye(2)  # sum/N = 0.1
        cm = assemble_coupling(fs, np.zeros((2, 2)), CouplingConfig(target_xi_fs=0.05))
        assert_allclose(cm.fs[0], fs / 2, rtol=1e-14)

    def test_zero_rescale_rejected(self):
        with pytest.raises(InvalidArgumentError):
            assemble_coupling(np.zeros((3, 3)), np.zeros((3, 3)), CouplingConfig(target_xi_fs=0.1))

    def test_default_waveguide_strength(self):
        g = ArrayGeometry.ula(32, 2.68e-3)
        freqs = np.linspace(27.5e9, 28.5e9, 3)
        cm = build_coupling(g, freqs, CouplingConfig(target_xi_wg=0.02, target_xi_fs=0.02))
        assert_allclose(cm.xi_wg, 0.02, rtol=1e-12)
        assert_allclose(coupling_strength(cm.wg), 0.02, rtol=1e-12)
        assert_allclose(cm.total, cm.fs + cm.wg)
        for u in range(3):
            assert_array_equal(np.diag(cm.total[u]), 0)

    def test_scaling_factor_two(self, rng):
        fs = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        wg = np.zeros_like(fs)
        a = assemble_coupling(fs, wg, CouplingConfig(target_xi_fs=0.03))
        b = assemble_coupling(fs, wg, CouplingConfig(target_xi_fs=0.06))
        assert_allclose(b.fs, 2 * a.fs, rtol=1e-14)


class TestFarField:
    f = 28e9

    def test_single_element_flat(self):
        g = ArrayGeometry.ula(1, 1e-3)
        pat = far_field_pattern(np.ones(1), g, self.f, azimuth_cut(5))
        assert_allclose(pat, 0.0, atol=1e-12)

    def test_uniform_broadside(self):
        g = ArrayGeometry.ula(16, 5e-3)
        grid = azimuth_cut(1)
        pat = far_field_pattern(np.ones(16), g, self.f, grid)
        assert np.rad2deg(grid[np.argmax(pat), 1]) == pytest.approx(90.0)
        assert pat.max() == 0.0

    @pytest.mark.parametrize("phi0", [40.0, 70.0, 120.0])
    def test_progressive_phase_steers(self, phi0):
        g = ArrayGeometry.ula(32, 5.35e-3)
        k = wavenumber(self.f)
        x = g.element_positions[:, 0]
        p = np.exp(-1j * k * x * np.cos(np.deg2rad(phi0)))
        grid = azimuth_cut(1)
        pat = far_field_pattern(p, g, self.f, grid)
        # brute-force array factor over the same grid
        phis = grid[:, 1]
        af = np.abs(np.exp(1j * k * np.outer(np.cos(phis), x)) @ p) ** 2
        assert np.argmax(pat) == np.argmax(af)
        assert abs(np.rad2deg(phis[np.argmax(pat)]) - phi0) <= 1.0

    def test_global_phase_invariance(self, rng):
        g = ArrayGeometry.ula(8, 5e-3)
        p = rng.normal(size=8) + 1j * rng.normal(size=8)
        grid = azimuth_cut(2)
        a = far_field_pattern(p, g, self.f, grid)
        b = far_field_pattern(p * np.exp(1j * 0.7), g, self.f, grid)
        assert_allclose(a, b, atol=1e-9)

    def test_zero_moments(self):
        with pytest.raises(InvalidArgumentError):
            far_field_pattern(np.zeros(4), ArrayGeometry.ula(4, 1e-3), self.f, azimuth_cut())
