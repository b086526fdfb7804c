from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import crandn
from rhs_wmmse.baselines import SCHEMES, build_scenario, run_scheme, uniform_hologram, zf_precoders
from rhs_wmmse.config import SystemConfig, build_system
from rhs_wmmse.exceptions import InvalidArgumentError, RankDeficiencyError
from rhs_wmmse.rhs_operator import coupled_operator, rhs_power
from rhs_wmmse.wmmse import effective_channels, objectives, sinr


@pytest.fixture(scope="module")
def default_system():
    return build_system(SystemConfig())


class TestZF:
    def test_single_user(self, rng):
        Hbar = crandn(rng, 2, 1, 4)
        pre = zf_precoders(Hbar, 4.0)
        for u in range(2):
            direction = Hbar[u, 0].conj() / np.linalg.norm(Hbar[u, 0])
            assert_allclose(pre.V[u, :, 0], direction * np.sqrt(2.0), rtol=1e-12)

    def test_orthogonal_rows(self):
        Hbar = np.eye(3, dtype=complex)[None] * 2.0
        pre = zf_precoders(Hbar, 3.0)
        S = Hbar[0] @ pre.V[0]
        assert_array_equal(S - np.diag(np.diag(S)), 0)
        assert_allclose(pre.V[0], np.eye(3), rtol=1e-15)

    def test_default_leakage_and_power(self, default_system):
        op = coupled_operator(default_system.m_hdma, default_system.coupling.total, default_system.F)
        Hbar = effective_channels(default_system.channels.h, op.M)
        pre = zf_precoders(Hbar, 10.0)
        S = np.abs(Hbar @ pre.V)
        diag = np.diagonal(S, axis1=1, axis2=2)
        off = S / diag[:, :, None]
        K = S.shape[1]
        off[:, np.arange(K), np.arange(K)] = 0
        assert off.max() <= 1e-8
        assert pre.total_power == pytest.approx(10.0, rel=1e-9)
        assert_allclose(np.sum(np.abs(pre.V) ** 2, axis=1), 10.0 / 32, rtol=1e-9)

    def test_rank_deficient(self, rng):
        row = crandn(rng, 3)
        with pytest.raises(RankDeficiencyError):
            zf_precoders(np.stack([row, 2 * row])[None], 1.0)
        with pytest.raises(RankDeficiencyError):
            zf_precoders(crandn(rng, 1, 3, 2), 1.0)


class TestUniform:
    @pytest.mark.parametrize("level", [0.0, 0.5, 1.0])
    def test_levels(self, level):
        m = uniform_hologram(7, level).m
        assert_array_equal(m, level)
        assert m.mean() == level

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            uniform_hologram(3, 1.5)


class TestRunScheme:
    def test_uniform_zf_closed_form(self):
        cfg = SystemConfig(xi_fs=0.0, xi_wg=0.0, sigma2=1e-9)
        system = build_system(cfg)
        metrics, _, _, pre = run_scheme("Uniform+ZF", system)
        M = 0.5 * system.F  # uncoupled uniform hologram
        Hbar = effective_channels(system.channels.h, M)
        d = np.diagonal(Hbar @ pre.V, axis1=1, axis2=2)
        p = cfg.P_BS / (cfg.U * cfg.K)
        # diagonalized channel: effective gain of unit-direction column
        gain = np.abs(d) ** 2 / p
        ref = system.plan.B_g * np.sum(np.log2(1 + p * gain / cfg.sigma2))
        assert metrics.sum_rate_bps == pytest.approx(ref, rel=1e-9)

    def test_zf_trace_constant(self, default_system):
        _, trace, _, _ = run_scheme("Holo+ZF", default_system)
        rates = trace.column("sum_rate_bps")
        assert len(rates) == 101
        assert np.all(rates == rates[0])

    def test_zero_coupling_ca_equals_cu(self):
        system = build_system(SystemConfig(xi_fs=0.0, xi_wg=0.0, sigma2=1e-9))
        a = run_scheme("CA-Joint", system)
        b = run_scheme("CU-Joint", system)
        for name in ("sum_rate_bps", "J", "rhs_power", "lam", "step_norm"):
            assert_array_equal(a[1].column(name), b[1].column(name))
        assert_array_equal(a[2], b[2])

    def test_cu_joint_evaluated_under_true_coupling(self, default_system):
        sc = build_scenario(SCHEMES["CU-Joint"], default_system)
        assert not np.any(sc.Xi)
        assert sc.eval_coupling is default_system.coupling.total
        metrics, _, m, pre = run_scheme("CU-Joint", default_system)
        op = coupled_operator(m, default_system.coupling.total, default_system.F)
        gamma = sinr(effective_channels(default_system.channels.h, op.M), pre.V,
                     default_system.channels.sigma2)
        rate, J = objectives(gamma, default_system.plan.B_g)
        assert metrics.sum_rate_bps == pytest.approx(rate, rel=1e-12)
        assert metrics.rhs_power == pytest.approx(rhs_power(op.M, pre.V), rel=1e-12)

    @pytest.mark.parametrize("tag", sorted(SCHEMES))
    def test_all_schemes_report_true_power(self, default_system, tag):
        metrics, _, m, pre = run_scheme(tag, default_system)
        op = coupled_operator(m, default_system.coupling.total, default_system.F)
        assert metrics.rhs_power == pytest.approx(rhs_power(op.M, pre.V), rel=1e-12)

    def test_unknown(self, default_system):
        with pytest.raises(InvalidArgumentError):
            run_scheme("MRT", default_system)
