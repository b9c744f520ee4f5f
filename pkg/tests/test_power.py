import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securewave import power, waveform
from securewave.channel import ChannelRealization
from securewave.power import BisectionConfig

from conftest import random_channel, random_complex
from oracles import eve_ser_loop, grid_oracle, scaled_instance


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [dict(epsilon_e=0.6), dict(delta=0.0), dict(delta=0.5), dict(power_max=0.0), dict(max_iterations=0)]
    )
    def test_invalid(self, kw):
        base = dict(epsilon_e=0.4, power_max=1.0, delta=1e-3)
        base.update(kw)
        with pytest.raises(ValueError):
            BisectionConfig(**base)


class TestEveSinr:
    def test_zero_power(self, rng):
        assert power.eve_sinr(0, 0.0, random_channel(rng, 4), random_complex(rng, 4, 4)) == 0.0

    def test_identity(self):
        ch = ChannelRealization.from_gains(np.ones(3, complex), 1.0)
        assert power.eve_sinr(1, 2.0, ch, np.eye(3)) == pytest.approx(2.0)

    def test_saturation(self, rng):
        M = random_complex(rng, 4, 4)
        e = np.abs(M[2]) ** 2
        limit = e[2] / (e.sum() - e[2])
        assert power.eve_sinr(2, 1e12, random_channel(rng, 4), M) == pytest.approx(limit, rel=1e-6)

    def test_matches_waveform(self, rng):
        ch, M = random_channel(rng, 5), random_complex(rng, 5, 5)
        p = rng.uniform(0, 2, 5)
        ref = waveform.sinr_per_subcarrier(ch, M, p)
        assert np.allclose([power.eve_sinr(k, p[k], ch, M) for k in range(5)], ref, rtol=1e-13)


class TestCheckConstraint:
    def test_zero_power(self, rng):
        cfg = BisectionConfig(0.5, 1.0)
        ok, _ = power.check_constraint(np.zeros(4), random_channel(rng, 4), random_complex(rng, 4, 4), cfg)
        assert ok

    def test_single_violation(self):
        ch = ChannelRealization.from_gains(np.ones(4, complex), 1.0)
        p = np.array([1e-4, 1e-4, 5.0, 1e-4])
        ok, idx = power.check_constraint(p, ch, np.eye(4), BisectionConfig(0.4, 10.0))
        assert not ok and idx == 2

    def test_exhaustive_oracle(self):
        r = np.random.default_rng(4)
        cfg = BisectionConfig(0.3, 1.0, delta=1e-3)
        for _ in range(200):
            ch = random_channel(r, 16, noise=10 ** r.uniform(-2, 1))
            M = random_complex(r, 16, 16)
            p = r.uniform(0, 1, 16)
            ser = eve_ser_loop(p, ch, M)
            ok, idx = power.check_constraint(p, ch, M, cfg)
            assert idx == int(np.argmin(ser))
            assert ok == bool(ser.min() >= cfg.epsilon_e - cfg.delta)


class TestAllocate:
    def test_already_compliant_returns_maxima(self, rng):
        ch = random_channel(rng, 4, noise=1e6)
        M = random_complex(rng, 4, 4)
        cfg = BisectionConfig(0.4, 1.0)
        alloc = power.allocate(ch, ch, M, cfg)
        assert np.array_equal(alloc.p, power.max_powers(M, cfg))
        assert alloc.bisected == () and alloc.converged

    @pytest.mark.parametrize("eps", [0.05, 0.2, 0.4, 0.49])
    @pytest.mark.parametrize("g2, noise", [(1.0, 1.0), (3e-3, 2e-5)])
    def test_single_subcarrier_closed_form(self, eps, g2, noise):
        with mpmath.workdps(30):
            p_star = float(mpmath.erfinv(1 - 2 * mpmath.mpf(eps)) ** 2 * noise / g2)
        ch = ChannelRealization.from_gains([math.sqrt(g2)], noise)
        cfg = BisectionConfig(eps, 10 * p_star, delta=1e-3)
        alloc = power.allocate(ch, ch, np.eye(1), cfg)
        ser = waveform.ser_qpsk(alloc.p[0] * g2 / noise)
        assert alloc.converged
        assert 0 <= ser - eps < cfg.delta
        assert alloc.p[0] <= p_star

    def test_near_half_is_degenerate(self, rng):
        delta = 1e-3
        cfg = BisectionConfig(0.5 - delta / 2, 1.0, delta=delta)
        ch = random_channel(rng, 8, noise=1e-2)
        M = random_complex(rng, 8, 8)
        alloc = power.allocate(ch, ch, M, cfg)
        gamma = waveform.sinr_per_subcarrier(ch, M, alloc.p)
        assert np.all(gamma <= 1e-5)
        assert np.all(alloc.p <= 1e-3 * power.max_powers(M, cfg))

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("seed", [0, 1])
    def test_grid_oracle(self, n, seed):
        r = np.random.default_rng(100 * n + seed)
        ch, M, cfg = scaled_instance(r, n, target_gamma=r.uniform(0.1, 0.6))
        got = power.allocate(ch, ch, M, cfg)
        ref = grid_oracle(ch, M, cfg)
        assert got.converged
        assert np.allclose(got.p, ref, rtol=0.01, atol=0)

    def test_feasibility(self):
        r = np.random.default_rng(8)
        for convention in ("energy", "coherent"):
            for _ in range(300):
                n = int(r.integers(2, 17))
                M = random_complex(r, n, n) * 10 ** r.uniform(-2, 2)
                cfg = BisectionConfig(r.uniform(0.05, 0.5), 10 ** r.uniform(-3, 1), power_convention=convention)
                ch = random_channel(r, n, noise=10 ** r.uniform(-4, 0))
                alloc = power.allocate(ch, ch, M, cfg)
                budget = waveform.row_budget(M, convention)
                assert np.all(alloc.p * budget <= cfg.power_max * (1 + 1e-9))
                assert np.all(alloc.p >= 0)
                if alloc.converged:
                    assert power.check_constraint(alloc.p, ch, M, cfg)[0]

    def test_zero_rows_get_zero_power(self, rng):
        M = random_complex(rng, 3, 3)
        M[1] = 0
        alloc = power.allocate(random_channel(rng, 3), random_channel(rng, 3), M, BisectionConfig(0.4, 1.0))
        assert alloc.p[1] == 0

    def test_monotone_in_epsilon(self):
        r = np.random.default_rng(12)
        ch, M, _ = scaled_instance(r, 4, 0.5)
        ps = [power.allocate(ch, ch, M, BisectionConfig(e, 1.0, delta=1e-3)).p for e in (0.1, 0.2, 0.3, 0.4, 0.45)]
        assert np.all(np.diff(np.array(ps), axis=0) <= 0)

    def test_iteration_cap_reports_nonconvergence(self, rng):
        ch, M, _ = scaled_instance(rng, 4, 0.5)
        cfg = BisectionConfig(0.4, 1.0, delta=1e-6, max_iterations=2)
        alloc = power.allocate(ch, ch, M, cfg)
        assert not alloc.converged
        ser = eve_ser_loop(alloc.p, ch, M)
        assert np.all((ser >= cfg.epsilon_e - cfg.delta) | (alloc.p == 0))

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            power.allocate(random_channel(rng, 4), random_channel(rng, 4), np.eye(3), BisectionConfig(0.4, 1.0))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.49), st.floats(-3, 1))
    def test_band_after_convergence(self, seed, eps, log_ps):
        r = np.random.default_rng(seed)
        n = 6
        ch, M = random_channel(r, n, noise=0.1), random_complex(r, n, n)
        cfg = BisectionConfig(eps, 10.0**log_ps, delta=1e-3)
        alloc = power.allocate(ch, ch, M, cfg)
        ser = eve_ser_loop(alloc.p, ch, M)
        if alloc.converged:
            assert ser.min() >= eps - cfg.delta
            for k in alloc.bisected:
                assert eps - cfg.delta <= ser[k] <= eps + cfg.delta
