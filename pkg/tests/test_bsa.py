import numpy as np
import pytest

from securewave import bsa, cmlp, power, waveform
from securewave.harness.config import ScenarioConfig
from securewave.harness.scenario import draw_for_index

SCENARIO = ScenarioConfig(n_subcarriers=16, power_max_w=0.1, epsilon_e=0.4)


@pytest.fixture(scope="module")
def draw():
    return draw_for_index(SCENARIO, 0)


@pytest.fixture(scope="module")
def tcfg():
    return SCENARIO.train_config()


@pytest.fixture(scope="module")
def trained(draw, tcfg):
    return bsa.train(draw.ch_bob, draw.ch_eve, tcfg, seed=0)


def identity_rate(draw, tcfg):
    n = draw.ch_bob.n
    alloc = power.allocate(draw.ch_bob, draw.ch_eve, np.eye(n), tcfg.bisection)
    return waveform.evaluate_link(draw.ch_bob, draw.ch_eve, np.eye(n), alloc.p).sum_secrecy_rate


class TestTrain:
    def test_single_epoch(self, draw, tcfg):
        res = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=1, seed=1)
        assert len(res.trace) == 1
        M = bsa.infer(res.params, draw.ch_bob, draw.ch_eve, tcfg).M
        assert np.all(res.allocation.p * np.sum(np.abs(M) ** 2, axis=1) <= tcfg.power_max * (1 + 1e-9))
        assert 0 <= res.trace[0].min_eve_ser <= 0.5

    def test_first_loss_uses_fresh_allocation(self, draw, tcfg):
        params = cmlp.init_params(16, np.random.default_rng(5))
        M = cmlp.forward(params.copy(), draw.ch_bob.freq_gains, draw.ch_eve.freq_gains, np.full(16, tcfg.power_max))
        alloc = power.allocate(draw.ch_bob, draw.ch_eve, M, tcfg.bisection)
        res = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=1, params=params)
        assert res.trace[0].loss == pytest.approx(cmlp.loss(M, draw.ch_bob, alloc.p), rel=1e-12)

    def test_deterministic(self, draw, tcfg):
        a = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=30, seed=3)
        b = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=30, seed=3)
        assert a.trace == b.trace
        assert all(np.array_equal(x, y) for x, y in zip(a.params.arrays(), b.params.arrays()))

    def test_trace_prefix_stable(self, draw, tcfg):
        short = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=5, seed=4).trace
        long = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=9, seed=4).trace
        assert long[:5] == short

    def test_invalid_epochs(self, draw, tcfg):
        with pytest.raises(ValueError):
            bsa.train(draw.ch_bob, draw.ch_eve, tcfg, epochs=0)

    def test_early_stop_shortens_run(self, trained, tcfg):
        assert len(trained.trace) < tcfg.epochs

    def test_reaches_identity_coding_rate(self, draw, tcfg, trained):
        # with a linear receiver, interference-free coding at the Eve-limited power is the optimum
        assert trained.trace[-1].sum_secrecy_rate == pytest.approx(identity_rate(draw, tcfg), rel=1e-2)

    @pytest.mark.xfail(
        strict=True,
        reason="identity coding already maximises the rate in this model; training only approaches it from below",
    )
    def test_not_below_identity_coding(self, draw, tcfg):
        res = bsa.train(draw.ch_bob, draw.ch_eve, SCENARIO.replace(early_stop=False).train_config(), seed=0)
        assert res.trace[-1].sum_secrecy_rate >= identity_rate(draw, tcfg)


class TestInfer:
    def test_pure(self, trained, draw, tcfg):
        a = bsa.infer(trained.params, draw.ch_bob, draw.ch_eve, tcfg)
        b = bsa.infer(trained.params, draw.ch_bob, draw.ch_eve, tcfg)
        assert np.array_equal(a.M, b.M) and np.array_equal(a.allocation.p, b.allocation.p)

    def test_dimension_mismatch(self, trained, tcfg):
        other = draw_for_index(SCENARIO.replace(n_subcarriers=8), 0)
        with pytest.raises(ValueError):
            bsa.infer(trained.params, other.ch_bob, other.ch_eve, tcfg)

    def test_audit_on_held_out_draws(self, trained, tcfg):
        held_out = SCENARIO.replace(seed=99)
        audited = 0
        for i in range(100):
            d = draw_for_index(held_out, i)
            res = bsa.infer(trained.params, d.ch_bob, d.ch_eve, tcfg)
            budget = np.sum(np.abs(res.M) ** 2, axis=1)
            assert np.all(res.allocation.p * budget <= tcfg.power_max * (1 + 1e-9))
            if res.allocation.converged:
                audited += 1
                assert res.metrics.min_eve_ser >= tcfg.epsilon_e - tcfg.delta
        assert audited >= 95

    def test_secrecy_grows_with_budget(self, trained):
        # one network, inference on 100 draws at each of five budgets
        rates = []
        for ps in (1e-3, 10**-2.5, 1e-2, 10**-1.5, 1e-1):
            cfg = SCENARIO.replace(power_max_w=ps)
            tc = cfg.train_config()
            rates.append(np.mean([
                bsa.infer(trained.params, d.ch_bob, d.ch_eve, tc).metrics.sum_secrecy_rate
                for d in (draw_for_index(cfg, i) for i in range(100))
            ]))
        assert np.all(np.diff(rates) >= 0)
