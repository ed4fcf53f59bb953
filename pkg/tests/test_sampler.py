import math

import numpy as np
import pytest

from profsampler.cox import CoxProfile
from profsampler.sampler import (Chain, ChainConfig, Prior, TooFewDrawsError, chain_kappa,
                                 chain_quantile, log_posterior, run_chain, summarize)
from profsampler.simulate import CoxSimConfig, simulate_cox


def std_normal(x):
    return -0.5 * x * x


@pytest.fixture(scope="module")
def long_normal_chain():
    return run_chain(std_normal, ChainConfig(length=51_000, burn_in=1000, seed=17))


def make_chain(draws):
    draws = np.asarray(draws, dtype=float)
    return Chain(draws, 0.3, 1.0, 0, 0, draws.size)


def test_standard_normal_moments(long_normal_chain):
    s = summarize(long_normal_chain, n=1)
    assert len(long_normal_chain) == 50_000
    assert abs(s.mean) < 0.02
    assert abs(s.variance - 1.0) < 0.05
    assert abs(s.quantile(0.975) - 1.959964) < 0.03
    assert 0.2 <= long_normal_chain.accept_rate <= 0.4


def test_same_seed_same_draws():
    cfg = ChainConfig(length=2000, burn_in=500, seed=99)
    a, b = run_chain(std_normal, cfg), run_chain(std_normal, cfg)
    np.testing.assert_array_equal(a.draws, b.draws)
    assert a.accept_rate == b.accept_rate
    c = run_chain(std_normal, ChainConfig(length=2000, burn_in=500, seed=100))
    assert not np.array_equal(a.draws, c.draws)


def test_shift_equivariance():
    cfg = ChainConfig(length=3000, burn_in=1000, seed=5, proposal_sd=1.7)
    a = run_chain(std_normal, cfg)
    b = run_chain(lambda x: std_normal(x - 10.0), ChainConfig(
        length=3000, burn_in=1000, seed=5, proposal_sd=1.7, init=10.0))
    np.testing.assert_allclose(b.draws - 10.0, a.draws, atol=1e-12)


def test_cox_profile_acceptance():
    d = simulate_cox(CoxSimConfig(n=100, censor_horizon=3.0, seed=12))
    p = CoxProfile(d)
    chain = run_chain(p.log_profile_lik, ChainConfig(init=p.mle(), seed=3))
    assert 0.2 <= chain.accept_rate <= 0.4
    assert len(chain) == 4000
    assert not chain.warnings


def test_thinning_length():
    c = run_chain(std_normal, ChainConfig(length=5000, burn_in=1000, thin=7, seed=1))
    assert len(c) == (5000 - 1000) // 7


def test_constant_chain_summary():
    s = summarize(make_chain(np.full(200, 3.0)), n=50)
    assert s.variance == 0.0
    assert s.info_from_variance == math.inf
    assert s.quantile(0.025) == s.quantile(0.975) == 3.0


def test_median_of_four():
    draws = np.tile([1.0, 2.0, 3.0, 4.0], 25)
    assert summarize(make_chain(draws), n=1).median == 2.5
    assert chain_quantile(make_chain([1.0, 2.0, 3.0, 4.0]), 0.5) == 2.5


def test_quantile_interpolation():
    c = make_chain([4.0, 1.0, 3.0, 2.0])
    # h = 3 * 0.1 = 0.3 -> 1 + 0.3 * (2 - 1)
    assert chain_quantile(c, 0.1) == pytest.approx(1.3, abs=1e-15)


def test_quantiles_monotone():
    rng = np.random.default_rng(0)
    c = make_chain(rng.standard_t(3, size=1000))
    qs = [chain_quantile(c, a) for a in np.linspace(0.01, 0.99, 99)]
    assert all(a <= b for a, b in zip(qs, qs[1:]))


def test_kappa():
    c = make_chain(np.linspace(-1.0, 1.0, 101))
    assert chain_kappa(c, 0.5, 0.25, 16) == pytest.approx(4 * (0.0 - 0.25), abs=1e-12)


def test_too_few_draws():
    with pytest.raises(TooFewDrawsError):
        summarize(make_chain(np.zeros(99)), n=10)


def test_prior_parse_and_density():
    assert Prior.parse("flat") == Prior()
    p = Prior.parse("normal:1:2")
    assert (p.mean, p.sd) == (1.0, 2.0)
    assert p.log_density(1.0) - p.log_density(3.0) == pytest.approx(0.5, abs=1e-15)
    assert Prior.parse(str(p)) == p
    for bad in ("normal:1", "normal:0:-1", "cauchy", "normal:a:1"):
        with pytest.raises(ValueError):
            Prior.parse(bad)


def test_log_posterior_adds_prior():
    f = log_posterior(std_normal, Prior("normal", 0.0, 1.0))
    assert f(1.0) - f(0.0) == pytest.approx(-1.0, abs=1e-15)
    assert log_posterior(std_normal, Prior()) is std_normal


def test_nonfinite_start_rejected():
    with pytest.raises(ValueError):
        run_chain(lambda x: -math.inf, ChainConfig(length=10, burn_in=0))


@pytest.mark.parametrize("kw", [dict(length=0), dict(length=10, burn_in=10), dict(thin=0),
                                dict(proposal_sd=-1.0), dict(target_accept=(0.5, 0.2))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ChainConfig(**kw)


def test_low_acceptance_warns():
    with pytest.warns(RuntimeWarning, match="acceptance rate"):
        c = run_chain(std_normal, ChainConfig(length=1000, burn_in=100, proposal_sd=500.0))
    assert c.warnings


def test_csv_export(tmp_path):
    c = run_chain(std_normal, ChainConfig(length=300, burn_in=100, seed=2))
    path = tmp_path / "draws.csv"
    c.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta"
    np.testing.assert_array_equal(np.array(lines[1:], dtype=float), c.draws)


def test_constant_offset_leaves_draws_unchanged():
    cfg = ChainConfig(length=4000, burn_in=1000, seed=21, proposal_sd=2.5)
    a = run_chain(std_normal, cfg)
    b = run_chain(lambda x: std_normal(x) + 1024.0, cfg)
    np.testing.assert_array_equal(a.draws, b.draws)
