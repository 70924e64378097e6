import math

import numpy as np
import pytest

from oracles import delta_max_quadrature
from swipt import (FadingEnsemble, LinkParams, Metrics, ModePolicy, PowerBudget,
                   energy_at, evaluate, outage_indicator, rate_at)


def test_rate_at_examples():
    sigma2 = 0.5
    p = sigma2 * (math.e - 1.0)  # SNR = e - 1 exactly
    assert rate_at((1.0, 0.0), p, sigma2) == pytest.approx(1.0, abs=1e-12)
    assert rate_at((3.7, 1.2), 0.0, sigma2) == 0.0
    assert rate_at((1.0, 3.0), 5.0, 0.5) == pytest.approx(math.log(1 + 5 / 3.5), abs=1e-12)


def test_energy_at_examples():
    assert energy_at((1.0, 3.0), 5.0) == pytest.approx(8.0)
    assert energy_at((2.0, 0.0), 0.0) == 0.0
    assert energy_at((1.0, 3.0), 5.0, alpha=0.5) == pytest.approx(4.0)


def test_outage_indicator_examples():
    assert outage_indicator((1.0, 3.0), 5.0, r0=0.3, sigma2=0.5) == 1
    assert outage_indicator((1.0, 3.0), 0.0, r0=0.3, sigma2=0.5) == 0
    # boundary sits exactly on the target rate: inclusive
    r0, sigma2, h, intf = 0.3, 0.5, 1.0, 3.0
    p = math.expm1(r0) * (intf + sigma2) / h
    assert outage_indicator((h, intf), p, r0=r0, sigma2=sigma2) == 1


def test_evaluate_all_harvest(big_ensemble, fig_params):
    policy = ModePolicy.constant(len(big_ensemble), rho=0.0, p=5.0)
    m = evaluate(big_ensemble, policy, None, fig_params)
    assert m.delta == 0.0 and m.rate == 0.0
    assert m.q_avg == pytest.approx(8.0, rel=0.02)
    assert m.p_used == pytest.approx(5.0, abs=1e-9)


def test_evaluate_all_decode_matches_quadrature(big_ensemble, fig_params):
    policy = ModePolicy.constant(len(big_ensemble), rho=1.0, p=5.0)
    m = evaluate(big_ensemble, policy, None, fig_params)
    oracle = delta_max_quadrature(5.0, 0.3, 0.5)
    assert oracle == pytest.approx(0.798, abs=5e-4)
    assert m.delta == pytest.approx(oracle, rel=0.01)
    assert m.q_avg == 0.0


def test_evaluate_fractional_state():
    ens = FadingEnsemble.from_states([(1.0, 3.0, 1.0)])
    params = LinkParams(sigma2=0.5, r0=0.3)
    m = evaluate(ens, ModePolicy(rho=np.array([0.5]), p=np.array([5.0])), None, params)
    assert m.q_avg == pytest.approx(4.0)
    assert m.delta == pytest.approx(0.5)


def test_evaluate_q_net_invariant():
    ens = FadingEnsemble.from_states([(1.0, 3.0, 0.5), (0.2, 1.0, 0.5)])
    params = LinkParams(sigma2=0.5, r0=0.3, p_i=0.8, q0=0.1)
    policy = ModePolicy(rho=np.array([1.0, 0.25]), p=np.array([5.0, 5.0]))
    m = evaluate(ens, policy, None, params)
    e_rho = float(np.sum(ens.w * policy.rho))
    assert m.q_net == pytest.approx(m.q_avg - params.p_i * e_rho - params.q0, abs=1e-15)


def test_evaluate_rejects_mismatched_policy(fig_params):
    ens = FadingEnsemble.from_states([(1.0, 0.0, 1.0)])
    with pytest.raises(ValueError):
        evaluate(ens, ModePolicy.constant(3, 1.0, 1.0), None, fig_params)
    with pytest.raises(ValueError):
        evaluate(ens, ModePolicy.constant(1, 1.0, 25.0), PowerBudget(5.0, 20.0), fig_params)


def test_energy_linear_in_alpha_and_power_ignores_rho():
    rng = np.random.default_rng(11)
    ens = FadingEnsemble(h=rng.exponential(1.0, 64), intf=rng.exponential(3.0, 64),
                         w=np.full(64, 1 / 64))
    rho = rng.random(64)
    policy = ModePolicy(rho=rho, p=np.full(64, 5.0))
    m1 = evaluate(ens, policy, None, LinkParams(sigma2=0.5, r0=0.3, alpha=1.0))
    m2 = evaluate(ens, policy, None, LinkParams(sigma2=0.5, r0=0.3, alpha=0.25))
    assert m2.q_avg == pytest.approx(0.25 * m1.q_avg, rel=1e-12)
    other = evaluate(ens, ModePolicy(rho=np.zeros(64), p=np.full(64, 5.0)), None,
                     LinkParams(sigma2=0.5, r0=0.3))
    assert other.p_used == pytest.approx(m1.p_used, abs=1e-15)


def test_raising_rho_moves_metrics_monotonically():
    ens = FadingEnsemble.from_states([(2.0, 1.0, 0.4), (0.8, 2.0, 0.6)])
    params = LinkParams(sigma2=0.5, r0=0.3)
    base = ModePolicy(rho=np.array([0.3, 0.7]), p=np.array([5.0, 5.0]))
    bumped = ModePolicy(rho=np.array([0.9, 0.7]), p=np.array([5.0, 5.0]))
    m0, m1 = (evaluate(ens, pol, None, params) for pol in (base, bumped))
    assert m1.delta >= m0.delta and m1.rate >= m0.rate
    assert m1.q_avg <= m0.q_avg


def test_evaluate_linear_in_measure():
    rng = np.random.default_rng(4)
    a = FadingEnsemble(h=rng.exponential(1, 16), intf=rng.exponential(3, 16),
                       w=np.full(16, 1 / 16))
    b = FadingEnsemble(h=rng.exponential(1, 16), intf=rng.exponential(3, 16),
                       w=np.full(16, 1 / 16))
    both = FadingEnsemble(h=np.concatenate([a.h, b.h]),
                          intf=np.concatenate([a.intf, b.intf]),
                          w=np.concatenate([a.w, b.w]) / 2.0)
    params = LinkParams(sigma2=0.5, r0=0.3)
    rho = rng.random(16)
    pol = ModePolicy(rho=rho, p=np.full(16, 5.0))
    pol2 = ModePolicy(rho=np.concatenate([rho, rho]), p=np.full(32, 5.0))
    ma, mb = evaluate(a, pol, None, params), evaluate(b, pol, None, params)
    mc = evaluate(both, pol2, None, params)
    for field in ("delta", "rate", "q_avg", "p_used", "q_net"):
        avg = 0.5 * (getattr(ma, field) + getattr(mb, field))
        assert getattr(mc, field) == pytest.approx(avg, abs=1e-12)


def test_mode_policy_validation():
    with pytest.raises(ValueError):
        ModePolicy(rho=np.array([1.5]), p=np.array([1.0]))
    with pytest.raises(ValueError):
        ModePolicy(rho=np.array([0.5]), p=np.array([-1.0]))
    pol = ModePolicy(rho=np.array([0.0, 0.5, 1.0]), p=np.zeros(3))
    assert pol.fractional_states().tolist() == [1]
