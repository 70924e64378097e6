import math

import numpy as np
import pytest

from conftest import random_ensemble
from oracles import (csit_delta_max_beta_bisection, csit_peak_fill_energy,
                     delta_max_quadrature, p1_greedy_delta, qmin_quadrature)
from swipt import (DegenerateCaseError, DistributionSpec, FadingEnsemble,
                   LinkParams, PowerBudget, db_to_linear, oe_boundary_csit,
                   oe_boundary_no_csit, oe_mode_thresholds, oe_rule_csit,
                   oe_rule_no_csit, oe_vertices_csit, oe_vertices_no_csit,
                   qmin_closed_form, sample_ensemble)
from swipt.outage_energy import csit_inversion_optimum, oe_subproblem_csit

PARAMS = LinkParams(sigma2=0.5, r0=0.3)


class TestRuleNoCsit:
    def test_hand_examples(self):
        rho, diag = oe_rule_no_csit((1.0, 3.0), lam=0.1, P=5.0, params=PARAMS)
        assert rho == 1
        assert diag.sinr_margin == pytest.approx(1 / 3.5 - math.expm1(0.3) / 5, abs=1e-12)
        assert diag.value_margin == pytest.approx(1 - 0.8, abs=1e-12)
        rho, diag = oe_rule_no_csit((1.0, 3.0), lam=0.2, P=5.0, params=PARAMS)
        assert rho == 0 and diag.value_margin <= 0

    def test_large_multiplier_empties_decode_region(self):
        lam = 1.0 / (math.expm1(PARAMS.r0) * PARAMS.sigma2)
        rng = np.random.default_rng(0)
        for h, i in zip(rng.exponential(1.0, 200), rng.exponential(3.0, 200)):
            rho, _ = oe_rule_no_csit((h, i), lam, 5.0, PARAMS)
            assert rho == 0

    def test_decode_set_is_interval_without_interference(self):
        # no interference: decode region is [g*sigma2/P, 1/(lam*P)]
        lam, P = 0.08, 5.0
        g = math.expm1(PARAMS.r0)
        lo, hi = g * PARAMS.sigma2 / P, 1.0 / (lam * P)
        for h in np.linspace(1e-3, 4.0, 400):
            rho, _ = oe_rule_no_csit((h, 0.0), lam, P, PARAMS)
            inside = lo < h < hi
            assert rho == int(inside)


class TestBoundaryNoCsit:
    def test_flat_segment_below_qmin(self):
        rng = np.random.default_rng(1)
        ens = random_ensemble(rng, 200)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        for q in (0.0, 0.5 * vert.q_min, vert.q_min):
            sol = oe_boundary_no_csit(ens, 5.0, PARAMS, q)
            assert sol.objective == pytest.approx(vert.obj_max, abs=1e-12)

    def test_saturated_target_is_all_harvest(self):
        rng = np.random.default_rng(2)
        ens = random_ensemble(rng, 50)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        sol = oe_boundary_no_csit(ens, 5.0, PARAMS, vert.q_max)
        assert sol.objective == 0.0
        assert sol.metrics.q_avg == pytest.approx(vert.q_max, rel=1e-12)

    def test_interior_matches_greedy_oracle(self):
        rng = np.random.default_rng(3)
        ens = random_ensemble(rng, 12)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        for frac in np.linspace(0.1, 0.95, 9):
            q = vert.q_min + frac * (vert.q_max - vert.q_min)
            sol = oe_boundary_no_csit(ens, 5.0, PARAMS, q)
            assert sol.objective == pytest.approx(
                p1_greedy_delta(ens, 5.0, PARAMS, q), abs=1e-9)

    def test_harvest_set_takes_largest_received_power(self):
        rng = np.random.default_rng(4)
        ens = random_ensemble(rng, 40)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        sol = oe_boundary_no_csit(ens, 5.0, PARAMS, 0.6 * vert.q_max)
        e = ens.h * 5.0 + ens.intf
        capable = np.log1p(ens.h * 5.0 / (ens.intf + 0.5)) >= PARAMS.r0
        eh_capable = capable & (sol.policy.rho < 0.5)
        id_states = sol.policy.rho > 0.5
        if np.any(eh_capable) and np.any(id_states):
            assert e[eh_capable].min() >= e[id_states].max() - 1e-9

    def test_boundary_curve_monotone_and_concave(self):
        rng = np.random.default_rng(5)
        ens = random_ensemble(rng, 300)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        grid = np.linspace(vert.q_min, vert.q_max, 21)
        deltas = [oe_boundary_no_csit(ens, 5.0, PARAMS, q).objective for q in grid]
        assert all(b <= a + 1e-12 for a, b in zip(deltas, deltas[1:]))
        for i in range(1, len(deltas) - 1):
            assert deltas[i] >= 0.5 * (deltas[i - 1] + deltas[i + 1]) - 1e-6


class TestRuleCsit:
    def test_zero_gain_harvests_interference_only(self):
        budget = PowerBudget(5.0, 20.0)
        rho, p = oe_rule_csit((0.0, 2.0), lam=0.3, beta=0.1, budget=budget, params=PARAMS)
        assert (rho, p) == (0, 0.0)

    def test_flagged_tie_between_modes(self):
        # constructed so decoding value 1 equals harvesting value lam*h*p_peak
        budget = PowerBudget(5.0, 20.0)
        ens = FadingEnsemble.from_states([(1.0, 0.0, 1.0)])
        br = oe_subproblem_csit(budget, PARAMS)(0.05, 0.0, ens)
        assert br.lag_id[0] == pytest.approx(1.0)
        assert br.lag_eh[0] == pytest.approx(1.0)
        _, tie = br.decide()
        assert tie[0]
        rho, p = oe_rule_csit((1.0, 0.0), 0.05, 0.0, budget, PARAMS)
        assert rho == 0 and p == 20.0  # ties resolve to harvesting

    def test_strong_channel_prefers_harvesting(self):
        budget = PowerBudget(5.0, 20.0)
        rho, p = oe_rule_csit((50.0, 0.0), lam=0.05, beta=0.02, budget=budget,
                              params=PARAMS)
        assert rho == 0 and p == budget.p_peak

    def test_inversion_power_served(self):
        budget = PowerBudget(5.0, 20.0)
        rho, p = oe_rule_csit((1.0, 0.0), lam=0.01, beta=0.05, budget=budget,
                              params=PARAMS)
        assert rho == 1
        assert p == pytest.approx(math.expm1(0.3) * 0.5, abs=1e-12)


class TestModeThresholds:
    BUDGET = PowerBudget(5.0, 20.0)

    def test_zero_beta_reduces_to_inverse(self):
        th = oe_mode_thresholds(lam=0.05, beta=0.0, budget=self.BUDGET, params=PARAMS)
        assert th.h1 == pytest.approx(math.expm1(0.3) / 20.0)
        assert th.h2 == 0.0
        assert th.h3 == pytest.approx(1.0 / (0.05 * 20.0))

    def test_hand_quadratic(self):
        th = oe_mode_thresholds(lam=0.05, beta=0.04, budget=self.BUDGET, params=PARAMS)
        # h^2 - 1.8 h + 0.0069972 = 0, largest root
        expected = (1.8 + math.sqrt(1.8 ** 2 - 4 * 0.04 * math.expm1(0.3) * 0.5)) / 2
        assert th.h3 == pytest.approx(expected, rel=1e-12)
        assert th.h3 == pytest.approx(1.7961, abs=2e-4)

    def test_large_lambda_sends_everything_to_harvest(self):
        last = math.inf
        for lam in (0.1, 1.0, 10.0, 100.0):
            th = oe_mode_thresholds(lam, 0.0, self.BUDGET, PARAMS)
            assert th.h3 == pytest.approx(1.0 / (lam * 20.0), rel=1e-12)
            assert th.h3 <= last
            last = th.h3
        assert last < 1e-3

    def test_complex_roots_raise(self):
        with pytest.raises(DegenerateCaseError):
            oe_mode_thresholds(lam=100.0, beta=1.0, budget=PowerBudget(1.0, 1.0),
                               params=PARAMS)

    def test_partition_matches_per_state_rule(self):
        # converged duals on an interference-free ensemble, h1 >= h2 regime.
        # Decoding happens exactly on [h1, h3]; the transmitter is silent
        # below h2 and at peak above h3. On [h2, h1) the peak-power rule
        # still transmits for harvesting (its value (lam*h-beta)*p_peak is
        # positive there), so that band belongs to EH, not to "off".
        rng = np.random.default_rng(5)
        n = 40
        ens = FadingEnsemble(h=rng.exponential(1.0, n), intf=np.zeros(n),
                             w=np.full(n, 1.0 / n))
        budget = PowerBudget(2.0, 20.0)
        vert = oe_vertices_csit(ens, budget, PARAMS)
        sol = oe_boundary_csit(ens, budget, PARAMS, 0.5 * vert.q_max)
        th = oe_mode_thresholds(sol.lam, sol.beta, budget, PARAMS)
        assert th.h1 >= th.h2, "instance must sit in the analyzed regime"
        assert th.h3 >= th.h1
        for h in ens.h:
            rho, p = oe_rule_csit((h, 0.0), sol.lam, sol.beta, budget, PARAMS)
            if th.h1 <= h <= th.h3:
                assert rho == 1
            else:
                assert rho == 0
                assert p == (budget.p_peak if h >= th.h2 else 0.0)


class TestVertices:
    def test_no_csit_fig_setup(self, big_ensemble):
        vert = oe_vertices_no_csit(big_ensemble, 5.0, PARAMS)
        assert vert.q_max == pytest.approx(8.0, rel=0.02)
        assert vert.obj_max == pytest.approx(delta_max_quadrature(5.0, 0.3, 0.5), rel=0.01)
        assert vert.q_min == pytest.approx(qmin_quadrature(5.0, 0.3, 0.5), rel=0.015)

    def test_qmin_vanishes_at_huge_power_without_interference(self):
        rng = np.random.default_rng(6)
        n = 500
        ens = FadingEnsemble(h=rng.exponential(1.0, n), intf=np.zeros(n),
                             w=np.full(n, 1.0 / n))
        vert = oe_vertices_no_csit(ens, 1e9, PARAMS)
        assert vert.q_min <= 1e-3 * vert.q_max

    def test_csit_qmax_unbinding_apc(self):
        rng = np.random.default_rng(7)
        ens = random_ensemble(rng, 100)
        budget = PowerBudget(20.0, 20.0)
        vert = oe_vertices_csit(ens, budget, PARAMS)
        expected = 20.0 * float(np.sum(ens.w * ens.h)) + float(np.sum(ens.w * ens.intf))
        assert vert.q_max == pytest.approx(expected, rel=1e-12)

    def test_csit_qmax_matches_sort_fill_oracle(self):
        ens = FadingEnsemble.from_states([
            (2.2, 0.3, 1 / 6), (0.1, 4.0, 1 / 6), (1.4, 1.0, 1 / 6),
            (0.7, 2.0, 1 / 6), (3.1, 0.1, 1 / 6), (0.4, 5.0, 1 / 6)])
        budget = PowerBudget(5.0, 20.0)
        vert = oe_vertices_csit(ens, budget, PARAMS)
        assert vert.q_max == pytest.approx(
            csit_peak_fill_energy(ens, budget, 1.0), rel=1e-12)

    def test_csit_delta_max_matches_beta_bisection_oracle(self):
        rng = np.random.default_rng(8)
        ens = random_ensemble(rng, 60)
        budget = PowerBudget(1.5, 20.0)  # tight budget so the APC binds
        vert = oe_vertices_csit(ens, budget, PARAMS)
        delta_oracle, _ = csit_delta_max_beta_bisection(ens, budget, PARAMS)
        assert vert.obj_max == pytest.approx(delta_oracle, abs=1e-9)

    def test_csit_qmin_interference_only_when_no_residual(self):
        # inversion spends the whole budget: leftover harvest is interference
        rng = np.random.default_rng(9)
        ens = random_ensemble(rng, 60)
        budget = PowerBudget(0.2, 20.0)
        frac, _, spend = csit_inversion_optimum(ens, budget, PARAMS)
        assert spend == pytest.approx(budget.p_avg, rel=1e-9)  # APC binds
        vert = oe_vertices_csit(ens, budget, PARAMS)
        expected = float(np.sum(ens.w * (1.0 - frac) * ens.intf))
        assert vert.q_min == pytest.approx(expected, rel=1e-12)


class TestBoundaryCsit:
    def test_unconstrained_point_is_truncated_inversion(self):
        rng = np.random.default_rng(10)
        ens = random_ensemble(rng, 30)
        budget = PowerBudget(2.0, 20.0)
        sol = oe_boundary_csit(ens, budget, PARAMS, q_bar=0.0)
        delta_oracle, _ = csit_delta_max_beta_bisection(ens, budget, PARAMS)
        # binary modes cannot split the marginal served state, so allow one
        # state weight of slack below the fractional-service optimum
        assert sol.objective <= delta_oracle + 1e-9
        assert sol.objective >= delta_oracle - 1.0 / len(ens) - 1e-9

    def test_unconstrained_powers_match_inversion_when_apc_slack(self):
        rng = np.random.default_rng(11)
        ens = random_ensemble(rng, 25)
        budget = PowerBudget(15.0, 20.0)  # roomy budget: serve all capable
        sol = oe_boundary_csit(ens, budget, PARAMS, q_bar=0.0)
        frac, p_bar, _ = csit_inversion_optimum(ens, budget, PARAMS)
        assert np.array_equal(frac, (frac > 0).astype(float))  # no marginal state
        np.testing.assert_allclose(sol.policy.p[sol.policy.rho > 0.5],
                                   p_bar[frac > 0], atol=1e-9)
        assert sol.objective == pytest.approx(float(np.sum(ens.w * frac)), abs=1e-9)

    def test_saturated_target_fills_largest_gains_at_peak(self):
        rng = np.random.default_rng(12)
        ens = random_ensemble(rng, 12)
        budget = PowerBudget(5.0, 20.0)
        vert = oe_vertices_csit(ens, budget, PARAMS)
        sol = oe_boundary_csit(ens, budget, PARAMS, vert.q_max * (1 - 1e-9))
        assert sol.objective <= 1.0 / len(ens) + 1e-9
        assert sol.metrics.q_avg == pytest.approx(vert.q_max, rel=1e-6)
        # peak power flows to the largest h until the APC binds
        order = np.argsort(-ens.h)
        spent = np.cumsum(ens.w[order] * budget.p_peak)
        full = order[spent <= budget.p_avg + 1e-12]
        np.testing.assert_allclose(sol.policy.p[full], budget.p_peak, rtol=1e-6)

    def test_csit_dominates_no_csit(self):
        rng = np.random.default_rng(13)
        ens = random_ensemble(rng, 150)
        budget = PowerBudget(5.0, 20.0)
        vert = oe_vertices_no_csit(ens, 5.0, PARAMS)
        for frac in (0.1, 0.4, 0.7, 0.95):
            q = vert.q_min + frac * (vert.q_max - vert.q_min)
            base = oe_boundary_no_csit(ens, 5.0, PARAMS, q).objective
            cs = oe_boundary_csit(ens, budget, PARAMS, q).objective
            assert cs >= base - 1e-6


class TestQminClosedForm:
    def test_paper_anchor(self):
        value = qmin_closed_form(db_to_linear(1.0), 1.0, 1.0 / 3.0, 0.2, 0.5)
        assert value == pytest.approx(1.9998, abs=1e-3)

    def test_strictly_decreasing_over_db_grid(self):
        values = [qmin_closed_form(db_to_linear(db), 1.0, 1.0 / 3.0, 0.2, 0.5)
                  for db in np.linspace(0.0, 12.0, 25)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_matches_monte_carlo_qmin(self):
        ens = sample_ensemble(DistributionSpec.exponential(1.0),
                              DistributionSpec.exponential(3.0), 1_000_000, 17)
        params = LinkParams(sigma2=0.5, r0=0.2)
        vert = oe_vertices_no_csit(ens, 5.0, params)
        assert vert.q_min == pytest.approx(
            qmin_closed_form(5.0, 1.0, 1.0 / 3.0, 0.2, 0.5), rel=0.01)

    def test_matches_quadrature(self):
        for p_db in (0.0, 5.0, 10.0):
            P = db_to_linear(p_db)
            assert qmin_closed_form(P, 1.0, 1.0 / 3.0, 0.2, 0.5) == pytest.approx(
                qmin_quadrature(P, 0.2, 0.5), rel=1e-8)

    def test_rejects_nonpositive_arguments(self):
        with pytest.raises(ValueError):
            qmin_closed_form(0.0, 1.0, 1.0, 0.2, 0.5)
