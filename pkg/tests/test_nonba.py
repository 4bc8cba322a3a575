import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridrelay.benchmarks import nonba_independent, nonba_maxmin_fso
from hybridrelay.channels import CapacityMatrix
from hybridrelay.nonba import (MODE_ORDER, Mode, hybrid_rate, mixed_rate_closed_form, mixed_rate_exact,
                               rf_relay_rate, select_nonba, select_nonba_trace, tau_fso, tau_rf)
from hybridrelay.oracles import best_time_share, hybrid_grid, nonba_bruteforce, nonba_grid_slack
from hybridrelay.verify import random_capacities


def cm(fso, rf) -> CapacityMatrix:
    return CapacityMatrix(np.array(fso, dtype=float), np.array(rf, dtype=float))


class TestHybridRate:
    @pytest.mark.parametrize("links", [(100, 10, 40, 10), (50, 20, 40, 20), (30, 0, 70, 0),
                                       (3, 7, 2, 11), (0, 5, 0, 5)])
    def test_against_grid(self, links):
        tau, rho = hybrid_rate(*links)
        _, ref = hybrid_grid(*links)
        c1r, c2r = links[1], links[3]
        assert ref - 1e-9 <= tau <= ref + (c1r + c2r) * 1e-4 + 1e-12

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.floats(0.0, 1e3, allow_subnormal=False), min_size=4, max_size=4))
    def test_property_against_grid(self, links):
        tau, rho = hybrid_rate(*links)
        _, ref = hybrid_grid(*links)
        c1f, c1r, c2f, c2r = links
        assert ref - 1e-9 * max(ref, 1) <= tau <= ref + (c1r + c2r) * 1e-4 + 1e-9 * max(ref, 1)
        assert 0.0 <= rho <= 1.0
        assert tau <= min(c1f + c1r, c2f + c2r) + 1e-9 * max(ref, 1)

    def test_clipped_branch(self):
        tau, rho = hybrid_rate(100, 10, 40, 10)
        assert tau == 50 and rho == 0.0

    def test_balanced_branch(self):
        tau, rho = hybrid_rate(50, 20, 40, 20)
        assert tau == pytest.approx(55) and rho == pytest.approx(0.25)

    def test_rf_absent(self):
        tau, _ = hybrid_rate(30, 0, 70, 0)
        assert tau == 30


class TestRfOnly:
    def test_symmetric(self):
        tau, rho = rf_relay_rate(20e6, 20e6)
        assert tau == pytest.approx(10e6) and rho == pytest.approx(0.5)

    def test_asymmetric_against_grid(self):
        tau, rho = rf_relay_rate(30, 60)
        ref_rho, ref = best_time_share(30, 60)
        assert tau == pytest.approx(ref, abs=60 * 1e-4)
        assert rho == pytest.approx(ref_rho, abs=1e-4)
        assert rho == pytest.approx(2 / 3)

    def test_fso_min(self):
        assert tau_fso(cm([[5], [9]], [[0], [0]]), 0) == 5


class TestMixed:
    def test_feasible_example(self):
        tau, rho, ok = mixed_rate_closed_form(10, 40, 5, 20)
        assert ok and tau == 15 and rho == pytest.approx(0.25)

    def test_infeasible_closed_form_is_zero(self):
        tau, _, ok = mixed_rate_closed_form(10, 10, 10, 10)
        assert not ok and tau == 0

    def test_nothing_to_carry(self):
        tau, _, ok = mixed_rate_closed_form(0, 7, 0, 3)
        assert ok and tau == 0

    def test_exact_never_below_closed_form(self, rng):
        x = rng.exponential(size=(4, 5000))
        exact, _, _ = mixed_rate_exact(*x)
        closed, _, _ = mixed_rate_closed_form(*x)
        assert np.all(exact >= closed - 1e-12)

    def test_exact_against_grid(self, rng):
        rho = np.linspace(0, 1, 10001)
        for _ in range(200):
            a, b, cc, d = rng.exponential(size=4)
            ref = np.max(np.minimum(a, (1 - rho) * b) + np.minimum(rho * d, cc))
            tau, r, _ = mixed_rate_exact(a, b, cc, d)
            assert ref - 1e-12 <= tau <= ref + (b + d) * 1e-4
            assert tau == pytest.approx(min(a, (1 - r) * b) + min(r * d, cc), rel=1e-12)


class TestSelectNonba:
    def test_independent_example(self):
        c = cm([[100, 1], [100, 1]], [[1, 100], [1, 100]])
        d = select_nonba(c)
        assert d.mode is Mode.INDEPENDENT
        assert (d.fso_rx, d.fso_tx, d.rf_rx, d.rf_tx) == (0, 0, 1, 1)

    def test_rf_absent_matches_fso_maxmin(self, rng):
        fso = rng.exponential(size=(200, 2, 3))
        c = CapacityMatrix(fso, np.zeros_like(fso))
        tr = select_nonba_trace(c)
        assert np.allclose(tr.tau, nonba_maxmin_fso(c))

    def test_single_relay(self, rng):
        c = random_capacities(rng, 1, 300)
        tr = select_nonba_trace(c)
        assert {MODE_ORDER[k] for k in tr.mode} <= {Mode.HYBRID, Mode.INDEPENDENT}
        ref, _ = hybrid_rate(c.fso[:, 0, 0], c.rf[:, 0, 0], c.fso[:, 1, 0], c.rf[:, 1, 0])
        assert np.allclose(tr.tau, ref)

    def test_mixed_counterexample(self):
        # the closed form forces this pair to 0, the exact split carries 55
        c = cm([[10, 0], [0, 50]], [[0, 100], [10, 0]])
        ref, roles, _ = nonba_bruteforce(c)
        d = select_nonba(c)
        assert ref == pytest.approx(55, abs=nonba_grid_slack(c))
        assert d.tau == pytest.approx(ref, abs=nonba_grid_slack(c))
        assert d.mode is Mode.MIXED
        assert select_nonba(c, mixed="closed-form").tau == pytest.approx(50)

    @pytest.mark.parametrize("m_count", [2, 3])
    def test_against_bruteforce(self, m_count, rng):
        c = random_capacities(rng, m_count, 40)
        tr = select_nonba_trace(c)
        for b in range(40):
            ref, _, _ = nonba_bruteforce(c[b])
            slack = nonba_grid_slack(c[b])
            assert ref - 1e-9 * ref <= tr.tau[b] <= ref + slack + 1e-9 * ref

    def test_decision_is_feasible(self, rng):
        c = random_capacities(rng, 3, 300)
        tr = select_nonba_trace(c)
        for b in range(300):
            d = tr.decision(b)
            assert d.alpha.sum(axis=1).tolist() == [1, 1]
            assert d.beta.sum(axis=1).tolist() == [1, 1]
            assert 0.0 <= d.rho1 <= 1.0
            assert len(d.relays_used()) <= 2
            inflow, outflow = d.link_limits(c[b])
            assert d.tau == pytest.approx(np.minimum(inflow, outflow).sum(), rel=1e-9, abs=1e-12)

    def test_dominates_benchmarks(self, rng):
        c = random_capacities(rng, 2, 1000)
        tau = select_nonba_trace(c).tau
        assert np.all(tau >= nonba_maxmin_fso(c) - 1e-12)
        assert np.all(tau >= nonba_independent(c) - 1e-12)

    def test_scale_equivariance(self, rng):
        c = random_capacities(rng, 3, 200)
        a = select_nonba_trace(c)
        b = select_nonba_trace(CapacityMatrix(c.fso * 1e6, c.rf * 1e6))
        assert np.allclose(b.tau, a.tau * 1e6, rtol=1e-12)
        assert np.array_equal(a.mode, b.mode)

    def test_rf_only_relay_rate(self):
        c = cm([[0], [0]], [[30], [60]])
        assert tau_rf(c, 0)[0] == pytest.approx(20)
        assert select_nonba(c).tau == pytest.approx(20)
