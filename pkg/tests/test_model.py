import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from forestz.graph import InteractionGraph
from forestz.model import (
    KAPPA,
    W1,
    PairwiseModel,
    critical_beta,
    edge_factor,
    edge_factor_table,
    edge_weight_for_mst,
    ising_model,
    table_model,
)
from forestz.special import gammainc_lower, gammainc_upper, lambert_w, lower_gamma_scaled

from conftest import complete, random_model, ring

EDGE = InteractionGraph.from_pairs(2, [(0, 1)])


class TestLambertW:
    def test_fixed_points(self):
        assert lambert_w(0.0) == 0.0
        assert lambert_w(math.e) == pytest.approx(1.0, abs=1e-15)
        assert lambert_w(1.0) == pytest.approx(0.5671432904097838, abs=1e-15)

    def test_matches_scipy(self):
        for x in np.geomspace(1e-8, 1e6, 200):
            assert lambert_w(x) == pytest.approx(sc.lambertw(x).real, rel=1e-13)

    def test_residual_on_grid(self):
        for x in np.arange(0.0, 10.0 + 1e-9, 0.1):
            w = lambert_w(x)
            assert abs(w * math.exp(w) - x) < 1e-12

    @pytest.mark.parametrize("x", [-0.1, math.nan])
    def test_rejects_outside_domain(self, x):
        with pytest.raises(ValueError):
            lambert_w(x)


class TestIncompleteGamma:
    @pytest.mark.parametrize("a", [0.5, 1.0, 3.0, 8.0, 25.0])
    @pytest.mark.parametrize("x", [0.01, 0.7, 3.0, 9.5, 40.0])
    def test_regularized_against_scipy(self, a, x):
        assert gammainc_lower(a, x) == pytest.approx(sc.gammainc(a, x), rel=1e-12, abs=1e-300)
        assert gammainc_upper(a, x) == pytest.approx(sc.gammaincc(a, x), rel=1e-11, abs=1e-300)

    @pytest.mark.parametrize("a", [1.0, 2.0, 5.0, 8.0])
    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.3, 1.0, 3.0, 12.0])
    def test_scaled_lower_gamma_against_series(self, a, x):
        # e^x x^-a gamma(a, x) = sum_n x^n / (a (a+1) ... (a+n))
        total, term, n = 0.0, 1.0 / a, 0
        while abs(term) > 1e-18 * max(1.0, abs(total)):
            total += term
            n += 1
            term *= x / (a + n)
        assert lower_gamma_scaled(a, x) == pytest.approx(total, rel=1e-12)


class TestIsingModel:
    def test_single_edge_table(self):
        m = ising_model(EDGE, 1.0)
        np.testing.assert_array_equal(m.couplings[0], [[1.0, -1.0], [-1.0, 1.0]])

    def test_zero_coupling(self):
        m = ising_model(complete(3), 0.0)
        assert all(not t.any() for t in m.couplings)
        assert critical_beta(m).free

    def test_half_factor_sup(self):
        assert ising_model(complete(3), 10.0, half_factor=True).sup_h == 5.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.booleans())
    def test_tables_symmetric_with_zero_sum(self, j, half):
        m = ising_model(ring(4), j, half)
        for t in m.couplings:
            np.testing.assert_array_equal(t, t.T)
            assert t.sum() == 0.0

    def test_tables_read_only(self):
        m = ising_model(EDGE, 1.0)
        with pytest.raises(ValueError):
            m.couplings[0][0, 0] = 3.0

    def test_validation(self):
        with pytest.raises(ValueError):
            PairwiseModel(EDGE, (2, 2), (np.zeros((2, 3)),))
        with pytest.raises(ValueError):
            PairwiseModel(EDGE, (2, 2), (np.full((2, 2), np.nan),))
        with pytest.raises(ValueError):
            PairwiseModel(EDGE, (2, 2), (np.zeros((2, 2)),), beta=-1.0)
        with pytest.raises(ValueError):
            PairwiseModel(EDGE, (1, 2), (np.zeros((1, 2)),))

    def test_table_model_infers_sizes(self):
        m = table_model(EDGE, [np.zeros((3, 4))])
        assert m.state_sizes == (3, 4)

    def test_energy_terms(self, rng):
        m = random_model(complete(4), rng, max_states=3)
        states = np.array([[int(rng.integers(s)) for s in m.state_sizes] for _ in range(5)])
        terms = m.energy_terms(states)
        for r, s in enumerate(states):
            for k in range(m.graph.n_edges):
                i, j = m.graph.endpoints(k)
                assert terms[r, k] == m.couplings[k][s[i], s[j]]


class TestCriticalBeta:
    def test_unit_sup(self):
        rep = critical_beta(ising_model(EDGE, 1.0))
        assert rep.beta_c == pytest.approx(0.567143, abs=1e-6)
        assert KAPPA == 1.0 and rep.beta_c == W1

    def test_q_is_one_at_threshold(self):
        m = ising_model(EDGE, 2.5)
        rep = critical_beta(m.with_beta(critical_beta(m).beta_c))
        assert abs(rep.q - 1.0) < 1e-12

    def test_q_value(self):
        rep = critical_beta(ising_model(EDGE, 1.0, beta=0.2))
        assert rep.q == pytest.approx(0.2 * math.exp(0.2), rel=1e-15)
        assert rep.q == pytest.approx(0.244281, abs=1e-6)
        assert rep.regime == "below_critical"

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0.01, 100.0), st.floats(0.0, 10.0))
    def test_regime_iff_beta_below_threshold(self, sup_h, beta):
        m = ising_model(EDGE, sup_h, beta=beta)
        rep = critical_beta(m)
        # rounding can only disagree in a sliver around beta_c
        if abs(beta - rep.beta_c) > 1e-12 * rep.beta_c:
            assert (rep.q < 1.0) == (beta < rep.beta_c)
            assert (rep.regime == "below_critical") == (beta < rep.beta_c)


class TestEdgeFactor:
    def test_examples(self):
        m = ising_model(EDGE, 1.0)
        assert edge_factor(m.with_beta(0.0), 0, 0, 1) == 0.0
        assert edge_factor(m, 0, 1, 1) == pytest.approx(math.e - 1)
        m2 = table_model(EDGE, [np.full((2, 2), math.log(2.0))])
        assert edge_factor(m2, 0, 0, 0) == pytest.approx(1.0, rel=1e-15)

    def test_mst_weight(self):
        assert edge_weight_for_mst(ising_model(EDGE, 1.0, beta=0.0), 0) == 0.0
        assert edge_weight_for_mst(ising_model(EDGE, 1.0), 0) == pytest.approx(math.e - 1)
        assert edge_weight_for_mst(ising_model(EDGE, -1.0), 0) == pytest.approx(math.e - 1)

    def test_bounded_by_mst_weight_and_vanishes(self, rng):
        m = random_model(complete(4), rng, max_states=3, low=-2, high=2)
        for beta in (1.0, 1e-3, 1e-6):
            mb = m.with_beta(beta)
            w = edge_weight_for_mst(mb)
            for k in range(m.graph.n_edges):
                assert np.all(np.abs(edge_factor_table(mb, k)) <= w[k])
                assert w[k] <= 2 * beta * np.exp(2 * beta) + 1e-300
