import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qassert.stats import (
    ContingencyTable,
    Histogram,
    chi2_contingency,
    chi2_gof,
    chi2_sf,
    gamma_q,
)

from oracle_values import BELL_P, GRID, GRID_X


class TestGammaQ:
    @pytest.mark.parametrize("a", sorted(GRID))
    def test_matches_integration_oracle(self, a):
        """Frozen quadrature values agree to 1e-8 relative."""
        for x, expected in zip(GRID_X, GRID[a]):
            assert gamma_q(a, x) == pytest.approx(expected, rel=1e-8)

    def test_zero_x_is_one(self):
        assert gamma_q(3.7, 0.0) == 1.0

    def test_critical_value_dof1(self):
        """chi2 = 3.841 at one dof sits at the 5% level."""
        assert gamma_q(0.5, 1.92075) == pytest.approx(0.05, abs=1e-5)

    @pytest.mark.parametrize("x", np.linspace(0.0, 10.0, 21))
    def test_closed_form_at_one(self, x):
        assert gamma_q(1.0, x) == pytest.approx(math.exp(-x), rel=1e-12)

    @pytest.mark.parametrize("bad", [(math.nan, 1.0), (1.0, math.inf), (0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
    def test_rejects_bad_arguments(self, bad):
        with pytest.raises(ValueError):
            gamma_q(*bad)

    @given(st.sampled_from([0.5, 1.0, 2.5, 8.0]), st.floats(0.01, 39.0), st.floats(0.01, 1.0))
    def test_decreasing(self, a, x, dx):
        """Strict wherever the values are distinguishable in double precision."""
        hi, lo = gamma_q(a, x), gamma_q(a, x + dx)
        assert lo <= hi
        if hi < 1.0 - 1e-12:
            assert lo < hi

    def test_live_oracle(self):
        """Spot check against mpmath's own incomplete gamma when available."""
        mp = pytest.importorskip("mpmath")
        for a, x in [(0.5, 0.3), (2.5, 3.4), (8.0, 9.1), (4.5, 25.0)]:
            assert gamma_q(a, x) == pytest.approx(float(mp.gammainc(a, x, regularized=True)), rel=1e-10)


class TestGoodnessOfFit:
    def test_perfect_fit(self):
        r = chi2_gof({0: 4, 1: 4, 2: 4, 3: 4}, {k: 0.25 for k in range(4)})
        assert (r.statistic, r.dof, r.p_value) == (0.0, 3, 1.0)

    def test_all_mass_on_one_of_two(self):
        r = chi2_gof({0: 16}, {0: 0.5, 1: 0.5})
        assert r.statistic == 16.0
        assert r.dof == 1
        assert r.p_value == pytest.approx(BELL_P, abs=1e-12)

    def test_classical_register_against_uniform(self):
        r = chi2_gof({5: 160}, {k: 1 / 16 for k in range(16)})
        assert r.statistic == pytest.approx(160 * 15)
        assert r.p_value < 1e-100

    def test_mass_on_impossible_cell(self):
        r = chi2_gof({0: 3, 2: 1}, {0: 0.5, 1: 0.5})
        assert r.flag == "impossible"
        assert r.p_value == 0.0

    def test_expected_must_sum_to_one(self):
        with pytest.raises(ValueError):
            chi2_gof({0: 1}, {0: 0.5, 1: 0.4})

    def test_low_power_flag(self):
        assert chi2_gof({0: 2, 1: 2}, {0: 0.5, 1: 0.5}).low_power
        assert not chi2_gof({0: 5, 1: 5}, {0: 0.5, 1: 0.5}).low_power

    @given(st.lists(st.integers(0, 30), min_size=2, max_size=6), st.randoms())
    def test_relabeling_invariance(self, counts, rnd):
        if sum(counts) == 0:
            return
        k = len(counts)
        labels = list(range(100, 100 + k))
        rnd.shuffle(labels)
        base = chi2_gof(dict(enumerate(counts)), {i: 1 / k for i in range(k)})
        moved = chi2_gof(dict(zip(labels, counts)), {lab: 1 / k for lab in labels})
        assert moved.statistic == pytest.approx(base.statistic)
        assert moved.p_value == pytest.approx(base.p_value)


class TestContingency:
    def test_bell_table(self):
        r = chi2_contingency(ContingencyTable.from_array([[8, 0], [0, 8]]))
        assert r.statistic == 16.0
        assert r.dof == 1
        assert abs(r.p_value - BELL_P) < 1e-6

    def test_independent_table(self):
        r = chi2_contingency(ContingencyTable.from_array([[4, 4], [4, 4]]))
        assert (r.statistic, r.p_value) == (0.0, 1.0)

    def test_zero_marginals_pruned(self):
        r = chi2_contingency(ContingencyTable.from_array([[8, 0, 0], [0, 0, 8], [0, 0, 0]]))
        assert r.dof == 1
        assert r.statistic == 16.0

    def test_constant_register_is_degenerate(self):
        r = chi2_contingency(ContingencyTable.from_array([[5, 11]]))
        assert r.flag == "degenerate"
        assert (r.dof, r.p_value) == (0, 1.0)

    def test_from_pairs(self):
        t = ContingencyTable.from_pairs([0, 3, 3, 0], [1, 1, 2, 1])
        assert t.rows == (0, 3)
        assert t.cols == (1, 2)
        assert t.counts == ((2, 0), (1, 1))

    def test_sf_rejects_zero_dof(self):
        with pytest.raises(ValueError):
            chi2_sf(1.0, 0)

    tables = st.integers(2, 4).flatmap(
        lambda r: st.integers(2, 4).flatmap(
            lambda c: st.lists(st.lists(st.integers(1, 20), min_size=c, max_size=c), min_size=r, max_size=r)))

    @given(tables)
    def test_transpose_symmetry(self, grid):
        t = ContingencyTable.from_array(grid)
        a, b = chi2_contingency(t), chi2_contingency(t.transpose())
        assert a.dof == b.dof
        assert a.statistic == pytest.approx(b.statistic)
        assert a.p_value == pytest.approx(b.p_value)

    @given(tables, st.integers(2, 5))
    def test_scaling(self, grid, k):
        base = chi2_contingency(ContingencyTable.from_array(grid))
        scaled = chi2_contingency(ContingencyTable.from_array(np.asarray(grid) * k))
        assert scaled.statistic == pytest.approx(k * base.statistic, rel=1e-9, abs=1e-9)

    @settings(max_examples=50)
    @given(tables)
    def test_p_value_in_unit_interval(self, grid):
        r = chi2_contingency(ContingencyTable.from_array(grid))
        assert 0.0 <= r.p_value <= 1.0


class TestHistogram:
    def test_drops_zeros_and_sorts(self):
        h = Histogram({3: 2, 1: 0, 0: 5})
        assert list(h) == [0, 3]
        assert h.total == 7
        assert h[1] == 0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Histogram({0: -1})

    def test_from_values(self):
        assert Histogram.from_values([2, 2, 7]) == Histogram({2: 2, 7: 1})
