import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arldpc.density_evolution import threshold
from arldpc.ensembles import (
    EnsembleWarning,
    FamilySpec,
    average_check_degree,
    constraint_length,
    edge_spread,
    gcd_spread,
    preset,
    terminate,
    terminated_matrix,
    terminated_rate_formula,
)
from arldpc.protograph import BaseMatrix, ProtographError, degree_census, design_rate

B = BaseMatrix.from_rows


def test_gcd_components():
    c = gcd_spread(3, 6)
    assert c.m_s == 2 and [m.tolist() for m in c.components] == [[[1, 1]]] * 3
    c = gcd_spread(4, 6)
    assert c.m_s == 1 and c.components[0].tolist() == [[1, 1, 1], [1, 1, 1]]
    c = gcd_spread(3, 9)
    assert c.m_s == 2 and c.components[0].tolist() == [[1, 1, 1]]


def test_gcd_one_is_flagged():
    with pytest.warns(EnsembleWarning, match="disconnected: gcd = 1"):
        c = gcd_spread(3, 7)
    assert c.m_s == 0 and c.warnings


@pytest.mark.parametrize("J,K", [(1, 4), (4, 4), (5, 3)])
def test_gcd_preconditions(J, K):
    with pytest.raises(ProtographError):
        gcd_spread(J, K)


def test_edge_spread_examples():
    ex1 = preset(1).convolutional()
    assert ex1.m_s == 1 and ex1.b_c == 3 and ex1.b_v == 6
    ex3 = edge_spread(B([[3, 3]]), [B([[2, 1]]), B([[1, 2]])])
    assert ex3.m_s == 1
    with pytest.raises(ProtographError, match="do not sum"):
        edge_spread(B([[3, 3]]), [B([[2, 1]]), B([[1, 1]])])
    with pytest.raises(ProtographError, match="shape"):
        edge_spread(B([[3, 3]]), [B([[2, 1]]), B([[1], [2]])])


def test_zero_rows_warn():
    with pytest.warns(EnsembleWarning, match="all-zero row"):
        edge_spread(B([[1, 1], [1, 1]]), [B([[1, 1], [0, 0]]), B([[0, 0], [1, 1]])])


def test_presets_have_expected_matrices():
    assert preset(2).components[0].tolist() == [[1, 1, 1, 0, 0, 0], [0, 1, 1, 1, 0, 0], [0, 0, 0, 1, 1, 1]]
    ex3 = preset(3)
    assert ex3.target.tolist() == [[3, 3]] and ex3.components[0].tolist() == [[2, 1]]
    ex1 = preset(1).components[0].entries
    assert (ex1.sum(axis=1) == 2).all()
    ex4 = preset(4)
    assert ex4.components[0].tolist() == [[1, 1, 0, 0, 0, 0], [1, 1, 1, 1, 0, 0], [1, 1, 1, 1, 1, 1]]
    assert ex4.m_s == 1
    for J, K in [(3, 6), (4, 8), (5, 10), (3, 9), (3, 12), (4, 6)]:
        f = preset(f"gcd({J},{K})")
        assert f.m_s == math.gcd(J, K) - 1
    with pytest.raises(ProtographError):
        preset(7)


def test_terminate_gcd_36_L3():
    t = terminate(gcd_spread(3, 6), 3)
    assert t.protograph.base.shape == (5, 6)
    assert degree_census(t.protograph).checks == {2: 2, 4: 2, 6: 1}
    assert t.rate == Fraction(1, 6)


def test_rates_and_census_examples():
    assert terminate(preset(1).convolutional(), 5).rate == Fraction(2, 5)
    t = terminate(gcd_spread(3, 9), 2)
    assert t.rate == Fraction(1, 3)
    assert degree_census(t.protograph).checks == {3: 2, 6: 2}
    assert terminated_rate_formula(gcd_spread(4, 8), 8) == Fraction(5, 16)
    assert terminated_rate_formula(gcd_spread(3, 6), 20) == Fraction(9, 20)


def test_short_terminations_flagged():
    t = terminate(gcd_spread(3, 6), 2)
    assert t.rate == 0 and t.rate_nonpositive
    assert terminate(gcd_spread(3, 6), 1).rate_nonpositive


def test_average_check_degree_and_constraint_length():
    assert average_check_degree(gcd_spread(3, 6), 2) == 3
    assert average_check_degree(gcd_spread(4, 8), 5) == 5
    assert float(average_check_degree(gcd_spread(3, 6), 10_000)) == pytest.approx(6, abs=1e-2)
    assert constraint_length(preset(3).convolutional()) == 4
    assert constraint_length(preset(1).convolutional()) == 12
    assert constraint_length(gcd_spread(3, 6)) == 6


conv_families = st.sampled_from(
    [preset(1).convolutional(), preset(2).convolutional(), preset(3).convolutional(), preset(4).convolutional()]
    + [gcd_spread(J, K) for J, K in [(3, 6), (4, 8), (3, 9), (4, 6), (3, 12)]]
)


@settings(max_examples=60, deadline=None)
@given(conv_families, st.integers(1, 12))
def test_band_structure(c, L):
    H = terminated_matrix(c, L)
    assert H.shape == ((L + c.m_s) * c.b_c, L * c.b_v)
    for r in range(L + c.m_s):
        for t in range(L):
            block = H[r * c.b_c:(r + 1) * c.b_c, t * c.b_v:(t + 1) * c.b_v]
            i = r - t
            if 0 <= i <= c.m_s:
                assert (block == c.components[i].entries).all()
            else:
                assert not block.any()
    J = c.target_sum.entries.sum(axis=0)
    assert (H.sum(axis=0) == np.tile(J, L)).all()
    K = c.target_sum.entries.sum(axis=1).max()
    rows = H.sum(axis=1)
    assert rows.max() <= K
    for r in range(c.m_s, L):
        assert (rows[r * c.b_c:(r + 1) * c.b_c] == c.target_sum.entries.sum(axis=1)).all()
    ens = terminate(c, L)
    assert design_rate(ens.protograph) == terminated_rate_formula(c, L) == ens.rate


@pytest.mark.parametrize("L", range(2, 21))
def test_census_formulas(L):
    assert degree_census(preset(1).terminated(L).protograph).checks == {2: 3, 4: 3, 6: 3 * L - 3}
    assert degree_census(preset(2).terminated(L).protograph).checks == {3: 6, 6: 3 * L - 3}
    assert degree_census(preset("gcd(3,9)").terminated(L).protograph).checks == (
        {3: 2, 6: 2, 9: L - 2} if L > 2 else {3: 2, 6: 2})


def test_staircase_is_the_gcd_band_regrouped():
    # the staircase spreading terminated at L is the (3,6) GCD band terminated at 3L,
    # plus one all-zero check row at the end
    stair = preset(4).convolutional()
    for L in range(1, 6):
        H = terminated_matrix(stair, L)
        G = terminated_matrix(gcd_spread(3, 6), 3 * L)
        assert (H[:-1] == G).all() and not H[-1].any()


def test_staircase_rows_match_gcd_rates():
    f = preset(4)
    for L in range(2, 9):
        assert f.rate(L) == Fraction(L - 1, 2 * L)
        assert f.terminated(L).protograph.base == terminate(gcd_spread(3, 6), 2 * L).protograph.base


def test_family_spec_validation():
    with pytest.raises(ProtographError):
        FamilySpec("x", "gcd", J=3)
    with pytest.raises(ProtographError):
        FamilySpec("x", "spread", target=B([[3, 3]]), components=(B([[1, 1]]),))
    with pytest.raises(ProtographError):
        FamilySpec("x", "bogus")
