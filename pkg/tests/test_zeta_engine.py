import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zerostats import dirichlet_ene as dn
from zerostats import zeta_engine as ze

import oracles
from reference_tables import CHI12_ZEROS, CHI3_ZEROS, CHI7_NEG_ZEROS, CHI7_POS_ZEROS, ZETA_TABLE


# --- theta and the zero count ---------------------------------------------

def test_theta_root_at_first_gram_point():
    assert ze.riemann_siegel_theta(17.0) < 0 < ze.riemann_siegel_theta(18.0)
    assert abs(ze.riemann_siegel_theta(oracles.GRAM_0)) < 1e-12


def test_theta_approaches_leading_terms():
    t = 1000.0
    lead = t / 2 * math.log(t / (2 * math.pi)) - t / 2 - math.pi / 8
    d = ze.riemann_siegel_theta(t) - lead
    assert abs(d) < 1e-3
    assert d == pytest.approx(oracles.THETA_LEADING_DIFF_1000, rel=1e-6)


def test_theta_domain():
    with pytest.raises(ValueError):
        ze.riemann_siegel_theta(0.5)


def test_count_zeros():
    assert round(ze.count_zeros(100)) == 29
    assert round(ze.count_zeros(200)) == 79
    assert ze.count_zeros(100) == pytest.approx(oracles.COUNT_100, abs=1e-9)
    assert ze.count_zeros(200) == pytest.approx(oracles.COUNT_200, abs=1e-9)
    # the leading term alone, T log T / 2 pi = 73.3, is far off at this height
    ratio = (100 / (2 * math.pi) * math.log(100 / (2 * math.pi * math.e))) / 29
    assert 0.8 < ratio < 1.2
    with pytest.raises(ValueError):
        ze.count_zeros(0)


def test_gram_point():
    zf = ze._zfunction(None, ze.DEFAULT_CONFIG)
    assert zf.gram(0) == pytest.approx(oracles.GRAM_0, abs=1e-10)


# --- Z(t) -----------------------------------------------------------------------

@pytest.mark.parametrize("t", sorted(oracles.Z_AT))
def test_hardy_z_against_oracle(t):
    tol = 1e-8 if t < 10_000 else 1e-7
    assert ze.hardy_z(t) == pytest.approx(oracles.Z_AT[t], abs=tol)


def test_hardy_z_sign_change_at_first_zero():
    assert ze.hardy_z(14.13) * ze.hardy_z(14.14) < 0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1.0, max_value=5000.0))
def test_hardy_z_even(t):
    assert ze.hardy_z(-t) - ze.hardy_z(t) == 0.0


def test_hardy_z_vectorized_matches_scalar():
    ts = np.array([15.5, 123.25, 2500.75, 9999.0])
    vec = ze.hardy_z(ts)
    assert np.allclose(vec, [ze.hardy_z(t) for t in ts], rtol=0, atol=1e-12)


def test_precision_warning_at_low_order():
    cfg = ze.ZFunctionConfig(term_budget=1, em_cutoff=10.0, refine_tolerance=1e-12)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        ze.hardy_z(30.0, cfg)
    assert any(issubclass(w.category, ze.PrecisionWarning) for w in rec)


def test_config_validation():
    with pytest.raises(ValueError):
        ze.ZFunctionConfig(term_budget=0)
    with pytest.raises(ValueError):
        ze.ZFunctionConfig(refine_tolerance=0.0)


# --- zeta zeros ----------------------------------------------------------------

def test_first_zeta_zeros_by_printed_value():
    seq = ze.find_riemann_zeros(80)
    assert len(seq) == 80 and not seq.signed
    for v in ZETA_TABLE.values():
        assert np.min(np.abs(seq.ordinates - v)) < 1e-6


def test_index_78_gap():
    seq = ze.find_riemann_zeros(81)
    assert seq.ordinates[77] == pytest.approx(oracles.ZETA_ZERO[78], abs=1e-8)
    assert seq.ordinates[78] == pytest.approx(oracles.ZETA_ZERO[79], abs=1e-8)
    assert 196.8 not in [round(v, 1) for v in ZETA_TABLE.values()]


def test_close_pair_near_111():
    seq = ze.find_riemann_zeros(35)
    assert seq.ordinates[33] == pytest.approx(oracles.ZETA_ZERO[34], abs=1e-8)
    assert seq.ordinates[34] == pytest.approx(oracles.ZETA_ZERO[35], abs=1e-8)


def test_zeros_below_ten_empty():
    assert len(ze.riemann_zeros_up_to(10.0)) == 0


def _good_gram_counts(zf, seq, ms):
    """(expected, found) zero counts below each good Gram point g_m."""
    out = []
    for m in ms:
        g = float(zf.gram(m))
        if (-1) ** m * float(zf(g)[0]) > 0:
            out.append((m + zf.count_offset, int(np.searchsorted(seq.ordinates, g))))
    return out


def test_no_missed_zeros_and_small_residuals():
    seq = ze.find_riemann_zeros(500)
    zf = ze._zfunction(None, ze.DEFAULT_CONFIG)
    pairs = _good_gram_counts(zf, seq, range(100, 480, 7))
    assert len(pairs) > 30
    assert all(e == f for e, f in pairs)
    assert abs(ze.count_zeros(seq.ordinates[-1]) - 500) < 1.5
    assert np.max(ze.zero_residuals(ze.hardy_z, seq)) < 1e-6


def test_deterministic():
    assert ze.find_riemann_zeros(200) == ze.find_riemann_zeros(200)


def test_up_to_matches_first_n():
    a = ze.riemann_zeros_up_to(300.0)
    b = ze.find_riemann_zeros(len(a))
    assert np.array_equal(a.ordinates, b.ordinates)


def test_merge():
    a = ze.ZeroSequence(np.array([1.0, 2.0]))
    b = ze.ZeroSequence(np.array([2.0 + 1e-10, 3.0]))
    assert np.array_equal(a.merge(b).ordinates, [1.0, 2.0, 3.0])


def test_sequence_invariants():
    with pytest.raises(ValueError):
        ze.ZeroSequence(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        ze.ZeroSequence(np.array([-1.0, 1.0]))
    s = ze.ZeroSequence(np.array([-7.0, 1.0]), signed=True)
    assert s.max_ordinate == 7.0


# --- L-functions ----------------------------------------------------------------

def test_lfunc_sign_changes():
    chi3 = dn.character(3, 2)
    assert ze.lfunc_z(chi3, 8.03) * ze.lfunc_z(chi3, 8.04) < 0
    chi7 = dn.character(7, 3)
    assert ze.lfunc_z(chi7, 4.35) * ze.lfunc_z(chi7, 4.36) < 0
    assert ze.lfunc_z(chi7, -6.21) * ze.lfunc_z(chi7, -6.20) < 0


def test_lfunc_real_character_symmetry():
    chi = dn.character(3, 2)
    ts = np.linspace(1.0, 60.0, 37)
    r = ze.lfunc_z(chi, -ts) / ze.lfunc_z(chi, ts)
    assert np.allclose(np.abs(r), 1.0, atol=1e-9)
    assert np.all(np.sign(r) == np.sign(r[0]))


def test_lfunc_rejects_imprimitive():
    with pytest.raises(ValueError):
        ze.lfunc_z(dn.character(9, 4), 5.0)


def test_lfunc_conductor_budget():
    chi = dn.primitive_characters(101)[0]
    with pytest.raises(ValueError):
        ze.lfunc_z(chi, 5.0)


def test_chi3_zeros():
    seq = ze.find_dirichlet_zeros(dn.character(3, 2), 18)
    assert np.max(np.abs(seq.ordinates - CHI3_ZEROS)) < 1e-6
    assert seq.ordinates[-1] == pytest.approx(50.37513865, abs=1e-6)


def test_chi12_zeros():
    chi12 = dn.character(12, 4)
    seq = ze.find_dirichlet_zeros(chi12, 28)
    assert np.max(np.abs(seq.ordinates - CHI12_ZEROS)) < 1e-6


def test_chi7_both_branches():
    seq = ze.find_dirichlet_zeros(dn.character(7, 3), 24, 24)
    assert seq.signed
    neg, pos = seq.ordinates[:24], seq.ordinates[24:]
    assert np.max(np.abs(pos - CHI7_POS_ZEROS)) < 1e-5
    assert np.max(np.abs(-neg[::-1] - CHI7_NEG_ZEROS)) < 1e-5
    assert pos[-1] == pytest.approx(49.126475, abs=1e-5)
    assert neg[0] == pytest.approx(-50.017326, abs=1e-5)


def test_real_character_rejects_negative_branch():
    with pytest.raises(ValueError):
        ze.find_dirichlet_zeros(dn.character(3, 2), 5, 5)


def test_dirichlet_count_matches_zeros():
    chi = dn.character(7, 3)
    seq = ze.dirichlet_zeros_up_to(chi, 120.0)
    zf = ze._zfunction(chi, ze.DEFAULT_CONFIG)
    first = int(np.ceil(zf.theta(zf.stationary_point + 1.0) / np.pi)) + 1
    pairs = _good_gram_counts(zf, seq, range(first, first + 60))
    assert len(pairs) > 20
    assert all(e == f for e, f in pairs)
    assert abs(ze.count_dirichlet_zeros(chi, seq.ordinates[-1]) - len(seq)) < 1.5
    assert np.max(np.abs(ze.lfunc_z(chi, seq.ordinates))) < 1e-6
