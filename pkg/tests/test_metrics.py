import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeter.measurement import CoarseGraining, coarse_grain, conditional_states, unconditional_post_state
from qmeter.metrics import (
    MetricsReport,
    efficiency_eta,
    eta_mutual,
    evaluate,
    hierarchy_check,
    holevo_chi,
    mutual_information,
    report_from_channels,
    strength_xi,
)
from qmeter.states import AncillaInit, MeasurementParams, QubitState

REF = QubitState.reference()


def vac(ab, eps, **kw):
    return MeasurementParams(alpha_bar=ab, epsilon=eps, **kw)


def mp_entropy(ps):
    return -sum(p * mpmath.log(p) for p in ps if p > 0)


def test_xi_closed_form():
    for eps in (0.1, 0.7, 1.5):
        c = mpmath.mpf(0.5) * mpmath.e ** (-2 * mpmath.mpf(eps) ** 2)
        ref = mp_entropy([0.5 + c, 0.5 - c]) / mpmath.log(2)
        post = unconditional_post_state(vac(0.3, eps), REF)
        assert strength_xi(post) == pytest.approx(float(ref), abs=1e-13)


def test_photodiode_chi_and_mutual_information():
    mpmath.mp.dps = 40
    x = mpmath.mpf(1.6) ** 2
    fine = conditional_states(vac(0.8, 0.8), REF)
    coarse = coarse_grain(fine, CoarseGraining.photodiode())
    post = unconditional_post_state(vac(0.8, 0.8), REF)
    c = mpmath.e ** (-x / 2) / 2
    # both bins hold pure conditional states, so chi is the post entropy
    chi_ref = mp_entropy([0.5 + c, 0.5 - c])
    assert holevo_chi(coarse, post) == pytest.approx(float(chi_ref), abs=1e-13)
    joint = [mpmath.e ** (-x) / 2, mpmath.mpf(1) / 2, (1 - mpmath.e ** (-x)) / 2]
    p_r = [joint[0] + joint[1], joint[2]]
    i_ref = mp_entropy([0.5, 0.5]) + mp_entropy(p_r) - mp_entropy(joint)
    assert mutual_information(coarse) == pytest.approx(float(i_ref), abs=1e-13)


def test_fine_chi_equals_fine_iq_for_vacuum_pointer():
    r = evaluate(vac(0.6, 0.4))
    assert r.chi == pytest.approx(r.i_q, abs=1e-15)
    assert r.i_q == pytest.approx(r.s_rho_s, abs=1e-12)


def test_eta_xr_at_equal_amplitudes():
    r = evaluate(vac(1.5, 1.5))
    assert r.eta_xr == pytest.approx(0.99920, abs=5e-6)


def test_eta_undefined_without_entropy():
    r = evaluate(vac(0.5, 0.0))
    assert r.xi == pytest.approx(0.0, abs=1e-15)
    assert r.eta is None and r.product is None
    assert efficiency_eta(conditional_states(vac(0.5, 0.0), REF), unconditional_post_state(vac(0.5, 0.0), REF)) is None


def test_product_identity():
    r = evaluate(vac(1.0, 0.6), cg=CoarseGraining.intervals([0, 1, 2, 4]))
    assert r.product == pytest.approx(r.i_classical / math.log(2), rel=1e-12)


def test_no_information_at_zero_mean():
    r = evaluate(vac(0.0, 2.0))
    assert r.i_classical == pytest.approx(0.0, abs=1e-14)
    assert r.eta_xr == pytest.approx(0.0, abs=1e-13)


def test_relabeling_bins_changes_nothing():
    fine = conditional_states(vac(0.9, 0.5), REF)
    post = unconditional_post_state(vac(0.9, 0.5), REF)
    a = coarse_grain(fine, CoarseGraining(((0,), (1, 2), ()), ("x", "y", "z"), rest=2))
    b = coarse_grain(fine, CoarseGraining(((1, 2), (0,), ()), ("z", "x", "y"), rest=2))
    ra, rb = report_from_channels(post, fine, a), report_from_channels(post, fine, b)
    assert ra.chi == pytest.approx(rb.chi, abs=1e-15)
    assert ra.i_classical == pytest.approx(rb.i_classical, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.integers(1, 6))
def test_data_processing_on_nested_binnings(ab, eps, cut):
    fine = conditional_states(vac(ab, eps), REF)
    post = unconditional_post_state(vac(ab, eps), REF)
    finer = coarse_grain(fine, CoarseGraining.intervals(list(range(cut + 1))))
    coarser = coarse_grain(fine, CoarseGraining.intervals([0, cut]))
    assert holevo_chi(fine, post) + 1e-12 >= holevo_chi(finer, post) >= holevo_chi(coarser, post) - 1e-12
    assert mutual_information(fine) + 1e-12 >= mutual_information(finer) >= mutual_information(coarser) - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 2.0), st.floats(0.01, 2.0), st.floats(-1, 1), st.floats(-1, 1))
def test_hierarchy_holds(ab, eps, x, z):
    r2 = x * x + z * z
    if r2 > 1:
        x, z = x / math.sqrt(r2), z / math.sqrt(r2)
    q = QubitState.from_bloch(x, 0.0, z)
    r = evaluate(vac(ab, eps), q, cg=CoarseGraining.photodiode())
    assert hierarchy_check(r).ok


def test_hierarchy_reports_broken_link():
    bad = MetricsReport(xi=0.5, eta=1.0, eta_xr=1.0, product=0.5, s_rho_s=0.3, i_q=0.2, chi=0.25, i_classical=0.1)
    res = hierarchy_check(bad)
    assert not res.ok
    assert res.broken == ["I_q >= chi"]


def test_thermal_pointer_is_inefficient():
    params = MeasurementParams(alpha_bar=0.5, epsilon=0.5, init=AncillaInit.thermal(3.0))
    r = evaluate(params)
    assert r.eta is not None and r.eta < 1 - 1e-3


def test_known_state_yields_no_information_in_any_basis():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    fine = conditional_states(vac(1.0, 0.5), QubitState.ground())
    assert mutual_information(fine, h) == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        mutual_information(fine, np.ones((2, 2)))


def test_eta_mutual_none_when_chi_vanishes():
    fine = conditional_states(vac(1.0, 0.0), REF)
    post = unconditional_post_state(vac(1.0, 0.0), REF)
    assert eta_mutual(fine, post) is None


def test_thermal_pointer_without_coupling_leaves_state_untouched():
    params = MeasurementParams(alpha_bar=1.0, epsilon=0.0, init=AncillaInit.thermal(3.0))
    r = evaluate(params)
    assert r.xi == pytest.approx(0.0, abs=1e-14)
    assert r.eta is None
