from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ospcheck.config import PhysicalParams, RenormConstants
from ospcheck.decompositions import Convention
from ospcheck.greens import Envelope, EnvelopeEvaluator, SplittingBounds, h_bound_closed
from ospcheck.ospforms import (
    OspMatrix,
    QuadratureError,
    QuadratureScheme,
    TestFunction,
    assemble_osp_matrix,
    check_osp_small_n,
    form_factor,
    psd_check,
    radial_integral_4d,
    scalar_integrals,
    small_n_bound_factor,
    closed_form_bounds,
)

TWO_PI2 = 2 * math.pi**2
EV_005 = EnvelopeEvaluator.create(PhysicalParams(0.05, 1.0), RenormConstants())
# 1D oracle values, 40 significant digits
with mpmath.workdps(40):
    NORM_RADIAL = mpmath.mpf("0.0693356915558887076514191711606300305227")
    G1_RADIAL = mpmath.mpf("0.2018263188384029628294607503153603119629")


def _oracle(f):
    with mpmath.workdps(40):
        return mpmath.quad(f, [0, 1, 4, mpmath.inf])


def test_frozen_oracles_reproduce():
    with mpmath.workdps(40):
        assert abs(_oracle(lambda r: mpmath.e ** (-2 * r * r) * r**3 / (r * r + 1)) - NORM_RADIAL) < 1e-35
        # closed form (1 - e*E1(1))/2 for the single-Gaussian weight
        assert abs((1 - mpmath.e * mpmath.e1(1)) / 2 - G1_RADIAL) < 1e-35
        assert abs(_oracle(lambda r: mpmath.e ** (-r * r) * r**3 / (r * r + 1)) - G1_RADIAL) < 1e-35


def test_gaussian_volume():
    value, err = radial_integral_4d(lambda r: math.exp(-r * r))
    assert value == pytest.approx(math.pi**2, rel=1e-10)
    assert err < 1e-8


def test_weighted_integrand_against_oracle():
    value, _ = radial_integral_4d(lambda r: math.exp(-r * r) / (r * r + 1), QuadratureScheme(rel_tol=1e-10))
    assert value == pytest.approx(TWO_PI2 * float(G1_RADIAL), rel=1e-10)


def test_divergent_integrand_raises():
    with pytest.raises(QuadratureError):
        radial_integral_4d(lambda r: 1.0)


def test_scalar_integrals_oracle(evaluator_at):
    si = scalar_integrals(TestFunction(), evaluator_at(0.04), Envelope.MIN)
    assert si.norm_sq == pytest.approx(TWO_PI2 * float(NORM_RADIAL), rel=1e-9)
    assert si.g1 == pytest.approx(TWO_PI2 * float(G1_RADIAL), rel=1e-9)
    assert si.converged and si.error < 1e-6


def test_max_mode_weights_are_larger(evaluator_at):
    ev = evaluator_at(0.1)
    lo = scalar_integrals(TestFunction(), ev, Envelope.MIN)
    hi = scalar_integrals(TestFunction(), ev, Envelope.MAX)
    assert hi.norm_sq > lo.norm_sq and hi.g1 > lo.g1


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.3, 3.0))
def test_amplitude_homogeneity(c, width):
    base = scalar_integrals(TestFunction(1.0, width), EV_005)
    scaled = scalar_integrals(TestFunction(c, width), EV_005)
    assert scaled.norm_sq == pytest.approx(c * c * base.norm_sq, rel=1e-8)
    assert scaled.g1 == pytest.approx(c * base.g1, rel=1e-8)


def test_family_g1_is_max(evaluator_at):
    ev = evaluator_at(0.05)
    wide, narrow = TestFunction(1.0, 2.0), TestFunction(1.0, 0.5)
    fam = scalar_integrals([narrow, wide], ev)
    assert fam.norm_sq == scalar_integrals(narrow, ev).norm_sq
    assert fam.g1 == scalar_integrals(wide, ev).g1


def test_small_n_n1_trivial(evaluator_at):
    chk = check_osp_small_n(1, TestFunction(), evaluator_at(0.2))
    assert chk.form > 0 and chk.passed and chk.lower_bound == 0


def test_small_n_n3(evaluator_at):
    chk = check_osp_small_n(3, TestFunction(), evaluator_at(0.1))
    assert chk.bound_factor == pytest.approx(0.4)
    assert chk.passed and chk.status == "pass"
    above = check_osp_small_n(3, TestFunction(), evaluator_at(0.2))
    assert above.bound_factor == pytest.approx(-0.2)
    assert above.status == "outside weak condition"


def test_small_n_n5(evaluator_at):
    ev = evaluator_at(0.04)
    b = ev.bounds
    chk = check_osp_small_n(5, TestFunction(), ev)
    assert chk.bound_factor == pytest.approx(float(b[5].d_min * b[3].d_min) + 10 * 0.76, rel=1e-14)
    assert chk.passed
    # the set-partition coefficients are kept as a diagnostic
    assert chk.diagnostics["set_partition_margin"] < 0


def test_small_n_rejects_large_n(evaluator_at):
    with pytest.raises(ValueError):
        check_osp_small_n(7, TestFunction(), evaluator_at(0.1))


def test_form_factors_exact_n3_n5():
    lam = Fraction(1, 10)
    b = SplittingBounds.build(5, PhysicalParams(lam, 1), RenormConstants())
    assert form_factor(3, b) == pytest.approx(float(1 - 6 * lam))
    assert small_n_bound_factor(3, b) == 1 - 6 * lam
    assert form_factor(5, b) == pytest.approx(float(small_n_bound_factor(5, b)), rel=1e-14)
    assert form_factor(5, b, Convention.SET_PARTITION) < 0


def test_closed_form_bounds_n7():
    lam = Fraction(1, 10)
    b = SplittingBounds.build(7, PhysicalParams(lam, 1), RenormConstants())
    tb = closed_form_bounds(7, b)
    assert tb.bracket_h == Fraction(2, 5) and tb.bracket_h_hat == Fraction(2, 5)
    assert tb.h == 10 * h_bound_closed(7, b) * Fraction(2, 5)
    assert tb.h > 0 and tb.h_hat > 0
    assert tb.applicable == tb.h_hat
    with pytest.raises(ValueError):
        closed_form_bounds(5, b)


@pytest.mark.parametrize("n", [7, 9, 11])
def test_closed_form_bounds_vanish_like_power(n):
    def h_at(lam):
        return float(closed_form_bounds(n, SplittingBounds.build(n, PhysicalParams(lam, 1), RenormConstants())).h)

    eps = Fraction(1, 10**6)
    assert h_at(2 * eps) / h_at(eps) == pytest.approx(2 ** ((n - 1) // 2), rel=1e-3)


def test_matrix_support(evaluator_at):
    ev = evaluator_at(0.1)
    m3 = assemble_osp_matrix(3, TestFunction(), ev)
    assert [k for k, v in m3.entries.items() if v != 0] == [(1, 1), (1, 3), (2, 2), (3, 1)]
    assert m3.is_absent(3, 3) and (3, 3) not in m3.entries
    m5 = assemble_osp_matrix(5, TestFunction(), ev)
    absent = {(M, N) for M in range(1, 6) for N in range(1, 6) if (M, N) not in m5.entries}
    assert {(3, 5), (4, 4), (5, 3), (5, 5)} <= absent
    assert all(v == 0 for (M, N), v in m5.entries.items() if (M - N) % 2)


def test_matrix_n1_and_zero(evaluator_at):
    ev = evaluator_at(0.1)
    m1 = assemble_osp_matrix(1, TestFunction(), ev)
    v = psd_check(m1)
    assert v.min_eigenvalue == pytest.approx(m1.entries[(1, 1)]) and v.is_psd
    zero = psd_check(assemble_osp_matrix(3, TestFunction(0.0), ev))
    assert zero.min_eigenvalue == 0 and zero.is_psd and zero.triangular_sum == 0


@pytest.mark.parametrize("lam", [0.04, 0.1, 0.15])
def test_mixed_widths_stay_psd(evaluator_at, lam):
    ev = evaluator_at(lam)
    for n in (3, 5):
        v = psd_check(assemble_osp_matrix(n, [TestFunction(1.0, 1.0), TestFunction(1.0, 0.6)], ev))
        assert v.is_psd and v.triangular_sum >= 0


def test_psd_detects_negative():
    m = OspMatrix(3, {(1, 1): 1.0, (1, 2): 0.0, (1, 3): 3.0, (2, 1): 0.0, (2, 2): -1.0, (3, 1): 3.0})
    v = psd_check(m)
    assert not v.is_psd
    assert v.min_eigenvalue == pytest.approx(-1.0)
    assert v.min_eigenvalue_zero_filled == pytest.approx(float(np.linalg.eigvalsh(m.dense()).min()))
