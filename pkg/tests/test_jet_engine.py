import numpy as np
import pytest
from hypothesis import given, strategies as st

from szego_toolkit.core.errors import (ContextMismatchError, DegenerateDerivativeError, DivisionByZeroJetError,
                                       JetDomainError, NonConvergenceError, OrderExceededError,
                                       SingularArgumentError)
from szego_toolkit.core.field_parser import compile_field
from szego_toolkit.core.jet_engine import (Jet, compose, differentiate, evaluate_field, finite_difference_derivative,
                                           get_context, jet_arith, jet_fn, jet_lift, newton_jet_solve, unit,
                                           variables, wirtinger, zero)

BASE = (0.3 + 0.2j,)
coordinates = st.complex_numbers(max_magnitude=0.8, allow_nan=False, allow_infinity=False)


def test_polynomial_jets_are_exact():
    b = BASE[0]
    jet = jet_lift(lambda zs, zbs: zs[0] * zs[0] * zbs[0] + 3 * zs[0], BASE)
    assert wirtinger(jet, (0,), (0,)) == pytest.approx(b * b * b.conjugate() + 3 * b, abs=1e-15)
    assert wirtinger(jet, (1,), (0,)) == pytest.approx(2 * b * b.conjugate() + 3, abs=1e-14)
    assert wirtinger(jet, (1,), (1,)) == pytest.approx(2 * b, abs=1e-14)
    assert wirtinger(jet, (2,), (1,)) == pytest.approx(2.0, abs=1e-14)
    assert wirtinger(jet, (3,), (0,)) == 0


@given(coordinates, coordinates)
def test_product_rule_on_two_variables(a, b):
    context = get_context(2, 4)
    zs, zbs = variables(context, (a, b))
    product = jet_arith(zs[0] * zbs[1], zs[1] + 1.0, 'mul')
    # d_{z1} d_{zb2} (z1 zb2 (z2 + 1)) = z2 + 1
    assert wirtinger(product, (1, 0), (0, 1)) == pytest.approx(b + 1.0, abs=1e-13)


@given(coordinates)
def test_log_inverts_exp(a):
    context = get_context(1, 6)
    zs, zbs = variables(context, (a,))
    f = zs[0] * zbs[0] + 0.5 * zs[0]
    np.testing.assert_allclose(jet_fn(jet_fn(f, 'exp'), 'log').coeffs, f.coeffs, atol=1e-12)


def test_sqrt_squares_back():
    context = get_context(1, 6)
    zs, zbs = variables(context, BASE)
    f = 2.0 + zs[0] + zbs[0]
    root = jet_fn(f, 'pow', 0.5)
    np.testing.assert_allclose((root * root).coeffs, f.coeffs, atol=1e-13)


@pytest.mark.parametrize('text', [
    'log(1 + z1*zb1)',
    '1/(2 + z1 + zb1*zb1)',
    'exp(z1*zb1)*sqrt(3 + z1 + zb1)',
])
def test_jet_derivatives_match_finite_differences(text):
    compiled = compile_field(text, 1)
    jet = jet_lift(text, BASE)
    for total in range(1, 5):
        for a in range(total + 1):
            exact = wirtinger(jet, (a,), (total - a,))
            approx = finite_difference_derivative(lambda p: evaluate_field(compiled, p), BASE, (a,), (total - a,))
            assert abs(exact - approx) <= 1e-6 * max(1.0, abs(exact)), (a, total - a)


def test_derivative_lowers_valid_order():
    jet = jet_lift('log(1 + z1*zb1)', BASE, order=4)
    once = jet.derivative(0)
    assert once.valid_order == 3
    assert differentiate(jet, (1,), (1,)).valid_order == 2
    with pytest.raises(OrderExceededError):
        once.coeff((4,), (0,))
    with pytest.raises(OrderExceededError):
        differentiate(jet, (3,), (2,))


def test_conj_swaps_holomorphic_and_antiholomorphic_parts():
    jet = jet_lift(lambda zs, zbs: zs[0] * zs[0] + 2j * zbs[0], BASE)
    conj = jet.conj()
    assert wirtinger(conj, (0,), (2,)) == pytest.approx(2.0)
    assert wirtinger(conj, (1,), (0,)) == pytest.approx(-2j)


def test_singular_arguments_raise():
    context = get_context(1, 4)
    zs, _ = variables(context, (0.0,))
    with pytest.raises(SingularArgumentError):
        zs[0].log()
    with pytest.raises(DivisionByZeroJetError):
        1.0 / zs[0]
    with pytest.raises(JetDomainError):
        (zs[0] - 1.0).power(0.5)


def test_jets_from_different_contexts_do_not_mix():
    a = Jet.constant(get_context(1, 6), 1.0)
    b = Jet.constant(get_context(1, 4), 1.0)
    with pytest.raises(ContextMismatchError):
        a + b


def test_unit_and_zero_multi_indices():
    assert unit(3, 1) == (0, 1, 0)
    assert zero(2) == (0, 0)


def test_newton_solve_recovers_square_root():
    context = get_context(1, 6)
    zs, zbs = variables(context, (0.2,))
    u = newton_jet_solve(lambda u, zs_, zbs_: u * u - (1.0 + zs_[0]), 1.0, zs, zbs)
    np.testing.assert_allclose(u.coeffs, (1.0 + zs[0]).sqrt().coeffs, atol=1e-12)


def test_newton_solve_handles_systems():
    context = get_context(1, 5)
    zs, zbs = variables(context, (0.1,))

    def equation(us, zs_, zbs_):
        u, v = us
        return [u + v - zs_[0], u - v - 1.0]

    u, v = newton_jet_solve(equation, [0.0, 0.0], zs, zbs)
    np.testing.assert_allclose(u.coeffs, (0.5 * (zs[0] + 1.0)).coeffs, atol=1e-12)
    np.testing.assert_allclose(v.coeffs, (0.5 * (zs[0] - 1.0)).coeffs, atol=1e-12)


def test_newton_solve_failures():
    context = get_context(1, 4)
    zs, zbs = variables(context, (0.0,))
    with pytest.raises(DegenerateDerivativeError):
        newton_jet_solve(lambda u, zs_, zbs_: u * u - zs_[0], 0.0, zs, zbs)
    with pytest.raises(NonConvergenceError):
        newton_jet_solve(lambda u, zs_, zbs_: u * u + 1.0, 0.5, zs, zbs, max_iterations=5)


def test_implicit_quadratic_root():
    # b^2 + s b - 1 = 0 with b(0) = 1 has b'(0) = -1/2
    context = get_context(1, 4)
    zs, zbs = variables(context, (0.0,))
    b = newton_jet_solve(lambda u, zs_, zbs_: u * u + zs_[0] * u - 1.0, 1.0, zs, zbs)
    assert b.value == pytest.approx(1.0)
    assert wirtinger(b, (1,), (0,)) == pytest.approx(-0.5)
    assert wirtinger(b.log(), (1,), (0,)) == pytest.approx(-0.5)


def test_hopf_potential_against_finite_differences():
    compiled = compile_field('0.5*log(1 + z1*zb1)', 1)
    jet = jet_lift(compiled, (0.3,))
    approx = finite_difference_derivative(lambda p: evaluate_field(compiled, p), (0.3,), (1,), (1,))
    assert abs(wirtinger(jet, (1,), (1,)) - approx) <= 1e-8
    assert wirtinger(jet, (1,), (1,)) == pytest.approx(0.5 / 1.09 ** 2)


def test_compose_matches_direct_substitution():
    context = get_context(1, 5)
    ws, wbs = variables(context, (0.2 - 0.1j,))
    us = [ws[0] + 0.5 * ws[0] * ws[0]]
    ubs = [us[0].conj()]
    own_zs, own_zbs = variables(context, (us[0].value,))
    outer = (1.0 + own_zs[0] * own_zbs[0]).log()
    direct = (1.0 + us[0] * ubs[0]).log()
    np.testing.assert_allclose(compose(outer, us, ubs).coeffs, direct.coeffs, atol=1e-13)


def test_compose_carries_derivatives_of_the_outer_field():
    # d/dz (z zb^2) = zb^2; differentiating before substituting must not see the inner map
    context = get_context(1, 5)
    ws, wbs = variables(context, (0.3,))
    us = [ws[0] + ws[0] ** 3]
    ubs = [us[0].conj()]
    own_zs, own_zbs = variables(context, (us[0].value,))
    outer = (own_zs[0] * own_zbs[0] * own_zbs[0]).derivative(0)
    composed = compose(outer, us, ubs)
    assert composed.valid_order == 4
    expected = ubs[0] * ubs[0]
    np.testing.assert_allclose(composed.coeffs[context.degrees <= 4], expected.coeffs[context.degrees <= 4],
                               atol=1e-13)
    with pytest.raises(ContextMismatchError):
        compose(outer, us + us, ubs + ubs)
