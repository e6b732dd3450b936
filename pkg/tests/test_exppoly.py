import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expbern import (
    ExpPoly,
    NonFiniteError,
    OrderUndeterminedError,
    canonicalize,
    equivalent,
    fundamental_function,
    is_conjugate_closed,
)
from expbern.exppoly import format_complex, parse_complex

from oracles import example1_basis

ONE_MINUS_COS = ExpPoly({0: [1], 1j: [-0.5], -1j: [-0.5]})
SIN = ExpPoly({1j: [-0.5j], -1j: [0.5j]})


def random_exppoly(seed, nterms=3, deg=2):
    r = np.random.default_rng(seed)
    terms = []
    for _ in range(nterms):
        mu = complex(r.uniform(-1, 1), r.uniform(-1, 1))
        terms.append((mu, r.normal(size=deg + 1) + 1j * r.normal(size=deg + 1)))
    return ExpPoly(terms)


# canonicalize / conjugate closure / equivalence


def test_canonicalize_duplicates():
    lam = canonicalize([0, 0, 1])
    assert lam.entries == ((0j, 2), (1 + 0j, 1))
    assert lam.n == 2


def test_canonicalize_distinct():
    lam = canonicalize([1j, -1j, 0])
    assert dict(lam.entries) == {1j: 1, -1j: 1, 0j: 1}


def test_canonicalize_centroid():
    lam = canonicalize([1.0, 1.0 + 1e-12])
    assert len(lam.entries) == 1
    mu, m = lam.entries[0]
    assert m == 2 and abs(mu - (1.0 + 0.5e-12)) < 1e-15


def test_canonicalize_chain_warns():
    with pytest.warns(UserWarning):
        lam = canonicalize([0.0, 0.6e-9, 1.2e-9])
    assert lam.ambiguous and lam.entries[0][1] == 3


def test_canonicalize_rejects_empty():
    with pytest.raises(ValueError):
        canonicalize([])


def test_permutation_invariance():
    assert canonicalize([1j, 0, -1j, 2]) == canonicalize([2, -1j, 1j, 0])


def test_conjugate_closed():
    assert is_conjugate_closed(canonicalize([0, 1j, -1j]))
    assert not is_conjugate_closed(canonicalize([0, 1j]))
    assert not is_conjugate_closed(canonicalize([1 + 1j, 1 + 1j, 1 - 1j]))


def test_equivalent():
    assert equivalent(canonicalize([0, 1]), canonicalize([1, 0]))
    assert not equivalent(canonicalize([0, 0]), canonicalize([0, 1]))
    assert equivalent(canonicalize([1j, -1j]), canonicalize([-1j, 1j]))


def test_max_imag_and_remove():
    lam = canonicalize([0, 0, 2j, -2j])
    assert lam.max_imag == 2
    assert lam.remove(0).multiplicity(0) == 1
    with pytest.raises(KeyError):
        lam.remove(5)


# evaluation and calculus


def test_eval_examples():
    assert abs(ONE_MINUS_COS(math.pi) - 2) < 1e-15
    assert ExpPoly.exp(1)(0.0) == 1
    phi = fundamental_function(canonicalize([0, 1, 2]))
    assert abs(phi(1.0) - (0.5 - math.e + math.e ** 2 / 2)) < 1e-12
    assert abs(phi(1.0) - 1.4762462) < 1e-7


def test_eval_vectorized_and_overflow():
    x = np.linspace(0, 1, 7)
    assert np.allclose(ONE_MINUS_COS(x), 1 - np.cos(x))
    with pytest.raises(NonFiniteError):
        ExpPoly.exp(1.0)(1000.0)


def test_derivative_examples():
    x = np.linspace(-2, 2, 9)
    assert np.allclose(ONE_MINUS_COS.derivative(1)(x), np.sin(x))
    f = ExpPoly.monomial(1, 2.0)
    assert np.allclose(f.derivative(1)(x), (1 + 2 * x) * np.exp(2 * x))
    phi = fundamental_function(canonicalize([0, 1j, -1j]))
    assert abs(phi.derivative(2)(0.0) - 1) < 1e-14
    assert ONE_MINUS_COS.derivative(0) == ONE_MINUS_COS


def test_apply_first_order():
    lam = 0.7 - 0.2j
    assert ExpPoly.exp(lam).apply_first_order(lam).is_zero()
    assert ExpPoly.monomial(1, lam).apply_first_order(lam) == ExpPoly.exp(lam)
    x = np.linspace(0, 3, 11)
    assert np.allclose(ONE_MINUS_COS.apply_first_order(0)(x), np.sin(x))


def test_multiplicity_annihilation():
    q = ExpPoly({0.5: [1.0, 2.0, 3.0]})
    assert q.apply_first_order(0.5).degree == 1


def test_modulate_examples():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(ExpPoly.exp(0).modulate(1, 0)(x), np.exp(x))
    assert np.allclose(ExpPoly.monomial(1).modulate(2, 0)(x), x * np.exp(2 * x))


def test_reparametrize_examples():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(ExpPoly.exp(1).reparametrize(2, 0)(x), np.exp(2 * x))
    assert np.allclose(ExpPoly.monomial(1).reparametrize(1, 3)(x), x + 3)
    with pytest.raises(ValueError):
        ExpPoly.exp(1).reparametrize(0, 1)


def test_taylor_derivatives():
    assert np.allclose(ONE_MINUS_COS.taylor_derivatives(0, 2), [0, 0, 1])
    assert np.allclose(ExpPoly.exp(1).taylor_derivatives(0, 3), [1, 1, 1, 1])
    assert np.allclose(ExpPoly.monomial(2).taylor_derivatives(1, 2), [1, 2, 2])


def test_zero_order_at():
    k, v = SIN.zero_order_at(0, 5)
    assert k == 1 and abs(v - 1) < 1e-14
    k, v = ONE_MINUS_COS.zero_order_at(0, 5)
    assert k == 2 and abs(v - 1) < 1e-14
    b = 1.3
    p0 = (ExpPoly({0: [1], 1j: [-0.5 * np.exp(-1j * b)], -1j: [-0.5 * np.exp(1j * b)]})) / (1 - math.cos(b))
    k, v = p0.zero_order_at(b, 5)
    assert k == 2 and abs(v - 1 / (1 - math.cos(b))) < 1e-12
    x = np.linspace(0, 2, 5)
    assert np.allclose(p0(x), example1_basis(b)[0](x))


def test_zero_order_undetermined():
    with pytest.raises(OrderUndeterminedError):
        ExpPoly.monomial(5).zero_order_at(0, 3)
    with pytest.raises(OrderUndeterminedError):
        ExpPoly().zero_order_at(0, 3)


def test_is_real_valued():
    assert ONE_MINUS_COS.is_real_valued()
    assert not ExpPoly.exp(1j).is_real_valued()


def test_in_space():
    lam = canonicalize([0, 1j, -1j])
    assert ONE_MINUS_COS.in_space(lam)
    assert not ExpPoly.monomial(1).in_space(lam)


def test_trim_and_merge():
    f = ExpPoly({1.0: [1.0, 1e-20]})
    assert f.coefficients(1.0) == (1 + 0j,)
    g = ExpPoly([(1.0, [1.0]), (1.0 + 1e-14, [2.0])])
    assert len(g.terms) == 1 and g.coefficients(1.0) == (3 + 0j,)
    assert (f - f).is_zero()


def test_text_round_trip():
    f = random_exppoly(3)
    assert ExpPoly.from_text(f.to_text()) == f
    assert ExpPoly.from_text("0").is_zero()
    with pytest.raises(ValueError):
        ExpPoly.from_text("(1,0) * x^0 * exp((1,0)*x) garbage")


def test_complex_literals():
    for text, z in [("0", 0), ("1i", 1j), ("-1i", -1j), ("i", 1j), ("-i", -1j), ("2.5-0.5i", 2.5 - 0.5j),
                    ("-1e-3", -1e-3), ("3e2+1.5e1i", 300 + 15j)]:
        assert parse_complex(text) == z
    for bad in ["1ii", "i1", "1+", "", "1 + 2i", "x"]:
        with pytest.raises(ValueError):
            parse_complex(bad)
    for z in [0, -1j, 1.25 + 3j, -0.1 - 7j, 1e-300]:
        assert parse_complex(format_complex(z)) == z


# properties

coef = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-1.5, 1.5))
def test_finite_difference(seed, x):
    f = random_exppoly(seed)
    h = 1e-5
    fd = (f(x + h) - f(x - h)) / (2 * h)
    scale = max(1.0, abs(f(x)), abs(f.derivative(1)(x)))
    assert abs(fd - f.derivative(1)(x)) <= 1e-6 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), coef, coef)
def test_modulate_round_trip(seed, cr, a):
    f = random_exppoly(seed)
    c = complex(cr, 0.3)
    g = f.modulate(c, a).modulate(-c, a)
    for (m1, c1), (m2, c2) in zip(f.terms, g.terms):
        assert abs(m1 - m2) < 1e-12
        assert np.allclose(c1, c2, rtol=1e-12, atol=1e-12 * f.max_coefficient())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.3, 3), st.floats(-2, 2))
def test_reparametrize_round_trip(seed, c, gamma):
    f = random_exppoly(seed)
    g = f.reparametrize(c, gamma).reparametrize(1 / c, -gamma / c)
    x = np.linspace(-1, 1, 7)
    assert np.allclose(g(x), f(x), rtol=1e-10, atol=1e-10 * np.max(np.abs(f(x))))


def test_pointwise_oracles():
    f = random_exppoly(11)
    assert abs(f.modulate(0.4 - 0.1j, 0.25)(0.7) - f(0.7) * np.exp((0.4 - 0.1j) * (0.7 - 0.25))) < 1e-12
    assert abs(f.reparametrize(1.5, -1)(0.3) - f(1.5 * 0.3 - 1)) < 1e-12
