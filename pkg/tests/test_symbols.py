import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_symbol
from qbnf.errors import CutoffMismatchError
from qbnf.symbols import (HomogeneousPolynomial, TruncatedSymbol, add, average_x, cos_mode, linear_action,
                          max_coefficient_difference, monomial, moyal_bracket_over_h, moyal_product, multiply,
                          poisson_bracket, truncate_grading, x_derivative_along, zero)

KW = dict(N_max=8, n_max=4)
A = (1.0, (1 + 5 ** 0.5) / 2)


def m(c=1.0, n=(0, 0), alpha=(0, 0), k=0, l=0, **kw):
    return monomial(c, n, alpha, k, l, **(kw or KW))


def close(a, b, tol=1e-12):
    return max_coefficient_difference(a, b) <= tol


def min_grading(sym, tol=1e-12):
    """Lowest grading carrying a coefficient above rounding level."""
    gs = [i.grading for i, c in sym if abs(c) > tol]
    return min(gs) if gs else None


# -- storage -------------------------------------------------------------------


def test_truncation_and_canonical_form():
    s = TruncatedSymbol({((0, 0), (3, 0), 0, 0): 1.0, ((5, 0), (0, 0), 0, 0): 1.0, ((0, 0), (1, 0), 0, 0): 0.0},
                        N_max=2, n_max=4)
    assert len(s) == 0
    a = TruncatedSymbol({((1, 0), (0, 0), 0, 0): 1.0, ((0, 0), (1, 0), 0, 0): 2.0}, **KW)
    b = TruncatedSymbol({((0, 0), (1, 0), 0, 0): 2.0, ((1, 0), (0, 0), 0, 0): 1.0}, **KW)
    assert a == b and hash(a) == hash(b)
    assert list(a.terms) == list(b.terms)


def test_grading_of_index():
    s = m(alpha=(2, 1), k=1, l=1)
    (idx, _), = list(s)
    assert idx.grading == 3 + 2 * 2


# -- add -----------------------------------------------------------------------


def test_add_examples():
    assert add(m(alpha=(1, 0)), m(-1.0, alpha=(1, 0))) == zero(**KW)
    assert add(m(n=(1, 0)), m(n=(1, 0))) == m(2.0, n=(1, 0))
    s = add(m(alpha=(2, 0)), m(k=1, l=1))
    assert len(s) == 2 and s.gradings() == {2, 4}


def test_cutoff_mismatch():
    with pytest.raises(CutoffMismatchError):
        add(m(), monomial(1.0, N_max=7, n_max=4))
    with pytest.raises(CutoffMismatchError):
        poisson_bracket(m(), monomial(1.0, N_max=8, n_max=3))


# -- Poisson bracket ---------------------------------------------------------------


def test_poisson_examples():
    n = (2, -1)
    got = poisson_bracket(linear_action(A, **KW), m(n=n))
    assert close(got, m(1j * (A[0] * n[0] + A[1] * n[1]), n=n))
    assert poisson_bracket(m(alpha=(2, 0)), m(n=(1, 0))) == m(2j, n=(1, 0), alpha=(1, 0))
    assert poisson_bracket(m(alpha=(1, 0)), m(alpha=(0, 1))) == zero(**KW)


# -- Moyal product -----------------------------------------------------------------


def test_moyal_affine_times_exponential():
    # Weyl quantization of xi_1 is -i h d/dx_1 + lower order; with the standard
    # sign xi_1 # e^{i x_1} = (xi_1 + h/2) e^{i x_1}
    got = moyal_product(m(alpha=(1, 0)), m(n=(1, 0)))
    assert got == m(n=(1, 0), alpha=(1, 0)) + m(0.5, n=(1, 0), l=1)
    comm = got - moyal_product(m(n=(1, 0)), m(alpha=(1, 0)))
    assert comm == m(1.0, n=(1, 0), l=1)
    assert close(moyal_bracket_over_h(m(alpha=(1, 0)), m(n=(1, 0))), m(1j, n=(1, 0)))


def test_moyal_x_independent_is_pointwise(rng):
    a = random_symbol(rng, [1, 2, 3], x_free=True, **KW)
    b = random_symbol(rng, [1, 2, 3], x_free=True, **KW)
    assert close(moyal_product(a, b), multiply(a, b), 1e-15)
    assert moyal_bracket_over_h(a, b) == zero(**KW)


def test_moyal_associative(rng):
    for _ in range(10):
        a, b, c = (random_symbol(rng, [1, 2], N_max=12, n_max=6, nterms=3) for _ in range(3))
        lhs = moyal_product(moyal_product(a, b), c)
        rhs = moyal_product(a, moyal_product(b, c))
        assert close(lhs, rhs, 1e-12)


def test_moyal_quadratic_example():
    # a quadratic in xi has no third derivative, so only Poisson survives
    assert close(moyal_bracket_over_h(m(alpha=(2, 0)), m(n=(1, 1), alpha=(0, 2))),
                 poisson_bracket(m(alpha=(2, 0)), m(n=(1, 1), alpha=(0, 2))))
    a = m(alpha=(3, 0))
    b = m(n=(1, 0))
    diff = moyal_bracket_over_h(a, b) - poisson_bracket(a, b)
    assert min_grading(diff) == 4


# -- brackets: laws ----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_bracket_laws(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_symbol(rng, [1, 2, 3], N_max=10, n_max=4) for _ in range(3))
    s, t = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
    for br in (poisson_bracket, moyal_bracket_over_h):
        assert close(br(a, b), -br(b, a))
        assert close(br(a * s + c * t, b), br(a, b) * s + br(c, b) * t)
    jac = (poisson_bracket(a, poisson_bracket(b, c)) + poisson_bracket(b, poisson_bracket(c, a))
           + poisson_bracket(c, poisson_bracket(a, b)))
    assert jac.max_abs() <= 1e-12 * max(1.0, a.max_abs() * b.max_abs() * c.max_abs())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_grading_laws(seed, ga, gb):
    rng = np.random.default_rng(seed)
    a = random_symbol(rng, [ga], N_max=12, n_max=4)
    b = random_symbol(rng, [gb], N_max=12, n_max=4)
    pb = poisson_bracket(a, b)
    g = min_grading(pb)
    assert g is None or g >= ga + gb - 1
    g = min_grading(moyal_bracket_over_h(a, b) - pb)
    assert g is None or g >= ga + gb


def test_moyal_equals_poisson_for_affine(rng):
    # affine functions on the cotangent bundle of the torus: c0 + c . xi
    for _ in range(20):
        a = random_symbol(rng, [0, 1, 2], N_max=10, n_max=4, x_free=True)
        a = TruncatedSymbol({i: c for i, c in a if sum(i.alpha) <= 1}, 10, 4)
        b = random_symbol(rng, [2, 3, 4], N_max=10, n_max=4)
        assert close(moyal_bracket_over_h(a, b), poisson_bracket(a, b))
        assert close(moyal_bracket_over_h(b, a), poisson_bracket(b, a))


def test_x_dependent_affine_gets_corrections():
    a = m(n=(1, 0), N_max=10, n_max=4)
    b = m(alpha=(3, 0), N_max=10, n_max=4)
    diff = moyal_bracket_over_h(a, b) - poisson_bracket(a, b)
    assert diff[((1, 0), (0, 0), 0, 2)] != 0


# -- average / truncation ----------------------------------------------------------------


def test_average_x():
    assert average_x(m(n=(1, 0), alpha=(0, 1))) == zero(**KW)
    s = m(alpha=(2, 0)) + cos_mode((1, 0), k=1, **KW)
    assert average_x(s) == m(alpha=(2, 0))
    x_free = m(alpha=(1, 1)) + m(k=1)
    assert average_x(x_free) == x_free


def test_average_is_projection_and_kills_transport(rng):
    G = random_symbol(rng, [2, 3, 4], **KW)
    assert average_x(average_x(G)) == average_x(G)
    assert average_x(poisson_bracket(linear_action(A, **KW), G)) == zero(**KW)
    # the transport operator a . d/dx agrees with the bracket
    assert close(poisson_bracket(linear_action(A, **KW), G), x_derivative_along(G, A))


def test_truncate_grading():
    assert truncate_grading(m(alpha=(3, 0)), 2) == zero(**KW)
    s = linear_action(A, **KW) + m(k=1)
    assert truncate_grading(s, 1) == linear_action(A, **KW)
    assert truncate_grading(truncate_grading(s, 3), 3) == truncate_grading(s, 3)


def test_fourier_cutoff_exact_within_half(rng):
    a = random_symbol(rng, [1, 2], N_max=8, n_max=2, modes=1)
    b = random_symbol(rng, [1, 2], N_max=8, n_max=2, modes=1)
    small = moyal_product(a, b)
    big = moyal_product(a.with_cutoffs(n_max=6), b.with_cutoffs(n_max=6))
    assert small == big.with_cutoffs(n_max=2)
    assert small.max_mode() <= 2


# -- homogeneous polynomials ---------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.floats(-3, 3), st.integers(0, 2 ** 32 - 1))
def test_homogeneous_scaling(j, t, seed):
    rng = np.random.default_rng(seed)
    p = HomogeneousPolynomial(j, tuple(complex(*rng.normal(size=2)) for _ in range(j + 1)))
    xi = rng.normal(size=(5, 2))
    assert np.allclose(p(t * xi), t ** j * p(xi), rtol=1e-12, atol=1e-12)


def test_homogeneous_basis_order():
    p = HomogeneousPolynomial(2, (3.0, -1.0, 0.0))
    assert p(np.array([[2.0, 5.0]]))[0] == 3 * 4 - 10


# -- serialization ---------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False, width=64),
                          st.floats(allow_nan=False, allow_infinity=False, width=64)), min_size=1, max_size=6),
       st.integers(0, 2 ** 32 - 1))
def test_symbol_json_round_trip_bit_exact(coeffs, seed):
    rng = np.random.default_rng(seed)
    terms = {}
    for re, im in coeffs:
        n = tuple(int(v) for v in rng.integers(-2, 3, 2))
        alpha = tuple(int(v) for v in rng.integers(0, 3, 2))
        terms[(n, alpha, int(rng.integers(0, 2)), int(rng.integers(0, 2)))] = complex(re, im)
    s = TruncatedSymbol(terms, 10, 3)
    back = TruncatedSymbol.loads(s.dumps())
    assert back == s
    assert all(back[i] == c for i, c in s)
    assert json.loads(s.dumps())["N_max"] == 10


def test_polynomial_json_round_trip():
    p = HomogeneousPolynomial(2, (0.1 + 0.2j, 1 / 3, -7e-300j))
    assert HomogeneousPolynomial.from_json(2, json.loads(json.dumps(p.to_json()))) == p
