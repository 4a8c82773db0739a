import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsecagg.algebra import (
    FieldConfig,
    FieldElement,
    Polynomial,
    evaluate,
    interpolate_int,
    inv_int,
    is_prime,
    lagrange_interpolate,
    lagrange_weights,
    next_prime,
)
from dpsecagg.errors import DuplicateAbscissa, ModulusMismatch, NotPrime, ZeroInverse

from oracles import brute_inverse, interpolate_by_solve, poly_eval

PRIMES = [2, 3, 5, 7, 11, 13, 101, 257]


class TestPrimes:
    def test_small_primes(self):
        assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]

    def test_next_prime(self):
        assert next_prime(8) == 11
        assert next_prime(11) == 11
        assert next_prime(7 + 1) == 11

    def test_config_rejects_composite(self):
        with pytest.raises(NotPrime):
            FieldConfig(9)
        with pytest.raises(NotPrime):
            FieldConfig(1)


class TestFieldElement:
    @pytest.mark.parametrize("q", PRIMES)
    def test_inverse_matches_brute_force(self, q):
        for a in range(1, q):
            assert inv_int(a, q) == brute_inverse(a, q)

    def test_zero_has_no_inverse(self):
        with pytest.raises(ZeroInverse):
            FieldConfig(7)(0).inverse()
        with pytest.raises(ZeroInverse):
            inv_int(14, 7)

    def test_arithmetic(self):
        f = FieldConfig(11)
        a, b = f(7), f(9)
        assert a + b == 5
        assert a - b == 9
        assert a * b == 8
        assert (a / b) * b == a
        assert -a == 4
        assert a ** 10 == 1

    def test_mixed_modulus_raises(self):
        with pytest.raises(ModulusMismatch):
            FieldConfig(7)(1) + FieldConfig(11)(1)

    def test_int_coercion_and_reduction(self):
        f = FieldConfig(5)
        assert f(12) == 2
        assert 3 + f(4) == 2
        assert int(f(-1)) == 4

    @given(st.sampled_from(PRIMES), st.integers(), st.integers(), st.integers())
    def test_field_axioms(self, q, x, y, z):
        f = FieldConfig(q)
        a, b, c = f(x), f(y), f(z)
        assert a * (b + c) == a * b + a * c
        assert (a + b) + c == a + (b + c)
        if b:
            assert a / b * b == a


class TestPolynomial:
    def test_trailing_zeros_stripped(self):
        p = Polynomial(FieldConfig(7), (1, 2, 0, 7))
        assert p.coeffs == (1, 2)
        assert p.degree == 1

    def test_evaluate_matches_naive(self):
        f = FieldConfig(13)
        p = Polynomial(f, (3, 0, 5, 1))
        for x in range(13):
            assert evaluate(p, x) == poly_eval([3, 0, 5, 1], x, 13)

    def test_add_and_scale(self):
        f = FieldConfig(7)
        p = Polynomial(f, (1, 2)) + Polynomial(f, (6, 5, 3))
        assert p.coeffs == (0, 0, 3)
        assert p.scale(5).coeffs == (0, 0, 1)

    def test_lagrange_typed(self):
        f = FieldConfig(11)
        pts = [(f(1), f(4)), (f(2), f(7)), (f(5), f(0))]
        p = lagrange_interpolate(pts)
        assert all(p(x) == y for x, y in pts)


class TestInterpolation:
    def test_duplicate_abscissa(self):
        with pytest.raises(DuplicateAbscissa):
            interpolate_int([1, 12], [0, 0], 11)

    @settings(max_examples=200)
    @given(st.sampled_from([11, 13, 101, 257]), st.data())
    def test_agrees_with_linear_solve(self, q, data):
        n = data.draw(st.integers(1, min(q - 1, 9)))
        xs = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n, unique=True))
        ys = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
        assert interpolate_int(xs, ys, q) == interpolate_by_solve(xs, ys, q)

    def test_recovers_known_polynomial(self):
        rng = random.Random(3)
        q = 101
        coeffs = [rng.randrange(q) for _ in range(6)]
        xs = rng.sample(range(q), 6)
        assert interpolate_int(xs, [poly_eval(coeffs, x, q) for x in xs], q) == coeffs

    def test_weights_reproduce_interpolant(self):
        q = 13
        nodes = [1, 5, 6, 9]
        ys = [4, 0, 12, 7]
        coeffs = interpolate_int(nodes, ys, q)
        for x in range(q):
            w = lagrange_weights(nodes, x, q)
            assert sum(a * b for a, b in zip(w, ys)) % q == poly_eval(coeffs, x, q)

    def test_weights_at_node_are_indicator(self):
        assert lagrange_weights([2, 3, 4], 3, 7) == [0, 1, 0]
