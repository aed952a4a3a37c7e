import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uentropy import (
    expectation,
    l1_distance,
    l1_to_uniform,
    lp_norm,
    make_density,
    make_space,
    normalize,
    point_density,
    random_density,
    uniform_density,
    uniform_space,
)
from uentropy.errors import (
    AllZero,
    BadExponent,
    EmptySpace,
    LengthMismatch,
    NegativeValue,
    NonpositiveWeight,
    NotADensity,
    NotNormalized,
    SpaceMismatch,
    ValidationError,
)

from conftest import densities, spaces


class TestMakeSpace:
    def test_uniform_pair(self):
        s = make_space([0.5, 0.5])
        assert s.n == 2
        np.testing.assert_array_equal(s.weights, [0.5, 0.5])

    def test_three_atoms(self):
        s = make_space([0.2, 0.3, 0.5])
        assert abs(s.weights.sum() - 1.0) <= 1e-12

    def test_negative_weight(self):
        with pytest.raises(NonpositiveWeight):
            make_space([0.5, -0.1, 0.6])

    def test_zero_weight(self):
        with pytest.raises(NonpositiveWeight):
            make_space([1.0, 0.0])

    def test_empty(self):
        with pytest.raises(EmptySpace):
            make_space([])

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            make_space([0.5, 0.6])

    def test_small_drift_renormalized(self):
        s = make_space([0.5 + 4e-10, 0.5])
        assert abs(s.weights.sum() - 1.0) <= 1e-15

    def test_immutable(self):
        s = uniform_space(3)
        with pytest.raises(ValueError):
            s.weights[0] = 0.9

    def test_errors_are_validation_errors(self):
        assert issubclass(NonpositiveWeight, ValidationError)
        assert issubclass(NonpositiveWeight, ValueError)


class TestMakeDensity:
    def test_uniform(self):
        s = uniform_space(2)
        np.testing.assert_array_equal(make_density([1, 1], s).values, [1, 1])

    def test_valid(self):
        f = make_density([1.5, 0.5], uniform_space(2))
        assert f.n == 2
        np.testing.assert_allclose(f.masses, [0.75, 0.25])

    def test_not_a_density(self):
        with pytest.raises(NotADensity):
            make_density([2, 2], uniform_space(2))

    def test_negative(self):
        with pytest.raises(NegativeValue):
            make_density([2.5, -0.5], uniform_space(2))

    def test_length(self):
        with pytest.raises(LengthMismatch):
            make_density([1, 1, 1], uniform_space(2))

    def test_support(self):
        f = make_density([2, 0], uniform_space(2))
        np.testing.assert_array_equal(f.support, [True, False])


class TestNormalize:
    def test_divide(self):
        np.testing.assert_allclose(normalize([3, 1], uniform_space(2)).values, [1.5, 0.5])

    def test_noop(self):
        np.testing.assert_allclose(normalize([1, 1], uniform_space(2)).values, [1, 1])

    def test_all_zero(self):
        with pytest.raises(AllZero):
            normalize([0, 0], uniform_space(2))

    @given(densities())
    def test_idempotent(self, f):
        g = normalize(f.values, f.space)
        np.testing.assert_allclose(normalize(g.values, g.space).values, g.values, rtol=0, atol=1e-12)


class TestDistances:
    def test_zero_self(self):
        f = make_density([1.5, 0.5], uniform_space(2))
        assert l1_distance(f, f) == 0.0

    def test_to_uniform(self):
        s = uniform_space(2)
        assert l1_distance(make_density([1.5, 0.5], s), uniform_density(s)) == pytest.approx(0.5)

    def test_disjoint(self):
        s = uniform_space(2)
        assert l1_distance(make_density([2, 0], s), make_density([0, 2], s)) == pytest.approx(2.0)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatch):
            l1_distance(uniform_density(uniform_space(2)), uniform_density(make_space([0.3, 0.7])))

    @given(spaces(), st.integers(0, 2**32 - 1))
    def test_metric(self, s, seed):
        rng = np.random.default_rng(seed)
        f, g, h = (random_density(s, rng) for _ in range(3))
        assert abs(l1_distance(f, g) - l1_distance(g, f)) <= 1e-12
        assert l1_distance(f, h) <= l1_distance(f, g) + l1_distance(g, h) + 1e-12
        assert l1_distance(f, f) <= 1e-12

    @given(densities())
    def test_bounded_by_two(self, f):
        assert l1_to_uniform(f) <= 2.0 + 1e-12
        assert l1_to_uniform(f) == pytest.approx(l1_distance(f, uniform_density(f.space)), abs=1e-14)


class TestNorms:
    def test_uniform_any_alpha(self):
        f = uniform_density(uniform_space(3))
        for a in (0.5, 1.0, 2.0, 7.0, np.inf):
            assert lp_norm(f, a) == pytest.approx(1.0, abs=1e-14)

    def test_two_norm(self):
        f = make_density([1.5, 0.5], uniform_space(2))
        assert lp_norm(f, 2) == pytest.approx(1.118033988749895, abs=1e-12)

    def test_inf_norm(self):
        assert lp_norm(make_density([1.5, 0.5], uniform_space(2)), np.inf) == 1.5

    def test_bad_exponent(self):
        with pytest.raises(BadExponent):
            lp_norm(uniform_density(uniform_space(2)), 0.0)

    def test_large_alpha_approaches_max(self, rng):
        for _ in range(100):
            s = uniform_space(int(rng.integers(1, 9)))
            f = random_density(s, rng)
            assert lp_norm(f, 64) == pytest.approx(f.values.max(), rel=0.05)


class TestExpectation:
    def test_constant(self):
        f = make_density([1.5, 0.5], uniform_space(2))
        assert expectation(f, [3.0, 3.0]) == pytest.approx(3.0)

    def test_arithmetic(self):
        f = make_density([1.5, 0.5], uniform_space(2))
        assert expectation(f, [1, 0]) == pytest.approx(0.75)

    def test_weighted(self):
        f = uniform_density(make_space([0.2, 0.8]))
        assert expectation(f, [1, 2]) == pytest.approx(1.8)


def test_point_density():
    s = make_space([0.25, 0.75])
    f = point_density(s, 1)
    np.testing.assert_allclose(f.values, [0.0, 4.0 / 3.0])


def test_random_density_bounded(rng):
    s = uniform_space(5)
    for _ in range(50):
        f = random_density(s, rng, max_value=2.0)
        assert f.values.max() <= 2.0
        assert abs(f.masses.sum() - 1) <= 1e-12
