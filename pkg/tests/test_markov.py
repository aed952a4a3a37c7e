import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uentropy import (
    adjoint_apply,
    apply,
    compose,
    conditional_expectation,
    expectation,
    identity_operator,
    isoelastic_utility,
    l1_distance,
    l1_to_uniform,
    log_utility,
    make_density,
    make_operator,
    make_semigroup,
    make_space,
    mixing_operator,
    permutation_operator,
    power,
    random_density,
    semigroup_apply,
    sinkhorn_random,
    uniform_density,
    uniform_space,
)
from uentropy.errors import (
    BadLambda,
    IoFailure,
    LengthMismatch,
    NotAPartition,
    NotDoublyStochastic,
    NotIntegralPreserving,
    NotMeasurePreserving,
    NotPositive,
    SpaceMismatch,
    ValidationError,
)
from uentropy.markov import load_kernel_csv, parse_cycles, save_kernel_csv, semigroup_operator

from conftest import spaces

# frozen from tests/oracles.py: full mixing semigroup, rate 1, f = [1.5, 0.5]
SEMIGROUP_FULL_MIX = {
    0.5: [1.3032653298563166, 0.6967346701436833],
    1.0: [1.1839397205857212, 0.8160602794142788],
    2.0: [1.0676676416183064, 0.9323323583816936],
    4.0: [1.009157819444367, 0.9908421805556329],
}


def all_operators(space, seed=0):
    ops = [
        identity_operator(space),
        mixing_operator(0.3, space),
        mixing_operator(1.0, space),
        sinkhorn_random(space, seed),
        conditional_expectation([list(range(0, space.n, 2)), list(range(1, space.n, 2))], space)
        if space.n > 1
        else identity_operator(space),
    ]
    if np.allclose(space.weights, space.weights[0]):
        ops.append(permutation_operator(np.roll(np.arange(space.n), 1), space))
    return ops


@pytest.fixture
def s2():
    return uniform_space(2)


@pytest.fixture
def f2(s2):
    return make_density([1.5, 0.5], s2)


class TestMakeOperator:
    def test_identity(self, f2):
        p = make_operator(np.eye(2), f2.space)
        np.testing.assert_array_equal(apply(p, f2).values, f2.values)

    def test_permutation_matrix(self):
        make_operator(np.eye(3)[[2, 0, 1]], uniform_space(3))

    def test_row_sum(self):
        m = np.array([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises((NotDoublyStochastic, NotIntegralPreserving)):
            make_operator(m, uniform_space(2))

    def test_row_only(self):
        # columns integrate correctly, rows do not
        s = make_space([0.5, 0.5])
        m = np.array([[0.9, 0.0], [0.1, 1.0]])
        with pytest.raises(NotDoublyStochastic, match="residual"):
            make_operator(m, s)

    def test_column(self):
        s = make_space([0.25, 0.75])
        m = np.array([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(NotIntegralPreserving, match="residual"):
            make_operator(m, s)

    def test_negative(self):
        with pytest.raises(NotPositive):
            make_operator(np.array([[1.1, -0.1], [-0.1, 1.1]]), uniform_space(2))

    def test_shape(self):
        with pytest.raises(LengthMismatch):
            make_operator(np.eye(3), uniform_space(2))
        with pytest.raises(LengthMismatch):
            make_operator(np.ones((2, 3)), uniform_space(2))


class TestConstructors:
    def test_mixing(self, f2, s2):
        np.testing.assert_allclose(mixing_operator(0, s2).kernel, np.eye(2))
        np.testing.assert_allclose(apply(mixing_operator(1, s2), f2).values, 1.0)
        np.testing.assert_allclose(apply(mixing_operator(0.3, s2), f2).values, [1.35, 0.65])
        with pytest.raises(BadLambda):
            mixing_operator(1.2, s2)

    def test_conditional_expectation(self):
        s = uniform_space(4)
        np.testing.assert_allclose(conditional_expectation([[0], [1], [2], [3]], s).kernel, np.eye(4))
        np.testing.assert_allclose(
            conditional_expectation([[0, 1, 2, 3]], s).kernel, mixing_operator(1, s).kernel
        )
        e = conditional_expectation([[0, 1], [2, 3]], s)
        np.testing.assert_allclose(apply(e, make_density([2, 0, 1, 1], s)).values, [1, 1, 1, 1])

    def test_conditional_expectation_weighted(self):
        s = make_space([0.1, 0.3, 0.6])
        e = conditional_expectation([[0, 2], [1]], s)
        f = make_density([4.0, 1.0, 0.5], s)
        avg = (4.0 * 0.1 + 0.5 * 0.6) / 0.7
        np.testing.assert_allclose(apply(e, f).values, [avg, 1.0, avg])

    @pytest.mark.parametrize("blocks", [[[0, 1], [1, 2, 3]], [[0, 1]], [[0, 1], [2, 5], [3]]])
    def test_not_a_partition(self, blocks):
        with pytest.raises(NotAPartition):
            conditional_expectation(blocks, uniform_space(4))

    def test_permutation(self, f2, s2):
        np.testing.assert_allclose(permutation_operator([0, 1], s2).kernel, np.eye(2))
        np.testing.assert_allclose(apply(permutation_operator([1, 0], s2), f2).values, [0.5, 1.5])
        with pytest.raises(NotMeasurePreserving):
            permutation_operator([1, 0], make_space([0.3, 0.7]))
        with pytest.raises(ValidationError):
            permutation_operator([0, 0], s2)

    def test_permutation_weighted(self):
        s = make_space([0.2, 0.2, 0.6])
        p = permutation_operator([1, 0, 2], s)
        f = make_density([3.0, 0.5, 0.5], s)
        np.testing.assert_allclose(apply(p, f).values, [0.5, 3.0, 0.5])

    def test_parse_cycles(self):
        assert parse_cycles("(1 2)", 4) == [1, 0, 2, 3]
        assert parse_cycles("(1 2 3)(4 5)", 5) == [1, 2, 0, 4, 3]
        assert parse_cycles("", 2) == [0, 1]
        with pytest.raises(ValidationError):
            parse_cycles("(1 5)", 4)
        with pytest.raises(ValidationError):
            parse_cycles("1 2", 4)

    def test_cycle_moves_value_forward(self):
        s = uniform_space(3)
        p = permutation_operator(parse_cycles("(1 2 3)", 3), s)
        f = make_density([3.0, 0.0, 0.0], s)
        np.testing.assert_allclose(apply(p, f).values, [0.0, 3.0, 0.0])

    def test_sinkhorn(self):
        s = uniform_space(3)
        a, b = sinkhorn_random(s, 7), sinkhorn_random(s, 7)
        np.testing.assert_array_equal(a.kernel, b.kernel)
        assert not np.array_equal(a.kernel, sinkhorn_random(s, 8).kernel)
        np.testing.assert_array_equal(sinkhorn_random(uniform_space(1), 3).kernel, [[1.0]])

    @given(spaces(), st.integers(0, 2**31))
    def test_sinkhorn_valid(self, s, seed):
        p = sinkhorn_random(s, seed)
        make_operator(p.kernel, s)
        assert p.kernel.min() > 0


class TestApplyAdjoint:
    def test_space_mismatch(self, f2):
        with pytest.raises(SpaceMismatch):
            apply(identity_operator(uniform_space(3)), f2)

    def test_adjoint_of_one(self, rng):
        s = make_space(rng.dirichlet(np.ones(5)))
        for p in all_operators(s):
            np.testing.assert_allclose(adjoint_apply(p, np.ones(5)), 1.0, atol=1e-12)

    def test_adjoint_permutation(self, rng):
        s = uniform_space(5)
        sigma = rng.permutation(5)
        p = permutation_operator(sigma, s)
        g = rng.normal(size=5)
        np.testing.assert_allclose(adjoint_apply(p, g), g[sigma])

    def test_pairing(self, rng):
        for i in range(100):
            n = int(rng.integers(1, 9))
            s = make_space(rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n)
            p = sinkhorn_random(s, i)
            f = random_density(s, rng)
            g = rng.normal(size=n)
            assert expectation(apply(p, f), g) == pytest.approx(expectation(f, adjoint_apply(p, g)), abs=1e-10)

    def test_fixed_point(self, rng):
        for n in (1, 2, 5, 8):
            s = make_space(rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n)
            for p in all_operators(s, n):
                np.testing.assert_allclose(apply(p, uniform_density(s)).values, 1.0, atol=1e-12)

    def test_contraction(self, rng):
        for n in (2, 4, 7):
            s = uniform_space(n)
            for p in all_operators(s, n):
                for _ in range(30):
                    f, g = random_density(s, rng), random_density(s, rng)
                    assert l1_distance(apply(p, f), apply(p, g)) <= l1_distance(f, g) + 1e-12

    @pytest.mark.parametrize("u", [log_utility(), isoelastic_utility(0.5), isoelastic_utility(-1.0)], ids=lambda u: u.name)
    def test_jensen(self, u, rng):
        for i in range(50):
            s = make_space(rng.dirichlet(np.ones(6)) * 0.9 + 0.1 / 6)
            p = sinkhorn_random(s, 100 + i)
            g = rng.uniform(0.01, 20.0, 6)
            assert np.all(adjoint_apply(p, u(g)) <= u(adjoint_apply(p, g)) + 1e-10)


class TestComposePower:
    def test_power_zero(self, s2):
        np.testing.assert_array_equal(power(mixing_operator(0.4, s2), 0).kernel, np.eye(2))

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
    def test_mixing_power(self, n):
        s = make_space([0.1, 0.2, 0.7])
        lam = 0.35
        np.testing.assert_allclose(
            power(mixing_operator(lam, s), n).kernel,
            mixing_operator(1 - (1 - lam) ** n, s).kernel,
            atol=1e-12,
        )

    def test_inverse_permutation(self, rng):
        s = uniform_space(6)
        sigma = rng.permutation(6)
        p, q = permutation_operator(sigma, s), permutation_operator(np.argsort(sigma), s)
        np.testing.assert_array_equal(compose(p, q).kernel, np.eye(6))

    def test_compose_kernel_product(self):
        s = uniform_space(4)
        p, q = sinkhorn_random(s, 1), sinkhorn_random(s, 2)
        np.testing.assert_allclose(compose(p, q).kernel, p.kernel @ q.kernel, atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(SpaceMismatch):
            compose(identity_operator(uniform_space(2)), identity_operator(uniform_space(3)))

    def test_conditional_idempotent(self, rng):
        s = make_space(rng.dirichlet(np.ones(6)))
        e = conditional_expectation([[0, 3], [1, 2, 5], [4]], s)
        np.testing.assert_allclose(power(e, 2).kernel, e.kernel, atol=1e-12)

    def test_mixing_distance(self, rng):
        for _ in range(20):
            s = make_space(rng.dirichlet(np.ones(5)) * 0.9 + 0.02)
            lam = rng.uniform()
            n = int(rng.integers(0, 30))
            f = random_density(s, rng)
            got = l1_to_uniform(apply(power(mixing_operator(lam, s), n), f))
            assert got == pytest.approx((1 - lam) ** n * l1_to_uniform(f), abs=1e-10)

    def test_long_power_stays_valid(self):
        s = uniform_space(5)
        p = power(sinkhorn_random(s, 3), 1000)
        make_operator(p.kernel, s)
        np.testing.assert_allclose(p.kernel, 0.2, atol=1e-10)


class TestSemigroup:
    def test_generator(self):
        sg = make_semigroup(sinkhorn_random(uniform_space(4), 0), 2.5)
        np.testing.assert_allclose(sg.generator.sum(axis=1), 0.0, atol=1e-10)

    def test_bad_rate(self):
        with pytest.raises(ValidationError):
            make_semigroup(identity_operator(uniform_space(2)), 0.0)

    def test_zero_time(self, f2):
        sg = make_semigroup(mixing_operator(0.5, f2.space))
        np.testing.assert_array_equal(semigroup_apply(sg, 0.0, f2).values, f2.values)

    def test_negative_time(self, f2):
        with pytest.raises(ValidationError):
            semigroup_apply(make_semigroup(mixing_operator(0.5, f2.space)), -1.0, f2)

    def test_full_mixing_frozen(self, f2):
        sg = make_semigroup(mixing_operator(1.0, f2.space), 1.0)
        for t, expect in SEMIGROUP_FULL_MIX.items():
            np.testing.assert_allclose(semigroup_apply(sg, t, f2).values, expect, atol=1e-12)

    @pytest.mark.parametrize("r", [0.1, 1.0, 3.0])
    def test_full_mixing_closed_form(self, r, rng):
        s = make_space(rng.dirichlet(np.ones(4)))
        f = random_density(s, rng)
        sg = make_semigroup(mixing_operator(1.0, s), r)
        for t in (0.0, 0.3, 2.0, 17.0, 400.0):
            e = math.exp(-r * t)
            np.testing.assert_allclose(semigroup_apply(sg, t, f).values, e * f.values + (1 - e), atol=1e-11)

    def test_semigroup_law(self, rng):
        s = uniform_space(5)
        for i in range(20):
            sg = make_semigroup(sinkhorn_random(s, i), rng.uniform(0.2, 3))
            f = random_density(s, rng)
            t, u = rng.uniform(0, 5, 2)
            a = semigroup_apply(sg, u, semigroup_apply(sg, t, f))
            b = semigroup_apply(sg, t + u, f)
            np.testing.assert_allclose(a.values, b.values, atol=1e-9)

    def test_operator_valid(self):
        s = make_space([0.1, 0.4, 0.5])
        sg = make_semigroup(sinkhorn_random(s, 5), 4.0)
        for t in (0.01, 1.0, 30.0):
            make_operator(semigroup_operator(sg, t).kernel, s)


class TestKernelCsv:
    def test_round_trip(self, tmp_path):
        s = make_space([0.1, 0.2, 0.7])
        p = sinkhorn_random(s, 11)
        path = tmp_path / "k.csv"
        save_kernel_csv(p, path)
        q = load_kernel_csv(path)
        assert q.space.same_as(s)
        np.testing.assert_allclose(q.kernel, p.kernel, atol=1e-13)
        assert path.read_text().splitlines()[0].startswith("3,")

    def test_missing(self, tmp_path):
        with pytest.raises(IoFailure):
            load_kernel_csv(tmp_path / "nope.csv")

    def test_malformed(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("2,0.5,0.5\n1,0\n")
        with pytest.raises(ValidationError):
            load_kernel_csv(path)

    def test_invalid_kernel(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("2,0.5,0.5\n0.9,0\n0.1,1\n")
        with pytest.raises(NotDoublyStochastic):
            load_kernel_csv(path)
