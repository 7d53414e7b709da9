import math

import numpy as np
import pytest

from _helpers import literal_union_expectation
from multiwalk import (
    AssumptionViolationError,
    BadVertexError,
    Coupling,
    FixedPoints,
    IIDProduct,
    NegativeTimeError,
    ParityViolationError,
    SharedPoint,
    TooLargeError,
    brute_force_distribution,
    brute_force_oracle,
    expected_range_single,
    expected_union,
    expected_union_coupled,
    expected_union_product,
    expected_union_star,
    generate_complete,
    generate_cycle,
    generate_gnp,
    generate_path,
    grounded,
    kernel_from_network,
    make_continuous,
    make_lazy,
    moment_inequality_check,
    point_mass,
    spectral,
    survival_continuous,
    survival_power,
    survival_probability,
    uniform_measure,
)
from multiwalk.survival import _uniformized_row_sums


@pytest.fixture
def k2():
    return kernel_from_network(generate_path(2))


@pytest.fixture
def triangle():
    return kernel_from_network(generate_cycle(3))


class TestGrounded:
    def test_triangle(self, triangle):
        gk = grounded(triangle, 0)
        assert np.array_equal(gk.qhat, [[0, 0.5], [0.5, 0]])
        assert list(gk.vertices) == [1, 2]

    def test_k2(self, k2):
        assert np.array_equal(grounded(k2, 1).qhat, [[0.0]])

    def test_lazy_k2(self, k2):
        assert np.array_equal(grounded(make_lazy(k2), 1).qhat, [[0.5]])

    def test_bad_vertex(self, triangle):
        with pytest.raises(BadVertexError):
            grounded(triangle, 3)

    def test_row_deficit(self, triangle):
        gk = grounded(triangle, 0)
        sums = gk.qhat.sum(axis=1)
        assert np.all(sums <= 1.0) and np.any(sums < 1.0)


class TestSurvivalPower:
    def test_lazy_k2_three_steps(self, k2):
        gk = grounded(make_lazy(k2), 1)
        assert survival_power(gk, 0, 3) == pytest.approx(1 / 8, abs=1e-15)

    def test_triangle_stationary_one_step(self, triangle):
        gk = grounded(triangle, 0)
        assert survival_power(gk, triangle.pi, 1) == pytest.approx(1 / 3, abs=1e-15)

    def test_time_zero(self, triangle):
        gk = grounded(triangle, 0)
        nu = np.array([0.2, 0.3, 0.5])
        assert survival_power(gk, nu, 0) == pytest.approx(1 - nu[0], abs=1e-15)

    def test_point_mass_on_target(self, triangle):
        gk = grounded(triangle, 0)
        for t in (0, 1, 5):
            assert survival_power(gk, 0, t) == 0.0

    def test_negative_time(self, triangle):
        with pytest.raises(NegativeTimeError):
            survival_power(grounded(triangle, 0), 1, -1)

    def test_mass_on_target_identity(self, triangle):
        # P_nu(tau>t) = sum_{x != y} nu(x) P_x(tau>t)
        gk = grounded(triangle, 0)
        nu = np.array([0.4, 0.5, 0.1])
        direct = survival_power(gk, nu, 2)
        parts = sum(nu[x] * survival_power(gk, x, 2) for x in (1, 2))
        assert direct == pytest.approx(parts, abs=1e-15)

    @pytest.mark.parametrize("variant", ["plain", "lazy"])
    def test_nonincreasing_in_time(self, variant):
        net = generate_gnp(6, 0.5, 2)
        ker = kernel_from_network(net)
        if variant == "lazy":
            ker = make_lazy(ker)
        gk = grounded(ker, 3)
        vals = [survival_power(gk, ker.pi, t) for t in range(12)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestSurvivalContinuous:
    def test_k2_exponential(self, k2):
        gk = grounded(make_continuous(k2), 1)
        assert survival_continuous(gk, 0, 1.0) == pytest.approx(
            math.exp(-1), abs=1e-12
        )
        assert survival_continuous(gk, 0, 2.5) == pytest.approx(
            math.exp(-2.5), abs=1e-12
        )

    def test_time_zero(self, triangle):
        gk = grounded(make_continuous(triangle), 0)
        nu = np.array([0.25, 0.25, 0.5])
        assert survival_continuous(gk, nu, 0.0) == pytest.approx(0.75, abs=1e-15)

    def test_truncation_self_consistency(self, triangle):
        # doubling the series depth moves the value by < 1e-10
        ct = make_continuous(triangle)
        gk = grounded(ct, 0)
        times = np.array([7.3])
        from multiwalk.survival import _poisson_depth

        depth = _poisson_depth(times)
        base = _uniformized_row_sums(gk.qhat, times, depth=depth)
        deep = _uniformized_row_sums(gk.qhat, times, depth=2 * depth)
        assert np.max(np.abs(base - deep)) < 1e-10

    def test_wrong_variant(self, triangle):
        with pytest.raises(AssumptionViolationError):
            survival_continuous(grounded(triangle, 0), 1, 1.0)
        with pytest.raises(AssumptionViolationError):
            survival_power(grounded(make_continuous(triangle), 0), 1, 1)


class TestSpectral:
    def test_lazy_k2_single_mode(self, k2):
        sd = spectral(make_lazy(k2), 1)
        assert sd.lambdas == pytest.approx([0.5], abs=1e-12)
        assert sd.alphas == pytest.approx([0.5], abs=1e-12)
        for t in range(6):
            assert sd.stationary_survival(t) == pytest.approx(
                0.5 * 0.5**t, abs=1e-12
            )

    @pytest.mark.parametrize(
        "net",
        [generate_path(3), generate_cycle(5), generate_gnp(7, 0.5, 8)],
        ids=lambda n: n.name,
    )
    def test_weights_sum_to_vacancy(self, net):
        ker = kernel_from_network(net)
        for y in range(ker.n):
            sd = spectral(ker, y)
            assert sd.alphas.sum() == pytest.approx(1 - ker.pi[y], abs=1e-9)

    def test_cross_engine_triangle(self, triangle):
        sd = spectral(triangle, 0)
        gk = grounded(triangle, 0)
        assert sd.stationary_survival(1) == pytest.approx(
            survival_power(gk, triangle.pi, 1), abs=1e-10
        )

    def test_lazy_eigenvalues_nonnegative(self):
        for net in [generate_path(4), generate_cycle(4), generate_complete(5)]:
            lazy = make_lazy(kernel_from_network(net))
            for y in range(lazy.n):
                assert np.all(spectral(lazy, y).lambdas >= -1e-9)

    def test_continuous_decay_factors_positive(self, triangle):
        ct = make_continuous(triangle)
        for y in range(3):
            sd = spectral(ct, y)
            assert np.all(sd.lambdas > 0)
            assert np.all(sd.lambdas <= 1.0 + 1e-12)

    def test_continuous_matches_uniformization(self, triangle):
        ct = make_continuous(triangle)
        sd = spectral(ct, 2)
        gk = grounded(ct, 2)
        for t in (0.0, 0.5, 1.0, 3.7, 10.0):
            assert sd.stationary_survival(t) == pytest.approx(
                survival_continuous(gk, ct.pi, t), abs=1e-10
            )

    def test_rejects_irreversible(self, triangle):
        from multiwalk.chain import TransitionKernel

        P = np.array([[0, 0.9, 0.1], [0.1, 0, 0.9], [0.9, 0.1, 0]])
        fake = TransitionKernel(n=3, P=P, variant="plain", pi=np.full(3, 1 / 3))
        with pytest.raises(AssumptionViolationError):
            spectral(fake, 0)


class TestMomentInequality:
    def test_lazy_k2_single_atom_equality(self, k2):
        sd = spectral(make_lazy(k2), 1)
        lhs, rhs = moment_inequality_check(sd, 1, 2)
        assert lhs == pytest.approx(1 / 8, abs=1e-12)
        assert rhs == pytest.approx(1 / 8, abs=1e-12)

    def test_zero_times(self, triangle):
        sd = spectral(triangle, 0)
        lhs, rhs = moment_inequality_check(sd, 0, 0)
        assert lhs == pytest.approx(1.0, abs=1e-12)
        assert rhs == pytest.approx(1.0, abs=1e-12)

    def test_triangle_even_pair(self, triangle):
        sd = spectral(triangle, 0)
        lhs, rhs = moment_inequality_check(sd, 2, 2)
        assert lhs <= rhs + 1e-9
        # cross-check against direct survival products
        gk = grounded(triangle, 0)
        s2 = survival_power(gk, triangle.pi, 2)
        s4 = survival_power(gk, triangle.pi, 4)
        vac = 1 - triangle.pi[0]
        assert lhs == pytest.approx((s2 / vac) ** 2, abs=1e-12)
        assert rhs == pytest.approx(s4 / vac, abs=1e-12)

    def test_plain_mixed_parity_rejected(self, triangle):
        sd = spectral(triangle, 0)
        with pytest.raises(ParityViolationError):
            moment_inequality_check(sd, 1, 2)
        # equal parity is fine
        moment_inequality_check(sd, 1, 3)

    def test_continuous_real_times(self, triangle):
        sd = spectral(make_continuous(triangle), 0)
        lhs, rhs = moment_inequality_check(sd, 1.5, 2.25)
        assert lhs <= rhs + 1e-9

    @pytest.mark.parametrize("variant", ["lazy", "continuous"])
    def test_product_inequality_suite(self, variant):
        # P_pi(tau>t) P_pi(tau>s) <= (1 - pi(y)) P_pi(tau>t+s)
        for net in [generate_path(4), generate_cycle(5), generate_gnp(6, 0.5, 4)]:
            ker = kernel_from_network(net)
            ker = make_lazy(ker) if variant == "lazy" else make_continuous(ker)
            for y in range(ker.n):
                sd = spectral(ker, y)
                vac = 1 - ker.pi[y]
                for t, s in [(1, 1), (1, 2), (2, 3), (4, 5)]:
                    lhs = sd.stationary_survival(t) * sd.stationary_survival(s)
                    rhs = vac * sd.stationary_survival(t + s)
                    assert lhs <= rhs + 1e-9


class TestExpectedValues:
    def test_range_zero_time(self, triangle):
        assert expected_range_single(triangle, triangle.pi, 0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_triangle_range(self, triangle):
        assert expected_range_single(triangle, triangle.pi, 1) == pytest.approx(
            2.0, abs=1e-12
        )
        assert expected_range_single(triangle, triangle.pi, 2) == pytest.approx(
            2.5, abs=1e-12
        )

    def test_union_product_examples(self, triangle):
        pi = triangle.pi
        assert expected_union_product(triangle, [pi, pi], (0, 0)) == pytest.approx(
            5 / 3, abs=1e-12
        )
        assert expected_union_product(triangle, [pi, pi], (1, 1)) == pytest.approx(
            8 / 3, abs=1e-12
        )

    def test_union_product_k1_reduction(self):
        p3 = kernel_from_network(generate_path(3))
        a = expected_union_product(p3, [p3.pi], (4,))
        b = expected_range_single(p3, p3.pi, 4)
        assert a == pytest.approx(b, abs=1e-14)

    def test_union_star_examples(self, triangle):
        assert expected_union_star(triangle, triangle.pi, (1, 1)) == pytest.approx(
            5 / 2, abs=1e-12
        )
        # k=1 star equals product
        a = expected_union_star(triangle, triangle.pi, (2,))
        b = expected_union_product(triangle, [triangle.pi], (2,))
        assert a == pytest.approx(b, abs=1e-14)

    def test_star_point_mass_degenerate(self, triangle):
        delta = point_mass(3, 1)
        a = expected_union_star(triangle, delta, (2, 1))
        b = expected_union_product(triangle, [delta, delta], (2, 1))
        assert a == pytest.approx(b, abs=1e-14)

    def test_coupled_product_of_deltas(self, triangle):
        table = np.zeros((3, 3))
        table[0, 2] = 1.0
        a = expected_union_coupled(triangle, table, (1, 2))
        b = expected_union_product(
            triangle, [point_mass(3, 0), point_mass(3, 2)], (1, 2)
        )
        assert a == pytest.approx(b, abs=1e-14)

    def test_coupled_diagonal_equals_star(self, k2):
        lazy = make_lazy(k2)
        table = np.diag(lazy.pi)
        a = expected_union_coupled(lazy, table, (2, 3))
        b = expected_union_star(lazy, lazy.pi, (2, 3))
        assert a == pytest.approx(b, abs=1e-14)

    def test_coupled_independent_product(self, triangle):
        pi = triangle.pi
        table = np.outer(pi, pi)
        assert expected_union_coupled(triangle, table, (1, 1)) == pytest.approx(
            8 / 3, abs=1e-12
        )

    def test_dispatcher_matches_components(self, triangle):
        pi = triangle.pi
        uni = uniform_measure(3)
        assert expected_union(triangle, IIDProduct(pi, uni), (1, 2)) == pytest.approx(
            expected_union_product(triangle, [pi, uni], (1, 2)), abs=1e-14
        )
        assert expected_union(triangle, SharedPoint(pi), (1, 2)) == pytest.approx(
            expected_union_star(triangle, pi, (1, 2)), abs=1e-14
        )
        assert expected_union(triangle, FixedPoints(0, 1), (1, 2)) == pytest.approx(
            expected_union_product(
                triangle, [point_mass(3, 0), point_mass(3, 1)], (1, 2)
            ),
            abs=1e-14,
        )

    def test_range_bounds(self):
        net = generate_gnp(6, 0.5, 7)
        ker = make_lazy(kernel_from_network(net))
        for t in (0, 1, 3, 7):
            val = expected_range_single(ker, ker.pi, t)
            assert 1.0 - 1e-12 <= val <= min(ker.n, 1 + t) + 1e-12
        val = expected_union_product(ker, [ker.pi] * 2, (2, 3))
        assert 1.0 <= val <= min(ker.n, 2 + 5) + 1e-12

    def test_continuous_expected_values(self, k2):
        ct = make_continuous(k2)
        # from a point: nothing to hit at the start vertex, e^{-t} to miss the other
        val = expected_range_single(ct, point_mass(2, 0), 1.0)
        assert val == pytest.approx(2 - math.exp(-1), abs=1e-12)


class TestBruteForceOracle:
    def test_triangle_single_walk(self, triangle):
        assert brute_force_oracle(
            triangle, IIDProduct(triangle.pi), (2,)
        ) == pytest.approx(2.5, abs=1e-12)

    def test_k2_lazy_coin(self, k2):
        lazy = make_lazy(k2)
        assert brute_force_oracle(lazy, FixedPoints(0), (1,)) == pytest.approx(
            1.5, abs=1e-15
        )

    def test_two_walkers_zero_time(self, triangle):
        val = brute_force_oracle(
            triangle, IIDProduct(uniform_measure(3), uniform_measure(3)), (0, 0)
        )
        assert val == pytest.approx(5 / 3, abs=1e-12)

    def test_size_gates(self, triangle):
        big = kernel_from_network(generate_cycle(7))
        with pytest.raises(TooLargeError):
            brute_force_oracle(big, IIDProduct(big.pi), (1,))
        with pytest.raises(TooLargeError):
            brute_force_oracle(triangle, IIDProduct(*[triangle.pi] * 3), (4, 4, 4))
        with pytest.raises(TooLargeError):
            brute_force_oracle(
                make_continuous(triangle), IIDProduct(triangle.pi), (1,)
            )

    @pytest.mark.parametrize(
        "scheme_kind,ts",
        [
            ("iid", (1, 2)),
            ("shared", (2, 1)),
            ("fixed", (2, 2)),
            ("coupling", (1, 1)),
        ],
    )
    def test_against_literal_enumeration(self, triangle, scheme_kind, ts):
        lazy = make_lazy(triangle)
        pi = lazy.pi
        if scheme_kind == "iid":
            scheme = IIDProduct(pi, uniform_measure(3))
        elif scheme_kind == "shared":
            scheme = SharedPoint(pi)
        elif scheme_kind == "fixed":
            scheme = FixedPoints(0, 2)
        else:
            table = np.outer(pi, [0.2, 0.3, 0.5])
            scheme = Coupling(table)
        fast = brute_force_oracle(lazy, scheme, ts)
        slow = literal_union_expectation(lazy, scheme, ts)
        assert fast == pytest.approx(slow, abs=1e-12)

    def test_literal_enumeration_plain_path(self):
        p3 = kernel_from_network(generate_path(3))
        scheme = IIDProduct(p3.pi, p3.pi)
        fast = brute_force_oracle(p3, scheme, (2, 2))
        slow = literal_union_expectation(p3, scheme, (2, 2))
        assert fast == pytest.approx(slow, abs=1e-12)

    def test_distribution_consistent_with_mean(self, triangle):
        scheme = IIDProduct(triangle.pi, triangle.pi)
        sizes, probs = brute_force_distribution(triangle, scheme, (1, 1))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        mean = float(sizes @ probs)
        assert mean == pytest.approx(brute_force_oracle(triangle, scheme, (1, 1)), abs=1e-12)


class TestSurvivalProbabilityFrontDoor:
    def test_dispatches_by_variant(self, k2):
        assert survival_probability(k2, 0, 1, 1) == 0.0  # forced hit
        lazy = make_lazy(k2)
        assert survival_probability(lazy, 0, 1, 3) == pytest.approx(1 / 8)
        ct = make_continuous(k2)
        assert survival_probability(ct, 0, 1, 1.0) == pytest.approx(math.exp(-1))
