"""Tests for the exact step kernel on S_n: enumeration, kernel powers, the
telescoped pair function, and the exact variance/mean identities."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haarconc.groups import Permutation, StepDistribution, compose, invert
from haarconc.kernel import (
    ExactKernel,
    FiniteGroupTable,
    apply_kernel_power,
    build_exact_kernel,
    check_identities,
    lehmer_rank,
    lehmer_unrank,
    pair_function,
    pair_potential,
    solve_potential,
    step_seminorm,
)
from haarconc.mixing import exact_tv_curve


def lazy_kernel(n: int) -> ExactKernel:
    return build_exact_kernel(n, StepDistribution.lazy_transposition(n))


def centered(rng: np.random.Generator, size: int) -> np.ndarray:
    f = rng.standard_normal(size)
    return f - f.mean()


def pair_value_oracle(kernel: ExactKernel, f: np.ndarray, ix: int, iy: int) -> float:
    """Independent route: the minimum-norm solution of (I - P) h = f is
    mean-zero (P is symmetric and f is centered), and the pair value is a
    difference of h entries, which is shift-invariant anyway."""
    size = kernel.size
    h, *_ = np.linalg.lstsq(np.eye(size) - kernel.matrix, f, rcond=None)
    return float(h[ix] - h[iy])


class TestLehmer:
    def test_rank_matches_lexicographic_enumeration(self):
        for n in (1, 2, 3, 4):
            for rank, images in enumerate(itertools.permutations(range(n))):
                assert lehmer_rank(images) == rank
                assert lehmer_unrank(rank, n) == images

    def test_roundtrip_at_degree_six(self):
        for rank in range(0, math.factorial(6), 37):
            assert lehmer_rank(lehmer_unrank(rank, 6)) == rank


class TestFiniteGroupTable:
    def test_size_and_identity(self):
        table = FiniteGroupTable(4)
        assert table.size == 24
        assert table.identity_index == 0
        assert table.unrank(0) == Permutation.identity(4)

    def test_rank_unrank_roundtrip(self):
        table = FiniteGroupTable(5)
        for idx in (0, 1, 17, 119):
            assert table.rank(table.unrank(idx)) == idx

    def test_rank_rejects_wrong_degree(self):
        table = FiniteGroupTable(3)
        with pytest.raises(ValueError):
            table.rank(Permutation.identity(4))

    def test_left_action_matches_compose(self):
        table = FiniteGroupTable(4)
        g = Permutation((2, 0, 3, 1))
        action = table.left_action(g)
        for idx in range(table.size):
            assert table.unrank(int(action[idx])) == compose(g, table.unrank(idx))

    def test_left_action_is_a_bijection(self):
        table = FiniteGroupTable(4)
        action = table.left_action(Permutation.transposition(4, 1, 2))
        assert sorted(action.tolist()) == list(range(24))

    def test_fixed_point_counts(self):
        table = FiniteGroupTable(3)
        counts = table.fixed_point_counts()
        assert counts[table.identity_index] == 3
        # S_3: one identity (3 fixed), three transpositions (1), two 3-cycles (0).
        assert sorted(counts.tolist()) == [0, 0, 1, 1, 1, 3]

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            FiniteGroupTable(10)


class TestBuildExactKernel:
    def test_two_by_two_kernel(self):
        kern = lazy_kernel(2)
        assert np.array_equal(kern.matrix, np.array([[0.5, 0.5], [0.5, 0.5]]))

    def test_rows_sum_to_one(self):
        for n in (2, 3, 4, 5):
            kern = lazy_kernel(n)
            assert float(np.max(np.abs(kern.matrix.sum(axis=1) - 1.0))) <= 1e-14

    def test_exactly_symmetric(self):
        # The step law is inversion-invariant, so P(x, z) and P(z, x) are the
        # same stored float; symmetry must hold bit for bit.
        for n in (2, 3, 4, 5):
            kern = lazy_kernel(n)
            assert np.array_equal(kern.matrix, kern.matrix.T)

    def test_entries_match_step_masses(self):
        kern = lazy_kernel(3)
        table = kern.table
        masses = {perm: mass for perm, mass in kern.step.support()}
        for ix in range(table.size):
            x = table.unrank(ix)
            for iz in range(table.size):
                z = table.unrank(iz)
                y = compose(z, invert(x))
                expected = float(masses.get(y, 0))
                assert kern.matrix[ix, iz] == expected

    def test_rejects_reflection_step(self):
        with pytest.raises(ValueError):
            build_exact_kernel(3, StepDistribution.unitary_reflection(3))

    def test_rejects_degree_mismatch(self):
        with pytest.raises(ValueError):
            build_exact_kernel(4, StepDistribution.lazy_transposition(3))

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            build_exact_kernel(8, StepDistribution.lazy_transposition(8))


class TestApplyKernelPower:
    def test_zeroth_power_is_identity(self):
        kern = lazy_kernel(3)
        f = np.arange(6, dtype=float)
        assert np.array_equal(apply_kernel_power(kern, f, 0), f)

    def test_constants_are_fixed_points(self):
        kern = lazy_kernel(4)
        f = np.full(24, 2.5)
        for k in (1, 3, 7):
            assert np.max(np.abs(apply_kernel_power(kern, f, k) - 2.5)) <= 1e-13

    def test_identity_indicator_one_step(self):
        kern = lazy_kernel(3)
        f = np.zeros(6)
        f[kern.table.identity_index] = 1.0
        out = apply_kernel_power(kern, f, 1)
        assert out[kern.table.identity_index] == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_length_mismatch(self):
        kern = lazy_kernel(3)
        with pytest.raises(ValueError):
            apply_kernel_power(kern, np.zeros(5), 1)

    def test_negative_power(self):
        kern = lazy_kernel(3)
        with pytest.raises(ValueError):
            apply_kernel_power(kern, np.zeros(6), -1)


class TestPairFunction:
    def test_same_point_is_zero(self):
        kern = lazy_kernel(3)
        rng = np.random.default_rng(0)
        f = centered(rng, 6)
        assert pair_function(kern, f, 2, 2) == 0.0

    def test_antisymmetry(self):
        kern = lazy_kernel(4)
        rng = np.random.default_rng(1)
        f = centered(rng, 24)
        forward = pair_function(kern, f, 3, 17)
        backward = pair_function(kern, f, 17, 3)
        assert abs(forward + backward) <= 1e-12

    def test_accepts_permutations(self):
        kern = lazy_kernel(3)
        rng = np.random.default_rng(2)
        f = centered(rng, 6)
        x = Permutation((1, 0, 2))
        y = Permutation((2, 1, 0))
        by_perm = pair_function(kern, f, x, y)
        by_index = pair_function(kern, f, kern.table.rank(x), kern.table.rank(y))
        assert by_perm == by_index

    def test_requires_centered_input(self):
        kern = lazy_kernel(3)
        with pytest.raises(ValueError):
            pair_function(kern, np.ones(6), 0, 1)

    def test_matches_least_squares_oracle(self):
        kern = lazy_kernel(4)
        rng = np.random.default_rng(3)
        for _ in range(5):
            f = centered(rng, 24)
            ix, iy = rng.integers(0, 24, size=2)
            got = pair_function(kern, f, int(ix), int(iy), eps=1e-13)
            want = pair_value_oracle(kern, f, int(ix), int(iy))
            assert abs(got - want) <= 1e-9

    def test_potential_routes_agree(self):
        kern = lazy_kernel(4)
        rng = np.random.default_rng(4)
        f = centered(rng, 24)
        series = pair_potential(kern, f, eps=1e-13)
        solved = solve_potential(kern, f)
        diff = series - solved
        # Potentials may differ by an additive constant; differences may not.
        diff -= diff.mean()
        assert float(np.max(np.abs(diff))) <= 1e-10


class TestCheckIdentities:
    def test_identity_indicator_on_s3(self):
        kern = lazy_kernel(3)
        f = np.zeros(6)
        f[kern.table.identity_index] = 1.0
        f -= f.mean()
        report = check_identities(kern, f)
        assert report.conditional_mean_residual <= 1e-9
        assert report.variance_residual <= 1e-9

    def test_random_functions_on_s4(self):
        kern = lazy_kernel(4)
        rng = np.random.default_rng(5)
        for _ in range(20):
            report = check_identities(kern, centered(rng, 24))
            assert report.conditional_mean_residual <= 1e-9
            assert report.variance_residual <= 1e-9

    def test_zero_function(self):
        kern = lazy_kernel(3)
        report = check_identities(kern, np.zeros(6))
        assert report.conditional_mean_residual == 0.0
        assert report.variance_residual == 0.0

    def test_reports_truncation_eps(self):
        kern = lazy_kernel(3)
        report = check_identities(kern, np.zeros(6), eps=1e-10)
        assert report.truncation_eps == 1e-10


class TestStepSeminorm:
    def test_constant_function(self):
        kern = lazy_kernel(4)
        assert step_seminorm(kern, np.full(24, 3.0)) == 0.0

    def test_two_element_hand_value(self):
        kern = lazy_kernel(2)
        value = step_seminorm(kern, np.array([1.0, -1.0]))
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_contractivity_under_kernel_powers(self):
        rng = np.random.default_rng(6)
        for n in (3, 4, 5):
            kern = lazy_kernel(n)
            f = centered(rng, kern.size)
            base = step_seminorm(kern, f)
            for k in range(1, 6):
                assert step_seminorm(kern, apply_kernel_power(kern, f, k)) <= base + 1e-12

    def test_bounded_by_twice_sup_norm(self):
        rng = np.random.default_rng(7)
        kern = lazy_kernel(4)
        for _ in range(10):
            f = centered(rng, 24)
            assert step_seminorm(kern, f) <= 2.0 * np.max(np.abs(f)) + 1e-12


class TestStructuralIdentities:
    def test_stationary_flow_matrix_symmetric(self):
        # With the uniform stationary law, pi(x) P(x, z) symmetric reduces to
        # P itself being symmetric; assert the scaled form explicitly.
        kern = lazy_kernel(4)
        flow = kern.matrix / kern.size
        assert np.array_equal(flow, flow.T)

    def test_telescoping_sum(self):
        kern = lazy_kernel(4)
        rng = np.random.default_rng(8)
        f = centered(rng, 24)
        for n_terms in (1, 4, 9):
            total = np.zeros_like(f)
            for k in range(n_terms + 1):
                total += apply_kernel_power(kern, f, k) - apply_kernel_power(kern, f, k + 1)
            direct = f - apply_kernel_power(kern, f, n_terms + 1)
            assert float(np.max(np.abs(total - direct))) <= 1e-12

    def test_iterate_sup_norm_bounded_by_tv(self):
        # |P^k f| <= 2 sup|f| d_TV(walk at k, uniform) for centered f.
        n = 4
        step = StepDistribution.lazy_transposition(n)
        kern = build_exact_kernel(n, step)
        curve = exact_tv_curve(n, step, 20)
        rng = np.random.default_rng(9)
        f = centered(rng, kern.size)
        sup = float(np.max(np.abs(f)))
        for k in range(21):
            iterate = float(np.max(np.abs(apply_kernel_power(kern, f, k))))
            assert iterate <= 2.0 * sup * float(curve.values[k]) + 1e-12

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_kernel_preserves_mean(self, seed):
        kern = lazy_kernel(4)
        f = centered(np.random.default_rng(seed), 24)
        out = apply_kernel_power(kern, f, 3)
        assert abs(out.mean()) <= 1e-13
