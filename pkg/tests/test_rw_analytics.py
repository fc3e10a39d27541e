"""Tests for spectral radii and ruin-chain generating functions."""

import math

import numpy as np
import pytest

from frogsim.enums import Side
from frogsim.errors import ConvergenceRadiusError, DivergenceError, DomainError, NonConvergenceError
from frogsim.gw_trees import ExplicitTree
from frogsim.rw_analytics import (
    RuinChainSpec,
    ball_kernel,
    expected_frozen,
    fapprox_lower,
    first_visit_gf_closed,
    first_visit_gf_exact,
    first_visit_gf_series,
    isoperimetric_ratio,
    rho_ball_homogeneous,
    rho_homogeneous,
    rho_subdivision,
    rho_tree_lower_bounds,
    ruin_interior_kernel,
    ruin_radius,
    spectral_radius_finite,
)
from tests.helpers import full_binary, tree_with_stretches


class TestHomogeneous:
    def test_t5(self):
        assert rho_homogeneous(4) == pytest.approx(0.8)

    @pytest.mark.parametrize("d", [2, 3, 9, 40])
    def test_formula(self, d):
        assert rho_homogeneous(d) == pytest.approx(2 * math.sqrt(d) / (d + 1))

    def test_needs_branching(self):
        with pytest.raises(DomainError):
            rho_homogeneous(1)

    def test_subdivision_by_one_is_identity(self):
        assert rho_subdivision(0.8, 1) == pytest.approx(0.8)

    def test_subdivision_by_two(self):
        assert rho_subdivision(0.8, 2) == pytest.approx(math.sqrt(0.9))

    def test_subdivision_increases_rho(self):
        values = [rho_subdivision(0.8, n) for n in range(1, 11)]
        assert values == sorted(values)
        assert values[-1] < 1.0

    @pytest.mark.parametrize("rho", [0.1, 0.5, 0.8, 0.99])
    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("m", range(1, 9))
    def test_subdivisions_compose(self, rho, n, m):
        """Subdividing by N and then by M is subdividing by NM."""
        expected = math.cos(math.acos(rho) / (n * m))
        assert rho_subdivision(rho_subdivision(rho, n), m) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("rho,n", [(0.0, 2), (1.0, 2), (0.8, 0)])
    def test_subdivision_domain(self, rho, n):
        with pytest.raises(DomainError):
            rho_subdivision(rho, n)


class TestRuinChainSpec:
    def test_radius(self):
        assert ruin_radius(2) == math.inf
        assert ruin_radius(4) == pytest.approx(math.sqrt(2))

    def test_z_below_one(self):
        with pytest.raises(DomainError):
            RuinChainSpec(n=4, z=0.9)

    def test_z_beyond_the_radius(self):
        with pytest.raises(ConvergenceRadiusError):
            RuinChainSpec(n=4, z=1.5)

    def test_from_phi(self):
        spec = RuinChainSpec.from_phi(6, 0.3)
        assert spec.phi == pytest.approx(0.3)
        assert spec.z == pytest.approx(1 / math.cos(0.3))


class TestFirstVisit:
    @pytest.mark.parametrize("n", range(2, 51))
    def test_at_z_one_it_is_the_ruin_probability(self, n):
        spec = RuinChainSpec(n=n, z=1.0)
        assert first_visit_gf_closed(spec, 1, n) == pytest.approx(1 / n, abs=1e-12)
        assert first_visit_gf_closed(spec, n - 1, n) == pytest.approx((n - 1) / n, abs=1e-12)
        assert first_visit_gf_closed(spec, 1, 0) == pytest.approx((n - 1) / n, abs=1e-12)
        assert first_visit_gf_closed(spec, n - 1, 0) == pytest.approx(1 / n, abs=1e-12)
        assert first_visit_gf_exact(n, 1, n, 1.0) == pytest.approx(1 / n, abs=1e-12)

    def test_n2_is_linear_in_z(self):
        assert first_visit_gf_closed(RuinChainSpec(n=2, z=3.0), 1, 2) == pytest.approx(1.5)
        assert first_visit_gf_series(2, 1, 0, 3.0) == pytest.approx(1.5)

    @pytest.mark.parametrize("n", range(2, 13))
    def test_closed_form_matches_the_series(self, n):
        """50 points from z = 1 up to 0.99 R_N; N = 2 has no finite radius, so its grid ends at 3."""
        top = 3.0 if n == 2 else 0.99 * ruin_radius(n)
        for z in np.linspace(1.0, top, 50):
            z = float(z)
            spec = RuinChainSpec(n=n, z=z)
            # (1, 0) mirrors (N-1, N) and (N-1, 0) mirrors (1, N).
            for x in (1, n - 1):
                series = first_visit_gf_series(n, x, n, z)
                assert first_visit_gf_closed(spec, x, n) == pytest.approx(series, abs=1e-9)
                assert first_visit_gf_closed(spec, n - x, 0) == pytest.approx(series, abs=1e-9)

    @pytest.mark.parametrize("n", range(3, 9))
    def test_closed_form_matches_the_linear_solve(self, n):
        z = 0.9 * ruin_radius(n)
        spec = RuinChainSpec(n=n, z=z)
        assert first_visit_gf_closed(spec, 1, n) == pytest.approx(first_visit_gf_exact(n, 1, n, z), rel=1e-10)

    def test_near_the_pole(self):
        """Within the near-pole window the value comes from the linear solve."""
        phi = math.pi / 5 - 1e-7
        value = first_visit_gf_closed(RuinChainSpec.from_phi(5, phi), 1, 5)
        assert value == pytest.approx(math.sin(phi) / math.sin(5 * phi), rel=1e-5)
        assert value > 1e5

    def test_interior_start(self):
        assert first_visit_gf_exact(4, 2, 4, 1.0) == pytest.approx(0.5)
        assert first_visit_gf_exact(4, 2, 0, 1.0) == pytest.approx(0.5)

    def test_z_zero(self):
        assert first_visit_gf_exact(5, 4, 5, 0.0) == 0.0

    def test_reflection(self):
        assert first_visit_gf_exact(7, 2, 0, 1.05) == pytest.approx(first_visit_gf_exact(7, 5, 7, 1.05))

    def test_no_closed_form_for_interior_starts(self):
        with pytest.raises(DomainError):
            first_visit_gf_closed(RuinChainSpec(n=4, z=1.1), 2, 4)

    def test_series_diverges_past_the_radius(self):
        with pytest.raises(DivergenceError):
            first_visit_gf_series(4, 1, 4, 1.5)

    def test_exact_past_the_radius(self):
        with pytest.raises(ConvergenceRadiusError):
            first_visit_gf_exact(4, 1, 4, 1.5)

    @pytest.mark.parametrize("x,y", [(0, 4), (4, 4), (1, 2)])
    def test_bad_pairs(self, x, y):
        with pytest.raises(DomainError):
            first_visit_gf_series(4, x, y, 1.0)


class TestFapprox:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_bounds_hold(self, n):
        for phi in np.linspace(0.0, 0.5 * math.pi / (n + 1), 20):
            spec = RuinChainSpec.from_phi(n + 1, float(phi))
            near = first_visit_gf_closed(spec, n, n + 1)
            far = first_visit_gf_closed(spec, 1, n + 1)
            assert fapprox_lower(n, float(phi), Side.NEAR) <= near * (1 + 1e-12)
            assert fapprox_lower(n, float(phi), Side.FAR) <= far * (1 + 1e-12)

    def test_tight_at_phi_zero(self):
        assert fapprox_lower(3, 0.0, Side.NEAR) == pytest.approx(0.75)
        assert fapprox_lower(3, 0.0, Side.FAR) == pytest.approx(0.25)

    def test_phi_domain(self):
        with pytest.raises(DomainError):
            fapprox_lower(3, math.pi / 4, Side.NEAR)


class TestExpectedFrozen:
    def test_n2(self):
        assert expected_frozen(2, 1, {0, 2}, 1.2) == pytest.approx(1.2)

    def test_chain_spec_supplies_n_only(self):
        """A RuinChainSpec stands in for N; mu_bar, not the spec's z, is the evaluation point."""
        spec = RuinChainSpec(n=5, z=1.1)
        assert expected_frozen(spec, 2, {5}, 1.0) == pytest.approx(0.4)
        assert expected_frozen(spec, 2, {0, 5}, 1.05) == pytest.approx(expected_frozen(5, 2, {0, 5}, 1.05))

    def test_critical_mean_gives_ruin_probabilities(self):
        assert expected_frozen(5, 2, {5}, 1.0) == pytest.approx(0.4)
        assert expected_frozen(5, 2, {0, 5}, 1.0) == pytest.approx(1.0)

    def test_mean_below_one(self):
        with pytest.raises(DomainError):
            expected_frozen(4, 1, {0}, 0.9)

    def test_mean_beyond_the_radius(self):
        with pytest.raises(ConvergenceRadiusError):
            expected_frozen(4, 1, {0}, 1.5)

    def test_targets_are_ends(self):
        with pytest.raises(DomainError):
            expected_frozen(4, 1, {2}, 1.1)


class TestPowerIteration:
    @pytest.mark.parametrize("n", range(2, 11))
    def test_ruin_interior(self, n):
        estimate = spectral_radius_finite(ruin_interior_kernel(n))
        assert estimate.value == pytest.approx(math.cos(math.pi / n), abs=1e-8)
        assert estimate.size == n - 1

    def test_does_not_converge_in_one_step(self):
        with pytest.raises(NonConvergenceError) as info:
            spectral_radius_finite(ruin_interior_kernel(10), max_iter=1)
        assert info.value.iterations == 1

    @pytest.mark.parametrize(
        "kernel",
        [np.array([[0.5, -0.1], [0.1, 0.5]]), np.array([[0.7, 0.7], [0.0, 0.5]]), np.zeros((2, 3))],
    )
    def test_rejects_bad_kernels(self, kernel):
        with pytest.raises(DomainError):
            spectral_radius_finite(kernel)


class TestTreeBalls:
    def test_radial_balls_approach_rho(self):
        values = [rho_ball_homogeneous(4, r).value for r in range(1, 31)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] < 0.8
        assert 0.8 - values[-1] < 0.01

    @pytest.mark.parametrize("radius", range(1, 9))
    def test_ray(self, radius):
        """Reflected at the root, killed past the radius: cos(pi/(2r+2))."""
        value = rho_ball_homogeneous(1, radius).value
        assert value == pytest.approx(math.cos(math.pi / (2 * radius + 2)), abs=1e-8)

    def test_tree_balls_match_the_radial_chain(self, t5):
        for estimate, radius in zip(rho_tree_lower_bounds(t5, [1, 2, 3, 4]), [1, 2, 3, 4]):
            assert estimate.value == pytest.approx(rho_ball_homogeneous(4, radius).value, abs=1e-7)

    def test_ball_kernel_kills_outside(self, t5):
        kernel, vertices = ball_kernel(t5, 1)
        assert len(vertices) == 5
        rows = np.asarray(kernel.sum(axis=1)).ravel()
        assert rows[0] == pytest.approx(1.0)
        assert rows[1:] == pytest.approx([0.2] * 4)

    @pytest.mark.parametrize("length", [1, 2, 5, 10])
    def test_unbranched_stretch_bounds_the_balls(self, length):
        """Once a ball covers a stretch of L vertices its estimate is at least cos(pi/(L+1))."""
        tree = tree_with_stretches([length])
        floor = math.cos(math.pi / (length + 1))
        for estimate in rho_tree_lower_bounds(tree, [length, length + 1]):
            assert estimate.value >= floor - 1e-9

    def test_radii_must_increase(self, t5):
        with pytest.raises(DomainError):
            rho_tree_lower_bounds(t5, [2, 1])


class TestIsoperimetry:
    def test_binary_ball(self, binary):
        assert isoperimetric_ratio(binary, binary.walk(2)) == pytest.approx(0.4)

    def test_t3_ball(self):
        children = {(): ((0,), (1,), (2,))}
        for c in children[()]:
            children.update(full_binary(c, 3))
        tree = ExplicitTree(children)
        assert isoperimetric_ratio(tree, tree.walk(2)) == pytest.approx(0.4)

    @pytest.mark.parametrize("n", range(2, 7))
    def test_hanging_bush(self, n):
        """A full binary bush of n generations on one edge: 1/(2^(n+1) - 3) <= 1/(2n)."""
        children = {(): ((0,),)}
        children.update(full_binary((0,), n))
        tree = ExplicitTree(children)
        bush = [v for v in tree.vertices if v != ()]
        ratio = isoperimetric_ratio(tree, bush)
        assert ratio == pytest.approx(1 / (2 ** (n + 1) - 3))
        assert ratio <= 1 / (2 * n)

    def test_empty_subset(self, binary):
        with pytest.raises(DomainError):
            isoperimetric_ratio(binary, [])
