"""Tests for freesets module."""

import math

import numpy as np
import pytest

from pystein.divergences import relative_entropy
from pystein.errors import (
    GroupClosureError,
    PermutationClosureError,
    UnsupportedRepresentationError,
    ValidationError,
)
from pystein.freesets import (
    FrankWolfeSolver,
    GroupOrbitHull,
    PptSet,
    ProductFamily,
    VertexPolytope,
    averaged_state,
    check_permutation_closure,
    cutting_plane_relative_entropy,
    example_s1_family,
    example_s2_family,
    iid_family,
    membership,
    min_relative_entropy,
    phi_state,
    polytope_family,
    ppt_family,
    preparation_ppt_family,
    regularized_entropy_estimate,
    sigma_mu,
    symmetrized_subset,
    werner_ppt_grid_relative_entropy,
)
from pystein.qcore import DensityOperator, DimLayout, maximally_entangled, tensor
from pystein.symmetry import is_permutation_invariant

ZERO = DensityOperator.from_vector([1.0, 0.0])
ONE = DensityOperator.from_vector([0.0, 1.0])
PLUS = DensityOperator.from_vector([1.0, 1.0])


def test_named_states():
    assert np.allclose(sigma_mu(0.5).matrix, np.eye(2) / 2)
    assert sigma_mu(0.2).matrix[0, 1] == pytest.approx(-0.3)
    assert phi_state(0.25).matrix[0, 0] == pytest.approx(0.25)
    assert phi_state(0.25, -1.0).matrix[0, 1] == pytest.approx(-math.sqrt(0.25 * 0.75))


class TestVertexPolytope:
    def test_membership(self):
        hull = VertexPolytope([ZERO, ONE])
        assert hull.contains(DensityOperator.maximally_mixed(2))
        assert not hull.contains(PLUS)
        inside, distance = membership(DensityOperator(np.diag([0.3, 0.7])), hull)
        assert inside and distance == 0.0

    def test_distance(self):
        hull = VertexPolytope([ZERO, ONE])
        inside, distance = membership(PLUS, hull)
        assert not inside
        assert distance == pytest.approx(0.5, abs=1e-5)

    def test_duplicate_vertices_removed(self):
        hull = VertexPolytope([ZERO, ZERO, ONE])
        assert len(hull.vertices()) == 2

    def test_rejects_mixed_layouts(self):
        with pytest.raises(ValidationError):
            VertexPolytope([ZERO, DensityOperator.maximally_mixed(3)])
        with pytest.raises(ValidationError):
            VertexPolytope([])

    def test_linear_minimizer_picks_vertex(self):
        hull = VertexPolytope([ZERO, ONE])
        assert hull.linear_minimizer(np.diag([1.0, -1.0])).allclose(ONE)

    def test_sample_is_member(self):
        hull = VertexPolytope([ZERO, ONE, PLUS])
        assert hull.contains(hull.sample(np.random.default_rng(31)))


class TestGroupOrbitHull:
    def test_s1_orbit(self):
        hull = GroupOrbitHull(sigma_mu(0.2), [np.eye(2), np.diag([1.0, -1.0])])
        assert len(hull.vertices()) == 2
        assert hull.averaged().allclose(DensityOperator.maximally_mixed(2))
        assert hull.is_invariant(DensityOperator.maximally_mixed(2))
        assert not hull.is_invariant(PLUS)

    def test_rejects_open_group(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        z = np.diag([1.0, -1.0])
        with pytest.raises(GroupClosureError):
            GroupOrbitHull(PLUS, [np.eye(2), x, z])

    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            GroupOrbitHull(PLUS, [2 * np.eye(2)])

    def test_averaged_state_of_iid_level(self):
        level = example_s1_family(0.2).level(2)
        assert isinstance(level, ProductFamily)
        assert len(level.vertices()) == 2
        avg = averaged_state(level)
        a, b = sigma_mu(0.2), sigma_mu(0.8)
        expected = (tensor(a, a).matrix + tensor(b, b).matrix) / 2
        assert np.allclose(avg.matrix, expected)

    def test_averaged_state_needs_group(self):
        with pytest.raises(UnsupportedRepresentationError):
            averaged_state(VertexPolytope([ZERO, ONE]))


class TestPpt:
    def test_membership(self):
        S = PptSet.bipartite(2, 2)
        assert S.exact
        assert S.contains(DensityOperator.maximally_mixed([2, 2]))
        assert not S.contains(maximally_entangled(2))
        assert S.contains(S.sample(np.random.default_rng(32)))

    def test_higher_level_is_relaxation(self):
        with pytest.warns(RuntimeWarning):
            S = PptSet.bipartite(2, 2, n=2)
        assert not S.exact
        assert "outer relaxation" in S.label
        assert S.transpose_axes == (1, 3)

    def test_inconsistent_axes(self):
        with pytest.raises(ValidationError):
            PptSet(DimLayout([2, 2, 2, 2]), [1, 2], copies=2)

    def test_symmetrized_level(self):
        with pytest.warns(RuntimeWarning):
            S = PptSet.bipartite(2, 2, n=2)
            sym = symmetrized_subset(S)
        assert sym.symmetric
        member = sym.sample(np.random.default_rng(33))
        assert is_permutation_invariant(sym.site_view(member))
        assert sym.contains(member)

    def test_distance_of_ebit(self):
        S = PptSet.bipartite(2, 2)
        assert S.distance(maximally_entangled(2)) == pytest.approx(0.5, abs=1e-5)


class TestSymmetrization:
    def test_twirled_product_vertices(self):
        base = VertexPolytope([ZERO, ONE])
        level = ProductFamily(base, 2, "tensor")
        assert len(level.vertices()) == 4
        sym = symmetrized_subset(level)
        assert len(sym.vertices()) == 3
        for v in sym.vertices():
            assert is_permutation_invariant(sym.site_view(v))

    def test_not_permutation_closed(self):
        S = VertexPolytope([tensor(ZERO, ONE)], copies=2)
        with pytest.raises(PermutationClosureError):
            check_permutation_closure(S)

    def test_single_copy_is_unchanged(self):
        S = VertexPolytope([ZERO, ONE])
        assert symmetrized_subset(S) is S


class TestRelativeEntropyProjection:
    def test_polytope_minimum_on_boundary(self):
        rho = DensityOperator(np.diag([0.3, 0.7]))
        hull = VertexPolytope(
            [DensityOperator(np.diag([0.9, 0.1])), DensityOperator(np.diag([0.6, 0.4]))]
        )
        expected = 0.3 * math.log(0.3 / 0.6) + 0.7 * math.log(0.7 / 0.4)
        value, sigma = min_relative_entropy(rho, hull)
        assert value == pytest.approx(expected, abs=1e-6)
        assert sigma.matrix[0, 0] == pytest.approx(0.6, abs=1e-4)
        upper, lower = cutting_plane_relative_entropy(rho, hull)
        assert lower <= expected + 1e-6
        assert upper == pytest.approx(expected, abs=1e-5)

    @pytest.mark.parametrize("order", [(1, 0), (1, 0, 1, 0), (0, 0, 1), (1, 1, 1, 0)])
    def test_polytope_value_ignores_vertex_order(self, order):
        rho = DensityOperator(np.diag([0.3, 0.7]))
        corners = [DensityOperator(np.diag([0.9, 0.1])), DensityOperator(np.diag([0.6, 0.4]))]
        solver = FrankWolfeSolver(max_iterations=500, tolerance=1e-9)
        reference, _ = min_relative_entropy(rho, VertexPolytope(corners), solver)
        shuffled = VertexPolytope([corners[i] for i in order])
        assert len(shuffled.vertices()) == 2
        value, _ = min_relative_entropy(rho, shuffled, solver)
        assert value == pytest.approx(reference, abs=1e-7)

    def test_interior_minimum_is_zero(self):
        rho = DensityOperator(np.diag([0.4, 0.6]))
        value, _ = min_relative_entropy(rho, VertexPolytope([ZERO, ONE]))
        assert value == pytest.approx(0.0, abs=1e-6)

    def test_ebit_against_ppt(self):
        phi = maximally_entangled(2)
        grid_value, best_f = werner_ppt_grid_relative_entropy(phi)
        assert grid_value == pytest.approx(math.log(2))
        assert best_f == pytest.approx(0.5)
        solver = FrankWolfeSolver(max_iterations=200, tolerance=1e-5)
        value, sigma = min_relative_entropy(phi, PptSet.bipartite(2, 2), solver)
        assert value >= math.log(2) - 1e-6
        assert value == pytest.approx(math.log(2), abs=1e-3)
        assert PptSet.bipartite(2, 2).contains(sigma, atol=1e-6)

    def test_iid_family_is_additive(self):
        rho = DensityOperator(np.diag([0.2, 0.8]))
        sigma = DensityOperator(np.diag([0.5, 0.5]))
        estimate = regularized_entropy_estimate(rho, iid_family(sigma), 2)
        d = relative_entropy(rho, sigma)
        assert [n for n, _ in estimate] == [1, 2]
        for _, rate in estimate:
            assert rate == pytest.approx(d, abs=1e-6)


class TestFamilies:
    def test_sigma_full_must_be_full_rank(self):
        with pytest.raises(ValidationError):
            polytope_family([ZERO])

    def test_lambda(self):
        family = example_s2_family(0.3, phases=4)
        assert family.lam == pytest.approx(-math.log(0.3))
        assert not family.tensor_closed
        assert family.level(1).contains(family.sigma_full)

    def test_level_of(self):
        family = ppt_family()
        assert family.level_of(DimLayout([2, 2])) == 1
        with pytest.warns(RuntimeWarning):
            assert family.level_of(DimLayout([2, 2, 2, 2])) == 2
        with pytest.raises(ValidationError):
            family.level_of(DimLayout([3, 3]))
        with pytest.raises(ValidationError):
            family.level(0)

    def test_spot_check(self):
        family = polytope_family([ZERO, ONE, DensityOperator.maximally_mixed(2)])
        report = family.spot_check(np.random.default_rng(35), n_max=2, samples=1)
        assert all(report.values())

    def test_preparation_family_layout(self):
        family = preparation_ppt_family()
        assert family.level(1).layout == DimLayout([1, 2, 2])
        assert family.sigma_full.layout == DimLayout([1, 2, 2])
