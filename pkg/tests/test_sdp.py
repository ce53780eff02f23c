"""Tests for sdp module."""

import json

import numpy as np
import pytest
from scipy.stats import unitary_group

from pystein.config import Tolerances
from pystein.errors import BudgetExceededError
from pystein.qcore import DimLayout, maximally_entangled, transpose_factors
from pystein.sdp import (
    SdpProblem,
    SdpSolver,
    hermitian_basis,
    partial_trace_adjoint,
    partial_transpose_adjoint,
    scalar_adjoint,
    solve,
)


def random_hermitian(d, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def test_hermitian_basis_is_orthonormal():
    basis = hermitian_basis(3)
    assert len(basis) == 9
    gram = np.array([[np.real(np.vdot(a, b)) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(9))


def test_partial_transpose_adjoint():
    layout = DimLayout([2, 3])
    x = random_hermitian(6, 1)
    h = random_hermitian(6, 2)
    adjoint = partial_transpose_adjoint(layout, [1])
    lhs = np.vdot(h, transpose_factors(x, layout.factors, [1]))
    assert lhs == pytest.approx(np.vdot(adjoint(h), x))


class TestSolver:
    def test_minimum_eigenvalue(self):
        c = random_hermitian(3, 3)
        problem = SdpProblem("min-eig")
        x = problem.add_block(3)
        problem.set_objective([(x, c)])
        problem.add_constraint([(x, np.eye(3))], "=", 1.0)
        solution = solve(problem)
        assert solution.optimal
        expected = np.linalg.eigvalsh(c)[0]
        assert solution.value == pytest.approx(expected, abs=1e-6)
        assert solution.dual_obj == pytest.approx(expected, abs=1e-6)
        assert np.real(np.trace(solution.block(x))) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_value_invariant_under_block_rotation(self, seed):
        c = random_hermitian(3, 10 + seed)
        a = random_hermitian(3, 20 + seed)
        v = unitary_group.rvs(3, random_state=seed)

        def solve_with(cost, row):
            problem = SdpProblem("rotated")
            x = problem.add_block(3)
            problem.set_objective([(x, cost)])
            problem.add_constraint([(x, np.eye(3))], "=", 1.0)
            problem.add_constraint([(x, row)], "=", float(np.real(np.trace(a))) / 3)
            return solve(problem)

        plain = solve_with(c, a)
        rotated = solve_with(v.conj().T @ c @ v, v.conj().T @ a @ v)
        assert plain.optimal and rotated.optimal
        assert rotated.value == pytest.approx(plain.value, abs=1e-6)

    def test_scalar_inequality_with_max(self):
        problem = SdpProblem("bounded")
        u = problem.add_scalar("u")
        problem.set_objective([(u, 1.0)], sense="max", constant=0.5)
        problem.add_constraint([(u, 1.0)], "<=", 2.0)
        solution = solve(problem)
        assert solution.optimal
        assert solution.scalar(u) == pytest.approx(2.0, abs=1e-6)
        assert solution.value == pytest.approx(2.5, abs=1e-6)

    def test_matrix_inequality_gives_maximum_eigenvalue(self):
        c = random_hermitian(3, 4)
        problem = SdpProblem("max-eig")
        t = problem.add_scalar("t")
        problem.set_objective([(t, 1.0)])
        problem.add_matrix_inequality([(t, scalar_adjoint(np.eye(3)))], ">=", c)
        solution = solve(problem)
        assert solution.optimal
        assert solution.value == pytest.approx(np.linalg.eigvalsh(c)[-1], abs=1e-6)

    def test_partial_trace_constraint(self):
        layout = DimLayout([2, 2])
        phi = maximally_entangled(2).matrix
        problem = SdpProblem("fidelity")
        x = problem.add_block(4)
        problem.set_objective([(x, phi)], sense="max")
        group = problem.add_matrix_equality(
            [(x, partial_trace_adjoint(layout, [0]))], np.eye(2) / 2
        )
        solution = solve(problem)
        assert solution.optimal
        assert solution.value == pytest.approx(1.0, abs=1e-6)
        assert solution.dual_matrix(group).shape == (2, 2)

    def test_inconsistent_rows_are_infeasible(self):
        problem = SdpProblem("inconsistent")
        x = problem.add_block(2)
        problem.set_objective([(x, np.eye(2))])
        problem.add_constraint([(x, np.eye(2))], "=", 1.0)
        problem.add_constraint([(x, 2 * np.eye(2))], "=", 3.0)
        solution = solve(problem)
        assert solution.status == "infeasible"
        assert not solution.optimal

    def test_dict_roundtrip_solves_identically(self):
        c = random_hermitian(2, 5)
        problem = SdpProblem("roundtrip")
        x = problem.add_block(2)
        problem.set_objective([(x, c)])
        problem.add_constraint([(x, np.eye(2))], "=", 1.0)
        loaded = SdpProblem.from_dict(json.loads(json.dumps(problem.to_dict())))
        assert loaded.block_dims == problem.block_dims
        assert solve(loaded).value == pytest.approx(solve(problem).value, abs=1e-7)

    def test_solution_serializes(self):
        problem = SdpProblem("serialize")
        u = problem.add_scalar()
        problem.set_objective([(u, 1.0)])
        problem.add_constraint([(u, 1.0)], ">=", 1.0)
        data = json.loads(solve(problem).to_json())
        assert data["status"] == "optimal"
        assert data["primal_obj"] == pytest.approx(1.0, abs=1e-6)

    def test_budget(self):
        problem = SdpProblem("big")
        problem.add_block(3)
        solver = SdpSolver(tol=Tolerances(sdp_variable_cap=4))
        with pytest.raises(BudgetExceededError):
            solver.solve(problem)

    def test_unknown_sense(self):
        problem = SdpProblem()
        x = problem.add_block(1)
        with pytest.raises(ValueError):
            problem.add_constraint([(x, 1.0)], "<>", 0.0)
        with pytest.raises(ValueError):
            problem.set_objective([(x, 1.0)], sense="maximize")
