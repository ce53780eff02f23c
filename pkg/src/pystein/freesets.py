"""
Convex sets of free states, free-state families and relative-entropy projection.

A ``ConvexStateSet`` describes one level S_n of a free family. Every variant can
express its cone inside an ``SdpProblem`` and bound a linear functional over the
set, which is all the hypothesis-testing and robustness programs need.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .config import Tolerances, resolve
from .divergences import relative_entropy, relative_entropy_gradient
from .errors import (
    GroupClosureError,
    PermutationClosureError,
    UnsupportedRepresentationError,
    ValidationError,
    check_leq,
)
from .qcore import (
    DensityOperator,
    DimLayout,
    HermitianOperator,
    check_budget,
    like_operator,
    maximally_entangled,
    permute_operator,
    random_density,
    tensor,
    tensor_power,
    transpose_factors,
)
from .sdp import (
    Adjoint,
    SdpProblem,
    SdpSolution,
    SdpSolver,
    compose_adjoints,
    identity_adjoint,
    partial_transpose_adjoint,
    scalar_adjoint,
    scaled_adjoint,
)
from .symmetry import is_permutation_invariant, twirl
from .utils import group_closure_failures, random_permutation, transpositions

logger = logging.getLogger(__name__)

# stands in for +inf inside line searches
_LARGE = 1e10


class ConeExpression:
    """Z = Σ_j L_j(X_j) ranging over the cone generated by a state set."""

    def __init__(
        self,
        terms: List[Tuple[int, Adjoint]],
        evaluate: Callable[[SdpSolution], np.ndarray],
        dim: int,
    ):
        self.terms = terms
        self.evaluate = evaluate
        self.dim = dim

    def trace_terms(self) -> List[Tuple[int, np.ndarray]]:
        """Block coefficients of Tr[Z]."""
        return self.linear_terms(np.eye(self.dim, dtype=complex))

    def linear_terms(self, g: np.ndarray) -> List[Tuple[int, np.ndarray]]:
        """Block coefficients of Re Tr[G Z]."""
        return [(block, adjoint(g)) for block, adjoint in self.terms]


def _hvec(m: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix."""
    iu = np.triu_indices(m.shape[0], 1)
    return np.concatenate([np.real(np.diag(m)), np.real(m[iu]), np.imag(m[iu])])


def _unique(matrices: Sequence[np.ndarray], atol: float = 1e-12) -> List[int]:
    """Indices of the first occurrence of each distinct matrix."""
    kept: List[int] = []
    for i, m in enumerate(matrices):
        if not any(np.allclose(m, matrices[j], atol=atol, rtol=0.0) for j in kept):
            kept.append(i)
    return kept


class ConvexStateSet:
    """Base class for the free-set variants.

    ``copies`` is the number of identical sites the layout splits into; permutations
    act on whole sites.
    """

    variant = "abstract"

    def __init__(
        self,
        layout: DimLayout,
        copies: int = 1,
        name: Optional[str] = None,
        tol: Optional[Tolerances] = None,
    ):
        self.layout = DimLayout.of(layout)
        self.tol = resolve(tol)
        width = len(self.layout)
        if copies < 1 or width % copies:
            raise ValidationError(f"{copies} copies do not divide layout {self.layout}")
        site = self.layout.factors[: width // copies]
        if self.layout.factors != site * copies:
            raise ValidationError(f"Layout {self.layout} is not {copies} identical sites")
        self.copies = copies
        self.site_layout = DimLayout(site)
        self.name = name or self.variant
        self.solver = SdpSolver(tol=self.tol)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    @property
    def label(self) -> str:
        return self.name

    def site_view(self, x: HermitianOperator) -> HermitianOperator:
        """The same operator on a layout of identical sites."""
        return like_operator(x, x.matrix, DimLayout([self.site_layout.total_dim] * self.copies))

    def site_twirl(self, h: np.ndarray) -> np.ndarray:
        """Average over permutations of the copies."""
        x = HermitianOperator(h, [self.site_layout.total_dim] * self.copies, check=False)
        return twirl(x, self.copies, self.site_layout.total_dim, self.tol).matrix

    def _check_layout(self, sigma: HermitianOperator) -> None:
        if sigma.dim != self.dim:
            raise ValidationError(f"Shape mismatch: {sigma.layout} vs {self.layout}")

    def vertices(self) -> Optional[List[DensityOperator]]:
        """Extreme points when the set is a polytope, else None."""
        return None

    def contains(self, sigma: HermitianOperator, atol: float = 1e-7) -> bool:
        raise NotImplementedError

    def cone_expression(self, problem: SdpProblem) -> ConeExpression:
        raise UnsupportedRepresentationError(f"{self.label} has no cone representation")

    def support_constraint(
        self,
        problem: SdpProblem,
        t_block: int,
        terms: Sequence[Tuple[int, Adjoint]],
    ) -> Callable[[SdpSolution], Optional[np.ndarray]]:
        """Add t >= max_{sigma in S} Tr[sigma L(X)] with L given by its block adjoints.

        Returns a function extracting a maximizing sigma from the solved program.
        """
        raise UnsupportedRepresentationError(f"{self.label} has no support-function program")

    def linear_minimizer(self, g: np.ndarray) -> DensityOperator:
        """argmin over the set of Re Tr[G sigma]."""
        problem = SdpProblem(f"{self.name}-linear-oracle")
        expr = self.cone_expression(problem)
        problem.add_constraint(expr.trace_terms(), "=", 1.0)
        problem.set_objective(expr.linear_terms(g))
        solution = self.solver.solve(problem)
        return DensityOperator.nearest(expr.evaluate(solution), self.layout, tol=self.tol)

    def distance(self, sigma: HermitianOperator) -> float:
        """Trace-norm distance min_tau (1/2)||sigma - tau||_1 over the set."""
        self._check_layout(sigma)
        problem = SdpProblem(f"{self.name}-distance")
        pos = problem.add_block(self.dim, "P")
        neg = problem.add_block(self.dim, "N")
        expr = self.cone_expression(problem)
        problem.add_matrix_equality(
            [(pos, identity_adjoint), (neg, scaled_adjoint(-1.0))] + list(expr.terms),
            sigma.matrix,
        )
        problem.add_constraint(expr.trace_terms(), "=", 1.0)
        half = 0.5 * np.eye(self.dim)
        problem.set_objective([(pos, half), (neg, half)])
        return max(0.0, self.solver.solve(problem).value)

    def sample(self, rng: np.random.Generator) -> DensityOperator:
        raise NotImplementedError

    def full_rank_member(self) -> Optional[DensityOperator]:
        return None

    def orbit_reduction(self) -> Optional[Tuple[DensityOperator, List[np.ndarray]]]:
        """(reference state, unitary group) when the set is a group-orbit hull."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name='{self.name}', layout={list(self.layout.factors)})"


class VertexPolytope(ConvexStateSet):
    """Convex hull of finitely many states."""

    variant = "polytope"

    def __init__(
        self,
        vertices: Sequence[DensityOperator],
        copies: int = 1,
        name: Optional[str] = None,
        tol: Optional[Tolerances] = None,
    ):
        if not vertices:
            raise ValidationError("A polytope needs at least one vertex")
        layout = vertices[0].layout
        for v in vertices:
            if not isinstance(v, DensityOperator):
                raise ValidationError("Polytope vertices must be DensityOperators")
            if v.layout != layout:
                raise ValidationError(f"Vertex layout {v.layout} differs from {layout}")
        super().__init__(layout, copies, name, tol)
        keep = _unique([v.matrix for v in vertices])
        self._vertices = [vertices[i] for i in keep]

    def vertices(self) -> List[DensityOperator]:
        return list(self._vertices)

    def _vertex_matrix(self) -> np.ndarray:
        return np.stack([_hvec(v.matrix) for v in self._vertices], axis=1)

    def contains(self, sigma: HermitianOperator, atol: float = 1e-7) -> bool:
        """LP feasibility of sigma as a convex combination, with an L1 residual."""
        self._check_layout(sigma)
        vm = self._vertex_matrix()
        rows, k = vm.shape
        a_eq = np.zeros((rows + 1, k + 2 * rows))
        a_eq[:rows, :k] = vm
        a_eq[:rows, k:k + rows] = np.eye(rows)
        a_eq[:rows, k + rows:] = -np.eye(rows)
        a_eq[rows, :k] = 1.0
        b_eq = np.concatenate([_hvec(sigma.matrix), [1.0]])
        c = np.concatenate([np.zeros(k), np.ones(2 * rows)])
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        return bool(res.status == 0 and res.fun <= atol)

    def cone_expression(self, problem: SdpProblem) -> ConeExpression:
        blocks = [problem.add_scalar(f"c{i}") for i in range(len(self._vertices))]
        terms = [(b, scalar_adjoint(v.matrix)) for b, v in zip(blocks, self._vertices)]

        def evaluate(solution: SdpSolution) -> np.ndarray:
            return sum(
                solution.scalar(b) * v.matrix for b, v in zip(blocks, self._vertices)
            )

        return ConeExpression(terms, evaluate, self.dim)

    def support_constraint(
        self,
        problem: SdpProblem,
        t_block: int,
        terms: Sequence[Tuple[int, Adjoint]],
    ) -> Callable[[SdpSolution], Optional[np.ndarray]]:
        rows = []
        for v in self._vertices:
            coefficients = [(block, adjoint(v.matrix)) for block, adjoint in terms]
            rows.append(problem.add_constraint(coefficients + [(t_block, -1.0)], "<=", 0.0))

        def witness(solution: SdpSolution) -> Optional[np.ndarray]:
            w = np.clip(-solution.y[rows], 0.0, None)
            if w.sum() <= 1e-12:
                return None
            w = w / w.sum()
            return sum(wi * v.matrix for wi, v in zip(w, self._vertices))

        return witness

    def linear_minimizer(self, g: np.ndarray) -> DensityOperator:
        scores = [float(np.real(np.vdot(g, v.matrix))) for v in self._vertices]
        return self._vertices[int(np.argmin(scores))]

    def sample(self, rng: np.random.Generator) -> DensityOperator:
        w = rng.dirichlet(np.ones(len(self._vertices)))
        matrix = sum(wi * v.matrix for wi, v in zip(w, self._vertices))
        return DensityOperator(matrix, self.layout, tol=self.tol)

    def barycenter(self) -> DensityOperator:
        matrix = sum(v.matrix for v in self._vertices) / len(self._vertices)
        return DensityOperator(matrix, self.layout, tol=self.tol)

    def full_rank_member(self) -> Optional[DensityOperator]:
        center = self.barycenter()
        return center if center.is_full_rank() else None

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(name='{self.name}', vertices={len(self._vertices)}, "
            f"layout={list(self.layout.factors)})"
        )


class GroupOrbitHull(VertexPolytope):
    """Convex hull of the orbit of a state under a finite unitary group."""

    variant = "orbit"

    def __init__(
        self,
        reference: DensityOperator,
        unitaries: Sequence[np.ndarray],
        copies: int = 1,
        name: Optional[str] = None,
        tol: Optional[Tolerances] = None,
        check_group: bool = True,
    ):
        mats = [np.asarray(u, dtype=complex) for u in unitaries]
        if not mats:
            raise ValidationError("A group needs at least one element")
        for u in mats:
            if u.shape != (reference.dim, reference.dim):
                raise ValidationError(f"Unitary shape {u.shape} does not match {reference.layout}")
            deviation = float(np.max(np.abs(u @ u.conj().T - np.eye(reference.dim))))
            if deviation > 1e-10:
                raise ValidationError(f"Group element is not unitary (deviation {deviation:.3e})")
        if check_group:
            failures = group_closure_failures(mats)
            if failures:
                raise GroupClosureError(
                    f"Unitary list is not closed under composition: products {failures[:3]} missing"
                )
        self.reference = reference
        self.unitaries = mats
        orbit = [
            DensityOperator(u @ reference.matrix @ u.conj().T, reference.layout, check=False)
            for u in mats
        ]
        super().__init__(orbit, copies, name, tol)

    def averaged(self) -> DensityOperator:
        """(1/|G|) Σ_g U(g) sigma_0 U(g)†."""
        return _group_average(self.reference, self.unitaries, self.tol)

    def is_invariant(self, rho: HermitianOperator, atol: float = 1e-9) -> bool:
        return all(
            np.allclose(u @ rho.matrix @ u.conj().T, rho.matrix, atol=atol, rtol=0.0)
            for u in self.unitaries
        )

    def orbit_reduction(self) -> Optional[Tuple[DensityOperator, List[np.ndarray]]]:
        return self.reference, list(self.unitaries)


class ProductFamily(VertexPolytope):
    """Level n of a family built from a base polytope.

    ``tensor`` takes the hull of all n-fold products of base vertices; ``iid`` the
    hull of n-fold powers of each base vertex.
    """

    variant = "product"

    def __init__(
        self,
        base: ConvexStateSet,
        n: int,
        mode: str = "tensor",
        name: Optional[str] = None,
        tol: Optional[Tolerances] = None,
    ):
        base_vertices = base.vertices()
        if base_vertices is None:
            raise UnsupportedRepresentationError(
                f"Product levels need a vertex description, got {base.label}"
            )
        if n < 1:
            raise ValidationError(f"n must be at least 1, got {n}")
        self.base = base
        self.n = n
        self.mode = mode
        tol = resolve(tol)
        check_budget(f"product level n={n}", base.dim**n, tol)
        if mode == "tensor":
            count = len(base_vertices) ** n
            if count > tol.dim_cap:
                raise ValidationError(f"{count} product vertices exceed the vertex budget")
            indices = np.indices([len(base_vertices)] * n).reshape(n, -1).T
            vertices = [tensor(*[base_vertices[i] for i in idx], tol=tol) for idx in indices]
        elif mode == "iid":
            vertices = [tensor_power(v, n, tol=tol) for v in base_vertices]
        else:
            raise ValueError(f"Unknown product mode: {mode}")
        super().__init__(vertices, n * base.copies, name or f"{base.name}^{n}", tol)

    def orbit_reduction(self) -> Optional[Tuple[DensityOperator, List[np.ndarray]]]:
        reduction = self.base.orbit_reduction()
        if self.mode != "iid" or reduction is None:
            return None
        reference, unitaries = reduction
        powered = [reduce(np.kron, [u] * self.n) for u in unitaries]
        return tensor_power(reference, self.n, tol=self.tol), powered


class PptSet(ConvexStateSet):
    """States with a positive partial transpose on the listed factors."""

    variant = "ppt"

    def __init__(
        self,
        layout: DimLayout,
        transpose_axes: Sequence[int],
        copies: int = 1,
        symmetric: bool = False,
        name: Optional[str] = None,
        tol: Optional[Tolerances] = None,
    ):
        super().__init__(layout, copies, name, tol)
        axes = tuple(sorted(int(k) for k in transpose_axes))
        if not axes or axes[0] < 0 or axes[-1] >= len(self.layout):
            raise ValidationError(f"Invalid transpose axes {axes} for {self.layout}")
        width = len(self.site_layout)
        site_axes = {k % width for k in axes}
        expected = tuple(k + width * j for j in range(copies) for k in sorted(site_axes))
        if axes != expected:
            raise ValidationError(f"Transpose axes {axes} are not the same on every site")
        self.transpose_axes = axes
        self.symmetric = symmetric
        transposed = int(np.prod([self.layout.factors[k] for k in axes]))
        self.exact = transposed * (self.dim // transposed) <= 6 and len(site_axes) < width
        if name is None:
            self.name = f"PPT({transposed}x{self.dim // transposed})" + (
                "-sym" if symmetric else ""
            )
        if not self.exact:
            warnings.warn(
                f"{self.label} is an outer relaxation of the separable states", RuntimeWarning
            )

    @classmethod
    def bipartite(
        cls, d_a: int, d_b: int, n: int = 1, tol: Optional[Tolerances] = None
    ) -> "PptSet":
        """PPT across A^n | B^n on the layout [d_a, d_b] * n."""
        layout = DimLayout([d_a, d_b] * n)
        return cls(layout, [2 * j + 1 for j in range(n)], copies=n, tol=tol)

    @property
    def label(self) -> str:
        return self.name if self.exact else f"{self.name} (outer relaxation)"

    def symmetrized(self) -> "PptSet":
        return PptSet(
            self.layout, self.transpose_axes, self.copies, True, tol=self.tol
        )

    def contains(self, sigma: HermitianOperator, atol: float = 1e-7) -> bool:
        self._check_layout(sigma)
        if abs(sigma.trace() - 1.0) > atol or sigma.eigvalsh()[0] < -atol:
            return False
        pt = transpose_factors(sigma.matrix, self.layout.factors, self.transpose_axes)
        if float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0]) < -atol:
            return False
        if self.symmetric and self.copies > 1:
            return is_permutation_invariant(self.site_view(sigma), atol)
        return True

    def _symmetry_adjoint(self) -> Adjoint:
        if self.symmetric and self.copies > 1:
            return self.site_twirl
        return identity_adjoint

    def cone_expression(self, problem: SdpProblem) -> ConeExpression:
        z = problem.add_block(self.dim, "Z")
        problem.add_matrix_inequality(
            [(z, partial_transpose_adjoint(self.layout, self.transpose_axes))],
            ">=",
            np.zeros((self.dim, self.dim)),
        )
        symmetry = self._symmetry_adjoint()

        def evaluate(solution: SdpSolution) -> np.ndarray:
            return symmetry(solution.block(z))

        return ConeExpression([(z, symmetry)], evaluate, self.dim)

    def support_constraint(
        self,
        problem: SdpProblem,
        t_block: int,
        terms: Sequence[Tuple[int, Adjoint]],
    ) -> Callable[[SdpSolution], Optional[np.ndarray]]:
        # t I - S(L(X)) - P - Γ(Q) = 0 with P, Q ⪰ 0 certifies t >= max over the set
        symmetry = self._symmetry_adjoint()
        p = problem.add_block(self.dim, "P")
        q = problem.add_block(self.dim, "Q")
        eq_terms: List[Tuple[int, Adjoint]] = [(t_block, scalar_adjoint(np.eye(self.dim)))]
        for block, adjoint in terms:
            eq_terms.append((block, scaled_adjoint(-1.0, compose_adjoints(symmetry, adjoint))))
        eq_terms.append((p, scaled_adjoint(-1.0)))
        eq_terms.append(
            (q, scaled_adjoint(-1.0, partial_transpose_adjoint(self.layout, self.transpose_axes)))
        )
        group = problem.add_matrix_equality(eq_terms, np.zeros((self.dim, self.dim)))

        def witness(solution: SdpSolution) -> Optional[np.ndarray]:
            y = symmetry(solution.dual_matrix(group))
            trace = float(np.real(np.trace(y)))
            if trace <= 1e-12:
                return None
            return y / trace

        return witness

    def sample(self, rng: np.random.Generator) -> DensityOperator:
        """A random separable, hence PPT, member."""
        weights = rng.dirichlet(np.ones(3))
        matrix = np.zeros((self.dim, self.dim), dtype=complex)
        for w in weights:
            factors = [random_density(f, rng) for f in self.layout.factors]
            matrix += w * tensor(*factors).matrix
        if self.symmetric and self.copies > 1:
            matrix = self.site_twirl(matrix)
        return DensityOperator(matrix, self.layout, tol=self.tol)

    def full_rank_member(self) -> DensityOperator:
        return DensityOperator.maximally_mixed(self.layout)


def _group_average(
    reference: DensityOperator, unitaries: Sequence[np.ndarray], tol: Tolerances
) -> DensityOperator:
    total = sum(u @ reference.matrix @ u.conj().T for u in unitaries)
    return DensityOperator(total / len(unitaries), reference.layout, tol=tol)


def membership(sigma: HermitianOperator, S: ConvexStateSet) -> Tuple[bool, float]:
    """(sigma in S, trace-norm distance to S); the distance is 0 inside."""
    if S.contains(sigma):
        return True, 0.0
    return False, S.distance(sigma)


def averaged_state(S: ConvexStateSet) -> DensityOperator:
    """The group average of the orbit reference, which does not depend on the orbit point."""
    reduction = S.orbit_reduction()
    if reduction is None:
        raise UnsupportedRepresentationError(f"{S.label} has no declared group")
    reference, unitaries = reduction
    return _group_average(reference, unitaries, S.tol)


def check_permutation_closure(S: ConvexStateSet, rng: Optional[np.random.Generator] = None) -> None:
    """Raise PermutationClosureError when a permuted member leaves the set.

    Polytopes are checked exactly on every vertex and adjacent transposition; other
    variants on sampled members and random permutations.
    """
    if S.copies == 1:
        return
    vertices = S.vertices()
    rng = rng or np.random.default_rng(0)
    if vertices is not None:
        perms = transpositions(S.copies)
        members = vertices
    else:
        perms = [random_permutation(S.copies, rng) for _ in range(3)]
        members = [S.sample(rng) for _ in range(3)]
    for g in perms:
        for member in members:
            moved = permute_operator(S.site_view(member), g)
            image = DensityOperator(moved.matrix, S.layout, check=False)
            if not S.contains(image):
                raise PermutationClosureError(
                    f"{S.label} is not closed under the site permutation {g}"
                )


def symmetrized_subset(S: ConvexStateSet) -> ConvexStateSet:
    """The permutation-invariant members of a permutation-closed set."""
    check_permutation_closure(S)
    if S.copies == 1:
        return S
    if isinstance(S, PptSet):
        return S.symmetrized()
    vertices = S.vertices()
    if vertices is None:
        raise UnsupportedRepresentationError(f"Cannot symmetrize {S.label}")
    if all(is_permutation_invariant(S.site_view(v)) for v in vertices):
        return S
    twirled = [
        DensityOperator(S.site_twirl(v.matrix), S.layout, check=False) for v in vertices
    ]
    logger.debug("%s: %d vertices twirled", S.name, len(vertices))
    return VertexPolytope(twirled, S.copies, f"{S.name}-sym", S.tol)


@dataclass
class FrankWolfeResult:
    value: float
    sigma: DensityOperator
    gap: float
    iterations: int
    converged: bool
    atoms: int


class FrankWolfeSolver:
    """Away-step Frank-Wolfe for sigma -> D(rho||sigma) over a convex state set.

    Polytopes run on their vertex list directly. Sets with an SDP linear oracle run
    fully corrective: each oracle point joins an active set whose weights are
    re-optimized before the next oracle call.
    """

    def __init__(
        self,
        max_iterations: int = 10_000,
        tolerance: float = 1e-6,
        inner_iterations: int = 500,
        tol: Optional[Tolerances] = None,
    ):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.inner_iterations = inner_iterations
        self.tol = resolve(tol)

    def solve(self, rho: DensityOperator, S: ConvexStateSet) -> FrankWolfeResult:
        S._check_layout(rho)
        start = S.full_rank_member()
        if start is None:
            warnings.warn(
                f"{S.label} has no full-rank member; finiteness is not guaranteed",
                RuntimeWarning,
            )
        vertices = S.vertices()
        if vertices is not None:
            atoms = [v.matrix for v in vertices]
            weights = np.full(len(atoms), 1.0 / len(atoms))
            weights, gap, iterations = self._descend(
                rho, atoms, weights, self.tolerance, self.max_iterations
            )
            converged = gap <= self.tolerance
        else:
            if start is None:
                raise UnsupportedRepresentationError(f"{S.label} offers no starting point")
            atoms = [start.matrix]
            weights = np.ones(1)
            gap, iterations, converged = math.inf, 0, False
            for iterations in range(1, self.max_iterations + 1):
                sigma = self._combine(atoms, weights)
                grad = relative_entropy_gradient(rho, sigma, self.tol)
                v = S.linear_minimizer(grad).matrix
                gap = float(np.real(np.vdot(grad, sigma - v)))
                logger.debug("%s FW it=%d gap=%.3e atoms=%d", S.name, iterations, gap, len(atoms))
                if gap <= self.tolerance:
                    converged = True
                    break
                if not any(np.allclose(v, a, atol=1e-10, rtol=0.0) for a in atoms):
                    atoms.append(v)
                    weights = np.append(weights, 0.0)
                weights, _, _ = self._descend(
                    rho, atoms, weights, self.tolerance / 10, self.inner_iterations
                )
                active = weights > 0
                atoms = [a for a, keep in zip(atoms, active) if keep]
                weights = weights[active]
        if not converged:
            warnings.warn(
                f"Frank-Wolfe on {S.label} stopped at gap {gap:.2e} after {iterations} iterations",
                RuntimeWarning,
            )
        sigma = DensityOperator.nearest(self._combine(atoms, weights), S.layout, tol=self.tol)
        value = relative_entropy(rho, sigma, self.tol)
        return FrankWolfeResult(value, sigma, gap, iterations, converged, int(np.sum(weights > 0)))

    @staticmethod
    def _combine(atoms: Sequence[np.ndarray], weights: np.ndarray) -> np.ndarray:
        return sum(w * a for w, a in zip(weights, atoms))

    def _objective(self, rho: DensityOperator, matrix: np.ndarray) -> float:
        value = relative_entropy(rho, HermitianOperator(matrix, check=False), self.tol)
        return value if math.isfinite(value) else _LARGE

    def _line_search(
        self, rho: DensityOperator, x: np.ndarray, d: np.ndarray, gamma_max: float
    ) -> float:
        res = minimize_scalar(
            lambda g: self._objective(rho, x + g * d),
            bounds=(0.0, gamma_max),
            method="bounded",
            options={"xatol": 1e-12 * max(gamma_max, 1.0)},
        )
        gamma, best = float(res.x), float(res.fun)
        if self._objective(rho, x + gamma_max * d) <= best:
            return gamma_max
        return gamma

    def _descend(
        self,
        rho: DensityOperator,
        atoms: Sequence[np.ndarray],
        weights: np.ndarray,
        tolerance: float,
        max_iterations: int,
    ) -> Tuple[np.ndarray, float, int]:
        """Away-step Frank-Wolfe over the simplex of the given atoms."""
        weights = weights.copy()
        gap = math.inf
        iteration = 0
        for iteration in range(1, max_iterations + 1):
            x = self._combine(atoms, weights)
            grad = relative_entropy_gradient(rho, x, self.tol)
            scores = np.array([float(np.real(np.vdot(grad, a))) for a in atoms])
            toward = int(np.argmin(scores))
            active = np.flatnonzero(weights > 0)
            away = int(active[np.argmax(scores[active])])
            current = float(weights @ scores)
            gap = current - scores[toward]
            if gap <= tolerance:
                break
            if gap >= scores[away] - current or weights[away] >= 1.0:
                gamma = self._line_search(rho, x, atoms[toward] - x, 1.0)
                weights *= 1.0 - gamma
                weights[toward] += gamma
            else:
                gamma_max = weights[away] / (1.0 - weights[away])
                gamma = self._line_search(rho, x, x - atoms[away], gamma_max)
                weights *= 1.0 + gamma
                weights[away] -= gamma
                if gamma >= gamma_max:
                    weights[away] = 0.0
            weights = np.clip(weights, 0.0, None)
            weights /= weights.sum()
        return weights, gap, iteration


def min_relative_entropy(
    rho: DensityOperator,
    S: ConvexStateSet,
    solver: Optional[FrankWolfeSolver] = None,
) -> Tuple[float, DensityOperator]:
    """min over sigma in S of D(rho||sigma) and a minimizer."""
    result = (solver or FrankWolfeSolver(tol=S.tol)).solve(rho, S)
    logger.info(
        "min D over %s: %.10g (gap %.2e, %d iterations)",
        S.label, result.value, result.gap, result.iterations,
    )
    return result.value, result.sigma


def cutting_plane_relative_entropy(
    rho: DensityOperator,
    S: ConvexStateSet,
    tolerance: float = 1e-7,
    max_iterations: int = 500,
) -> Tuple[float, float]:
    """Kelley cutting planes on the vertex weights; returns (upper, lower) bounds."""
    vertices = S.vertices()
    if vertices is None:
        raise UnsupportedRepresentationError(f"Cutting planes need vertices, got {S.label}")
    atoms = [v.matrix for v in vertices]
    k = len(atoms)
    w = np.full(k, 1.0 / k)
    cuts_a: List[np.ndarray] = []
    cuts_b: List[float] = []
    upper, lower = math.inf, -math.inf
    for _ in range(max_iterations):
        x = sum(wi * a for wi, a in zip(w, atoms))
        value = relative_entropy(rho, HermitianOperator(x, check=False), S.tol)
        grad = relative_entropy_gradient(rho, x, S.tol)
        g = np.array([float(np.real(np.vdot(grad, a))) for a in atoms])
        upper = min(upper, value)
        # z >= value + g (w' - w)
        cuts_a.append(np.concatenate([g, [-1.0]]))
        cuts_b.append(float(g @ w) - value)
        res = linprog(
            np.concatenate([np.zeros(k), [1.0]]),
            A_ub=np.array(cuts_a),
            b_ub=np.array(cuts_b),
            A_eq=np.concatenate([np.ones(k), [0.0]])[None, :],
            b_eq=[1.0],
            bounds=[(0, None)] * k + [(None, None)],
            method="highs",
        )
        if res.status != 0:
            break
        lower = float(res.fun)
        w = np.clip(res.x[:k], 0.0, None)
        w /= w.sum()
        if upper - lower <= tolerance:
            break
    return upper, lower


class FreeFamily:
    """A sequence of free sets S_n with a full-rank member of S_1."""

    def __init__(
        self,
        name: str,
        generator: Callable[[int], ConvexStateSet],
        sigma_full: DensityOperator,
        tensor_closed: bool = True,
        tol: Optional[Tolerances] = None,
    ):
        self.name = name
        self.tol = resolve(tol)
        self._generator = generator
        self._levels: Dict[int, ConvexStateSet] = {}
        self.sigma_full = sigma_full
        self.tensor_closed = tensor_closed
        w_min = float(sigma_full.eigvalsh()[0])
        if w_min < 1e-8:
            raise ValidationError(f"sigma_full is not full rank (min eigenvalue {w_min:.3e})")
        self.lam = -math.log(w_min)
        if not self.level(1).contains(sigma_full):
            raise ValidationError(f"sigma_full is not a member of {self.level(1).label}")

    def level(self, n: int) -> ConvexStateSet:
        if n < 1:
            raise ValidationError(f"n must be at least 1, got {n}")
        if n not in self._levels:
            self._levels[n] = self._generator(n)
        return self._levels[n]

    def level_of(self, layout: DimLayout) -> int:
        """The n whose level has the given layout."""
        width = len(self.level(1).layout)
        n = len(layout) // width
        if n < 1 or self.level(n).layout != layout:
            raise ValidationError(f"Layout {layout} is not a level of family '{self.name}'")
        return n

    def spot_check(
        self, rng: np.random.Generator, n_max: int = 2, samples: int = 2
    ) -> Dict[str, bool]:
        """Sampled checks of convexity, permutation closure and tensor closure."""
        report = {"full_rank": True, "convexity": True, "permutation": True, "tensor": True}
        for n in range(1, n_max + 1):
            S = self.level(n)
            for _ in range(samples):
                a, b = S.sample(rng), S.sample(rng)
                p = rng.uniform()
                mix = DensityOperator(p * a.matrix + (1 - p) * b.matrix, S.layout, check=False)
                report["convexity"] &= S.contains(mix)
            try:
                check_permutation_closure(S, rng)
            except PermutationClosureError:
                report["permutation"] = False
        if self.tensor_closed:
            for n in range(1, n_max):
                for m in range(1, n_max - n + 1):
                    a, b = self.level(n).sample(rng), self.level(m).sample(rng)
                    report["tensor"] &= self.level(n + m).contains(tensor(a, b))
        logger.info("family %s spot check: %s", self.name, report)
        return report

    def __repr__(self) -> str:
        return f"FreeFamily(name='{self.name}', lambda={self.lam:.4f})"


def regularized_entropy_estimate(
    rho: DensityOperator,
    family: FreeFamily,
    n_max: int,
    symmetrize: bool = False,
    solver: Optional[FrankWolfeSolver] = None,
) -> List[Tuple[int, float]]:
    """f(n)/n for f(n) = min over S_n of D(rho^{⊗n}||sigma), n = 1..n_max.

    Subadditivity f(n+m) <= f(n) + f(m) is asserted for tensor-closed families.
    """
    f: Dict[int, float] = {}
    for n in range(1, n_max + 1):
        S = family.level(n)
        if symmetrize:
            S = symmetrized_subset(S)
        f[n], _ = min_relative_entropy(tensor_power(rho, n, family.tol), S, solver)
    for n in range(1, n_max):
        for m in range(n, n_max - n + 1):
            if family.tensor_closed:
                check_leq(f"f({n + m}) <= f({n}) + f({m})", f[n + m], f[n] + f[m], 1e-6)
            elif f[n + m] > f[n] + f[m] + 1e-6:
                logger.info("%s: f(%d) exceeds f(%d) + f(%d)", family.name, n + m, n, m)
    return [(n, f[n] / n) for n in sorted(f)]


def sigma_mu(mu: float) -> DensityOperator:
    """(1/2) [[1, 2mu - 1], [2mu - 1, 1]]."""
    return DensityOperator(0.5 * np.array([[1.0, 2 * mu - 1], [2 * mu - 1, 1.0]]))


def phi_state(p: float, sign: float = 1.0) -> DensityOperator:
    """|phi_{p,±}> = sqrt(p)|0> ± sqrt(1-p)|1>."""
    return DensityOperator.from_vector([math.sqrt(p), sign * math.sqrt(1 - p)])


def example_s1_family(mu: float) -> FreeFamily:
    """Orbit of sigma[mu] under {I, Z}; level n is the hull of the n-fold powers."""
    base = GroupOrbitHull(sigma_mu(mu), [np.eye(2), np.diag([1.0, -1.0])], name=f"S1(mu={mu})")
    return FreeFamily(
        base.name, lambda n: base if n == 1 else ProductFamily(base, n, "iid"),
        sigma_mu(mu), tensor_closed=False,
    )


def example_s2_family(p: float, phases: int = 8) -> FreeFamily:
    """Orbit of |phi_p> under a discretized phase group diag(1, e^{2πik/K})."""
    unitaries = [np.diag([1.0, np.exp(2j * np.pi * k / phases)]) for k in range(phases)]
    base = GroupOrbitHull(phi_state(p), unitaries, name=f"S2(p={p})")
    return FreeFamily(
        base.name, lambda n: base if n == 1 else ProductFamily(base, n, "iid"),
        base.averaged(), tensor_closed=False,
    )


def ppt_family(d_a: int = 2, d_b: int = 2) -> FreeFamily:
    """PPT states across A^n | B^n."""
    return FreeFamily(
        f"PPT({d_a}x{d_b})",
        lambda n: PptSet.bipartite(d_a, d_b, n),
        DensityOperator.maximally_mixed([d_a, d_b]),
    )


def iid_family(sigma: DensityOperator) -> FreeFamily:
    """The singleton family S_n = {sigma^{⊗n}}."""
    return FreeFamily(
        "iid",
        lambda n: VertexPolytope([tensor_power(sigma, n)], copies=n, name=f"iid^{n}"),
        sigma,
    )


def polytope_family(vertices: Sequence[DensityOperator], name: str = "polytope") -> FreeFamily:
    """Hulls of n-fold products of a base vertex list."""
    base = VertexPolytope(vertices, name=name)
    center = base.barycenter()
    return FreeFamily(
        name, lambda n: base if n == 1 else ProductFamily(base, n, "tensor"), center
    )


def werner_ppt_grid_relative_entropy(
    rho: DensityOperator, points: int = 2001
) -> Tuple[float, float]:
    """min D(rho||tau_f) over a grid of PPT isotropic states tau_f, f in [0, 1/d].

    tau_f = f Φ_d + (1 - f)(I - Φ_d)/(d^2 - 1). Returns (value, best f).
    """
    d = rho.layout.factors[0]
    if rho.layout != DimLayout([d, d]):
        raise ValidationError(f"Isotropic grid needs a [d, d] layout, got {rho.layout}")
    phi = maximally_entangled(d).matrix
    rest = (np.eye(d * d) - phi) / (d * d - 1)
    best, best_f = math.inf, math.nan
    for f in np.linspace(0.0, 1.0 / d, points):
        tau = HermitianOperator(f * phi + (1 - f) * rest, [d, d], check=False)
        value = relative_entropy(rho, tau)
        if value < best:
            best, best_f = value, float(f)
    return best, best_f


def preparation_ppt_family(d_a: int = 2, d_b: int = 2) -> FreeFamily:
    """Choi states of channels preparing PPT states, on the layout [1, d_a, d_b] * n."""

    def level(n: int) -> PptSet:
        layout = DimLayout([1, d_a, d_b] * n)
        return PptSet(layout, [3 * j + 2 for j in range(n)], copies=n, name=f"PPT-prep^{n}")

    return FreeFamily(
        f"PPT-prep({d_a}x{d_b})", level, DensityOperator.maximally_mixed([1, d_a, d_b])
    )
