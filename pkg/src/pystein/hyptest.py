"""
Hypothesis-testing optima for simple and composite alternatives.

β_ε(ρ‖σ) is the smallest type-II error Tr[Tσ] over tests 0 ⪯ T ⪯ I whose type-I
error Tr[(I - T)ρ] stays within ε. Composite alternatives take the worst case over a
convex free set.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .config import Tolerances, resolve
from .divergences import petz_renyi, sandwiched_renyi
from .errors import UnsupportedRepresentationError, ValidationError, check_leq
from .freesets import ConvexStateSet, averaged_state
from .qcore import (
    BinaryTest,
    DensityOperator,
    HermitianOperator,
    QuantumChannel,
    spectral_projection_leq,
    tensor,
    tensor_power,
)
from .sdp import SdpProblem, SdpSolver, identity_adjoint, scaled_adjoint

logger = logging.getLogger(__name__)

BETA_METHODS = ("neyman-pearson", "sdp")
POINTWISE_SCHEMES = ("hull", "vertices", "samples")


@dataclass
class BetaResult:
    """An optimal test and the certificate data that came with it."""

    value: float
    test: BinaryTest
    method: str
    worst_case: Optional[DensityOperator] = None
    multiplier: Optional[float] = None
    certificate_gap: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method,
            "multiplier": self.multiplier,
            "certificate_gap": self.certificate_gap,
        }

    def __repr__(self) -> str:
        return f"BetaResult(value={self.value:.10g}, method='{self.method}')"


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps < 1.0:
        raise ValidationError(f"eps must lie in [0, 1), got {eps}")


def _check_pair(rho: HermitianOperator, sigma: HermitianOperator) -> None:
    if rho.dim != sigma.dim:
        raise ValidationError(f"Shape mismatch: {rho.layout} vs {sigma.layout}")


def _support_projector(rho: HermitianOperator, tol: Tolerances) -> np.ndarray:
    w, v = rho.eigh()
    cols = v[:, w > tol.support_cutoff * max(float(w[-1]), 1e-300)]
    return cols @ cols.conj().T


def _np_dual(rho: HermitianOperator, sigma: HermitianOperator, eps: float, b: float) -> float:
    """b(1 - ε) - Tr[(bρ - σ)_+], a lower bound on β_ε for every b >= 0."""
    w = np.linalg.eigvalsh(b * rho.matrix - sigma.matrix)
    return b * (1.0 - eps) - float(np.sum(np.clip(w, 0.0, None)))


def _neyman_pearson(
    rho: DensityOperator, sigma: DensityOperator, eps: float, tol: Tolerances
) -> BetaResult:
    if eps == 0.0:
        test = BinaryTest.clipped(_support_projector(rho, tol), rho.layout)
        return BetaResult(test.expectation(sigma), test, "neyman-pearson", sigma)
    res = minimize_scalar(
        lambda b: -_np_dual(rho, sigma, eps, b),
        bounds=(0.0, 1.0 / eps + 1.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    b = float(res.x)
    bound = -float(res.fun)
    # likelihood-ratio test: fill eigenvectors of bρ - σ in descending order until
    # the rho-mass reaches 1 - ε, with a fractional weight on the boundary vector
    w, v = np.linalg.eigh(b * rho.matrix - sigma.matrix)
    weights = np.zeros(len(w))
    need = 1.0 - eps
    for i in np.argsort(-w):
        if need <= 0:
            break
        mass = float(np.real(np.vdot(v[:, i], rho.matrix @ v[:, i])))
        if mass <= 1e-15:
            continue
        weights[i] = min(1.0, need / mass)
        need -= weights[i] * mass
    test = BinaryTest.clipped((v * weights) @ v.conj().T, rho.layout)
    value = test.expectation(sigma)
    gap = abs(value - bound)
    logger.debug("Neyman-Pearson: beta=%.12g, dual bound=%.12g, b=%.6g", value, bound, b)
    return BetaResult(value, test, "neyman-pearson", sigma, b, gap)


def _beta_sdp(
    rho: DensityOperator, sigma: DensityOperator, eps: float, tol: Tolerances
) -> BetaResult:
    problem = SdpProblem("beta-simple")
    t = problem.add_block(rho.dim, "T")
    q = problem.add_block(rho.dim, "Q")
    problem.add_matrix_equality([(t, identity_adjoint), (q, identity_adjoint)], np.eye(rho.dim))
    row = problem.add_constraint([(t, rho.matrix)], ">=", 1.0 - eps)
    problem.set_objective([(t, sigma.matrix)])
    solution = SdpSolver(tol=tol).solve(problem)
    test = BinaryTest.clipped(solution.block(t), rho.layout)
    return BetaResult(
        float(np.clip(solution.value, 0.0, 1.0)), test, "sdp", sigma, float(solution.y[row]),
        abs(solution.primal_obj - solution.dual_obj),
    )


def beta_simple(
    rho: DensityOperator,
    sigma: DensityOperator,
    eps: float,
    method: str = "neyman-pearson",
    tol: Optional[Tolerances] = None,
) -> BetaResult:
    """β_ε(ρ‖σ) by the Neyman-Pearson construction or by the SDP."""
    _check_pair(rho, sigma)
    _check_eps(eps)
    tol = resolve(tol)
    if method == "neyman-pearson":
        return _neyman_pearson(rho, sigma, eps, tol)
    elif method == "sdp":
        return _beta_sdp(rho, sigma, eps, tol)
    else:
        raise ValueError(f"Unknown beta method: {method}")


def beta_classical(p: Sequence[float], q: Sequence[float], eps: float) -> float:
    """β_ε for commuting hypotheses given as probability vectors."""
    _check_eps(eps)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError(f"Shape mismatch: {p.shape} vs {q.shape}")
    ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf)
    order = sorted(range(len(p)), key=lambda i: (-ratio[i], q[i]))
    need = 1.0 - eps
    value = 0.0
    for i in order:
        if need <= 0:
            break
        if p[i] <= 0:
            continue
        take = min(1.0, need / p[i])
        value += take * q[i]
        need -= take * p[i]
    return value


def hypothesis_testing_divergence(
    rho: DensityOperator, sigma: DensityOperator, eps: float, tol: Optional[Tolerances] = None
) -> float:
    """D_H^ε(ρ‖σ) = -log β_ε(ρ‖σ) in nats."""
    beta = beta_simple(rho, sigma, eps, tol=tol).value
    return math.inf if beta <= 0 else -math.log(beta)


def bh_dual(
    rho: HermitianOperator,
    sigma: HermitianOperator,
    beta: float,
    tol: Optional[Tolerances] = None,
) -> Tuple[float, float]:
    """min over b >= 0 of Tr[(ρ - bσ)_+] + bβ, and the minimizing b.

    Evaluated at the worst-case state of a composite test, the minimum equals 1 - ε.
    """
    _check_pair(rho, sigma)
    tol = resolve(tol)
    w_sigma = sigma.eigvalsh()
    positive = w_sigma[w_sigma > tol.support_cutoff * max(float(w_sigma[-1]), 1e-300)]
    b_max = rho.spectral_radius() / float(positive[0]) + 1.0 if positive.size else 1.0

    def objective(b: float) -> float:
        w = np.linalg.eigvalsh(rho.matrix - b * sigma.matrix)
        return float(np.sum(np.clip(w, 0.0, None))) + b * beta

    res = minimize_scalar(
        objective, bounds=(0.0, b_max), method="bounded", options={"xatol": 1e-9}
    )
    candidates = [
        (float(res.fun), float(res.x)),
        (objective(0.0), 0.0),
        (objective(b_max), b_max),
    ]
    return min(candidates)


def beta_composite(
    rho: DensityOperator,
    S: ConvexStateSet,
    eps: float,
    reduce: bool = True,
    tol: Optional[Tolerances] = None,
) -> BetaResult:
    """β_ε(ρ‖S) = min_T max_{σ∈S} Tr[Tσ] as one SDP.

    With a declared group and a group-invariant ρ the problem reduces to the simple
    test against the group-averaged state.
    """
    S._check_layout(rho)
    _check_eps(eps)
    tol = resolve(tol)
    if reduce:
        reduction = S.orbit_reduction()
        if reduction is not None and _is_invariant(rho, reduction[1]):
            sigma_av = averaged_state(S)
            result = beta_simple(rho, sigma_av, eps, tol=tol)
            result.method = "orbit-average"
            logger.debug("%s: reduced to the group-averaged state", S.label)
            return result
    problem = SdpProblem(f"beta-composite-{S.name}")
    t_block = problem.add_scalar("t")
    t = problem.add_block(rho.dim, "T")
    q = problem.add_block(rho.dim, "Q")
    problem.add_matrix_equality([(t, identity_adjoint), (q, identity_adjoint)], np.eye(rho.dim))
    row = problem.add_constraint([(t, rho.matrix)], ">=", 1.0 - eps)
    witness = S.support_constraint(problem, t_block, [(t, identity_adjoint)])
    problem.set_objective([(t_block, 1.0)])
    solution = SdpSolver(tol=tol).solve(problem)
    if not solution.optimal:
        logger.warning("%s: composite beta SDP ended with status %s", S.label, solution.status)
    value = float(np.clip(solution.value, 0.0, 1.0))
    test = BinaryTest.clipped(solution.block(t), rho.layout)
    sigma_star_matrix = witness(solution)
    sigma_star = (
        DensityOperator.nearest(sigma_star_matrix, S.layout, tol=tol)
        if sigma_star_matrix is not None
        else None
    )
    result = BetaResult(value, test, "sdp", sigma_star, float(solution.y[row]))
    if sigma_star is not None and value > 1e-9:
        dual, _ = bh_dual(rho, sigma_star, value, tol)
        result.certificate_gap = abs(dual - (1.0 - eps))
        if result.certificate_gap > 1e-6:
            logger.info(
                "%s: dual certificate off by %.3e at beta=%.10g",
                S.label, result.certificate_gap, value,
            )
    return result


def _is_invariant(rho: HermitianOperator, unitaries: Sequence[np.ndarray]) -> bool:
    return all(
        np.allclose(u @ rho.matrix @ u.conj().T, rho.matrix, atol=1e-9, rtol=0.0)
        for u in unitaries
    )


def worst_case_state(
    rho: DensityOperator,
    S: ConvexStateSet,
    eps: float,
    max_iterations: int = 300,
    tolerance: float = 1e-8,
    tol: Optional[Tolerances] = None,
) -> Tuple[float, DensityOperator]:
    """argmax over S of β_ε(ρ‖σ) by cutting planes on the concave map σ ↦ β_ε(ρ‖σ).

    Each optimal test T_k cuts the map from above: β_ε(ρ‖σ) ≤ Tr[T_k σ].
    """
    tol = resolve(tol)
    vertices = S.vertices()
    sigma = S.full_rank_member() or (vertices[0] if vertices else None)
    if sigma is None:
        raise UnsupportedRepresentationError(f"{S.label} offers no starting point")
    tests: List[np.ndarray] = []
    best_value, best_sigma = -math.inf, sigma
    upper = math.inf
    for iteration in range(1, max_iterations + 1):
        result = beta_simple(rho, sigma, eps, tol=tol)
        if result.value > best_value:
            best_value, best_sigma = result.value, sigma
        tests.append(result.test.matrix)
        upper, sigma = _cut_master(S, tests, tol)
        logger.debug("worst case it=%d: [%.10g, %.10g]", iteration, best_value, upper)
        if upper - best_value <= tolerance:
            break
    else:
        logger.info("%s: cutting planes stopped with gap %.3e", S.label, upper - best_value)
    return best_value, best_sigma


def _cut_master(
    S: ConvexStateSet, tests: Sequence[np.ndarray], tol: Tolerances
) -> Tuple[float, DensityOperator]:
    """max z s.t. z <= Tr[T_k σ] for all cuts, σ ∈ S."""
    vertices = S.vertices()
    if vertices is not None:
        k = len(vertices)
        values = np.array(
            [[float(np.real(np.vdot(t, v.matrix))) for v in vertices] for t in tests]
        )
        res = linprog(
            np.concatenate([np.zeros(k), [-1.0]]),
            A_ub=np.hstack([-values, np.ones((len(tests), 1))]),
            b_ub=np.zeros(len(tests)),
            A_eq=np.concatenate([np.ones(k), [0.0]])[None, :],
            b_eq=[1.0],
            bounds=[(0, None)] * k + [(None, None)],
            method="highs",
        )
        w = np.clip(res.x[:k], 0.0, None)
        matrix = sum(wi * v.matrix for wi, v in zip(w / w.sum(), vertices))
        return -float(res.fun), DensityOperator.nearest(matrix, S.layout, tol=tol)
    problem = SdpProblem(f"cut-master-{S.name}")
    z = problem.add_scalar("z")
    expr = S.cone_expression(problem)
    problem.add_constraint(expr.trace_terms(), "=", 1.0)
    for t in tests:
        cut = [(block, scaled_adjoint(-1.0, adjoint)(t)) for block, adjoint in expr.terms]
        problem.add_constraint([(z, 1.0)] + cut, "<=", 0.0)
    problem.set_objective([(z, 1.0)], sense="max")
    solution = SdpSolver(tol=tol).solve(problem)
    return solution.value, DensityOperator.nearest(expr.evaluate(solution), S.layout, tol=tol)


def beta_worstcase_pointwise(
    rho: DensityOperator,
    S: ConvexStateSet,
    eps: float,
    scheme: str = "hull",
    samples: int = 64,
    rng: Optional[np.random.Generator] = None,
    tol: Optional[Tolerances] = None,
) -> float:
    """max over σ of β_ε(ρ‖σ).

    ``hull`` optimizes over the whole convex set; ``vertices`` and ``samples`` only
    over the vertex list or drawn members, which may give a strictly smaller value.
    """
    _check_eps(eps)
    if scheme == "hull":
        value, _ = worst_case_state(rho, S, eps, tol=tol)
        return value
    elif scheme == "vertices":
        vertices = S.vertices()
        if vertices is None:
            raise UnsupportedRepresentationError(f"{S.label} has no vertex list")
        return max(beta_simple(rho, v, eps, tol=tol).value for v in vertices)
    elif scheme == "samples":
        rng = rng or np.random.default_rng(0)
        members = list(S.vertices() or []) + [S.sample(rng) for _ in range(samples)]
        return max(beta_simple(rho, m, eps, tol=tol).value for m in members)
    else:
        raise ValueError(f"Unknown pointwise scheme: {scheme}")


def beta_data_processing_check(
    rho: DensityOperator,
    sigma: DensityOperator,
    channel: Union[QuantumChannel, Callable[[HermitianOperator], HermitianOperator]],
    eps: float,
    tol: Optional[Tolerances] = None,
) -> bool:
    """Assert β_ε(N(ρ)‖N(σ)) >= β_ε(ρ‖σ) - 1e-7."""
    apply = channel.apply if isinstance(channel, QuantumChannel) else channel
    before = beta_simple(rho, sigma, eps, tol=tol).value
    rho_out = DensityOperator.nearest(apply(rho).matrix, tol=tol)
    sigma_out = DensityOperator.nearest(apply(sigma).matrix, tol=tol)
    after = beta_simple(rho_out, sigma_out, eps, tol=tol).value
    check_leq("beta(rho||sigma) <= beta(N(rho)||N(sigma))", before, after, 1e-7)
    return True


def mixture_component_bound_check(
    rho: DensityOperator,
    components: Sequence[DensityOperator],
    eps: float,
    tol: Optional[Tolerances] = None,
) -> bool:
    """Assert β_ε(ρ‖σ) >= β_ε(ρ‖σ_j)/k for σ the uniform mixture of k components."""
    if not components:
        raise ValidationError("Need at least one mixture component")
    k = len(components)
    mixture = DensityOperator(
        sum(c.matrix for c in components) / k, components[0].layout, tol=tol
    )
    beta_mix = beta_simple(rho, mixture, eps, tol=tol).value
    for j, component in enumerate(components):
        beta_j = beta_simple(rho, component, eps, tol=tol).value
        check_leq(f"beta(rho||sigma_{j})/{k} <= beta(rho||mixture)", beta_j / k, beta_mix, 1e-7)
    return True


def strong_converse_bound(
    rho: DensityOperator,
    sigma_m: DensityOperator,
    n: int,
    eps: float,
    alpha: float,
    sigma_full: Optional[DensityOperator] = None,
    divergence: str = "sandwiched",
    tol: Optional[Tolerances] = None,
) -> Tuple[float, float]:
    """Both sides of the Rényi strong-converse bound, asserted before returning.

    -(1/n) log β_ε(ρ^{⊗n}‖σ̃) <= (1/n)D_α(ρ^{⊗n}‖σ̃) + α/((α-1)n) log(1/(1-ε))

    σ̃ = σ_m^{⊗k} ⊗ σ_full^{⊗(n-km)} with k = floor(n/m).
    """
    _check_eps(eps)
    tol = resolve(tol)
    if alpha <= 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    if divergence == "sandwiched":
        renyi = sandwiched_renyi
    elif divergence == "petz":
        if alpha > 2:
            raise ValidationError(f"The Petz bound needs alpha in (1, 2], got {alpha}")
        renyi = petz_renyi
    else:
        raise ValueError(f"Unknown divergence: {divergence}")
    width = len(rho.layout)
    if len(sigma_m.layout) % width or sigma_m.layout.factors[:width] != rho.layout.factors:
        raise ValidationError(f"sigma_m layout {sigma_m.layout} is not a power of {rho.layout}")
    m = len(sigma_m.layout) // width
    k, rest = divmod(n, m)
    parts: List[HermitianOperator] = []
    if k:
        parts.append(tensor_power(sigma_m, k, tol))
    if rest:
        if sigma_full is None:
            raise ValidationError(f"n={n} is not a multiple of m={m}; sigma_full is required")
        parts.append(tensor_power(sigma_full, rest, tol))
    sigma_n = tensor(*parts, tol=tol)
    rho_n = tensor_power(rho, n, tol)
    beta = beta_simple(rho_n, sigma_n, eps, tol=tol).value
    lhs = math.inf if beta <= 0 else -math.log(beta) / n
    rhs = renyi(rho_n, sigma_n, alpha, tol) / n + alpha / ((alpha - 1) * n) * math.log(
        1.0 / (1.0 - eps)
    )
    check_leq(f"-(1/n) log beta <= (1/n) D_{alpha}({divergence}) + penalty", lhs, rhs, 1e-7)
    return lhs, rhs


def information_spectrum(rho: HermitianOperator, sigma: HermitianOperator, a: float) -> float:
    """Tr[ρ {ρ ≤ e^a σ}]."""
    _check_pair(rho, sigma)
    scaled = HermitianOperator(math.exp(a) * sigma.matrix, sigma.layout, check=False)
    return spectral_projection_leq(rho, scaled).expectation(rho)


def information_spectrum_check(
    rho: DensityOperator,
    sigma: DensityOperator,
    eps: float,
    a: float,
    tol: Optional[Tolerances] = None,
) -> bool:
    """When Tr[ρ{ρ ≤ e^a σ}] <= ε, assert β_ε(ρ‖σ) <= e^{-a}.

    The test I - {ρ ≤ e^a σ} witnesses the bound. Returns False when the premise fails.
    """
    mass = information_spectrum(rho, sigma, a)
    if mass > eps:
        return False
    beta = beta_simple(rho, sigma, eps, tol=tol).value
    check_leq("beta <= exp(-a)", beta, math.exp(-a), 1e-9)
    return True

