"""
Permutation twirling, pinching maps and the eigenvalue-count bound.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .config import Tolerances, resolve
from .divergences import relative_entropy
from .errors import BudgetExceededError, InequalityViolation, ValidationError
from .qcore import (
    DensityOperator,
    DimLayout,
    HermitianOperator,
    like_operator,
    permute_operator,
    spectral_blocks,
)
from .utils import all_permutations, transpositions

logger = logging.getLogger(__name__)


def _check_identical_factors(x: HermitianOperator, n: int, d: int) -> None:
    if x.layout != DimLayout([d] * n):
        raise ValidationError(f"Expected {n} factors of dimension {d}, got {x.layout}")


def twirl(
    x: HermitianOperator, n: int, d: int, tol: Optional[Tolerances] = None
) -> HermitianOperator:
    """(1/n!) Σ_g U(g) X U(g)†, summed in lexicographic permutation order."""
    tol = resolve(tol)
    _check_identical_factors(x, n, d)
    cost = math.factorial(n) * x.dim * x.dim
    if cost > tol.twirl_cost_cap:
        raise BudgetExceededError(f"twirl n={n}, d={d}", cost, tol.twirl_cost_cap)
    total = np.zeros_like(x.matrix)
    for g in all_permutations(n):
        total += permute_operator(x, g).matrix
    return like_operator(x, total / math.factorial(n), x.layout)


def is_permutation_invariant(x: HermitianOperator, atol: float = 1e-9) -> bool:
    """Check [X, U(g)] = 0 on the adjacent transpositions, which generate S_n."""
    n = len(x.layout)
    if n == 1:
        return True
    for g in transpositions(n):
        if not np.allclose(permute_operator(x, g).matrix, x.matrix, atol=atol, rtol=0.0):
            return False
    return True


class PinchingMap:
    """Block-diagonalization in the clustered eigenspaces of a reference operator."""

    def __init__(self, reference: HermitianOperator, tol: Optional[Tolerances] = None):
        self.tol = resolve(tol)
        self.source_layout = reference.layout
        self.reference = reference
        blocks = spectral_blocks(reference, self.tol)
        self.eigenvalues: List[float] = [value for value, _ in blocks]
        self.bases: List[np.ndarray] = [basis for _, basis in blocks]

    @property
    def blocks(self) -> List[np.ndarray]:
        """Projectors E_j."""
        return [v @ v.conj().T for v in self.bases]

    @property
    def num_blocks(self) -> int:
        return len(self.bases)

    def completeness_residual(self) -> float:
        total = sum(self.blocks)
        return float(np.max(np.abs(total - np.eye(self.source_layout.total_dim))))

    def __call__(self, x: HermitianOperator) -> HermitianOperator:
        return pinch(self, x)

    def adjoint(self, x: HermitianOperator) -> HermitianOperator:
        """Pinching is self-adjoint under the Hilbert-Schmidt product."""
        return pinch(self, x)

    def __repr__(self) -> str:
        return f"PinchingMap(blocks={self.num_blocks}, layout={list(self.source_layout.factors)})"


def pinch(pinching: PinchingMap, x: HermitianOperator) -> HermitianOperator:
    """Σ_j E_j X E_j."""
    if x.dim != pinching.source_layout.total_dim:
        raise ValidationError(f"Shape mismatch: {x.layout} vs {pinching.source_layout}")
    out = np.zeros_like(x.matrix)
    for v in pinching.bases:
        out += v @ (v.conj().T @ x.matrix @ v) @ v.conj().T
    return like_operator(x, out, x.layout)


@dataclass
class PinchingAuditReport:
    """Both sides of D(rho||E(rho)) = D(rho||sigma) - D(E(rho)||sigma) and the log-block bound."""

    divergence_to_pinched: float
    divergence_difference: float
    log_blocks: float
    num_blocks: int
    applicable: bool
    identity_residual: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def pinching_entropy_identity_audit(
    rho_n: DensityOperator,
    sigma_ref: DensityOperator,
    identity_tol: float = 1e-7,
    bound_tol: float = 1e-9,
    tol: Optional[Tolerances] = None,
) -> PinchingAuditReport:
    """Audit the pinching identity and D(rho||E(rho)) <= log(#blocks).

    Raises InequalityViolation when either check fails on finite divergences.
    """
    pinching = PinchingMap(sigma_ref, tol)
    pinched = pinch(pinching, rho_n)
    d_pinched = relative_entropy(rho_n, pinched, tol)
    d_rho = relative_entropy(rho_n, sigma_ref, tol)
    d_pinched_ref = relative_entropy(pinched, sigma_ref, tol)
    log_blocks = math.log(pinching.num_blocks)
    finite = all(math.isfinite(v) for v in (d_pinched, d_rho, d_pinched_ref))
    if not finite:
        logger.info("pinching audit not applicable: infinite divergence")
        return PinchingAuditReport(
            d_pinched, math.nan, log_blocks, pinching.num_blocks, False, math.nan, False
        )
    difference = d_rho - d_pinched_ref
    residual = abs(d_pinched - difference)
    if residual > identity_tol:
        raise InequalityViolation("pinching identity residual", residual, identity_tol)
    if d_pinched > log_blocks + bound_tol:
        raise InequalityViolation("D(rho||E(rho)) <= log(#blocks)", d_pinched, log_blocks)
    logger.debug(
        "pinching audit: D=%.3e, residual=%.3e, log blocks=%.3f", d_pinched, residual, log_blocks
    )
    return PinchingAuditReport(
        d_pinched, difference, log_blocks, pinching.num_blocks, True, residual, True
    )


def eigenvalue_count_bound(n: int, d: int) -> int:
    """(n+1)^{(d+2)(d-1)/2}, bounding the distinct eigenvalues of a permutation-invariant state."""
    if n < 1 or d < 1:
        raise ValidationError(f"n and d must be positive, got n={n}, d={d}")
    return (n + 1) ** ((d + 2) * (d - 1) // 2)


def distinct_eigenvalue_count(x: HermitianOperator, tol: Optional[Tolerances] = None) -> int:
    return len(spectral_blocks(x, tol))
