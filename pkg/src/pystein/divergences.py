"""
Quantum relative entropy and Rényi divergences.

All values are in nats and returned as floats; a support violation yields
``math.inf``. Eigenvalues of sigma below ``support_cutoff * spectral radius``
count as zero, and rho-mass above ``support_mass`` on that null space makes the
divergence infinite.
"""

import math
from typing import Optional, Tuple

import numpy as np

from .config import Tolerances, resolve
from .errors import ValidationError
from .qcore import HermitianOperator

LOG2 = math.log(2.0)


def to_bits(nats: float) -> float:
    return nats / LOG2


def _support(
    sigma: HermitianOperator, tol: Tolerances
) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of sigma on its numerical support."""
    w, v = sigma.eigh()
    cutoff = tol.support_cutoff * max(float(np.max(np.abs(w))), 1e-300)
    keep = w > cutoff
    return w[keep], v[:, keep]


def _mass_outside(rho: HermitianOperator, basis: np.ndarray) -> float:
    inside = np.real(np.einsum("ik,ij,jk->", basis.conj(), rho.matrix, basis))
    return rho.trace() - float(inside)


def _check(rho: HermitianOperator, sigma: HermitianOperator) -> None:
    if rho.dim != sigma.dim:
        raise ValidationError(f"Shape mismatch: {rho.layout} vs {sigma.layout}")


def support_violated(
    rho: HermitianOperator, sigma: HermitianOperator, tol: Optional[Tolerances] = None
) -> bool:
    """True when supp(rho) is not contained in supp(sigma)."""
    tol = resolve(tol)
    _, basis = _support(sigma, tol)
    return _mass_outside(rho, basis) > tol.support_mass


def _power_on_support(w: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    return (v * w**p) @ v.conj().T


def _entropy_term(rho: HermitianOperator) -> float:
    """Tr[rho log rho] with 0 log 0 = 0."""
    w = rho.eigvalsh()
    w = w[w > 0]
    return float(np.sum(w * np.log(w)))


def relative_entropy(
    rho: HermitianOperator, sigma: HermitianOperator, tol: Optional[Tolerances] = None
) -> float:
    """D(rho||sigma) = Tr[rho (log rho - log sigma)]."""
    _check(rho, sigma)
    tol = resolve(tol)
    w, v = _support(sigma, tol)
    if _mass_outside(rho, v) > tol.support_mass:
        return math.inf
    diag = np.real(np.einsum("ik,ij,jk->k", v.conj(), rho.matrix, v))
    return _entropy_term(rho) - float(np.sum(diag * np.log(w)))


def sandwiched_renyi(
    rho: HermitianOperator,
    sigma: HermitianOperator,
    alpha: float,
    tol: Optional[Tolerances] = None,
) -> float:
    """(1/(alpha-1)) log Tr[(sigma^{(1-alpha)/2alpha} rho sigma^{(1-alpha)/2alpha})^alpha]."""
    _check(rho, sigma)
    if alpha <= 0 or alpha == 1:
        raise ValidationError(f"alpha must be positive and different from 1, got {alpha}")
    tol = resolve(tol)
    w, v = _support(sigma, tol)
    if alpha > 1 and _mass_outside(rho, v) > tol.support_mass:
        return math.inf
    s = _power_on_support(w, v, (1 - alpha) / (2 * alpha))
    inner = np.linalg.eigvalsh(s @ rho.matrix @ s)
    q = float(np.sum(np.clip(inner, 0.0, None) ** alpha))
    if q <= 0:
        return math.inf
    return math.log(q) / (alpha - 1)


def petz_renyi(
    rho: HermitianOperator,
    sigma: HermitianOperator,
    alpha: float,
    tol: Optional[Tolerances] = None,
) -> float:
    """(1/(alpha-1)) log Tr[rho^alpha sigma^{1-alpha}]."""
    _check(rho, sigma)
    if alpha <= 0 or alpha == 1:
        raise ValidationError(f"alpha must be positive and different from 1, got {alpha}")
    tol = resolve(tol)
    w, v = _support(sigma, tol)
    if alpha > 1 and _mass_outside(rho, v) > tol.support_mass:
        return math.inf
    wr, vr = rho.eigh()
    rho_alpha = _power_on_support(np.clip(wr, 0.0, None), vr, alpha)
    q = float(np.real(np.trace(rho_alpha @ _power_on_support(w, v, 1 - alpha))))
    if q <= 0:
        return math.inf
    return math.log(q) / (alpha - 1)


def log_derivative(
    sigma: np.ndarray,
    direction: np.ndarray,
    floor: float = 1e-300,
    cutoff: Optional[float] = None,
) -> np.ndarray:
    """Fréchet derivative D log(sigma)[direction] by the Daleckii-Krein formula.

    With ``cutoff`` set, entries touching eigenvalues below ``cutoff * max eigenvalue``
    are dropped, restricting the derivative to the numerical support of sigma.
    """
    w, u = np.linalg.eigh(sigma)
    keep = w > (cutoff or 0.0) * np.max(w)
    w = np.clip(w, floor, None)
    log_w = np.log(w)
    denom = w[:, None] - w[None, :]
    same = np.abs(denom) <= 1e-12 * np.max(w)
    safe = np.where(same, 1.0, denom)
    k = (log_w[:, None] - log_w[None, :]) / safe
    k[same] = (0.5 * (1.0 / w[:, None] + 1.0 / w[None, :]))[same]
    if cutoff is not None:
        k[~(keep[:, None] & keep[None, :])] = 0.0
    inner = u.conj().T @ direction @ u
    result = u @ (k * inner) @ u.conj().T
    return (result + result.conj().T) / 2


def relative_entropy_gradient(
    rho: HermitianOperator, sigma: np.ndarray, tol: Optional[Tolerances] = None
) -> np.ndarray:
    """Gradient of sigma -> D(rho||sigma), equal to -D log(sigma)[rho] on the support of sigma."""
    return -log_derivative(sigma, rho.matrix, cutoff=resolve(tol).support_cutoff)
