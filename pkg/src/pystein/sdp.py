"""
Dense primal-dual interior-point solver for Hermitian semidefinite programs.

Standard form (minimization convention)::

    min  Σ_j Re Tr[C_j X_j]   s.t.  Σ_j Re Tr[A_ij X_j] = b_i,  X_j ⪰ 0
    max  b·y                  s.t.  S_j = C_j - Σ_i y_i A_ij ⪰ 0

Inequality rows get a 1x1 slack block. The iteration is infeasible-start path
following with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
"""

import json
import logging
import warnings
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .config import Tolerances, resolve
from .errors import BudgetExceededError, ValidationError
from .qcore import DimLayout, embed_kept, trace_out, transpose_factors

logger = logging.getLogger(__name__)

SENSES = ("=", "<=", ">=")
STATUSES = ("optimal", "infeasible", "unbounded", "numerical-fail")

Adjoint = Callable[[np.ndarray], np.ndarray]
Coefficient = Union[np.ndarray, float, complex]


def hermitian_basis(m: int) -> List[np.ndarray]:
    """Orthonormal basis of m x m Hermitian matrices under Re Tr[A B]."""
    basis = []
    for a in range(m):
        e = np.zeros((m, m), dtype=complex)
        e[a, a] = 1.0
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for a in range(m):
        for b in range(a + 1, m):
            e = np.zeros((m, m), dtype=complex)
            e[a, b] = e[b, a] = s
            basis.append(e)
            e = np.zeros((m, m), dtype=complex)
            e[a, b] = -1j * s
            e[b, a] = 1j * s
            basis.append(e)
    return basis


def _as_matrix(c: Coefficient, dim: int) -> np.ndarray:
    m = np.array(c, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.shape != (dim, dim):
        raise ValidationError(f"Coefficient shape {m.shape} does not match block dim {dim}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("Coefficients must be finite")
    return (m + m.conj().T) / 2


# Adjoint maps used to express matrix constraints Σ_j L_j(X_j) = R.
def identity_adjoint(h: np.ndarray) -> np.ndarray:
    return h


def scaled_adjoint(c: float, adjoint: Adjoint = identity_adjoint) -> Adjoint:
    return lambda h: c * adjoint(h)


def scalar_adjoint(m: np.ndarray) -> Adjoint:
    """Adjoint of u -> u M for a 1x1 block u."""
    m = np.asarray(m, dtype=complex)
    return lambda h: np.array([[np.real(np.vdot(m, h))]], dtype=complex)


def partial_trace_adjoint(layout: DimLayout, keep: Sequence[int]) -> Adjoint:
    """Adjoint of X -> Tr_{not keep}[X]."""
    return lambda h: embed_kept(h, layout, keep)


def embedding_adjoint(layout: DimLayout, keep: Sequence[int]) -> Adjoint:
    """Adjoint of H -> H ⊗ I, which is the partial trace."""
    return lambda x: trace_out(x, layout.factors, keep)


def partial_transpose_adjoint(layout: DimLayout, axes: Sequence[int]) -> Adjoint:
    return lambda h: transpose_factors(h, layout.factors, axes)


def compose_adjoints(*adjoints: Adjoint) -> Adjoint:
    """Adjoint of L_1 ∘ L_2 ∘ ... given the adjoints in the same order."""

    def composed(h: np.ndarray) -> np.ndarray:
        for adj in adjoints:
            h = adj(h)
        return h

    return composed


class ConstraintGroup:
    """Rows produced by one matrix constraint, with the basis that generated them."""

    def __init__(self, rows: List[int], basis: List[np.ndarray], dim: int):
        self.rows = rows
        self.basis = basis
        self.dim = dim

    def __repr__(self) -> str:
        return f"ConstraintGroup(dim={self.dim}, rows={len(self.rows)})"


class SdpProblem:
    """A semidefinite program over Hermitian blocks."""

    def __init__(self, name: str = "sdp"):
        self.name = name
        self.block_dims: List[int] = []
        self.block_names: List[str] = []
        self.objective: Dict[int, np.ndarray] = {}
        self.objective_sense = "min"
        self.objective_constant = 0.0
        self.rows: List[Dict[int, np.ndarray]] = []
        self.senses: List[str] = []
        self.rhs: List[float] = []

    def add_block(self, dim: int, name: Optional[str] = None) -> int:
        if dim < 1:
            raise ValidationError(f"Block dimension must be positive, got {dim}")
        self.block_dims.append(int(dim))
        self.block_names.append(name or f"X{len(self.block_dims) - 1}")
        return len(self.block_dims) - 1

    def add_scalar(self, name: Optional[str] = None) -> int:
        """A nonnegative scalar variable, i.e. a 1x1 block."""
        return self.add_block(1, name)

    def set_objective(
        self,
        terms: Sequence[Tuple[int, Coefficient]],
        sense: str = "min",
        constant: float = 0.0,
    ) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"Unknown objective sense: {sense}")
        self.objective = {}
        for block, c in terms:
            m = _as_matrix(c, self.block_dims[block])
            self.objective[block] = self.objective.get(block, 0) + m
        self.objective_sense = sense
        self.objective_constant = float(constant)

    def add_constraint(
        self, terms: Sequence[Tuple[int, Coefficient]], sense: str, rhs: float
    ) -> int:
        """Σ Re Tr[A_j X_j] (sense) rhs."""
        if sense not in SENSES:
            raise ValueError(f"Unknown constraint sense: {sense}")
        row: Dict[int, np.ndarray] = {}
        for block, c in terms:
            m = _as_matrix(c, self.block_dims[block])
            row[block] = row[block] + m if block in row else m
        self.rows.append(row)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        return len(self.rows) - 1

    def add_matrix_equality(
        self, terms: Sequence[Tuple[int, Adjoint]], rhs: np.ndarray
    ) -> ConstraintGroup:
        """Σ_j L_j(X_j) = R, given the adjoints of the maps L_j."""
        rhs = np.asarray(rhs, dtype=complex)
        m = rhs.shape[0]
        basis = hermitian_basis(m)
        rows = []
        for h in basis:
            coefficients = [(block, adjoint(h)) for block, adjoint in terms]
            rows.append(self.add_constraint(coefficients, "=", float(np.real(np.vdot(h, rhs)))))
        return ConstraintGroup(rows, basis, m)

    def add_matrix_inequality(
        self, terms: Sequence[Tuple[int, Adjoint]], sense: str, rhs: np.ndarray
    ) -> ConstraintGroup:
        """Σ_j L_j(X_j) ⪰ R (sense '>=') or ⪯ R (sense '<='), through a PSD slack block."""
        if sense not in ("<=", ">="):
            raise ValueError(f"Unknown matrix inequality sense: {sense}")
        m = np.asarray(rhs).shape[0]
        slack = self.add_block(m, f"slack{len(self.block_dims)}")
        sign = -1.0 if sense == ">=" else 1.0
        return self.add_matrix_equality(list(terms) + [(slack, scaled_adjoint(sign))], rhs)

    @property
    def num_variables(self) -> int:
        return int(sum(d * d for d in self.block_dims))

    def to_dict(self) -> Dict[str, Any]:
        def enc(m: np.ndarray) -> Dict[str, Any]:
            return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

        return {
            "name": self.name,
            "blocks": list(self.block_dims),
            "block_names": list(self.block_names),
            "objective": {str(j): enc(m) for j, m in sorted(self.objective.items())},
            "objective_sense": self.objective_sense,
            "objective_constant": self.objective_constant,
            "rows": [
                {
                    "terms": {str(j): enc(m) for j, m in sorted(row.items())},
                    "sense": sense,
                    "rhs": rhs,
                }
                for row, sense, rhs in zip(self.rows, self.senses, self.rhs)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SdpProblem":
        def dec(d: Dict[str, Any]) -> np.ndarray:
            return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)

        problem = cls(data.get("name", "sdp"))
        names = data.get("block_names", [None] * len(data["blocks"]))
        for dim, name in zip(data["blocks"], names):
            problem.add_block(int(dim), name)
        problem.set_objective(
            [(int(j), dec(m)) for j, m in data.get("objective", {}).items()],
            data.get("objective_sense", "min"),
            data.get("objective_constant", 0.0),
        )
        for row in data.get("rows", []):
            problem.add_constraint(
                [(int(j), dec(m)) for j, m in row["terms"].items()], row["sense"], row["rhs"]
            )
        return problem

    def __repr__(self) -> str:
        return f"SdpProblem(name='{self.name}', blocks={self.block_dims}, rows={len(self.rows)})"


class SdpSolution:
    """Result of SdpSolver.solve, reported in the problem's own objective sense.

    ``y`` holds the multipliers of the minimization form: for a 'max' problem the
    objective was negated before solving.
    """

    def __init__(
        self,
        status: str,
        primal_blocks: List[np.ndarray],
        y: np.ndarray,
        dual_blocks: List[np.ndarray],
        primal_obj: float,
        dual_obj: float,
        iterations: int,
        residuals: Dict[str, float],
        history: Optional[List[Tuple[float, float]]] = None,
    ):
        self.status = status
        self.primal_blocks = primal_blocks
        self.y = y
        self.dual_blocks = dual_blocks
        self.primal_obj = primal_obj
        self.dual_obj = dual_obj
        self.iterations = iterations
        self.residuals = residuals
        self.history = history or []

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def value(self) -> float:
        return self.primal_obj

    def block(self, j: int) -> np.ndarray:
        return self.primal_blocks[j]

    def scalar(self, j: int) -> float:
        return float(np.real(self.primal_blocks[j][0, 0]))

    def dual_matrix(self, group: ConstraintGroup) -> np.ndarray:
        """Σ_k y_k H_k over the rows of a matrix constraint."""
        out = np.zeros((group.dim, group.dim), dtype=complex)
        for row, h in zip(group.rows, group.basis):
            out += self.y[row] * h
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "primal_obj": self.primal_obj,
            "dual_obj": self.dual_obj,
            "iterations": self.iterations,
            "residuals": dict(self.residuals),
            "y": self.y.tolist(),
            "primal_blocks": [
                {"re": np.real(b).tolist(), "im": np.imag(b).tolist()} for b in self.primal_blocks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __repr__(self) -> str:
        return f"SdpSolution(status='{self.status}', value={self.primal_obj:.10g})"


class _StandardForm:
    """Equality form with slack blocks appended and dependent rows removed."""

    def __init__(self, problem: SdpProblem, rank_tol: float = 1e-10):
        self.user_blocks = len(problem.block_dims)
        dims = list(problem.block_dims)
        rows = [dict(r) for r in problem.rows]
        for i, sense in enumerate(problem.senses):
            if sense != "=":
                dims.append(1)
                sign = 1.0 if sense == "<=" else -1.0
                rows[i][len(dims) - 1] = np.array([[sign]], dtype=complex)
        self.dims = dims
        sign = -1.0 if problem.objective_sense == "max" else 1.0
        self.sign = sign
        self.c = [
            sign * problem.objective.get(j, np.zeros((d, d), dtype=complex))
            if j < self.user_blocks
            else np.zeros((d, d), dtype=complex)
            for j, d in enumerate(dims)
        ]
        b_all = np.array(problem.rhs, dtype=float)
        self.num_rows = len(rows)
        self.kept, self.consistent = self._independent_rows(rows, b_all, rank_tol)
        self.b = b_all[self.kept]
        # per-block stacked coefficients of the kept rows
        self.block_rows: List[np.ndarray] = []
        self.block_coeffs: List[np.ndarray] = []
        for j, d in enumerate(dims):
            idx = [k for k, i in enumerate(self.kept) if j in rows[i]]
            self.block_rows.append(np.array(idx, dtype=int))
            if idx:
                self.block_coeffs.append(np.stack([rows[self.kept[k]][j] for k in idx]))
            else:
                self.block_coeffs.append(np.zeros((0, d, d), dtype=complex))

    def _independent_rows(
        self, rows: List[Dict[int, np.ndarray]], b: np.ndarray, rank_tol: float
    ) -> Tuple[List[int], bool]:
        if not rows:
            return [], True
        offsets = np.cumsum([0] + [d * d for d in self.dims])
        mat = np.zeros((len(rows), 2 * int(offsets[-1])))
        for i, row in enumerate(rows):
            for j, m in row.items():
                lo, hi = offsets[j], offsets[j + 1]
                mat[i, 2 * lo:lo + hi] = np.real(m).ravel()
                mat[i, lo + hi:2 * hi] = np.imag(m).ravel()
        _, r, piv = linalg.qr(mat.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag[0] == 0:
            return [], bool(np.all(np.abs(b) <= 1e-8))
        rank = int(np.sum(diag > rank_tol * diag[0]))
        kept = sorted(int(p) for p in piv[:rank])
        dropped = [i for i in range(len(rows)) if i not in set(kept)]
        consistent = True
        if dropped:
            coeffs, *_ = np.linalg.lstsq(mat[kept].T, mat[dropped].T, rcond=None)
            predicted = coeffs.T @ b[kept]
            scale = 1.0 + float(np.max(np.abs(b)))
            consistent = bool(np.all(np.abs(predicted - b[dropped]) <= 1e-8 * scale))
        return kept, consistent

    def apply(self, x: List[np.ndarray]) -> np.ndarray:
        """A(X)."""
        out = np.zeros(len(self.kept))
        for rows, coeffs, xj in zip(self.block_rows, self.block_coeffs, x):
            if rows.size:
                out[rows] += np.real(np.einsum("iab,ba->i", coeffs, xj))
        return out

    def adjoint(self, y: np.ndarray) -> List[np.ndarray]:
        """A*(y), one matrix per block."""
        out = []
        for rows, coeffs, d in zip(self.block_rows, self.block_coeffs, self.dims):
            if rows.size:
                out.append(np.einsum("i,iab->ab", y[rows], coeffs))
            else:
                out.append(np.zeros((d, d), dtype=complex))
        return out

    def schur(self, w: List[np.ndarray]) -> np.ndarray:
        """M_ik = Σ_j Re Tr[A_ij W_j A_kj W_j]."""
        m = np.zeros((len(self.kept), len(self.kept)))
        for rows, coeffs, wj in zip(self.block_rows, self.block_coeffs, w):
            if rows.size:
                waw = wj @ coeffs @ wj
                m[np.ix_(rows, rows)] += np.real(np.einsum("iab,kba->ik", coeffs, waw))
        return (m + m.T) / 2


def _inner(a: List[np.ndarray], b: List[np.ndarray]) -> float:
    return float(sum(np.real(np.vdot(x, y)) for x, y in zip(a, b)))


def _herm(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _max_step(chol: np.ndarray, delta: np.ndarray) -> float:
    """Largest a with L L† + a Δ ⪰ 0."""
    t = linalg.solve_triangular(chol, delta, lower=True)
    t = linalg.solve_triangular(chol, t.conj().T, lower=True)
    lam_min = float(np.linalg.eigvalsh(_herm(t))[0])
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _schur_solver(m: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Cholesky solve of the Schur system, falling back to least squares."""
    if m.size == 0:
        return lambda rhs: rhs
    try:
        factor = linalg.cho_factor(m)
        return lambda rhs: linalg.cho_solve(factor, rhs)
    except linalg.LinAlgError:
        return lambda rhs: np.linalg.lstsq(m, rhs, rcond=None)[0]


def _cholesky(m: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(_herm(m))
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_herm(m))
        w = np.clip(w, 1e-300, None)
        _, r = np.linalg.qr((v * np.sqrt(w)).conj().T)
        return r.conj().T


class SdpSolver:
    """Primal-dual path following with NT scaling and Mehrotra correction."""

    def __init__(
        self,
        max_iterations: int = 200,
        tolerance: float = 1e-9,
        accept_tolerance: float = 1e-7,
        step_factor: float = 0.98,
        ray_margin: float = 1e-8,
        ray_scale: float = 1e6,
        tol: Optional[Tolerances] = None,
    ):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.accept_tolerance = accept_tolerance
        self.step_factor = step_factor
        self.ray_margin = ray_margin
        self.ray_scale = ray_scale
        self.tol = resolve(tol)

    def solve(self, problem: SdpProblem) -> SdpSolution:
        if problem.num_variables > self.tol.sdp_variable_cap:
            raise BudgetExceededError(
                f"SDP '{problem.name}' variables", problem.num_variables, self.tol.sdp_variable_cap
            )
        if len(problem.rows) > self.tol.sdp_row_cap:
            raise BudgetExceededError(
                f"SDP '{problem.name}' constraint rows", len(problem.rows), self.tol.sdp_row_cap
            )
        sf = _StandardForm(problem)
        if not sf.consistent:
            logger.info("%s: inconsistent equality rows", problem.name)
            return self._result(problem, sf, "infeasible", None, 0, {}, [])
        return self._iterate(problem, sf)

    def _initial_point(
        self, sf: _StandardForm
    ) -> Tuple[List[np.ndarray], np.ndarray, List[np.ndarray]]:
        x, s = [], []
        for j, d in enumerate(sf.dims):
            coeffs = sf.block_coeffs[j]
            rows = sf.block_rows[j]
            norms = [np.linalg.norm(a) for a in coeffs]
            xi = max(10.0, np.sqrt(d))
            eta = max(10.0, np.sqrt(d), np.linalg.norm(sf.c[j]))
            for a_norm, row in zip(norms, rows):
                xi = max(xi, d * (1.0 + abs(sf.b[row])) / (1.0 + a_norm))
                eta = max(eta, (1.0 + a_norm) / np.sqrt(d))
            x.append(xi * np.eye(d, dtype=complex))
            s.append(eta * np.eye(d, dtype=complex))
        return x, np.zeros(len(sf.kept)), s

    def _iterate(self, problem: SdpProblem, sf: _StandardForm) -> SdpSolution:
        x, y, s = self._initial_point(sf)
        total_dim = sum(sf.dims)
        b_norm = 1.0 + float(np.linalg.norm(sf.b))
        c_norm = 1.0 + float(np.sqrt(sum(np.linalg.norm(c) ** 2 for c in sf.c)))
        best: Optional[Tuple[float, List[np.ndarray], np.ndarray, List[np.ndarray]]] = None
        history: List[Tuple[float, float]] = []
        status = "numerical-fail"
        iteration = 0

        for iteration in range(1, self.max_iterations + 1):
            r_p = sf.b - sf.apply(x)
            a_star_y = sf.adjoint(y)
            r_d = [c - a - sj for c, a, sj in zip(sf.c, a_star_y, s)]
            pobj = _inner(sf.c, x)
            dobj = float(sf.b @ y)
            history.append((pobj, dobj))
            mu = _inner(x, s) / total_dim
            rel_p = float(np.linalg.norm(r_p)) / b_norm
            rel_d = float(np.sqrt(sum(np.linalg.norm(r) ** 2 for r in r_d))) / c_norm
            rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))
            err = max(rel_p, rel_d, rel_gap)
            if best is None or err < best[0]:
                best = (err, [xj.copy() for xj in x], y.copy(), [sj.copy() for sj in s])
            logger.debug(
                "%s it=%d pobj=%.10g dobj=%.10g rel_p=%.2e rel_d=%.2e gap=%.2e",
                problem.name, iteration, pobj, dobj, rel_p, rel_d, rel_gap,
            )
            if err <= self.tolerance:
                status = "optimal"
                break
            if dobj > self.ray_scale * c_norm and self._dual_ray(a_star_y, dobj):
                status = "infeasible"
                break
            if -pobj > self.ray_scale * b_norm and self._primal_ray(sf, x, -pobj):
                status = "unbounded"
                break
            if max(np.linalg.norm(xj) for xj in x) > 1e14 or max(
                np.linalg.norm(sj) for sj in s
            ) > 1e14:
                break

            try:
                step = self._newton_step(sf, x, s, r_p, r_d, mu)
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.debug("%s: step failed (%s)", problem.name, e)
                break
            dx, dy, ds, alpha_p, alpha_d = step
            if max(alpha_p, alpha_d) < 1e-12:
                break
            x = [_herm(xj + alpha_p * d) for xj, d in zip(x, dx)]
            y = y + alpha_d * dy
            s = [_herm(sj + alpha_d * d) for sj, d in zip(s, ds)]

        assert best is not None
        if status == "numerical-fail" and best[0] <= self.accept_tolerance:
            status = "optimal"
        if status in ("optimal", "numerical-fail"):
            _, x, y, s = best
        if status == "numerical-fail":
            warnings.warn(
                f"SDP '{problem.name}' stopped without convergence (error {best[0]:.2e})",
                RuntimeWarning,
            )
        residuals = {
            "primal": float(np.linalg.norm(sf.b - sf.apply(x))) / b_norm,
            "dual": float(
                np.sqrt(
                    sum(
                        np.linalg.norm(c - a - sj) ** 2
                        for c, a, sj in zip(sf.c, sf.adjoint(y), s)
                    )
                )
            )
            / c_norm,
        }
        return self._result(problem, sf, status, (x, y, s), iteration, residuals, history)

    def _dual_ray(self, a_star_y: List[np.ndarray], by: float) -> bool:
        """y/(b·y) is a Farkas certificate when A*(y/(b·y)) ⪯ margin."""
        worst = max(float(np.linalg.eigvalsh(_herm(a))[-1]) for a in a_star_y)
        return worst <= self.ray_margin * by

    def _primal_ray(self, sf: _StandardForm, x: List[np.ndarray], scale: float) -> bool:
        """X/(-<C,X>) is an improving ray when A(X) vanishes relative to the objective."""
        return float(np.linalg.norm(sf.apply(x))) <= self.ray_margin * scale

    def _newton_step(
        self,
        sf: _StandardForm,
        x: List[np.ndarray],
        s: List[np.ndarray],
        r_p: np.ndarray,
        r_d: List[np.ndarray],
        mu: float,
    ) -> Tuple[List[np.ndarray], np.ndarray, List[np.ndarray], float, float]:
        chol_x, chol_s, g, g_inv, lam, w = [], [], [], [], [], []
        for xj, sj in zip(x, s):
            lx = _cholesky(xj)
            ls = _cholesky(sj)
            u, sv, vh = np.linalg.svd(ls.conj().T @ lx)
            gj = lx @ vh.conj().T / np.sqrt(sv)
            g_inv_j = (np.sqrt(sv)[:, None] * vh) @ linalg.solve_triangular(
                lx, np.eye(lx.shape[0]), lower=True
            )
            chol_x.append(lx)
            chol_s.append(ls)
            g.append(gj)
            g_inv.append(g_inv_j)
            lam.append(sv)
            w.append(_herm(gj @ gj.conj().T))

        m = sf.schur(w)
        solve_m = _schur_solver(m)

        def direction(
            rk: List[np.ndarray],
        ) -> Tuple[List[np.ndarray], np.ndarray, List[np.ndarray]]:
            wrw = [wj @ rd @ wj for wj, rd in zip(w, r_d)]
            rhs = r_p - sf.apply(rk) + sf.apply(wrw)
            dy = solve_m(rhs)
            a_star = sf.adjoint(dy)
            ds = [_herm(rd - a) for rd, a in zip(r_d, a_star)]
            dx = [_herm(r - wj @ d @ wj) for r, wj, d in zip(rk, w, ds)]
            return dx, dy, ds

        def steps(
            dx: List[np.ndarray], ds: List[np.ndarray], factor_: float
        ) -> Tuple[float, float]:
            ap = min([_max_step(l, d) for l, d in zip(chol_x, dx)] + [np.inf])
            ad = min([_max_step(l, d) for l, d in zip(chol_s, ds)] + [np.inf])
            return min(1.0, factor_ * ap), min(1.0, factor_ * ad)

        total_dim = sum(sf.dims)
        # predictor
        dx_a, _, ds_a = direction([-xj for xj in x])
        ap_a, ad_a = steps(dx_a, ds_a, 1.0)
        mu_aff = _inner(
            [xj + ap_a * d for xj, d in zip(x, dx_a)], [sj + ad_a * d for sj, d in zip(s, ds_a)]
        ) / total_dim
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        rk = []
        for gj, gi, lj, dxa, dsa in zip(g, g_inv, lam, dx_a, ds_a):
            dxt = gi @ dxa @ gi.conj().T
            dst = gj.conj().T @ dsa @ gj
            rc = sigma * mu * np.eye(lj.size) - np.diag(lj**2) - _herm(dxt @ dst)
            k = 2.0 * rc / (lj[:, None] + lj[None, :])
            rk.append(_herm(gj @ k @ gj.conj().T))
        dx, dy, ds = direction(rk)
        alpha_p, alpha_d = steps(dx, ds, self.step_factor)
        return dx, dy, ds, alpha_p, alpha_d

    def _result(
        self,
        problem: SdpProblem,
        sf: _StandardForm,
        status: str,
        point: Optional[Tuple[List[np.ndarray], np.ndarray, List[np.ndarray]]],
        iterations: int,
        residuals: Dict[str, float],
        history: List[Tuple[float, float]],
    ) -> SdpSolution:
        n_user = sf.user_blocks
        y_full = np.zeros(sf.num_rows)
        if point is None:
            x = [np.zeros((d, d), dtype=complex) for d in problem.block_dims]
            s = [np.zeros((d, d), dtype=complex) for d in problem.block_dims]
            pobj = dobj = float("nan")
        else:
            xs, y, ss = point
            y_full[sf.kept] = y
            x, s = xs[:n_user], ss[:n_user]
            pobj = _inner(sf.c, xs)
            dobj = float(sf.b @ y)
        if status == "infeasible":
            pobj = np.inf * sf.sign
            dobj = np.nan if point is None else dobj * sf.sign + problem.objective_constant
            primal, dual = pobj, dobj
        elif status == "unbounded":
            primal = -np.inf * sf.sign
            dual = np.nan
        else:
            primal = sf.sign * pobj + problem.objective_constant
            dual = sf.sign * dobj + problem.objective_constant
        logger.debug(
            "%s: %s after %d iterations, value %.10g", problem.name, status, iterations, primal
        )
        return SdpSolution(status, x, y_full, s, primal, dual, iterations, residuals, history)


def solve(problem: SdpProblem, solver: Optional[SdpSolver] = None) -> SdpSolution:
    """Solve with a default-configured SdpSolver."""
    return (solver or SdpSolver()).solve(problem)
