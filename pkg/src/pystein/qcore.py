"""
Dense Hermitian linear algebra, states, tests and channels on tensor-factor layouts.

Channels are stored by their normalized Choi state J(N) = (id ⊗ N)(Φ_d) on an
input ⊗ output layout. Tensor powers of a channel keep the interleaved
[in, out, in, out, ...] factor order, so ``input_axes`` records where the input
factors sit.
"""

from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from .config import Tolerances, resolve
from .errors import BudgetExceededError, ValidationError
from .utils import inverse, is_permutation


class DimLayout:
    """Ordered local dimensions of a composite system."""

    def __init__(self, factors: Sequence[int]):
        factors = tuple(int(f) for f in factors)
        if not factors:
            raise ValidationError("A layout needs at least one factor")
        if any(f < 1 for f in factors):
            raise ValidationError(f"Layout factors must be positive, got {factors}")
        self.factors: Tuple[int, ...] = factors

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    @classmethod
    def of(cls, layout: Union["DimLayout", Sequence[int], int]) -> "DimLayout":
        if isinstance(layout, DimLayout):
            return layout
        if isinstance(layout, (int, np.integer)):
            return cls([int(layout)])
        return cls(layout)

    def concat(self, other: "DimLayout") -> "DimLayout":
        return DimLayout(self.factors + other.factors)

    def power(self, n: int) -> "DimLayout":
        return DimLayout(self.factors * n)

    def select(self, indices: Sequence[int]) -> "DimLayout":
        return DimLayout([self.factors[i] for i in indices])

    def __len__(self) -> int:
        return len(self.factors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DimLayout):
            return NotImplemented
        return self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __repr__(self) -> str:
        return f"DimLayout({list(self.factors)})"


def check_budget(what: str, dim: int, tol: Optional[Tolerances] = None) -> None:
    cap = resolve(tol).dim_cap
    if dim > cap:
        raise BudgetExceededError(what, dim, cap)


class HermitianOperator:
    """A Hermitian matrix tagged with a layout. The stored matrix is read-only."""

    def __init__(
        self,
        matrix: Any,
        layout: Union[DimLayout, Sequence[int], int, None] = None,
        tol: Optional[Tolerances] = None,
        check: bool = True,
    ):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"Operator must be a square matrix, got shape {m.shape}")
        self.layout = DimLayout.of(layout if layout is not None else m.shape[0])
        if self.layout.total_dim != m.shape[0]:
            raise ValidationError(
                f"Matrix size {m.shape[0]} does not match layout {list(self.layout.factors)}"
            )
        self.tol = resolve(tol)
        if check:
            scale = np.max(np.abs(m)) if m.size else 0.0
            deviation = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if deviation > self.tol.hermiticity * max(scale, 1.0):
                raise ValidationError(f"Operator is not Hermitian (deviation {deviation:.3e})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        self._matrix = m
        self._eigh: Optional[Tuple[np.ndarray, np.ndarray]] = None
        if check:
            self._validate()

    def _validate(self) -> None:
        pass

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def eigh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and eigenvectors, computed once."""
        if self._eigh is None:
            w, v = np.linalg.eigh(self._matrix)
            w.setflags(write=False)
            v.setflags(write=False)
            self._eigh = (w, v)
        return self._eigh

    def eigvalsh(self) -> np.ndarray:
        return self.eigh()[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self._matrix)))

    def expectation(self, other: "HermitianOperator") -> float:
        """Re Tr[A B]."""
        return float(np.real(np.vdot(self._matrix.conj().T, other.matrix)))

    def spectral_radius(self) -> float:
        w = self.eigvalsh()
        return float(np.max(np.abs(w))) if w.size else 0.0

    def allclose(self, other: "HermitianOperator", atol: float = 1e-9) -> bool:
        return self.layout == other.layout and np.allclose(
            self._matrix, other.matrix, atol=atol, rtol=0.0
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layout": list(self.layout.factors),
            "re": np.real(self._matrix).tolist(),
            "im": np.imag(self._matrix).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], tol: Optional[Tolerances] = None) -> Any:
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
            layout = data.get("layout", [re.shape[0]])
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Malformed operator record: {e}") from e
        return cls(re + 1j * im, layout, tol=tol)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(layout={list(self.layout.factors)})"


class DensityOperator(HermitianOperator):
    """Positive semidefinite unit-trace operator."""

    def _validate(self) -> None:
        w = self.eigvalsh()
        if w.size and w[0] < -self.tol.psd:
            raise ValidationError(f"State is not PSD (min eigenvalue {w[0]:.3e})")
        if abs(self.trace() - 1.0) > self.tol.trace:
            raise ValidationError(f"State trace {self.trace():.12f} differs from 1")

    @classmethod
    def from_vector(
        cls, psi: Any, layout: Union[DimLayout, Sequence[int], int, None] = None
    ) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), layout)

    @classmethod
    def maximally_mixed(
        cls, layout: Union[DimLayout, Sequence[int], int]
    ) -> "DensityOperator":
        layout = DimLayout.of(layout)
        d = layout.total_dim
        return cls(np.eye(d) / d, layout)

    @classmethod
    def nearest(
        cls,
        matrix: Any,
        layout: Union[DimLayout, Sequence[int], int, None] = None,
        tol: Optional[Tolerances] = None,
    ) -> "DensityOperator":
        """Clip negative eigenvalues of a numerically computed state and renormalize."""
        m = np.array(matrix, dtype=complex)
        m = (m + m.conj().T) / 2
        w, v = np.linalg.eigh(m)
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            raise ValidationError("Matrix has no positive part to normalize")
        w = w / w.sum()
        return cls((v * w) @ v.conj().T, layout, tol=tol)

    def is_full_rank(self, threshold: float = 1e-8) -> bool:
        return bool(self.eigvalsh()[0] >= threshold)


class BinaryTest(HermitianOperator):
    """The operator T of a two-outcome POVM {T, I - T}."""

    def _validate(self) -> None:
        w = self.eigvalsh()
        if w.size and (w[0] < -self.tol.psd or w[-1] > 1.0 + self.tol.psd):
            raise ValidationError(
                f"Test eigenvalues leave [0, 1]: [{w[0]:.3e}, {w[-1]:.3e}]"
            )

    @classmethod
    def clipped(
        cls, matrix: Any, layout: Union[DimLayout, Sequence[int], int, None] = None
    ) -> "BinaryTest":
        """Project a numerically computed test onto 0 <= T <= I."""
        m = np.array(matrix, dtype=complex)
        w, v = np.linalg.eigh((m + m.conj().T) / 2)
        w = np.clip(w, 0.0, 1.0)
        return cls((v * w) @ v.conj().T, layout)

    def complement(self) -> "BinaryTest":
        return BinaryTest(np.eye(self.dim) - self.matrix, self.layout, tol=self.tol)

    def type_one_error(self, rho: HermitianOperator) -> float:
        return rho.trace() - self.expectation(rho)


def like_operator(
    op: HermitianOperator, matrix: np.ndarray, layout: DimLayout
) -> HermitianOperator:
    if isinstance(op, DensityOperator):
        return DensityOperator(matrix, layout, tol=op.tol, check=False)
    return HermitianOperator(matrix, layout, tol=op.tol, check=False)


def _check_same_layout(a: HermitianOperator, b: HermitianOperator) -> None:
    if a.dim != b.dim:
        raise ValidationError(f"Shape mismatch: {a.layout} vs {b.layout}")


def tensor(*ops: HermitianOperator, tol: Optional[Tolerances] = None) -> HermitianOperator:
    """Kronecker product with concatenated layout."""
    if not ops:
        raise ValidationError("tensor needs at least one operator")
    dim = int(np.prod([op.dim for op in ops]))
    check_budget("tensor product", dim, tol)
    matrix = reduce(np.kron, [op.matrix for op in ops])
    layout = reduce(DimLayout.concat, [op.layout for op in ops])
    if all(isinstance(op, DensityOperator) for op in ops):
        return DensityOperator(matrix, layout, tol=ops[0].tol, check=False)
    return HermitianOperator(matrix, layout, tol=ops[0].tol, check=False)


def tensor_power(rho: HermitianOperator, n: int, tol: Optional[Tolerances] = None) -> Any:
    """The n-fold Kronecker power rho^{⊗n}."""
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}")
    check_budget(f"tensor power n={n}", rho.dim**n, tol)
    return tensor(*([rho] * n), tol=tol)


def reorder_matrix(
    matrix: np.ndarray, factors: Sequence[int], order: Sequence[int]
) -> np.ndarray:
    """Matrix-level factor reordering: new factor k is old factor order[k]."""
    order = list(order)
    n = len(factors)
    if not is_permutation(order) or len(order) != n:
        raise ValidationError(f"Invalid factor order {order} for {n} factors")
    f = tuple(factors)
    dim = matrix.shape[0]
    t = matrix.reshape(f + f).transpose(order + [n + k for k in order])
    return t.reshape(dim, dim)


def permute_factors(
    op: HermitianOperator, order: Sequence[int]
) -> HermitianOperator:
    """Reorder tensor factors: new factor k is old factor order[k]."""
    matrix = reorder_matrix(op.matrix, op.layout.factors, order)
    return like_operator(op, matrix, op.layout.select(order))


def embed_kept(matrix: np.ndarray, layout: DimLayout, keep: Sequence[int]) -> np.ndarray:
    """H ⊗ I on the traced factors, in the original factor order.

    This is the adjoint of the partial trace keeping ``keep``.
    """
    n = len(layout)
    keep = sorted(keep)
    traced = [k for k in range(n) if k not in keep]
    if not traced:
        return np.asarray(matrix, dtype=complex)
    dt = int(np.prod([layout.factors[k] for k in traced]))
    full = np.kron(matrix, np.eye(dt))
    order = keep + traced
    restore = [order.index(m) for m in range(n)]
    return reorder_matrix(full, layout.select(order).factors, restore)


def _permutation_index(g: Sequence[int], d: int) -> np.ndarray:
    """idx[out] = in, the basis map of U(g) on (C^d)^{⊗n}."""
    n = len(g)
    shape = [d] * n
    multi = np.indices(shape).reshape(n, -1)
    ginv = inverse(g)
    out = np.ravel_multi_index(tuple(multi[list(ginv)]), shape)
    idx = np.empty_like(out)
    idx[out] = np.arange(out.size)
    return idx


def permutation_unitary(
    g: Sequence[int], d: int, tol: Optional[Tolerances] = None
) -> np.ndarray:
    """U(g) with U(g)(v_1 ⊗ ... ⊗ v_n) placing v_j in slot g(j)."""
    if not is_permutation(g):
        raise ValidationError(f"Not a permutation: {tuple(g)}")
    dim = d ** len(g)
    check_budget("permutation unitary", dim, tol)
    idx = _permutation_index(g, d)
    u = np.zeros((dim, dim))
    u[np.arange(dim), idx] = 1.0
    return u


def permute_operator(op: HermitianOperator, g: Sequence[int]) -> HermitianOperator:
    """U(g) X U(g)† for an operator on n identical factors."""
    d = op.layout.factors[0]
    if any(f != d for f in op.layout.factors) or len(g) != len(op.layout):
        raise ValidationError(f"Permutation {tuple(g)} does not fit {op.layout}")
    idx = _permutation_index(g, d)
    return like_operator(op, op.matrix[np.ix_(idx, idx)], op.layout)


def trace_out(matrix: np.ndarray, factors: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Matrix-level partial trace over every factor not in keep."""
    n = len(factors)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValidationError(f"Invalid factor index in {keep} for {n} factors")
    traced = [k for k in range(n) if k not in keep]
    f = tuple(factors)
    dk = int(np.prod([f[k] for k in keep]))
    dt = int(np.prod([f[k] for k in traced])) if traced else 1
    order = keep + traced
    t = matrix.reshape(f + f).transpose(order + [n + k for k in order])
    return np.einsum("ajbj->ab", t.reshape(dk, dt, dk, dt))


def partial_trace(op: HermitianOperator, keep: Sequence[int]) -> HermitianOperator:
    """Trace out every factor not in keep; kept factors stay in original order."""
    reduced = trace_out(op.matrix, op.layout.factors, keep)
    return like_operator(op, reduced, op.layout.select(sorted(set(int(k) for k in keep))))


def transpose_factors(
    matrix: np.ndarray, factors: Sequence[int], axes: Sequence[int]
) -> np.ndarray:
    """Matrix-level partial transpose on the listed factors."""
    n = len(factors)
    f = tuple(factors)
    perm = list(range(2 * n))
    for k in axes:
        perm[k], perm[n + k] = n + k, k
    dim = matrix.shape[0]
    return matrix.reshape(f + f).transpose(perm).reshape(dim, dim)


def partial_transpose(op: HermitianOperator, axes: Sequence[int]) -> HermitianOperator:
    """Transpose the listed factors."""
    matrix = transpose_factors(op.matrix, op.layout.factors, axes)
    return HermitianOperator(matrix, op.layout, tol=op.tol, check=False)


def spectral_blocks(
    op: HermitianOperator, tol: Optional[Tolerances] = None
) -> List[Tuple[float, np.ndarray]]:
    """Eigenspaces with eigenvalues clustered within the relative tolerance.

    Returns (mean eigenvalue, orthonormal column basis) pairs in ascending order.
    """
    tol = resolve(tol)
    w, v = op.eigh()
    scale = max(float(np.max(np.abs(w))), 1e-300)
    blocks: List[Tuple[float, np.ndarray]] = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol.cluster * scale:
            blocks.append((float(np.mean(w[start:i])), v[:, start:i]))
            start = i
    return blocks


def spectral_projection_leq(
    a: HermitianOperator, b: HermitianOperator, tol: Optional[Tolerances] = None
) -> BinaryTest:
    """The projection {A <= B} onto the nonnegative eigenspace of B - A."""
    _check_same_layout(a, b)
    tol = resolve(tol)
    w, v = np.linalg.eigh(b.matrix - a.matrix)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    cols = v[:, w >= -tol.cluster * scale]
    return BinaryTest(cols @ cols.conj().T, a.layout, tol=tol, check=False)


def positive_part(x: np.ndarray) -> np.ndarray:
    """(X)_+ for a Hermitian matrix."""
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def trace_norm(x: Union[np.ndarray, HermitianOperator]) -> float:
    m = x.matrix if isinstance(x, HermitianOperator) else np.asarray(x)
    return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))


def trace_distance(a: HermitianOperator, b: HermitianOperator) -> float:
    _check_same_layout(a, b)
    return 0.5 * trace_norm(a.matrix - b.matrix)


def maximally_entangled(d: int) -> DensityOperator:
    """Φ_d on the layout [d, d]."""
    omega = np.eye(d).reshape(-1) / np.sqrt(d)
    return DensityOperator(np.outer(omega, omega), [d, d])


def random_density(
    layout: Union[DimLayout, Sequence[int], int],
    rng: np.random.Generator,
    rank: Optional[int] = None,
) -> DensityOperator:
    """Random state from the induced Ginibre ensemble."""
    layout = DimLayout.of(layout)
    d = layout.total_dim
    k = rank or d
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.real(np.trace(m)), layout)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1), dtype=complex)


class QuantumChannel:
    """A CPTP map stored by its normalized Choi state."""

    def __init__(
        self,
        choi: Union[DensityOperator, np.ndarray],
        d_in: Optional[int] = None,
        d_out: Optional[int] = None,
        input_axes: Sequence[int] = (0,),
        tol: Optional[Tolerances] = None,
    ):
        self.tol = resolve(tol)
        if not isinstance(choi, DensityOperator):
            if d_in is None or d_out is None:
                raise ValidationError("A raw Choi matrix needs d_in and d_out")
            choi = DensityOperator(choi, [d_in, d_out], tol=self.tol)
        self.choi = choi
        n = len(choi.layout)
        self.input_axes: Tuple[int, ...] = tuple(sorted(int(k) for k in input_axes))
        if not self.input_axes or any(k < 0 or k >= n for k in self.input_axes):
            raise ValidationError(f"Invalid input axes {self.input_axes} for {choi.layout}")
        self.output_axes: Tuple[int, ...] = tuple(k for k in range(n) if k not in self.input_axes)
        if not self.output_axes:
            raise ValidationError("A channel needs at least one output factor")
        self.input_layout = choi.layout.select(self.input_axes)
        self.output_layout = choi.layout.select(self.output_axes)
        if d_in is not None and d_in != self.d_in:
            raise ValidationError(f"d_in={d_in} does not match Choi layout {choi.layout}")
        if d_out is not None and d_out != self.d_out:
            raise ValidationError(f"d_out={d_out} does not match Choi layout {choi.layout}")
        residual = self.marginal_residual()
        if residual > self.tol.channel_marginal:
            raise ValidationError(f"Choi input marginal deviates from I/d_in by {residual:.3e}")

    @property
    def d_in(self) -> int:
        return self.input_layout.total_dim

    @property
    def d_out(self) -> int:
        return self.output_layout.total_dim

    def marginal_residual(self) -> float:
        marginal = partial_trace(self.choi, self.input_axes).matrix
        return float(np.max(np.abs(marginal - np.eye(self.d_in) / self.d_in)))

    def ordered_choi(self) -> np.ndarray:
        """Choi matrix with all input factors before all output factors."""
        order = list(self.input_axes) + list(self.output_axes)
        if order == list(range(len(order))):
            return self.choi.matrix
        return permute_factors(self.choi, order).matrix

    def apply(self, rho: HermitianOperator) -> DensityOperator:
        return apply_channel(self, rho)

    def kraus(self, threshold: float = 1e-12) -> List[np.ndarray]:
        """Kraus operators from the Choi eigendecomposition."""
        w, v = np.linalg.eigh(self.ordered_choi())
        ops = []
        for lam, vec in zip(w, v.T):
            if lam > threshold:
                k = np.sqrt(self.d_in * lam) * vec.reshape(self.d_in, self.d_out).T
                ops.append(k)
        return ops

    def tensor_power(self, n: int) -> "QuantumChannel":
        choi = tensor_power(self.choi, n, tol=self.tol)
        width = len(self.choi.layout)
        axes = [k + width * j for j in range(n) for k in self.input_axes]
        return QuantumChannel(choi, input_axes=axes, tol=self.tol)

    def to_dict(self) -> Dict[str, Any]:
        data = self.choi.to_dict()
        data["input_axes"] = list(self.input_axes)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], tol: Optional[Tolerances] = None) -> "QuantumChannel":
        choi = DensityOperator.from_dict(data, tol=tol)
        return cls(choi, input_axes=data.get("input_axes", [0]), tol=tol)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "QuantumChannel":
        d_out, d_in = np.asarray(kraus[0]).shape
        choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for k in kraus:
            vec = np.asarray(k, dtype=complex).T.reshape(-1)
            choi += np.outer(vec, vec.conj())
        return cls(DensityOperator(choi / d_in, [d_in, d_out]))

    def __repr__(self) -> str:
        return f"QuantumChannel(d_in={self.d_in}, d_out={self.d_out})"


def apply_channel(channel: QuantumChannel, rho: HermitianOperator) -> DensityOperator:
    """N(rho) = d_in Tr_in[(rho^T ⊗ I) J(N)]."""
    if rho.dim != channel.d_in:
        raise ValidationError(f"State dimension {rho.dim} does not match d_in={channel.d_in}")
    d_in, d_out = channel.d_in, channel.d_out
    j4 = channel.ordered_choi().reshape(d_in, d_out, d_in, d_out)
    out = d_in * np.einsum("xa,xbay->by", rho.matrix, j4)
    return DensityOperator(out, channel.output_layout, tol=channel.tol)


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel(maximally_entangled(d))


def choi_of_replacer(
    d_in: int, rho_full: DensityOperator, tol: Optional[Tolerances] = None
) -> QuantumChannel:
    """The channel discarding its input and preparing the full-rank rho_full."""
    tol = resolve(tol)
    if rho_full.eigvalsh()[0] <= tol.psd:
        raise ValidationError(
            f"Replacement state is rank-deficient (min eigenvalue {rho_full.eigvalsh()[0]:.3e})"
        )
    choi = np.kron(np.eye(d_in) / d_in, rho_full.matrix)
    layout = DimLayout([d_in]).concat(rho_full.layout)
    return QuantumChannel(DensityOperator(choi, layout, tol=tol), input_axes=(0,), tol=tol)


def preparation_channel(rho: DensityOperator) -> QuantumChannel:
    """The trivial-input channel preparing rho; its Choi state is rho itself."""
    layout = DimLayout([1]).concat(rho.layout)
    return QuantumChannel(DensityOperator(rho.matrix, layout, check=False), input_axes=(0,))


def random_channel(
    d_in: int, d_out: int, rng: np.random.Generator, kraus_rank: Optional[int] = None
) -> QuantumChannel:
    """Random channel from a Haar isometry into output ⊗ environment."""
    r = kraus_rank or d_in * d_out
    g = rng.standard_normal((d_out * r, d_in)) + 1j * rng.standard_normal((d_out * r, d_in))
    q, _ = np.linalg.qr(g)
    kraus = [q[k * d_out:(k + 1) * d_out, :] for k in range(r)]
    return QuantumChannel.from_kraus(kraus)
