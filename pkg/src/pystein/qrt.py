"""
Resource measures for states and channels, the truncated-channel construction and
measure-and-prepare super channels.

Channels enter every measure through their normalized Choi states, so a free set for
channels is a ConvexStateSet on the Choi layout.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Tolerances, resolve
from .errors import ValidationError, check_leq
from .freesets import ConvexStateSet, FrankWolfeSolver, FreeFamily, min_relative_entropy
from .qcore import (
    BinaryTest,
    DensityOperator,
    DimLayout,
    QuantumChannel,
    embed_kept,
    maximally_entangled,
    reorder_matrix,
    spectral_projection_leq,
    tensor,
    tensor_power,
    trace_distance,
    trace_out,
)
from .sdp import Adjoint, SdpProblem, SdpSolver, compose_adjoints
from .symmetry import PinchingMap, pinch
from .utils import inverse

logger = logging.getLogger(__name__)

Resource = Union[DensityOperator, QuantumChannel]


def _choi(obj: Resource) -> DensityOperator:
    return obj.choi if isinstance(obj, QuantumChannel) else obj


def choi_channel(
    matrix: np.ndarray, like: QuantumChannel, tol: Optional[Tolerances] = None
) -> QuantumChannel:
    """The channel closest in form to a numerically computed Choi matrix.

    Negative eigenvalues are clipped, then the input marginal is restored to I/d_in by
    the congruence (M^{-1/2}/sqrt(d_in) ⊗ I).
    """
    tol = resolve(tol)
    layout = like.choi.layout
    order = list(like.input_axes) + list(like.output_axes)
    ordered = reorder_matrix(np.asarray(matrix, dtype=complex), layout.factors, order)
    w, v = np.linalg.eigh((ordered + ordered.conj().T) / 2)
    ordered = (v * np.clip(w, 0.0, None)) @ v.conj().T
    d_in, d_out = like.d_in, like.d_out
    marginal = np.einsum("ajbj->ab", ordered.reshape(d_in, d_out, d_in, d_out))
    wm, vm = np.linalg.eigh((marginal + marginal.conj().T) / 2)
    if wm[0] <= 0:
        raise ValidationError("Choi matrix has a singular input marginal")
    k = np.kron((vm / np.sqrt(wm * d_in)) @ vm.conj().T, np.eye(d_out))
    ordered = k @ ordered @ k.conj().T
    restored = reorder_matrix(ordered, layout.select(order).factors, list(inverse(order)))
    choi = DensityOperator(restored, layout, tol=tol, check=False)
    return QuantumChannel(choi, input_axes=like.input_axes, tol=tol)


@dataclass
class RobustnessResult:
    """R_G with the free state achieving the mixture and the mixing partner."""

    value: float
    partner: DensityOperator
    witness: DensityOperator
    certificate: float = 0.0

    def partner_channel(self, like: QuantumChannel) -> QuantumChannel:
        return choi_channel(self.partner.matrix, like)

    def witness_channel(self, like: QuantumChannel) -> QuantumChannel:
        return choi_channel(self.witness.matrix, like)

    def __repr__(self) -> str:
        return f"RobustnessResult(value={self.value:.10g})"


def _marginal_adjoint(layout: DimLayout, input_axes: Sequence[int]) -> Adjoint:
    """Adjoint of Z -> Tr_out[Z] - Tr[Z] I/d_in."""
    d_in = int(np.prod([layout.factors[k] for k in input_axes]))

    def adjoint(h: np.ndarray) -> np.ndarray:
        trace = np.real(np.trace(h))
        return embed_kept(h, layout, input_axes) - trace / d_in * np.eye(layout.total_dim)

    return adjoint


def generalized_robustness(
    obj: Resource, S: ConvexStateSet, tol: Optional[Tolerances] = None
) -> RobustnessResult:
    """min s >= 0 with (obj + s·partner)/(1+s) in S.

    Solved as min Tr[Z] - 1 over the cone of S subject to Z ⪰ J(obj). For channels
    the partner must itself be a channel, which fixes the input marginal of Z.
    """
    tol = resolve(tol)
    j = _choi(obj)
    S._check_layout(j)
    problem = SdpProblem(f"robustness-{S.name}")
    expr = S.cone_expression(problem)
    problem.add_matrix_inequality(expr.terms, ">=", j.matrix)
    if isinstance(obj, QuantumChannel) and obj.d_in > 1 and S.vertices() is None:
        marginal = _marginal_adjoint(j.layout, obj.input_axes)
        d_in = obj.d_in
        problem.add_matrix_equality(
            [(block, compose_adjoints(marginal, adjoint)) for block, adjoint in expr.terms],
            np.zeros((d_in, d_in)),
        )
    problem.set_objective(expr.trace_terms(), constant=-1.0)
    solution = SdpSolver(tol=tol).solve(problem)
    if not solution.optimal:
        logger.warning("%s: robustness SDP ended with status %s", S.label, solution.status)
    z = expr.evaluate(solution)
    s = max(0.0, solution.value)
    witness = DensityOperator.nearest(z, j.layout, tol=tol)
    if s > 1e-9:
        partner = DensityOperator.nearest((z - j.matrix) / s, j.layout, tol=tol)
    else:
        partner = witness
    certificate = float(np.linalg.eigvalsh((1.0 + s) * witness.matrix - j.matrix)[0])
    if certificate < -1e-8:
        logger.info("%s: J <= (1+s) witness fails by %.3e", S.label, -certificate)
    logger.debug("R_G over %s: %.10g", S.label, s)
    return RobustnessResult(s, partner, witness, certificate)


def log_robustness(obj: Resource, S: ConvexStateSet, tol: Optional[Tolerances] = None) -> float:
    """log(1 + R_G) in nats."""
    return math.log1p(generalized_robustness(obj, S, tol).value)


def relative_entropy_of_resource(
    obj: Resource, S: ConvexStateSet, tol: Optional[Tolerances] = None
) -> float:
    """R_R = min over S of D(J(obj)||sigma)."""
    value, _ = min_relative_entropy(_choi(obj), S, FrankWolfeSolver(tol=resolve(tol)))
    return value


def robustness_tensor_bound_check(
    a: Resource,
    b: Resource,
    S_a: ConvexStateSet,
    S_b: ConvexStateSet,
    S_ab: ConvexStateSet,
    tol: Optional[Tolerances] = None,
) -> bool:
    """Assert R_G(A⊗B) <= R_G(A)R_G(B) + R_G(A) + R_G(B)."""
    r_a = generalized_robustness(a, S_a, tol).value
    r_b = generalized_robustness(b, S_b, tol).value
    joint = tensor(_choi(a), _choi(b), tol=tol)
    r_ab = generalized_robustness(joint, S_ab, tol).value
    check_leq("R_G(A⊗B) <= R_G(A)R_G(B) + R_G(A) + R_G(B)", r_ab, r_a * r_b + r_a + r_b, 1e-6)
    return True


def log_robustness_vs_relative_entropy(
    rho: DensityOperator, family: FreeFamily, n_max: int, tol: Optional[Tolerances] = None
) -> List[Dict[str, Any]]:
    """Rows {n, relative_entropy, log_robustness, pass} with both sides per copy.

    Asserts (1/n)R_R(ρ^{⊗n}) <= (1/n)log(1 + R_G(ρ^{⊗n})) at each n.
    """
    rows = []
    for n in range(1, n_max + 1):
        rho_n = tensor_power(rho, n, tol)
        S = family.level(n)
        rr = relative_entropy_of_resource(rho_n, S, tol) / n
        lr = log_robustness(rho_n, S, tol) / n
        check_leq(f"R_R/n <= log(1+R_G)/n at n={n}", rr, lr, 1e-6)
        rows.append({"n": n, "relative_entropy": rr, "log_robustness": lr, "pass": True})
    return rows


@dataclass
class TruncationResult:
    """The truncated channel and the quantities its construction produced."""

    channel: QuantumChannel
    projection: BinaryTest
    cut_mass: float
    trace_distance: float
    num_blocks: int
    scale: float
    free_mass: float
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cut_mass": self.cut_mass,
            "trace_distance": self.trace_distance,
            "num_blocks": self.num_blocks,
            "scale": self.scale,
            "free_mass": self.free_mass,
            "flags": list(self.flags),
        }


def truncation(
    N: QuantumChannel,
    N_free_m: QuantumChannel,
    m: int,
    k: int,
    R: float,
    rho_full: Optional[DensityOperator] = None,
    tol: Optional[Tolerances] = None,
) -> TruncationResult:
    """Cut the high-likelihood part of J(N^{⊗km}) and reroute its mass.

    P = {E(J) ≥ e^{kmR} J_free} with E the pinching in the eigenbasis of
    J_free = J(N_free_m^{⊗k}). The Choi state of the result is
    c(I-P)J(I-P) + (I/d_in^{km} - c Tr_out[(I-P)J(I-P)]) ⊗ rho_full^{⊗km}, where c ≤ 1
    is the largest scale keeping the second term positive.
    """
    tol = resolve(tol)
    if R <= 0:
        raise ValidationError(f"R must be positive, got {R}")
    if m < 1 or k < 1:
        raise ValidationError(f"m and k must be positive, got m={m}, k={k}")
    target = N.tensor_power(k * m)
    free = N_free_m.tensor_power(k)
    j = target.choi
    if free.choi.layout != j.layout or free.input_axes != target.input_axes:
        raise ValidationError(
            f"Free channel layout {free.choi.layout} does not match {j.layout}"
        )
    j_free = free.choi
    pinching = PinchingMap(j_free, tol)
    pinched = pinch(pinching, j)
    threshold = math.exp(k * m * R)
    scaled_free = DensityOperator(threshold * j_free.matrix, j.layout, check=False)
    projection = spectral_projection_leq(scaled_free, pinched, tol)
    free_mass = projection.expectation(j_free)
    check_leq("Tr[P J_free] <= exp(-kmR)", free_mass, math.exp(-k * m * R), 1e-9)
    cut_mass = projection.expectation(j)

    keep = np.eye(j.dim) - projection.matrix
    kept = keep @ j.matrix @ keep
    inputs = list(target.input_axes)
    outputs = list(target.output_axes)
    marginal = trace_out(kept, j.layout.factors, inputs)
    d_in = target.d_in
    top = float(np.linalg.eigvalsh(marginal)[-1])
    scale = min(1.0, 1.0 / (d_in * top)) if top > 0 else 1.0
    rho_full = rho_full or DensityOperator.maximally_mixed(N.output_layout)
    if rho_full.dim != N.d_out:
        raise ValidationError(f"rho_full dimension {rho_full.dim} differs from d_out={N.d_out}")
    reroute = np.kron(
        np.eye(d_in) / d_in - scale * marginal, tensor_power(rho_full, k * m, tol).matrix
    )
    order = inputs + outputs
    reroute = reorder_matrix(reroute, j.layout.select(order).factors, list(inverse(order)))
    choi = DensityOperator(scale * kept + reroute, j.layout, tol=tol, check=False)
    channel = choi_channel(choi.matrix, target, tol)

    flags = []
    if cut_mass <= 1e-12:
        flags.append("empty-projection")
    if cut_mass >= 1.0 - 1e-9:
        flags.append("full-cut")
    if scale < 1.0:
        flags.append("scaled")
    result = TruncationResult(
        channel, projection, cut_mass, trace_distance(channel.choi, j),
        pinching.num_blocks, scale, free_mass, flags,
    )
    logger.info(
        "truncation k=%d m=%d R=%.4g: cut %.3e, distance %.3e, %d blocks, flags %s",
        k, m, R, cut_mass, result.trace_distance, pinching.num_blocks, flags,
    )
    return result


def truncated_channel(
    N: QuantumChannel,
    N_free_m: QuantumChannel,
    m: int,
    k: int,
    R: float,
    rho_full: Optional[DensityOperator] = None,
    tol: Optional[Tolerances] = None,
) -> QuantumChannel:
    return truncation(N, N_free_m, m, k, R, rho_full, tol).channel


def truncation_robustness_check(
    result: TruncationResult,
    m: int,
    k: int,
    R: float,
    S: ConvexStateSet,
    tol: Optional[Tolerances] = None,
) -> Tuple[float, float]:
    """Assert R_G(truncated) <= d e^{kmR} with d the number of pinching blocks.

    S must contain the free Choi state and the rerouting replacer.
    """
    measured = generalized_robustness(result.channel, S, tol).value
    bound = result.num_blocks * math.exp(k * m * R)
    check_leq("R_G(truncated) <= blocks * exp(kmR)", measured, bound, 1e-6)
    return measured, bound


class SuperChannel:
    """A map from channels to channels."""

    def apply(self, channel: QuantumChannel) -> QuantumChannel:
        raise NotImplementedError

    def choi(self) -> DensityOperator:
        """J2 on the factor order [in1, out1, in2, out2]."""
        raise NotImplementedError

    def dims(self) -> Tuple[int, int, int, int]:
        raise NotImplementedError


def _ordered(matrix: np.ndarray, layout: DimLayout, input_axes: Sequence[int]) -> np.ndarray:
    n = len(layout)
    order = list(input_axes) + [a for a in range(n) if a not in input_axes]
    return reorder_matrix(matrix, layout.factors, order)


class SuperChannelMP(SuperChannel):
    """Measure the input channel's Choi state with {T, I - T}, then prepare hit or miss."""

    def __init__(
        self,
        test: BinaryTest,
        prepare_hit: QuantumChannel,
        prepare_miss: QuantumChannel,
        input_axes: Sequence[int] = (0,),
    ):
        if prepare_hit.choi.layout != prepare_miss.choi.layout:
            raise ValidationError(
                f"Prepared channels differ in layout: {prepare_hit.choi.layout} vs "
                f"{prepare_miss.choi.layout}"
            )
        if prepare_hit.input_axes != prepare_miss.input_axes:
            raise ValidationError("Prepared channels differ in input axes")
        self.test = test
        self.prepare_hit = prepare_hit
        self.prepare_miss = prepare_miss
        self.input_axes = tuple(sorted(input_axes))

    def hit_probability(self, channel: QuantumChannel) -> float:
        if channel.choi.dim != self.test.dim:
            raise ValidationError(
                f"Channel Choi {channel.choi.layout} does not match the test {self.test.layout}"
            )
        return float(np.clip(self.test.expectation(channel.choi), 0.0, 1.0))

    def choi_map(self, j: np.ndarray) -> np.ndarray:
        """J -> Tr[TJ] J_hit + Tr[(I-T)J] J_miss."""
        p = float(np.real(np.vdot(self.test.matrix, j)))
        q = float(np.real(np.trace(j))) - p
        return p * self.prepare_hit.choi.matrix + q * self.prepare_miss.choi.matrix

    def apply(self, channel: QuantumChannel) -> QuantumChannel:
        p = self.hit_probability(channel)
        matrix = p * self.prepare_hit.choi.matrix + (1 - p) * self.prepare_miss.choi.matrix
        choi = DensityOperator(matrix, self.prepare_hit.choi.layout, check=False)
        return QuantumChannel(choi, input_axes=self.prepare_hit.input_axes)

    def dims(self) -> Tuple[int, int, int, int]:
        d_in1 = int(np.prod([self.test.layout.factors[a] for a in self.input_axes]))
        d_out1 = self.test.dim // d_in1
        return d_in1, d_out1, self.prepare_hit.d_in, self.prepare_hit.d_out

    def choi(self) -> DensityOperator:
        d_in1, d_out1, d_in2, d_out2 = self.dims()
        d1 = d_in1 * d_out1
        t = _ordered(self.test.matrix, self.test.layout, self.input_axes)
        hit = self.prepare_hit.ordered_choi()
        miss = self.prepare_miss.ordered_choi()
        j2 = (np.kron(t.T, hit) + np.kron((np.eye(d1) - t).T, miss)) / d1
        return DensityOperator(j2, [d_in1, d_out1, d_in2, d_out2], check=False)

    def __repr__(self) -> str:
        return f"SuperChannelMP(test={list(self.test.layout.factors)}, dims={self.dims()})"


class IdentitySuperChannel(SuperChannel):
    """The wire: returns its input channel."""

    def __init__(self, d_in: int, d_out: int):
        self.d_in = d_in
        self.d_out = d_out

    def apply(self, channel: QuantumChannel) -> QuantumChannel:
        return channel

    def dims(self) -> Tuple[int, int, int, int]:
        return self.d_in, self.d_out, self.d_in, self.d_out

    def choi(self) -> DensityOperator:
        wires = tensor(maximally_entangled(self.d_in), maximally_entangled(self.d_out))
        matrix = reorder_matrix(wires.matrix, wires.layout.factors, [0, 2, 1, 3])
        return DensityOperator(matrix, [self.d_in, self.d_out, self.d_in, self.d_out], check=False)


class ReplacerSuperChannel(SuperChannel):
    """Discard the input channel and output a fixed free channel."""

    def __init__(self, free: QuantumChannel, d_in: int, d_out: int):
        self.free = free
        self.d_in = d_in
        self.d_out = d_out

    def apply(self, channel: QuantumChannel) -> QuantumChannel:
        return self.free

    def dims(self) -> Tuple[int, int, int, int]:
        return self.d_in, self.d_out, self.free.d_in, self.free.d_out

    def choi(self) -> DensityOperator:
        d1 = self.d_in * self.d_out
        matrix = np.kron(np.eye(d1) / d1, self.free.ordered_choi())
        return DensityOperator(matrix, list(self.dims()), check=False)


def theta_protocol(
    test: BinaryTest,
    hit: QuantumChannel,
    miss: QuantumChannel,
    input_axes: Sequence[int] = (0,),
) -> SuperChannelMP:
    """Θ(N) = Tr[T J(N)] hit + Tr[(I-T) J(N)] miss."""
    return SuperChannelMP(test, hit, miss, input_axes)


def theta_from_robustness(
    test: BinaryTest,
    hit: QuantumChannel,
    output_set: ConvexStateSet,
    input_axes: Sequence[int] = (0,),
    tol: Optional[Tolerances] = None,
) -> Tuple[SuperChannelMP, RobustnessResult]:
    """Θ whose miss branch is the robustness partner of the hit channel."""
    robustness = generalized_robustness(hit, output_set, tol)
    miss = robustness.partner_channel(hit)
    return theta_protocol(test, hit, miss, input_axes), robustness


def super_channel_choi_residuals(
    j2: Union[DensityOperator, np.ndarray], dims: Sequence[int]
) -> Dict[str, float]:
    """Residuals of the one-slot comb conditions on J2 over [in1, out1, in2, out2]."""
    d_in1, d_out1, d_in2, d_out2 = (int(d) for d in dims)
    matrix = j2.matrix if isinstance(j2, DensityOperator) else np.asarray(j2, dtype=complex)
    factors = [d_in1, d_out1, d_in2, d_out2]
    if matrix.shape[0] != int(np.prod(factors)):
        raise ValidationError(f"J2 of size {matrix.shape[0]} does not fit dims {factors}")
    herm = (matrix + matrix.conj().T) / 2
    j1 = trace_out(herm, factors, [0, 2])
    marginal = trace_out(herm, factors, [0, 1, 2])
    expected = embed_kept(j1, DimLayout([d_in1, d_out1, d_in2]), [0, 2]) / d_out1
    return {
        "hermiticity": float(np.max(np.abs(matrix - matrix.conj().T))),
        "min_eigenvalue": float(np.linalg.eigvalsh(herm)[0]),
        "trace": abs(float(np.real(np.trace(herm))) - 1.0),
        "output_marginal": float(np.max(np.abs(marginal - expected))),
        "input_marginal": float(
            np.max(np.abs(trace_out(j1, [d_in1, d_in2], [1]) - np.eye(d_in2) / d_in2))
        ),
    }


def super_channel_choi_validate(
    j2: Union[DensityOperator, np.ndarray], dims: Sequence[int], atol: float = 1e-8
) -> bool:
    """J2 ⪰ 0, Tr_out2 J2 = (I/d_out1) ⊗ J1 and Tr_in1 J1 = I/d_in2.

    J1 = Tr_{out1,out2} J2 is the Choi state of the pre-processing.
    """
    residuals = super_channel_choi_residuals(j2, dims)
    valid = (
        residuals["hermiticity"] <= atol
        and residuals["min_eigenvalue"] >= -atol
        and residuals["trace"] <= atol
        and residuals["output_marginal"] <= atol
        and residuals["input_marginal"] <= atol
    )
    if not valid:
        logger.info("super channel Choi rejected: %s", residuals)
    return valid


@dataclass
class NonGenerationReport:
    """Measured robustness of Θ on free inputs against the mixing bound."""

    s: float
    t_max: float
    bound: float
    precondition: bool
    rows: List[Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def resource_non_generation_audit(
    theta: SuperChannelMP,
    free_inputs: Sequence[QuantumChannel],
    output_set: ConvexStateSet,
    input_set: Optional[ConvexStateSet] = None,
    tol: Optional[Tolerances] = None,
) -> NonGenerationReport:
    """R_G(Θ(N_free)) against ((1/(1+s)) - t)/(s/(1+s)).

    s is R_G of the hit channel and t the hit probability on a free input. When an
    input set is given, t is its worst case over that set. The bound is asserted
    only when 1/(1+s) >= t holds.
    """
    s = generalized_robustness(theta.prepare_hit, output_set, tol).value
    ts = [theta.hit_probability(channel) for channel in free_inputs]
    t_max = max(ts) if ts else 0.0
    if input_set is not None:
        worst = input_set.linear_minimizer(-theta.test.matrix)
        t_max = max(t_max, worst.expectation(theta.test))
    precondition = 1.0 / (1.0 + s) >= t_max
    rows = []
    for i, (channel, t) in enumerate(zip(free_inputs, ts)):
        measured = generalized_robustness(theta.apply(channel), output_set, tol).value
        bound = math.inf if s <= 1e-12 else (1.0 / (1.0 + s) - t) / (s / (1.0 + s))
        passed = measured <= bound + 1e-6
        if precondition:
            check_leq(f"R_G(theta(free_{i})) <= mixing bound", measured, bound, 1e-6)
        rows.append({"n": i, "t": t, "lhs": measured, "rhs": bound, "pass": passed})
    overall = math.inf if s <= 1e-12 else (1.0 / (1.0 + s) - t_max) / (s / (1.0 + s))
    if not precondition:
        logger.info("non-generation precondition fails: 1/(1+s)=%.4g < t=%.4g", 1 / (1 + s), t_max)
    return NonGenerationReport(s, t_max, overall, precondition, rows)


def asymptotic_monotonicity_audit(
    N: QuantumChannel,
    input_family: FreeFamily,
    output_family: FreeFamily,
    thetas: Dict[int, SuperChannel],
    n_max: int,
) -> List[Dict[str, Any]]:
    """Rows {n, input_rate, output_rate}: (1/n)R_R(N^{⊗n}) and (1/n)R_R(Θ_n(N^{⊗n})).

    Nothing is asserted; the comparison only holds asymptotically.
    """
    rows = []
    for n in range(1, n_max + 1):
        if n not in thetas:
            continue
        channel_n = N.tensor_power(n)
        before = relative_entropy_of_resource(channel_n, input_family.level(n)) / n
        output = thetas[n].apply(channel_n)
        level = output_family.level(output_family.level_of(output.choi.layout))
        after = relative_entropy_of_resource(output, level) / n
        rows.append({"n": n, "input_rate": before, "output_rate": after})
        logger.info("monotonicity n=%d: %.6g -> %.6g", n, before, after)
    return rows
