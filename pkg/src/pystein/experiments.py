"""
Experiment runners behind the command-line subcommands.

Each runner takes an ExperimentConfig and returns an ExperimentResult with named
tables and a report. Finite-n inequalities are asserted with check_leq and raise
InequalityViolation; statements about limits are only reported.

Cells run one after another, looping over sorted n, then eps, then alpha, so tables
and reports come out in the same order on every run.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh

from .config import ExperimentConfig
from .divergences import relative_entropy, to_bits
from .errors import ConfigError, InequalityViolation, ValidationError, check_leq
from .fixtures import SCHEMA_VERSION, load_channel, load_family, load_operator
from .freesets import (
    FreeFamily,
    averaged_state,
    example_s1_family,
    example_s2_family,
    min_relative_entropy,
    phi_state,
    ppt_family,
    preparation_ppt_family,
    sigma_mu,
    symmetrized_subset,
)
from .hyptest import (
    beta_composite,
    beta_simple,
    beta_worstcase_pointwise,
    strong_converse_bound,
    worst_case_state,
)
from .qcore import (
    DensityOperator,
    QuantumChannel,
    maximally_entangled,
    preparation_channel,
    random_density,
    tensor,
    tensor_power,
    trace_distance,
)
from .qrt import (
    SuperChannel,
    asymptotic_monotonicity_audit,
    relative_entropy_of_resource,
    resource_non_generation_audit,
    super_channel_choi_validate,
    theta_from_robustness,
    truncation,
)
from .symmetry import (
    PinchingMap,
    distinct_eigenvalue_count,
    eigenvalue_count_bound,
    pinch,
    pinching_entropy_identity_audit,
)

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """Tables of rows plus a JSON report for one experiment run."""

    name: str
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    report: Dict[str, Any] = field(default_factory=dict)
    nats_columns: Tuple[str, ...] = ()
    notes: List[str] = field(default_factory=list)

    def note(self, message: str) -> None:
        logger.info("%s: %s", self.name, message)
        self.notes.append(message)

    def _convert(self, value: Any, bits: bool, key: Optional[str] = None) -> Any:
        if isinstance(value, dict):
            return {k: self._convert(v, bits, k) for k, v in value.items()}
        if isinstance(value, list):
            return [self._convert(v, bits, key) for v in value]
        if bits and key in self.nats_columns and isinstance(value, float):
            return to_bits(value)
        return value

    def write(self, out_dir: str, bits: bool = False) -> List[Path]:
        """Write one CSV per table and the JSON report; returns the written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for table, rows in self.tables.items():
            path = out / f"{self.name}_{table}.csv"
            write_csv(path, [self._convert(row, bits) for row in rows])
            files.append(path)
        report = {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.name,
            "units": "bits" if bits else "nats",
            "notes": list(self.notes),
            "tables": sorted(self.tables),
        }
        report.update(self._convert(self.report, bits))
        path = out / f"{self.name}.json"
        with open(path, "w") as f:
            json.dump(jsonable(report), f, indent=2, sort_keys=True)
            f.write("\n")
        files.append(path)
        return files

    def __repr__(self) -> str:
        sizes = {k: len(v) for k, v in self.tables.items()}
        return f"ExperimentResult(name='{self.name}', tables={sizes})"


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(path: Path, rows: Sequence[Dict[str, Any]]) -> Path:
    """CSV with a header row; columns in order of first appearance."""
    header: List[str] = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(row.get(key)) for key in header])
    return path


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings inf, -inf and nan."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_cell(value)
    return value


def _rate(beta: float, n: int) -> float:
    return math.inf if beta <= 0 else -math.log(beta) / n


def _state(
    config: ExperimentConfig, key: str, default: Callable[[], DensityOperator]
) -> DensityOperator:
    if config.has_fixture(key):
        return load_operator(config.fixture_path(key))
    return default()


def _family(
    config: ExperimentConfig, key: str, default: Callable[[], FreeFamily]
) -> FreeFamily:
    if config.has_fixture(key):
        return load_family(config.fixture_path(key))
    return default()


def _channel(
    config: ExperimentConfig, key: str, default: Callable[[], QuantumChannel]
) -> QuantumChannel:
    if config.has_fixture(key):
        return load_channel(config.fixture_path(key))
    return default()


def s1_closed_forms(mu: float, eps: float) -> Tuple[float, float]:
    """(composite, pointwise maximum) of β_ε for ρ = I/2 against the {I, Z} orbit of σ[μ]."""
    m = min(mu, 1.0 - mu)
    pointwise = 1.0 - 2.0 * (1.0 - m) * eps if eps <= 0.5 else 2.0 * m * (1.0 - eps)
    return 1.0 - eps, pointwise


def s2_closed_forms(p: float, eps: float) -> Tuple[float, float]:
    """(composite, pointwise maximum) of β_ε for ρ = |0><0| against the phase orbit of |φ_p>."""
    if eps >= p:
        pointwise = 0.0
    else:
        pointwise = (math.sqrt((1.0 - eps) * p) - math.sqrt(eps * (1.0 - p))) ** 2
    return (1.0 - eps) * p, pointwise


def s1_average_rate(mu: float, n: int) -> float:
    """(1/n) D((I/2)^{⊗n} || σ_av^n) from the spectrum of the averaged state.

    σ[μ] and σ[1-μ] share the |±> eigenbasis, so σ_av^n has eigenvalue
    (μ^k (1-μ)^{n-k} + (1-μ)^k μ^{n-k})/2 with multiplicity C(n, k).
    """
    if not 0.0 < mu < 1.0:
        raise ValidationError(f"mu must lie in (0, 1), got {mu}")
    total = 0.0
    for k in range(n + 1):
        value = 0.5 * (mu**k * (1 - mu) ** (n - k) + (1 - mu) ** k * mu ** (n - k))
        total += math.comb(n, k) * (-n * math.log(2.0) - math.log(value))
    return total / 2**n / n


def run_examples(config: ExperimentConfig) -> ExperimentResult:
    """Closed forms of the orbit examples and the averaged-state rates."""
    extra = config.extra
    mus = [float(x) for x in extra.get("mu", [0.1, 0.2, 0.3, 0.4, 0.5])]
    ps = [float(x) for x in extra.get("p", [0.3, 0.5, 0.7])]
    eps_grid = [float(x) for x in extra.get("eps_grid", [0.05, 0.15, 0.25, 0.35, 0.5])]
    crosscheck = bool(extra.get("sdp_crosscheck", True))
    atol = float(extra.get("atol", 1e-5))
    result = ExperimentResult(
        "examples", nats_columns=("rate", "closed_rate", "min_relative_entropy", "gap")
    )

    rho = DensityOperator.maximally_mixed([2])
    rows = []
    for mu in mus:
        S = example_s1_family(mu).level(1)
        for eps in eps_grid:
            closed_composite, closed_pointwise = s1_closed_forms(mu, eps)
            composite = beta_composite(rho, S, eps).value
            pointwise = beta_worstcase_pointwise(rho, S, eps, scheme="vertices")
            check_leq(
                f"S1 |composite - closed| at mu={mu}, eps={eps}",
                abs(composite - closed_composite), 0.0, atol,
            )
            check_leq(
                f"S1 |pointwise - closed| at mu={mu}, eps={eps}",
                abs(pointwise - closed_pointwise), 0.0, atol,
            )
            row = {
                "mu": mu,
                "eps": eps,
                "composite": composite,
                "closed_composite": closed_composite,
                "pointwise": pointwise,
                "closed_pointwise": closed_pointwise,
                "strict": composite > pointwise + atol,
            }
            if crosscheck:
                row["composite_sdp"] = beta_composite(rho, S, eps, reduce=False).value
                check_leq(
                    f"S1 |sdp - closed| at mu={mu}, eps={eps}",
                    abs(row["composite_sdp"] - closed_composite), 0.0, atol,
                )
            rows.append(row)
    result.tables["s1"] = rows

    rho = DensityOperator.from_vector([1.0, 0.0])
    phases = int(extra.get("phases", 8))
    rows = []
    for p in ps:
        S = example_s2_family(p, phases).level(1)
        for eps in eps_grid:
            closed_composite, closed_pointwise = s2_closed_forms(p, eps)
            composite = beta_composite(rho, S, eps).value
            pointwise = beta_worstcase_pointwise(rho, S, eps, scheme="vertices")
            check_leq(
                f"S2 |composite - closed| at p={p}, eps={eps}",
                abs(composite - closed_composite), 0.0, atol,
            )
            check_leq(
                f"S2 |pointwise - closed| at p={p}, eps={eps}",
                abs(pointwise - closed_pointwise), 0.0, atol,
            )
            row = {
                "p": p,
                "eps": eps,
                "composite": composite,
                "closed_composite": closed_composite,
                "pointwise": pointwise,
                "closed_pointwise": closed_pointwise,
                "strict": composite > pointwise + atol,
            }
            if crosscheck:
                row["composite_sdp"] = beta_composite(rho, S, eps, reduce=False).value
                check_leq(
                    f"S2 |sdp - closed| at p={p}, eps={eps}",
                    abs(row["composite_sdp"] - closed_composite), 0.0, atol,
                )
            rows.append(row)
    result.tables["s2"] = rows

    ns = sorted(config.n_range)
    mu = float(extra.get("s3_mu", 0.2))
    family = example_s1_family(mu)
    rho = DensityOperator.maximally_mixed([2])
    min_d = min(relative_entropy(rho, sigma_mu(mu)), relative_entropy(rho, sigma_mu(1 - mu)))
    rows = []
    for n in ns:
        numeric = relative_entropy(tensor_power(rho, n), averaged_state(family.level(n))) / n
        classical = s1_average_rate(mu, n)
        check_leq(f"S3 |numeric - classical| at n={n}", abs(numeric - classical), 0.0, 1e-8)
        rows.append(
            {
                "n": n,
                "rate": numeric,
                "closed_rate": classical,
                "min_relative_entropy": min_d,
                "gap": min_d - numeric,
                "strict_gap": False,
            }
        )
    result.tables["s3"] = rows

    p = float(extra.get("s4_p", 0.5))
    family = example_s2_family(p, max(phases, max(ns) + 1))
    rho = DensityOperator.from_vector([1.0, 0.0])
    min_d = relative_entropy(rho, phi_state(p))
    closed = -math.log(p)
    rows = []
    for n in ns:
        numeric = relative_entropy(tensor_power(rho, n), averaged_state(family.level(n))) / n
        check_leq(f"S4 |numeric + log p| at n={n}", abs(numeric - closed), 0.0, 1e-8)
        rows.append(
            {
                "n": n,
                "rate": numeric,
                "closed_rate": closed,
                "min_relative_entropy": min_d,
                "gap": min_d - numeric,
                "strict_gap": min_d > numeric + 1e-9,
            }
        )
    result.tables["s4"] = rows
    if any(row["strict_gap"] for row in rows):
        result.note(f"S4 (p={p}): averaged-state rate stays below min D = {min_d}")

    result.report = {
        "checks": {
            "s1_closed_forms": True,
            "s2_closed_forms": True,
            "s3_averaged_rate": True,
            "s4_averaged_rate": True,
            "s4_strict_gap": all(row["strict_gap"] for row in rows),
        },
        "atol": atol,
        "s3_mu": mu,
        "s4_p": p,
    }
    return result


def run_stein_iid(config: ExperimentConfig) -> ExperimentResult:
    """Rates of β_ε(ρ^{⊗n}‖σ^{⊗n}) against D(ρ‖σ) and the Rényi strong converse.

    Missing state fixtures are drawn at random from the config seed.
    """
    rng = np.random.default_rng(config.seed)
    rho = _state(config, "rho", lambda: random_density([2], rng))
    sigma = _state(config, "sigma", lambda: random_density([2], rng))
    d = relative_entropy(rho, sigma)
    result = ExperimentResult(
        "stein-iid",
        nats_columns=("rate", "relative_entropy", "gap", "lhs", "rhs", "slack", "abs_gap"),
    )
    rates, bounds = [], []
    gaps: Dict[float, List[float]] = {eps: [] for eps in config.eps}
    for n in sorted(config.n_range):
        rho_n = tensor_power(rho, n)
        sigma_n = tensor_power(sigma, n)
        for eps in config.eps:
            beta = beta_simple(rho_n, sigma_n, eps).value
            rate = _rate(beta, n)
            gaps[eps].append(rate - d)
            rates.append(
                {
                    "n": n,
                    "eps": eps,
                    "beta": beta,
                    "rate": rate,
                    "relative_entropy": d,
                    "gap": rate - d,
                }
            )
            for alpha in config.alpha:
                lhs, rhs = strong_converse_bound(rho, sigma, n, eps, alpha)
                bounds.append(
                    {
                        "n": n,
                        "eps": eps,
                        "alpha": alpha,
                        "lhs": lhs,
                        "rhs": rhs,
                        "slack": rhs - lhs,
                        "pass": True,
                    }
                )
    result.tables["rates"] = rates
    result.tables["strong_converse"] = bounds
    corridor = {}
    for eps, values in gaps.items():
        finite = [abs(g) for g in values if math.isfinite(g)]
        narrowing = all(b <= a + 1e-12 for a, b in zip(finite, finite[1:]))
        corridor[repr(eps)] = {"abs_gap": finite, "narrowing": narrowing}
        if not narrowing:
            result.note(f"eps={eps}: |rate - D| is not monotone over n")
    if 0.0 in config.eps:
        result.note("eps = 0 rows use the support-projector test")
    result.report = {
        "relative_entropy": d,
        "corridor": corridor,
        "checks": {"strong_converse": True},
    }
    return result


def run_stein_composite(config: ExperimentConfig) -> ExperimentResult:
    """Composite rates over the symmetrized free sets against the per-copy minimum D."""
    rho = _state(config, "rho", lambda: maximally_entangled(2))
    family = _family(config, "family", lambda: ppt_family(2, 2))
    threshold = float(config.extra.get("gap_threshold", 0.5))
    result = ExperimentResult(
        "stein-composite", nats_columns=("rate", "entropy_rate", "gap", "bound")
    )
    sigma_1 = None
    if family.tensor_closed:
        _, sigma_1 = min_relative_entropy(rho, family.level(1))
    f: Dict[int, float] = {}
    rows, bounds = [], []
    for n in sorted(config.n_range):
        rho_n = tensor_power(rho, n)
        S = symmetrized_subset(family.level(n))
        value, _ = min_relative_entropy(rho_n, S)
        f[n] = value
        for eps in config.eps:
            beta = beta_composite(rho_n, S, eps).value
            rate = _rate(beta, n)
            gap = rate - value / n
            rows.append(
                {
                    "n": n,
                    "eps": eps,
                    "beta": beta,
                    "rate": rate,
                    "entropy_rate": value / n,
                    "gap": gap,
                    "within_calibration": abs(gap) <= threshold,
                }
            )
            if sigma_1 is None:
                continue
            for alpha in config.alpha:
                _, bound = strong_converse_bound(
                    rho, sigma_1, n, eps, alpha, family.sigma_full
                )
                check_leq(
                    f"-(1/n) log beta(rho^n||S_n) <= Renyi bound at n={n}, alpha={alpha}",
                    rate, bound, 1e-6,
                )
                bounds.append({"n": n, "eps": eps, "alpha": alpha, "rate": rate, "bound": bound})
    if family.tensor_closed:
        for n in f:
            for m in f:
                if m >= n and n + m in f:
                    check_leq(f"f({n + m}) <= f({n}) + f({m})", f[n + m], f[n] + f[m], 1e-6)
    result.tables["rates"] = rows
    if bounds:
        result.tables["strong_converse"] = bounds
    outside = [row for row in rows if not row["within_calibration"]]
    if outside:
        result.note(f"{len(outside)} rows exceed the calibration gap threshold {threshold}")
    result.report = {
        "family": family.name,
        "tensor_closed": family.tensor_closed,
        "gap_threshold (calibration)": threshold,
        "checks": {
            "strong_converse": family.tensor_closed,
            "subadditivity": family.tensor_closed,
            "within_calibration": not outside,
        },
    }
    return result


def entropy_budget_audit(
    pinched: DensityOperator,
    sigma_prime: DensityOperator,
    pinching: PinchingMap,
    n: int,
    upper_rate: float,
    lower_rate: float,
    lambda_n: float,
    slack: float = 1e-7,
) -> Dict[str, Any]:
    """Split (1/n)D(E(ρ^n)‖σ') over P_i = {E(ρ^n) ≤ e^{n θ_i} σ'} and check the budget.

    The projections are built in the joint eigenbasis of E(ρ^n) and σ', block by
    block of the pinching. Asserts commutation, P_2 ≤ P_1 and
    (1/n)D ≤ Tr[(I-P_1)E]λ_n + Tr[(P_1-P_2)E]θ_1 + Tr[P_2 E]θ_2.
    """
    if lower_rate > upper_rate:
        raise ValidationError(f"Thresholds out of order: {lower_rate} > {upper_rate}")
    dim = pinched.dim
    p1 = np.zeros((dim, dim), dtype=complex)
    p2 = np.zeros((dim, dim), dtype=complex)
    for value, basis in zip(pinching.eigenvalues, pinching.bases):
        block = basis.conj().T @ pinched.matrix @ basis
        w, u = np.linalg.eigh((block + block.conj().T) / 2)
        vectors = basis @ u
        for j, wj in enumerate(w):
            outer = np.outer(vectors[:, j], vectors[:, j].conj())
            if wj <= math.exp(n * upper_rate) * value:
                p1 += outer
            if wj <= math.exp(n * lower_rate) * value:
                p2 += outer
    e = pinched.matrix
    s = sigma_prime.matrix
    mass_1 = float(np.real(np.vdot(p1, e)))
    mass_2 = float(np.real(np.vdot(p2, e)))
    lhs = relative_entropy(pinched, sigma_prime) / n
    rhs = (1.0 - mass_1) * lambda_n + (mass_1 - mass_2) * upper_rate + mass_2 * lower_rate

    def commutator(x: np.ndarray, y: np.ndarray) -> float:
        return float(np.max(np.abs(x @ y - y @ x)))

    commutation = max(
        commutator(e, s), commutator(p1, e), commutator(p1, s),
        commutator(p2, e), commutator(p2, s), commutator(p1, p2),
    )
    ordering = float(np.linalg.eigvalsh(p1 - p2)[0])
    floor = float(sigma_prime.eigvalsh()[0])
    check_leq("[E(rho^n), sigma', P_1, P_2] commute", commutation, 0.0, 1e-7)
    check_leq("P_2 <= P_1", -ordering, 0.0, 1e-8)
    check_leq("sigma' >= exp(-n lambda_n) I", math.exp(-n * lambda_n), floor, 1e-12)
    check_leq("(1/n)D(E(rho^n)||sigma') <= entropy budget", lhs, rhs, slack)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "slack": rhs - lhs,
        "outer_mass": 1.0 - mass_1,
        "middle_mass": mass_1 - mass_2,
        "inner_mass": mass_2,
        "commutation_residual": commutation,
        "ordering_min_eigenvalue": ordering,
        "sigma_prime_min_eigenvalue": floor,
    }


def run_stein_audit(config: ExperimentConfig) -> ExperimentResult:
    """One round of the σ' construction, its pinching and the entropy-budget inequality."""
    n = max(config.n_range)
    if n not in (2, 3):
        raise ConfigError(f"stein-audit runs at n = 2 or 3, got {n}")
    eps = config.eps[0]
    extra = config.extra
    rho = _state(config, "rho", lambda: maximally_entangled(2))
    family = _family(config, "family", lambda: ppt_family(2, 2))
    result = ExperimentResult(
        "stein-audit",
        nats_columns=(
            "R1", "R2", "eps0", "eps2", "lambda", "lambda_tilde", "lambda_n",
            "upper_rate", "lower_rate", "lhs", "rhs", "slack", "block_rate",
        ),
    )

    m = int(extra.get("m", 1))
    if not 1 <= m <= n:
        raise ConfigError(f"m must lie in [1, {n}], got {m}")
    f_m, sigma_m = min_relative_entropy(tensor_power(rho, m), family.level(m))
    block_rate = f_m / m
    r2 = float(extra.get("R2", block_rate))
    eps0 = float(extra.get("eps0", 0.0))
    eps2 = float(extra.get("eps2", 0.05))
    if block_rate > r2 + eps0 + 1e-9:
        result.note(f"(1/m)D(rho^m||sigma_m) = {block_rate:.6g} exceeds R2 + eps0")
    if "R1" in extra:
        r1 = float(extra["R1"])
        if r1 > r2 + eps0:
            raise ConfigError(f"R1 = {r1} must not exceed R2 + eps0 = {r2 + eps0}")
    else:
        r1 = _rate(beta_composite(rho, family.level(1), eps).value, 1)
        if r1 > r2 + eps0:
            result.note(f"measured R1 = {r1:.6g} clamped to R2 + eps0")
            r1 = r2 + eps0
    upper_rate = r2 + eps0 + eps2
    lower_rate = r1 + eps2
    lam = family.lam
    floor = max(lam, upper_rate)
    lambda_tilde = float(extra.get("lambda_tilde", floor))
    if lambda_tilde < floor:
        result.note(f"lambda_tilde = {lambda_tilde:.6g} raised to {floor:.6g}")
        lambda_tilde = floor
    lambda_n = lambda_tilde + math.log(3.0) / n

    rho_n = tensor_power(rho, n)
    S = symmetrized_subset(family.level(n))
    worst_beta, sigma_star = worst_case_state(rho_n, S, eps)
    k, rest = divmod(n, m)
    parts = [tensor_power(sigma_m, k)]
    if rest:
        parts.append(tensor_power(family.sigma_full, rest))
    sigma_tilde = tensor(*parts)
    twirled = S.site_twirl(sigma_tilde.matrix)
    full_n = tensor_power(family.sigma_full, n)
    sigma_prime = DensityOperator(
        (sigma_star.matrix + twirled + full_n.matrix) / 3.0, rho_n.layout
    )
    pinching = PinchingMap(sigma_prime)
    pinched = pinch(pinching, rho_n)
    budget = entropy_budget_audit(
        pinched, sigma_prime, pinching, n, upper_rate, lower_rate, lambda_n
    )
    identity = pinching_entropy_identity_audit(rho_n, sigma_prime)
    site_dim = S.site_layout.total_dim
    blocks = distinct_eigenvalue_count(sigma_prime)
    blocks_bound = eigenvalue_count_bound(n, site_dim)
    check_leq("distinct eigenvalues of sigma' <= v_n", blocks, blocks_bound, 0.0)

    result.tables["budget"] = [
        {
            "n": n,
            "eps": eps,
            "upper_rate": upper_rate,
            "lower_rate": lower_rate,
            "lambda_n": lambda_n,
            "lhs": budget["lhs"],
            "rhs": budget["rhs"],
            "slack": budget["slack"],
            "outer_mass": budget["outer_mass"],
            "middle_mass": budget["middle_mass"],
            "inner_mass": budget["inner_mass"],
        }
    ]
    result.report = {
        "parameters": {
            "n": n,
            "m": m,
            "eps": eps,
            "R1": r1,
            "R2": r2,
            "eps0": eps0,
            "eps2": eps2,
            "lambda": lam,
            "lambda_tilde": lambda_tilde,
            "lambda_n": lambda_n,
            "block_rate": block_rate,
        },
        "family": family.name,
        "worst_case_beta": worst_beta,
        "budget": budget,
        "pinching": identity.to_dict(),
        "blocks": {"measured": blocks, "bound": blocks_bound},
        "checks": {
            "entropy_budget": True,
            "commutation": True,
            "projection_order": True,
            "eigenvalue_count": True,
            "pinching_identity": identity.passed,
        },
        "sigma_prime_free": S.contains(sigma_prime),
        "degenerate_thresholds": upper_rate == lower_rate,
    }
    return result


def max_relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """log of the largest generalized eigenvalue of (ρ, σ); σ must be full rank."""
    w = eigh(rho.matrix, sigma.matrix, eigvals_only=True)
    return math.log(float(w[-1]))


def run_second_law(config: ExperimentConfig) -> ExperimentResult:
    """Measure-and-prepare conversions between copies of two preparation channels."""
    eps = config.eps[0]
    extra = config.extra
    rng = np.random.default_rng(config.seed)
    ebit = preparation_channel(maximally_entangled(2))
    source = _channel(config, "source", lambda: ebit)
    target = _channel(config, "target", lambda: ebit)
    source_family = _family(config, "source_family", lambda: preparation_ppt_family(2, 2))
    target_family = _family(config, "target_family", lambda: preparation_ppt_family(2, 2))
    result = ExperimentResult(
        "second-law",
        nats_columns=(
            "source_rate", "target_rate", "input_rate", "output_rate", "truncation_rate"
        ),
    )

    source_rate = relative_entropy_of_resource(source, source_family.level(1))
    target_rate = relative_entropy_of_resource(target, target_family.level(1))
    if target_rate <= 1e-9:
        raise ConfigError("The target channel is free; no conversion rate to measure")
    ratio = source_rate / target_rate
    if "rate" in extra:
        r = float(extra["rate"])
    else:
        r = float(extra.get("rate_fraction", 0.9)) * ratio
    if ratio > 1e-9 and r >= ratio:
        raise ConfigError(
            f"Conversion rate r={r:.6g} must stay below the measured ratio {ratio:.6g}"
        )
    if source_rate <= 1e-9:
        result.note("source channel is free; the hit probability stays bounded")

    free_target = QuantumChannel(
        target_family.sigma_full, input_axes=target.input_axes
    )
    if "truncation_rate" in extra:
        truncation_rate = float(extra["truncation_rate"])
    else:
        truncation_rate = max_relative_entropy(target.choi, free_target.choi) + 0.1
    samples = int(extra.get("free_samples", 2))

    rows, audits = [], []
    thetas: Dict[int, SuperChannel] = {}
    for n in sorted(config.n_range):
        m_out = max(1, math.ceil(r * n - 1e-12))
        source_n = source.tensor_power(n)
        target_n = target.tensor_power(m_out)
        S_in = symmetrized_subset(source_family.level(n))
        test = beta_composite(source_n.choi, S_in, eps).test
        cut = truncation(target, free_target, 1, m_out, truncation_rate)
        output_set = target_family.level(m_out)
        theta, robustness = theta_from_robustness(
            test, cut.channel, output_set, source_n.input_axes
        )
        thetas[n] = theta
        produced = theta.apply(source_n)
        error = trace_distance(produced.choi, target_n.choi)
        p = theta.hit_probability(source_n)
        path_error = p * trace_distance(cut.channel.choi, target_n.choi) + (1 - p) * (
            trace_distance(theta.prepare_miss.choi, target_n.choi)
        )
        check_leq(f"conversion error <= path value at n={n}", error, path_error, 1e-9)
        valid = super_channel_choi_validate(theta.choi(), theta.dims())
        if not valid:
            raise InequalityViolation(f"Theta_{n} Choi fails the comb conditions", 1.0, 0.0)

        free_level = source_family.level(n)
        members = [free_level.full_rank_member()] + [
            free_level.sample(rng) for _ in range(samples)
        ]
        free_inputs = [QuantumChannel(j, input_axes=source_n.input_axes) for j in members]
        audit = resource_non_generation_audit(theta, free_inputs, output_set)
        audits.extend({"n_copies": n, **row} for row in audit.rows)
        rows.append(
            {
                "n": n,
                "m": m_out,
                "rate": r,
                "hit_probability": p,
                "error": error,
                "path_error": path_error,
                "robustness": robustness.value,
                "cut_mass": cut.cut_mass,
                "comb_valid": valid,
                "non_generation_precondition": audit.precondition,
            }
        )
        logger.info("conversion n=%d -> m=%d: error %.3e", n, m_out, error)
    result.tables["conversion"] = rows
    result.tables["non_generation"] = audits
    result.tables["monotonicity"] = asymptotic_monotonicity_audit(
        source, source_family, target_family, thetas, max(config.n_range)
    )
    result.report = {
        "eps": eps,
        "source_rate": source_rate,
        "target_rate": target_rate,
        "rate_ratio": ratio,
        "rate": r,
        "truncation_rate": truncation_rate,
        "checks": {
            "comb_conditions": all(row["comb_valid"] for row in rows),
            "error_path_bound": True,
            "non_generation": all(row["pass"] for row in audits),
        },
    }
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Validate the config and dispatch to its runner."""
    config.validate()
    try:
        if config.experiment == "examples":
            return run_examples(config)
        elif config.experiment == "stein-iid":
            return run_stein_iid(config)
        elif config.experiment == "stein-composite":
            return run_stein_composite(config)
        elif config.experiment == "stein-audit":
            return run_stein_audit(config)
        elif config.experiment == "second-law":
            return run_second_law(config)
        else:
            raise ValueError(f"Unknown experiment: {config.experiment}")
    except InequalityViolation as e:
        if e.fixture is None and config.source:
            raise e.with_fixture(config.source) from e
        raise
