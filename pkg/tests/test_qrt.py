"""Tests for qrt module."""

import math

import numpy as np
import pytest

from pystein.errors import ValidationError
from pystein.freesets import (
    PptSet,
    VertexPolytope,
    polytope_family,
    ppt_family,
    preparation_ppt_family,
)
from pystein.qcore import (
    BinaryTest,
    DensityOperator,
    choi_of_replacer,
    identity_channel,
    maximally_entangled,
    preparation_channel,
    random_channel,
    random_density,
)
from pystein.qrt import (
    IdentitySuperChannel,
    ReplacerSuperChannel,
    SuperChannelMP,
    asymptotic_monotonicity_audit,
    choi_channel,
    generalized_robustness,
    log_robustness,
    log_robustness_vs_relative_entropy,
    relative_entropy_of_resource,
    resource_non_generation_audit,
    robustness_tensor_bound_check,
    super_channel_choi_residuals,
    super_channel_choi_validate,
    theta_from_robustness,
    theta_protocol,
    truncation,
    truncated_channel,
    truncation_robustness_check,
)

ZERO = DensityOperator.from_vector([1.0, 0.0])
ONE = DensityOperator.from_vector([0.0, 1.0])
PLUS = DensityOperator.from_vector([1.0, 1.0])
TILTED = DensityOperator.from_vector([math.sqrt(0.8), math.sqrt(0.2)])


class TestRobustness:
    def test_ebit(self):
        result = generalized_robustness(maximally_entangled(2), PptSet.bipartite(2, 2))
        assert result.value == pytest.approx(1.0, abs=1e-6)
        assert result.certificate >= -1e-7
        assert log_robustness(maximally_entangled(2), PptSet.bipartite(2, 2)) == pytest.approx(
            math.log(2), abs=1e-6
        )

    def test_free_state(self):
        S = PptSet.bipartite(2, 2)
        value = generalized_robustness(DensityOperator.maximally_mixed([2, 2]), S).value
        assert value == pytest.approx(0.0, abs=1e-6)

    def test_coherence_of_plus(self):
        hull = VertexPolytope([ZERO, ONE])
        result = generalized_robustness(PLUS, hull)
        assert result.value == pytest.approx(1.0, abs=1e-6)
        mixture = (PLUS.matrix + result.value * result.partner.matrix) / (1 + result.value)
        assert hull.contains(DensityOperator.nearest(mixture), atol=1e-6)

    def test_tensor_bound(self):
        hull = VertexPolytope([ZERO, ONE])
        family = polytope_family([ZERO, ONE])
        assert robustness_tensor_bound_check(TILTED, PLUS, hull, hull, family.level(2))

    def test_relative_entropy_below_log_robustness(self):
        family = polytope_family([ZERO, ONE])
        rows = log_robustness_vs_relative_entropy(TILTED, family, 2)
        h = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
        assert [row["n"] for row in rows] == [1, 2]
        for row in rows:
            assert row["relative_entropy"] == pytest.approx(h, abs=1e-5)
            assert row["log_robustness"] == pytest.approx(math.log(1.8), abs=1e-5)
            assert row["pass"]

    def test_preparation_channel_matches_state(self):
        S = preparation_ppt_family().level(1)
        phi = maximally_entangled(2)
        value = relative_entropy_of_resource(preparation_channel(phi), S)
        assert value == pytest.approx(math.log(2), abs=1e-3)


def test_choi_channel_restores_marginal():
    channel = random_channel(2, 2, np.random.default_rng(51))
    noisy = channel.choi.matrix + 1e-4 * np.eye(4)
    restored = choi_channel(noisy, channel)
    assert restored.marginal_residual() < 1e-10
    assert restored.choi.allclose(channel.choi, atol=1e-3)
    assert choi_channel(channel.choi.matrix, channel).choi.allclose(channel.choi)


class TestTruncation:
    def setup_method(self):
        self.identity = identity_channel(2)
        self.free = choi_of_replacer(2, DensityOperator.maximally_mixed(2))

    def test_full_cut(self):
        result = truncation(self.identity, self.free, 1, 1, 0.5)
        assert "full-cut" in result.flags
        assert result.cut_mass == pytest.approx(1.0)
        assert result.free_mass == pytest.approx(0.25)
        assert result.channel.choi.allclose(self.free.choi, atol=1e-9)
        assert result.trace_distance == pytest.approx(0.75)
        assert result.to_dict()["num_blocks"] == 1

    def test_empty_projection(self):
        channel = truncated_channel(self.identity, self.free, 1, 1, 2.0)
        assert channel.choi.allclose(self.identity.choi, atol=1e-9)
        result = truncation(self.identity, self.free, 1, 1, 2.0)
        assert "empty-projection" in result.flags
        assert "full-cut" not in result.flags
        assert result.trace_distance == pytest.approx(0.0, abs=1e-9)

    def test_random_channel_stays_valid(self):
        channel = random_channel(2, 2, np.random.default_rng(52))
        result = truncation(channel, self.free, 1, 2, 0.7)
        assert result.channel.marginal_residual() < 1e-9
        assert result.free_mass <= math.exp(-2 * 0.7) + 1e-9
        assert 0.0 <= result.cut_mass <= 1.0
        assert result.channel.choi.layout == channel.tensor_power(2).choi.layout

    def test_robustness_bound(self):
        result = truncation(self.identity, self.free, 1, 1, 0.5)
        S = VertexPolytope([self.free.choi])
        measured, bound = truncation_robustness_check(result, 1, 1, 0.5, S)
        assert measured == pytest.approx(0.0, abs=1e-6)
        assert bound == pytest.approx(math.exp(0.5))

    @pytest.mark.parametrize("seed", range(10))
    def test_distance_shrinks_as_rate_grows(self, seed):
        channel = random_channel(2, 2, np.random.default_rng(100 + seed))
        results = [truncation(channel, self.free, 1, 1, R) for R in (0.2, 0.8, 2.0)]
        distances = [r.trace_distance for r in results]
        assert distances[0] >= distances[1] - 1e-9
        assert distances[1] >= distances[2] - 1e-9
        for R, result in zip((0.2, 0.8, 2.0), results):
            assert result.free_mass <= math.exp(-R) + 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_robustness_bound_on_random_channels(self, seed):
        channel = random_channel(2, 2, np.random.default_rng(200 + seed))
        result = truncation(channel, self.free, 1, 1, 0.7)
        S = VertexPolytope([self.free.choi])
        measured, bound = truncation_robustness_check(result, 1, 1, 0.7, S)
        assert measured <= bound + 1e-6
        assert bound == pytest.approx(result.num_blocks * math.exp(0.7))

    def test_invalid_arguments(self):
        with pytest.raises(ValidationError):
            truncation(self.identity, self.free, 1, 1, 0.0)
        with pytest.raises(ValidationError):
            truncation(self.identity, self.free, 0, 1, 0.5)
        with pytest.raises(ValidationError):
            truncation(self.identity, self.free.tensor_power(2), 1, 1, 0.5)


class TestSuperChannels:
    def setup_method(self):
        self.test = BinaryTest(maximally_entangled(2).matrix, [2, 2])
        self.hit = identity_channel(2)
        self.miss = choi_of_replacer(2, DensityOperator.maximally_mixed(2))

    def test_measure_and_prepare(self):
        theta = theta_protocol(self.test, self.hit, self.miss)
        assert theta.hit_probability(self.hit) == pytest.approx(1.0)
        assert theta.hit_probability(self.miss) == pytest.approx(0.25)
        output = theta.apply(self.miss)
        expected = 0.25 * self.hit.choi.matrix + 0.75 * self.miss.choi.matrix
        assert np.allclose(output.choi.matrix, expected)
        assert np.allclose(theta.choi_map(self.miss.choi.matrix), expected)
        assert theta.dims() == (2, 2, 2, 2)

    def test_comb_conditions(self):
        theta = SuperChannelMP(self.test, self.hit, self.miss)
        assert super_channel_choi_validate(theta.choi(), theta.dims())
        identity = IdentitySuperChannel(2, 2)
        assert super_channel_choi_validate(identity.choi(), identity.dims())
        replacer = ReplacerSuperChannel(self.miss, 2, 3)
        assert super_channel_choi_validate(replacer.choi(), replacer.dims())
        assert identity.apply(self.miss) is self.miss
        assert replacer.apply(self.hit) is self.miss

    def test_rejects_invalid_comb(self):
        j2 = np.zeros((16, 16))
        j2[0, 0] = 1.0
        assert not super_channel_choi_validate(j2, (2, 2, 2, 2))
        residuals = super_channel_choi_residuals(j2, (2, 2, 2, 2))
        assert residuals["input_marginal"] == pytest.approx(0.5)
        with pytest.raises(ValidationError):
            super_channel_choi_residuals(j2, (2, 2, 2, 3))

    @pytest.mark.parametrize("seed", range(50))
    def test_random_protocols_are_valid_combs(self, seed):
        rng = np.random.default_rng(300 + seed)
        weights = random_density([2, 2], rng).matrix
        test = BinaryTest(weights / np.linalg.eigvalsh(weights)[-1], [2, 2])
        theta = theta_protocol(test, random_channel(2, 2, rng), random_channel(2, 2, rng))
        assert super_channel_choi_validate(theta.choi(), theta.dims())
        output = theta.apply(random_channel(2, 2, rng))
        assert output.marginal_residual() < 1e-9
        assert np.linalg.eigvalsh(output.choi.matrix)[0] >= -1e-9

    @pytest.mark.parametrize("seed", range(100))
    def test_random_four_factor_states_are_rejected(self, seed):
        j2 = random_density([2, 2, 2, 2], np.random.default_rng(400 + seed))
        assert not super_channel_choi_validate(j2, (2, 2, 2, 2))

    def test_mismatched_preparations(self):
        other = choi_of_replacer(3, DensityOperator.maximally_mixed(2))
        with pytest.raises(ValidationError):
            SuperChannelMP(self.test, self.hit, other)


class TestSecondLawPieces:
    def setup_method(self):
        self.S = preparation_ppt_family().level(1)
        self.hit = preparation_channel(maximally_entangled(2))
        self.test = BinaryTest(maximally_entangled(2).matrix, [1, 2, 2])

    def test_theta_from_robustness(self):
        theta, robustness = theta_from_robustness(self.test, self.hit, self.S)
        assert robustness.value == pytest.approx(1.0, abs=1e-6)
        s = robustness.value
        mixture = (self.hit.choi.matrix + s * theta.prepare_miss.choi.matrix) / (1 + s)
        assert self.S.contains(DensityOperator(mixture, [1, 2, 2], check=False), atol=1e-6)

    def test_non_generation(self):
        theta, _ = theta_from_robustness(self.test, self.hit, self.S)
        free = [preparation_channel(DensityOperator.maximally_mixed([2, 2]))]
        report = resource_non_generation_audit(theta, free, self.S)
        assert report.precondition
        assert report.t_max == pytest.approx(0.25)
        assert report.bound == pytest.approx(0.5, abs=1e-5)
        assert all(row["pass"] for row in report.rows)
        assert report.to_dict()["s"] == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("seed", range(10))
    def test_non_generation_on_separable_inputs(self, seed):
        rng = np.random.default_rng(500 + seed)
        theta, _ = theta_from_robustness(self.test, self.hit, self.S)
        free = []
        for _ in range(2):
            # purity stays below 1/3, so the mixture is separable
            mixed = 0.7 * np.eye(4) / 4 + 0.3 * random_density([2, 2], rng).matrix
            free.append(preparation_channel(DensityOperator(mixed, [2, 2])))
        report = resource_non_generation_audit(theta, free, self.S)
        assert report.precondition
        assert report.t_max <= 0.5
        assert all(row["pass"] for row in report.rows)
        assert all(row["lhs"] <= row["rhs"] + 1e-6 for row in report.rows)

    def test_non_generation_without_precondition(self):
        always = BinaryTest(np.eye(4), [1, 2, 2])
        theta, _ = theta_from_robustness(always, self.hit, self.S)
        free = [preparation_channel(DensityOperator.maximally_mixed([2, 2]))]
        report = resource_non_generation_audit(theta, free, self.S)
        assert not report.precondition
        assert not report.rows[0]["pass"]

    def test_monotonicity_rows(self):
        family = preparation_ppt_family()
        thetas = {1: IdentitySuperChannel(1, 4)}
        rows = asymptotic_monotonicity_audit(self.hit, family, family, thetas, 1)
        assert len(rows) == 1
        assert rows[0]["input_rate"] == pytest.approx(rows[0]["output_rate"], abs=1e-6)
        assert rows[0]["input_rate"] == pytest.approx(math.log(2), abs=1e-3)


def test_ppt_family_lambda():
    assert ppt_family().lam == pytest.approx(math.log(4))
