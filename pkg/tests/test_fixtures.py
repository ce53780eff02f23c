"""Tests for fixtures module."""

import math
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

from pystein.errors import ConfigError, ValidationError
from pystein.fixtures import (
    channel_from_dict,
    family_from_dict,
    load_channel,
    load_family,
    load_operator,
    operator_from_dict,
    read_document,
    save_channel,
    save_family,
    save_operator,
)
from pystein.freesets import GroupOrbitHull, ProductFamily, sigma_mu
from pystein.qcore import (
    BinaryTest,
    DensityOperator,
    DimLayout,
    HermitianOperator,
    identity_channel,
    maximally_entangled,
    random_channel,
    random_density,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class TestOperators:
    def test_load_pure_state(self):
        phi = load_operator(FIXTURES / "states" / "phi2.json")
        assert isinstance(phi, DensityOperator)
        assert phi.layout == DimLayout([2, 2])
        assert phi.allclose(maximally_entangled(2))

    def test_kinds(self):
        record = {"re": [[1.0, 0.0], [0.0, 0.0]]}
        assert isinstance(operator_from_dict(record, "test"), BinaryTest)
        assert isinstance(operator_from_dict(record, "hermitian"), HermitianOperator)
        with pytest.raises(ValueError):
            operator_from_dict(record, "unitary")
        with pytest.raises(ValidationError):
            operator_from_dict({"vector": {"re": [1.0, 0.0]}}, "test")

    def test_plain_list_vector(self):
        state = operator_from_dict({"vector": [0.6, 0.8]})
        assert state.matrix[0, 1] == pytest.approx(0.48)

    def test_save_and_load(self):
        rho = random_density([2, 2], np.random.default_rng(61))
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_operator(rho, os.path.join(tmpdir, "states", "rho.json"))
            assert read_document(path)["schema_version"] == 1
            loaded = load_operator(path)
        assert loaded.layout == rho.layout
        assert loaded.allclose(rho)

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_operator("no_such_state.json")


class TestChannels:
    def test_load_preparation(self):
        channel = load_channel(FIXTURES / "channels" / "ebit_preparation.json")
        assert channel.d_in == 1
        assert channel.d_out == 4
        assert np.allclose(channel.choi.matrix, maximally_entangled(2).matrix)

    def test_kraus_record(self):
        channel = channel_from_dict({"kraus": [[[1.0, 0.0], [0.0, 1.0]]]})
        assert channel.choi.allclose(identity_channel(2).choi)

    def test_save_and_load(self):
        channel = random_channel(2, 3, np.random.default_rng(62))
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_channel(channel, os.path.join(tmpdir, "channel.json"))
            loaded = load_channel(path)
        assert loaded.input_axes == channel.input_axes
        assert loaded.choi.allclose(channel.choi)


class TestFamilies:
    def test_fixture_families(self):
        ppt = load_family(FIXTURES / "families" / "ppt.json")
        assert ppt.lam == pytest.approx(math.log(4))
        preparation = load_family(FIXTURES / "families" / "preparation_ppt.json")
        assert preparation.level(1).layout == DimLayout([1, 2, 2])
        s1 = load_family(FIXTURES / "families" / "example_s1.json")
        assert s1.level(1).contains(sigma_mu(0.2))

    def test_orbit_variant(self):
        record = {
            "variant": "orbit",
            "reference": sigma_mu(0.3).to_dict(),
            "unitaries": [np.eye(2).tolist(), np.diag([1.0, -1.0]).tolist()],
        }
        family = family_from_dict(record)
        assert isinstance(family.level(1), GroupOrbitHull)
        assert isinstance(family.level(2), ProductFamily)
        assert family.sigma_full.allclose(DensityOperator.maximally_mixed(2))

    def test_iid_variant(self):
        record = {"variant": "iid", "sigma": {"re": [[0.25, 0.0], [0.0, 0.75]]}}
        family = family_from_dict(record)
        assert family.tensor_closed
        assert family.lam == pytest.approx(math.log(4))

    def test_polytope_save_and_load(self):
        vertices = [DensityOperator(np.diag([0.9, 0.1])), DensityOperator(np.diag([0.2, 0.8]))]
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_family(vertices, os.path.join(tmpdir, "hull.json"), name="diagonal")
            family = load_family(path)
        assert family.name == "diagonal"
        assert family.level(1).contains(DensityOperator(np.diag([0.5, 0.5])))
        assert not family.level(1).contains(DensityOperator(np.diag([0.95, 0.05])))

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            family_from_dict({"variant": "stabilizer"})

    def test_missing_field(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "s2.json")
            with open(path, "w") as f:
                f.write('{"variant": "example-s2"}\n')
            with pytest.raises(ConfigError, match="missing field"):
                load_family(path)
