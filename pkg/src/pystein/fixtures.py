"""
Loading and saving operators, channels and free-family descriptions.

Files are JSON or YAML; both parse through ``yaml.safe_load``. Operators are stored
as {"layout", "re", "im"} records, or as {"vector": {"re", "im"}, "layout"} for pure
states.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from .config import Tolerances
from .errors import ConfigError, ValidationError
from .freesets import (
    FreeFamily,
    GroupOrbitHull,
    ProductFamily,
    example_s1_family,
    example_s2_family,
    iid_family,
    polytope_family,
    ppt_family,
    preparation_ppt_family,
)
from .qcore import BinaryTest, DensityOperator, HermitianOperator, QuantumChannel

SCHEMA_VERSION = 1

PathLike = Union[str, Path]


def read_document(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Fixture file '{path}' not found")
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ConfigError(f"Fixture file '{path}' does not hold a mapping")
    return data


def write_document(data: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _matrix(record: Any) -> np.ndarray:
    """A complex matrix from {"re", "im"} or a plain nested list."""
    if isinstance(record, dict):
        re = np.asarray(record["re"], dtype=float)
        im = np.asarray(record.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(record, dtype=complex)


def operator_from_dict(
    data: Dict[str, Any], kind: str = "density", tol: Optional[Tolerances] = None
) -> HermitianOperator:
    """Build an operator of the given kind: density, hermitian or test."""
    classes = {"density": DensityOperator, "hermitian": HermitianOperator, "test": BinaryTest}
    if kind not in classes:
        raise ValueError(f"Unknown operator kind: {kind}")
    if "vector" in data:
        if kind != "density":
            raise ValidationError("Only states can be given as vectors")
        psi = _matrix(data["vector"]).reshape(-1)
        return DensityOperator.from_vector(psi, data.get("layout"))
    return classes[kind].from_dict(data, tol=tol)


def load_operator(
    path: PathLike, kind: str = "density", tol: Optional[Tolerances] = None
) -> HermitianOperator:
    return operator_from_dict(read_document(path), kind, tol)


def save_operator(op: HermitianOperator, path: PathLike) -> Path:
    data = op.to_dict()
    data["schema_version"] = SCHEMA_VERSION
    return write_document(data, path)


def channel_from_dict(data: Dict[str, Any], tol: Optional[Tolerances] = None) -> QuantumChannel:
    """A channel from its Choi record or from a Kraus list."""
    if "kraus" in data:
        return QuantumChannel.from_kraus([_matrix(k) for k in data["kraus"]])
    if "choi" in data:
        record = dict(data["choi"])
        record.setdefault("input_axes", data.get("input_axes", [0]))
        return QuantumChannel.from_dict(record, tol=tol)
    return QuantumChannel.from_dict(data, tol=tol)


def load_channel(path: PathLike, tol: Optional[Tolerances] = None) -> QuantumChannel:
    return channel_from_dict(read_document(path), tol)


def save_channel(channel: QuantumChannel, path: PathLike) -> Path:
    data = channel.to_dict()
    data["schema_version"] = SCHEMA_VERSION
    return write_document(data, path)


def _operators(records: List[Any], tol: Optional[Tolerances]) -> List[DensityOperator]:
    return [operator_from_dict(r, "density", tol) for r in records]


def family_from_dict(data: Dict[str, Any], tol: Optional[Tolerances] = None) -> FreeFamily:
    """A FreeFamily from its variant tag and parameters."""
    variant = data.get("variant")
    if variant == "polytope":
        return polytope_family(_operators(data["vertices"], tol), data.get("name", "polytope"))
    elif variant == "orbit":
        reference = operator_from_dict(data["reference"], "density", tol)
        unitaries = [_matrix(u) for u in data["unitaries"]]
        base = GroupOrbitHull(reference, unitaries, name=data.get("name", "orbit"), tol=tol)
        if "sigma_full" in data:
            sigma_full = operator_from_dict(data["sigma_full"], "density", tol)
        else:
            sigma_full = base.averaged()
        return FreeFamily(
            base.name,
            lambda n: base if n == 1 else ProductFamily(base, n, "iid", tol=tol),
            sigma_full,
            tensor_closed=False,
            tol=tol,
        )
    elif variant == "iid":
        return iid_family(operator_from_dict(data["sigma"], "density", tol))
    elif variant == "ppt":
        d_a, d_b = data.get("local", [2, 2])
        return ppt_family(int(d_a), int(d_b))
    elif variant == "preparation-ppt":
        d_a, d_b = data.get("local", [2, 2])
        return preparation_ppt_family(int(d_a), int(d_b))
    elif variant == "example-s1":
        return example_s1_family(float(data["mu"]))
    elif variant == "example-s2":
        return example_s2_family(float(data["p"]), int(data.get("phases", 8)))
    else:
        raise ValueError(f"Unknown family variant: {variant}")


def load_family(path: PathLike, tol: Optional[Tolerances] = None) -> FreeFamily:
    data = read_document(path)
    try:
        return family_from_dict(data, tol)
    except KeyError as e:
        raise ConfigError(f"Family file '{path}' is missing field {e}") from e


def family_to_dict(vertices: List[DensityOperator], name: str = "polytope") -> Dict[str, Any]:
    """Polytope family record, the inverse of the 'polytope' loader."""
    return {
        "schema_version": SCHEMA_VERSION,
        "variant": "polytope",
        "name": name,
        "vertices": [v.to_dict() for v in vertices],
    }


def save_family(vertices: List[DensityOperator], path: PathLike, name: str = "polytope") -> Path:
    return write_document(family_to_dict(vertices, name), path)
