"""
Numerical tolerances and experiment configuration.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    """Every numerical tolerance and size budget used by the library."""

    hermiticity: float = 1e-12
    psd: float = 1e-10
    trace: float = 1e-10
    channel_marginal: float = 1e-9
    cluster: float = 1e-9
    support_cutoff: float = 1e-12
    support_mass: float = 1e-10
    dim_cap: int = 4096
    sdp_variable_cap: int = 200_000
    sdp_row_cap: int = 3000
    twirl_cost_cap: int = 3_000_000

    def with_overrides(self, **kwargs: Any) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()


def resolve(tol: Optional[Tolerances]) -> Tolerances:
    return DEFAULT_TOLERANCES if tol is None else tol


EXPERIMENTS = ("examples", "stein-iid", "stein-composite", "stein-audit", "second-law")

# per-experiment ceiling on n; SDP-backed runs stay small
N_BUDGET = {
    "examples": 6,
    "stein-iid": 6,
    "stein-composite": 4,
    "stein-audit": 3,
    "second-law": 3,
}


@dataclass
class ExperimentConfig:
    """One experiment run, loaded from a JSON or YAML file."""

    experiment: str
    fixtures: Dict[str, str] = field(default_factory=dict)
    n_range: List[int] = field(default_factory=lambda: [1, 2, 3])
    eps: List[float] = field(default_factory=lambda: [0.1])
    alpha: List[float] = field(default_factory=lambda: [1.5, 2.0])
    seed: int = 0
    out_dir: str = "results"
    extra: Dict[str, Any] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)
    source: Optional[str] = None

    def fixture_path(self, key: str) -> Path:
        """Resolve a fixture reference relative to the config file."""
        if key not in self.fixtures:
            raise ConfigError(f"Config '{self.experiment}' has no fixture '{key}'")
        path = Path(self.fixtures[key])
        if not path.is_absolute():
            path = self.base_dir / path
        return path

    def has_fixture(self, key: str) -> bool:
        return key in self.fixtures

    def validate(self) -> None:
        """Check fixture existence and the n range against the experiment budget."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"Unknown experiment: {self.experiment}")
        for key in self.fixtures:
            if not self.fixture_path(key).exists():
                raise ConfigError(f"Fixture '{key}' not found: {self.fixture_path(key)}")
        if not self.n_range or min(self.n_range) < 1:
            raise ConfigError("n range must be a nonempty list of positive integers")
        cap = N_BUDGET[self.experiment]
        if max(self.n_range) > cap:
            raise ConfigError(
                f"n range {self.n_range} exceeds the {self.experiment} budget n <= {cap}"
            )
        for e in self.eps:
            if not 0.0 <= e < 1.0:
                raise ConfigError(f"eps must lie in [0, 1), got {e}")
        for a in self.alpha:
            if a <= 1.0:
                raise ConfigError(f"alpha must exceed 1, got {a}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[Path] = None) -> "ExperimentConfig":
        if "experiment" not in data:
            raise ConfigError("Config is missing the 'experiment' field")
        n_range = data.get("n_range", [1, 2, 3])
        if isinstance(n_range, dict):
            n_range = list(range(int(n_range["min"]), int(n_range["max"]) + 1))
        return cls(
            experiment=str(data["experiment"]),
            fixtures={str(k): str(v) for k, v in data.get("fixtures", {}).items()},
            n_range=[int(n) for n in n_range],
            eps=[float(e) for e in data.get("eps", [0.1])],
            alpha=[float(a) for a in data.get("alpha", [1.5, 2.0])],
            seed=int(data.get("seed", 0)),
            out_dir=str(data.get("out_dir", "results")),
            extra=dict(data.get("extra", {})),
            base_dir=base_dir or Path.cwd(),
        )

    @classmethod
    def from_yaml(cls, filepath: str) -> "ExperimentConfig":
        """Load a config file. JSON files parse through the YAML loader unchanged."""
        path = Path(filepath)
        if not path.exists():
            raise ConfigError(f"Config file '{filepath}' not found")
        with open(path, "r") as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"Config file '{filepath}' does not hold a mapping")
        config = cls.from_dict(data, base_dir=path.resolve().parent)
        config.source = str(path)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "fixtures": dict(self.fixtures),
            "n_range": list(self.n_range),
            "eps": list(self.eps),
            "alpha": list(self.alpha),
            "seed": self.seed,
            "out_dir": self.out_dir,
            "extra": dict(self.extra),
        }

    def to_yaml(self, filepath: str) -> None:
        with open(filepath, "w") as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)

    def __repr__(self) -> str:
        return f"ExperimentConfig(experiment='{self.experiment}', n_range={self.n_range})"
