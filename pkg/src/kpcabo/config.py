"""Run configuration and per-run records shared by the drivers and the harness."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

ALGORITHMS = ("bo", "pca-bo", "kpca-bo")

ROW_FIELDS = (
    "eval_count",
    "y",
    "best_so_far",
    "target_gap",
    "fit_seconds",
    "acq_seconds",
    "r",
    "gamma",
    "ei",
    "feasible",
    "residual",
    "clipped",
    "retuned",
    "radius",
    "explained",
)
TIMING_FIELDS = ("fit_seconds", "acq_seconds")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    function_id: str
    dim: int
    instance_seed: int = 0
    run_seed: int = 0
    budget: int = 100
    doe_size: Optional[int] = None
    eta: float = 0.9
    restarts: int = 10
    output_dir: str = "runs"

    def __post_init__(self):
        # the name is checked where runs are executed, so external baselines
        # (ingested, never run) can carry their own label
        if not isinstance(self.algorithm, str) or not self.algorithm:
            raise ValueError("algorithm must be a non-empty name")
        if self.doe_size is None:
            object.__setattr__(self, "doe_size", 3 * int(self.dim))
        if self.doe_size < 0:
            raise ValueError("doe_size must be >= 0")
        if not self.budget > self.doe_size:
            raise ValueError(f"budget ({self.budget}) must exceed the DoE size ({self.doe_size})")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @property
    def is_native(self) -> bool:
        return self.algorithm in ALGORITHMS

    def key(self) -> dict:
        """Fields that determine the trace (everything except where it is written)."""
        d = asdict(self)
        d.pop("output_dir")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.key(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class RunRecord:
    config: RunConfig
    iterations: list = field(default_factory=list)
    final_best: float = float("nan")
    total_seconds: float = 0.0
    status: str = "completed"
    message: str = ""
    # evaluated points, kept in memory only
    X: Optional[object] = None

    def column(self, name: str) -> list:
        return [row[name] for row in self.iterations]
