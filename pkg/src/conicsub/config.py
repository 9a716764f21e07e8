"""Run configuration shared by the refinement engine and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RefinementConfig:
    """Shape parameters, tolerances and mode flags for one subdivision job.

    ``lambda_`` blends left/right tangents at junction points, ``rho`` pulls
    the first/last inserted point of a subpolygon toward the tangent apex;
    both sit strictly inside (0, 1) and may be overridden per junction by its
    level-0 vertex index.  ``edge_threshold`` and ``collinearity_tol`` are
    relative to the bounding-box diagonal of the level-0 input.
    """

    topology: str = "open"  # "open" | "closed"
    levels: int = 5
    mode: str = "basic"  # "basic" | "adaptive"
    edge_threshold: float = 0.01
    lambda_: float = 0.5
    rho: float = 0.5
    collinearity_tol: float = 1e-9
    strictness: str = "strict"  # "strict" | "lenient"
    lambda_by_junction: dict = field(default_factory=dict)
    rho_by_junction: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.topology not in ("open", "closed"):
            raise ValueError(f"topology must be open|closed, got {self.topology!r}")
        if self.mode not in ("basic", "adaptive"):
            raise ValueError(f"mode must be basic|adaptive, got {self.mode!r}")
        if self.strictness not in ("strict", "lenient"):
            raise ValueError(f"strictness must be strict|lenient, got {self.strictness!r}")
        if self.levels < 0:
            raise ValueError("levels must be >= 0")
        if self.mode == "adaptive" and not self.edge_threshold > 0:
            raise ValueError("edge_threshold must be positive in adaptive mode")
        for name, value in (("lambda_", self.lambda_), ("rho", self.rho)):
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie strictly in (0, 1)")

    @property
    def closed(self) -> bool:
        return self.topology == "closed"

    @property
    def strict(self) -> bool:
        return self.strictness == "strict"

    def junction_lambda(self, vertex0: int) -> float:
        return self.lambda_by_junction.get(vertex0, self.lambda_)

    def junction_rho(self, vertex0: int) -> float:
        return self.rho_by_junction.get(vertex0, self.rho)
