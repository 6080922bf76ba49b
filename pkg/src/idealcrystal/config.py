"""Run configuration for the recovery pipeline and the CLI.

Fields left as None are resolved against the input window at run time:
core_margin defaults to R/10, r_min to half the minimum separation, and
r_max (when unset) enables the escalation ladder that widens the candidate
annulus until a basis is found or R/2 is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

STRATEGIES = ("greedy-det", "paper-cone")
OUTPUT_MODES = ("json", "text")


@dataclass
class RunConfig:
    strategy: str = "greedy-det"
    cone_scale: float = 1.0
    r_min: float | None = None
    r_max: float | None = None
    core_margin: float | None = None
    tol_exact: float = 1e-8
    max_denominator: int = 64
    min_points: int = 50
    seed: int = 0
    output: str = "json"

    def validate(self) -> "RunConfig":
        if self.strategy not in STRATEGIES:
            raise ConfigError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )
        if self.output not in OUTPUT_MODES:
            raise ConfigError(
                f"output must be one of {OUTPUT_MODES}, got {self.output!r}"
            )
        if not self.cone_scale > 0:
            raise ConfigError("cone_scale must be positive")
        if not self.tol_exact > 0:
            raise ConfigError("tol_exact must be positive")
        if self.r_min is not None and not self.r_min > 0:
            raise ConfigError("r_min must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise ConfigError("r_max must be positive")
        if self.r_min is not None and self.r_max is not None:
            if not self.r_min < self.r_max:
                raise ConfigError("need r_min < r_max")
        if self.core_margin is not None and self.core_margin < 0:
            raise ConfigError("core_margin must be non-negative")
        if self.max_denominator < 1:
            raise ConfigError("max_denominator must be at least 1")
        if self.min_points < 2:
            raise ConfigError("min_points must be at least 2")
        return self

    def echo(self) -> dict:
        """Plain dict of the configured values, for the report."""
        return {f.name: getattr(self, f.name) for f in fields(self)}
