"""Finite probability vectors: offspring laws of Galton-Watson trees and sleeping-frog laws.

Both are vectors (p_0, ..., p_max) indexed by a count. They are pydantic models so that the
JSON form {"probs": [p0, p1, ...]} used by config files and the HTTP surface parses straight
into a validated object.
"""

import json
from functools import cached_property
from pathlib import Path

import numpy as np
from pydantic import BaseModel, field_validator

from frogsim.errors import DomainError

SUM_TOL = 1e-12


class FiniteDistribution(BaseModel):
    probs: tuple[float, ...]

    model_config = {"frozen": True}

    @field_validator("probs")
    @classmethod
    def _check_probs(cls, probs: tuple[float, ...]) -> tuple[float, ...]:
        if not probs:
            raise ValueError("probability vector is empty")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1]: {probs}")
        if abs(sum(probs) - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)!r}, not 1")
        # Trailing zeros carry no information and would misreport the maximum.
        last = max(i for i, p in enumerate(probs) if p > 0)
        return tuple(float(p) for p in probs[: last + 1])

    @classmethod
    def point(cls, k: int):
        """Point mass at k."""
        if k < 0:
            raise DomainError(f"count must be nonnegative, got {k}")
        return cls(probs=(0.0,) * k + (1.0,))

    @classmethod
    def from_mapping(cls, mapping: dict[int, float]):
        if not mapping or min(mapping) < 0:
            raise DomainError(f"need nonnegative counts, got {sorted(mapping)}")
        probs = [0.0] * (max(mapping) + 1)
        for k, p in mapping.items():
            probs[k] = p
        return cls(probs=tuple(probs))

    @classmethod
    def from_text(cls, text: str):
        """Parse JSON ({"probs": [...]}) or key=value lines.

        key=value accepts either a single `probs=0.25,0,0.75` line or one `p<k>=<value>` line
        per count; `#` starts a comment.
        """
        stripped = text.strip()
        if stripped.startswith("{"):
            return cls.model_validate(json.loads(stripped))
        mapping: dict[int, float] = {}
        for raw in stripped.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "probs":
                return cls(probs=tuple(float(v) for v in value.split(",")))
            if not (key.startswith("p") and key[1:].isdigit()):
                raise DomainError(f"unknown key {key!r}; use probs=... or p<k>=...")
            mapping[int(key[1:])] = float(value)
        return cls.from_mapping(mapping)

    @classmethod
    def from_file(cls, path: str | Path):
        return cls.from_text(Path(path).read_text())

    @property
    def max_count(self) -> int:
        return len(self.probs) - 1

    @cached_property
    def mean(self) -> float:
        return float(sum(k * p for k, p in enumerate(self.probs)))

    @cached_property
    def variance(self) -> float:
        second = sum(k * k * p for k, p in enumerate(self.probs))
        return float(second - self.mean**2)

    @cached_property
    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return cdf

    @property
    def is_degenerate(self) -> bool:
        return max(self.probs) == 1.0

    def quantile(self, u: float) -> int:
        """Inverse CDF: the count drawn by a uniform u in [0, 1)."""
        return int(np.searchsorted(self.cdf, u, side="right"))

    def sample_total(self, rng: np.random.Generator, n: int) -> int:
        """Sum of n i.i.d. draws. Draws nothing from rng when the law is a point mass."""
        if n <= 0:
            return 0
        if self.is_degenerate:
            return n * self.max_count
        counts = rng.multinomial(n, self.probs)
        return int(counts @ np.arange(len(self.probs)))


class OffspringDistribution(FiniteDistribution):
    """Offspring law (p_0, ..., p_dmax) of a Galton-Watson tree."""

    @property
    def d_max(self) -> int:
        return self.max_count

    @property
    def d_min(self) -> int | None:
        """Smallest branching offspring count >= 2 with positive mass, if any."""
        return next((k for k, p in enumerate(self.probs) if k >= 2 and p > 0), None)

    def p(self, k: int) -> float:
        return self.probs[k] if 0 <= k < len(self.probs) else 0.0


class FrogInit(FiniteDistribution):
    """Law of the number of sleeping frogs on each vertex."""

    @property
    def eta_bar(self) -> float:
        return self.mean

    def as_offspring(self) -> OffspringDistribution:
        """Law of eta + 1: the offspring law of the BMC that dominates the frog model."""
        return OffspringDistribution(probs=(0.0,) + self.probs)
