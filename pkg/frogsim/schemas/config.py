from pathlib import Path

from pydantic import BaseModel, Field, NonNegativeInt, PositiveInt, field_validator, model_validator

from frogsim.config import settings
from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import AnalyticsTable, Command, SimulationMode


class ExperimentConfig(BaseModel):
    """Everything one CLI run depends on.

    The JSON form is what `--config` reads and what every output header echoes, so a header
    alone is enough to repeat a run.
    """

    command: Command
    offspring: OffspringDistribution | None = None
    frog_init: FrogInit = Field(default_factory=lambda: FrogInit.point(1))
    # BMC offspring law for `simulate --mode bmc`; defaults to the law of eta + 1.
    bmc_offspring: OffspringDistribution | None = None

    # Explicit seeds win over base_seed + range(seed_count).
    seeds: list[NonNegativeInt] | None = None
    base_seed: NonNegativeInt = Field(default_factory=lambda: settings.base_seed)
    seed_count: NonNegativeInt = 1
    # When set, every replica runs on the one tree drawn with this seed.
    tree_seed: NonNegativeInt | None = None

    step_cap: PositiveInt = Field(default_factory=lambda: settings.step_cap)
    particle_cap: PositiveInt = Field(default_factory=lambda: settings.particle_cap)
    depth: PositiveInt = Field(default_factory=lambda: settings.depth_horizon)
    bush_cap: PositiveInt = Field(default_factory=lambda: settings.bush_cap)
    # sample-tree writes the backbone with erased-bush masses instead of the whole window.
    erase_bushes: bool = False
    output: str | None = None
    plot_output: str | None = None

    mode: SimulationMode = SimulationMode.FM

    table: AnalyticsTable = AnalyticsTable.FIRST_VISIT
    n_min: PositiveInt = 2
    n_max: PositiveInt = 12
    z_points: PositiveInt = 50
    z_values: list[float] | None = None
    d_values: list[int] = Field(default_factory=lambda: list(range(2, 11)))
    rho: float = 0.8
    subdivisions: list[PositiveInt] = Field(default_factory=lambda: list(range(1, 11)))

    mesh: float = Field(default_factory=lambda: settings.mesh, gt=0.0, lt=1.0)
    d_cap: PositiveInt = Field(default_factory=lambda: settings.d_cap)
    n_cap: PositiveInt = Field(default_factory=lambda: settings.n_cap)
    p0: float = Field(0.0, ge=0.0, lt=1.0)
    include_zero: bool = False
    epsilon: float = Field(default_factory=lambda: settings.epsilon, gt=0.0, lt=1.0)
    k_max: PositiveInt = Field(default_factory=lambda: settings.k_max)

    model_config = {"frozen": True}

    @field_validator("d_values")
    @classmethod
    def _check_d_values(cls, values: list[int]) -> list[int]:
        if any(d < 2 for d in values):
            raise ValueError(f"homogeneous trees need d >= 2, got {values}")
        return values

    @model_validator(mode="after")
    def _check_command(self):
        if self.command in (Command.SAMPLE_TREE, Command.SIMULATE) and self.offspring is None:
            raise ValueError(f"{self.command} needs an offspring distribution")
        if self.n_min > self.n_max:
            raise ValueError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        return self

    def seed_list(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [self.base_seed + i for i in range(self.seed_count)]

    def plot_path(self) -> Path | None:
        if self.plot_output is not None:
            return Path(self.plot_output)
        if self.output is not None:
            return Path(self.output).with_suffix(".dat")
        return None

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text())
