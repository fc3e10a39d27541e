"""Vocabularies shared by the tree, simulator and search modules.

String enums so they land in CSV files and JSON payloads as their plain value.
"""

import sys

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum (Python 3.11+)."""

        def __str__(self) -> str:
            return str.__str__(self)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self), format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()


class VertexLabel(StrEnum):
    """Stretch labels of a vertex, plus the backbone/bush types of the bush decomposition."""
    BEGIN_STRETCH = "bs"
    END_STRETCH = "es"
    STRETCH = "s"
    NODE = "n"
    BACKBONE = "g"
    BUSH = "b"
    BUSH_ROOT = "b_r"
    UNLABELED = "unlabeled"


class Termination(StrEnum):
    """Why a simulation run stopped."""
    STEP_CAP = "step_cap"
    POPULATION_EXTINCT = "population_extinct"
    PARTICLE_CAP = "particle_cap"


class SimulationMode(StrEnum):
    FM = "fm"
    FM_PRIME = "fm_prime"
    BMC = "bmc"
    COUPLED = "coupled"


class Side(StrEnum):
    """End of an absorbing ruin chain {0, ..., N}."""
    NEAR = "near"
    FAR = "far"


class AnalyticsTable(StrEnum):
    FIRST_VISIT = "first_visit"
    RHO_HOMOGENEOUS = "rho_homogeneous"
    RHO_SUBDIVISION = "rho_subdivision"
    FAPPROX = "fapprox"
    RUIN_SPECTRAL = "ruin_spectral"


# Stretch labels a vertex can carry once it is fully classified.
STRETCH_LABELS: frozenset[str] = frozenset({
    VertexLabel.BEGIN_STRETCH,
    VertexLabel.END_STRETCH,
    VertexLabel.STRETCH,
    VertexLabel.NODE,
})


class Command(StrEnum):
    SAMPLE_TREE = "sample-tree"
    SIMULATE = "simulate"
    ANALYTICS = "analytics"
    SWEEP_CD = "sweep-cd"
