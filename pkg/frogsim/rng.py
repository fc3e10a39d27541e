"""Counter-based random streams.

Every draw in the package comes from a numpy Philox generator keyed by a seed, a stream tag
and, for tree randomness, the path of the vertex. Philox is counter-based, so a key fully
determines the stream and no draw depends on which other streams were consumed first. That
is what makes a lazily explored tree identical under any traversal order, and what lets the
frog model, FM' and the coupled BMC see the same sleeping-frog realization under one seed.
"""

from enum import IntEnum

import numpy as np

GENERATOR_NAME = "numpy.random.Philox"

Vertex = tuple[int, ...]


class Stream(IntEnum):
    OFFSPRING = 0
    FROGS = 1
    DECOMPOSITION = 2
    DYNAMICS = 3
    MARKS = 4


def generator(seed: int, stream: Stream, key: Vertex = ()) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=[int(seed), int(stream)], spawn_key=key)
    return np.random.Generator(np.random.Philox(sequence))


def vertex_uniform(seed: int, stream: Stream, vertex: Vertex) -> float:
    """One uniform in [0, 1) owned by (seed, stream, vertex)."""
    return float(generator(seed, stream, vertex).random())


def run_generator(seed: int) -> np.random.Generator:
    """Stream for the dynamics of one simulation run."""
    return generator(seed, Stream.DYNAMICS)
