"""Hand-built trees shared by the test modules."""

from frogsim.gw_trees import ExplicitTree
from frogsim.rng import Vertex


def path_below(start: Vertex, length: int) -> list[Vertex]:
    """start, start.0, start.0.0, ... : `length` vertices."""
    return [start + (0,) * i for i in range(length)]


def tree_with_stretches(lengths: list[int]) -> ExplicitTree:
    """Root with one branch per length: a stretch of that many vertices, then a vertex with two
    leaf children. One extra leaf at the root keeps the root branching even for one length."""
    children: dict[Vertex, tuple[Vertex, ...]] = {(): tuple((i,) for i in range(len(lengths) + 1))}
    for i, length in enumerate(lengths):
        run = path_below((i,), length)
        for a, b in zip(run, run[1:]):
            children[a] = (b,)
        fork = run[-1] + (0,)
        children[run[-1]] = (fork,)
        children[fork] = (fork + (0,), fork + (1,))
    return ExplicitTree(children)


def full_binary(root: Vertex, generations: int) -> dict[Vertex, tuple[Vertex, ...]]:
    """Child lists of a full binary tree with `generations` levels below and including root."""
    children: dict[Vertex, tuple[Vertex, ...]] = {}
    level = [root]
    for _ in range(generations - 1):
        nxt = []
        for v in level:
            children[v] = (v + (0,), v + (1,))
            nxt.extend(children[v])
        level = nxt
    return children
