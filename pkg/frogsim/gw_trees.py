"""Galton-Watson trees: offspring-law algebra and lazily sampled trees.

Trees are addressed by vertex paths: the root is (), and the i-th child of v is v + (i,).
A lazily sampled tree draws the children of v from a Philox stream keyed by (seed, v), so
asking for vertices in any order gives the same tree as a depth-first expansion.

Two samplers produce the same law when 0 < p_1 < 1:

- `sample_tree` draws every vertex from the offspring law directly;
- `sample_tree_decomposed` draws a tree without offspring-1 vertices from p̂_k = p_k/(1-p_1),
  marks each of its vertices with probability p_1 and replaces a marked vertex by a run of
  1 + geo(p_1) offspring-1 vertices above its original children.

Derived trees (stretch truncation, bush erasure, hand-built fixtures) are finite
`ExplicitTree`s that keep the ids and the seed of the tree they came from, so a surviving
vertex keeps its sleeping-frog count.
"""

import logging
import math
import threading
from collections import deque
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P

from frogsim.config import settings
from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import VertexLabel
from frogsim.errors import BushCapExceeded, DomainError
from frogsim.rng import Stream, Vertex, generator, vertex_uniform

logger = logging.getLogger(__name__)

ROOT: Vertex = ()


# --- Generating-function algebra ------------------------------------------------


def pgf_eval(dist: OffspringDistribution, r: float) -> float:
    """f(r) = sum_k p_k r^k."""
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"pgf argument must lie in [0, 1], got {r}")
    return float(P.polyval(r, dist.probs))


def pgf_derivative(dist: OffspringDistribution, r: float) -> float:
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"pgf argument must lie in [0, 1], got {r}")
    return float(P.polyval(r, P.polyder(dist.probs)))


def extinction_prob(dist: OffspringDistribution, tol: float | None = None) -> float:
    """Smallest fixpoint q of f in [0, 1].

    f is convex, so f(r) - r has at most one zero below 1. Bisection brackets it between 0,
    where f(0) - 0 = p_0 >= 0, and a point just below 1 where f(r) < r.
    """
    tol = settings.extinction_tol if tol is None else tol
    if dist.p(0) == 0.0:
        return 0.0
    if dist.mean <= 1.0:
        return 1.0

    gap = 1e-3
    while pgf_eval(dist, 1.0 - gap) - (1.0 - gap) >= 0.0:
        gap /= 2.0
        if gap < 1e-15:
            return 1.0
    lo, hi = 0.0, 1.0 - gap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pgf_eval(dist, mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def backbone_pgf(dist: OffspringDistribution) -> Callable[[float], float]:
    """f*(s) = (f(q + (1-q)s) - q) / (1-q), the offspring pgf of the infinite backbone."""
    q = extinction_prob(dist)
    if q >= 1.0:
        raise DomainError("no infinite backbone: the tree dies out almost surely (q = 1)")

    def f_star(s: float) -> float:
        if not (0.0 <= s <= 1.0):
            raise DomainError(f"pgf argument must lie in [0, 1], got {s}")
        return (pgf_eval(dist, q + (1.0 - q) * s) - q) / (1.0 - q)

    return f_star


def backbone_distribution(dist: OffspringDistribution) -> OffspringDistribution:
    """Coefficients of f*: the law of the number of type-g children of a type-g vertex."""
    q = extinction_prob(dist)
    if q >= 1.0:
        raise DomainError("no infinite backbone: the tree dies out almost surely (q = 1)")
    coefficients = [0.0] * len(dist.probs)
    for j in range(1, len(dist.probs)):
        coefficients[j] = sum(
            p * math.comb(k, j) * q ** (k - j) * (1.0 - q) ** j
            for k, p in enumerate(dist.probs)
            if k >= j
        ) / (1.0 - q)
    total = sum(coefficients)
    return OffspringDistribution(probs=tuple(c / total for c in coefficients))


def bush_pgf(dist: OffspringDistribution) -> Callable[[float], float]:
    """f~(s) = f(qs) / q, the offspring pgf of a finite bush."""
    q = extinction_prob(dist)
    if q == 0.0:
        raise DomainError("no bushes: the tree has no leaves (q = 0)")

    def f_tilde(s: float) -> float:
        if not (0.0 <= s <= 1.0):
            raise DomainError(f"pgf argument must lie in [0, 1], got {s}")
        return pgf_eval(dist, q * s) / q

    return f_tilde


def bush_distribution(dist: OffspringDistribution) -> OffspringDistribution:
    """Coefficients of f~: p_k q^(k-1)."""
    q = extinction_prob(dist)
    if q == 0.0:
        raise DomainError("no bushes: the tree has no leaves (q = 0)")
    coefficients = [p * q ** (k - 1) for k, p in enumerate(dist.probs)]
    total = sum(coefficients)
    return OffspringDistribution(probs=tuple(c / total for c in coefficients))


def expected_bush_size(dist: OffspringDistribution) -> float:
    """E|T^sub| = 1 / (1 - f'(q)), total progeny of a bush including its root."""
    q = extinction_prob(dist)
    if q == 0.0:
        raise DomainError("no bushes: the tree has no leaves (q = 0)")
    slope = pgf_derivative(dist, q)
    if slope >= 1.0:
        raise DomainError(f"bush process is not subcritical: f'(q) = {slope}")
    return 1.0 / (1.0 - slope)


def sample_bush_sizes(
    dist: OffspringDistribution, seed: int, count: int, cap: int | None = None
) -> np.ndarray:
    """Total progeny of `count` independent bushes, for checking expected_bush_size."""
    cap = settings.bush_cap if cap is None else cap
    law = bush_distribution(dist)
    sizes = np.empty(count, dtype=np.int64)
    for i in range(count):
        rng = generator(seed, Stream.OFFSPRING, (i,))
        generation, total = 1, 1
        while generation:
            generation = law.sample_total(rng, generation)
            total += generation
            if total > cap:
                raise BushCapExceeded((i,), cap)
        sizes[i] = total
    return sizes


# --- Trees -----------------------------------------------------------------------


class RootedTree:
    """A rooted tree addressed by vertex paths, possibly infinite and lazily sampled."""

    def __init__(self, seed: int, depth_horizon: int | None):
        self.seed = seed
        self.depth_horizon = depth_horizon
        self.labels: dict[Vertex, VertexLabel] = {}
        self._uniforms: dict[Vertex, float] = {}

    root: Vertex = ROOT

    def children(self, v: Vertex) -> tuple[Vertex, ...]:
        raise NotImplementedError

    def parent(self, v: Vertex) -> Vertex | None:
        return None if v == ROOT else v[:-1]

    def depth(self, v: Vertex) -> int:
        return len(v)

    def is_known(self, v: Vertex) -> bool:
        """Whether children(v) is the true child list (False on a truncation frontier)."""
        return True

    def degree(self, v: Vertex) -> int:
        return len(self.children(v)) + (0 if v == self.root else 1)

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        up = self.parent(v)
        return self.children(v) if up is None else (up,) + self.children(v)

    def frog_count(self, v: Vertex, init: FrogInit) -> int:
        """Sleeping frogs on v under `init`, drawn once from the vertex's own stream.

        The count is the inverse-CDF image of one stored uniform, so every model run on this
        tree (or on a tree derived from it) sees the same realization.
        """
        u = self._uniforms.get(v)
        if u is None:
            u = self._uniforms.setdefault(v, vertex_uniform(self.seed, Stream.FROGS, v))
        return init.quantile(u)

    def walk(self, max_depth: int | None = None) -> Iterator[Vertex]:
        """Breadth-first vertices down to max_depth (the depth horizon by default)."""
        limit = self.depth_horizon if max_depth is None else max_depth
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            yield v
            if (limit is None or self.depth(v) < limit) and self.is_known(v):
                queue.extend(self.children(v))

    def edges(self, max_depth: int | None = None) -> set[tuple[Vertex, Vertex]]:
        return {(self.parent(v), v) for v in self.walk(max_depth) if v != self.root}


class GaltonWatsonTree(RootedTree):
    def __init__(self, dist: OffspringDistribution, seed: int, depth_horizon: int):
        super().__init__(seed, depth_horizon)
        self.dist = dist
        self._children: dict[Vertex, tuple[Vertex, ...]] = {}

    def children(self, v: Vertex) -> tuple[Vertex, ...]:
        kids = self._children.get(v)
        if kids is None:
            k = self.dist.quantile(vertex_uniform(self.seed, Stream.OFFSPRING, v))
            # Concurrent fills compute the same tuple; setdefault keeps the first.
            kids = self._children.setdefault(v, tuple(v + (i,) for i in range(k)))
        return kids


@dataclass(frozen=True)
class BackgroundDraw:
    """Randomness owned by one vertex of the background (offspring-1-free) tree."""
    offspring: int
    marked: bool
    extra_ones: int

    @property
    def run_length(self) -> int:
        """Offspring-1 vertices inserted for this background vertex."""
        return 1 + self.extra_ones if self.marked else 0


class DecomposedTree(RootedTree):
    """The three-stage construction: background tree, stretch marks, stretch lengths."""

    def __init__(self, dist: OffspringDistribution, seed: int, depth_horizon: int):
        p1 = dist.p(1)
        if not (0.0 < p1 < 1.0):
            raise DomainError(f"decomposition needs 0 < p_1 < 1, got p_1 = {p1}")
        super().__init__(seed, depth_horizon)
        self.dist = dist
        self.p1 = p1
        self.background = OffspringDistribution(
            probs=tuple(0.0 if k == 1 else p / (1.0 - p1) for k, p in enumerate(dist.probs))
        )
        self._children: dict[Vertex, tuple[Vertex, ...]] = {}
        self._background_vertices: set[Vertex] = {ROOT}
        self._lock = threading.RLock()

    def background_draw(self, v: Vertex) -> BackgroundDraw:
        rng = generator(self.seed, Stream.DECOMPOSITION, v)
        offspring = self.background.quantile(rng.random())
        marked = bool(rng.random() < self.p1)
        extra = int(rng.geometric(1.0 - self.p1)) - 1
        return BackgroundDraw(offspring, marked, extra)

    def _expand(self, v: Vertex) -> None:
        draw = self.background_draw(v)
        current = v
        for _ in range(draw.run_length):
            nxt = current + (0,)
            self._children[current] = (nxt,)
            current = nxt
        kids = tuple(current + (i,) for i in range(draw.offspring))
        self._children[current] = kids
        self._background_vertices.update(kids)

    def children(self, v: Vertex) -> tuple[Vertex, ...]:
        kids = self._children.get(v)
        if kids is not None:
            return kids
        with self._lock:
            if v in self._children:
                return self._children[v]
            if v in self._background_vertices:
                self._expand(v)
                return self._children[v]
            up = self.parent(v)
            if up is None or v not in self.children(up):
                raise DomainError(f"{v} is not a vertex of this tree")
            return self.children(v)


class ExplicitTree(RootedTree):
    """A finite tree given by child lists, with explicit parents and an optional frontier."""

    def __init__(
        self,
        children: dict[Vertex, tuple[Vertex, ...]],
        *,
        seed: int = 0,
        depth_horizon: int | None = None,
        root: Vertex = ROOT,
        frontier: Iterable[Vertex] = (),
    ):
        super().__init__(seed, depth_horizon)
        self.root = root
        self._children = {v: tuple(kids) for v, kids in children.items()}
        self._parent: dict[Vertex, Vertex] = {}
        for v, kids in self._children.items():
            for c in kids:
                if c in self._parent:
                    raise DomainError(f"{c} has two parents: {self._parent[c]} and {v}")
                self._parent[c] = v
        if root in self._parent:
            raise DomainError("the root cannot have a parent")
        self.frontier = frozenset(frontier)
        self._depth: dict[Vertex, int] = {root: 0}
        for v in self.walk(max_depth=None):
            for c in self.children(v):
                self._depth[c] = self._depth[v] + 1
        unreachable = set(self._parent) - set(self._depth)
        if unreachable:
            raise DomainError(f"vertices not connected to the root: {sorted(unreachable)[:5]}")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Vertex, Vertex]], **kwargs) -> "ExplicitTree":
        children: dict[Vertex, list[Vertex]] = {}
        for parent, child in edges:
            children.setdefault(parent, []).append(child)
        return cls({v: tuple(kids) for v, kids in children.items()}, **kwargs)

    def children(self, v: Vertex) -> tuple[Vertex, ...]:
        return self._children.get(v, ())

    def parent(self, v: Vertex) -> Vertex | None:
        return self._parent.get(v)

    def depth(self, v: Vertex) -> int:
        return self._depth[v]

    def is_known(self, v: Vertex) -> bool:
        return v not in self.frontier

    @cached_property
    def vertices(self) -> tuple[Vertex, ...]:
        return tuple(self.walk(max_depth=None))


def sample_tree(dist: OffspringDistribution, seed: int, depth_horizon: int) -> GaltonWatsonTree:
    if depth_horizon < 1:
        raise DomainError(f"depth horizon must be >= 1, got {depth_horizon}")
    return GaltonWatsonTree(dist, seed, depth_horizon)


def sample_tree_decomposed(
    dist: OffspringDistribution, seed: int, depth_horizon: int
) -> DecomposedTree:
    if depth_horizon < 1:
        raise DomainError(f"depth horizon must be >= 1, got {depth_horizon}")
    return DecomposedTree(dist, seed, depth_horizon)


def window_signature(tree: RootedTree) -> tuple[int, int]:
    """(root degree, number of depth-2 vertices): the finite-window statistic two samplers
    of the same law must agree on."""
    kids = tree.children(tree.root)
    return len(kids), sum(len(tree.children(c)) for c in kids)


# --- Stretches -------------------------------------------------------------------


@dataclass(frozen=True)
class Stretch:
    start: Vertex
    end: Vertex
    vertices: tuple[Vertex, ...]

    @property
    def length(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class StretchMap:
    stretches: tuple[Stretch, ...]
    labels: dict[Vertex, VertexLabel] = field(compare=False)
    horizon: int

    @cached_property
    def by_start(self) -> dict[Vertex, Stretch]:
        return {s.start: s for s in self.stretches}

    @cached_property
    def by_end(self) -> dict[Vertex, Stretch]:
        return {s.end: s for s in self.stretches}

    def lengths(self) -> list[int]:
        return sorted(s.length for s in self.stretches)


def label_stretches(tree: RootedTree, horizon: int) -> StretchMap:
    """Label every vertex down to `horizon` with bs/es/s/n and list the complete stretches.

    A stretch vertex is a non-root vertex with exactly one child; a stretch is a maximal
    parent-child run of them. Children are only read for vertices above the horizon, so a
    vertex whose label depends on a deeper generation stays unlabeled.
    """

    def known(v: Vertex) -> bool:
        return tree.depth(v) < horizon and tree.is_known(v)

    def in_stretch(v: Vertex) -> bool:
        return v != tree.root and len(tree.children(v)) == 1

    labels: dict[Vertex, VertexLabel] = {}
    for v in tree.walk(horizon):
        if not known(v):
            labels[v] = VertexLabel.UNLABELED
        elif not in_stretch(v):
            labels[v] = VertexLabel.NODE
        else:
            (child,) = tree.children(v)
            if not known(child):
                labels[v] = VertexLabel.UNLABELED
                continue
            starts = not in_stretch(tree.parent(v))
            ends = not in_stretch(child)
            if starts:
                labels[v] = VertexLabel.BEGIN_STRETCH
            elif ends:
                labels[v] = VertexLabel.END_STRETCH
            else:
                labels[v] = VertexLabel.STRETCH

    stretches = []
    for v, label in labels.items():
        if label != VertexLabel.BEGIN_STRETCH:
            continue
        run = [v]
        complete = True
        while True:
            last = run[-1]
            (child,) = tree.children(last)
            if not in_stretch(child):
                break
            if labels.get(child) in (None, VertexLabel.UNLABELED):
                complete = False
                break
            run.append(child)
        if complete:
            stretches.append(Stretch(start=v, end=run[-1], vertices=tuple(run)))

    tree.labels.update(labels)
    return StretchMap(stretches=tuple(stretches), labels=labels, horizon=horizon)


def truncate_stretches(tree: RootedTree, stretches: StretchMap, n: int) -> ExplicitTree:
    """T_N: every complete stretch longer than n keeps its first n vertices."""
    if n < 1:
        raise DomainError(f"truncation length must be >= 1, got {n}")
    horizon = stretches.horizon
    children: dict[Vertex, tuple[Vertex, ...]] = {}
    frontier: list[Vertex] = []
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        if tree.depth(v) >= horizon or not tree.is_known(v):
            frontier.append(v)
            continue
        stretch = stretches.by_start.get(v)
        if stretch is not None and stretch.length > n:
            kept = stretch.vertices[:n]
            for a, b in zip(kept, kept[1:]):
                children[a] = (b,)
            (exit_child,) = tree.children(stretch.end)
            children[kept[-1]] = (exit_child,)
            queue.append(exit_child)
            continue
        kids = tree.children(v)
        children[v] = kids
        queue.extend(kids)
    return ExplicitTree(
        children, seed=tree.seed, depth_horizon=tree.depth_horizon, root=tree.root,
        frontier=frontier,
    )


# --- Bushes ----------------------------------------------------------------------


def erase_bushes(
    tree: RootedTree,
    horizon: int,
    init: FrogInit | None = None,
    bush_cap: int | None = None,
) -> tuple[ExplicitTree, dict[Vertex, int]]:
    """T^: the backbone, with every erased bush's frogs moved onto the vertex it hangs from.

    A vertex counts as type g when it has a descendant at depth `horizon`. Anything else
    hangs in a bush that ends above the horizon, so it is finite and fully explored.
    """
    init = FrogInit.point(1) if init is None else init
    bush_cap = settings.bush_cap if bush_cap is None else bush_cap

    # Post-order over the explored region: reaches[v] iff v has a descendant at the horizon.
    reaches: dict[Vertex, bool] = {}
    stack: list[tuple[Vertex, bool]] = [(tree.root, False)]
    while stack:
        v, expanded = stack.pop()
        if tree.depth(v) >= horizon:
            reaches[v] = True
            continue
        if not tree.is_known(v):
            raise DomainError(f"{v} lies on a truncation frontier above the horizon")
        kids = tree.children(v)
        if expanded:
            reaches[v] = any(reaches[c] for c in kids)
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in kids)

    if not reaches[tree.root]:
        raise DomainError("the tree dies out above the horizon; resample or lower the horizon")

    children: dict[Vertex, tuple[Vertex, ...]] = {}
    masses: dict[Vertex, int] = {}
    frontier: list[Vertex] = []
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        tree.labels[v] = VertexLabel.BACKBONE
        mass = tree.frog_count(v, init)
        if tree.depth(v) >= horizon:
            frontier.append(v)
            masses[v] = mass
            continue
        kept = []
        for c in tree.children(v):
            if reaches[c]:
                kept.append(c)
            else:
                mass += _bush_mass(tree, c, init, bush_cap)
        children[v] = tuple(kept)
        masses[v] = mass
        queue.extend(kept)

    erased = ExplicitTree(
        children, seed=tree.seed, depth_horizon=tree.depth_horizon, root=tree.root,
        frontier=frontier,
    )
    erased.labels.update(dict.fromkeys(masses, VertexLabel.BACKBONE))
    logger.debug("Erased bushes: %d backbone vertices kept", len(masses))
    return erased, masses


def _bush_mass(tree: RootedTree, bush_root: Vertex, init: FrogInit, cap: int) -> int:
    tree.labels[bush_root] = VertexLabel.BUSH_ROOT
    total, size = 0, 0
    stack = [bush_root]
    while stack:
        w = stack.pop()
        size += 1
        if size > cap:
            raise BushCapExceeded(bush_root, cap)
        if w != bush_root:
            tree.labels[w] = VertexLabel.BUSH
        total += tree.frog_count(w, init)
        stack.extend(tree.children(w))
    return total


def sample_surviving_tree(
    dist: OffspringDistribution, seed: int, depth_horizon: int, retries: int = 100
) -> GaltonWatsonTree:
    """First tree among seeds seed, seed+1, ... that reaches the depth horizon."""
    for attempt in range(retries):
        tree = sample_tree(dist, seed + attempt, depth_horizon)
        frontier = [tree.root]
        for _ in range(depth_horizon):
            frontier = [c for v in frontier for c in tree.children(v)]
            if not frontier:
                break
        if frontier:
            return tree
    raise DomainError(f"no surviving tree in {retries} seeds starting at {seed}")
