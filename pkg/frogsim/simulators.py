"""Monte Carlo engines: the frog model (FM), its stretch-collapsed variant (FM'), branching
Markov chains (BMC) and a shared-randomness coupling of FM below BMC.

State is a count of particles per vertex; every round visits the occupied vertices in sorted
order and moves their particles to neighbors with one multinomial draw. All dynamics draws
come from the run stream `run_generator(seed)`, and sleeping-frog counts come from the tree's
own per-vertex stream, so FM, FM' and the coupled run see the same frogs.

A round is one unit of time. Arrivals at the root after time 0 count towards nu.
"""

import logging
from collections import defaultdict
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from functools import cache

import numpy as np

from frogsim.config import settings
from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import Termination
from frogsim.errors import DomainError
from frogsim.gw_trees import RootedTree, Stretch, StretchMap, sample_surviving_tree, sample_tree
from frogsim.rng import Vertex, run_generator

logger = logging.getLogger(__name__)

OffspringLaw = OffspringDistribution | Callable[[Vertex], OffspringDistribution]


@dataclass(frozen=True)
class StretchTraffic:
    """Frogs through one collapsed stretch over a whole run."""
    entries: int = 0
    sleepers: int = 0
    exits_top: int = 0
    exits_bottom: int = 0


@dataclass(frozen=True)
class SimReport:
    seed: int
    steps: int
    nu: int
    # Awake frogs (or BMC particles) at time 0, 1, ..., steps.
    trajectory: tuple[int, ...]
    wakeups: int
    termination: Termination
    nu_checkpoints: dict[int, int] = field(default_factory=dict, compare=False)
    stretch_traffic: dict[Vertex, StretchTraffic] = field(default_factory=dict)

    @property
    def awake_max(self) -> int:
        return max(self.trajectory)


@dataclass(frozen=True)
class CoupledReport:
    fm: SimReport
    bmc: SimReport
    # The BMC leg hit the particle cap, so the pair says nothing about domination.
    incomparable: bool

    @property
    def dominated(self) -> bool:
        """nu_fm <= nu_bmc and awake <= particles at every step (vacuous if incomparable)."""
        if self.incomparable:
            return True
        return self.fm.nu <= self.bmc.nu and all(
            a <= b for a, b in zip(self.fm.trajectory, self.bmc.trajectory)
        )


@cache
def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _scatter(
    rng: np.random.Generator, tree: RootedTree, v: Vertex, k: int
) -> Iterable[tuple[Vertex, int]]:
    """One simple-random-walk step for k particles at v."""
    nbrs = tree.neighbors(v)
    counts = rng.multinomial(k, _uniform(len(nbrs)))
    return ((w, int(c)) for w, c in zip(nbrs, counts) if c)


def _require_edges(tree: RootedTree) -> None:
    # Only the root can be isolated, and then there is no walk to run.
    if not tree.neighbors(tree.root):
        raise DomainError("the tree is a single vertex; a walk needs at least one edge")


def _checkpoint_list(checkpoints: Iterable[int] | None, step_cap: int) -> set[int]:
    points = set(checkpoints or ())
    if any(c < 0 or c > step_cap for c in points):
        raise DomainError(f"checkpoints must lie in [0, {step_cap}], got {sorted(points)}")
    return points


# --- Stretch exits ----------------------------------------------------------------


@dataclass(frozen=True)
class StretchExit:
    near: int
    far: int


def resolve_stretch_exits(
    rng: np.random.Generator,
    length: int,
    entries: int,
    sleepers_by_position: Sequence[int] = (),
) -> StretchExit:
    """Exit ends of frogs released into a stretch of `length` vertices.

    Positions count from the entering end: position i (1..length) leaves through the far
    end with the ruin probability i/(length+1). Entering frogs start at position 1.
    """
    if length < 1:
        raise DomainError(f"stretch length must be >= 1, got {length}")
    if len(sleepers_by_position) > length:
        raise DomainError("more sleeper positions than stretch vertices")
    far = int(rng.binomial(entries, 1.0 / (length + 1))) if entries else 0
    sleepers = np.asarray(sleepers_by_position, dtype=np.int64)
    total_sleepers = int(sleepers.sum()) if sleepers.size else 0
    if total_sleepers:
        positions = np.arange(1, sleepers.size + 1)
        far += int(rng.binomial(sleepers, positions / (length + 1)).sum())
    return StretchExit(near=entries + total_sleepers - far, far=far)


class _StretchCollapse:
    """Routes frogs that step onto a stretch straight to one of its outer ends."""

    def __init__(self, tree: RootedTree, stretches: StretchMap, init: FrogInit):
        self.tree = tree
        self.init = init
        self.top: dict[Vertex, Stretch] = {}
        self.bottom: dict[Vertex, Stretch] = {}
        # Outer ends: the vertex above the first stretch vertex and the one below the last.
        self.ends: dict[Vertex, tuple[Vertex, Vertex]] = {}
        for s in stretches.stretches:
            (below,) = tree.children(s.end)
            self.top[s.start] = s
            self.bottom[s.end] = s
            self.ends[s.start] = (tree.parent(s.start), below)
        self.active: set[Vertex] = set()
        self.ledger: dict[Vertex, list[int]] = defaultdict(lambda: [0, 0, 0, 0])

    def entered(self, source: Vertex, dest: Vertex) -> tuple[Stretch, bool] | None:
        """(stretch, from_top) if moving source -> dest enters a collapsed stretch."""
        s = self.top.get(dest)
        if s is not None and self.tree.parent(dest) == source:
            return s, True
        s = self.bottom.get(dest)
        if s is not None and source != self.tree.parent(dest):
            return s, False
        return None

    def route(self, rng: np.random.Generator, s: Stretch, from_top: bool, count: int) -> tuple[tuple[Vertex, int], ...]:
        top_end, bottom_end = self.ends[s.start]
        sleepers: list[int] = []
        if s.start not in self.active:
            self.active.add(s.start)
            sleepers = [self.tree.frog_count(v, self.init) for v in s.vertices]
            if not from_top:
                sleepers.reverse()
        exits = resolve_stretch_exits(rng, s.length, count, sleepers)
        to_top, to_bottom = (exits.near, exits.far) if from_top else (exits.far, exits.near)
        record = self.ledger[s.start]
        record[0] += count
        record[1] += sum(sleepers)
        record[2] += to_top
        record[3] += to_bottom
        return (top_end, to_top), (bottom_end, to_bottom)

    def woken(self) -> int:
        return sum(r[1] for r in self.ledger.values())

    def traffic(self) -> dict[Vertex, StretchTraffic]:
        return {v: StretchTraffic(*r) for v, r in sorted(self.ledger.items())}


# --- Frog model -------------------------------------------------------------------


def _run_frogs(
    tree: RootedTree,
    init: FrogInit,
    seed: int,
    step_cap: int,
    particle_cap: int | None,
    checkpoints: Iterable[int] | None,
    collapse: _StretchCollapse | None,
) -> SimReport:
    if step_cap < 1:
        raise DomainError(f"step cap must be >= 1, got {step_cap}")
    particle_cap = settings.particle_cap if particle_cap is None else particle_cap
    points = _checkpoint_list(checkpoints, step_cap)
    _require_edges(tree)
    rng = run_generator(seed)
    root = tree.root

    # The root's own sleepers wake with the initial frog.
    root_sleepers = tree.frog_count(root, init)
    awake: dict[Vertex, int] = {root: 1 + root_sleepers}
    visited: set[Vertex] = {root}
    wakeups = root_sleepers
    nu = 0
    trajectory = [1 + root_sleepers]
    nu_at = {0: 0} if 0 in points else {}
    cost = 0
    termination = Termination.STEP_CAP
    steps = 0

    for t in range(1, step_cap + 1):
        population = trajectory[-1]
        cost += population
        if cost > particle_cap:
            termination = Termination.PARTICLE_CAP
            break
        moved: dict[Vertex, int] = defaultdict(int)
        for v in sorted(awake):
            for w, c in _scatter(rng, tree, v, awake[v]):
                hit = collapse.entered(v, w) if collapse is not None else None
                if hit is None:
                    moved[w] += c
                else:
                    for end, n in collapse.route(rng, *hit, c):
                        if n:
                            moved[end] += n
        nu += moved.get(root, 0)
        for w in sorted(moved):
            if w not in visited:
                visited.add(w)
                sleepers = tree.frog_count(w, init)
                moved[w] += sleepers
                wakeups += sleepers
        awake = dict(moved)
        steps = t
        trajectory.append(sum(awake.values()))
        if t in points:
            nu_at[t] = nu

    traffic = {}
    if collapse is not None:
        wakeups += collapse.woken()
        traffic = collapse.traffic()
    return SimReport(
        seed=seed, steps=steps, nu=nu, trajectory=tuple(trajectory), wakeups=wakeups,
        termination=termination, nu_checkpoints=nu_at, stretch_traffic=traffic,
    )


def simulate_fm(
    tree: RootedTree,
    init: FrogInit,
    seed: int,
    step_cap: int | None = None,
    *,
    particle_cap: int | None = None,
    checkpoints: Iterable[int] | None = None,
) -> SimReport:
    """Frog model with synchronous rounds, one awake frog at the root at time 0."""
    step_cap = settings.step_cap if step_cap is None else step_cap
    return _run_frogs(tree, init, seed, step_cap, particle_cap, checkpoints, None)


def simulate_fm_prime(
    tree: RootedTree,
    stretches: StretchMap,
    init: FrogInit,
    seed: int,
    step_cap: int | None = None,
    *,
    particle_cap: int | None = None,
    checkpoints: Iterable[int] | None = None,
) -> SimReport:
    """FM on the tree with every listed stretch collapsed to its exit law.

    The first frog to enter a stretch wakes all of its sleepers; entering and woken frogs are
    placed at once on the outer end vertices by the ruin exit law. Timing inside a stretch is
    not modeled.
    """
    step_cap = settings.step_cap if step_cap is None else step_cap
    collapse = _StretchCollapse(tree, stretches, init)
    return _run_frogs(tree, init, seed, step_cap, particle_cap, checkpoints, collapse)


# --- Branching Markov chains ----------------------------------------------------------


def _law_at(offspring: OffspringLaw) -> Callable[[Vertex], OffspringDistribution]:
    if isinstance(offspring, OffspringDistribution):
        return lambda v: offspring
    return offspring


def simulate_bmc(
    tree: RootedTree,
    offspring: OffspringLaw,
    seed: int,
    step_cap: int | None = None,
    particle_cap: int | None = None,
    *,
    checkpoints: Iterable[int] | None = None,
) -> SimReport:
    """Every particle splits by mu(v) at its vertex, then each offspring steps once."""
    step_cap = settings.step_cap if step_cap is None else step_cap
    particle_cap = settings.particle_cap if particle_cap is None else particle_cap
    if step_cap < 1 or particle_cap < 1:
        raise DomainError(f"caps must be >= 1, got step_cap={step_cap}, particle_cap={particle_cap}")
    points = _checkpoint_list(checkpoints, step_cap)
    law = _law_at(offspring)
    _require_edges(tree)
    rng = run_generator(seed)
    root = tree.root

    particles: dict[Vertex, int] = {root: 1}
    nu = 0
    trajectory = [1]
    nu_at = {0: 0} if 0 in points else {}
    cost = 0
    termination = Termination.STEP_CAP
    steps = 0

    for t in range(1, step_cap + 1):
        if trajectory[-1] == 0:
            termination = Termination.POPULATION_EXTINCT
            break
        cost += trajectory[-1]
        if cost > particle_cap:
            termination = Termination.PARTICLE_CAP
            break
        moved: dict[Vertex, int] = defaultdict(int)
        for v in sorted(particles):
            children = law(v).sample_total(rng, particles[v])
            if children:
                for w, c in _scatter(rng, tree, v, children):
                    moved[w] += c
        nu += moved.get(root, 0)
        particles = dict(moved)
        steps = t
        trajectory.append(sum(particles.values()))
        if t in points:
            nu_at[t] = nu

    return SimReport(
        seed=seed, steps=steps, nu=nu, trajectory=tuple(trajectory), wakeups=0,
        termination=termination, nu_checkpoints=nu_at,
    )


def simulate_coupled(
    tree: RootedTree,
    init: FrogInit,
    seed: int,
    step_cap: int | None = None,
    particle_cap: int | None = None,
) -> CoupledReport:
    """FM and the BMC with mu(v) = law of eta(v)+1 on one probability space.

    Every awake frog is paired with a BMC particle on the same vertex and both take the same
    step. When the first pair reaches v, the frog wakes eta(v) sleepers and its particle
    splits into the same eta(v)+1 offspring, one new pair per woken frog. Any other arrival
    of a paired particle splits into k ~ mu(v): one offspring stays paired with the frog and
    k-1 move on unpaired. Unpaired particles branch and move independently. Pairs arriving
    together are exchangeable, so which of them arrived first needs no extra draw.
    """
    step_cap = settings.step_cap if step_cap is None else step_cap
    particle_cap = settings.particle_cap if particle_cap is None else particle_cap
    if step_cap < 1 or particle_cap < 1:
        raise DomainError(f"caps must be >= 1, got step_cap={step_cap}, particle_cap={particle_cap}")
    mu = init.as_offspring()
    _require_edges(tree)
    rng = run_generator(seed)
    root = tree.root

    root_sleepers = tree.frog_count(root, init)
    pairs: dict[Vertex, int] = {root: 1 + root_sleepers}
    loose: dict[Vertex, int] = {}
    visited: set[Vertex] = {root}
    wakeups = root_sleepers
    nu_fm = nu_bmc = 0
    frogs_traj = [1 + root_sleepers]
    particle_traj = [1 + root_sleepers]
    cost = 0
    termination = Termination.STEP_CAP
    steps = 0

    for t in range(1, step_cap + 1):
        cost += particle_traj[-1]
        if cost > particle_cap:
            termination = Termination.PARTICLE_CAP
            break
        moved_pairs: dict[Vertex, int] = defaultdict(int)
        moved_loose: dict[Vertex, int] = defaultdict(int)
        for v in sorted(pairs.keys() | loose.keys()):
            if pairs.get(v):
                for w, c in _scatter(rng, tree, v, pairs[v]):
                    moved_pairs[w] += c
            if loose.get(v):
                for w, c in _scatter(rng, tree, v, loose[v]):
                    moved_loose[w] += c
        nu_fm += moved_pairs.get(root, 0)
        nu_bmc += moved_pairs.get(root, 0) + moved_loose.get(root, 0)

        # Branching on arrival.
        pairs, loose = {}, {}
        for w in sorted(moved_pairs.keys() | moved_loose.keys()):
            arriving = moved_pairs.get(w, 0)
            new_pairs = arriving
            new_loose = mu.sample_total(rng, moved_loose.get(w, 0))
            if arriving and w not in visited:
                visited.add(w)
                sleepers = tree.frog_count(w, init)
                wakeups += sleepers
                new_pairs += sleepers
                arriving -= 1
            new_loose += mu.sample_total(rng, arriving) - arriving
            if new_pairs:
                pairs[w] = new_pairs
            if new_loose:
                loose[w] = new_loose
        steps = t
        frogs_traj.append(sum(pairs.values()))
        particle_traj.append(frogs_traj[-1] + sum(loose.values()))

    incomparable = termination == Termination.PARTICLE_CAP
    if incomparable:
        logger.debug("Coupled run seed=%d hit the particle cap at step %d", seed, steps)
    fm = SimReport(
        seed=seed, steps=steps, nu=nu_fm, trajectory=tuple(frogs_traj), wakeups=wakeups,
        termination=termination,
    )
    bmc = SimReport(
        seed=seed, steps=steps, nu=nu_bmc, trajectory=tuple(particle_traj), wakeups=0,
        termination=termination,
    )
    return CoupledReport(fm=fm, bmc=bmc, incomparable=incomparable)


# --- Absorbing BMC on a stretch ------------------------------------------------------


@dataclass(frozen=True)
class FrozenEstimate:
    """Mean particles frozen at each end of {0..N}, over the comparable replicas."""
    mean_near: float
    mean_far: float
    stderr_near: float
    stderr_far: float
    replicas: int
    incomparable: int


def simulate_absorbing_bmc_on_stretch(
    n: int,
    start: int,
    offspring: OffspringDistribution,
    seed: int,
    replicas: int,
    particle_cap: int | None = None,
) -> FrozenEstimate:
    """BMC on {0..N} where particles reaching 0 or N freeze. `near` is 0, `far` is N."""
    if n < 2:
        raise DomainError(f"N must be >= 2, got {n}")
    if not (0 < start < n):
        raise DomainError(f"start must be interior to 0..{n}, got {start}")
    if replicas < 1:
        raise DomainError(f"need at least one replica, got {replicas}")
    particle_cap = settings.particle_cap if particle_cap is None else particle_cap
    rng = run_generator(seed)
    frozen = []
    incomparable = 0
    for _ in range(replicas):
        counts = np.zeros(n + 1, dtype=np.int64)
        counts[start] = 1
        absorbed = np.zeros(2, dtype=np.int64)
        cost = 0
        capped = False
        while counts[1:n].any():
            cost += int(counts[1:n].sum())
            if cost > particle_cap:
                capped = True
                break
            branched = np.array([offspring.sample_total(rng, int(c)) for c in counts[1:n]])
            left = rng.binomial(branched, 0.5)
            nxt = np.zeros(n + 1, dtype=np.int64)
            nxt[0:n - 1] += left
            nxt[2:n + 1] += branched - left
            absorbed += nxt[[0, n]]
            nxt[[0, n]] = 0
            counts = nxt
        if capped:
            incomparable += 1
            continue
        frozen.append(absorbed)
    if incomparable:
        logger.warning("%d of %d absorbing-BMC replicas hit the particle cap", incomparable, replicas)
    if not frozen:
        return FrozenEstimate(np.nan, np.nan, np.nan, np.nan, 0, incomparable)
    sample = np.array(frozen, dtype=float)
    means = sample.mean(axis=0)
    stderr = sample.std(axis=0, ddof=1) / np.sqrt(len(sample)) if len(sample) > 1 else np.zeros(2)
    return FrozenEstimate(
        mean_near=float(means[0]), mean_far=float(means[1]),
        stderr_near=float(stderr[0]), stderr_far=float(stderr[1]),
        replicas=len(sample), incomparable=incomparable,
    )


# --- Recurrence diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class TreeFamily:
    """A Galton-Watson law plus the depth horizon its sampled trees are explored to."""
    dist: OffspringDistribution
    depth_horizon: int = settings.depth_horizon

    def sample(self, seed: int) -> RootedTree:
        # Conditioned on survival when the law can die out.
        if self.dist.p(0) > 0:
            return sample_surviving_tree(self.dist, seed, self.depth_horizon)
        return sample_tree(self.dist, seed, self.depth_horizon)


@dataclass(frozen=True)
class RecurrenceRow:
    step_cap: int
    mean_nu: float
    stderr_nu: float
    q10: float
    q50: float
    q90: float


@dataclass(frozen=True)
class RecurrenceTable:
    rows: tuple[RecurrenceRow, ...]
    growth_flag: bool


def growth_flag(step_caps: Sequence[int], means: Sequence[float], min_slope: float = 0.5) -> bool:
    """Mean nu growing faster than linearly in log(step cap).

    Compares the slope of mean nu against log(cap) over the first and last intervals.
    """
    if len(step_caps) < 3:
        raise DomainError("need at least three step caps to judge growth")
    logs = np.log(np.asarray(step_caps, dtype=float))
    slopes = np.diff(np.asarray(means, dtype=float)) / np.diff(logs)
    return bool(slopes[-1] > slopes[0] and slopes[-1] > min_slope)


def recurrence_indicator(
    family: TreeFamily,
    init: FrogInit,
    step_caps: Sequence[int],
    replicas: int,
    seed: int | None = None,
    *,
    min_slope: float = 0.5,
) -> RecurrenceTable:
    """Root-visit statistics of FM at increasing step caps, one fresh tree per replica.

    Replica i samples its tree with seed + i and runs the dynamics with the same seed, once,
    to the largest cap; smaller caps read nu from checkpoints of that run.
    """
    seed = settings.base_seed if seed is None else seed
    caps = list(step_caps)
    if not caps or caps != sorted(set(caps)) or caps[0] < 1:
        raise DomainError(f"step caps must be increasing positive integers, got {caps}")
    if replicas < 1:
        raise DomainError(f"need at least one replica, got {replicas}")
    samples = np.zeros((replicas, len(caps)))
    for i in range(replicas):
        tree = family.sample(seed + i)
        report = simulate_fm(tree, init, seed + i, caps[-1], checkpoints=caps)
        samples[i] = [report.nu_checkpoints.get(c, report.nu) for c in caps]
    means = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(replicas) if replicas > 1 else np.zeros(len(caps))
    q10, q50, q90 = np.quantile(samples, [0.1, 0.5, 0.9], axis=0)
    rows = tuple(
        RecurrenceRow(c, float(means[j]), float(stderr[j]), float(q10[j]), float(q50[j]), float(q90[j]))
        for j, c in enumerate(caps)
    )
    flag = growth_flag(caps, means, min_slope) if len(caps) >= 3 else False
    return RecurrenceTable(rows=rows, growth_flag=flag)
