"""Certified transience: the sufficient inequality systems and the c_d(p_1) sweep.

For a stretch probability p_1 and minimal branching d_min, a certificate is a truncation N,
a BMC mean offspring mu_bar and a frog mean eta_bar satisfying five conditions:

1. 1 + eta_bar < mu_bar;
2. (d_min + 1)/d_min <= mu_bar;
3. the single type-2 bound (check_type2) and the type-3 comparison (check_type3);
4. the mixed type-2/type-3 inequality for every k <= k_max (check_mixed);
5. mu_bar < 1/cos(theta/(N+1)) with theta = arccos(2 sqrt(d_min)/(d_min+1)).

mu_bar is pinned just below the condition-5 ceiling, and the largest eta_bar passing 1-4 is
found by bisection; every left-hand side is non-decreasing in eta_bar.

With bushes (p_0 > 0) the frog mean is replaced by the effective mean E[G](K-1) eta_bar and
p_1 by p̂_1, the probability that a backbone vertex has exactly one backbone child.
"""

import logging
import math
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from frogsim.config import settings
from frogsim.distributions import OffspringDistribution
from frogsim.errors import DomainError, FrogsimError
from frogsim.gw_trees import expected_bush_size, extinction_prob, pgf_derivative
from frogsim.rw_analytics import RuinChainSpec, first_visit_gf_closed, rho_homogeneous

logger = logging.getLogger(__name__)

# Relative truncation error of the infinite sums over stretch lengths.
SERIES_REL_TOL = 1e-16


@dataclass(frozen=True)
class SearchRecord:
    p1: float
    p0: float
    # Certifying d_min, or None when no d_min up to the cap certifies.
    c_d: int | None
    N: int | None = None
    eta_bar: float | None = None
    mu_bar: float | None = None
    c1: bool = False
    c2: bool = False
    c3: bool = False
    c4: bool = False
    c5: bool = False
    k_max_checked: int = 0
    # E[G](K-1); 1 without bushes.
    bush_factor: float = 1.0
    # Stretch parameter the inequalities ran with (p̂_1 in the bush case).
    p_stretch: float | None = None
    type2_multiple_ok: bool | None = None
    reduced_mixed_ok: bool | None = None

    @property
    def feasible(self) -> bool:
        return self.c_d is not None and all((self.c1, self.c2, self.c3, self.c4, self.c5))


@dataclass(frozen=True)
class BushParams:
    K: int
    expected_bush_size: float
    p_hat_1: float

    @property
    def factor(self) -> float:
        return self.expected_bush_size * (self.K - 1)

    @classmethod
    def from_distribution(cls, dist: OffspringDistribution) -> "BushParams":
        q = extinction_prob(dist)
        if q >= 1.0:
            raise DomainError("no transient phase to certify: the tree dies out (q = 1)")
        if q == 0.0:
            return cls(K=dist.d_max, expected_bush_size=1.0, p_hat_1=dist.p(1))
        return cls(
            K=dist.d_max,
            expected_bush_size=expected_bush_size(dist),
            # The s^1 coefficient of f*, i.e. f'(q).
            p_hat_1=pgf_derivative(dist, q),
        )


# --- Closed-form conditions ---------------------------------------------------------


def _theta(d_min: int) -> float:
    return math.acos(2.0 * math.sqrt(d_min) / (d_min + 1))


def eta_bound_no_stretch(d: int) -> float:
    """(d+1)/(2 sqrt d) - 1: the largest frog mean dominated by a transient BMC on T_{d+1}."""
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}")
    return (d + 1) / (2.0 * math.sqrt(d)) - 1.0


def mu_ceiling(d_min: int, n: int) -> float:
    """Condition 5: 1/rho of the backbone with stretches truncated at N."""
    return 1.0 / math.cos(_theta(d_min) / (n + 1))


def check_N_feasible(d_min: int, n: int) -> bool:
    """N + 1 < arccos(2 sqrt(d)/(d+1)) / arccos(d/(d+1)), i.e. conditions 2 and 5 can meet."""
    if d_min < 2 or n < 1:
        raise DomainError(f"need d_min >= 2 and N >= 1, got d_min={d_min}, N={n}")
    return n + 1 < _theta(d_min) / math.acos(d_min / (d_min + 1))


def check_type2(n: int, gamma: float, d_min: int | None = None) -> bool:
    """(1/2)(1/cos(gamma/(N+1)) - 1) <= (1/3) N (gamma/(N+1))^2."""
    if n < 1:
        raise DomainError(f"N must be >= 1, got {n}")
    if gamma <= 0.0 or (d_min is not None and gamma >= _theta(d_min)):
        raise DomainError(f"gamma = {gamma} outside (0, arccos(2 sqrt(d)/(d+1)))")
    x = gamma / (n + 1)
    return 0.5 * (1.0 / math.cos(x) - 1.0) <= n * x * x / 3.0


def gamma_for_eta(n: int, eta_bar: float) -> float:
    """gamma with eta_bar = 1/cos(gamma/(N+1)) - 1."""
    return (n + 1) * math.acos(1.0 / (1.0 + eta_bar))


def _lengths(p: float, n: int) -> np.ndarray:
    """Stretch lengths 1, 2, ... past N until the geometric tail beyond N is negligible."""
    extra = 1 if p == 0.0 else int(math.ceil(math.log(SERIES_REL_TOL) / math.log(p))) + 1
    return np.arange(1, n + max(extra, 1) + 1, dtype=float)


def _geometric_weights(p: float, ell: np.ndarray) -> np.ndarray:
    """P[L = ell] = p^(ell-1)(1-p) for a stretch length L ~ 1 + geo(p)."""
    return np.power(p, ell - 1.0) * (1.0 - p)


def g(ell: int, mu_bar: float) -> float:
    """F_ell(1, 0 | mu_bar)."""
    return first_visit_gf_closed(RuinChainSpec(n=ell, z=mu_bar), 1, 0)


@lru_cache(maxsize=65536)
def _type3_sides(p1: float, n: int, mu_bar: float) -> tuple[float, float]:
    """(sum over all lengths of ell/(ell+1) P[L=ell], right-hand side) of the type-3 comparison."""
    ell = _lengths(p1, n)
    passthrough = float(np.sum(ell / (ell + 1.0) * _geometric_weights(p1, ell)))
    rhs = sum(g(l + 1, mu_bar) * p1 ** (l - 1) * (1.0 - p1) for l in range(1, n))
    rhs += g(n + 1, mu_bar) * p1 ** (n - 1)
    return passthrough, rhs


def check_type3(
    p1: float, n: int, eta_bar: float, mu_bar: float, coefficient: float | None = None
) -> bool:
    """eta_bar/2 * coefficient + sum_ell ell/(ell+1) P[L=ell] < sum_ell g(ell+1) P[...] + tail.

    coefficient defaults to 1/(1-p1); the bush case passes 1/(1-p̂_1) + 1.
    """
    if not (0.0 <= p1 < 1.0):
        raise DomainError(f"p1 must lie in [0, 1), got {p1}")
    coefficient = 1.0 / (1.0 - p1) if coefficient is None else coefficient
    passthrough, rhs = _type3_sides(p1, n, mu_bar)
    return 0.5 * eta_bar * coefficient + passthrough < rhs


@dataclass(frozen=True)
class MixedTerms:
    """The six summands of the mixed type-2/type-3 inequality at one k."""
    eq1: float
    eq2: float
    eq3: float
    eq4: float
    eq5: float
    eq6: float

    @property
    def lhs(self) -> float:
        return self.eq1 + self.eq2 + self.eq3

    @property
    def rhs(self) -> float:
        return self.eq4 + self.eq5 + self.eq6

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


@lru_cache(maxsize=65536)
def _mixed_coefficients(p1: float, n: int, mu_bar: float, k_max: int) -> np.ndarray:
    """Rows k = 1..k_max of (eq1 per unit eta_bar, eq2, eq3, eq4, eq5, eq6, reduced lhs
    per unit eta_bar, reduced rhs)."""
    phi2 = math.acos(1.0 / mu_bar) ** 2
    k = np.arange(1, k_max + 1, dtype=float)[:, None]
    ell = _lengths(p1, n)
    head, tail = ell[: n - 1], ell[n - 1:]
    w_head = _geometric_weights(p1, head)
    w_tail = _geometric_weights(p1, tail)

    def decay(lengths: np.ndarray, power: np.ndarray) -> np.ndarray:
        return np.exp(-power * np.log(lengths + 1.0))

    eq1 = 0.5 * (decay(ell, 2 * k - 1) * _geometric_weights(p1, ell)).sum(axis=1)
    eq2 = (head / (head + 1.0) * decay(head, 2 * k) * w_head).sum(axis=1)
    eq3 = (tail / (tail + 1.0) * decay(tail, 2 * k) * w_tail).sum(axis=1)
    eq4 = eq2
    eq5 = (head / (head + 1.0) * decay(head, 2 * k) * (1 + 2 * head) * phi2 / 6.0 * w_head).sum(axis=1)
    k1 = k[:, 0]
    eq6 = n / (n + 1.0) * (n + 1.0) ** (-2 * k1) * p1 ** (n - 1) * (1.0 + (1 + 2 * n) * phi2 / 6.0)

    # Reduced sufficient form, with the common factor (1-p)/p^2 cancelled.
    a = (np.power(p1, head + 1.0) * decay(head, 2 * k - 1)).sum(axis=1)
    reduced_lhs = 0.5 * (a + (n + 1.0) ** (1 - 2 * k1) * p1 ** (n - 1) / (1.0 - p1))
    reduced_rhs = phi2 / (12.0 * (n + 1.0) ** 2) * a
    table = np.column_stack([eq1, eq2, eq3, eq4, eq5, eq6, reduced_lhs, reduced_rhs])
    table.flags.writeable = False
    return table


def mixed_terms(p1: float, n: int, eta_bar: float, mu_bar: float, k: int) -> MixedTerms:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    row = _mixed_coefficients(p1, n, mu_bar, k)[k - 1]
    return MixedTerms(eta_bar * row[0], row[1], row[2], row[3], row[4], row[5])


def _mixed_by_k(p1: float, n: int, eta_bar: float, mu_bar: float, k_max: int) -> np.ndarray:
    table = _mixed_coefficients(p1, n, mu_bar, k_max)
    return eta_bar * table[:, 0] + table[:, 1] + table[:, 2] <= table[:, 3] + table[:, 4] + table[:, 5]


def check_mixed(
    p1: float, n: int, eta_bar: float, mu_bar: float, k_max: int | None = None
) -> bool:
    """The mixed inequality (six-term form) for every k in 1..k_max."""
    k_max = settings.k_max if k_max is None else k_max
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    if not (0.0 < p1 < 1.0):
        raise DomainError(f"p1 must lie in (0, 1), got {p1}")
    holds = _mixed_by_k(p1, n, eta_bar, mu_bar, k_max)
    if holds[0] and holds[-1] and not holds.all():
        logger.warning(
            "Mixed inequality holds at k=1 and k=%d but fails at k=%s (p1=%.4f, N=%d, eta=%.3e)",
            k_max, (np.flatnonzero(~holds) + 1).tolist(), p1, n, eta_bar,
        )
    return bool(holds.all())


def check_mixed_reduced(
    p1: float, n: int, eta_bar: float, mu_bar: float, k_max: int | None = None
) -> bool:
    """The reduced sufficient form; empty on the right at N = 1, so an audit only."""
    k_max = settings.k_max if k_max is None else k_max
    table = _mixed_coefficients(p1, n, mu_bar, k_max)
    return bool((eta_bar * table[:, 6] <= table[:, 7]).all())


def check_type2_multiple(n: int, eta_bar: float, ell_max: int = 1000) -> bool:
    """(ell eta/2 + 1/(ell+1))/(ell+1) <= F_{N+1}(1, N+1 | 1+eta)^2 for ell > N and ell -> oo."""
    bound = first_visit_gf_closed(RuinChainSpec(n=n + 1, z=1.0 + eta_bar), 1, n + 1) ** 2
    ell = np.arange(n + 1, n + ell_max + 1, dtype=float)
    lhs = (ell * eta_bar / 2.0 + 1.0 / (ell + 1.0)) / (ell + 1.0)
    return bool(lhs.max() <= bound and eta_bar / 2.0 <= bound)


def condition1_ceiling(mu_bar: float, factor: float = 1.0) -> float:
    """Largest eta_bar condition 1 can admit: (mu_bar - 1)/factor."""
    return (mu_bar - 1.0) / factor


# --- Certification ------------------------------------------------------------------------


@dataclass(frozen=True)
class _Problem:
    p: float
    d_min: int
    factor: float
    # Multiplier of eta/2 in the type-3 comparison.
    type3_coefficient: float
    k_max: int

    def flags(self, n: int, eta_bar: float, mu_bar: float) -> tuple[bool, bool, bool, bool, bool]:
        eta = self.factor * eta_bar
        c1 = 1.0 + eta < mu_bar
        c2 = (self.d_min + 1) / self.d_min <= mu_bar
        c5 = mu_bar < mu_ceiling(self.d_min, n)
        c3 = c4 = False
        if eta > 0.0:
            gamma = gamma_for_eta(n, eta)
            c3 = (
                gamma <= (1.0 - settings.gamma_shrink) * _theta(self.d_min)
                and check_type2(n, gamma, self.d_min)
                and check_type3(self.p, n, eta, mu_bar, self.type3_coefficient)
            )
            c4 = check_mixed(self.p, n, eta, mu_bar, self.k_max)
        return c1, c2, c3, c4, c5


def _largest_eta(passes: Callable[[float], bool], hi: float, iterations: int) -> float:
    lo = 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _certify(
    problem: _Problem,
    p1: float,
    p0: float,
    n_cap: int,
    epsilon: float,
    iterations: int,
) -> SearchRecord | None:
    best: SearchRecord | None = None
    for n in range(1, n_cap + 1):
        # Feasible N form an initial segment.
        if not check_N_feasible(problem.d_min, n):
            break
        mu_bar = mu_ceiling(problem.d_min, n) * (1.0 - epsilon)
        if (problem.d_min + 1) / problem.d_min > mu_bar:
            continue
        eta = _largest_eta(
            lambda e: all(problem.flags(n, e, mu_bar)),
            condition1_ceiling(mu_bar, problem.factor),
            iterations,
        )
        if eta > 0.0 and (best is None or eta > best.eta_bar):
            best = SearchRecord(
                p1=p1, p0=p0, c_d=problem.d_min, N=n, eta_bar=eta, mu_bar=mu_bar,
                k_max_checked=problem.k_max, bush_factor=problem.factor, p_stretch=problem.p,
            )
    if best is None:
        return None
    return _emit(problem, best)


def _emit(problem: _Problem, record: SearchRecord) -> SearchRecord:
    """Re-check every condition from scratch before a record leaves the module."""
    flags = problem.flags(record.N, record.eta_bar, record.mu_bar)
    if not all(flags):
        raise FrogsimError(f"certificate failed its re-check: {record}")
    eta = problem.factor * record.eta_bar
    multiple_ok = check_type2_multiple(record.N, eta)
    reduced_ok = check_mixed_reduced(problem.p, record.N, eta, record.mu_bar, problem.k_max)
    if not multiple_ok:
        logger.warning("Multiple type-2 bound fails for p=%.4f N=%d eta=%.3e", problem.p, record.N, eta)
    c1, c2, c3, c4, c5 = flags
    return replace(
        record, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5,
        type2_multiple_ok=multiple_ok, reduced_mixed_ok=reduced_ok,
    )


def certify_no_stretch_case(d_min: int) -> SearchRecord:
    """p_0 = p_1 = 0: no stretches, the BMC on T_{d+1} with mu_bar = 1/rho certifies directly."""
    eta = eta_bound_no_stretch(d_min)
    return SearchRecord(
        p1=0.0, p0=0.0, c_d=d_min, N=0, eta_bar=eta, mu_bar=1.0 / rho_homogeneous(d_min),
        c1=True, c2=True, c3=True, c4=True, c5=True, p_stretch=0.0,
    )


def certify_stretch_case(
    p1: float,
    d_min: int,
    *,
    n_cap: int | None = None,
    epsilon: float | None = None,
    k_max: int | None = None,
    iterations: int | None = None,
) -> SearchRecord | None:
    """Largest certified eta_bar over N for p_0 = 0, or None when nothing certifies."""
    if not (0.0 < p1 < 1.0):
        raise DomainError(f"p1 must lie in (0, 1), got {p1}")
    if d_min < 2:
        raise DomainError(f"d_min must be >= 2, got {d_min}")
    problem = _Problem(
        p=p1, d_min=d_min, factor=1.0, type3_coefficient=1.0 / (1.0 - p1),
        k_max=settings.k_max if k_max is None else k_max,
    )
    return _certify(
        problem, p1, 0.0,
        settings.n_cap if n_cap is None else n_cap,
        settings.epsilon if epsilon is None else epsilon,
        settings.eta_iterations if iterations is None else iterations,
    )


def certify_bush_case(
    dist: OffspringDistribution,
    *,
    n_cap: int | None = None,
    epsilon: float | None = None,
    k_max: int | None = None,
    iterations: int | None = None,
) -> SearchRecord | None:
    """Certification after erasing bushes: frog mean E[G](K-1) eta_bar, stretch parameter p̂_1.

    d_min is taken from the input law; every backbone vertex of the truncated tree branches
    into at least that many backbone children or sits on a stretch.
    """
    caps = dict(n_cap=n_cap, epsilon=epsilon, k_max=k_max, iterations=iterations)
    params = BushParams.from_distribution(dist)
    d_min = dist.d_min
    if d_min is None:
        raise DomainError("the offspring law never branches")
    if dist.p(0) == 0.0:
        if dist.p(1) == 0.0:
            return certify_no_stretch_case(d_min)
        return certify_stretch_case(dist.p(1), d_min, **caps)
    problem = _Problem(
        p=params.p_hat_1, d_min=d_min, factor=params.factor,
        type3_coefficient=1.0 / (1.0 - params.p_hat_1) + 1.0,
        k_max=settings.k_max if k_max is None else k_max,
    )
    logger.info(
        "Bush case: E[G]=%.6f K=%d p_hat_1=%.6e d_min=%d", params.expected_bush_size,
        params.K, params.p_hat_1, d_min,
    )
    return _certify(
        problem, dist.p(1), dist.p(0),
        settings.n_cap if n_cap is None else n_cap,
        settings.epsilon if epsilon is None else epsilon,
        settings.eta_iterations if iterations is None else iterations,
    )


# --- Sweep ------------------------------------------------------------------------------


def mesh_points(mesh: float, include_zero: bool = False) -> list[float]:
    if not (0.0 < mesh < 1.0):
        raise DomainError(f"mesh must lie in (0, 1), got {mesh}")
    count = int(math.floor((1.0 - 1e-12) / mesh))
    points = [round(k * mesh, 12) for k in range(1, count + 1)]
    points = [p for p in points if p < 1.0]
    return ([0.0] if include_zero else []) + points


def _sweep_point(args: tuple[float, float, int, int, int, float, int]) -> SearchRecord:
    p1, p0, d_cap, n_cap, k_max, epsilon, iterations = args
    try:
        for d in range(2, d_cap + 1):
            if p1 == 0.0 and p0 == 0.0:
                return certify_no_stretch_case(d)
            if not check_N_feasible(d, 1):
                continue
            caps = dict(n_cap=n_cap, epsilon=epsilon, k_max=k_max, iterations=iterations)
            if p0 == 0.0:
                record = certify_stretch_case(p1, d, **caps)
            else:
                rest = 1.0 - p0 - p1
                if rest <= 0.0:
                    break
                dist = OffspringDistribution.from_mapping({0: p0, 1: p1, d: rest})
                if extinction_prob(dist) >= 1.0:
                    continue
                record = certify_bush_case(dist, **caps)
            if record is not None:
                logger.info("p1=%.4f: c_d=%d (N=%d, eta=%.3e)", p1, d, record.N, record.eta_bar)
                return record
    except Exception:
        logger.exception("Sweep point p1=%.4f failed", p1)
        raise
    logger.info("p1=%.4f: no d_min <= %d certifies", p1, d_cap)
    return SearchRecord(p1=p1, p0=p0, c_d=None)


def sweep_cd(
    mesh: float | None = None,
    d_cap: int | None = None,
    n_cap: int | None = None,
    p0: float = 0.0,
    *,
    include_zero: bool = False,
    k_max: int | None = None,
    epsilon: float | None = None,
    iterations: int | None = None,
    threads: int | None = None,
) -> list[SearchRecord]:
    """c_d(p_1) on the mesh: the smallest d_min with a certificate, one record per point."""
    mesh = settings.mesh if mesh is None else mesh
    d_cap = settings.d_cap if d_cap is None else d_cap
    n_cap = settings.n_cap if n_cap is None else n_cap
    threads = settings.threads if threads is None else threads
    if not (0.0 <= p0 < 1.0):
        raise DomainError(f"p0 must lie in [0, 1), got {p0}")
    jobs = [
        (
            p1, p0, d_cap, n_cap,
            settings.k_max if k_max is None else k_max,
            settings.epsilon if epsilon is None else epsilon,
            settings.eta_iterations if iterations is None else iterations,
        )
        for p1 in mesh_points(mesh, include_zero)
    ]
    logger.info("Sweeping %d mesh points (d cap %d, N cap %d, %d threads)", len(jobs), d_cap, n_cap, threads)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_sweep_point, jobs))
    else:
        records = [_sweep_point(job) for job in jobs]
    for message in audit_monotone(records):
        logger.warning(message)
    return records


def audit_monotone(records: list[SearchRecord]) -> list[str]:
    """Points where c_d drops as p_1 grows (an uncertified point counts as +infinity)."""
    warnings = []
    previous: SearchRecord | None = None
    for record in records:
        if previous is not None:
            before = math.inf if previous.c_d is None else previous.c_d
            now = math.inf if record.c_d is None else record.c_d
            if now < before:
                warnings.append(
                    f"c_d decreases from {previous.c_d} at p1={previous.p1:g} "
                    f"to {record.c_d} at p1={record.p1:g}"
                )
        previous = record
    return warnings


def audit_eta_monotone(d_min: int, p1_grid: list[float], **caps) -> list[str]:
    """Points where the certified eta_bar at fixed d_min grows with p_1."""
    warnings = []
    previous_eta = math.inf
    for p1 in p1_grid:
        record = certify_stretch_case(p1, d_min, **caps)
        eta = 0.0 if record is None else record.eta_bar
        if eta > previous_eta:
            warnings.append(f"eta_bar grows to {eta:.6g} at p1={p1:g} (d_min={d_min})")
        previous_eta = eta
    return warnings


def plateau_levels(records: list[SearchRecord]) -> list[int]:
    """Distinct c_d values in order of appearance along the mesh."""
    levels: list[int] = []
    for record in records:
        if record.c_d is not None and (not levels or levels[-1] != record.c_d):
            levels.append(record.c_d)
    return levels
