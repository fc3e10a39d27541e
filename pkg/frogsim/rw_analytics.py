"""Spectral radii of simple random walk on trees and first-visit generating functions of the
ruin chain.

The ruin chain P_N is simple random walk on {0, ..., N} absorbed at both ends. For a target
y in {0, N} and a start x in the interior,

    F_N(x, y | z) = sum_n P_x[first visit to y at time n] z^n,

which converges for z < 1/cos(pi/N). With z = 1/cos(phi) it equals sin(x phi)/sin(N phi) for
y = N; targets at 0 follow from the reflection x -> N - x.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from frogsim.config import settings
from frogsim.enums import Side
from frogsim.errors import ConvergenceRadiusError, DivergenceError, DomainError, NonConvergenceError
from frogsim.gw_trees import RootedTree
from frogsim.rng import Vertex

logger = logging.getLogger(__name__)


# --- Homogeneous trees and subdivisions ------------------------------------------


def rho_homogeneous(d: int) -> float:
    """rho(T_{d+1}) = 2 sqrt(d) / (d+1)."""
    if d < 2:
        raise DomainError(f"homogeneous tree needs d >= 2, got {d}")
    return 2.0 * math.sqrt(d) / (d + 1)


def rho_subdivision(rho: float, n: int) -> float:
    """Spectral radius after replacing every edge by a path of n edges."""
    if not (0.0 < rho < 1.0):
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if n < 1:
        raise DomainError(f"subdivision length must be >= 1, got {n}")
    return math.cos(math.acos(rho) / n)


# --- Ruin chain ------------------------------------------------------------------


def ruin_radius(n: int) -> float:
    """R_N = 1/cos(pi/N), the convergence radius of F_N (infinite for N = 2)."""
    if n < 2:
        raise DomainError(f"ruin chain needs N >= 2, got {n}")
    if n == 2:
        return math.inf
    return 1.0 / math.cos(math.pi / n)


def _interior_rho(n: int) -> float:
    return 0.0 if n == 2 else math.cos(math.pi / n)


@dataclass(frozen=True)
class RuinChainSpec:
    """The ruin chain on {0, ..., n} evaluated at z = 1/cos(phi)."""
    n: int
    z: float

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"ruin chain needs N >= 2, got {self.n}")
        if self.z < 1.0:
            raise DomainError(f"z must be >= 1, got {self.z}")
        if self.phi >= math.pi / self.n:
            raise ConvergenceRadiusError(
                f"z = {self.z} is outside the convergence radius {ruin_radius(self.n)} for N = {self.n}"
            )

    @property
    def phi(self) -> float:
        return math.acos(1.0 / self.z)

    @property
    def radius(self) -> float:
        return ruin_radius(self.n)

    @classmethod
    def from_phi(cls, n: int, phi: float) -> "RuinChainSpec":
        return cls(n=n, z=1.0 / math.cos(phi))


def _check_pair(n: int, x: int, y: int) -> None:
    if y not in (0, n):
        raise DomainError(f"target must be 0 or N = {n}, got {y}")
    if not (0 < x < n):
        raise DomainError(f"start must be an interior state of 0..{n}, got {x}")


def first_visit_gf_closed(spec: RuinChainSpec, x: int, y: int) -> float:
    n = spec.n
    if (x, y) not in {(1, n), (n - 1, n), (1, 0), (n - 1, 0)}:
        raise DomainError(f"no closed form for (x, y) = ({x}, {y}) with N = {n}")
    # Targets at 0 mirror targets at N.
    if y == 0:
        x = n - x
    phi = spec.phi
    if phi < settings.phi_zero_window:
        return x / n
    if math.pi / n - phi < settings.near_pole_window:
        logger.debug("phi within %.1e of pi/N for N=%d; using the linear solve", settings.near_pole_window, n)
        return first_visit_gf_exact(n, x, n, spec.z)
    return math.sin(x * phi) / math.sin(n * phi)


def first_visit_gf_series(n: int, x: int, y: int, z: float, tol: float | None = None) -> float:
    """Brute-force F_N(x, y | z): sum first-visit probabilities f^(n) z^n term by term.

    The mass still inside the interior after n steps, w_n = z^n Q^n e_x, decays like
    (z cos(pi/N))^n because Q is symmetric, which bounds the remaining terms.
    """
    tol = settings.series_tol if tol is None else tol
    _check_pair(n, x, y)
    if y == 0:
        x = n - x
    contraction = z * _interior_rho(n)
    if contraction >= 1.0:
        raise DivergenceError(f"series diverges: z = {z} >= 1/cos(pi/{n})")

    # Interior states 1..n-1 sit at indices 0..n-2.
    w = np.zeros(n - 1)
    w[x - 1] = 1.0
    total = 0.0
    while True:
        # One step: mass at n-1 that moves right is absorbed at y = n.
        total += 0.5 * z * w[-1]
        step = np.zeros_like(w)
        step[1:] += 0.5 * w[:-1]
        step[:-1] += 0.5 * w[1:]
        w = z * step
        remaining = 0.5 * z * float(np.linalg.norm(w)) / (1.0 - contraction)
        if remaining < tol:
            return total


def _interior_kernel(n: int) -> sp.csr_array:
    """Q: the ruin chain restricted to the interior states 1..n-1."""
    size = n - 1
    matrix = np.zeros((size, size))
    idx = np.arange(size - 1)
    matrix[idx, idx + 1] = 0.5
    matrix[idx + 1, idx] = 0.5
    return sp.csr_array(matrix)


def first_visit_gf_exact(n: int, x: int, y: int, z: float) -> float:
    """F_N(x, y | z) from the resolvent: (z/2) [(I - zQ)^-1]_{x, N-1} for y = N.

    Valid for any start and any 0 <= z below the radius, including the near-pole region
    where the sine formula loses precision.
    """
    _check_pair(n, x, y)
    if z < 0.0:
        raise DomainError(f"z must be nonnegative, got {z}")
    if z * _interior_rho(n) >= 1.0:
        raise ConvergenceRadiusError(f"z = {z} is outside the convergence radius for N = {n}")
    if y == 0:
        x = n - x
    size = n - 1
    system = sp.csc_array(np.eye(size) - z * _interior_kernel(n).toarray())
    rhs = np.zeros(size)
    rhs[-1] = 0.5 * z
    solution = np.atleast_1d(spsolve(system, rhs))
    return float(solution[x - 1])


def fapprox_lower(n: int, phi: float, which: Side) -> float:
    """Second-order lower bounds for the exits of F_{N+1} at z = 1/cos(phi).

    near: F_{N+1}(N, N+1) >= (N/(N+1)) (1 + (1+2N) phi^2 / 6)
    far:  F_{N+1}(1, N+1) >= (1/(N+1)) (1 + (2N+N^2) phi^2 / 6)
    """
    if n < 1:
        raise DomainError(f"N must be >= 1, got {n}")
    if not (0.0 <= phi < math.pi / (n + 1)):
        raise DomainError(f"phi must lie in [0, pi/{n + 1}), got {phi}")
    if Side(which) == Side.NEAR:
        return n / (n + 1) * (1.0 + (1 + 2 * n) * phi**2 / 6.0)
    return 1.0 / (n + 1) * (1.0 + (2 * n + n * n) * phi**2 / 6.0)


def expected_frozen(
    chain: RuinChainSpec | int, x: int, targets: Iterable[int], mu_bar: float
) -> float:
    """Mean number of particles frozen on `targets` by the absorbing BMC on {0..N} started at x.

    Arguments are positional in this order: the chain (a `RuinChainSpec`, or N itself), the
    start x, the targets drawn from {0, N}, and the mean offspring mu_bar. Only N is read
    from a `RuinChainSpec`; mu_bar plays the role of z, so the spec's own z is ignored.
    Equals the first-visit generating function at z = mu_bar, summed over the targets.
    """
    n = chain.n if isinstance(chain, RuinChainSpec) else chain
    targets = set(targets)
    if not targets or not targets <= {0, n}:
        raise DomainError(f"targets must be a nonempty subset of {{0, {n}}}, got {sorted(targets)}")
    if mu_bar < 1.0:
        raise DomainError(f"mean offspring must be >= 1, got {mu_bar}")
    if mu_bar > ruin_radius(n):
        raise ConvergenceRadiusError(f"mu_bar = {mu_bar} exceeds R_N = {ruin_radius(n)}")
    return sum(first_visit_gf_exact(n, x, y, mu_bar) for y in sorted(targets))


# --- Spectral radii of finite kernels --------------------------------------------


@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    subset: str
    iterations: int
    residual: float
    size: int


def spectral_radius_finite(
    kernel,
    subset: str = "",
    tol: float | None = None,
    max_iter: int | None = None,
) -> SpectralEstimate:
    """Perron root of a nonnegative substochastic matrix by power iteration.

    Iterates on the lazy matrix (I + A)/2, whose Perron root (1 + rho)/2 is its unique
    eigenvalue of largest modulus even when A is periodic (trees and paths are bipartite).
    """
    tol = settings.power_tol if tol is None else tol
    max_iter = settings.power_max_iter if max_iter is None else max_iter

    matrix = sp.csr_array(kernel, dtype=float)
    rows, cols = matrix.shape
    if rows != cols or rows == 0:
        raise DomainError(f"kernel must be a nonempty square matrix, got shape {matrix.shape}")
    if matrix.nnz and matrix.data.min() < 0.0:
        raise DomainError("kernel has negative entries")
    if np.asarray(matrix.sum(axis=1)).max(initial=0.0) > 1.0 + 1e-12:
        raise DomainError("kernel rows sum to more than 1")

    def lazy(v: np.ndarray) -> np.ndarray:
        return 0.5 * (matrix @ v + v)

    x = np.ones(rows) / math.sqrt(rows)
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        y = lazy(x)
        lam = float(np.linalg.norm(y))
        y /= lam
        residual = 2.0 * float(np.linalg.norm(lazy(y) - lam * y))
        x = y
        if residual <= tol:
            return SpectralEstimate(
                value=2.0 * lam - 1.0, subset=subset, iterations=iteration,
                residual=residual, size=rows,
            )
    raise NonConvergenceError(
        f"power iteration did not converge on {subset or 'kernel'}",
        residual=residual, iterations=max_iter,
    )


def ruin_interior_kernel(n: int) -> np.ndarray:
    if n < 2:
        raise DomainError(f"ruin chain needs N >= 2, got {n}")
    return _interior_kernel(n).toarray()


def ball_kernel(tree: RootedTree, radius: int) -> tuple[sp.csr_array, list[Vertex]]:
    """Simple random walk on the tree killed on leaving the ball of `radius` around the root."""
    vertices = list(tree.walk(radius))
    index = {v: i for i, v in enumerate(vertices)}
    rows, cols, data = [], [], []
    for v in vertices:
        if tree.depth(v) == radius and not tree.is_known(v):
            raise DomainError(f"degree of boundary vertex {v} is unknown; explore deeper")
        step = 1.0 / tree.degree(v)
        for w in tree.neighbors(v):
            j = index.get(w)
            if j is not None:
                rows.append(index[v])
                cols.append(j)
                data.append(step)
    size = len(vertices)
    return sp.csr_array((data, (rows, cols)), shape=(size, size)), vertices


def rho_tree_lower_bounds(tree: RootedTree, radii: Sequence[int]) -> list[SpectralEstimate]:
    """rho of the walk killed outside growing balls; each is a lower bound for rho(T)."""
    if list(radii) != sorted(radii) or not radii:
        raise DomainError(f"radii must be a nonempty increasing list, got {list(radii)}")
    estimates = []
    for r in radii:
        kernel, vertices = ball_kernel(tree, r)
        estimates.append(spectral_radius_finite(kernel, subset=f"ball(radius={r})"))
        logger.debug("Ball radius %d: %d vertices, rho >= %.10f", r, len(vertices), estimates[-1].value)
    return estimates


def rho_ball_homogeneous(d: int, radius: int) -> SpectralEstimate:
    """rho of the walk on the radius-r ball of the tree where every vertex has d children.

    The Perron vector is radial, so the ball lumps onto the distance chain: the root moves
    down with probability 1, every other level moves down with d/(d+1) and up with 1/(d+1).
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if radius < 1:
        raise DomainError(f"radius must be >= 1, got {radius}")
    size = radius + 1
    chain = np.zeros((size, size))
    chain[0, 1] = 1.0
    for k in range(1, size):
        chain[k, k - 1] = 1.0 / (d + 1)
        if k + 1 < size:
            chain[k, k + 1] = d / (d + 1)
    return spectral_radius_finite(chain, subset=f"radial ball(d={d}, radius={radius})")


def isoperimetric_ratio(tree: RootedTree, subset: Iterable[Vertex]) -> float:
    """|boundary edges of F| / Vol(F), with Vol(F) the degree sum over F."""
    members = set(subset)
    if not members:
        raise DomainError("subset must be nonempty")
    volume = 0
    boundary = 0
    for v in members:
        if not tree.is_known(v):
            raise DomainError(f"degree of {v} is unknown; it lies on a truncation frontier")
        volume += tree.degree(v)
        boundary += sum(1 for w in tree.neighbors(v) if w not in members)
    return boundary / volume
