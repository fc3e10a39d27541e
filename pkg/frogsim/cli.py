"""frogsim command line.

    frogsim sample-tree --offspring p3=1 --depth 2
    frogsim simulate --offspring p4=1 --frog-init p0=1 --seed-count 1000 --output nu.csv
    frogsim analytics --table first_visit --n-max 12
    frogsim sweep-cd --mesh 0.01 --output cd.csv

Every flag can also come from a JSON file given with --config; flags given on the command line
win over the file. The worker-process count is read from FROGSIM_THREADS only.

Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

import argparse
import json
import logging
import math
import sys
from collections.abc import Callable, Iterator
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import TextIO

import numpy as np

from frogsim import __version__
from frogsim.config import settings
from frogsim.distributions import FiniteDistribution, FrogInit, OffspringDistribution
from frogsim.enums import AnalyticsTable, Command, Side, SimulationMode, Termination
from frogsim.errors import (
    EXIT_NUMERICAL,
    EXIT_OK,
    ConvergenceRadiusError,
    DivergenceError,
    DomainError,
    exit_code_for,
)
from frogsim.export import (
    FIRST_VISIT_COLUMNS,
    metadata_lines,
    real,
    write_edge_list,
    write_plot_data,
    write_sim_csv,
    write_sweep_csv,
    write_table,
)
from frogsim.gw_trees import erase_bushes, label_stretches, sample_surviving_tree, sample_tree
from frogsim.rw_analytics import (
    RuinChainSpec,
    fapprox_lower,
    first_visit_gf_closed,
    first_visit_gf_series,
    rho_homogeneous,
    rho_subdivision,
    ruin_interior_kernel,
    ruin_radius,
    spectral_radius_finite,
)
from frogsim.schemas.config import ExperimentConfig
from frogsim.simulators import (
    CoupledReport,
    SimReport,
    simulate_bmc,
    simulate_coupled,
    simulate_fm,
    simulate_fm_prime,
)
from frogsim.transience_search import audit_monotone, plateau_levels, sweep_cd

logger = logging.getLogger(__name__)

INEQUALITY_BUNDLE = (
    "c1 1+eta<mu; c2 (d+1)/d<=mu; c3 type-2 and type-3; "
    "c4 mixed type-2/type-3 six-term form for k=1..k_max; c5 mu<1/cos(theta/(N+1))"
)

# Config fields a flag of the same name can set.
_FLAG_FIELDS = (
    "seeds", "base_seed", "seed_count", "tree_seed", "step_cap", "particle_cap", "depth",
    "bush_cap", "erase_bushes", "output", "plot_output", "mode", "table", "n_min", "n_max", "z_points",
    "z_values", "d_values", "rho", "subdivisions", "mesh", "d_cap", "n_cap", "p0",
    "include_zero", "epsilon", "k_max",
)
_DISTRIBUTION_FIELDS: dict[str, type[FiniteDistribution]] = {
    "offspring": OffspringDistribution,
    "frog_init": FrogInit,
    "bmc_offspring": OffspringDistribution,
}


# --- Config ----------------------------------------------------------------------


def read_distribution(cls: type[FiniteDistribution], text: str) -> FiniteDistribution:
    """Inline key=value or JSON text, or else the path of a file holding either."""
    try:
        if "=" in text or text.lstrip().startswith("{"):
            return cls.from_text(text)
        return cls.from_file(text)
    except DomainError:
        raise
    except ValueError as exc:
        raise DomainError(f"cannot read distribution {text!r}: {exc}") from exc


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    data["command"] = args.command
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    for name, cls in _DISTRIBUTION_FIELDS.items():
        text = getattr(args, name, None)
        if text is not None:
            data[name] = read_distribution(cls, text)
    return ExperimentConfig.model_validate(data)


@contextmanager
def _open_output(path: str | Path | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="") as stream:
        yield stream


# --- sample-tree -------------------------------------------------------------------


def cmd_sample_tree(config: ExperimentConfig) -> int:
    seeds = config.seed_list()
    seed = seeds[0] if seeds else config.base_seed
    tree = sample_tree(config.offspring, seed, config.depth)
    masses = None
    if config.erase_bushes:
        tree, masses = erase_bushes(tree, config.depth, config.frog_init, config.bush_cap)
    else:
        label_stretches(tree, config.depth)
    with _open_output(config.output) as stream:
        count = write_edge_list(
            stream, tree, config.frog_init, config.depth, metadata_lines(config, [seed]),
            counts=masses,
        )
    logger.info("Wrote %d vertices (seed %d, depth %d)", count, seed, config.depth)
    return EXIT_OK


# --- simulate ----------------------------------------------------------------------


def run_replica(job: tuple[ExperimentConfig, int]) -> SimReport | CoupledReport:
    """One replica: tree drawn with the replica seed (or the shared tree seed), then the run.

    Laws with p_0 > 0 draw the first surviving tree from that seed on.
    """
    config, seed = job
    tree_seed = seed if config.tree_seed is None else config.tree_seed
    if config.offspring.p(0) > 0:
        tree = sample_surviving_tree(config.offspring, tree_seed, config.depth)
    else:
        tree = sample_tree(config.offspring, tree_seed, config.depth)
    init = config.frog_init
    match config.mode:
        case SimulationMode.FM:
            return simulate_fm(tree, init, seed, config.step_cap, particle_cap=config.particle_cap)
        case SimulationMode.FM_PRIME:
            stretches = label_stretches(tree, config.depth)
            return simulate_fm_prime(
                tree, stretches, init, seed, config.step_cap, particle_cap=config.particle_cap,
            )
        case SimulationMode.BMC:
            law = config.bmc_offspring or init.as_offspring()
            return simulate_bmc(tree, law, seed, config.step_cap, config.particle_cap)
        case SimulationMode.COUPLED:
            return simulate_coupled(tree, init, seed, config.step_cap, config.particle_cap)
    raise DomainError(f"unknown mode {config.mode!r}")


def run_replicas(config: ExperimentConfig, threads: int | None = None) -> list[SimReport | CoupledReport]:
    """Replicas in seed-list order, whatever order the workers finish in."""
    threads = settings.threads if threads is None else threads
    jobs = [(config, seed) for seed in config.seed_list()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_replica, jobs))
    return [run_replica(job) for job in jobs]


def simulation_summary(reports: list[SimReport | CoupledReport], coupled: bool) -> dict[str, str]:
    summary = {"replicas": str(len(reports))}
    if not reports:
        return summary
    legs = [r.fm if coupled else r for r in reports]
    nu = np.array([r.nu for r in legs], dtype=float)
    q10, q50, q90 = np.quantile(nu, [0.1, 0.5, 0.9])
    summary.update(
        mean_nu=real(float(nu.mean())),
        stderr_nu=real(float(nu.std(ddof=1) / math.sqrt(len(nu))) if len(nu) > 1 else 0.0),
        q10=real(float(q10)), q50=real(float(q50)), q90=real(float(q90)),
        particle_cap_hits=str(sum(r.termination == Termination.PARTICLE_CAP for r in legs)),
    )
    if coupled:
        summary["incomparable"] = str(sum(r.incomparable for r in reports))
        summary["domination_violations"] = str(sum(not r.dominated for r in reports))
    return summary


def cmd_simulate(config: ExperimentConfig) -> int:
    coupled = config.mode == SimulationMode.COUPLED
    seeds = config.seed_list()
    reports = run_replicas(config)
    with _open_output(config.output) as stream:
        write_sim_csv(stream, reports, metadata_lines(config, seeds), coupled=coupled)
    summary = simulation_summary(reports, coupled)
    print("# summary: " + " ".join(f"{k}={v}" for k, v in summary.items()))
    violations = int(summary.get("domination_violations", "0"))
    if violations:
        logger.error("%d coupled replicas violate FM <= BMC", violations)
        return EXIT_NUMERICAL
    return EXIT_OK


# --- analytics ---------------------------------------------------------------------


def _z_grid(config: ExperimentConfig, n: int) -> list[float]:
    if config.z_values is not None:
        return list(config.z_values)
    top = 3.0 if n == 2 else 0.99 * ruin_radius(n)
    return [float(z) for z in np.linspace(1.0, top, config.z_points)]


def first_visit_rows(config: ExperimentConfig) -> list[list[object]]:
    """Closed form against the series oracle; points past the radius are flagged divergent."""
    rows: list[list[object]] = []
    for n in range(max(2, config.n_min), config.n_max + 1):
        pairs = sorted({(1, n), (n - 1, n), (1, 0), (n - 1, 0)}, key=lambda p: (-p[1], p[0]))
        for z in _z_grid(config, n):
            for x, y in pairs:
                try:
                    closed = first_visit_gf_closed(RuinChainSpec(n=n, z=z), x, y)
                    series = first_visit_gf_series(n, x, y, z)
                except (ConvergenceRadiusError, DivergenceError):
                    rows.append([n, z, x, y, None, None, "divergent"])
                    continue
                rows.append([n, z, x, y, closed, series, abs(closed - series)])
    return rows


def fapprox_rows(config: ExperimentConfig) -> list[list[object]]:
    rows: list[list[object]] = []
    for n in range(max(1, config.n_min), config.n_max + 1):
        for j in range(config.z_points):
            phi = j * math.pi / ((n + 1) * config.z_points)
            spec = RuinChainSpec.from_phi(n + 1, phi)
            for side, x in ((Side.NEAR, n), (Side.FAR, 1)):
                bound = fapprox_lower(n, phi, side)
                closed = first_visit_gf_closed(spec, x, n + 1)
                rows.append([n, phi, str(side), bound, closed, int(bound <= closed * (1.0 + 1e-12))])
    return rows


def ruin_spectral_rows(config: ExperimentConfig) -> list[list[object]]:
    rows: list[list[object]] = []
    for n in range(max(2, config.n_min), config.n_max + 1):
        estimate = spectral_radius_finite(ruin_interior_kernel(n), subset=f"ruin interior N={n}")
        exact = math.cos(math.pi / n)
        rows.append([n, estimate.value, exact, abs(estimate.value - exact), estimate.iterations])
    return rows


ANALYTICS_TABLES: dict[AnalyticsTable, tuple[tuple[str, ...], Callable[[ExperimentConfig], list]]] = {
    AnalyticsTable.FIRST_VISIT: (FIRST_VISIT_COLUMNS, first_visit_rows),
    AnalyticsTable.RHO_HOMOGENEOUS: (
        ("d", "rho"), lambda c: [[d, rho_homogeneous(d)] for d in c.d_values],
    ),
    AnalyticsTable.RHO_SUBDIVISION: (
        ("rho", "N", "rho_N"), lambda c: [[c.rho, n, rho_subdivision(c.rho, n)] for n in c.subdivisions],
    ),
    AnalyticsTable.FAPPROX: (("N", "phi", "which", "bound", "closed", "holds"), fapprox_rows),
    AnalyticsTable.RUIN_SPECTRAL: (
        ("N", "power", "cos_pi_over_N", "abs_err", "iterations"), ruin_spectral_rows,
    ),
}


def cmd_analytics(config: ExperimentConfig) -> int:
    columns, build = ANALYTICS_TABLES[config.table]
    rows = build(config)
    with _open_output(config.output) as stream:
        write_table(stream, columns, rows, metadata_lines(config, []))
    if config.table == AnalyticsTable.FIRST_VISIT:
        errors = [r[-1] for r in rows if isinstance(r[-1], float)]
        divergent = len(rows) - len(errors)
        print(f"# summary: rows={len(rows)} max_abs_err={real(max(errors, default=0.0))} divergent={divergent}")
    else:
        print(f"# summary: rows={len(rows)}")
    return EXIT_OK


# --- sweep-cd ----------------------------------------------------------------------


def cmd_sweep_cd(config: ExperimentConfig) -> int:
    records = sweep_cd(
        config.mesh, config.d_cap, config.n_cap, config.p0,
        include_zero=config.include_zero, k_max=config.k_max, epsilon=config.epsilon,
    )
    warnings = audit_monotone(records)
    metadata = metadata_lines(config, [], extra={
        "inequalities": INEQUALITY_BUNDLE,
        "epsilon": real(config.epsilon),
        "k_max": config.k_max,
        "plateaus": ",".join(str(level) for level in plateau_levels(records)) or "none",
    })
    with _open_output(config.output) as stream:
        write_sweep_csv(stream, records, metadata, warnings)
    plot_path = config.plot_path()
    if plot_path is not None:
        with _open_output(plot_path) as stream:
            write_plot_data(stream, records, metadata)
    certified = sum(r.c_d is not None for r in records)
    print(f"# summary: points={len(records)} certified={certified} warnings={len(warnings)}")
    return EXIT_OK


COMMANDS: dict[Command, Callable[[ExperimentConfig], int]] = {
    Command.SAMPLE_TREE: cmd_sample_tree,
    Command.SIMULATE: cmd_simulate,
    Command.ANALYTICS: cmd_analytics,
    Command.SWEEP_CD: cmd_sweep_cd,
}


# --- Parser ------------------------------------------------------------------------


def _seed_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seeds", type=int, nargs="+", help="Explicit seed list (overrides base/count)")
    parser.add_argument("--base-seed", type=int, help=f"First seed (default {settings.base_seed})")
    parser.add_argument("--seed-count", type=int, help="Number of seeds from the base (default 1)")


def _tree_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--offspring", help="Offspring law: key=value text, JSON, or a file holding either")
    parser.add_argument("--frog-init", help="Sleeping-frog law, same formats (default: one frog per vertex)")
    parser.add_argument("--depth", type=int, help=f"Depth horizon (default {settings.depth_horizon})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frogsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"frogsim {__version__}")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"], help="Logging verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: Command, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(str(name), help=help_text, description=help_text)
        p.add_argument("--config", help="JSON experiment config; flags override its values")
        p.add_argument("--output", help="Output file (default: standard output)")
        return p

    p = command(Command.SAMPLE_TREE, "Write one sampled tree as a labeled edge list")
    _tree_flags(p)
    _seed_flags(p)
    p.add_argument("--erase-bushes", action=argparse.BooleanOptionalAction, default=None,
                   help="Write the backbone only, each vertex carrying its erased bushes' frogs")
    p.add_argument("--bush-cap", type=int, help=f"Vertices per bush before failing (default {settings.bush_cap})")

    p = command(Command.SIMULATE, "Run FM, FM', BMC or the coupled pair on sampled trees")
    _tree_flags(p)
    _seed_flags(p)
    p.add_argument("--mode", choices=[str(m) for m in SimulationMode], help="Model to run (default fm)")
    p.add_argument("--bmc-offspring", help="BMC offspring law for --mode bmc (default: law of eta+1)")
    p.add_argument("--tree-seed", type=int, help="Run every replica on the tree drawn with this seed")
    p.add_argument("--step-cap", type=int, help=f"Rounds per run (default {settings.step_cap})")
    p.add_argument("--particle-cap", type=int,
                   help=f"Particle-steps per run before stopping (default {settings.particle_cap})")

    p = command(Command.ANALYTICS, "Tabulate generating functions and spectral radii")
    p.add_argument("--table", choices=[str(t) for t in AnalyticsTable], help="Table to emit (default first_visit)")
    p.add_argument("--n-min", type=int, help="Smallest N (default 2)")
    p.add_argument("--n-max", type=int, help="Largest N (default 12)")
    p.add_argument("--z-points", type=int, help="Grid points per N for z or phi (default 50)")
    p.add_argument("--z-values", type=float, nargs="+", help="Explicit z values instead of the grid")
    p.add_argument("--d-values", type=int, nargs="+", help="d values for rho_homogeneous (default 2..10)")
    p.add_argument("--rho", type=float, help="rho for rho_subdivision (default 0.8)")
    p.add_argument("--subdivisions", type=int, nargs="+", help="N values for rho_subdivision (default 1..10)")

    p = command(Command.SWEEP_CD, "Minimal certified d_min for each p_1 on a mesh")
    p.add_argument("--plot-output", help="Plot-data file \"p1 c_d\" (default: output with .dat suffix)")
    p.add_argument("--mesh", type=float, help=f"Mesh width for p_1 (default {settings.mesh})")
    p.add_argument("--d-cap", type=int, help=f"Largest d_min tried (default {settings.d_cap})")
    p.add_argument("--n-cap", type=int, help=f"Largest truncation N tried (default {settings.n_cap})")
    p.add_argument("--p0", type=float, help="Leaf probability; > 0 runs the bush case (default 0)")
    p.add_argument("--include-zero", action=argparse.BooleanOptionalAction, default=None,
                   help="Also emit the p_1 = 0 point")
    p.add_argument("--epsilon", type=float, help=f"Margin below the mu ceiling (default {settings.epsilon})")
    p.add_argument("--k-max", type=int, help=f"Largest k in the mixed inequality (default {settings.k_max})")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = build_config(args)
        return COMMANDS[config.command](config)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_NUMERICAL:
            logger.exception("%s failed", args.command)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
