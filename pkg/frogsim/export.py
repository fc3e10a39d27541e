"""Line-oriented output: CSV tables, tree edge lists and plot data.

Every file starts with `#` metadata lines (tool version, config echo, seeds, generator) so a
result can be traced back to the run that produced it. Nothing time-dependent goes into a
header: identical configs give byte-identical files.
"""

import csv
import json
from collections.abc import Iterable, Mapping, Sequence
from typing import TextIO

from pydantic import BaseModel

from frogsim import __version__
from frogsim.distributions import FrogInit
from frogsim.enums import VertexLabel
from frogsim.errors import DomainError
from frogsim.gw_trees import ROOT, ExplicitTree, RootedTree
from frogsim.rng import GENERATOR_NAME, Vertex
from frogsim.simulators import CoupledReport, SimReport
from frogsim.transience_search import SearchRecord

SIM_COLUMNS = ("seed", "steps", "nu", "awake_max", "wakeups", "termination")
COUPLED_COLUMNS = (
    "seed", "steps", "nu_fm", "nu_bmc", "awake_max", "particles_max", "wakeups",
    "termination", "incomparable", "dominated",
)
SWEEP_COLUMNS = ("p1", "p0", "c_d", "N", "eta_bar", "mu_bar", "c1", "c2", "c3", "c4", "c5")
FIRST_VISIT_COLUMNS = ("N", "z", "x", "y", "closed", "series", "abs_err")

ROOT_ID = "r"
NO_PARENT = "-"


def real(x: float | None) -> str:
    """12 significant digits; blank for a missing value."""
    return "" if x is None else f"{x:.12g}"


def flag(b: bool | None) -> str:
    return "" if b is None else ("1" if b else "0")


def metadata_lines(
    config: BaseModel | Mapping | None = None,
    seeds: Sequence[int] = (),
    extra: Mapping[str, object] | None = None,
) -> list[str]:
    if isinstance(config, BaseModel):
        echo = config.model_dump_json()
    else:
        echo = json.dumps(config or {}, sort_keys=True, default=str)
    lines = [
        f"# tool: frogsim {__version__}",
        f"# config: {echo}",
        f"# seeds: {','.join(str(s) for s in seeds) or 'none'}",
        f"# generator: {GENERATOR_NAME}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return lines


def _header(stream: TextIO, lines: Iterable[str]) -> None:
    for line in lines:
        stream.write(line + "\n")


def _writer(stream: TextIO):
    return csv.writer(stream, lineterminator="\n")


# --- Simulation ------------------------------------------------------------------


def sim_row(report: SimReport) -> list[str]:
    return [
        str(report.seed), str(report.steps), str(report.nu), str(report.awake_max),
        str(report.wakeups), str(report.termination),
    ]


def coupled_row(report: CoupledReport) -> list[str]:
    return [
        str(report.fm.seed), str(report.fm.steps), str(report.fm.nu), str(report.bmc.nu),
        str(report.fm.awake_max), str(report.bmc.awake_max), str(report.fm.wakeups),
        str(report.fm.termination), flag(report.incomparable), flag(report.dominated),
    ]


def write_sim_csv(
    stream: TextIO,
    reports: Sequence[SimReport | CoupledReport],
    metadata: Iterable[str] = (),
    *,
    coupled: bool = False,
) -> None:
    _header(stream, metadata)
    writer = _writer(stream)
    writer.writerow(COUPLED_COLUMNS if coupled else SIM_COLUMNS)
    for report in reports:
        writer.writerow(coupled_row(report) if coupled else sim_row(report))


# --- Transience search -----------------------------------------------------------


def sweep_row(record: SearchRecord) -> list[str]:
    return [
        real(record.p1), real(record.p0),
        "" if record.c_d is None else str(record.c_d),
        "" if record.N is None else str(record.N),
        real(record.eta_bar), real(record.mu_bar),
        flag(record.c1), flag(record.c2), flag(record.c3), flag(record.c4), flag(record.c5),
    ]


def write_sweep_csv(
    stream: TextIO,
    records: Sequence[SearchRecord],
    metadata: Iterable[str] = (),
    warnings: Sequence[str] = (),
) -> None:
    """The c_d table; audit warnings follow as a trailing `# warnings` section."""
    _header(stream, metadata)
    writer = _writer(stream)
    writer.writerow(SWEEP_COLUMNS)
    for record in records:
        writer.writerow(sweep_row(record))
    if warnings:
        stream.write("# warnings:\n")
        _header(stream, (f"#   {w}" for w in warnings))


def write_plot_data(stream: TextIO, records: Sequence[SearchRecord], metadata: Iterable[str] = ()) -> None:
    """Two whitespace-separated columns; an uncertified point is written as nan."""
    _header(stream, metadata)
    stream.write("# p1 c_d\n")
    for record in records:
        stream.write(f"{real(record.p1)} {'nan' if record.c_d is None else record.c_d}\n")


# --- Analytics -------------------------------------------------------------------


def write_table(
    stream: TextIO,
    columns: Sequence[str],
    rows: Iterable[Sequence[object]],
    metadata: Iterable[str] = (),
) -> None:
    """Generic table; floats are written with 12 significant digits."""
    _header(stream, metadata)
    writer = _writer(stream)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([real(v) if isinstance(v, float) else ("" if v is None else str(v)) for v in row])


# --- Trees -----------------------------------------------------------------------


def vertex_id(v: Vertex) -> str:
    return ROOT_ID + "".join(f".{i}" for i in v)


def parse_vertex_id(text: str) -> Vertex:
    head, *rest = text.split(".")
    if head != ROOT_ID or not all(part.isdigit() for part in rest):
        raise DomainError(f"malformed vertex id {text!r}")
    return tuple(int(part) for part in rest)


def write_edge_list(
    stream: TextIO,
    tree: RootedTree,
    init: FrogInit,
    max_depth: int | None = None,
    metadata: Iterable[str] = (),
    counts: Mapping[Vertex, int] | None = None,
) -> int:
    """One line per explored vertex: "parent_id child_id label frog_count".

    `counts` overrides the per-vertex frog counts (the bush-erased masses, for instance).
    Returns the number of vertices written.
    """
    _header(stream, metadata)
    count = 0
    for v in tree.walk(max_depth):
        up = tree.parent(v)
        label = tree.labels.get(v, VertexLabel.UNLABELED)
        parent = NO_PARENT if up is None else vertex_id(up)
        frogs = tree.frog_count(v, init) if counts is None else counts[v]
        stream.write(f"{parent} {vertex_id(v)} {label} {frogs}\n")
        count += 1
    return count


def read_edge_list(stream: TextIO) -> tuple[ExplicitTree, dict[Vertex, VertexLabel], dict[Vertex, int]]:
    """Inverse of write_edge_list: the tree, its labels and its frog counts."""
    edges: list[tuple[Vertex, Vertex]] = []
    labels: dict[Vertex, VertexLabel] = {}
    counts: dict[Vertex, int] = {}
    for number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DomainError(f"line {number}: expected 4 fields, got {len(parts)}")
        parent, child, label, frogs = parts
        v = parse_vertex_id(child)
        if parent != NO_PARENT:
            edges.append((parse_vertex_id(parent), v))
        try:
            labels[v] = VertexLabel(label)
            counts[v] = int(frogs)
        except ValueError as exc:
            raise DomainError(f"line {number}: {exc}") from exc
    if ROOT not in counts:
        raise DomainError("edge list has no root line")
    tree = ExplicitTree.from_edges(edges)
    tree.labels.update(labels)
    return tree, labels, counts
