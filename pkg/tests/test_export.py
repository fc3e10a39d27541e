"""Tests for CSV tables, edge lists and plot data."""

import csv
import io

import pytest

from frogsim import __version__
from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import Termination, VertexLabel
from frogsim.errors import DomainError
from frogsim.export import (
    COUPLED_COLUMNS,
    SIM_COLUMNS,
    SWEEP_COLUMNS,
    metadata_lines,
    parse_vertex_id,
    read_edge_list,
    real,
    vertex_id,
    write_edge_list,
    write_plot_data,
    write_sim_csv,
    write_sweep_csv,
    write_table,
)
from frogsim.gw_trees import label_stretches, sample_tree
from frogsim.simulators import CoupledReport, SimReport
from frogsim.transience_search import SearchRecord


def _data_lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if not line.startswith("#")]


def _report(**overrides) -> SimReport:
    fields = dict(seed=7, steps=3, nu=2, trajectory=(1, 2, 4, 3), wakeups=3, termination=Termination.STEP_CAP)
    fields.update(overrides)
    return SimReport(**fields)


class TestFormatting:
    def test_real(self):
        assert real(None) == ""
        assert real(0.1) == "0.1"
        assert real(1 / 3) == "0.333333333333"

    def test_metadata(self):
        lines = metadata_lines({"b": 1, "a": 2}, [3, 4], extra={"k_max": 64})
        assert lines[0] == f"# tool: frogsim {__version__}"
        assert lines[1] == '# config: {"a": 2, "b": 1}'
        assert lines[2] == "# seeds: 3,4"
        assert lines[3] == "# generator: numpy.random.Philox"
        assert lines[4] == "# k_max: 64"

    def test_metadata_without_seeds(self):
        assert "# seeds: none" in metadata_lines()


class TestVertexIds:
    @pytest.mark.parametrize("v,text", [((), "r"), ((0,), "r.0"), ((2, 0, 11), "r.2.0.11")])
    def test_ids(self, v, text):
        assert vertex_id(v) == text
        assert parse_vertex_id(text) == v

    @pytest.mark.parametrize("text", ["", "x.0", "r.a", "r..1"])
    def test_malformed(self, text):
        with pytest.raises(DomainError):
            parse_vertex_id(text)


class TestEdgeList:
    def test_homogeneous_window(self):
        tree = sample_tree(OffspringDistribution.point(3), 5, depth_horizon=2)
        label_stretches(tree, 2)
        stream = io.StringIO()
        count = write_edge_list(stream, tree, FrogInit.point(1), 2, metadata_lines())
        lines = _data_lines(stream.getvalue())
        assert count == len(lines) == 13
        assert lines[0] == "- r n 1"
        assert lines[1] == "r r.0 n 1"

    def test_read_back(self):
        dist = OffspringDistribution.from_mapping({0: 0.2, 1: 0.4, 2: 0.4})
        init = FrogInit.from_mapping({0: 0.5, 2: 0.5})
        tree = sample_tree(dist, 11, depth_horizon=5)
        label_stretches(tree, 5)
        stream = io.StringIO()
        write_edge_list(stream, tree, init, 5, metadata_lines())
        stream.seek(0)
        read, labels, counts = read_edge_list(stream)
        assert set(read.vertices) == set(tree.walk(5))
        assert read.edges() == tree.edges(5)
        for v in read.vertices:
            assert counts[v] == tree.frog_count(v, init)
            assert labels[v] == tree.labels[v]

    def test_count_override(self):
        tree = sample_tree(OffspringDistribution.point(1), 0, depth_horizon=1)
        stream = io.StringIO()
        write_edge_list(stream, tree, FrogInit.point(1), 1, counts={(): 5, (0,): 0})
        assert _data_lines(stream.getvalue()) == ["- r unlabeled 5", "r r.0 unlabeled 0"]

    @pytest.mark.parametrize(
        "text",
        ["r r.0 n 1\n", "- r n 1\nr r.0 n\n", "- r zz 1\n", "- r n one\n"],
    )
    def test_bad_input(self, text):
        with pytest.raises(DomainError):
            read_edge_list(io.StringIO(text))

    def test_labels_survive(self):
        stream = io.StringIO("# comment\n- r n 0\nr r.0 bs 2\nr.0 r.0.0 es 0\n")
        tree, labels, counts = read_edge_list(stream)
        assert labels[(0,)] == VertexLabel.BEGIN_STRETCH
        assert tree.labels[(0, 0)] == VertexLabel.END_STRETCH
        assert counts == {(): 0, (0,): 2, (0, 0): 0}


class TestTables:
    def test_simulation_csv(self):
        stream = io.StringIO()
        write_sim_csv(stream, [_report(), _report(seed=8, termination=Termination.PARTICLE_CAP)], ["# x: y"])
        rows = list(csv.reader(_data_lines(stream.getvalue())))
        assert tuple(rows[0]) == SIM_COLUMNS
        assert rows[1] == ["7", "3", "2", "4", "3", "step_cap"]
        assert rows[2][-1] == "particle_cap"
        assert stream.getvalue().startswith("# x: y\n")

    def test_empty_simulation_csv_has_a_header(self):
        stream = io.StringIO()
        write_sim_csv(stream, [])
        assert stream.getvalue() == ",".join(SIM_COLUMNS) + "\n"

    def test_coupled_csv(self):
        fm = _report()
        bmc = _report(nu=5, trajectory=(1, 3, 6, 9), wakeups=0)
        stream = io.StringIO()
        write_sim_csv(stream, [CoupledReport(fm=fm, bmc=bmc, incomparable=False)], coupled=True)
        rows = list(csv.reader(_data_lines(stream.getvalue())))
        assert tuple(rows[0]) == COUPLED_COLUMNS
        assert rows[1] == ["7", "3", "2", "5", "4", "9", "3", "step_cap", "0", "1"]

    def test_sweep_csv_blanks_uncertified_points(self):
        records = [
            SearchRecord(p1=0.01, p0=0.0, c_d=9, N=1, eta_bar=0.05, mu_bar=1.1,
                         c1=True, c2=True, c3=True, c4=True, c5=True),
            SearchRecord(p1=0.02, p0=0.0, c_d=None),
        ]
        stream = io.StringIO()
        write_sweep_csv(stream, records, warnings=["c_d decreases"])
        text = stream.getvalue()
        rows = list(csv.reader(_data_lines(text)))
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert rows[1] == ["0.01", "0", "9", "1", "0.05", "1.1", "1", "1", "1", "1", "1"]
        assert rows[2] == ["0.02", "0", "", "", "", "", "0", "0", "0", "0", "0"]
        assert text.endswith("# warnings:\n#   c_d decreases\n")

    def test_plot_data(self):
        stream = io.StringIO()
        write_plot_data(stream, [SearchRecord(p1=0.5, p0=0.0, c_d=None), SearchRecord(p1=0.25, p0=0.0, c_d=12)])
        assert stream.getvalue().splitlines() == ["# p1 c_d", "0.5 nan", "0.25 12"]

    def test_generic_table(self):
        stream = io.StringIO()
        write_table(stream, ("N", "value", "note"), [[3, 0.5, None], [4, 2 / 3, "divergent"]])
        assert stream.getvalue().splitlines() == ["N,value,note", "3,0.5,", "4,0.666666666667,divergent"]
