"""Configuration parsing/round-trip and the command-line contract."""

import csv
import json
import os

import numpy as np
import pytest

from fuzzyvar import catalog
from fuzzyvar.cli import main
from fuzzyvar.config import ConfigError, dump_config, parse_config

MINIMAL = """\
# comment line
[problem]
a = 0
b = 1
nodes = 50
levels = 5

[lagrangian]
L_lower = vl^2
L_upper = vu^2

[boundary]
q_a = 0,0,0
q_b = 1,1,1

[generator]
zeta_lower = 1
zeta_upper = 1
"""


class TestConfigParsing:
    def test_minimal_parses(self):
        cfg = parse_config(MINIMAL)
        assert cfg.a == 0.0 and cfg.b == 1.0
        assert cfg.nodes == 50 and cfg.levels == 5
        assert not cfg.is_delayed

    def test_round_trip_identity(self):
        cfg = parse_config(MINIMAL)
        assert parse_config(dump_config(cfg)) == cfg

    def test_round_trip_with_delay_and_tau(self):
        text = catalog.entry("delayed_smoke").config_text
        cfg = parse_config(text)
        assert cfg.is_delayed
        assert parse_config(dump_config(cfg)) == cfg
        cfg2 = parse_config(catalog.entry("paper_example").config_text)
        assert cfg2.tau is not None
        assert parse_config(dump_config(cfg2)) == cfg2

    def test_bad_value_reports_line(self):
        broken = MINIMAL.replace("b = 1", "b = one")
        with pytest.raises(ConfigError) as err:
            parse_config(broken)
        assert err.value.line == 4

    def test_unknown_key_reports_line(self):
        broken = MINIMAL.replace("a = 0", "alpha = 0")
        with pytest.raises(ConfigError) as err:
            parse_config(broken)
        assert "alpha" in str(err.value)
        assert err.value.line == 3

    def test_missing_section(self):
        with pytest.raises(ConfigError) as err:
            parse_config("[problem]\na = 0\nb = 1\nnodes = 10\n")
        assert "lagrangian" in str(err.value)

    def test_unordered_triangular_rejected(self):
        broken = MINIMAL.replace("q_a = 0,0,0", "q_a = 2,1,0")
        with pytest.raises(ConfigError):
            parse_config(broken)

    def test_expression_error_reports_line(self):
        broken = MINIMAL.replace("L_lower = vl^2", "L_lower = vl^^2")
        with pytest.raises(ConfigError) as err:
            parse_config(broken)
        assert err.value.line == 9

    def test_build_produces_problem(self):
        problem, generator = parse_config(MINIMAL).build()
        assert problem.xs.size == 51
        assert len(problem.grid) == 5
        assert generator.tau is None


class TestCatalog:
    def test_names(self):
        assert set(catalog.names()) == {"paper_example", "free_particle", "delayed_smoke"}

    def test_paper_example_description_cites_generator(self):
        assert "(2x ln x, q)" in catalog.entry("paper_example").description

    def test_all_entries_parse(self):
        for name in catalog.names():
            cfg = catalog.load(name)
            cfg.build()


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


class TestCli:
    def test_list_names_catalog(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "paper_example" in out and "(2x ln x, q)" in out

    def test_run_free_particle(self, tmp_path, capsys):
        code = main(["run", "free_particle", "--out", str(tmp_path)])
        assert code == 0
        header, rows = read_csv(tmp_path / "extremal.csv")
        assert header == ["r", "x", "q_lower", "q_upper", "v_lower", "v_upper"]
        assert len(rows) == 11 * 401
        header, rows = read_csv(tmp_path / "conserved.csv")
        assert header == ["r", "x", "C_lower", "C_upper"]
        assert len(rows) == 11 * 401
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["exit_status"] == 0
        assert payload["stages"]["conservation"]["verdict"] is True

    def test_run_delayed_smoke_zero_columns(self, tmp_path, capsys):
        code = main(["run", "delayed_smoke", "--out", str(tmp_path)])
        assert code == 0
        _, rows = read_csv(tmp_path / "conserved.csv")
        values = np.array([[float(r[2]), float(r[3])] for r in rows])
        np.testing.assert_array_equal(values, 0.0)

    def test_run_paper_example_full(self, tmp_path, capsys):
        code = main(["run", "paper_example", "--out", str(tmp_path)])
        assert code == 0
        _, rows = read_csv(tmp_path / "conserved.csv")
        assert len(rows) == 11 * 2002
        # per-level blocks hold near-constant columns: 2*A_r*B_r with B_r = 1
        block = rows[:2002]
        c = np.array([float(r[2]) for r in block])
        assert np.max(np.abs(c - c.mean())) <= 1e-4
        report = (tmp_path / "report.txt").read_text()
        assert "notes:" in report

    def test_require_invariance_fails_with_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "noninv.cfg"
        cfg.write_text(
            catalog.entry("paper_example").config_text.replace("tau = 2*x*ln(x)\n", "")
            .replace("nodes = 2001", "nodes = 301")
        )
        code = main(
            ["run", str(cfg), "--require-invariance", "--stages", "solve,invariance",
             "--out", str(tmp_path / "out")]
        )
        assert code == 2
        report = (tmp_path / "out" / "report.txt").read_text()
        assert "failed slope fit" in report

    def test_parse_error_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("[problem]\na = zero\n")
        assert main(["run", str(cfg)]) == 1

    def test_missing_file_exits_1(self, capsys):
        assert main(["run", "no_such_entry"]) == 1

    def test_dump_config_round_trip(self, tmp_path, capsys):
        assert main(["run", "paper_example", "--dump-config"]) == 0
        dumped = capsys.readouterr().out
        assert parse_config(dumped) == catalog.load("paper_example")

    def test_nodes_levels_overrides(self, tmp_path, capsys):
        code = main(
            ["run", "free_particle", "--nodes", "100", "--levels", "3", "--out", str(tmp_path)]
        )
        assert code == 0
        _, rows = read_csv(tmp_path / "extremal.csv")
        assert len(rows) == 3 * 101

    def test_stage_subset_skips_conserved_output(self, tmp_path, capsys):
        code = main(["run", "free_particle", "--stages", "solve", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "extremal.csv").exists()
        assert not (tmp_path / "conserved.csv").exists()

    def test_unknown_stage_exits_1(self, tmp_path, capsys):
        assert main(["run", "free_particle", "--stages", "bogus", "--out", str(tmp_path)]) == 1

    def test_csv_format_12_significant_digits(self, tmp_path, capsys):
        main(["run", "free_particle", "--nodes", "50", "--out", str(tmp_path)])
        _, rows = read_csv(tmp_path / "extremal.csv")
        # x column of the second row is 0.02: printed compactly, parses back
        assert float(rows[1][1]) == pytest.approx(0.02, rel=1e-12)
        for row in rows[:20]:
            for cell in row:
                float(cell)
