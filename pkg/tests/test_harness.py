import numpy as np
import pytest

from discwalk.harness import (
    RESULTS_HEADER,
    ExperimentConfig,
    cli_main,
    run_experiment,
    write_results,
)
from discwalk.instance import parse_instance
from discwalk.walk import WalkConfig


def fast_walk():
    return WalkConfig(svd_mode="exact")


class TestRunExperiment:
    def test_row_count_single_cell(self):
        cfg = ExperimentConfig(
            algs=("random",), cells=((16, 2),), seeds=(0, 1, 2),
            walk=fast_walk(),
        )
        rows = run_experiment(cfg)
        assert len(rows) == 3

    def test_grid_arithmetic(self):
        cfg = ExperimentConfig(
            algs=("random", "beckfiala"),
            cells=((16, 2), (24, 2)),
            seeds=(0, 1),
            walk=fast_walk(),
        )
        rows = run_experiment(cfg)
        assert len(rows) == 2 * 2 * 2

    def test_rerun_identical_modulo_runtime(self):
        cfg = ExperimentConfig(
            algs=("random", "gsw"), cells=((20, 3),), seeds=(0, 1),
            walk=fast_walk(),
        )
        a = run_experiment(cfg)
        b = run_experiment(cfg)

        def strip_runtime(row):
            vals = row.csv_row().split(",")
            return vals[:6] + vals[7:]  # runtime_ms is column 7

        assert [strip_runtime(r) for r in a] == [strip_runtime(r) for r in b]

    def test_shared_instance_across_algorithms(self):
        # Same (n, k, seed) cell: all algorithms see the same instance, so a
        # brute-force-small comparison is meaningful.
        cfg = ExperimentConfig(
            algs=("random", "beckfiala", "gsw"),
            cells=((14, 2),), seeds=(3,), walk=fast_walk(),
        )
        rows = run_experiment(cfg)
        assert len({(r.n, r.k, r.seed) for r in rows}) == 1

    def test_workers_match_serial(self):
        cfg_serial = ExperimentConfig(
            algs=("random", "beckfiala"), cells=((16, 2),), seeds=(0, 1),
            walk=fast_walk(), workers=1,
        )
        cfg_pool = ExperimentConfig(
            algs=("random", "beckfiala"), cells=((16, 2),), seeds=(0, 1),
            walk=fast_walk(), workers=2,
        )
        a = run_experiment(cfg_serial)
        b = run_experiment(cfg_pool)
        assert [(r.alg, r.seed, r.disc) for r in a] == [
            (r.alg, r.seed, r.disc) for r in b
        ]

    def test_results_csv(self, tmp_path):
        out = tmp_path / "res.csv"
        cfg = ExperimentConfig(
            algs=("random",), cells=((12, 2),), seeds=(0,),
            walk=fast_walk(), out_path=str(out),
        )
        run_experiment(cfg)
        lines = out.read_text().splitlines()
        assert lines[0] == RESULTS_HEADER
        assert len(lines) == 2

    def test_empty_grid_rejected(self):
        cfg = ExperimentConfig(algs=("random",), cells=(), seeds=(0,))
        with pytest.raises(ValueError):
            run_experiment(cfg)

    def test_walk_telemetry_files(self, tmp_path):
        cfg = ExperimentConfig(
            algs=("walk",), cells=((16, 2),), seeds=(0,),
            walk=fast_walk(), telemetry_dir=str(tmp_path),
        )
        run_experiment(cfg)
        files = list(tmp_path.glob("telemetry_walk_*.csv"))
        assert len(files) == 1


class TestCli:
    def test_gen_solve_oracle_round_trip(self, tmp_path, capsys):
        inst_path = tmp_path / "inst.di"
        assert cli_main([
            "gen", "--n", "12", "--k", "2", "--seed", "3",
            "--out", str(inst_path),
        ]) == 0
        parse_instance(inst_path.read_text())
        out_path = tmp_path / "x.txt"
        tel_path = tmp_path / "tel.csv"
        code = cli_main([
            "solve", "--alg", "walk", "--input", str(inst_path),
            "--seed", "1", "--out", str(out_path),
            "--telemetry", str(tel_path), "--svd", "exact",
        ])
        assert code == 0
        assert out_path.exists() and tel_path.exists()
        lines = out_path.read_text().splitlines()
        assert len(lines) == 12
        idx, val = lines[0].split()
        assert idx == "0" and float(val) in (-1.0, 1.0)
        assert cli_main(["oracle", "--input", str(inst_path)]) == 0
        captured = capsys.readouterr()
        assert captured.out.strip().splitlines()[-1].isdigit()

    def test_unknown_flag_exits_2(self):
        assert cli_main(["solve", "--definitely-not-a-flag"]) == 2

    def test_missing_command_exits_2(self):
        assert cli_main([]) == 2

    def test_bench_writes_csv(self, tmp_path):
        out = tmp_path / "res.csv"
        code = cli_main([
            "bench", "--algs", "random,beckfiala", "--n", "12,16",
            "--k", "2", "--seeds", "2", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == RESULTS_HEADER
        assert len(lines) == 1 + 2 * 2 * 2

    def test_config_file_flags_win(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("n=12\nk=2\nseeds=1\nalgs=random\n")
        out = tmp_path / "res.csv"
        code = cli_main([
            "bench", "--config", str(cfg_file), "--out", str(out),
            "--seeds", "2",  # explicit flag beats the config value
        ])
        assert code == 0
        assert len(out.read_text().splitlines()) == 1 + 2

    def test_solve_generated_instance(self, capsys):
        code = cli_main([
            "solve", "--alg", "beckfiala", "--n", "16", "--k", "2",
            "--seed", "0",
        ])
        assert code == 0
        assert "disc=" in capsys.readouterr().out

    def test_verify_passes_small(self, capsys):
        code = cli_main([
            "verify", "--n", "36", "--k", "3", "--seed", "0", "--plans", "2",
        ])
        out = capsys.readouterr().out
        assert code == 0, out
        assert "PASS" in out
        assert "FAIL" not in out
