import json
import os
import subprocess
import sys

import pytest

from latticedrift.runner import ConfigError, parse_config


def run_cli(args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "latticedrift.cli"] + args,
        capture_output=True,
        text=True,
        env=env,
    )


class TestParseConfig:
    def test_minimal_spectrum_config_resolves_defaults(self):
        cfg = parse_config("kind: spectrum\nJx: 1\nJy: 1\nalpha: 0.1\nF: 0.3\n")
        assert cfg.kind == "spectrum"
        assert cfg.options["kappa_points"] == 64
        assert cfg.options["window_half"] is None
        assert cfg.fmt == "csv"

    def test_alpha_reduced_with_warning(self):
        cfg = parse_config("kind: spectrum\nalpha: 0.6\nF: 0.3\n")
        assert cfg.params.alpha == pytest.approx(-0.4)
        assert any("alpha reduced" in w for w in cfg.warnings)

    def test_unknown_key_rejected_with_line(self):
        with pytest.raises(ConfigError, match="line 2.*gamma"):
            parse_config("kind: spectrum\ngamma: 1\n")

    def test_flags_override_file(self):
        cfg = parse_config("kind: spectrum\nF: 0.3\nseed: 1\n", {"seed": 7})
        assert cfg.params.seed == 7

    def test_malformed_line_reported(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("just some words\n")

    def test_bad_type_reported(self):
        with pytest.raises(ConfigError, match="kappa_points"):
            parse_config("kind: spectrum\nF: 0.3\nkappa_points: many\n")

    def test_missing_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            parse_config("Jx: 1\n")


class TestCliRuns:
    def test_spectrum_run_writes_tables_and_manifest(self, tmp_path):
        out = str(tmp_path / "spec")
        r = run_cli(
            ["spectrum", "--out", out, "-p", "alpha=0.1", "-p", "F=0.3",
             "-p", "kappa_points=3", "-p", "window_half=15"]
        )
        assert r.returncode == 0, r.stderr
        names = sorted(os.listdir(out))
        assert "bands.csv" in names
        assert "config.resolved.txt" in names
        assert "manifest.json" in names
        man = json.load(open(os.path.join(out, "manifest.json")))
        assert man["kind"] == "spectrum"
        with open(os.path.join(out, "bands.csv")) as fh:
            header = fh.readline().strip()
        assert header == "kappa,nu,E,v,interior"

    def test_config_error_exit_code(self):
        r = run_cli(["spectrum", "-p", "gamma=1"])
        assert r.returncode == 2
        assert "unknown key" in r.stderr

    def test_runtime_error_exit_code(self, tmp_path):
        # detect=lines with an empty slope range cannot find any family
        r = run_cli(
            ["transport", "--out", str(tmp_path / "t"), "-p", "alpha=0.1",
             "-p", "F=0.3", "-p", "detect=lines", "-p", "slope_min=0.58",
             "-p", "slope_max=0.6", "-p", "n_kappa=16"]
        )
        assert r.returncode == 3
        assert "error" in r.stderr

    def test_unknown_figure_preset(self, tmp_path):
        r = run_cli(["spectrum", "--figure", "nope", "--out", str(tmp_path)])
        assert r.returncode == 2

    def test_ndjson_format(self, tmp_path):
        out = str(tmp_path / "nd")
        r = run_cli(
            ["classical-map", "--out", out, "--format", "ndjson",
             "-p", "alpha=0.1", "-p", "F=0.4", "-p", "n_periods=3",
             "-p", "seeds_per_axis=2", "-p", "probe_island=false"]
        )
        assert r.returncode == 0, r.stderr
        with open(os.path.join(out, "sections.ndjson")) as fh:
            row = json.loads(fh.readline())
        assert set(row) == {"seed", "strobe", "x", "p"}

    def test_rerun_byte_identical(self, tmp_path):
        args = ["ensemble", "-p", "alpha=0.1", "-p", "F=3.0", "-p", "eps=0.5",
                "-p", "t_end=10", "-p", "n_phase=2", "-p", "n_disorder=2",
                "-p", "sigma_x=6", "--seed", "3"]
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert run_cli(args + ["--out", out1]).returncode == 0
        assert run_cli(args + ["--out", out2]).returncode == 0
        for name in ("series.csv", "density.csv", "exponents.csv", "fits.csv"):
            b1 = open(os.path.join(out1, name), "rb").read()
            b2 = open(os.path.join(out2, name), "rb").read()
            assert b1 == b2, name

    def test_thread_count_does_not_change_tables(self, tmp_path):
        args = ["evolve1d", "-p", "alpha=0.1", "-p", "F=0.3", "-p", "t_end=5",
                "-p", "packet=landau", "--seed", "1"]
        out1, out2 = str(tmp_path / "t1"), str(tmp_path / "t4")
        assert run_cli(args + ["--out", out1, "--threads", "1"]).returncode == 0
        assert run_cli(args + ["--out", out2, "--threads", "4"]).returncode == 0
        b1 = open(os.path.join(out1, "series.csv"), "rb").read()
        b2 = open(os.path.join(out2, "series.csv"), "rb").read()
        assert b1 == b2

    def test_resolved_config_contains_all_defaults(self, tmp_path):
        out = str(tmp_path / "r")
        r = run_cli(["classical-map", "--out", out, "-p", "alpha=0.1",
                     "-p", "F=0.4", "-p", "n_periods=2", "-p", "seeds_per_axis=2",
                     "-p", "probe_island=false"])
        assert r.returncode == 0
        text = open(os.path.join(out, "config.resolved.txt")).read()
        for key in ("kind", "Jx", "Jy", "alpha", "F", "eps", "seed", "dt",
                    "n_periods", "seeds_per_axis", "strobe_period"):
            assert f"{key}: " in text


class TestEmitTable:
    def test_csv_quoting_and_roundtrip(self, tmp_path):
        from latticedrift.io import emit_table

        path = str(tmp_path / "t.csv")
        emit_table(path, ("a", "b"), [(1.5, 'x,"y"'), (0.1 + 0.2, "plain")])
        lines = open(path).read().splitlines()
        assert lines[0] == "a,b"
        assert lines[1] == '1.5,"x,""y"""'
        assert lines[2] == "0.30000000000000004,plain"
        assert open(path).read().endswith("\n")

    def test_empty_rows_header_only(self, tmp_path):
        from latticedrift.io import emit_table

        path = str(tmp_path / "e.csv")
        emit_table(path, ("t", "sigma"), [])
        assert open(path).read() == "t,sigma\n"

    def test_unknown_format_rejected(self, tmp_path):
        from latticedrift.io import emit_table

        with pytest.raises(ValueError):
            emit_table(str(tmp_path / "x.tsv"), ("a",), [], fmt="tsv")
