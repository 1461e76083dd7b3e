import csv
import math

import pytest

from dampwave.cli import main, read_config, ConfigError

SMALL = ["--grid", "64", "--tmax", "3", "--samples", "8"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestValidateSpecfun:
    def test_default_passes(self, tmp_path, capsys):
        out = tmp_path / "v.csv"
        assert main(["validate-specfun", "--samples", "50", "--out", str(out)]) == 0
        table = {r["check"]: r for r in rows(out)}
        assert float(table["wronskian"]["worst"]) <= 1e-9
        assert all(r["status"] == "pass" for r in table.values())

    def test_unattainable_tolerance(self, capsys):
        assert main(["validate-specfun", "--samples", "20", "--tol", "1e-30"]) == 1
        assert "wronskian" in capsys.readouterr().err

    def test_zero_samples(self, capsys):
        assert main(["validate-specfun", "--samples", "0"]) == 2
        assert "samples" in capsys.readouterr().err


class TestConfig:
    @pytest.mark.parametrize("argv, word", [
        (["linear-decay", "--mu", "3.5"], "mu"),
        (["linear-decay", "--mu", "2.0"], "mu"),
        (["nonlinear", "--p", "2"], "p must be > 2"),
        (["nonlinear", "--eps", "-1"], "eps must be >= 0"),
        (["nonlinear", "--eps1", "0.5"], "eps1 must be <"),
        (["nonlinear", "--eps1", "1.5"], "eps1"),
        (["linear-decay", "--grid", "100"], "power of two"),
        (["linear-decay", "--tmax", "30", "--domain", "20"], "L=20"),
        (["linear-decay", "--case", "wobbly"], "case"),
        (["phase-scan", "--mu-range", "2.1:2.9"], "a:b:n"),
        (["phase-scan", "--mu-range", "1.5:2.9:3"], "mu"),
    ])
    def test_bounds_named(self, argv, word, capsys):
        assert main(argv) == 2
        assert word in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["linear-decay", "--bogus", "1"]) == 2

    def test_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nmu = 2.3\ngrid = 64\ntmax = 3\nsamples = 9\n", encoding="utf-8")
        assert read_config(cfg) == {"mu": 2.3, "grid": 64, "tmax": 3.0, "samples": 9}
        out = tmp_path / "a.csv"
        assert main(["linear-decay", "--config", str(cfg), "--samples", "5",
                     "--out", str(out)]) == 0
        assert len(rows(out)) == 5 + 1  # the t = 2 anchor is added
        bad = tmp_path / "bad.cfg"
        bad.write_text("colour = red\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            read_config(bad)
        assert main(["linear-decay", "--config", str(bad)]) == 2
        assert main(["linear-decay", "--config", str(tmp_path / "missing.cfg")]) == 2


class TestLinearDecay:
    def test_columns_and_monotone_time(self, tmp_path):
        out = tmp_path / "lin.csv"
        assert main(["linear-decay", *SMALL, "--out", str(out)]) == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        header = raw.split(b"\n", 1)[0].decode()
        assert header == "t,norm_Z12,norm_dZ12,energy,linf,ks_ratio,zone_a1,zone_a2,zone_a3"
        t = [float(r["t"]) for r in rows(out)]
        assert all(b > a for a, b in zip(t, t[1:]))
        assert (tmp_path / "lin.svg").read_text().startswith("<svg")

    def test_zero_data(self, tmp_path):
        out = tmp_path / "z.csv"
        assert main(["linear-decay", *SMALL, "--case", "zero", "--out", str(out)]) == 0
        for r in rows(out):
            assert all(float(r[k]) == 0.0 for k in r if k != "t")

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["linear-decay", *SMALL, "--out", str(a)])
        main(["linear-decay", *SMALL, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_floats_round_trip(self, tmp_path):
        out = tmp_path / "lin.csv"
        main(["linear-decay", *SMALL, "--out", str(out)])
        for r in rows(out):
            for v in r.values():
                assert repr(float(v)) == v


class TestInhomogeneous:
    def test_zero_source(self, tmp_path):
        out = tmp_path / "i.csv"
        assert main(["inhomogeneous", "--grid", "64", "--tmax", "9", "--samples", "4",
                     "--case", "zero", "--out", str(out)]) == 0
        assert all(float(r["norm_Z12"]) == 0.0 for r in rows(out))

    def test_taus_present(self, tmp_path):
        out = tmp_path / "i.csv"
        assert main(["inhomogeneous", "--grid", "64", "--tmax", "9", "--samples", "4",
                     "--out", str(out)]) == 0
        taus = sorted({float(r["tau"]) for r in rows(out)})
        assert taus == [1.0, 2.0, 4.0, 8.0]


class TestNonlinear:
    def test_converges(self, tmp_path):
        out = tmp_path / "n.csv"
        assert main(["nonlinear", *SMALL, "--out", str(out)]) == 0
        table = rows(out)
        assert list(table[0]) == ["iter", "diff_xnorm", "ratio", "xnorm"]
        assert [int(r["iter"]) for r in table] == list(range(1, len(table) + 1))

    def test_eps_zero_one_iteration(self, tmp_path):
        out = tmp_path / "n.csv"
        assert main(["nonlinear", *SMALL, "--eps", "0", "--out", str(out)]) == 0
        assert len(rows(out)) == 1

    def test_large_eps_diverges(self, tmp_path):
        out = tmp_path / "n.csv"
        assert main(["nonlinear", *SMALL, "--eps", "10", "--out", str(out)]) == 3
        assert len(rows(out)) >= 1  # rows streamed before the verdict


class TestPhaseScan:
    def test_grid_complete(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["phase-scan", *SMALL, "--mu-range", "2.3:2.7:2", "--p-range", "2.5:3:2",
                     "--out", str(out)]) == 0
        table = rows(out)
        assert list(table[0]) == ["mu", "p", "eps", "status", "iters", "xnorm_final"]
        cells = {(float(r["mu"]), float(r["p"])) for r in table}
        assert cells == {(2.3, 2.5), (2.3, 3.0), (2.7, 2.5), (2.7, 3.0)}
        assert all(r["status"] == "converged" for r in table)

    def test_single_cell_matches_nonlinear(self, tmp_path):
        scan, single = tmp_path / "p.csv", tmp_path / "n.csv"
        main(["phase-scan", *SMALL, "--mu-range", "2.5:2.5:1", "--p-range", "2.5:2.5:1",
              "--out", str(scan)])
        main(["nonlinear", *SMALL, "--out", str(single)])
        cell = rows(scan)[0]
        last = rows(single)[-1]
        assert int(cell["iters"]) == int(last["iter"])
        assert math.isclose(float(cell["xnorm_final"]), float(last["xnorm"]), rel_tol=0, abs_tol=0)
