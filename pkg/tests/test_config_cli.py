import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from romsn.cli import main
from romsn.config import RunConfig, emit_config, parse_config, parse_text, with_overrides
from romsn.errors import ConfigError


class TestConfig:
    def test_defaults(self):
        cfg = parse_text("[problem]\nbenchmark = slab-case-1\n")
        assert cfg.tol == 1e-10
        assert cfg.delta == 0.0
        assert cfg == RunConfig()

    def test_sigma_constraint(self):
        text = "[problem]\nbenchmark = custom\nsigma_t = 1.0\nsigma_s = 2.0\n"
        with pytest.raises(ConfigError, match="sigma_t > sigma_s") as info:
            parse_text(text)
        assert info.value.key == "sigma_s"
        assert info.value.line == 4

    def test_unknown_key_line(self):
        with pytest.raises(ConfigError) as info:
            parse_text("[grid]\ncells = 10\ncels = 20\n")
        assert info.value.key == "cels"
        assert info.value.line == 3

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_text("[solvers]\ntol = 1e-9\n")

    def test_type_mismatch(self):
        with pytest.raises(ConfigError, match="expected int") as info:
            parse_text("[ensemble]\n\nsamples = many\n")
        assert info.value.line == 3

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[ensemble]\nseed = 3\n")
        assert parse_config(path, {"seed": 11}).seed == 11
        assert parse_config(path).seed == 3

    def test_odd_slab_partition(self):
        with pytest.raises(ConfigError):
            parse_text("[quadrature]\nkind = rom\nlevel = 5\n")

    def test_with_overrides_validates(self):
        with pytest.raises(ConfigError):
            with_overrides(RunConfig(), g=2.0)

    @given(
        st.builds(
            RunConfig,
            g=st.floats(-1, 1),
            sigma_t=st.floats(1.0, 10.0),
            sigma_s=st.floats(0.0, 0.99),
            cells=st.integers(1, 400),
            level=st.integers(1, 40).map(lambda v: 2 * v),
            delta=st.floats(0.0, 0.5),
            tol=st.floats(1e-14, 1e-3),
            seed=st.integers(0, 2**63 - 1),
            samples=st.integers(1, 10**6),
            psi=st.booleans(),
            dir=st.text("abcdefgh-_/", min_size=1, max_size=12),
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_round_trip(self, cfg):
        assert parse_text(emit_config(cfg)) == cfg


def _run(args):
    return main([str(a) for a in args])


class TestCli:
    def test_quad_csv(self, capsys):
        assert main(["quad", "--quadrature", "gauss", "--M", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "index,mu_or_c,s,zeta,theta,weight"
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 4
        assert all(r[2:5] == ["", "", ""] for r in rows)
        assert sum(float(r[5]) for r in rows) == pytest.approx(1.0, abs=1e-12)
        assert float(rows[3][1]) == pytest.approx(np.sqrt(3 / 7 + 2 / 7 * np.sqrt(6 / 5)), abs=1e-15)

    def test_quad_xy(self, tmp_path):
        out = tmp_path / "q.csv"
        assert main(["quad", "--geometry", "xy", "--quadrature", "uniform", "--N", "2", "-o", str(out)]) == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (16, 6)
        np.testing.assert_allclose(data[:, 1] ** 2 + data[:, 2] ** 2 + data[:, 3] ** 2, 1.0, atol=1e-12)

    def test_solve_slab_outputs(self, tmp_path):
        out = tmp_path / "s"
        assert _run(["solve", "--M", 8, "--grid", 20, "--psi", "--out", out]) == 0
        phi = np.loadtxt(out / "phi.csv", delimiter=",", skiprows=1)
        assert phi.shape == (21, 2)
        psi = np.loadtxt(out / "psi.csv", delimiter=",", skiprows=1)
        assert psi.shape == (16 * 21, 3)
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["level"] == 8

    def test_seed_override_in_manifest(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[ensemble]\nseed = 1\nsamples = 4\n[quadrature]\nlevel = 4\n")
        out = tmp_path / "e"
        assert _run(["ensemble", "--config", ini, "--seed", 99, "--reference", "uniform:64", "--out", out]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["seed"] == 99
        assert man["config"]["seed"] == 99

    def test_rerun_from_emitted_config(self, tmp_path):
        first = tmp_path / "a"
        assert _run(["ensemble", "--cells", 4, "--samples", 6, "--seed", 5, "--reference", "uniform:64",
                     "--out", first]) == 0
        second = tmp_path / "b"
        assert _run(["ensemble", "--config", first / "config.ini", "--out", second]) == 0
        for name in ("mean.csv", "metrics.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_metrics_rows_append(self, tmp_path):
        out = tmp_path / "m"
        for n in (2, 4):
            assert _run(["ensemble", "--cells", n, "--samples", 3, "--reference", "uniform:64", "--out", out]) == 0
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0] == "t,n,error,bias,mean_variance"
        assert [line.split(",")[1] for line in lines[1:]] == ["2", "4"]

    def test_config_error_exit(self, tmp_path, capsys):
        ini = tmp_path / "bad.ini"
        ini.write_text("[problem]\nbenchmark = custom\nsigma_s = 3\n")
        assert _run(["solve", "--config", ini, "--out", tmp_path / "x"]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_unknown_key_exit(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[grid]\nrows = 3\n")
        assert _run(["solve", "--config", ini]) == 2

    def test_nonconvergence_exit(self, tmp_path):
        assert _run(["solve", "--max-iters", 2, "--out", tmp_path / "n"]) == 3

    def test_oracle(self, tmp_path):
        out = tmp_path / "o"
        assert _run(["oracle", "--panels", 1024, "--out", out]) == 0
        data = np.loadtxt(out / "oracle.csv", delimiter=",", skiprows=1)
        assert data.shape == (51, 2)
        assert _run(["oracle", "--benchmark", "slab-case-1", "--g", 0.5, "--out", out]) == 2

    def test_convergence_slab(self, tmp_path):
        out = tmp_path / "c"
        assert _run(["benchmark", "slab-case-3", "--convergence", "--levels", "10,20,40",
                     "--reference", "uniform:320", "--out", out]) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[0] == "resolution,error,bias,order_fit,order_endpoint"
        assert len(lines) == 4
        order = float(lines[1].split(",")[3])
        assert order == pytest.approx(1.0, abs=0.25)

    def test_center_source_rays(self, tmp_path):
        out = tmp_path / "r"
        assert _run(["benchmark", "center-source", "--out", out]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["profile_relative_variation"] > 0.1
        assert (out / "phi.pgm").read_bytes().startswith(b"P5\n100 100\n255\n")
        heat = np.loadtxt(out / "phi.csv", delimiter=",")
        assert heat.shape == (100, 100)
        np.testing.assert_allclose(heat, heat.T, rtol=1e-10)

    def test_lattice_rom_reduces_variation(self, tmp_path):
        # one 50-sample mean still carries visible noise, so compare the typical seed
        def variation(out):
            return json.loads((out / "manifest.json").read_text())["profile_relative_variation"]

        common = ["--grid", 50, "--reference", "gauss:4"]
        dom = tmp_path / "dom"
        assert _run(["benchmark", "lattice", *common, "--out", dom]) == 0
        roms = []
        for seed in range(5):
            out = tmp_path / f"rom{seed}"
            args = ["benchmark", "lattice", "--rom", "--samples", 50, "--N", 1, "--seed", seed]
            assert _run([*args, *common, "--out", out]) == 0
            roms.append(variation(out))
        assert variation(dom) >= 2 * np.median(roms)
