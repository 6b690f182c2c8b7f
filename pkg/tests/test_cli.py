import json
import math

import pytest
from hypothesis import given, settings, strategies as st

import exitspec as es
from exitspec.cli import (
    ConfigError, SCHEMA, compare_spectra, default_config, emit_config,
    main, parse_config,
)


def run(args, tmp_path, config_text=None):
    argv = list(args)
    if config_text is not None:
        cfg = tmp_path / "run.cfg"
        cfg.write_text(config_text)
        argv += ["--config", str(cfg)]
    return main(argv + ["--out", str(tmp_path / "out")])


FAST_MOMENTS = """\
run.pipeline = moments
domain.type = interval
grid.h = 0.0078125
moments.n_max = 4
"""


class TestConfig:
    def test_emit_parse_round_trip(self):
        text = emit_config(default_config())
        assert parse_config(text) == default_config()
        assert emit_config(parse_config(text)) == text

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="line 2: unknown key"):
            parse_config("run.pipeline = moments\nbogus.key = 1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("grid.h = 0.1\ngrid.h = 0.2\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config("grid.h = tiny\n")

    def test_bad_choice(self):
        with pytest.raises(ConfigError, match="one of"):
            parse_config("domain.type = annulus\n")

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# a comment\n\nmc.paths = 7\n")
        assert cfg["mc.paths"] == 7

    @given(
        h=st.floats(1e-4, 0.5),
        paths=st.integers(1, 10 ** 7),
        t=st.floats(1e-6, 100.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_preserves_values(self, h, paths, t):
        cfg = default_config()
        cfg["grid.h"] = h
        cfg["mc.paths"] = paths
        cfg["mc.t"] = t
        back = parse_config(emit_config(cfg))
        assert back == cfg

    def test_schema_defaults_are_self_consistent(self):
        cfg = default_config()
        assert set(cfg) == set(SCHEMA)
        assert cfg["moments.n_max"] == 10
        assert cfg["spectrum.m"] == 8


class TestPipelines:
    def test_moments_pipeline(self, tmp_path):
        rc = run(["--pipeline", "moments"], tmp_path,
                 config_text=FAST_MOMENTS)
        assert rc == 0
        out = tmp_path / "out"
        man = json.loads((out / "manifest.json").read_text())
        assert man["pipeline"] == "moments"
        assert (out / "config.txt").exists()
        for name in man["outputs"]:
            assert (out / name).exists()
        ms = es.MomentSequence.from_csv(out / "moments.csv")
        assert ms.A[1] == pytest.approx(1 / 6, rel=1e-3)

    def test_dump_operator(self, tmp_path):
        rc = run(["--pipeline", "moments", "--dump-operator"], tmp_path,
                 config_text=FAST_MOMENTS)
        assert rc == 0
        assert (tmp_path / "out" / "operator.txt").exists()

    def test_spectrum_pipeline_analytic(self, tmp_path):
        rc = run(["--pipeline", "spectrum"], tmp_path, config_text=(
            "domain.type = interval\n"
            "spectrum.source = analytic\n"
            "spectrum.m = 5\n"))
        assert rc == 0
        sd = es.SpectralData.from_csv(tmp_path / "out" / "spectrum.csv")
        assert sd.lambdas()[0] == pytest.approx(math.pi ** 2, rel=1e-12)

    def test_invert_pipeline(self, tmp_path):
        rc = run(["--pipeline", "invert", "--precision", "extended"],
                 tmp_path, config_text=(
            "domain.type = interval\n"
            "moments.n_max = 9\n"
            "invert.source = analytic\n"
            "invert.p = 5\n"))
        assert rc == 0
        am = es.AtomicMeasure.from_csv(tmp_path / "out" / "atoms.csv")
        assert am.p == 5
        assert am.atoms[0][0] == pytest.approx(2 / math.pi ** 2, rel=1e-9)
        inv = json.loads((tmp_path / "out" / "inversion.json").read_text())
        assert inv["diagnostics"]["p_effective"] == 5
        assert inv["psd"]["pass"]

    def test_heat_pipeline(self, tmp_path):
        rc = run(["--pipeline", "heat"], tmp_path, config_text=(
            "domain.type = interval\n"
            "grid.h = 0.015625\n"
            "heat.t_min = 0.001\n"
            "heat.t_max = 0.01\n"
            "heat.samples = 10\n"))
        assert rc == 0
        out = tmp_path / "out"
        assert (out / "heat_timestep.csv").exists()
        # interval has an analytic spectrum, so the spectral curve comes too
        assert (out / "heat_spectral.csv").exists()
        fitfile = out / "fit.csv"
        assert fitfile.exists()

    def test_mc_pipeline_seed_override(self, tmp_path):
        cfg_text = ("domain.type = interval\n"
                    "mc.paths = 300\n"
                    "mc.dt = 0.001\n"
                    "mc.x0 = 0.5\n")
        rc = run(["--pipeline", "mc", "--seed", "99"], tmp_path,
                 config_text=cfg_text)
        assert rc == 0
        out = tmp_path / "out"
        man = json.loads((out / "manifest.json").read_text())
        assert man["seed"] == 99
        est = json.loads((out / "mc_estimates.json").read_text())
        assert "philox" in json.dumps(est)
        assert (out / "mc_samples.csv").exists()

    def test_verify_pipeline(self, tmp_path):
        rc = run(["--pipeline", "verify"], tmp_path, config_text=(
            "domain.type = interval\n"
            "grid.h = 0.0078125\n"
            "verify.n_max = 4\n"
            "verify.tol = 0.001\n"))
        assert rc == 0
        rep = json.loads(
            (tmp_path / "out" / "verify.json").read_text())
        assert rep["max_rel_err"] < 1e-3

    def test_perturb_pipeline(self, tmp_path):
        rc = run(["--pipeline", "perturb"], tmp_path, config_text=(
            "domain.type = polygon\n"
            "domain.vertices = 0,0;1,0;1,1;0,1\n"
            "grid.h = 0.03125\n"
            "spectrum.m = 4\n"
            "perturb.eps = 0.07\n"
            "perturb.f = -1,0.6,1,-0.2\n"))
        assert rc == 0
        rep = json.loads(
            (tmp_path / "out" / "perturb_report.json").read_text())
        # the asymmetric vertex move gives every cluster real weight
        assert rep["holds"]
        assert rep["violators"] == []
        assert rep["eps"] == 0.07
        assert rep["volume"] == pytest.approx(1.0, rel=0.1)
        assert (tmp_path / "out" / "perturbed_vertices.csv").exists()
        sd = es.SpectralData.from_csv(
            tmp_path / "out" / "perturbed_spectrum.csv")
        assert sd.m == 4

    def test_all_pipeline_summary(self, tmp_path):
        rc = run(["--pipeline", "all"], tmp_path, config_text=(
            "domain.type = interval\n"
            "grid.h = 0.0078125\n"
            "moments.n_max = 9\n"
            "invert.p = 3\n"
            "heat.t_min = 0.001\n"
            "heat.t_max = 0.01\n"
            "heat.samples = 8\n"
            "mc.paths = 200\n"
            "mc.dt = 0.001\n"
            "mc.x0 = 0.5\n"
            "verify.n_max = 4\n"
            "verify.tol = 0.01\n"))
        assert rc == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["moments"]["carleman_ok"]
        assert summary["invert"]["p_effective"] >= 1
        assert summary["invert"]["lambda_1"] == pytest.approx(
            math.pi ** 2, rel=1e-2)
        assert summary["compare"]["matched"] >= 1
        assert summary["heat"]["max_abs_dev_upper_half"] < 0.05
        assert summary["verify"]["ok"]
        man = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert man["pipeline"] == "all"

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_config_error_exit_code(self, tmp_path, capsys):
        rc = run([], tmp_path, config_text="bogus.key = 1\n")
        assert rc == 2
        assert "unknown key" in capsys.readouterr().err

    def test_emit_config_flag(self, capsys, tmp_path):
        rc = main(["--emit-config", "--out", str(tmp_path / "o")])
        assert rc == 0
        out = capsys.readouterr().out
        assert parse_config(out) == default_config()


class TestRerun:
    def test_rerun_matches(self, tmp_path):
        rc = run(["--pipeline", "moments"], tmp_path,
                 config_text=FAST_MOMENTS)
        assert rc == 0
        man = tmp_path / "out" / "manifest.json"
        rc2 = main(["--rerun", str(man),
                    "--out", str(tmp_path / "replay")])
        assert rc2 == 0

    def test_rerun_detects_drift(self, tmp_path, capsys):
        rc = run(["--pipeline", "moments"], tmp_path,
                 config_text=FAST_MOMENTS)
        assert rc == 0
        man_path = tmp_path / "out" / "manifest.json"
        man = json.loads(man_path.read_text())
        name = next(iter(man["outputs"]))
        man["outputs"][name] = "0" * 64
        man_path.write_text(json.dumps(man))
        rc2 = main(["--rerun", str(man_path),
                    "--out", str(tmp_path / "replay")])
        assert rc2 == 2


class TestCompare:
    def _write_spectrum(self, path, entries, volume=None):
        es.SpectralData(entries, "analytic", volume=volume).to_csv(path)

    def test_agreement(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        self._write_spectrum(a, [(9.87, 1, 0.81), (88.8, 1, 0.09)])
        self._write_spectrum(b, [(9.871, 1, 0.80), (88.9, 1, 0.10)])
        rc = main(["--pipeline", "compare", "--strict",
                   "--config", str(self._cfg(tmp_path, a, b, 0.01)),
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        rep = json.loads((tmp_path / "out" / "compare.json").read_text())
        assert rep["agree"]

    def test_disagreement_strict_exit(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        self._write_spectrum(a, [(9.87, 1, 0.81)])
        self._write_spectrum(b, [(12.0, 1, 0.81)])
        rc = main(["--pipeline", "compare", "--strict",
                   "--config", str(self._cfg(tmp_path, a, b, 0.01)),
                   "--out", str(tmp_path / "out")])
        assert rc == 2

    def _cfg(self, tmp_path, a, b, tol):
        p = tmp_path / "cmp.cfg"
        p.write_text(f"compare.a = {a}\ncompare.b = {b}\n"
                     f"compare.tol = {tol}\n")
        return p

    def test_compare_spectra_lambda_gate(self):
        sa = es.SpectralData([(10.0, 1, 0.8), (90.0, 1, 0.2)], "analytic",
                             volume=1.0)
        # same eigenvalues, very different last weight: still agrees,
        # because the final atom absorbs the truncated tail
        sb = es.SpectralData([(10.0, 1, 0.8), (90.0, 1, 0.05)], "analytic",
                             volume=1.0)
        rep = compare_spectra(sa, sb, tol=1e-2)
        assert rep["agree"]
        # an eigenvalue off by 3 percent does not
        sc = es.SpectralData([(10.3, 1, 0.8), (90.0, 1, 0.2)], "analytic",
                             volume=1.0)
        assert not compare_spectra(sa, sc, tol=1e-2)["agree"]
