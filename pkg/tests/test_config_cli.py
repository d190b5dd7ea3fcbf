import json

import pytest

from carnotlab.cli import main
from carnotlab.config import load_config, parse_config_dict
from carnotlab.core import CycleKind
from carnotlab.errors import ConfigError
from carnotlab.presets import PRESET_NAMES, get_preset


class TestConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_dict({"preset": "endo-global", "bogus": 1})
        with pytest.raises(ConfigError):
            parse_config_dict({"spec": {"omega9": 1.0}})

    def test_yaml_round_trip(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            "preset: endo-global\ncycle_time: 32\naxis: cycle_time\n"
            "values: [8, 12]\njobs: 1\n")
        cfg = load_config(str(path))
        assert cfg.preset == "endo-global"
        spec = cfg.build_spec()
        assert spec.kind is CycleKind.ENDO_GLOBAL
        assert spec.cycle_time_units == pytest.approx(32.0)

    def test_json_alternative(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"preset": "carnot-shortcut",
                                    "cycle_time": 40}))
        cfg = load_config(str(path))
        assert cfg.build_spec().cycle_time_units == pytest.approx(40.0)

    def test_full_spec_without_preset(self):
        cfg = parse_config_dict({
            "spec": {"kind": "carnot-shortcut", "omega1": 10.0, "omega2": 8.0,
                     "omega3": 5.0, "omega4": 6.25, "t_hot_bath": 8.0,
                     "t_cold_bath": 5.0, "open_stroke_duration": 10.0,
                     "adiabat_duration": 5.0}})
        spec = cfg.build_spec()
        assert spec.omega2 == 8.0

    def test_preset_names(self):
        for name in PRESET_NAMES:
            assert get_preset(name, cycle_time=40.0) is not None
        with pytest.raises(ConfigError):
            get_preset("not-a-preset")

    def test_eq6_alias(self):
        a = get_preset("carnot-shortcut", cycle_time=40.0)
        b = get_preset("eq6-consistent", cycle_time=40.0)
        assert a.omega2 == b.omega2 and a.omega4 == b.omega4


class TestCli:
    def test_protocol_command(self, tmp_path, capsys):
        out = tmp_path / "p"
        rc = main(["protocol", "sta", "5", "10", "5", "--out", str(out)])
        assert rc == 0
        text = (out / "sta_protocol.csv").read_text().splitlines()
        assert text[0] == "t,omega,omega_dot,mu"
        first = [float(x) for x in text[1].split(",")]
        last = [float(x) for x in text[-1].split(",")]
        assert first[1] == pytest.approx(5.0, rel=1e-10)
        assert last[1] == pytest.approx(10.0, rel=1e-10)
        assert (out / "manifest.json").exists()

    def test_protocol_constmu(self, tmp_path):
        out = tmp_path / "p"
        rc = main(["protocol", "constmu", "9.6875", "7.75", "--mu", "-0.02",
                   "--out", str(out)])
        assert rc == 0
        assert (out / "constmu_protocol.csv").exists()

    def test_invalid_geometry_exit_code_2(self, capsys):
        rc = main(["cycle", "--preset", "carnot-shortcut",
                   "--cycle-time", "6"])  # below the adiabat budget
        assert rc == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_builder_error_exit_code_1(self, capsys):
        rc = main(["cycle", "--preset", "carnot-shortcut", "--cycle-time", "9"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "InfeasibleStroke" in err

    def test_validate_warns_on_literal(self, capsys):
        rc = main(["validate", "--preset", "table1-literal"])
        assert rc == 0
        captured = capsys.readouterr()
        assert "warning" in captured.err
        assert "adiabats will not match populations" in captured.err

    def test_cycle_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "cyc"
        rc = main(["cycle", "--preset", "endo-global", "--cycle-time", "12",
                   "--out", str(out)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["code_version"]
        assert manifest["tolerances"]["tol"] == 1e-9
        summary = json.loads((out / "summary.json").read_text())
        assert summary["converged"] is True

    def test_sweep_determinism(self, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        for out in (out1, out2):
            rc = main(["sweep", "--preset", "endo-global", "--axis",
                       "cycle_time", "--values", "10,14", "--out", str(out)])
            assert rc == 0
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
        assert (out1 / "sweep.meta.json").read_bytes() == \
            (out2 / "sweep.meta.json").read_bytes()

    def test_sweep_requires_axis(self, capsys):
        rc = main(["sweep", "--preset", "endo-global", "--values", "10"])
        assert rc == 2

    def test_compare_command(self, tmp_path):
        out = tmp_path / "cmp"
        rc = main(["compare", "--presets", "carnot-shortcut,endo-global",
                   "--axis", "cycle_time", "--values", "40", "--out", str(out)])
        assert rc == 0
        lines = (out / "compare.csv").read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("carnot-shortcut,40")
        assert lines[2].startswith("endo-global,40")

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CARNOTLAB_OUT", str(tmp_path))
        rc = main(["protocol", "constmu", "6", "5", "--mu", "-0.1"])
        assert rc == 0
        assert (tmp_path / "carnotlab-protocol" / "constmu_protocol.csv").exists()
