import json
import math
from pathlib import Path

import pytest

from laserstats.cli import load_spec, main, parse_spec
from laserstats.errors import ParameterError

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))

MC_SPEC = {
    "params": {"scheme": "V3", "N": 50, "P": 300, "p_u": 632, "alpha": 6.32},
    "sim": {"duration": 4, "seed": 3},
    "sweep": [{"name": "P", "grid": "log", "start": 100, "stop": 1000, "points": 2}],
    "outputs": ["fano_mc", "spectrum_mc", "spectrum_analytic"],
    "runs": 2,
    "omega_max": 30,
}


def write(tmp_path, data, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_shipped_configs_parse():
    assert len(CONFIGS) >= 10
    for path in CONFIGS:
        spec = load_spec(path)
        assert spec.outputs


def test_table2_command(tmp_path, capsys):
    assert main(["table2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "table2.csv").read_text().splitlines()
    assert lines[0] == "scheme,ell,s_min,s0,s0_expected,fano,fano_expected,ok"
    assert len(lines) == 7
    assert all(line.endswith(",1") for line in lines[1:])


def test_empty_grid_is_a_config_error(tmp_path, capsys):
    cfg = write(tmp_path, {"params": {"scheme": "V3", "N": 50, "P": 3},
                           "sweep": [{"name": "P", "values": []}], "outputs": ["steady"]})
    assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) != 0
    assert "empty grid" in capsys.readouterr().err


@pytest.mark.parametrize("data", [
    {"params": {"scheme": "V3", "N": 50, "P": 3, "bogus": 1}, "outputs": ["steady"]},
    {"params": {"scheme": "V3", "N": 50, "P": 3}, "outputs": ["steady"], "extra": 1},
    {"params": {"scheme": "V3", "N": 50, "P": 3}, "outputs": ["plot"]},
    {"params": {"scheme": "V3", "N": 50, "P": 3}, "sweep": [{"name": "Q", "values": [1]}], "outputs": ["steady"]},
    {"params": {"scheme": "V3", "N": 50, "P": 3}, "sweep": [{"name": "P", "grid": "log", "start": 0,
                                                           "stop": 1, "points": 3}], "outputs": ["steady"]},
    {"params": {"scheme": "V3", "N": 0, "P": 3}, "outputs": ["steady"]},
    {"outputs": ["steady"]},
])
def test_bad_configs_rejected(tmp_path, data):
    with pytest.raises(ParameterError):
        parse_spec(data)
    assert main(["sweep", "--config", write(tmp_path, data), "--out", str(tmp_path)]) != 0


def test_missing_config_file(tmp_path):
    assert main(["steady", "--config", str(tmp_path / "none.json")]) != 0


def test_steady_csv_layout(tmp_path):
    cfg = write(tmp_path, {
        "params": {"scheme": "V3", "N": 100, "P": 10, "p_u": 632, "alpha": 6.32},
        "sweep": [{"name": "gamma", "values": [0, 6.32]},
                  {"name": "P", "grid": "linear", "start": 0.5, "stop": 1.0, "points": 3, "scale": "p_u"}],
        "outputs": ["steady"],
    })
    assert main(["steady", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "steady.csv").read_text().splitlines()
    assert lines[0] == "gamma,P,m,n0,n1,n2,n3,J,R,S,U,D,Q"
    assert len(lines) == 7
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 316.0
    assert first[11] == "nan"  # no lower decay in the V scheme


def test_infinite_rate_in_config(tmp_path):
    spec = parse_spec({"params": {"scheme": "Four4", "N": 1000, "P": 3, "p_u": "inf", "p_d": 5},
                       "outputs": ["steady"]})
    assert math.isinf(spec.params.p_u)


def test_monte_carlo_outputs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, MC_SPEC)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    for name in ("fano_mc.csv", "spectrum_mc.csv", "spectrum_analytic.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "spectrum_mc.csv").read_text().splitlines()[0] == "P,omega,s,ci_low,ci_high"
    c = tmp_path / "c"
    assert main(["mc", "--config", cfg, "--out", str(c), "--seed", "4"]) == 0
    assert (c / "fano_mc.csv").read_bytes() != (a / "fano_mc.csv").read_bytes()


def test_spectrum_analytic_only(tmp_path):
    cfg = write(tmp_path, {"params": {"scheme": "V3", "N": 100, "P": 1265, "p_u": 632, "alpha": 6.32},
                           "outputs": ["spectrum_analytic"]})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path), "--runs", "0",
                 "--omega-max", "60", "--omega-points", "30"]) == 0
    lines = (tmp_path / "spectrum_analytic.csv").read_text().splitlines()
    assert lines[0] == "omega,s,ci_low,ci_high"
    assert len(lines) == 31
    assert float(lines[-1].split(",")[0]) == pytest.approx(60.0)


def test_monte_carlo_needs_sim_section(tmp_path):
    cfg = write(tmp_path, {"params": {"scheme": "V3", "N": 100, "P": 10, "p_u": 632}, "outputs": ["fano_mc"]})
    assert main(["mc", "--config", cfg, "--out", str(tmp_path)]) != 0


def test_check_command(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 8 and all(line.startswith("PASS") for line in out)
