import json

import numpy as np
import pytest

from removal.cli import main
from removal.functions import PointFunction, random_function
from removal.io import (
    ConfigError,
    dump_chain,
    load_chain,
    read_function,
    read_layer,
    report_body,
    write_function,
    write_layer,
)
from removal.kneser import LayerFunction

from conftest import k3_space


def test_chain_file_roundtrip(tmp_path, k3):
    path = tmp_path / "k3.yaml"
    dump_chain(k3, path, rows=[["0", "1/2", "1/2"], ["1/2", "0", "1/2"], ["1/2", "1/2", "0"]])
    chain = load_chain(path)
    assert np.array_equal(chain.transition, k3.transition)


def test_chain_presets(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("preset: disjointness\np: 1/3\n")
    assert np.allclose(load_chain(path).stationary, [2 / 3, 1 / 3])
    path.write_text("preset: disjointness\n")
    with pytest.raises(ConfigError, match="p"):
        load_chain(path)


def test_bad_chain_reports_field(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("rows: [[1, 0], [0, 1]]\n")
    with pytest.raises(ConfigError, match="reducible"):
        load_chain(path)


def test_yaml_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("rows:\n  - [1, 0\n  - [0, 1]\n")
    with pytest.raises(ConfigError) as err:
        load_chain(path)
    assert err.value.line is not None


def test_function_file_roundtrip(tmp_path, rng, k3):
    dump_chain(k3, tmp_path / "k3.yaml")
    f = random_function(k3_space(2), rng)
    write_function(tmp_path / "f.txt", f, "k3.yaml")
    g = read_function(tmp_path / "f.txt")
    assert np.array_equal(g.values, f.values) and g.space.n == 2 and not g.signed


def test_function_file_errors(tmp_path, k3):
    (tmp_path / "f.txt").write_text("# chain: k3.yaml\n# n: 1\n# range: unit\n0.1\nabc\n0.3\n")
    with pytest.raises(ConfigError) as err:
        read_function(tmp_path / "f.txt", k3)
    assert err.value.line == 5
    (tmp_path / "g.txt").write_text("# n: 1\n# range: unit\n0.1\n")
    with pytest.raises(ConfigError, match="chain"):
        read_function(tmp_path / "g.txt", k3)


def test_layer_file_roundtrip(tmp_path, rng):
    f = LayerFunction(8, 2, rng.random(28))
    write_layer(tmp_path / "l.txt", f)
    g = read_layer(tmp_path / "l.txt")
    assert (g.n, g.k) == (8, 2) and np.array_equal(g.values, f.values)


def test_report_body_canonical():
    a = report_body({"b": np.float64(1.5), "a": (1, 2), "c": float("inf")})
    b = report_body({"a": [1, 2], "c": float("inf"), "b": 1.5})
    assert a == b and json.loads(a)["c"] == "inf"


def _run(args, tmp_path):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out), "--quiet"])
    return code, out


def test_cli_validate_chain(tmp_path):
    code, out = _run(["validate-chain", "--chain", "k3"], tmp_path)
    assert code == 0
    data = json.loads((out / "validate-chain.json").read_text())
    assert data["body"]["result"]["lambda2"] == pytest.approx(0.5)
    assert "seconds" in data["meta"] and "seconds" not in data["body"]


def test_cli_body_is_deterministic(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("chain: k3\nn: 3\neps: 0.05\nfunction: {kind: noisy-dictator, flip: 0.05}\n")
    bodies = []
    for _ in range(2):
        code, out = _run(["independent-capture", "--config", str(cfg), "--seed", "9"], tmp_path)
        assert code == 0
        bodies.append(json.loads((out / "independent-capture.json").read_text())["body"])
        text = (out / "independent-capture.txt").read_text()
        assert text.splitlines()[0].startswith("command:")
    assert bodies[0] == bodies[1]
    assert bodies[0]["seed"] == 9 and bodies[0]["rng"] == "numpy.random.PCG64"


@pytest.mark.parametrize("command", ["quadform", "decompose", "far", "refine", "capture", "independent-capture"])
def test_cli_function_commands(command, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("chain: k3\nn: 3\neps: 0.1\nfunction: {kind: dictator, coord: 1}\n")
    code, out = _run([command, "--config", str(cfg)], tmp_path)
    assert code == 0
    assert json.loads((out / f"{command}.json").read_text())["body"]["status"] == 0


def test_cli_function_file(tmp_path, k3):
    dump_chain(k3, tmp_path / "k3.yaml")
    write_function(tmp_path / "f.txt", PointFunction.dictator(k3_space(3), 2, 0), "k3.yaml")
    code, out = _run(["refine", "--function", str(tmp_path / "f.txt")], tmp_path)
    assert code == 0
    body = json.loads((out / "refine.json").read_text())["body"]
    assert body["result"]["trace"]["final_I"] == [2]


def test_cli_kneser_star(tmp_path):
    write_layer(tmp_path / "star.txt", LayerFunction.star(9, 3, 0))
    code, out = _run(["kneser", "--layer", str(tmp_path / "star.txt"), "--p", "1/3", "--eps", "0.05"], tmp_path)
    assert code == 0
    res = json.loads((out / "kneser.json").read_text())["body"]["result"]
    assert res["captured_loss"] == 0.0 and res["intersecting"] and res["T"] == [1]


def test_cli_kneser_refuses_fractional_k(tmp_path):
    write_layer(tmp_path / "star.txt", LayerFunction.star(9, 3, 0))
    code, _ = _run(["kneser", "--layer", str(tmp_path / "star.txt"), "--p", "0.3", "--eps", "0.05"], tmp_path)
    assert code == 3


def test_cli_oracle_compare(tmp_path):
    code, out = _run(["oracle-compare", "quadform", "noise", "--chain", "k3", "--n", "3"], tmp_path)
    assert code == 0
    res = json.loads((out / "oracle-compare.json").read_text())["body"]["result"]["results"]
    assert res["quadform"]["max_dev"] <= 1e-12


def test_cli_schedule_and_phi_grid(tmp_path):
    code, out = _run(["schedule", "--eps", "0.1", "--c", "1", "--r", "10"], tmp_path)
    assert code == 0
    res = json.loads((out / "schedule.json").read_text())["body"]["result"]
    assert res["k"] == "astronomical" and res["gamma_table"][:3] == [0, 10, 590500]
    code, out = _run(["phi-grid"], tmp_path)
    rows = json.loads((out / "phi-grid.json").read_text())["body"]["result"]["rows"]
    assert code == 0 and len(rows) == 101 and rows[0] == [0.0, 0.0]


def test_cli_faithful_mode_reports_parameters(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("chain: k3\nn: 3\neps: 0.1\nfunction: {kind: dictator}\n")
    code, out = _run(["capture", "--config", str(cfg), "--mode", "faithful"], tmp_path)
    assert code == 0
    res = json.loads((out / "capture.json").read_text())["body"]["result"]
    assert res["mode"] == "faithful" and res["parameters"]["log10_gamma"] < 0


def test_cli_sweep_subset(tmp_path):
    code, out = _run(["sweep", "planted", "phi-grid"], tmp_path)
    assert code == 0
    res = json.loads((out / "sweep.json").read_text())["body"]["result"]
    assert res["planted"]["passed"] and res["phi-grid"]["passed"]


def test_cli_exit_codes(tmp_path):
    assert _run(["quadform", "--chain", "k3", "--n", "2"], tmp_path)[0] == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("chain: [1,\n")
    assert _run(["quadform", "--config", str(bad)], tmp_path)[0] == 3
    cfg = tmp_path / "c.yaml"
    cfg.write_text("chain: k3\nn: 12\nfunction: {kind: dictator}\n")
    assert _run(["quadform", "--config", str(cfg), "--cap-points", "1000"], tmp_path)[0] == 1
    cfg.write_text("chain: k3\nn: 3\neps: 0.1\nfunction: {kind: random}\ncapture: {j_budget: 0}\n")
    assert _run(["capture", "--config", str(cfg), "--gamma", "1e-6"], tmp_path)[0] == 1
    cfg.write_text("chain: k3\nn: 3\nfunction: {kind: dictator}\nseed: -1\n")
    assert _run(["quadform", "--config", str(cfg)], tmp_path)[0] == 3


def test_cli_invariant_failure_exit_code(tmp_path, monkeypatch):
    import removal.cli as cli

    monkeypatch.setattr(cli, "quad_form", lambda space, f, g: 42.0)
    assert _run(["quadform", "--chain", "k3", "--n", "2", "--function", "x"], tmp_path)[0] == 3
    cfg = tmp_path / "c.yaml"
    cfg.write_text("chain: k3\nn: 2\nfunction: {kind: random}\n")
    code, out = _run(["quadform", "--config", str(cfg)], tmp_path)
    assert code == 2
    assert "recomputed" in json.loads((out / "quadform.json").read_text())["body"]["error"]
