import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gencon.cli import RunConfig, UsageError, main, run
from gencon.colombeau import read_ladder_csv

KEYS = ["command", "scenario", "params", "ladder", "limit", "order", "err_est", "verdict",
        "diagnostics"]


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_flux_wire(capsys):
    code, doc, _ = call(capsys, "flux", "--scenario", "flat_wire", "--alpha", "1",
                        "--patch", "disk:R=1", "--count", "8")
    assert code == 0 and list(doc) == KEYS
    assert doc["limit"][0] == pytest.approx(0.0, abs=1e-6)
    assert doc["limit"][1] == pytest.approx(2 * math.pi, abs=1e-6)
    assert len(doc["ladder"]) == 8 and doc["ladder"][0]["epsilon"] == 2**-4


def test_holonomy_wire(capsys):
    code, doc, _ = call(capsys, "holonomy", "--scenario", "flat_wire", "--alpha", "0.25",
                        "--loop", "circle:R=1", "--count", "8")
    assert code == 0
    assert doc["limit"] == pytest.approx([0.0, -1.0], abs=1e-8)
    assert doc["diagnostics"]["g_end_singular"][0][0] == pytest.approx([0.0, -1.0], abs=1e-8)
    assert "trace" not in doc["diagnostics"]


def test_holonomy_trace(capsys):
    code, doc, _ = call(capsys, "holonomy", "--scenario", "su2_singular", "--a", "zero",
                        "--count", "6", "--step", str(2 * math.pi / 64), "--trace")
    assert code == 0
    trace = doc["diagnostics"]["trace"]
    assert len(trace) == 65 and trace[0]["t"] == 0.0
    want = np.diag([np.exp(-0.6j * np.pi), np.exp(0.6j * np.pi)])
    got = np.array(doc["diagnostics"]["g_end_singular"])
    assert np.allclose(got[..., 0] + 1j * got[..., 1], want, atol=1e-6)


def test_classify_monopole(capsys):
    code, doc, _ = call(capsys, "classify", "--scenario", "dirac_monopole", "--alpha", "1",
                        "--region", "box")
    assert code == 0
    assert doc["verdict"] is True
    assert doc["order"] == pytest.approx(1.0, abs=0.15)
    assert doc["limit"] is None


def test_shadow_wire(capsys):
    code, doc, _ = call(capsys, "shadow", "--scenario", "flat_wire", "--count", "10")
    assert code == 0
    assert doc["limit"] == pytest.approx([0.0, 2 * math.pi], abs=1e-6)


def test_chern_monopole(capsys):
    code, doc, _ = call(capsys, "chern", "--scenario", "dirac_monopole", "--patch", "sphere:R=1",
                        "--count", "8")
    assert code == 0
    assert math.hypot(*doc["limit"]) <= 1e-2
    assert doc["diagnostics"]["k"] == 1


def test_decompose_and_axioms(capsys):
    code, doc, _ = call(capsys, "decompose", "--scenario", "su2_singular", "--count", "6")
    assert code == 0 and doc["verdict"] is True and doc["err_est"] <= 1e-8
    code, doc, _ = call(capsys, "decompose", "--scenario", "dirac_monopole", "--count", "6",
                        "--patch", "sphere:R=1")
    assert code == 0 and set(doc["diagnostics"]["fluxes"]) == {"F1", "F2", "F3", "total"}
    code, doc, _ = call(capsys, "axioms", "--scenario", "flat_wire", "--count", "6")
    assert code == 0 and doc["verdict"] is True


def test_canonicalize(capsys):
    code, doc, _ = call(capsys, "canonicalize", "--scenario", "su2_singular", "--count", "8")
    assert code == 0
    assert doc["verdict"] is True
    assert doc["diagnostics"]["axiom_residual"] <= 1e-12
    assert doc["order"] >= 2.5
    assert doc["diagnostics"]["eps0_empirical"] == 2**-4


def test_list_scenarios(capsys):
    code, doc, _ = call(capsys, "list-scenarios")
    assert code == 0
    assert set(doc["diagnostics"]["scenarios"]) == {"flat_wire", "dirac_monopole", "su2_singular"}


@pytest.mark.parametrize("argv", [
    ["flux", "--scenario", "nope"],
    ["frobnicate"],
    ["flux", "--scenario", "flat_wire", "--bogus"],
    ["flux", "--scenario", "flat_wire", "--alpha", "nan"],
    ["flux", "--scenario", "flat_wire", "--ratio", "1.5"],
    ["flux", "--scenario", "flat_wire", "--config", "/nonexistent/run.cfg"],
    ["holonomy", "--scenario", "flat_wire", "--loop", "square:R=1"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, doc, err = call(capsys, *argv)
    assert code == 2 and doc is None and err.startswith("gencon: error:")


def test_numerical_failure_exit_3(capsys):
    # a loop through the string leaves the chart of the singular potential
    code, doc, _ = call(capsys, "holonomy", "--scenario", "flat_wire", "--count", "6",
                        "--loop", "circle:R=1,x=1", "--step", str(2 * math.pi / 64))
    assert code == 3
    assert doc["error"] == "ChartExitError"
    assert doc["diagnostics"]["t"] == pytest.approx(math.pi)


def test_module_entry_point_exit_codes(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "gencon", "holonomy", "--scenario", "flat_wire",
                         "--alpha", "0.25", "--count", "6"], capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["command"] == "holonomy"
    bad = subprocess.run([sys.executable, "-m", "gencon", "flux", "--scenario", "nope"],
                         capture_output=True, text=True)
    assert bad.returncode == 2


def test_output_is_byte_stable(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["flux", "--scenario", "dirac_monopole", "--piece", "F3", "--count", "6",
                     "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert capsys.readouterr().out == ""


def test_csv_ladder(tmp_path, capsys):
    path = tmp_path / "ladder.csv"
    code, doc, _ = call(capsys, "flux", "--scenario", "flat_wire", "--count", "6", "--csv",
                        str(path))
    assert code == 0
    eps, vals = read_ladder_csv(path)
    assert np.array_equal(eps, [e["epsilon"] for e in doc["ladder"]])
    assert np.allclose(vals.imag, [e["value"][1] for e in doc["ladder"]], rtol=0, atol=0)


def test_config_round_trip():
    cfg = RunConfig(command="holonomy", scenario="su2_singular", alpha=0.3, eps0=0.125,
                    count=9, tol=1e-9, step=0.01, trace=True, loop="circle:R=0.5,z=0.1",
                    a="quadratic", perturb=0.5, seed=3)
    assert RunConfig.loads(cfg.dumps()) == cfg
    assert RunConfig.loads(RunConfig(command="flux").dumps()) == RunConfig(command="flux")


def test_config_file_with_flag_override(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("# wire holonomy\nscenario = flat_wire\nalpha = 0.5\ncount = 6\n")
    code, doc, _ = call(capsys, "holonomy", "--config", str(path), "--alpha", "0.25")
    assert code == 0
    assert doc["params"]["alpha"] == 0.25 and doc["params"]["count"] == 6
    assert doc["diagnostics"]["g_end_singular"][0][0] == pytest.approx([0.0, -1.0], abs=1e-8)


def test_config_parse_errors():
    with pytest.raises(UsageError):
        RunConfig.loads("command = flux\nwhat\n")
    with pytest.raises(UsageError):
        RunConfig.loads("command = flux\ncount = many\n")
    with pytest.raises(UsageError):
        RunConfig.loads("command = flux\ncolour = red\n")


def test_run_returns_plain_json(capsys):
    doc = run(RunConfig(command="axioms", scenario="su2_singular", count=6))
    json.dumps(doc, allow_nan=False)
    assert doc["verdict"] is True
