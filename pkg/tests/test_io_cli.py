import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from relbm import __version__
from relbm import io as rio
from relbm.cli import run
from relbm.density import tabulate_density, transition_density
from relbm.params import ModelParams
from relbm.pricing import OptionContract, bsm_price, price_call, smile_curve
from relbm.selfcheck import lattice_hash

UNIT = ModelParams(1.0, 1.0)
PRICE_ARGS = ["price", "--spot", "100", "--strike", "100", "--tau", "1", "--rate", "0", "--sigma", "0.2", "--zeta", "1"]


def run_cli(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_density_grid_round_trip_csv_and_json():
    x = np.array([-3.0, -0.1, 0.0, 1 / 3, 2.5])
    grid = tabulate_density(x, 0.7, ModelParams(0.3, 0.11))
    buf = io.StringIO()
    rio.write_density_csv(buf, grid)
    back = rio.read_density_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.x_values, grid.x_values) and np.array_equal(back.p_values, grid.p_values)
    assert back.params == grid.params and back.t == grid.t
    assert buf.getvalue().splitlines()[4] == "x,p"
    buf = io.StringIO()
    rio.write_density_json(buf, grid)
    back = rio.read_density_json(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.p_values, grid.p_values) and back.params == grid.params


def test_smile_round_trip():
    smile = smile_curve(100.0, 1.0, 0.0, [80.0, 100.0, 120.0], 0.5, ModelParams(0.4, 0.16))
    buf = io.StringIO()
    rio.write_smile_csv(buf, smile)
    assert rio.read_smile_csv(io.StringIO(buf.getvalue())) == smile
    buf = io.StringIO()
    rio.write_json(buf, {"smile": rio.smile_payload(smile)})
    assert rio.read_smile_json(io.StringIO(buf.getvalue())) == smile


def test_csv_missing_values_and_meta():
    buf = io.StringIO()
    rio.write_csv(buf, ["a", "b"], [[1.5, None], [float("nan"), "x"]], {"flag": True, "n": 3})
    meta, cols = rio.read_csv(io.StringIO(buf.getvalue()))
    assert meta == {"flag": 1.0, "n": 3.0}
    assert cols == {"a": [1.5, None], "b": [None, "x"]}


def test_path_summary():
    s = rio.path_summary(np.array([1.0, -1.0, 1.0, -1.0]))
    assert s["mean"] == 0.0 and s["variance"] == pytest.approx(4 / 3)


def test_version(capsys):
    code, out, _ = run_cli(["--version"], capsys)
    assert code == 0
    assert out.split() == ["relbm", __version__, "lattice", lattice_hash()]


def test_density_command_mass(capsys):
    code, out, _ = run_cli(["density", "--sigma", "1", "--c", "1", "--t", "1", "--x-min", "-5", "--x-max", "5",
                            "--n", "101", "--format", "csv"], capsys)
    assert code == 0
    meta, cols = rio.read_csv(io.StringIO(out))
    assert len(cols["x"]) == 101
    assert meta["r0"] == 1.0
    assert meta["extended_trapezoid_mass"] == pytest.approx(1.0, abs=1e-6)
    assert np.array_equal(np.array(cols["p"]), transition_density(np.array(cols["x"]), 1.0, UNIT))


def test_density_command_json_round_trip(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run_cli(["density", "--sigma", "0.5", "--c", "2", "--t", "0.3", "--x-min", "-1", "--x-max", "1",
                          "--n", "11", "--format", "json", "--output", str(out)], capsys)
    assert code == 0
    with open(out) as fh:
        grid = rio.read_density_json(fh)
    assert np.array_equal(grid.p_values, transition_density(grid.x_values, 0.3, ModelParams(0.5, 2.0)))
    payload = json.loads(out.read_text())
    assert payload["params"]["r0"] == 16.0
    assert payload["extended_trapezoid_mass"] == pytest.approx(1.0, abs=1e-6)


def test_price_command_gaussian_limit(capsys):
    code, out, _ = run_cli(PRICE_ARGS + ["--c", "16"], capsys)
    assert code == 0
    meta, cols = rio.read_csv(io.StringIO(out))
    ref = bsm_price(100.0, OptionContract(100.0, 1.0), 0.2)
    assert cols["price"][0] == pytest.approx(ref, rel=1e-3)
    assert meta["r0"] == pytest.approx(6400.0)
    assert list(cols) == ["strike", "price", "implied_vol", "delta"]


def test_price_command_values_round_trip(capsys):
    code, out, _ = run_cli(PRICE_ARGS + ["--c", "0.08", "--format", "json"], capsys)
    assert code == 0
    d = json.loads(out)
    rep = price_call(100.0, OptionContract(100.0, 1.0), 1.0, ModelParams(0.2, 0.08))
    assert d["report"]["price"] == rep.price and d["report"]["delta"] == rep.delta


def test_bound_violation_exit_code(capsys):
    code, _, err = run_cli(["price", "--spot", "100", "--strike", "100", "--tau", "1", "--zeta", "2", "--c", "0.04",
                            "--sigma", "1"], capsys)
    assert code == 2
    assert "log-volatility bound" in err


def test_validation_exit_code(capsys):
    code, _, err = run_cli(["density", "--sigma", "-1", "--c", "1", "--t", "1", "--x-min", "-1", "--x-max", "1",
                            "--n", "5"], capsys)
    assert code == 2 and "sigma" in err
    code, _, _ = run_cli(["density", "--sigma", "1", "--c", "1", "--t", "0", "--x-min", "-1", "--x-max", "1",
                          "--n", "5"], capsys)
    assert code == 2


def test_convergence_exit_code(capsys, monkeypatch):
    from relbm import cli
    from relbm.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("quadrature did not converge")

    monkeypatch.setattr(cli, "price_option", boom)
    code, _, err = run_cli(PRICE_ARGS + ["--c", "0.08"], capsys)
    assert code == 3 and "converge" in err


def test_hedge_command(capsys):
    code, out, _ = run_cli(["hedge", "--spot", "100", "--strike", "95", "--tau", "1", "--t", "0.5", "--rate", "0.03",
                            "--sigma", "0.2", "--zeta", "1", "--c", "0.08"], capsys)
    assert code == 0
    meta, cols = rio.read_csv(io.StringIO(out))
    assert "r0" in meta
    lhs = cols["phi"][0] * cols["spot"][0] + cols["psi"][0] * cols["bond"][0]
    assert lhs == pytest.approx(cols["value"][0], abs=1e-10)
    assert cols["bond"][0] == math.exp(0.015)


def test_smile_command_env_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RELBM_OUTPUT_DIR", str(tmp_path / "runs"))
    code, out, _ = run_cli(["smile", "--spot", "100", "--tau", "1", "--sigma", "0.4", "--zeta", "0.5", "--c", "0.16",
                            "--k-min", "80", "--k-max", "120", "--n-strikes", "5", "--workers", "2"], capsys)
    assert code == 0 and out == ""
    with open(tmp_path / "runs" / "smile.csv") as fh:
        smile = rio.read_smile_csv(fh)
    iv = smile.implied_vols
    assert iv[0] > iv[2] and iv[4] > iv[2]
    with open(tmp_path / "runs" / "smile.csv") as fh:
        assert rio.read_csv(fh)[0]["r0"] == pytest.approx(0.16)


def test_smile_requires_strikes(capsys):
    code, _, _ = run_cli(["smile", "--spot", "100", "--tau", "1", "--sigma", "0.4", "--zeta", "0.5", "--c", "0.16"],
                         capsys)
    assert code == 2


def test_mc_paths_and_price(tmp_path, capsys):
    code, out, _ = run_cli(["mc", "--sigma", "0.2", "--c", "0.08", "--paths", "50", "--steps", "3",
                            "--full-increments"], capsys)
    assert code == 0
    meta, cols = rio.read_csv(io.StringIO(out))
    assert meta["full_increments"] == 1.0 and meta["r0"] == pytest.approx(0.16)
    inc = np.column_stack([cols["dx0"], cols["dx1"], cols["dx2"]])
    assert np.allclose(inc.sum(axis=1), cols["terminal"], rtol=0, atol=1e-15)
    code, out, _ = run_cli(["mc", "--sigma", "0.2", "--c", "0.08", "--paths", "200000", "--spot", "100",
                            "--strike", "100", "--zeta", "1", "--format", "json"], capsys)
    d = json.loads(out)
    ref = price_call(100.0, OptionContract(100.0, 1.0), 1.0, ModelParams(0.2, 0.08)).price
    assert abs(d["price"] - ref) < 4 * d["std_error"]
    code, out, _ = run_cli(["mc", "--sigma", "1", "--c", "1", "--paths", "1000", "--format", "json"], capsys)
    assert json.loads(out)["summary"]["n_paths"] == 1000


def test_mc_price_needs_inputs(capsys):
    code, _, _ = run_cli(["mc", "--sigma", "1", "--c", "1", "--strike", "100"], capsys)
    assert code == 2


def test_selfcheck(capsys):
    code, out, _ = run_cli(["selfcheck"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4 and all(line.startswith("[PASS]") for line in lines)


def test_no_command_and_help(capsys):
    assert run([]) == 2
    with pytest.raises(SystemExit):
        run(["density", "--help"])
    assert "year" in capsys.readouterr().out


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "relbm.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and lattice_hash() in res.stdout
