import json

import numpy as np
import pytest

from cgllab.cli import EXIT_CONFIG, EXIT_NEGATIVE, EXIT_OK, execute, main
from cgllab.config import parse_config, parse_config_text
from cgllab.errors import ConfigurationError, SupercriticalExponent

MINIMAL = """
scenario = "simulate"
[domain]
lengths = ["pi"]
sizes = [32]
[params]
T = 0.1
dt = 0.01
"""


def test_minimal_config_defaults_echoed():
    cfg = parse_config_text(MINIMAL)
    assert cfg.scenario == "simulate"
    assert cfg.domain.lengths == (pytest.approx(np.pi),)
    assert cfg.resolved["params"]["lam"] == 1.0
    assert cfg.resolved["initial"]["kind"] == "eigenmode"
    assert cfg.resolved["output"]["save_every"] == 1
    assert set(cfg.resolved) >= {"scenario", "seed", "out", "domain", "params", "initial", "forcing"}


@pytest.mark.parametrize("text,value", [('"2*pi"', 2 * np.pi), ('"pi/8"', np.pi / 8), ("1.5", 1.5),
                                        ('"3*pi/2"', 1.5 * np.pi)])
def test_lengths(text, value):
    cfg = parse_config_text(MINIMAL.replace('["pi"]', f"[{text}]"))
    assert cfg.domain.lengths[0] == pytest.approx(value)


def test_supercritical_rejected_before_dimension():
    text = '[domain]\nlengths = [1, 1, 1]\nsizes = [4, 4, 4]\n[params]\nq = 6\n'
    with pytest.raises(SupercriticalExponent, match="line 5"):
        parse_config_text(text)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigurationError, match="line"):
        parse_config_text(MINIMAL + "T = 0.2\n")


def test_unknown_key_located():
    with pytest.raises(ConfigurationError, match="line 9: field params.tmax"):
        parse_config_text(MINIMAL + "tmax = 3\n")
    with pytest.raises(ConfigurationError, match="unknown section"):
        parse_config_text(MINIMAL + "[extras]\na = 1\n")


@pytest.mark.parametrize("bad", ['scheme = "euler"', "lam = -1", 'q = "four"', "nonlinear_sign = true"])
def test_bad_values(bad):
    with pytest.raises(ConfigurationError):
        parse_config_text(MINIMAL + bad + "\n")


def test_bad_modes():
    with pytest.raises(ConfigurationError, match="initial.modes"):
        parse_config_text(MINIMAL + "[initial]\nmodes = [[1, 2]]\n")


def test_missing_domain():
    with pytest.raises(ConfigurationError, match="domain.lengths"):
        parse_config_text('scenario = "simulate"\n')


def test_stdin(monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO(MINIMAL))
    assert parse_config("-").scenario == "simulate"


def _run(tmp_path, name, text, *extra):
    cfgp = tmp_path / f"{name}.toml"
    cfgp.write_text(text)
    out = tmp_path / name
    return main(["run", str(cfgp), "--out", str(out), *extra]), out


def test_simulate_outputs_and_determinism(tmp_path):
    text = MINIMAL + '[initial]\nkind = "random"\ndecay = 1.5\n'
    code1, out1 = _run(tmp_path, "a", text, "--seed", "5")
    code2, out2 = _run(tmp_path, "b", text, "--seed", "5")
    assert code1 == code2 == EXIT_OK
    body1 = (out1 / "trajectory.csv").read_bytes()
    assert body1 == (out2 / "trajectory.csv").read_bytes()
    lines = body1.decode().splitlines()
    assert lines[0] == "t,l2_sq,phi,psi_q,residual" and len(lines) == 12
    man = json.loads((out1 / "manifest.json").read_text())
    assert man["status"] == "ok" and man["partial"] is False and man["config"]["seed"] == 5
    import hashlib

    assert man["files"]["trajectory.csv"] == hashlib.sha256(body1).hexdigest()


def test_csv_uses_round_trip_digits(tmp_path):
    code, out = _run(tmp_path, "d", MINIMAL)
    row = (out / "trajectory.csv").read_text().splitlines()[2].split(",")
    assert all(float(format(float(v), ".17g")) == float(v) for v in row)
    assert len(row[0]) > 3 and any(len(v) >= 17 for v in row[1:])


def test_dt_override(tmp_path):
    code, out = _run(tmp_path, "e", MINIMAL, "--dt", "0.05")
    assert code == EXIT_OK
    assert len((out / "trajectory.csv").read_text().splitlines()) == 4


def test_config_error_exit_code(tmp_path, capsys):
    code, out = _run(tmp_path, "f", MINIMAL + "bogus = 1\n")
    assert code == EXIT_CONFIG and not out.exists()
    assert "bogus" in capsys.readouterr().err


def test_simulate_blowup_is_negative(tmp_path):
    text = MINIMAL.replace("T = 0.1", "T = 0.5").replace("dt = 0.01", "dt = 0.001")
    text = text.replace("[params]", "[params]\nkappa = 5.0") + "[initial]\nmodes = [[1, 10.0, 0.0]]\n"
    code, out = _run(tmp_path, "g", text)
    assert code == EXIT_NEGATIVE
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "blowup"


def test_fixed_point_scenario(tmp_path):
    text = MINIMAL.replace('"simulate"', '"fixed_point"') + "[initial]\nmodes = [[1, 0.01, 0.0]]\n"
    code, out = _run(tmp_path, "h", text)
    assert code == EXIT_OK
    rep = json.loads((out / "fixed_point.json").read_text())
    assert rep["converged"] and all(r < 1 for r in rep["ratios"])


def test_blowup_and_sweep(tmp_path):
    text = MINIMAL.replace('"simulate"', '"blowup"').replace("T = 0.1", "T = 1.0").replace("dt = 0.01", "dt = 0.001")
    text = text.replace("[params]", "[params]\nkappa = 5.0") + "[initial]\nmodes = [[1, 10.0, 0.0]]\n"
    text += "[sweep]\nkappa = [0.5, 5.0]\namplitude = [0.1, 10.0]\n"
    code, out = _run(tmp_path, "i", text)
    assert code == EXIT_OK
    assert json.loads((out / "blowup.json").read_text())["outcome"] == "blowup"
    cfgp = tmp_path / "i.toml"
    outs = []
    for threads in ("1", "2"):
        o = tmp_path / f"sweep{threads}"
        assert main(["sweep", str(cfgp), "--out", str(o), "--threads", threads]) == EXIT_OK
        outs.append((o / "sweep.csv").read_text())
    assert outs[0] == outs[1]
    rows = outs[0].splitlines()
    assert rows[0] == "kappa,amplitude,outcome,T_m,peak_phi,levels" and len(rows) == 5
    assert [r.split(",")[2] for r in rows[1:]] == ["global_on_horizon", "blowup", "global_on_horizon", "blowup"]


def test_certify_scenario(tmp_path):
    text = MINIMAL.replace('"simulate"', '"certify"').replace("sizes = [32]", "sizes = [64]")
    text = text.replace("T = 0.1", "T = 2.0") + "[initial]\nmodes = [[1, 0.001, 0.0]]\n[certify]\ntrials = 40\n"
    code, out = _run(tmp_path, "j", text)
    assert code == EXIT_OK
    assert json.loads((out / "certify.json").read_text())["passed"] is True
    big = text.replace("0.001, 0.0", "1.0, 0.0")
    code, out = _run(tmp_path, "k", big)
    assert code == EXIT_NEGATIVE
    assert json.loads((out / "certify.json").read_text())["error"] == "PreconditionError"


def test_verify_fast(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--fast", "--out", str(out)]) == EXIT_OK
    rows = (out / "verify.csv").read_text().splitlines()
    assert rows[0] == "name,passed,value,tol,detail"
    assert all(",true," in r for r in rows[1:])


def test_stale_manifest_removed_on_failure(tmp_path):
    from cgllab.config import parse_config_text as p

    cfg = p(MINIMAL.replace("[params]", '[params]\nscheme = "semi_implicit"') +
            '[forcing]\nkind = "sampled"\npath = "/nonexistent.npz"\n')
    out = tmp_path / "m"
    out.mkdir()
    (out / "manifest.json").write_text("{}")
    with pytest.raises(ConfigurationError):
        execute(cfg, out)
    assert not (out / "manifest.json").exists()
