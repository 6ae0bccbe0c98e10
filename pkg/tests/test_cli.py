import csv
import io
import json
import math

import pytest

from smstab import cli
from smstab.config import load_config, parse_config
from smstab.errors import ConfigError, NumericFailure
from smstab.report import emit, run_analysis

CASE1 = {"system": "single", "params": {"J": 1, "D": 1, "T_m": 9, "R": 1, "L": 1, "b": 4}}
CASE2 = {"system": "two", "params": {"J": 1, "R": 1010, "L": 0.041, "D": 9, "T_m1": 2910,
                                     "T_m2": 2800, "b": 5, "R_L": 1000, "L3": 0.04}}


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_load_case_configs(tmp_path):
    c1 = load_config(_write(tmp_path, CASE1))
    assert c1.system == "single" and c1.params.b == 4 and c1.tol == 1e-8 and c1.seed == 0
    c2 = load_config(_write(tmp_path, CASE2))
    assert c2.params.R == 1010 and c2.params.R_s == pytest.approx(10.0)


def test_component_and_excitation_styles():
    d = {"system": "single", "params": {"J": 1, "D": 1, "T_m": 9, "R_s": 0.5, "R_l": 0.25, "R_L": 0.25,
                                        "L_s": 0.5, "L_l": 0.5, "M_f": 4 / math.sqrt(1.5), "i_f": 1}}
    p = parse_config(d).params
    assert (p.R, p.L) == (1.0, 1.0) and p.b == pytest.approx(4.0)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["params"].update(L=-1), "L must be positive"),
    (lambda d: d["params"].update(R_s=0.5), "params.R_s"),
    (lambda d: d["params"].pop("J"), "params.J"),
    (lambda d: d["params"].update(M_f=1.0), "b or"),
    (lambda d: d["params"].update(Q=1.0), "params.Q"),
    (lambda d: d.update(system="three"), "system"),
    (lambda d: d.update(variant="other"), "variant"),
    (lambda d: d.update(seed=-1), "seed"),
    (lambda d: d["params"].update(D="x"), "params.D"),
])
def test_config_errors_name_the_field(mutate, field):
    d = json.loads(json.dumps(CASE1))
    mutate(d)
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(d)


def test_two_machine_r_below_r_l():
    d = json.loads(json.dumps(CASE2))
    d["params"]["R"] = 10
    with pytest.raises(ConfigError, match="R >= R_L"):
        parse_config(d)


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_case1_report():
    rep = run_analysis(parse_config(CASE1))
    ws = [e["omega_e"] for e in rep["equilibria"]]
    assert ws == sorted(ws) and ws == pytest.approx([1.0, 4 - math.sqrt(7), 4 + math.sqrt(7)])
    verdicts = [e["stability"]["routh"]["stable"] for e in rep["equilibria"]]
    assert verdicts == [True, False, True]


def test_case2_report():
    rep = run_analysis(parse_config(CASE2))
    got = [(e["omega_e"], e["stability"]["verdict"]) for e in rep["equilibria"]]
    assert [v for _, v in got] == ["Unstable", "LocallyStable"]
    assert rep["agreement"] is True and rep["polynomial"]["degree"] == 14


def test_zero_excitation_report():
    d = {"system": "single", "params": {"J": 1, "D": 2, "T_m": 5, "R": 1, "L": 1, "b": 0}}
    rep = run_analysis(parse_config(d))
    assert [e["omega_e"] for e in rep["equilibria"]] == [2.5]


def test_report_is_deterministic_and_echo_round_trips():
    for data in (CASE1, CASE2):
        cfg = parse_config(data)
        a = emit(run_analysis(cfg), "json")
        b = emit(run_analysis(parse_config(data)), "json")
        assert a == b
        echo = json.loads(a)["config"]
        again = parse_config(echo)
        assert again.params == cfg.params and again.to_dict() == echo


def test_csv_and_text_match_json():
    rep = run_analysis(parse_config(CASE1))
    rows = list(csv.DictReader(io.StringIO(emit(rep, "csv"))))
    assert list(rows[0]) == ["omega_e", "delta_e", "verdict", "max_re_eig", "a0", "lyapunov_holds"]
    assert [float(r["omega_e"]) for r in rows] == [e["omega_e"] for e in rep["equilibria"]]
    assert float(rows[0]["a0"]) == rep["equilibria"][0]["stability"]["routh"]["a0"]
    text = emit(rep, "text")
    assert "3 equilibria" in text and "LinearlyStable" in text and "Unstable" in text


def test_empty_equilibrium_list(tmp_path, capsys):
    d = {"system": "two", "params": dict(CASE2["params"], T_m2=8000)}
    rep = run_analysis(parse_config(d))
    assert rep["equilibria"] == []
    assert cli.main(["equilibria", "--config", _write(tmp_path, d)]) == 0
    assert json.loads(capsys.readouterr().out)["equilibria"] == []


def test_emit_to_file(tmp_path):
    rep = run_analysis(parse_config(CASE1))
    out = tmp_path / "r.json"
    emit(rep, "json", str(out))
    assert json.loads(out.read_text()) == json.loads(emit(rep, "json"))
    with pytest.raises(OSError):
        emit(rep, "json", str(tmp_path / "no" / "dir" / "r.json"))


def test_main_stability_json(tmp_path, capsys):
    assert cli.main(["stability", "--config", _write(tmp_path, CASE1), "--tol", "1e-9", "--seed", "4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["seed"] == 4 and rep["config"]["tol"] == 1e-9 and len(rep["equilibria"]) == 3


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main(["stability", "--config", str(tmp_path / "missing.json")]) == 1
    bad = json.loads(json.dumps(CASE1))
    bad["params"]["L"] = -1
    assert cli.main(["equilibria", "--config", _write(tmp_path, bad)]) == 1
    assert "L must be positive" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 1

    def boom(*a, **k):
        raise NumericFailure("did not converge")
    monkeypatch.setattr(cli, "run_analysis", boom)
    assert cli.main(["stability", "--config", _write(tmp_path, CASE1)]) == 2


def test_main_flags_disagreement(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_analysis", lambda cfg, s: {"agreement": False, "equilibria": []})
    monkeypatch.setattr(cli, "emit", lambda rep, fmt: "")
    assert cli.main(["equilibria", "--config", _write(tmp_path, CASE2)]) == 3


def test_main_simulate_csv(tmp_path):
    d = dict(CASE1, simulation={"t_end": 1.0, "stride": 5})
    out = tmp_path / "traj.csv"
    assert cli.main(["simulate", "--config", _write(tmp_path, d), "--omega0", "4.5", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "theta", "omega", "i_d", "i_q"]
    assert float(rows[1][2]) == 4.5


def test_main_simulate_needs_omega0(tmp_path):
    assert cli.main(["simulate", "--config", _write(tmp_path, CASE1)]) == 1


def test_main_basin(tmp_path, capsys):
    assert cli.main(["basin", "--config", _write(tmp_path, CASE1), "--grid", "4.5:5:0.5"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["label"] == 1.0 and rows[1]["label"] == pytest.approx(4 + math.sqrt(7))
    assert cli.main(["basin", "--config", _write(tmp_path, CASE2), "--grid", "1:2:1"]) == 1


def test_main_check(capsys):
    assert cli.main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 8
