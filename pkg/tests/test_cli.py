import json
import subprocess
import sys
from fractions import Fraction

import pytest

from openfjrw import serialize as ser
from openfjrw.algebra import HbarSeries, URing
from openfjrw.bmodel import build_potential, period_integral
from openfjrw.chamber import build_minimal_chamber
from openfjrw.cli import ConfigError, load_config, main
from openfjrw.combinatorics import Marking, ModelParams
from openfjrw.invariants import random_group_element

P33 = ModelParams(3, 3)
BASE = {"r": 3, "s": 3, "dmax": 1,
        "markings": [{"label": 1, "a": 1, "b": 1}, {"label": 2, "a": 1, "b": 1},
                     {"label": 3, "a": 2, "b": 2}]}


def run(capsys, command, cfg):
    code = main([command, "--config", json.dumps(cfg)])
    return code, capsys.readouterr().out


def test_load_valid():
    cfg = load_config(json.dumps(BASE))
    assert cfg.params == P33 and len(cfg.markings) == 3 and cfg.dmax == 1


def test_load_reports_every_violation():
    bad = dict(BASE, markings=[{"label": 1, "a": 3, "b": 1}, {"label": 1, "a": 1, "b": 1}])
    with pytest.raises(ConfigError) as exc:
        load_config(json.dumps(bad))
    msgs = exc.value.errors
    assert any("markings[0].a" in m for m in msgs)
    assert any("duplicate" in m for m in msgs)
    with pytest.raises(ConfigError):
        load_config("{not json")


def test_amplitude_command(capsys):
    cfg = dict(BASE, markings=BASE["markings"][:2], dmax=0, J=[1, 2])
    code, out = run(capsys, "amplitude", cfg)
    assert code == 0 and json.loads(out) == {"A": "1"}


def test_invalid_input_exit_2(capsys):
    cfg = dict(BASE, markings=[{"label": 1, "a": 3, "b": 1}])
    code, out = run(capsys, "amplitude", cfg)
    assert code == 2 and "markings[0].a" in out
    code, _ = run(capsys, "ext-invariant",
                  dict(BASE, insertions=[{"a": -1, "b": 1}, {"a": -1, "b": 1}, {"a": 1, "b": 1}]))
    assert code == 2
    code, _ = run(capsys, "ext-invariant",
                  dict(BASE, insertions=[{"a": -1, "b": 0}, {"a": 0, "b": -1}, {"a": 2, "b": 2}]))
    assert code == 2


def test_ext_invariant_command(capsys):
    code, out = run(capsys, "ext-invariant",
                    dict(BASE, insertions=[{"a": -1, "b": -1}, {"a": 1, "b": 1}, {"a": 1, "b": 1}]))
    assert code == 0 and json.loads(out)["value"] == "1"


def test_chamber_check_perturbed(tmp_path, capsys):
    code, out = run(capsys, "chamber-build", BASE)
    assert code == 0
    obj = json.loads(out)
    rec = next(v for v in obj["values"] if v["J"] == [1] and v["d"] == {"1": 1} and v["p"] == 0)
    rec["value"] = ser.qstr(Fraction(rec["value"]) + 1)
    (tmp_path / "bad.json").write_text(json.dumps(obj))
    cfg = dict(BASE, chamber_file="bad.json")
    (tmp_path / "job.json").write_text(json.dumps(cfg))
    code = main(["chamber-check", "--config", str(tmp_path / "job.json")])
    rep = json.loads(capsys.readouterr().out)
    assert code == 1 and rep["violations"]
    code, out = run(capsys, "chamber-check", dict(BASE, chamber=json.loads(
        json.dumps(ser.chamber_to_json(build_minimal_chamber(P33, load_config(json.dumps(BASE)).markings, 1))))))
    assert code == 0


def test_wallcross_commands(capsys):
    cfg = load_config(json.dumps(BASE))
    nu = build_minimal_chamber(P33, cfg.markings, 1)
    import random
    g = random_group_element(nu.domain, random.Random(1))
    code, out = run(capsys, "wallcross-apply", dict(BASE, group=ser.group_to_json(g)))
    assert code == 0
    res = json.loads(out)
    assert res["preservation"]["ok"]
    target = res["chamber"]
    code, out = run(capsys, "wallcross-connect", dict(BASE, target=target))
    assert code == 0
    h = ser.group_from_json(json.loads(out)["group"], P33, cfg.markings)
    from openfjrw.wallcross import act_on_chamber
    assert act_on_chamber(h, nu) == ser.chamber_from_json(target)


def test_potential_and_period(capsys):
    code, out = run(capsys, "potential", BASE)
    assert code == 0
    W = ser.series_from_json(json.loads(out))
    assert W.terms[(3, 0)] == {(): 1}
    code, out = run(capsys, "period", dict(BASE, cycle=[1, 1]))
    assert code == 0 and list(json.loads(out)["cycles"]) == ["1,1"]
    code, out = run(capsys, "period", dict(BASE, cycle=[2, 2]))
    assert code == 2
    code, out = run(capsys, "period", dict(BASE, cycle=[2, 2], formal=True))
    assert code == 0
    sym = dict(BASE, markings=[{"label": 1, "a": 1, "b": 1}, {"label": 2, "a": 1, "b": 1}])
    code, out = run(capsys, "potential", dict(sym, symmetric=True))
    assert code == 0 and json.loads(out)["ring"]["kind"] == "t"


def test_verify_command_and_determinism(tmp_path, monkeypatch):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(BASE))
    outs = []
    for jobs in ("1", "3"):
        monkeypatch.setenv("OPENFJRW_JOBS", jobs)
        out = tmp_path / f"out{jobs}.json"
        assert main(["verify", "--config", str(path), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["ok"]


def test_verify_reports_failure(capsys):
    cfg = dict(BASE, checks=["axioms"])
    assert main(["verify", "--config", json.dumps(cfg)]) == 0
    capsys.readouterr()
    assert main(["verify", "--config", json.dumps(dict(cfg, checks=["bogus"]))]) == 2


def test_console_entry_point():
    cfg = dict(BASE, markings=BASE["markings"][:2], dmax=0, J=[1, 2])
    proc = subprocess.run([sys.executable, "-m", "openfjrw", "amplitude", "--config",
                           json.dumps(cfg)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout) == {"A": "1"}


def test_serialization_round_trips():
    cfg = load_config(json.dumps(BASE))
    nu = build_minimal_chamber(P33, cfg.markings, 1)
    assert ser.chamber_from_json(json.loads(ser.dumps(ser.chamber_to_json(nu)))) == nu
    import random
    g = random_group_element(nu.domain, random.Random(2))
    assert ser.group_from_json(ser.group_to_json(g), P33, cfg.markings) == g
    W = build_potential(nu)
    assert ser.series_from_json(json.loads(ser.dumps(ser.series_to_json(W)))) == W
    H = period_integral(W, (1, 1))
    assert min(H.terms) < 0
    assert ser.hbar_from_json(json.loads(ser.dumps(ser.hbar_to_json(H))), P33) == H
    assert ser.qstr(Fraction(-3, 2)) == "-3/2"
    assert ser.qstr(Fraction(4)) == "4"
    with pytest.raises(ValueError):
        ser.parse_q(0.5)
