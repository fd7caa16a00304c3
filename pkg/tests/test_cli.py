import json

import pytest

from sigmak.cli import SELFTESTS, main

AXI = "3/2 + 0.1*(2*x5**2 - 1) + 0.05*x5"


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("command", sorted(SELFTESTS))
def test_selftests_pass(capsys, command):
    code, doc = run(capsys, command, "--selftest")
    assert code == 0 and doc["result"]["all_pass"] and doc["status"] == "ok"


def test_selftest_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setitem(SELFTESTS, "moments", lambda: [("broken", False)])
    code, doc = run(capsys, "moments", "--selftest")
    assert code == 1 and doc["status"] == "selftest_failed"


def test_degree_report(capsys):
    code, doc = run(capsys, "degree", "--n", "3", "--K", "1 + 0.1*x4", "--seeds", "32", "--g-seeds", "16")
    res = doc["result"]
    assert code == 0 and doc["schema"] == "sigmak.report/1"
    # a height function has its only Crit_- point at the maximum, index (-1)^n
    assert res["deg_crit_minus"] == -1 and not res["existence"]["criterion_holds"]
    assert res["euler_sum"] == res["euler_expected"] == 0
    assert set(res["deg_G"].values()) == {res["expected_deg_G"]}


def test_constant_K_is_a_precondition_violation(capsys):
    code, doc = run(capsys, "degree", "--n", "3", "--K", "1", "--seeds", "16")
    assert code == 2 and doc["status"] == "error"
    assert doc["result"]["error"] == "NondegeneracyViolation"


def test_solve_round_K_fails_the_criterion(capsys):
    code, doc = run(capsys, "solve", "--n", "4", "--k", "2", "--K", "3/2 + 0*x5", "--N", "64")
    assert code == 2


def test_solve_writes_field_and_is_deterministic(capsys, tmp_path):
    out = []
    rep, fld = tmp_path / "r.json", tmp_path / "v.csv"
    for _ in range(2):
        code = main(["solve", "--n", "4", "--k", "2", "--K", AXI, "--N", "64",
                     "--output", str(rep), "--field-output", str(fld)])
        assert code == 0
        out.append((rep.read_bytes(), fld.read_bytes()))
    assert out[0] == out[1]
    doc = json.loads(out[0][0])
    assert doc["result"]["existence"]["criterion_holds"] and doc["result"]["final_residual"] <= 1e-8
    assert out[0][1].splitlines()[0] == b"theta,v" and len(out[0][1].splitlines()) == 66


def test_reduce_report(capsys):
    code, doc = run(capsys, "reduce", "--n", "4", "--k", "2", "--K", AXI, "--xi", "0.3", "--N", "64")
    res = doc["result"]
    assert code == 0
    lam = res["Lambda"][-1] / res["mu"]
    assert res["kw_pullback_over_mu"] == pytest.approx(lam, rel=1e-4)


def test_radial_csv(capsys, tmp_path):
    path = tmp_path / "va.csv"
    code, doc = run(capsys, "radial", "--n", "4", "--a", "0.5", "--csv", str(path))
    assert code == 0 and doc["result"]["gamma_rel_error"] < 0.01
    assert path.read_text().splitlines()[0] == "t,xi,xi_prime,E,H"


def test_radial_short_interval_rejected(capsys):
    code, doc = run(capsys, "radial", "--n", "4", "--tmax", "5")
    assert code == 2 and doc["result"]["error"] == "PreconditionError"


def test_identities_and_energy_run(capsys):
    code, doc = run(capsys, "identities", "--n", "3", "--k", "1", "--h", "0.1", "--refine", "2")
    assert code == 0
    code, doc = run(capsys, "energy", "--n", "4", "--k", "2", "--lam", "1,2")
    assert code == 0


def test_identity_range_checked(capsys):
    code, doc = run(capsys, "identities", "--n", "4", "--k", "3")
    assert code == 2 and "n/2" in doc["result"]["message"]


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "n": 3, "K": "1 + 0.1*x4", "seed": 4}))
    code, doc = run(capsys, "degree", "--config", str(cfg), "--seed", "7", "--seeds", "16", "--no-G")
    assert code == 0 and doc["config"]["seed"] == 7 and doc["config"]["K"] == "1 + 0.1*x4"


@pytest.mark.parametrize("bad", [{"n": 2}, {"tol": -1.0}, {"colour": "red"}, {"schema_version": 2}])
def test_schema_errors(capsys, tmp_path, bad):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(bad))
    code, doc = run(capsys, "moments", "--config", str(cfg))
    assert code == 2 and doc["result"]["error"] == "DomainError"


def test_missing_K(capsys):
    code, doc = run(capsys, "reduce", "--n", "4")
    assert code == 2
