import json

import numpy as np
import pytest

from mqc import cli, gaussian as ga, serialize as io, steering as st, qstate as qs
from mqc.partitions import SteeringSplit, parse


def test_density_round_trip(tmp_path):
    rho = qs.ginibre_mixed(qs.make_rng(0), (2, 3))
    path = tmp_path / "rho.json"
    io.save_density(rho, path)
    back = io.load_density(path)
    assert back.dims == rho.dims
    assert np.abs(back.data - rho.data).max() < 1e-15


def test_gaussian_round_trip(tmp_path):
    g = ga.g_random(qs.make_rng(1), 2, 0.7, (1, 1))
    path = tmp_path / "g.json"
    io.save_gaussian(g, path)
    back = io.load_gaussian(path)
    assert back.modes_per_party == g.modes_per_party
    assert np.abs(back.cov - g.cov).max() < 1e-15
    assert np.abs(back.mean - g.mean).max() < 1e-15


def test_measurement_and_assemblage_round_trip(tmp_path):
    rng = qs.make_rng(2)
    ma = st.random_projective_measurements(rng, (2,), 2)
    mpath = tmp_path / "meas.json"
    io.save_measurements(ma, mpath)
    back = io.load_measurements(mpath)
    for u in range(1):
        for x in range(2):
            for a in range(2):
                assert np.abs(back.povms[u][x][a] - ma.povms[u][x][a]).max() < 1e-15
    sa = st.make_assemblage(qs.werner(0.6),
                            SteeringSplit(1, 2, parse("1", 2), parse("2", 2)), ma)
    apath = tmp_path / "asm.json"
    io.save_assemblage(sa, apath)
    back_sa = io.load_assemblage(apath)
    for key in sa.elements:
        assert np.abs(back_sa.elements[key] - sa.elements[key]).max() < 1e-15


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(io.FormatError):
        io.load_state(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises(io.FormatError):
        io.load_state(wrong)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_measure_ghz(tmp_path, capsys):
    state = tmp_path / "ghz.json"
    code, out, _ = run_cli(capsys, "gen", "--what", "ghz", "--n", "3",
                           "--out", str(state))
    assert code == 0
    code, out, _ = run_cli(capsys, "measure", "--measure", "c_l1",
                           "--state", str(state), "--partition", "1|2|3")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["value"] - 1.0) < 1e-8
    assert doc["bound_kind"] == "exact"


def test_cli_gen_round_trip_reproduces_values(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run_cli(capsys, "gen", "--what", "random", "--dims", "2,2",
                             "--seed", "11", "--out", str(path))
        assert code == 0
    assert json.loads(a.read_text()) == json.loads(b.read_text())
    vals = []
    for path in (a, b):
        code, out, _ = run_cli(capsys, "measure", "--measure", "imag_robustness",
                               "--state", str(path), "--partition", "1|2")
        vals.append(json.loads(out)["value"])
    assert vals[0] == vals[1]


def test_cli_gaussian_measure(tmp_path, capsys):
    path = tmp_path / "g.json"
    run_cli(capsys, "gen", "--what", "gaussian-random", "--parties", "3",
            "--seed", "5", "--out", str(path))
    code, out, _ = run_cli(capsys, "measure", "--measure", "m_nonproduct",
                           "--state", str(path), "--partition", "1|2|3")
    assert code == 0
    assert json.loads(out)["value"] >= 0


def test_cli_axiom_and_hierarchy(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "axiom-check", "--measure", "c_l1",
                           "--suite", "MQCM2", "--trials", "5", "--seed", "1")
    assert code == 0
    assert json.loads(out)["violations"] == []
    path = tmp_path / "rho.json"
    io.save_density(qs.ginibre_mixed(qs.make_rng(3), (2, 2, 2)), path)
    code, out, _ = run_cli(capsys, "hierarchy-scan", "--measure", "imag_robustness",
                           "--state", str(path))
    assert code == 0


def test_cli_monogamy(tmp_path, capsys):
    path = tmp_path / "g.json"
    rng = qs.make_rng(4)
    io.save_gaussian(ga.g_product(ga.g_random(rng, 2, 0.8, (1, 1)),
                                  ga.g_random(rng, 1, 0.5)), path)
    code, out, _ = run_cli(capsys, "monogamy-check", "--measure", "m_nonproduct",
                           "--state", str(path), "--kind", "complete",
                           "--eps-0", "1e-9")
    assert code in (0, 3)  # the vacuous-count note is a caveat
    assert json.loads(out)["violations"] == []


def test_cli_steer_check(tmp_path, capsys):
    meas = tmp_path / "meas.json"
    io.save_measurements(st.pauli_zx_measurements(), meas)
    for eta, verdict in ((0.9, "steerable-evidence"), (0.5, "lhs-member")):
        state = tmp_path / f"w{eta}.json"
        io.save_density(qs.werner(eta), state)
        code, out, _ = run_cli(capsys, "steer-check", "--state", str(state),
                               "--split", "1;2", "--measurements", str(meas))
        assert code == 0
        assert json.loads(out)["verdict"] == verdict


def test_cli_error_codes(tmp_path, capsys):
    state = tmp_path / "ghz.json"
    run_cli(capsys, "gen", "--what", "ghz", "--n", "2", "--out", str(state))
    code, _, err = run_cli(capsys, "measure", "--measure", "nope",
                           "--state", str(state), "--partition", "1|2")
    assert code == 4 and json.loads(err)["code"] == 4
    code, _, err = run_cli(capsys, "measure", "--measure", "c_l1",
                           "--state", str(state), "--partition", "1|1")
    assert code == 6
    code, _, err = run_cli(capsys, "measure", "--measure", "c_l1",
                           "--state", str(tmp_path / "missing.json"),
                           "--partition", "1|2")
    assert code == 5
    # stochastic generators demand an explicit seed
    code, _, err = run_cli(capsys, "gen", "--what", "random", "--dims", "2,2",
                           "--out", str(tmp_path / "x.json"))
    assert code == 4


def test_cli_output_is_json_only(tmp_path, capsys):
    state = tmp_path / "ghz.json"
    run_cli(capsys, "gen", "--what", "ghz", "--n", "2", "--out", str(state))
    code, out, _ = run_cli(capsys, "measure", "--measure", "non_mppt",
                           "--state", str(state), "--partition", "1|2")
    assert code == 0
    json.loads(out)  # single valid JSON document on stdout
