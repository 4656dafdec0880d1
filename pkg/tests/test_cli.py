import json
import os

import numpy as np
import pytest

from tale import cli
from tale.specs import SpecError, parse_box, parse_group, parse_metric, parse_radii, spinor_from_json


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spin_lifts_even_cyclic_in_so2(capsys):
    code, out, _ = run(capsys, "spin-lifts", "--group", "cyclic:2", "--dim", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == 1
    assert doc["lifts"] == 0


def test_spin_lifts_minus_identity(capsys):
    code, out, _ = run(capsys, "spin-lifts", "--group", "cyclic:2:1,1", "--dim", "4")
    doc = json.loads(out)
    assert code == 0 and doc["lifts"] == 2 and len(doc["lift_list"]) == 2


def test_weyl_fix(capsys):
    code, out, _ = run(capsys, "weyl-fix", "--group", "cyclic:2:1,1")
    dims = sorted((r["dim_fix_plus"], r["dim_fix_minus"]) for r in json.loads(out)["lifts"])
    assert code == 0 and dims == [(0, 2), (2, 0)]


def test_malformed_spec_exits_64(capsys):
    code, _, err = run(capsys, "spin-lifts", "--group", "cyclic:banana")
    assert code == 64 and "usage error" in err


def test_unknown_subcommand_exits_64(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 64


def test_point_outside_domain_exits_1(capsys):
    code, _, err = run(capsys, "curvature", "--metric", "eguchi-hanson:1", "--point", "0.2,0,0,0")
    assert code == 1 and "domain error" in err


def test_negative_point_values_are_accepted(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "sphere:4:1", "--point", "-0.5,0.1,0,0")
    assert code == 0
    assert json.loads(out)["scalar"] == pytest.approx(12.0, rel=1e-8)


def test_curvature_on_quotient_metric(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "quotient:eguchi-hanson:1:cyclic:2:1,1",
                       "--point", "1.5,0.2,0,0")
    assert code == 0
    assert np.max(np.abs(json.loads(out)["ricci"])) < 1e-10


def test_out_file_is_written_atomically(tmp_path, capsys):
    path = tmp_path / "lifts.json"
    code, out, _ = run(capsys, "spin-lifts", "--group", "binary-tetrahedral", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["order"] == 24
    assert [p.name for p in tmp_path.iterdir()] == ["lifts.json"]


def test_identical_runs_are_bit_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        run(capsys, "volume-ratio", "--metric", "quotient:flat:4:cyclic:2:1,1", "--point", "0,0,0,0",
            "--radii", "0.5:2:3:log", "--samples", "32", "--out", str(p))
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "r,psi,stderr,flags" and len(rows) == 4


def test_twistor_zeros_with_negative_box(tmp_path, capsys):
    from tale.clifford import build_clifford
    rep = build_clifford(4)
    psi0 = np.array([1.0, 0.5j, -0.3, 0.2])
    phi0 = rep.clifford_mult(np.array([0.5, -0.5, 0.25, 0.0])) @ psi0 / 4
    for name, v in (("phi.json", phi0), ("psi.json", psi0)):
        (tmp_path / name).write_text(json.dumps([[c.real, c.imag] for c in v]))
    code, out, _ = run(capsys, "twistor-zeros", "--metric", "flat:4",
                       "--init", f"{tmp_path / 'phi.json'},{tmp_path / 'psi.json'}", "--box", "-2:2",
                       "--seeds", "4")
    zeros = json.loads(out)["zeros"]
    assert code == 0 and len(zeros) == 1


def test_twistor_path_leaving_the_chart_exits_1(tmp_path, capsys):
    (tmp_path / "s.json").write_text(json.dumps([[1, 0], [0, 0], [0, 0], [0, 0]]))
    (tmp_path / "path.json").write_text(json.dumps([[1.5, 0, 0, 0], [0.2, 0, 0, 0]]))
    init = f"{tmp_path / 's.json'},{tmp_path / 's.json'}"
    code, out, _ = run(capsys, "twistor", "--metric", "eguchi-hanson:1", "--init", init,
                       "--path", str(tmp_path / "path.json"))
    assert code == 1 and json.loads(out)["exited"]


def test_invert_reports_decay_order(capsys):
    code, out, _ = run(capsys, "invert", "--metric", "eguchi-hanson:1", "--radii", "4:64:5:log")
    doc = json.loads(out)
    assert code == 0
    assert doc["tau_hat"] == pytest.approx(4.0, abs=0.2)
    assert doc["regularity"]["order"] == 3


def test_compactify_rejects_slow_decay(capsys):
    code, _, err = run(capsys, "compactify", "--metric", "synthetic:4:2.5", "--radii", "4:64:5:log")
    assert code == 1 and "mu >= tau - 1" in err


def test_parse_helpers():
    assert parse_group("binary-icosahedral").order == 120
    assert parse_metric("rescale:flat:4:inv-rho2").n == 4
    assert np.allclose(parse_radii("1:4:3:log"), [1, 2, 4])
    assert parse_box("-1.5:2") == (-1.5, 2.0)
    v, p = spinor_from_json({"spinor": [[1, 0], [0, 1]], "point": [0.0, 1.0]})
    assert np.allclose(v, [1, 1j]) and np.allclose(p, [0, 1])
    for bad in ("cyclic", "binary-dihedral", "nonsense:3"):
        with pytest.raises(SpecError):
            parse_group(bad)
    for bad in ("flat", "eguchi-hanson:-1", "quotient:flat:4:nope"):
        with pytest.raises(SpecError):
            parse_metric(bad)
    with pytest.raises(SpecError):
        parse_radii("4:1:3:log")
    with pytest.raises(SpecError):
        spinor_from_json([[1, 0, 0]])
