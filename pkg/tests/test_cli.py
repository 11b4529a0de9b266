import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq
from scipy.special import spherical_jn

from singweyl import cli, golden, models
from singweyl.errors import ConfigError
from singweyl.io import load_schema, read_csv


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), [[float(v) for v in ln.split(",")] for ln in lines[1:]]


def test_mfun_ray_and_real_probe(capsys):
    code, out, _ = run(capsys, "mfun", "--model", "bessel:l=0", "--zgrid", "ray:pi/2,1,1e4,40")
    header, rows = _rows(out)
    assert code == 0 and header == ["re_z", "im_z", "re_M", "im_M"] and len(rows) == 40
    code, out, _ = run(capsys, "mfun", "--model", "bessel:l=0", "--zgrid", "list:-4")
    assert _rows(out)[1][0][2] == pytest.approx(-2.0, rel=1e-9)


def test_mfun_herglotz_gauge(capsys):
    # g = lambda/2 weights d rho by e^-lambda: the incomplete-Gamma closed form
    code, out, _ = run(capsys, "mfun", "--model", "bessel:l=0", "--zgrid", "list:-1,2+1j",
                       "--gauge", "g=lambda/2", "--eps-schedule", "1e-4,3e-5,1e-5,3e-6,1e-6")
    _, rows = _rows(out)
    got = np.array([r[2] + 1j * r[3] for r in rows])
    ref = models.bessel_herglotz_M(0.0, np.array([-1.0, 2 + 1j]))
    np.testing.assert_allclose(got, ref, rtol=1e-5)
    # g = lambda: the weight e^-2 lambda, Herglotz with positive Im
    code, out, _ = run(capsys, "mfun", "--model", "bessel:l=0", "--zgrid", "list:1+1j",
                       "--gauge", "g=lambda")
    assert code == 0 and _rows(out)[1][0][3] > 0


def test_mfun_explicit_gauge(capsys):
    z = 1.5 + 2j
    code, out, _ = run(capsys, "mfun", "--model", "bessel:l=1", "--zgrid", "list:1.5+2j",
                       "--gauge", "g=0.3*z,f=1-z^2")
    r = _rows(out)[1][0]
    ref = np.exp(-0.6 * z) * models.bessel_M(1.0, z) + np.exp(-0.3 * z) * (1 - z * z)
    assert r[2] + 1j * r[3] == pytest.approx(ref, rel=1e-7)


def test_eig_against_root_oracle(capsys, tmp_path):
    # l = 1: phi(mu, 1) = 0 iff the spherical Bessel j_1(sqrt mu) vanishes
    roots = [brentq(lambda s: spherical_jn(1, s), a, b) ** 2 for a, b in ((4.0, 5.0), (7.5, 8.0))]
    assert roots == pytest.approx([20.1907, 59.6795], abs=1e-4)
    path = tmp_path / "eig.csv"
    code, _, _ = run(capsys, "eig", "--model", "bessel:l=1", "--c", "1", "--count", "2", "--out", str(path))
    rows = read_csv(str(path))
    assert code == 0 and [float(r["mu"]) for r in rows] == pytest.approx(roots, rel=1e-8)


def test_measure_density_and_atoms(capsys, tmp_path):
    path = tmp_path / "rho.csv"
    code, _, _ = run(capsys, "measure", "--model", "bessel:l=0", "--window", "0,50", "--out", str(path))
    rows = read_csv(str(path))
    at4 = [float(r["density"]) for r in rows if float(r["lambda"]) == 4.0]
    assert code == 0 and at4[0] == pytest.approx(2 / math.pi, abs=1e-3)
    atoms = json.loads((tmp_path / "rho_atoms.json").read_text())
    jsonschema.validate(atoms, load_schema("atoms"))
    assert atoms == []


def test_measure_soliton_atom(capsys, tmp_path):
    code, _, _ = run(capsys, "measure", "--model", "soliton:A=1,v1=1", "--window=-3,5", "--npoints", "161",
                     "--out", str(tmp_path / "s.csv"), "--atoms-out", str(tmp_path / "a.json"))
    atoms = json.loads((tmp_path / "a.json").read_text())
    jsonschema.validate(atoms, load_schema("atoms"))
    # residue -8 at -1: a point mass 8 at lambda = -1
    assert code == 0 and len(atoms) == 1
    assert atoms[0]["lambda"] == pytest.approx(-1.0, abs=1e-6) and atoms[0]["mass"] == pytest.approx(8.0, rel=1e-4)


def test_nevanlinna_report(capsys, tmp_path):
    path = tmp_path / "nev.json"
    code, _, _ = run(capsys, "nevanlinna", "--model", "bessel:l=2", "--out", str(path))
    data = json.loads(path.read_text())
    jsonschema.validate(data, load_schema("nevanlinna_report"))
    assert code == 0 and data["kappa"] == 1 and data["k"] == 1 and data["flags"]["consistent"]


def test_transform_report(capsys, tmp_path):
    path = tmp_path / "tr.json"
    code, _, _ = run(capsys, "transform", "--model", "bessel:l=0", "--lgrid", "sq:0.01,30,600",
                     "--eps-schedule", "1e-4,3e-5,1e-5,3e-6,1e-6", "--xgrid", "lin:0.01,2,100", "--out", str(path))
    data = json.loads(path.read_text())
    jsonschema.validate(data, load_schema("transform_report"))
    assert code == 0 and data["f_norm_sq"] == pytest.approx(1.0)
    assert data["norm_sq"] == pytest.approx(1.0, abs=2e-3)


def test_bm_from_config_file(capsys, tmp_path):
    cfg = tmp_path / "bm.cfg"
    cfg.write_text("# agreement on (0, 1)\nmodel = bessel:l=1\npotential1 = step(x-1)\nl = 1\n"
                   "c = 0.5\nno_hypothesis = true\n")
    path = tmp_path / "bm.json"
    code, _, _ = run(capsys, "bm", "--config", str(cfg), "--out", str(path))
    data = json.loads(path.read_text())
    jsonschema.validate(data, load_schema("bm_report"))
    assert code == 0 and data["verdict"] == "consistent-equal" and data["hypothesis"] == {}
    # flags override the file: a global shift
    code, _, _ = run(capsys, "bm", "--config", str(cfg), "--potential1", "1", "--out", str(path))
    assert json.loads(path.read_text())["verdict"] == "inconsistent"


def test_config_override(capsys, tmp_path):
    cfg = tmp_path / "e.cfg"
    cfg.write_text("model = bessel:l=1\ncount = 3\n")
    _, out, _ = run(capsys, "eig", "--config", str(cfg))
    assert len(_rows(out)[1]) == 3
    _, out, _ = run(capsys, "eig", "--config", str(cfg), "--count", "1")
    assert len(_rows(out)[1]) == 1


def test_golden_table_and_exit(capsys, tmp_path, monkeypatch):
    path = tmp_path / "g.json"
    code, out, _ = run(capsys, "golden", "--only", "2,5", "--out", str(path))
    data = json.loads(path.read_text())
    jsonschema.validate(data, load_schema("golden_report"))
    assert code == 0 and data["all_passed"] and "AC2  PASS" in out and "AC5  PASS" in out
    monkeypatch.setitem(golden.CRITERIA, 2, lambda: {"passed": False, "detail": "forced"})
    code, out, _ = run(capsys, "golden", "--only", "2,5")
    assert code == 1 and "AC2  FAIL" in out


@pytest.mark.parametrize("argv", [
    ["mfun", "--model", "nope:l=1", "--zgrid", "list:1j"],
    ["mfun", "--model", "bessel:l=0", "--zgrid", "lin:0,1"],
    ["mfun", "--model", "bessel:l=0"],
    ["mfun", "--model", "bessel:l=0", "--zgrid", "list:-1", "--gauge", "g=z^2"],
    ["eig", "--potential", "x^", "--count", "2"],
    ["golden", "--only", "99"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "ConfigError" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["eig", "--count", "many"])
    assert exc.value.code == 2


def test_unknown_config_key_exit_2(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    code, _, err = run(capsys, "eig", "--config", str(cfg), "--model", "bessel:l=0")
    assert code == 2 and "bogus" in err


def test_precondition_and_numeric_exit_codes(capsys):
    code, _, err = run(capsys, "mfun", "--model", "bessel:l=0", "--zgrid", "list:2")
    assert code == 4 and "[weyl] PreconditionError" in err
    code, _, err = run(capsys, "mfun", "--model", "soliton:A=1,v1=1", "--zgrid", "list:-1")
    assert code == 3 and "PoleError" in err


def test_outputs_are_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"m{k}.csv"
        run(capsys, "mfun", "--model", "bessel:l=1", "--zgrid", "ray:pi/3,1,100,7;list:-2", "--out", str(path))
        nev = tmp_path / f"n{k}.json"
        run(capsys, "nevanlinna", "--model", "bessel:l=1", "--seed", "5", "--out", str(nev))
        outs.append((path.read_bytes(), nev.read_bytes()))
    assert outs[0] == outs[1]


@given(a=st.floats(-10, 10), span=st.floats(0.1, 10), n=st.integers(1, 50))
def test_grid_parser(a, span, n):
    g = cli.parse_grid(f"lin:{a!r},{a + span!r},{n}")
    assert g.size == n and g[0] == pytest.approx(a)
    s = cli.parse_grid(f"sq:{a!r},{a + span!r},{n}; list:{a!r}")
    np.testing.assert_allclose(s[:n], g ** 2)
    assert s.size == n + 1


def test_grid_parser_complex_and_errors():
    z = cli.parse_grid("ray:pi/2,1,100,3;list:-4,1+2i", complex_ok=True)
    np.testing.assert_allclose(z, [1j, 10j, 100j, -4, 1 + 2j], atol=1e-12)
    for bad in ("ray:1,1,2,3", "lin:0,1,2.5", "log:0,1,3", "foo:1", "list:1+2i"):
        with pytest.raises(ConfigError):
            cli.parse_grid(bad)
