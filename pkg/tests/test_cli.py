import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from chainforms import Chain, CubicalCell
from chainforms.chains import chain_from_json, chain_to_json
from chainforms.cli import flat_cochain_check, main
from chainforms.forms import PolyForm, form_to_json
from chainforms.polynomial import Polynomial


def F(a, b=1):
    return Fraction(a, b)


@pytest.fixture()
def workdir(tmp_path):
    cells = []
    for i in range(4):
        for j in range(4):
            cells.append((CubicalCell((F(i, 4), F(j, 4)), (0, 1), F(1, 4)), 1))
    bsq = Chain.from_cubes(2, cells).boundary()
    (tmp_path / "bsq.json").write_text(json.dumps(chain_to_json(bsq)))
    seg = Chain.segment([F(1, 3), F(1, 5)], [F(7, 8), F(3, 4)])
    (tmp_path / "seg.json").write_text(json.dumps(chain_to_json(seg)))
    tri = Chain.simplex([(F(0), F(0)), (F(1), F(0)), (F(0), F(1))])
    (tmp_path / "tri.json").write_text(json.dumps(chain_to_json(tri)))
    w = PolyForm(2, 1, {(0,): Polynomial(2, {(0, 1): F(1)})})
    (tmp_path / "w.json").write_text(json.dumps(form_to_json(w)))
    return tmp_path


def invoke(args, cwd):
    runner = CliRunner()
    import os

    old = os.getcwd()
    os.chdir(cwd)
    try:
        return runner.invoke(main, args, catch_exceptions=False)
    finally:
        os.chdir(old)


def test_chain_mass_and_validate(workdir):
    res = invoke(["chain", "mass", "--in", "bsq.json"], workdir)
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert abs(doc["mass"] - 4.0) < 1e-12 and doc["interval"] == ["4", "4"]
    res = invoke(["chain", "validate", "--in", "tri.json"], workdir)
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["boundary_of_boundary_zero"] and doc["codec_roundtrip_exact"]


def test_chain_boundary_and_translate_roundtrip(workdir):
    res = invoke(["chain", "boundary", "--in", "tri.json"], workdir)
    assert res.exit_code == 0
    bd = chain_from_json(json.loads(res.output))
    assert bd.m == 1 and len(bd.cells) == 3
    res = invoke(["chain", "translate", "--in", "seg.json", "--by", "1/2,-1/3"], workdir)
    assert res.exit_code == 0
    moved = chain_from_json(json.loads(res.output))
    orig = chain_from_json(json.loads((workdir / "seg.json").read_text()))
    assert (moved.translate([F(-1, 2), F(1, 3)]) - orig).is_zero()


def test_form_commands(workdir):
    res = invoke(["form", "d", "--in", "w.json"], workdir)
    assert res.exit_code == 0
    ddoc = json.loads(res.output)
    assert ddoc["m"] == 2
    res = invoke(["form", "integrate", "--form", "w.json", "--chain", "seg.json"], workdir)
    assert res.exit_code == 0
    assert Fraction(json.loads(res.output)["value"]) == Fraction(247, 960)
    res = invoke(["form", "comass", "--in", "w.json", "--at", "1/2,1/3"], workdir)
    assert res.exit_code == 0
    assert abs(json.loads(res.output)["comass"] - 1 / 3) < 1e-9


def test_cochain_average_and_certify(workdir):
    res = invoke(
        [
            "cochain",
            "average",
            "--form",
            "w.json",
            "--chain",
            "seg.json",
            "--r",
            "1/16",
            "--method",
            "exact",
        ],
        workdir,
    )
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["standard_error"] == 0.0
    assert Fraction(doc["value"]) != 0
    res = invoke(
        ["cochain", "certify", "--form", "w.json", "--chain", "seg.json"], workdir
    )
    assert res.exit_code == 0
    assert json.loads(res.output)["valid"]


def test_flatnorm_oracle_and_verdict_failure(workdir):
    res = invoke(["flatnorm", "--chain", "bsq.json", "--eps", "1/4"], workdir)
    assert res.exit_code == 0
    assert abs(json.loads(res.output)["value"] - 1.0) < 1e-8

    cfg = {"kind": "flatnorm", "chain": "bsq.json", "eps": "1/4", "expected": 2.0}
    (workdir / "bad_expect.json").write_text(json.dumps(cfg))
    res = invoke(["experiment", "run", "bad_expect.json"], workdir)
    assert res.exit_code == 1  # verdict failure


def test_experiment_stokes_and_determinism(workdir):
    cfg = {"kind": "stokes", "form": "w.json", "chain": "tri.json", "seed": 3}
    (workdir / "cfg.json").write_text(json.dumps(cfg))
    a = invoke(["experiment", "run", "cfg.json"], workdir)
    b = invoke(["experiment", "run", "cfg.json"], workdir)
    assert a.exit_code == 0 and b.exit_code == 0
    assert a.output == b.output  # byte-identical report
    doc = json.loads(a.output)
    assert doc["pass"] and doc["report"]["residual"] == "0"


def test_experiment_parse_errors(workdir):
    (workdir / "broken.json").write_text("not json")
    res = invoke(["experiment", "run", "broken.json"], workdir)
    assert res.exit_code == 2
    (workdir / "unknown.json").write_text(json.dumps({"kind": "nope"}))
    res = invoke(["experiment", "run", "unknown.json"], workdir)
    assert res.exit_code == 2


def test_deform_cli(workdir):
    res = invoke(
        ["--seed", "9", "deform", "--chain", "seg.json", "--eps", "1/2"], workdir
    )
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["identity_exact"]
    p = chain_from_json(doc["p"])
    assert p.m == 1


def test_csv_format(workdir):
    res = invoke(["--format", "csv", "chain", "mass", "--in", "bsq.json"], workdir)
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert lines[0].split(",")[0] == "mass"
    assert len(lines) == 2


def test_modulus_cli(workdir):
    fam = [
        chain_to_json(
            Chain.segment([F(0), F(j, 4)], [F(1), F(j, 4)])
        )
        for j in range(5)
    ]
    (workdir / "fam.json").write_text(json.dumps(fam))
    res = invoke(
        [
            "modulus",
            "--family",
            "fam.json",
            "--box",
            "0,1;0,1",
            "--shape",
            "32,32",
            "--p",
            "2",
        ],
        workdir,
    )
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["flag"] == "finite" and doc["value"] > 0


def test_flat_cochain_check_examples():
    # w = dx1/2: comass 1/2 everywhere, dw = 0
    w = PolyForm(2, 1, {(0,): Polynomial.constant(2, F(1, 2))})
    sq = Chain.from_cubes(2, [(CubicalCell((F(0), F(0)), (0, 1), F(1, 4)), 1)])
    fam = [Chain.segment([F(0), F(0)], [F(1), F(0)]), sq.boundary()]
    rep = flat_cochain_check(w, fam, F(1, 4))
    assert rep["pass"]
    # closed-form integral over a boundary vanishes
    assert rep["rows"][1]["lhs"] == 0.0
    # halving w halves every lhs, so margins only grow
    half = PolyForm(2, 1, {(0,): Polynomial.constant(2, F(1, 4))})
    rep2 = flat_cochain_check(half, fam, F(1, 4))
    assert all(
        abs(r2["lhs"] - r["lhs"] / 2) < 1e-12
        for r, r2 in zip(rep["rows"], rep2["rows"])
    )
    # sup-norm precondition is enforced
    big = PolyForm(2, 1, {(0,): Polynomial.constant(2, F(3))})
    with pytest.raises(ValueError):
        flat_cochain_check(big, fam, F(1, 4))


def test_plot_emission(tmp_path):
    from chainforms.cli import _plot_loglog

    rows = [{"r": 2.0**-k, "diff": 3.0 * 2.0**-k, "bound": 5.0 * 2.0**-k} for k in range(2, 7)]
    path = tmp_path / "plot.svg"
    _plot_loglog(str(path), rows, "r", ["diff", "bound"])
    text = path.read_text()
    assert text.startswith("<svg") and "path" in text
    _plot_loglog(str(tmp_path / "plot2.svg"), rows, "r", ["diff", "bound"])
    assert text == (tmp_path / "plot2.svg").read_text()
