import json

import jsonschema
import numpy as np
import pytest

from diffraction_lab import cli, io, tm_spectrum
from diffraction_lab.errors import NumericalError
from diffraction_lab.substitution import TAU


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


# --------------------------------------------------------------------------
# envelopes


def test_envelope_validates():
    env = io.make_envelope("tm", "analytic", {"n": np.int64(3), "a": np.array([1.0])}, 0,
                           [0.0, 0.5], [0.0, 1.0], atoms=[(0.0, 1.0)])
    io.validate(env)
    assert env["schema_version"] == io.SCHEMA_VERSION
    assert env["params"] == {"n": 3, "a": [1.0]}


def test_non_finite_values_raise():
    with pytest.raises(NumericalError):
        io.make_envelope("x", "analytic", {}, 0, [0.0], [np.nan])
    with pytest.raises(NumericalError):
        io.make_envelope("x", "analytic", {}, 0, atoms=[(0.0, np.inf)])


def test_length_mismatch_raises():
    with pytest.raises(ValueError):
        io.make_envelope("x", "analytic", {}, 0, [0.0, 1.0], [0.0])


def test_schema_rejects_bad_envelopes():
    env = io.make_envelope("x", "analytic", {}, 0, [0.0], [1.0])
    for bad in ({**env, "kind": "guess"}, {k: v for k, v in env.items() if k != "model"},
                {**env, "atoms": [[0.0]]}):
        with pytest.raises(jsonschema.ValidationError):
            io.validate(bad)


def test_csv_roundtrip_is_exact(tmp_path):
    g = np.random.default_rng(0)
    x = g.standard_normal(50) * 10.0 ** g.integers(-30, 30, 50)
    io.write_csv(tmp_path / "a.csv", {"k": np.arange(50), "v": x})
    back = io.read_csv(tmp_path / "a.csv")
    assert np.array_equal(back["v"], x)
    with pytest.raises(ValueError):
        io.write_csv(tmp_path / "b.csv", {"k": [1, 2], "v": [1.0]})


def test_write_envelope_formats(tmp_path):
    env = io.make_envelope("x", "empirical", {}, 1, [0.0, 1.0], [2.0, 3.0], atoms=[(0.0, 1.0)])
    files = io.write_envelope(tmp_path, "x", env, "csv")
    assert [f.name for f in files] == ["x.csv", "x_atoms.csv"]
    (j,) = io.write_envelope(tmp_path, "x", env, "json")
    assert json.loads(j.read_text()) == env
    assert np.array_equal(io.density_from_envelope(env).values, [2.0, 3.0])
    with pytest.raises(ValueError):
        io.write_envelope(tmp_path, "x", env, "xml")


# --------------------------------------------------------------------------
# CLI


def test_cli_tm(tmp_path):
    assert run(tmp_path, "tm", "--iterations", "12", "--grid", "4096") == 0
    d = io.read_csv(tmp_path / "tm_analytic.csv")
    assert d["x"].size == 4097
    assert np.all(np.diff(d["F"]) >= 0)
    # near the ends F differs from 0 and 1 by less than float spacing, so
    # strict growth is checked on the cell increments
    rep = json.loads((tmp_path / "tm_report.json").read_text())
    io.validate(rep)
    assert rep["report"]["min_increment"] > 0


def test_cli_cantor(tmp_path):
    assert run(tmp_path, "cantor", "--depth", "20", "--grid", "4096") == 0
    d = io.read_csv(tmp_path / "cantor_analytic.csv")
    assert d["F"][0] == 0 and d["F"][-1] == 1
    assert np.all(np.diff(d["F"]) >= 0)


def test_cli_fibonacci_random(tmp_path):
    assert run(tmp_path, "fibonacci", "--mode", "random", "--tiles", "1e5", "--seed", "7") == 0
    atoms = io.read_csv(tmp_path / "fibonacci_analytic_atoms.csv")
    assert atoms["k"].tolist() == [0.0]
    assert atoms["intensity"][0] == pytest.approx((TAU + 1) / 5, abs=1e-12)
    rep = json.loads((tmp_path / "fibonacci_report.json").read_text())
    assert rep["seed"] == 7 and rep["params"]["tiles"] == 100000


def test_cli_fibonacci_perfect_writes_table(tmp_path):
    assert run(tmp_path, "fibonacci", "--steps", "16", "--kmax", "1.5") == 0
    t = io.read_csv(tmp_path / "fibonacci_bragg_table.csv")
    assert t["k"][0] == 0 and np.all(np.diff(t["k"]) >= 0)


def test_cli_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["renewal", "--dist", "gamma:5", "--L", "2e3", "--seed", "3", "--out", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_cli_json_format(tmp_path):
    assert run(tmp_path, "bernoulli", "--N", "1e3", "--grid", "1024", "--format", "json") == 0
    for p in tmp_path.glob("*.json"):
        io.validate(json.loads(p.read_text()))
    assert (tmp_path / "bernoulli_empirical.json").exists()


def test_cli_renewal_lattice_law(tmp_path):
    assert run(tmp_path, "renewal", "--dist", "delta", "--L", "1e3", "--kmax", "2") == 0
    rep = json.loads((tmp_path / "renewal_report.json").read_text())
    assert rep["report"]["singular"] == []
    atoms = io.read_csv(tmp_path / "renewal_analytic_atoms.csv")
    assert atoms["k"].tolist() == [0.0, 1.0, 2.0]


def test_cli_palm_spec_file(tmp_path):
    spec = tmp_path / "model.json"
    spec.write_text(json.dumps({"ground": {"type": "poisson", "rate": 1.0},
                                "marks": {"type": "phase", "amplitude": 0.5}, "seed": 5}))
    assert run(tmp_path, "palm", "--spec", str(spec), "--radius", "2e3") == 0
    rep = json.loads((tmp_path / "palm_report.json").read_text())
    assert rep["seed"] == 5 and "autocorr_vs_analytic_l1" in rep["report"]


@pytest.mark.parametrize("argv", [["nosuch"], ["bernoulli", "--p", "2"], ["renewal", "--dist", "weibull"],
                                  ["tm", "--grid", "15"], ["tm", "--grid", "1.5"]])
def test_cli_usage_errors(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 2
    assert capsys.readouterr().err


def test_cli_numerical_failure(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericalError("diverged")

    monkeypatch.setattr(tm_spectrum, "tm_distribution", boom)
    assert run(tmp_path, "tm") == 3
    assert "numerical failure" in capsys.readouterr().err


def test_count_parser():
    assert cli._count("1e5") == 100000
    assert cli._count("4096") == 4096
    with pytest.raises(Exception):
        cli._count("2.5")
