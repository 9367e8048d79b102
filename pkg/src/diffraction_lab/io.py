"""CSV and JSON export with a versioned, schema-checked envelope."""

from __future__ import annotations

import csv
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .comb import EmpiricalDensity, SpectralMeasure
from .errors import NumericalError

SCHEMA_VERSION = "1.0"


@lru_cache(maxsize=1)
def envelope_schema() -> dict:
    text = resources.files(__package__).joinpath("schema/envelope.schema.json").read_text()
    return json.loads(text)


def _num(x) -> float:
    v = float(x)
    if not np.isfinite(v):
        raise NumericalError("non-finite value in output")
    return v


def _clean(obj):
    """Recursively turn numpy scalars/arrays into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def make_envelope(model: str, kind: str, params: dict, seed, grid=(), values=(), atoms=(),
                  columns=("k", "value"), values_imag=None, report=None) -> dict:
    env = {
        "schema_version": SCHEMA_VERSION,
        "model": model,
        "kind": kind,
        "params": _clean(params),
        "seed": None if seed is None else int(seed),
        "columns": list(columns),
        "atoms": [[_num(k), _num(i)] for k, i in atoms],
        "grid": [_num(x) for x in np.asarray(grid, dtype=float).ravel()],
        "values": [_num(x) for x in np.asarray(values, dtype=float).ravel()],
    }
    if len(env["grid"]) != len(env["values"]):
        raise ValueError("grid and values differ in length")
    if values_imag is not None:
        env["values_imag"] = [_num(x) for x in np.asarray(values_imag, dtype=float).ravel()]
    if report is not None:
        env["report"] = _clean(report)
    return env


def density_envelope(model: str, kind: str, params: dict, seed, density, atoms=(), **kw) -> dict:
    if isinstance(density, SpectralMeasure):
        atoms = density.atoms
        density = density.ac_density
    return make_envelope(model, kind, params, seed, density.grid, density.values, atoms,
                         values_imag=density.imag, **kw)


def validate(env: dict) -> None:
    jsonschema.validate(env, envelope_schema())


def write_json(path, env: dict) -> Path:
    validate(env)
    path = Path(path)
    path.write_text(json.dumps(env, indent=1, sort_keys=True) + "\n")
    return path


def write_csv(path, columns: dict) -> Path:
    """Columns of equal length; floats written with ``repr`` for exact round trips."""
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns differ in length")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    return str(v)


def write_envelope(outdir, stem: str, env: dict, fmt: str) -> list:
    """Write ``env`` as ``stem.json`` or as ``stem.csv`` (+ ``stem_atoms.csv``)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        return [write_json(outdir / f"{stem}.json", env)]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    validate(env)
    cols = {env["columns"][0]: env["grid"], env["columns"][1]: env["values"]}
    if "values_imag" in env:
        cols[env["columns"][1] + "_imag"] = env["values_imag"]
    out = [write_csv(outdir / f"{stem}.csv", cols)]
    if env["atoms"]:
        a = np.array(env["atoms"])
        out.append(write_csv(outdir / f"{stem}_atoms.csv", {"k": a[:, 0], "intensity": a[:, 1]}))
    return out


def read_csv(path) -> dict:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    return {n: np.array([float(r[i]) for r in body]) for i, n in enumerate(names)}


def density_from_envelope(env: dict) -> EmpiricalDensity:
    return EmpiricalDensity(np.array(env["grid"]), np.array(env["values"]))
