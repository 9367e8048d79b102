"""Command-line front end: one subcommand per model.

Every run writes the analytic spectrum (where one exists), the empirical
spectrum (where a sampler exists) and a report envelope with comparison
numbers, all into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io, palm, renewal, stochastic, substitution as sub, tm_spectrum as tm
from .comb import (AutocorrCoeffs, EmpiricalDensity, SpectralMeasure, WeightedComb,
                   atom_by_window_scaling, autocorr_lattice, l1_distance, smooth)
from .errors import ModelError, NumericalError
from .rng import RandomSource

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def _count(text: str) -> int:
    """Integers given as ``1e5`` or ``100000``."""
    v = float(text)
    if v != int(v) or v < 0:
        raise argparse.ArgumentTypeError(f"not a nonnegative integer: {text}")
    return int(v)


def _probs(text: str) -> list:
    return [float(t) for t in text.split(",") if t]


class Run:
    """Collects outputs of one subcommand invocation."""

    def __init__(self, args, model: str, params: dict):
        self.args = args
        self.model = model
        self.params = params
        self.files = []

    def emit(self, kind: str, grid=(), values=(), atoms=(), columns=("k", "value"),
             values_imag=None, report=None, stem=None):
        env = io.make_envelope(self.model, kind, self.params, self.args.seed, grid, values, atoms,
                               columns, values_imag, report)
        fmt = "json" if kind == "report" else self.args.format
        self.files += io.write_envelope(self.args.out, stem or f"{self.model}_{kind}", env, fmt)

    def density(self, kind: str, d, atoms=(), **kw):
        if isinstance(d, SpectralMeasure):
            atoms, d = d.atoms, d.ac_density
        self.emit(kind, d.grid, d.values, atoms, values_imag=d.imag, **kw)


def _k_period(args) -> np.ndarray:
    return np.arange(args.grid) / args.grid


def _smeared_atoms(grid, atoms, bandwidth) -> np.ndarray:
    """Atoms away from 0 spread with the triangular kernel, matching a smoothed periodogram."""
    out = np.zeros(grid.size)
    for k0, inten in atoms:
        if k0 > 0:
            out += inten * np.clip(1 - np.abs(grid - k0) / bandwidth, 0, None) / bandwidth
    return out


def _lattice_spectrum(args, values) -> EmpiricalDensity:
    return ex.lattice_spectrum(values, args.grid, args.bandwidth)


# --------------------------------------------------------------------------
# subcommands


def cmd_tm(args):
    run = Run(args, "tm", {"iterations": args.iterations, "grid": args.grid})
    F = tm.tm_distribution(args.iterations, args.grid)
    run.emit("analytic", F.grid, F.values, columns=("x", "F"))
    max_m = min(32, args.grid // 4)
    moment_dev = max(abs(tm.moments_from_F(F, m) - float(sub.tm_eta(m))) for m in range(max_m + 1))
    run.emit("report", report={"cauchy": list(F.cauchy), "min_increment": float(F.increments.min()),
                               "symmetry": tm.symmetry_residual(F), "moment_dev": moment_dev})
    return run


def cmd_cantor(args):
    run = Run(args, "cantor", {"depth": args.depth, "grid": args.grid})
    x = np.linspace(0, 1, args.grid + 1)
    run.emit("analytic", x, tm.cantor_function(x, args.depth), columns=("x", "F"))
    return run


def cmd_rs(args):
    run = Run(args, "rs", {"N": args.N, "grid": args.grid, "bandwidth": args.bandwidth})
    k = _k_period(args)
    run.emit("analytic", k, np.ones(k.size))
    w = sub.rs_sequence(-args.N, args.N + 1)
    spec = _lattice_spectrum(args, w)
    run.density("empirical", spec)
    eta = autocorr_lattice(w, min(32, args.N // 2 - 1))
    exact = all(sub.rs_eta_theta(m) == ((1 if m == 0 else 0), 0) for m in range(-512, 513))
    run.emit("report", report={
        "eta_exact_delta": exact,
        "eta_max_dev": float(max(abs(eta[m] - (m == 0)) for m in eta.lags)),
        "l1": l1_distance(spec.values, np.ones(k.size), 0, 1, k)})
    return run


def cmd_bernoulli(args):
    run = Run(args, "bernoulli", {"p": args.p, "N": args.N, "grid": args.grid})
    k = _k_period(args)
    ana = stochastic.bernoulli_analytic(args.p, k)
    run.density("analytic", ana)
    w = stochastic.bernoulli_comb(args.p, args.N, RandomSource(args.seed))
    spec = _lattice_spectrum(args, w.values)
    run.density("empirical", spec)
    away = (k > 2 * args.bandwidth) & (k < 1 - 2 * args.bandwidth)
    run.emit("report", report={"entropy": stochastic.entropy(args.p),
                               "mean_abs_dev_off_atoms": float(np.mean(np.abs(
                                   spec.values[away] - ana.ac_density.values[away])))})
    return run


def cmd_bernoullise(args):
    ps = args.ps
    run = Run(args, "bernoullise", {"p": ps, "N": args.N, "grid": args.grid})
    k = _k_period(args)
    run.emit("analytic", k, np.ones(k.size))
    res = ex.bernoullisation(tuple(ps), args.N, args.seed, args.grid, args.bandwidth)
    for p, spec in zip(ps, res["spectra"]):
        run.density("empirical", spec, stem=f"bernoullise_empirical_p{p:g}")
    run.emit("report", report={"pairwise_l1": {f"{a:g}-{b:g}": v for (a, b), v in res["pairwise_l1"].items()}})
    return run


def cmd_dimer(args):
    hp, hm = complex(args.h_plus), complex(args.h_minus)
    run = Run(args, "dimer", {"N": args.N, "h_plus": args.h_plus, "h_minus": args.h_minus, "grid": args.grid})
    k = _k_period(args)
    ana = stochastic.dimer_analytic(hp, hm, k)
    run.density("analytic", ana)
    w = stochastic.dimer_sample(args.N, RandomSource(args.seed))
    weights = stochastic.dimer_weights(w, hp, hm)
    spec = _lattice_spectrum(args, weights)
    run.density("empirical", spec)
    v = stochastic.dimer_factor(w)
    run.density("analytic", stochastic.factor_analytic(k), stem="dimer_factor_analytic")
    run.density("empirical", _lattice_spectrum(args, v.values), stem="dimer_factor_empirical")
    big = WeightedComb.from_sequence(v.values)
    small = WeightedComb.from_sequence(v.values[v.values.size // 4: 3 * v.values.size // 4])
    atoms = {f"{q:g}": atom_by_window_scaling(small, big, q).intensity for q in (0.0, 0.5)}
    away = np.abs(k - np.rint(k)) >= 2 * args.bandwidth
    run.emit("report", report={"offset": w.offset, "factor_atoms": atoms,
                               "mean_abs_dev_off_atoms": float(np.mean(np.abs(
                                   spec.values[away] - ana.ac_density.values[away])))})
    return run


def cmd_ledrappier(args):
    run = Run(args, "ledrappier", {"N": args.N})
    g1, g2 = RandomSource(args.seed).spawn(2)
    patch = stochastic.ledrappier_sample(args.N, g1.generator())
    control = stochastic.iid_patch(args.N, g2.generator())
    lags = np.arange(min(32, args.N - 1) + 1)
    run.emit("analytic", lags, (lags == 0).astype(float), columns=("m", "eta"))
    run.emit("empirical", lags, stochastic.row_autocorr(patch, lags[-1]), columns=("m", "eta"))
    run.emit("report", report={"residual": stochastic.ledrappier_residual(patch),
                               "three_point": stochastic.ledrappier_three_point(patch),
                               "three_point_iid": stochastic.ledrappier_three_point(control)})
    return run


def cmd_gue(args):
    run = Run(args, "gue", {"matrix_size": args.matrix_size, "samples": args.samples,
                            "kmax": args.kmax, "bandwidth": args.bandwidth})
    k = np.arange(0.0, args.kmax, 1.0 / args.grid)
    run.emit("analytic", k, stochastic.gue_target(k), atoms=[(0.0, 1.0)])
    samples = stochastic.gue_samples(args.matrix_size, args.samples, RandomSource(args.seed), args.workers)
    emp = stochastic.gue_diffraction_empirical(samples, k, args.bandwidth)
    run.density("empirical", emp)
    sel = (k >= 0.1) & (k <= min(2.0, args.kmax))
    run.emit("report", report={
        "sup_dev": float(np.max(np.abs(emp.values - stochastic.gue_target(k))[sel])),
        "density": stochastic.mean_density(samples)})
    return run


def cmd_renewal(args):
    dist = renewal.get_distribution(args.dist)
    run = Run(args, "renewal", {"dist": args.dist, "L": args.L, "kmax": args.kmax,
                                "bandwidth": args.bandwidth})
    r = renewal.renewal_sample(dist, args.L, RandomSource(args.seed))
    emp = ex.point_spectrum(r.points, (0.0, args.L), args.kmax, args.bandwidth)
    ana = renewal.renewal_diffraction(dist, emp.grid)
    for k in ana.params["singular"]:
        warnings.warn(f"singular grid point k={k}")
    run.density("analytic", ana)
    run.density("empirical", emp)
    target = smooth(ana.ac_density, args.bandwidth).values + _smeared_atoms(emp.grid, ana.atoms, args.bandwidth)
    run.emit("report", report={"l1_smoothed": l1_distance(emp.values, target, 0.1, args.kmax, emp.grid),
                               "density": r.density, "singular": ana.params["singular"]})
    return run


def cmd_fibonacci(args):
    run = Run(args, "fibonacci", {"mode": args.mode, "steps": args.steps, "tiles": args.tiles,
                                  "kmax": args.kmax, "clip": args.clip})
    if args.mode == "perfect":
        rows = sub.fibonacci_bragg_table(args.kmax, args.min_intensity)
        run.emit("analytic", [r[2] for r in rows], [r[3] for r in rows],
                 atoms=[(r[2], r[3]) for r in rows], columns=("k", "intensity"))
        small, large = (sub.fibonacci_chain(s) for s in (args.steps - 2, args.steps))
        cs = [WeightedComb.from_points(c.left_endpoints, None, (0.0, c.length)) for c in (small, large)]
        est = [atom_by_window_scaling(cs[0], cs[1], r[2]).intensity for r in rows]
        run.emit("empirical", [r[2] for r in rows], est, columns=("k", "intensity"))
        io.write_csv(Path(args.out) / "fibonacci_bragg_table.csv",
                     {"a": np.array([r[0] for r in rows]), "b": np.array([r[1] for r in rows]),
                      "k": np.array([r[2] for r in rows]), "intensity": np.array([r[3] for r in rows])})
        rel = [abs(e - r[3]) / r[3] for e, r in zip(est, rows)]
        run.emit("report", report={"max_rel_err": float(max(rel)) if rel else 0.0})
        return run
    x = renewal.fib_tiling_sample(args.tiles, RandomSource(args.seed))
    length = x[-1] + (x[-1] - x[-2])
    emp = ex.point_spectrum(x, (0.0, length), args.kmax, args.bandwidth)
    ana = renewal.renewal_diffraction(renewal.fib_random_tiling(), emp.grid, physical=True)
    vals = ana.ac_density.values
    if args.clip is not None:
        vals = np.minimum(vals, args.clip)
    run.emit("analytic", emp.grid, vals, atoms=ana.atoms)
    run.density("empirical", emp)
    run.emit("report", report={
        "central_atom": ana.atoms[0][1],
        "l1_smoothed": l1_distance(emp, smooth(ana.ac_density, args.bandwidth), 0.05, args.kmax)})
    return run


def cmd_palm(args):
    spec = json.loads(Path(args.spec).read_text()) if args.spec else {}
    model = palm.MarkedProcessModel.from_json(spec)
    seed = spec.get("seed", args.seed)
    args.seed = seed
    run = Run(args, "palm", {"spec": spec, "radius": args.radius, "max_dist": args.max_dist,
                             "bin_width": args.bin_width})
    (r,) = model.samples(args.radius, 1, RandomSource(seed))
    n = args.radius / 2
    emp = palm.empirical_autocorr(r, n, args.max_dist, args.bin_width)
    I, rho = palm.palm_intensity_estimate(r, n, args.max_dist, args.bin_width)
    est = I.scaled(rho)
    atoms = [(0.0, float(emp.atom0.real))]
    run.emit("empirical", emp.grid, emp.density.real, atoms, values_imag=emp.density.imag)
    run.emit("empirical", est.grid, est.density.real, [(0.0, float(est.atom0.real))],
             values_imag=est.density.imag, stem="palm_intensity_empirical")
    report = {"rho": rho, "palm_vs_autocorr_l1": est.l1(emp)}
    if model.ground == "poisson":
        ana = model.analytic_reduced(args.max_dist, args.bin_width)
        run.emit("analytic", ana.grid, ana.density.real, [(0.0, float(ana.atom0.real))])
        report["autocorr_vs_analytic_l1"] = emp.l1(ana)
    run.emit("report", report=report)
    return run


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default="diffraction_out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--bandwidth", type=float, default=0.02, help="smoothing half-width in k")

    def grid(p, default, what):
        p.add_argument("--grid", type=_count, default=default, help=what)

    def kmax(p, default):
        p.add_argument("--kmax", type=float, default=default, help="upper end of the k range")

    parser = argparse.ArgumentParser(prog="diffraction-lab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("tm", parents=[common], help="Thue-Morse distribution function")
    p.add_argument("--iterations", type=_count, default=12)
    grid(p, 4096, "number of cells on [0, 1]")
    kmax(p, 1.0)
    p.set_defaults(func=cmd_tm)

    p = subs.add_parser("cantor", parents=[common], help="middle-thirds Cantor function")
    p.add_argument("--depth", type=_count, default=20)
    grid(p, 4096, "number of cells on [0, 1]")
    kmax(p, 1.0)
    p.set_defaults(func=cmd_cantor)

    for name, func, helptext in (("rs", cmd_rs, "Rudin-Shapiro sequence"),
                                 ("bernoulli", cmd_bernoulli, "Bernoulli coin tossing comb"),
                                 ("bernoullise", cmd_bernoullise, "Bernoullised Rudin-Shapiro"),
                                 ("dimer", cmd_dimer, "random dimers and their factor")):
        p = subs.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--N", type=_count, default=2 ** 17, help="window [-N, N]")
        grid(p, 2 ** 18, "k points per unit period")
        kmax(p, 1.0)
        p.set_defaults(func=func)
        if name == "bernoulli":
            p.add_argument("--p", type=float, default=0.5)
        if name == "bernoullise":
            p.add_argument("--ps", type=_probs, default=[0.0, 0.3, 0.7, 1.0], help="comma separated")
        if name == "dimer":
            p.add_argument("--h-plus", default="1")
            p.add_argument("--h-minus", default="-1")

    p = subs.add_parser("ledrappier", parents=[common], help="Ledrappier shift on an N x N window")
    p.add_argument("--N", type=_count, default=512)
    grid(p, 0, "unused")
    kmax(p, 1.0)
    p.set_defaults(func=cmd_ledrappier)

    p = subs.add_parser("gue", parents=[common], help="unfolded GUE spectra")
    p.add_argument("--matrix-size", type=_count, default=200)
    p.add_argument("--samples", type=_count, default=400)
    p.add_argument("--workers", type=_count, default=1)
    grid(p, 250, "k points per unit k")
    kmax(p, 2.5)
    p.set_defaults(func=cmd_gue, bandwidth=0.05)

    p = subs.add_parser("renewal", parents=[common], help="stationary renewal process")
    p.add_argument("--dist", default="gamma:5", help="exp | gamma:<a> | delta | fib")
    p.add_argument("--L", type=float, default=1e5)
    grid(p, 0, "unused: the k step is 1/L")
    kmax(p, 3.0)
    p.set_defaults(func=cmd_renewal)

    p = subs.add_parser("fibonacci", parents=[common], help="perfect chain or random tiling")
    p.add_argument("--mode", choices=("perfect", "random"), default="perfect")
    p.add_argument("--steps", type=_count, default=24)
    p.add_argument("--tiles", type=_count, default=100_000)
    p.add_argument("--min-intensity", type=float, default=1e-3)
    p.add_argument("--clip", type=float, default=None, help="truncate the analytic density")
    grid(p, 0, "unused: the k step is 1/L")
    kmax(p, 3.0)
    p.set_defaults(func=cmd_fibonacci)

    p = subs.add_parser("palm", parents=[common], help="complex marked point process")
    p.add_argument("--spec", help="JSON model file {ground, marks, seed}")
    p.add_argument("--radius", type=float, default=1e5)
    p.add_argument("--max-dist", type=float, default=5.0)
    p.add_argument("--bin-width", type=float, default=0.25)
    grid(p, 0, "unused")
    kmax(p, 5.0)
    p.set_defaults(func=cmd_palm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        run = args.func(args)
    except (NumericalError, ModelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for f in run.files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
