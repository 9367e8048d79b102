"""End-to-end numerical experiments shared by the CLI, scripts and tests.

Each function runs one model at a given size and returns the measured
quantities as a plain dict, so callers decide what to assert or print.
"""

from __future__ import annotations

from itertools import accumulate

import numpy as np
from threadpoolctl import threadpool_limits

from . import palm, renewal, stochastic, substitution as sub, tm_spectrum as tm
from .comb import (EmpiricalDensity, WeightedComb, atom_by_window_scaling, autocorr_lattice,
                   autocorr_pointset, l1_distance, periodogram, smooth, unit_period_grid)
from .rng import RandomSource


def lattice_spectrum(values, n_grid: int, bandwidth: float) -> EmpiricalDensity:
    """Smoothed periodogram of a lattice sequence over one period ``[0, 1)``."""
    comb = WeightedComb.from_sequence(values)
    p = periodogram(comb, unit_period_grid(n_grid))
    return smooth(p, bandwidth)


def point_spectrum(positions, window, kmax: float, bandwidth: float, weights=None) -> EmpiricalDensity:
    """Smoothed periodogram on ``[0, kmax + bandwidth]`` with step ``1/L``."""
    comb = WeightedComb.from_points(positions, weights, window)
    k = np.arange(0.0, kmax + 2 * bandwidth, 1.0 / comb.volume)
    return smooth(periodogram(comb, k), bandwidth)


# --------------------------------------------------------------------------
# substitution models


def tm_autocorr(N: int = 2 ** 16, max_lag: int = 64) -> dict:
    w = sub.tm_two_sided_window(N)
    emp = autocorr_lattice(w, max_lag)
    dev = max(abs(emp[m].real - float(sub.tm_eta(m))) for m in range(-max_lag, max_lag + 1))
    return {"max_dev": dev, "eta1": sub.tm_eta(1)}


def wiener(N_max: int = 2 ** 10) -> dict:
    """``Sigma(N) = sum_{|m|<=N} eta(m)^2`` for Thue-Morse, in exact rationals."""
    sq = [sub.tm_eta(m) ** 2 for m in range(4 * N_max + 1)]
    cum = list(accumulate(sq))

    def sigma(N):
        return 2 * cum[N] - sq[0]

    ratios = [sigma(4 * N) / sigma(2 * N) for N in range(1, N_max + 1)]
    return {"all_hold": all(r <= 1.5 for r in ratios), "max_ratio": max(ratios),
            "sigma_over_N": sigma(N_max) / N_max}


def tm_distribution_checks(iterations: int = 12, grid_size: int = 2 ** 12, max_m: int = 32) -> dict:
    sym = []
    F = None
    for F in tm.tm_iterates(iterations, grid_size):
        sym.append(tm.symmetry_residual(F))
    dev = max(abs(tm.moments_from_F(F, m) - float(sub.tm_eta(m))) for m in range(-max_m, max_m + 1))
    return {"min_increment": float(F.increments.min()), "symmetry": max(sym), "moment_dev": dev, "F": F}


def volterra_riesz(n_max: int = 6, grid_size: int = 2 ** 14) -> list:
    """``int |F_n' - f_n|`` with ``F_n'`` the cell-average derivative."""
    out = []
    h = 1.0 / grid_size
    mid = (np.arange(grid_size) + 0.5) * h
    for n, F in enumerate(tm.tm_iterates(n_max, grid_size), start=1):
        out.append(float(np.sum(np.abs(F.increments / h - tm.riesz_density(n, mid))) * h))
    return out


def rs_checks(N: int = 2 ** 17, max_lag: int = 32, exact_range: int = 512) -> dict:
    exact = all(sub.rs_eta_theta(m) == ((1 if m == 0 else 0), 0)
                for m in range(-exact_range, exact_range + 1))
    emp = autocorr_lattice(sub.rs_sequence(-N, N + 1), max_lag)
    dev = max(abs(emp[m] - (1 if m == 0 else 0)) for m in range(-max_lag, max_lag + 1))
    return {"exact": exact, "max_dev": float(dev)}


# --------------------------------------------------------------------------
# stochastic models


def bernoullisation(ps=(0.0, 0.3, 0.7, 1.0), N: int = 2 ** 17, seed: int = 1,
                    n_grid: int = 2 ** 18, bandwidth: float = 0.02) -> dict:
    rs = sub.SignedSequence(sub.rs_sequence(-N, N + 1), -N)
    streams = RandomSource(seed).spawn(len(ps))
    spectra = [lattice_spectrum(stochastic.bernoullise(rs, p, s).values, n_grid, bandwidth)
               for p, s in zip(ps, streams)]
    pair = {}
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            pair[(ps[i], ps[j])] = l1_distance(spectra[i], spectra[j], 0.0, 1.0)
    return {"pairwise_l1": pair, "max_l1": max(pair.values()), "spectra": spectra}


def dimer_checks(N: int = 2 ** 17, seed: int = 2, n_grid: int = 2 ** 18,
                 bandwidth: float = 0.02) -> dict:
    g = RandomSource(seed).generator()
    w = stochastic.dimer_sample(N, g)
    spec = lattice_spectrum(w.values, n_grid, bandwidth)
    target = stochastic.dimer_analytic(1, -1, spec.grid).ac_density.values
    l1 = l1_distance(spec.values, target, 0.0, 1.0, spec.grid)
    eta = autocorr_lattice(w.values, 32)
    v = stochastic.dimer_factor(w)
    half = v.values[v.values.size // 4: 3 * v.values.size // 4]
    big = WeightedComb.from_sequence(v.values)
    small = WeightedComb.from_sequence(half)
    atoms = {k: atom_by_window_scaling(small, big, k).intensity for k in (0.0, 0.5, 1.0)}
    fspec = lattice_spectrum(v.values, n_grid, bandwidth)
    k = fspec.grid
    away = np.abs(k - np.rint(2 * k) / 2) >= 0.05
    return {"l1": l1, "spectrum": spec, "eta1": float(eta[1].real), "eta_minus1": float(eta[-1].real),
            "eta_far": float(max(abs(eta[m]) for m in range(2, 33))), "factor_atoms": atoms,
            "factor_density": float(fspec.values[away].mean()), "factor_spectrum": fspec,
            "offset": w.offset}


def ledrappier_checks(N: int = 512, seed: int = 3, max_lag: int = 32) -> dict:
    g1, g2 = RandomSource(seed).spawn(2)
    patch = stochastic.ledrappier_sample(N, g1.generator())
    control = stochastic.iid_patch(N, g2.generator())
    row = stochastic.row_autocorr(patch, max_lag)
    return {"residual": stochastic.ledrappier_residual(patch),
            "three_point": stochastic.ledrappier_three_point(patch),
            "three_point_iid": stochastic.ledrappier_three_point(control),
            "row_dev": float(np.max(np.abs(row[1:]))), "row0": float(row[0]),
            "row_iid_dev": float(np.max(np.abs(stochastic.row_autocorr(control, max_lag)[1:])))}


def gue_checks(N: int = 200, n_samples: int = 400, seed: int = 4, workers: int = 1,
               bandwidth: float = 0.05) -> dict:
    samples = stochastic.gue_samples(N, n_samples, RandomSource(seed), workers)
    k = np.arange(0.0, 2.5, 0.004)
    emp = stochastic.gue_diffraction_empirical(samples, k, bandwidth)
    sel = (k >= 0.1) & (k <= 2.0)
    dev = float(np.max(np.abs(emp.values - stochastic.gue_target(k))[sel]))
    return {"sup_dev": dev, "density": stochastic.mean_density(samples), "spectrum": emp,
            "small_spacing": stochastic.small_spacing_fraction(samples),
            "poisson_small_spacing": float(1 - np.exp(-0.05)), "samples": samples}


# --------------------------------------------------------------------------
# renewal and Fibonacci


def renewal_checks(L: float = 1e5, seed: int = 5, X: float = 30.0, bandwidth: float = 0.02,
                   kmax: float = 3.0) -> dict:
    exp = renewal.exponential()
    k = np.linspace(0.1, kmax, 300)
    h_exp = float(np.max(np.abs(renewal.renewal_h(exp, k))))
    r = renewal.renewal_sample(exp, L, RandomSource(seed).generator())
    spec = point_spectrum(r.points, (0.0, L), kmax, bandwidth)
    sel = (spec.grid >= 0.1) & (spec.grid <= kmax)
    flat = float(np.mean(np.abs(spec.values[sel] - 1)))
    residual, closed_form = {}, {}
    for name in ("exp", "gamma:1", "gamma:2", "gamma:5", "delta", "fib"):
        d = renewal.get_distribution(name)
        residual[name] = renewal.renewal_residual(d, renewal.renewal_measure(d, X))
    for a in (1, 2, 5):
        d = renewal.gamma_family(a)
        nu = renewal.renewal_measure(d, X)
        closed_form[a] = l1_distance(renewal.autocorr_transform(d, nu, k),
                                 renewal.renewal_diffraction(d, k).ac_density.values, 0.1, kmax, k)
    return {"h_exp_max": h_exp, "flat_mad": flat, "residual": residual, "closed_form_l1": closed_form,
            "spectrum": spec}


def renewal_pair_histogram(a: float = 5.0, L: float = 1e5, seed: int = 6, X: float = 5.0,
                           bin_width: float = 0.05) -> dict:
    """Empirical pair density of a sample against ``nu + nu~`` (mean absolute deviation)."""
    d = renewal.gamma_family(a)
    r = renewal.renewal_sample(d, L, RandomSource(seed).generator())
    comb = WeightedComb.from_points(r.points, None, (0.0, L))
    _, emp = autocorr_pointset(comb, X, bin_width)
    nu = renewal.renewal_measure(d, X + bin_width)
    ref = np.interp(np.abs(emp.grid), nu.grid, nu.density)
    return {"mad": float(np.mean(np.abs(emp.values - ref))), "density": r.density}


def fibonacci_checks(small_steps: int = 22, large_steps: int = 24, tiles: int = 100_000,
                     seed: int = 7, bandwidth: float = 0.02, kmax: float = 3.0) -> dict:
    chains = [sub.fibonacci_chain(s) for s in (small_steps, large_steps)]
    combs = [WeightedComb.from_points(c.left_endpoints, None, (0.0, c.length)) for c in chains]
    peaks = {}
    for ab in ((0, 0), (0, 1), (1, 0), (1, 1)):
        k, inten = sub.fibonacci_intensity(*ab)
        est = atom_by_window_scaling(combs[0], combs[1], k)
        peaks[ab] = {"k": k, "exact": inten, "estimate": est.intensity,
                     "rel_err": abs(est.intensity - inten) / inten}
    x = renewal.fib_tiling_sample(tiles, RandomSource(seed).generator())
    length = x[-1] + (x[-1] - x[-2])
    emp = point_spectrum(x, (0.0, length), kmax, bandwidth)
    dist = renewal.fib_random_tiling()
    ana = renewal.renewal_diffraction(dist, emp.grid, physical=True)
    ana_s = smooth(ana.ac_density, bandwidth)
    l1 = l1_distance(emp, ana_s, 0.05, kmax)
    l1_raw = l1_distance(emp, ana.ac_density, 0.05, kmax)
    return {"peaks": peaks, "rt_l1": l1, "rt_l1_unsmoothed_target": l1_raw, "central_atom": ana.atoms,
            "empirical": emp, "analytic": ana}


# --------------------------------------------------------------------------
# Palm


def palm_checks(radius: float = 4e5, seed: int = 8, max_dist: float = 5.0, bin_width: float = 0.25,
                workers: int = 1) -> dict:
    model = palm.MarkedProcessModel()
    r1, r2 = model.samples(radius, 2, RandomSource(seed), workers)
    e1 = palm.empirical_autocorr(r1, radius, max_dist, bin_width)
    e2 = palm.empirical_autocorr(r2, radius, max_dist, bin_width)
    n = radius / 2
    I, rho = palm.palm_intensity_estimate(r1, n, max_dist, bin_width)
    e_half = palm.empirical_autocorr(r1, n, max_dist, bin_width)
    alt = palm.empirical_autocorr_alt(r1, n, max_dist, bin_width)
    ana = model.analytic_reduced(max_dist, bin_width)
    c = np.exp(0.7j)
    rot = palm.ComplexMeasureRealization(r1.positions, r1.weights * c, r1.window_radius)
    e_rot = palm.empirical_autocorr(rot, n, max_dist, bin_width)
    quarter = palm.ComplexMeasureRealization(r1.positions, r1.weights * 1j, r1.window_radius)
    e_q = palm.empirical_autocorr(quarter, n, max_dist, bin_width)
    scale = np.max(np.abs(e_half.density))
    return {
        "nonrandom_l1": e1.l1(e2, -max_dist, max_dist),
        "palm_vs_autocorr_l1": I.scaled(rho).l1(e_half, -max_dist, max_dist),
        "palm_vs_analytic_l1": I.scaled(rho).l1(ana, -max_dist, max_dist),
        "conj_exact": bool(np.array_equal(alt.density, np.conj(e_half.density))
                           and alt.atom0 == np.conj(e_half.atom0)),
        "rotation_exact_quarter": bool(np.array_equal(e_q.density, e_half.density)
                                       and e_q.atom0 == e_half.atom0),
        "rotation_rel_dev": float(np.max(np.abs(e_rot.density - e_half.density)) / scale),
        "hermitian": e1.is_hermitian() and e_half.is_hermitian(),
        "rho": rho,
    }


# --------------------------------------------------------------------------
# determinism


def fingerprints(workers: int, seed: int = 99) -> dict:
    """Raw bytes of every Monte-Carlo output at reduced size, for a given worker count."""
    out = {}
    with threadpool_limits(workers):
        src = RandomSource(seed)
        out["bernoulli"] = stochastic.bernoulli_comb(0.3, 4096, src.generator()).values.tobytes()
        out["bernoullise"] = bernoullisation(N=2 ** 12, seed=seed, n_grid=2 ** 13)["spectra"][1].values.tobytes()
        out["dimer"] = dimer_checks(N=2 ** 12, seed=seed, n_grid=2 ** 13)["spectrum"].values.tobytes()
        out["ledrappier"] = stochastic.ledrappier_sample(64, src.generator()).values.tobytes()
        gue = stochastic.gue_samples(60, 16, src, workers)
        out["gue"] = b"".join(c.positions.tobytes() for c in gue)
        out["renewal"] = renewal.renewal_sample(renewal.gamma_family(5), 2e3, src.generator()).points.tobytes()
        out["fib_rt"] = renewal.fib_tiling_sample(4096, src.generator()).tobytes()
        reals = palm.MarkedProcessModel().samples(500.0, 8, src, workers)
        out["palm"] = b"".join(r.weights.tobytes() + r.positions.tobytes() for r in reals)
    return out
