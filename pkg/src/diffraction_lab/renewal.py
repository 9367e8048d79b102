"""Stationary renewal processes of unit density and their diffraction.

A waiting-time law with mean 1 drops points along the line; the diffraction is
``pp + (1 - h) lambda`` with ``1 - h = (1 - |rho^|^2)/|1 - rho^|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .comb import EmpiricalDensity, SpectralMeasure
from .errors import ModelError, NumericalError
from .rng import as_generator
from .substitution import TAU


@dataclass(frozen=True)
class WaitingTimeDistribution:
    """Gap law on ``(0, inf)`` with mean 1.

    Continuous laws carry ``pdf``; finitely supported laws carry ``atoms`` as
    ``(position, probability)`` pairs. ``lattice`` is the coarsest ``b`` with
    support in ``bZ`` (None if there is none). ``length_scale`` is the mean gap
    of the physical model this unit-mean law was scaled from.
    """

    name: str
    sampler: Callable
    fourier: Callable
    variance: float
    mean: float = 1.0
    lattice: Optional[float] = None
    pdf: Optional[Callable] = None
    atoms: Optional[tuple] = None
    length_scale: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.mean - 1.0) > 1e-9:
            raise ValueError(f"mean must be 1, got {self.mean}")
        if (self.pdf is None) == (self.atoms is None):
            raise ValueError("give exactly one of pdf and atoms")

    def sample(self, rng, size: int) -> np.ndarray:
        return np.asarray(self.sampler(as_generator(rng), size), dtype=float)


def exponential() -> WaitingTimeDistribution:
    return WaitingTimeDistribution(
        "exp", lambda g, n: g.exponential(1.0, n),
        lambda k: 1 / (1 + 2j * np.pi * np.asarray(k, dtype=float)),
        variance=1.0, pdf=lambda x: np.where(x >= 0, np.exp(-np.clip(x, 0, None)), 0.0))


def gamma_family(a: float) -> WaitingTimeDistribution:
    """Gamma law with shape ``a`` and rate ``a``: Poisson at ``a = 1``, lattice as ``a -> inf``."""
    if not a > 0:
        raise ValueError("shape must be positive")
    law = stats.gamma(a, scale=1 / a)
    return WaitingTimeDistribution(
        f"gamma:{a:g}", lambda g, n: g.gamma(a, 1 / a, n),
        lambda k: (1 + 2j * np.pi * np.asarray(k, dtype=float) / a) ** (-a),
        variance=1 / a, pdf=law.pdf, params={"a": a})


def delta() -> WaitingTimeDistribution:
    """All gaps equal to 1: the lattice Z up to phase."""
    return WaitingTimeDistribution(
        "delta", lambda g, n: np.ones(n),
        lambda k: np.exp(-2j * np.pi * np.asarray(k, dtype=float)),
        variance=0.0, lattice=1.0, atoms=((1.0, 1.0),))


FIB_MEAN_GAP = 1 + 1 / TAU ** 2   # long tile with frequency 1/tau, short with 1/tau^2


def fib_random_tiling() -> WaitingTimeDistribution:
    """Random Fibonacci tiling: gap ``tau`` w.p. ``1/tau``, gap ``1`` w.p. ``1/tau^2``.

    Gaps are divided by the mean ``1 + 1/tau^2`` so the law has mean 1;
    ``length_scale`` remembers the factor. ``{1, tau}`` lies in no lattice.
    """
    m = FIB_MEAN_GAP
    pl, ps = 1 / TAU, 1 / TAU ** 2
    long_, short = TAU / m, 1 / m
    var = pl * long_ ** 2 + ps * short ** 2 - 1

    def fourier(k):
        k = np.asarray(k, dtype=float)
        return pl * np.exp(-2j * np.pi * k * long_) + ps * np.exp(-2j * np.pi * k * short)

    return WaitingTimeDistribution(
        "fib", lambda g, n: np.where(g.random(n) < pl, long_, short), fourier,
        variance=var, atoms=((long_, pl), (short, ps)), length_scale=m)


_REGISTRY = {"exp": exponential, "gamma": gamma_family, "delta": delta, "fib": fib_random_tiling}


def get_distribution(spec: str) -> WaitingTimeDistribution:
    """Look up ``name`` or ``name:param`` (``exp``, ``gamma:5``, ``delta``, ``fib``)."""
    name, _, arg = spec.partition(":")
    if name not in _REGISTRY:
        raise ValueError(f"unknown distribution {name!r}; choose from {sorted(_REGISTRY)}")
    if name == "gamma":
        if not arg:
            raise ValueError("gamma needs a shape, e.g. gamma:5")
        return gamma_family(float(arg))
    if arg:
        raise ValueError(f"{name} takes no parameter")
    return _REGISTRY[name]()


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class RenewalRealization:
    points: np.ndarray
    L: float

    @property
    def density(self) -> float:
        return self.points.size / self.L


def renewal_sample(dist: WaitingTimeDistribution, L: float, rng, burn_in: float = 1e3) -> RenewalRealization:
    """Points in ``(0, L]`` of a process started ``burn_in`` mean gaps before 0."""
    if not L > 0:
        raise ValueError("L must be positive")
    g = as_generator(rng)
    total = L + burn_in
    pos = -burn_in
    chunks = []
    while True:
        n = int(total + 10 * np.sqrt(total) + 100)
        gaps = dist.sample(g, n)
        if np.any(~(gaps > 0)):
            raise ModelError(f"{dist.name} produced a nonpositive gap")
        x = pos + np.cumsum(gaps)
        chunks.append(x)
        pos = x[-1]
        if pos > L:
            break
        total = L - pos
    x = np.concatenate(chunks)
    return RenewalRealization(x[(x > 0) & (x <= L)], float(L))


# --------------------------------------------------------------------------
# renewal measure nu = mu + mu*mu + ...


@dataclass
class RenewalMeasure:
    """``nu`` on ``[0, X]``: a density on ``grid`` and/or point masses."""

    X: float
    grid: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    atoms: list = field(default_factory=list)
    n_terms: int = 0
    tail_mass: float = 0.0

    def mass(self, hi: Optional[float] = None) -> float:
        hi = self.X if hi is None else hi
        out = sum(m for x, m in self.atoms if x <= hi)
        if self.grid is not None:
            sel = self.grid <= hi
            out += np.trapezoid(self.density[sel], self.grid[sel])
        return float(out)


def _trapz_conv(f: np.ndarray, g: np.ndarray, dx: float) -> np.ndarray:
    n = f.size
    size = 1 << int(np.ceil(np.log2(2 * n)))
    full = np.fft.irfft(np.fft.rfft(f, size) * np.fft.rfft(g, size), size)[:n]
    return dx * (full - 0.5 * (f[0] * g + g[0] * f))


def renewal_measure(dist: WaitingTimeDistribution, X: float, dx: float = 5e-4,
                    n_terms: Optional[int] = None, tol: float = 1e-8) -> RenewalMeasure:
    """Truncated convolution series on ``[0, X]``.

    Continuous laws use trapezoidal convolutions on a grid of step ``dx``;
    finitely supported laws are convolved exactly. Summation stops once the
    next term carries less than ``tol`` mass on ``[0, X]``.
    """
    if not X > 0:
        raise ValueError("X must be positive")
    limit = n_terms if n_terms is not None else int(X + 10 * np.sqrt(X) + 50)
    if dist.atoms is not None:
        return _renewal_atoms(dist, X, limit, tol)
    x = np.arange(int(round(X / dx)) + 1) * dx
    mu = np.asarray(dist.pdf(x), dtype=float)
    if not np.all(np.isfinite(mu)):
        raise ValueError(f"{dist.name}: density is unbounded on the grid")
    nu = np.zeros_like(mu)
    term = mu.copy()
    for n in range(1, limit + 1):
        nu += term
        term = _trapz_conv(term, mu, dx)
        tail = np.trapezoid(term, x)
        if tail < tol:
            return RenewalMeasure(X, x, nu, n_terms=n, tail_mass=float(tail))
    raise NumericalError(f"series not converged after {limit} terms (tail mass {tail:.2e})")


def _renewal_atoms(dist, X, limit, tol):
    pts = np.array([p for p, _ in dist.atoms])
    probs = np.array([q for _, q in dist.atoms])
    nu = {}
    term = {(0,) * len(pts): 1.0}
    for n in range(1, limit + 1):
        nxt = {}
        for key, m in term.items():
            for i in range(len(pts)):
                k2 = key[:i] + (key[i] + 1,) + key[i + 1:]
                if float(np.dot(k2, pts)) <= X * (1 + 1e-12):
                    nxt[k2] = nxt.get(k2, 0.0) + m * probs[i]
        term = nxt
        for key, m in term.items():
            nu[key] = nu.get(key, 0.0) + m
        tail = sum(term.values())
        if tail < tol:
            atoms = _merge_atoms((float(np.dot(key, pts)), m) for key, m in nu.items())
            return RenewalMeasure(X, atoms=atoms, n_terms=n, tail_mass=tail)
    raise NumericalError(f"series not converged after {limit} terms")


def _merge_atoms(pairs, tol: float = 1e-9) -> list:
    """Sum masses of positions closer than ``tol``; sorted by position."""
    out = []
    for x, m in sorted(pairs):
        if out and x - out[-1][0] <= tol:
            out[-1] = (out[-1][0], out[-1][1] + m)
        else:
            out.append((x, m))
    return out


def renewal_residual(dist: WaitingTimeDistribution, nu: RenewalMeasure, frac: float = 0.8) -> float:
    """``||nu - mu - mu*nu||`` on ``[0, frac X]`` (L1 for densities, total variation for atoms)."""
    if nu.grid is not None:
        x, dx = nu.grid, nu.grid[1] - nu.grid[0]
        mu = dist.pdf(x)
        r = nu.density - mu - _trapz_conv(mu, nu.density, dx)
        sel = x <= frac * nu.X
        return float(np.trapezoid(np.abs(r[sel]), x[sel]))
    hi = frac * nu.X
    signed = [(x, m) for x, m in nu.atoms]
    signed += [(p, -q) for p, q in dist.atoms]
    signed += [(p + x0, -q * m) for (p, q), (x0, m) in product(dist.atoms, nu.atoms)]
    merged = _merge_atoms((x, m) for x, m in signed if x <= hi + 1e-9)
    return float(sum(abs(m) for x, m in merged if x <= hi))


@dataclass
class RenewalAutocorr:
    """``delta_0 + nu + reflected nu`` on ``[-X, X]``."""

    atom0: float
    grid: Optional[np.ndarray]
    density: Optional[np.ndarray]
    atoms: list


def renewal_autocorr(dist: WaitingTimeDistribution, X: float, **kw) -> RenewalAutocorr:
    nu = renewal_measure(dist, X, **kw)
    atoms = sorted([(-x, m) for x, m in nu.atoms] + list(nu.atoms))
    if nu.grid is None:
        return RenewalAutocorr(1.0, None, None, atoms)
    grid = np.concatenate([-nu.grid[:0:-1], nu.grid])
    dens = np.concatenate([nu.density[:0:-1], nu.density])
    return RenewalAutocorr(1.0, grid, dens, atoms)


def autocorr_transform(dist: WaitingTimeDistribution, nu: RenewalMeasure, k) -> np.ndarray:
    """``1 + 2 int_0^X (nu(x) - 1) cos(2 pi k x) dx`` for a continuous law.

    Numerical transform of the autocorrelation minus its mean, to be compared
    with the closed-form ac density.
    """
    if nu.grid is None:
        raise ValueError("needs a continuous renewal measure")
    k = np.asarray(k, dtype=float)
    x = nu.grid
    out = np.empty(k.size)
    for i, kk in enumerate(k):
        out[i] = 1 + 2 * np.trapezoid((nu.density - 1) * np.cos(2 * np.pi * kk * x), x)
    return out


# --------------------------------------------------------------------------
# diffraction


def _renewal_ac(dist: WaitingTimeDistribution, k: np.ndarray):
    """``1 - h`` on ``k``; on ``{rho^ = 1}`` the continuous extension, the variance."""
    rho = dist.fourier(k)
    den = np.abs(1 - rho) ** 2
    on_set = den < 1e-12
    safe = np.where(on_set, 1.0, den)
    vals = np.where(on_set, dist.variance, (1 - np.abs(rho) ** 2) / safe)
    return vals, on_set


def renewal_h(dist: WaitingTimeDistribution, k) -> np.ndarray:
    """``h = 2(|rho^|^2 - Re rho^)/|1 - rho^|^2``."""
    vals, _ = _renewal_ac(dist, np.asarray(k, dtype=float))
    return 1 - vals


def renewal_diffraction(dist: WaitingTimeDistribution, k_grid, physical: bool = False) -> SpectralMeasure:
    """Atoms plus ac density ``1 - h``.

    Atoms: ``delta_0`` for non-lattice laws, ``delta_{Z/b}`` otherwise. Grid
    points where ``rho^ = 1`` but which are not on that set are recorded in
    ``params['singular']``. With ``physical`` the spectrum refers to the
    unscaled process of mean gap ``length_scale``.
    """
    k = np.asarray(k_grid, dtype=float)
    s = dist.length_scale if physical else 1.0
    vals, on_set = _renewal_ac(dist, k * s)
    vals = vals / s
    spacing = 1.0 / dist.lattice if dist.lattice else None
    kk = k * s
    if spacing is None:
        expected = np.isclose(kk, 0.0, atol=1e-12)
    else:
        r = kk / spacing
        expected = np.isclose(r, np.rint(r), rtol=0, atol=1e-9)
    singular = k[on_set & ~expected].tolist()
    if spacing is None:
        atoms = [(0.0, 1.0 / s ** 2)] if k.min() <= 0 <= k.max() else []
    else:
        lo, hi = int(np.ceil(kk.min() / spacing - 1e-9)), int(np.floor(kk.max() / spacing + 1e-9))
        atoms = [(j * spacing / s, 1.0 / s ** 2) for j in range(lo, hi + 1)]
    return SpectralMeasure(atoms, EmpiricalDensity(k, np.clip(vals, 0, None)), dist.name,
                           {"singular": singular, "physical": physical})


def fib_rt_density(k, return_flags: bool = False):
    """Closed-form ac density of the random Fibonacci tiling; NaN where singular."""
    k = np.asarray(k, dtype=float)
    s2 = lambda t: np.sin(np.pi * t) ** 2
    den = TAU ** 2 * s2(k * TAU) + TAU * s2(k) - s2(k / TAU)
    flags = np.abs(den) < 1e-14
    out = np.where(flags, np.nan, (TAU + 2) / 5 * s2(k / TAU) / np.where(flags, 1.0, den))
    return (out, flags) if return_flags else out


def fib_tiling_sample(tiles: int, rng) -> np.ndarray:
    """Left endpoints (physical lengths ``tau`` and 1) of ``tiles`` i.i.d. tiles, from 0."""
    g = as_generator(rng)
    gaps = np.where(g.random(tiles) < 1 / TAU, TAU, 1.0)
    return np.concatenate([[0.0], np.cumsum(gaps)[:-1]])
