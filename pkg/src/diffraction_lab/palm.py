"""Complex-valued random measures: reduced second moment and Palm-type intensity.

Realizations are atomic, ``Phi = sum_j w_j delta_{x_j}`` with complex ``w_j``,
observed on a centred window. Everything is normalized by the window length
``2n`` of the ball ``B_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .comb import WeightedComb, autocorr_point_pairs, pair_histogram
from .renewal import WaitingTimeDistribution, get_distribution, renewal_sample
from .rng import as_generator, run_replicas


@dataclass(frozen=True)
class ComplexMeasureRealization(WeightedComb):
    """Atomic complex measure on ``[-r, r]``."""

    def restrict(self, n: float) -> "ComplexMeasureRealization":
        """``Phi_n``: the atoms in ``[-n, n]``."""
        if n > self.window_radius * (1 + 1e-12):
            raise ValueError("n exceeds the observation window")
        sel = np.abs(self.positions) <= n
        return ComplexMeasureRealization(self.positions[sel], self.weights[sel], n)


@dataclass
class ReducedSecondMoment:
    """Atom at 0 plus a binned complex density on a symmetric grid."""

    atom0: complex
    grid: np.ndarray
    density: np.ndarray
    bin_width: float

    def is_hermitian(self) -> bool:
        return bool(np.array_equal(self.density[::-1], np.conj(self.density))
                    and np.imag(self.atom0) == 0)

    def conj(self) -> "ReducedSecondMoment":
        return ReducedSecondMoment(np.conj(self.atom0), self.grid, np.conj(self.density), self.bin_width)

    def scaled(self, c: complex) -> "ReducedSecondMoment":
        return ReducedSecondMoment(self.atom0 * c, self.grid, self.density * c, self.bin_width)

    def l1(self, other: "ReducedSecondMoment", lo: float = -np.inf, hi: float = np.inf) -> float:
        """Total variation distance on ``[lo, hi]``: atom difference plus integrated density."""
        if not np.allclose(self.grid, other.grid):
            raise ValueError("grids differ")
        sel = (self.grid >= lo) & (self.grid <= hi)
        diff = np.abs(self.density[sel] - other.density[sel]).sum() * self.bin_width
        return float(abs(self.atom0 - other.atom0) + diff)


def polar_decompose(realization: WeightedComb):
    """``(positions, |w|, phase in [0, 2 pi))`` with zero-weight atoms dropped."""
    w = realization.weights
    keep = w != 0
    phase = np.mod(np.angle(w[keep]), 2 * np.pi)
    phase[phase >= 2 * np.pi] = 0.0  # tiny negative angles round up to 2 pi
    return realization.positions[keep], np.abs(w[keep]), phase


def _window(realization: WeightedComb, n: float) -> WeightedComb:
    if n > realization.window_radius * (1 + 1e-12):
        raise ValueError("n exceeds the observation window")
    sel = np.abs(realization.positions) <= n
    return WeightedComb(realization.positions[sel], realization.weights[sel], n)


def _binned(d, prod, max_dist, bin_width, n, atom):
    centres, sums = pair_histogram(d, prod, max_dist, bin_width)
    return ReducedSecondMoment(complex(atom), centres, sums / (2 * n * bin_width), bin_width)


def empirical_autocorr(realization: WeightedComb, n: float, max_dist: float = 5.0,
                       bin_width: float = 0.1) -> ReducedSecondMoment:
    """``(Phi_n * Phi_n~)/2n``: mass ``w_i conj(w_j)`` at ``x_i - x_j``, binned.

    The negative side is the conjugate mirror of the positive side, so the
    output is hermitian by construction.
    """
    c = _window(realization, n)
    d, prod = autocorr_point_pairs(c.positions, c.weights, max_dist)
    atom = np.sum(np.abs(c.weights) ** 2) / (2 * n)
    return _binned(d, prod, max_dist, bin_width, n, atom)


def empirical_autocorr_alt(realization: WeightedComb, n: float, max_dist: float = 5.0,
                           bin_width: float = 0.1) -> ReducedSecondMoment:
    """Same pairs with the other factor conjugated: mass ``w_i conj(w_j)`` at ``x_j - x_i``."""
    c = _window(realization, n)
    d, prod = autocorr_point_pairs(c.positions, c.weights, max_dist)
    atom = np.sum(np.abs(c.weights) ** 2) / (2 * n)
    return _binned(d, np.conj(prod), max_dist, bin_width, n, atom)


def _ordered_pairs(x, max_dist):
    """Yield index arrays ``(i, j)`` of ordered pairs with ``0 < |x_i - x_j| < max_dist``.

    ``x`` must be sorted; both orientations of each pair are produced.
    """
    for off in range(1, x.size):
        lo = np.arange(0, x.size - off)
        hi = lo + off
        near = x[hi] - x[lo] < max_dist
        if not near.any():
            break
        lo, hi = lo[near], hi[near]
        yield hi, lo
        yield lo, hi


def _lag_bins(lag, bin_width, nb):
    """Bin index on the symmetric grid; mirror-image bins for negative lags."""
    pos = lag >= 0
    idx = np.where(pos, nb + np.floor(lag / bin_width), nb - 1 - np.floor(-lag / bin_width))
    return idx.astype(np.int64)


def _accumulate(idx, vals, nb):
    keep = (idx >= 0) & (idx < 2 * nb)
    return np.bincount(idx[keep], vals[keep].real, 2 * nb) \
        + 1j * np.bincount(idx[keep], vals[keep].imag, 2 * nb)


def _n_bins(max_dist, bin_width):
    nb = int(round(max_dist / bin_width))
    if not np.isclose(nb * bin_width, max_dist, rtol=1e-12, atol=0):
        raise ValueError("max_dist must be a multiple of bin_width")
    return nb


def boundary_term_check(realization: WeightedComb, n: float, max_dist: float = 5.0,
                        bin_width: float = 0.1) -> float:
    """Total variation of the binned ``(Phi_n * Phi~ - Phi_n * Phi_n~)/2n``.

    Only pairs with one atom inside ``B_n`` and the other outside contribute.
    """
    if n >= realization.window_radius / 2:
        raise ValueError("n must be below half the window radius")
    nb = _n_bins(max_dist, bin_width)
    x, w = realization.positions, realization.weights
    inside = np.abs(x) <= n
    sums = np.zeros(2 * nb, dtype=complex)
    for i, j in _ordered_pairs(x, max_dist):
        sel = inside[i] & ~inside[j]
        if sel.any():
            i, j = i[sel], j[sel]
            sums += _accumulate(_lag_bins(x[i] - x[j], bin_width, nb), w[i] * np.conj(w[j]), nb)
    return float(np.abs(sums).sum() / (2 * n))


def palm_intensity_estimate(realization: WeightedComb, n: float, max_dist: float = 5.0,
                            bin_width: float = 0.1):
    """Ergodic estimate of ``I_P0`` on bins of width ``bin_width``.

    Each atom ``x`` in ``B_n`` rotates the whole configuration by
    ``exp(-i phase(x))``, recentres it at ``x`` and contributes the rotated
    masses seen within ``max_dist``, weighted by ``|w(x)|``. Normalized by
    ``rho * 2n`` with ``rho = |Phi|(B_n) / 2n``.

    Returns ``(I_P0, rho)``; ``rho * I_P0`` estimates the reduced second moment.
    """
    if n > realization.window_radius * (1 + 1e-12):
        raise ValueError("n exceeds the observation window")
    nb = _n_bins(max_dist, bin_width)
    x, w = realization.positions, realization.weights
    inside = np.abs(x) <= n
    mod = np.abs(w)
    if not np.any(inside & (mod > 0)):
        raise ValueError("no support inside the window")
    rho = mod[inside].sum() / (2 * n)
    rot = np.exp(-1j * np.angle(w))
    atom = np.sum(mod[inside] * (w[inside] * rot[inside]))
    sums = np.zeros(2 * nb, dtype=complex)
    # c: the atom the configuration is recentred at; y: the atom seen from it
    for y, c in _ordered_pairs(x, max_dist):
        sel = inside[c]
        y, c = y[sel], c[sel]
        sums += _accumulate(_lag_bins(x[y] - x[c], bin_width, nb), mod[c] * (w[y] * rot[c]), nb)
    norm = rho * 2 * n
    centres = (np.arange(-nb, nb) + 0.5) * bin_width
    return ReducedSecondMoment(complex(atom / norm), centres, sums / (norm * bin_width), bin_width), float(rho)


def campbell_pairing(g: Callable, realizations, x_support: Optional[tuple] = None) -> complex:
    """Average over realizations of ``sum_x g(x, positions, e^{-i phase(x)} w) |w(x)|``.

    ``g`` receives the atom ``x`` and the whole configuration rotated by the
    phase at ``x``; ``x_support = (lo, hi)`` limits the outer sum.
    """
    realizations = list(realizations)
    if not realizations:
        raise ValueError("need at least one realization")
    total = 0j
    for r in realizations:
        x, w = r.positions, r.weights
        sel = np.abs(w) > 0
        if x_support is not None:
            sel &= (x >= x_support[0]) & (x <= x_support[1])
        for i in np.flatnonzero(sel):
            rot = np.exp(-1j * np.angle(w[i]))
            total += g(x[i], x, w * rot) * abs(w[i])
    return complex(total / len(realizations))


def window_mass(A: tuple):
    """Test function ``phi -> phi(A)`` for ``A = [lo, hi)``."""
    lo, hi = A

    def mass(positions, weights):
        sel = (positions >= lo) & (positions < hi)
        return weights[sel].sum()
    return mass


def second_moment_direct(realizations, A: tuple, A2: tuple) -> complex:
    """Average of ``Phi(A) conj(Phi(A2))``."""
    fa, fb = window_mass(A), window_mass(A2)
    vals = [fa(r.positions, r.weights) * np.conj(fb(r.positions, r.weights)) for r in realizations]
    return complex(np.mean(vals))


# --------------------------------------------------------------------------
# positive-definiteness surrogate


def cubic_bspline(u):
    """Centred cubic B-spline on ``[-2, 2]`` (four unit boxes convolved)."""
    a = np.abs(np.asarray(u, dtype=float))
    return np.where(a <= 1, 2 / 3 - a ** 2 + a ** 3 / 2,
                    np.where(a <= 2, (2 - a) ** 3 / 6, 0.0))


def pd_functional(realization: WeightedComb, n: float, scale: float, freq: float = 0.0):
    """``mu_red(f * f~)`` for ``f = tri_scale(x) exp(2 pi i freq x)``, unbinned.

    ``tri_scale`` is the unit-height triangle of half-width ``scale``, so
    ``f * f~(v) = scale * B3(v/scale) exp(2 pi i freq v)``. Returns
    ``(value, ||f||^2)``; the value is nonnegative up to rounding.
    """
    c = _window(realization, n)
    d, prod = autocorr_point_pairs(c.positions, c.weights, 2 * scale)
    g = scale * cubic_bspline(d / scale) * np.exp(2j * np.pi * freq * d)
    # each unordered pair appears once with lag d > 0; its mirror adds the conjugate
    off = 2 * np.sum(prod * g).real
    diag = np.sum(np.abs(c.weights) ** 2) * scale * cubic_bspline(0.0)
    return float((diag + off) / (2 * n)), 2 * scale / 3


# --------------------------------------------------------------------------
# models


def phase_marks(amplitude: float = 0.5):
    """Marks ``1 + amplitude * exp(i U)`` with ``U`` uniform on ``[0, 2 pi)``."""
    def draw(g, size):
        return 1 + amplitude * np.exp(2j * np.pi * g.random(size))
    return draw, 1.0 + 0j, 1.0 + amplitude ** 2


def unit_marks():
    return (lambda g, size: np.ones(size, dtype=complex)), 1.0 + 0j, 1.0


@dataclass
class MarkedProcessModel:
    """Poisson or renewal ground process with i.i.d. complex marks."""

    ground: str = "poisson"
    rate: float = 1.0
    renewal: Optional[WaitingTimeDistribution] = None
    mark_amplitude: Optional[float] = 0.5
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ground not in ("poisson", "renewal"):
            raise ValueError("ground must be 'poisson' or 'renewal'")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.ground == "renewal" and self.renewal is None:
            raise ValueError("renewal ground needs a waiting-time law")
        if self.ground == "renewal" and self.rate != 1.0:
            raise ValueError("renewal ground processes have unit rate")

    @classmethod
    def from_json(cls, spec: dict) -> "MarkedProcessModel":
        """``{"ground": {"type": ..., "rate" | "dist": ...}, "marks": {"type": "phase" | "unit", ...}}``."""
        ground = spec.get("ground", {"type": "poisson"})
        marks = spec.get("marks", {"type": "phase"})
        kind = ground.get("type", "poisson")
        if marks.get("type", "phase") == "unit":
            amp = None
        elif marks.get("type") in (None, "phase"):
            amp = float(marks.get("amplitude", 0.5))
        else:
            raise ValueError(f"unknown mark type {marks.get('type')!r}")
        if kind == "renewal":
            return cls("renewal", 1.0, get_distribution(ground["dist"]), amp, spec)
        return cls("poisson", float(ground.get("rate", 1.0)), None, amp, spec)

    def _marks(self):
        return unit_marks() if self.mark_amplitude is None else phase_marks(self.mark_amplitude)

    @property
    def mean_mark(self) -> complex:
        return self._marks()[1]

    @property
    def mean_sq_mark(self) -> float:
        return self._marks()[2]

    def sample(self, radius: float, rng) -> ComplexMeasureRealization:
        g = as_generator(rng)
        if self.ground == "poisson":
            count = g.poisson(2 * radius * self.rate)
            x = np.sort(g.uniform(-radius, radius, count))
        else:
            r = renewal_sample(self.renewal, 2 * radius, g)
            x = r.points - radius
        w = self._marks()[0](g, x.size)
        return ComplexMeasureRealization(x, w, radius)

    def samples(self, radius: float, count: int, source, workers: int = 1) -> list:
        return run_replicas(lambda g: self.sample(radius, g), source, count, workers)

    def analytic_reduced(self, max_dist: float = 5.0, bin_width: float = 0.1) -> ReducedSecondMoment:
        """Poisson ground: atom ``rho E|W|^2`` plus flat density ``rho^2 |E W|^2``."""
        if self.ground != "poisson":
            raise NotImplementedError("closed form only for the Poisson ground process")
        nb = int(round(max_dist / bin_width))
        centres = (np.arange(-nb, nb) + 0.5) * bin_width
        flat = self.rate ** 2 * abs(self.mean_mark) ** 2
        return ReducedSecondMoment(complex(self.rate * self.mean_sq_mark), centres,
                                   np.full(centres.size, flat, dtype=complex), bin_width)
