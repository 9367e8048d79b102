"""Weighted Dirac combs and the estimators shared by every model.

Fourier convention throughout: ``f^(k) = int exp(-2 pi i k x) f(x) dx``, so the
lattice comb on Z is its own transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np

# direct-summation chunk (k values per block); keeps peak memory bounded and
# the reduction order fixed
_CHUNK = 256


@dataclass(frozen=True)
class WeightedComb:
    """Finite realization ``sum_j w_j delta_{x_j}`` observed on ``[-r, r]``."""

    positions: np.ndarray
    weights: np.ndarray
    window_radius: float

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=complex).ravel()
        if x.shape != w.shape:
            raise ValueError("positions and weights must have the same length")
        if not self.window_radius > 0:
            raise ValueError("window_radius must be positive")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("positions must be strictly increasing")
        if x.size and np.max(np.abs(x)) > self.window_radius * (1 + 1e-12):
            raise ValueError("positions must lie inside the window")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "window_radius", float(self.window_radius))

    @classmethod
    def from_sequence(cls, values, spacing: float = 1.0) -> "WeightedComb":
        """Place ``values`` on a centred lattice; each site owns one unit cell.

        For ``2N+1`` values this is ``Z cap [-N, N]`` with window radius ``N + 1/2``.
        """
        v = np.asarray(values)
        n = v.size
        if n == 0:
            raise ValueError("empty sequence")
        x = (np.arange(n) - (n - 1) / 2) * spacing
        return cls(x, v, n * spacing / 2)

    @classmethod
    def from_points(cls, points, weights=None, window: Optional[tuple] = None) -> "WeightedComb":
        """Recentre a point set observed on ``window = (lo, hi)`` (default: hull)."""
        p = np.sort(np.asarray(points, dtype=float))
        lo, hi = window if window is not None else (p[0], p[-1])
        c = (lo + hi) / 2
        r = max((hi - lo) / 2, 1e-300)
        w = np.ones(p.size) if weights is None else weights
        return cls(p - c, w, r)

    @property
    def volume(self) -> float:
        return 2 * self.window_radius

    def __len__(self):
        return self.positions.size


@dataclass
class AutocorrCoeffs:
    """Lattice autocorrelation coefficients ``eta(m)`` for ``|m| <= max_lag``.

    ``values[m + max_lag]`` holds ``eta(m)``. An ``object`` array keeps exact
    rationals exact.
    """

    values: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size % 2 == 0:
            raise ValueError("values must cover the symmetric range [-M, M]")
        self.values = v

    @property
    def max_lag(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)

    def __getitem__(self, m: int):
        if abs(m) > self.max_lag:
            raise KeyError(m)
        return self.values[m + self.max_lag]

    @classmethod
    def from_function(cls, eta, max_lag: int, spacing: float = 1.0) -> "AutocorrCoeffs":
        vals = np.empty(2 * max_lag + 1, dtype=object)
        for m in range(-max_lag, max_lag + 1):
            vals[m + max_lag] = eta(m)
        return cls(vals, spacing)

    def as_complex(self) -> np.ndarray:
        return np.array([complex(v) for v in self.values]) if self.values.dtype == object \
            else self.values.astype(complex)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        v = self.as_complex()
        scale = max(abs(v[self.max_lag]), 1.0)
        return bool(np.all(np.abs(v - np.conj(v[::-1])) <= tol * scale))


@dataclass
class EmpiricalDensity:
    """Density samples on a uniform grid.

    ``period`` is set when the grid covers exactly one period of a periodic
    density (smoothing then wraps around instead of reflecting).
    """

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float = 0.0
    period: Optional[float] = None
    imag: Optional[np.ndarray] = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")
        if self.grid.size > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    def integral(self) -> float:
        return float(self.values.sum() * self.step)

    def restrict(self, lo: float, hi: float) -> "EmpiricalDensity":
        sel = (self.grid >= lo) & (self.grid <= hi)
        return EmpiricalDensity(self.grid[sel], self.values[sel], self.bandwidth)


@dataclass
class SpectralMeasure:
    """Pure point atoms plus an absolutely continuous density."""

    atoms: list
    ac_density: EmpiricalDensity
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        atoms = [(float(k), float(i)) for k, i in self.atoms]
        if any(i <= 0 for _, i in atoms):
            raise ValueError("atom intensities must be positive")
        ks = [k for k, _ in atoms]
        if len(set(ks)) != len(ks):
            raise ValueError("atom positions must be distinct")
        if np.any(self.ac_density.values < -1e-9):
            raise ValueError("ac density must be nonnegative")
        self.atoms = atoms

    def atom_at(self, k: float, tol: float = 1e-9) -> float:
        return sum(i for kk, i in self.atoms if abs(kk - k) <= tol)


def l1_distance(a, b, lo: float, hi: float, grid=None) -> float:
    """``int_lo^hi |a - b| dk`` for densities (or arrays on ``grid``)."""
    if isinstance(a, EmpiricalDensity):
        grid = a.grid
        a = a.values
    if isinstance(b, EmpiricalDensity):
        b = b.values
    grid = np.asarray(grid)
    sel = (grid >= lo) & (grid <= hi)
    step = grid[1] - grid[0]
    return float(np.sum(np.abs(np.asarray(a)[sel] - np.asarray(b)[sel])) * step)


# --------------------------------------------------------------------------
# lattice autocorrelation


def autocorr_lattice(w, max_lag: int) -> AutocorrCoeffs:
    """Bias-corrected autocorrelation coefficients of a finite sequence.

    ``eta(m) = 1/(L - |m|) sum_n w(n) conj(w(n - m))`` over the ``L`` sites,
    with ``eta(-m) = conj(eta(m))`` imposed exactly.
    """
    w = np.asarray(w)
    n = w.size
    if max_lag < 0 or max_lag >= n // 2:
        raise ValueError(f"max_lag={max_lag} must be below half the sequence length ({n // 2})")
    wc = w.astype(complex)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.fft(wc, size)
    # corr[m] = sum_n w(n) conj(w(n-m))
    corr = np.fft.ifft(f * np.conj(f))[: max_lag + 1]
    if np.isrealobj(w) or not np.any(wc.imag):
        corr = corr.real.astype(complex)
    if np.issubdtype(w.dtype, np.integer):
        corr = np.rint(corr.real).astype(complex)
    pos = corr / (n - np.arange(max_lag + 1))
    pos[0] = pos[0].real
    vals = np.concatenate([np.conj(pos[:0:-1]), pos])
    return AutocorrCoeffs(vals)


def _times_conj(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``u * conj(v)`` in explicit real arithmetic.

    Unlike the fused complex product this is bitwise invariant under a common
    quarter turn ``u, v -> i u, i v``.
    """
    a, b, c, d = u.real, u.imag, v.real, v.imag
    return (a * c + b * d) + 1j * (b * c - a * d)


def autocorr_point_pairs(positions, weights, max_dist: float):
    """Ordered pairs ``i != j`` with ``0 < x_i - x_j <= max_dist``.

    Returns ``(d, prod)`` with ``prod = w_i conj(w_j)``; the mirrored pairs
    carry ``-d`` and the conjugate product. ``positions`` must be sorted.
    """
    x = np.asarray(positions, dtype=float)
    w = np.asarray(weights, dtype=complex)
    ds, ps = [], []
    for off in range(1, x.size):
        d = x[off:] - x[:-off]
        keep = d <= max_dist
        if not keep.any():
            break
        ds.append(d[keep])
        ps.append(_times_conj(w[off:][keep], w[:-off][keep]))
    if not ds:
        return np.empty(0), np.empty(0, complex)
    return np.concatenate(ds), np.concatenate(ps)


def pair_histogram(d, prod, max_dist: float, bin_width: float):
    """Bin positive-lag pair products and mirror them hermitian-symmetrically.

    Bins are left-closed on the positive side, ``[j b, (j+1) b)``; the
    negative side is the mirror image. Returns ``(centres, sums)``.
    """
    nb = int(round(max_dist / bin_width))
    if not np.isclose(nb * bin_width, max_dist, rtol=1e-12, atol=0):
        raise ValueError("max_dist must be a multiple of bin_width")
    idx = np.floor(d / bin_width).astype(np.int64)
    keep = idx < nb
    pos = np.bincount(idx[keep], weights=prod[keep].real, minlength=nb) \
        + 1j * np.bincount(idx[keep], weights=prod[keep].imag, minlength=nb)
    sums = np.concatenate([np.conj(pos[::-1]), pos])
    centres = (np.arange(-nb, nb) + 0.5) * bin_width
    return centres, sums


def autocorr_pointset(comb: WeightedComb, max_dist: float, bin_width: float):
    """Volume-averaged autocorrelation of a finite comb.

    Returns ``(atom0, density)``: the mass at the origin ``sum |w|^2 / vol``
    and the binned off-diagonal part ``sum_{i!=j} w_i conj(w_j)`` over the
    signed distance, divided by ``vol * bin_width``. For complex weights the
    imaginary part of the density is kept in ``density.imag``.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if max_dist >= 2 * comb.window_radius:
        raise ValueError("max_dist must be smaller than the window diameter")
    vol = comb.volume
    nb = int(round(max_dist / bin_width))
    if len(comb) == 0:
        centres = (np.arange(-nb, nb) + 0.5) * bin_width
        return 0.0, EmpiricalDensity(centres, np.zeros(centres.size), bin_width)
    atom0 = float(np.sum(np.abs(comb.weights) ** 2) / vol)
    d, prod = autocorr_point_pairs(comb.positions, comb.weights, max_dist)
    centres, sums = pair_histogram(d, prod, max_dist, bin_width)
    dens = sums / (vol * bin_width)
    return atom0, EmpiricalDensity(centres, dens.real, bin_width, imag=dens.imag)


# --------------------------------------------------------------------------
# periodogram


def _lattice_indices(x: np.ndarray):
    """``(x0, s, n)`` with ``x = x0 + s*n`` for integer ``n``, or None."""
    if x.size < 2:
        return (float(x[0]) if x.size else 0.0), 1.0, np.zeros(x.size, np.int64)
    s = float(np.min(np.diff(x)))
    n = (x - x[0]) / s
    ni = np.rint(n)
    if not np.array_equal(n, ni):
        return None
    return float(x[0]), s, ni.astype(np.int64)


def _uniform_step(k: np.ndarray):
    if k.size < 2:
        return None
    dk = (k[-1] - k[0]) / (k.size - 1)
    if dk <= 0 or not np.allclose(np.diff(k), dk, rtol=1e-9, atol=0):
        return None
    return dk


def _sums_direct(x, w, k):
    out = np.empty(k.size, dtype=complex)
    for lo in range(0, k.size, _CHUNK):
        kk = k[lo:lo + _CHUNK]
        out[lo:lo + _CHUNK] = (np.exp(-2j * np.pi * np.outer(kk, x)) * w).sum(axis=1)
    return out


def _sums_fft(x0, s, n, w, k, dk):
    """Exact FFT evaluation for lattice positions on a compatible uniform grid."""
    m_float = 1.0 / (dk * s)
    M = int(round(m_float))
    q = k / dk
    qi = np.rint(q)
    if M < 1 or abs(m_float - M) > 1e-9 * M or np.max(np.abs(q - qi)) > 1e-6:
        return None
    folded = np.zeros(M, dtype=complex)
    np.add.at(folded, n % M, w)
    spec = np.fft.fft(folded)
    return spec[qi.astype(np.int64) % M] * np.exp(-2j * np.pi * k * x0)


def _sums_taylor(x, w, k, dk, eps=1e-14):
    """Exponential sums on a uniform k-grid via Taylor-corrected FFTs.

    Positions are split as ``x = g*delta + delta/2 + r`` with ``|r| <= delta/2``
    and ``exp(-2 pi i k r)`` is expanded to the order needed for ``eps``.
    """
    J = k.size
    k0 = k[0]
    period = 1.0 / dk
    w = w * np.exp(-2j * np.pi * k0 * x)
    xs = np.mod(x - x.min(), period)
    M = 1 << int(np.ceil(np.log2(max(2 * J, 64))))
    delta = period / M
    g = np.minimum(np.floor(xs / delta).astype(np.int64), M - 1)
    r = xs - (g + 0.5) * delta
    rel = np.arange(J) * dk
    zmax = np.pi * rel[-1] * delta
    P, term = 0, 1.0
    while term > eps and P < 60:
        P += 1
        term = zmax ** P / factorial(P)
    out = np.zeros(J, dtype=complex)
    rp = np.ones_like(r)
    for p in range(P + 1):
        c = w * rp
        grid = np.bincount(g, weights=c.real, minlength=M) + 1j * np.bincount(g, weights=c.imag, minlength=M)
        out += ((-2j * np.pi * rel) ** p / factorial(p)) * np.fft.fft(grid)[:J]
        rp = rp * r
    return out * np.exp(-2j * np.pi * rel * (x.min() + delta / 2))


def exponential_sums(comb: WeightedComb, k_grid, method: str = "auto") -> np.ndarray:
    """``S(k) = sum_j w_j exp(-2 pi i k x_j)`` on ``k_grid``."""
    k = np.asarray(k_grid, dtype=float)
    x, w = comb.positions, comb.weights
    if method not in ("auto", "fft", "direct", "taylor"):
        raise ValueError(f"unknown method {method!r}")
    dk = _uniform_step(k)
    if method in ("auto", "fft"):
        lat = _lattice_indices(x)
        if lat is not None and dk is not None:
            res = _sums_fft(*lat, w, k, dk)
            if res is not None:
                return res
        if method == "fft":
            raise ValueError("comb/grid not compatible with the FFT path")
    if method == "taylor" or (method == "auto" and dk is not None and k.size * x.size > 4_000_000):
        if dk is None:
            raise ValueError("Taylor path needs a uniform k-grid")
        return _sums_taylor(x, w, k, dk)
    return _sums_direct(x, w, k)


def periodogram(comb: WeightedComb, k_grid, method: str = "auto") -> EmpiricalDensity:
    """Diffraction estimator ``|sum_j w_j exp(-2 pi i k x_j)|^2 / (2 r)``.

    Lattice-supported combs on a matching uniform grid go through an exact
    FFT; other uniform grids with many points use a Taylor-corrected FFT;
    everything else is summed directly.
    """
    if len(comb) == 0:
        raise ValueError("periodogram of an empty comb")
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or k.size == 0 or not np.all(np.isfinite(k)):
        raise ValueError("invalid k-grid")
    s = exponential_sums(comb, k, method)
    vals = np.abs(s) ** 2 / comb.volume
    period = None
    lat = _lattice_indices(comb.positions)
    dk = _uniform_step(k)
    if lat is not None and dk is not None and np.isclose(k.size * dk * lat[1], 1.0, rtol=1e-12):
        period = 1.0 / lat[1]
    return EmpiricalDensity(k, vals, 0.0, period)


def unit_period_grid(n: int, spacing: float = 1.0) -> np.ndarray:
    """``n`` equispaced points covering one period ``[0, 1/spacing)``."""
    return np.arange(n) / (n * spacing)


# --------------------------------------------------------------------------
# smoothing


def triangular_kernel(bandwidth: float, step: float) -> np.ndarray:
    """Normalized discrete triangle of half-width ``bandwidth``."""
    m = int(np.floor(bandwidth / step + 1e-9))
    j = np.arange(-m, m + 1)
    ker = np.clip(1 - np.abs(j) * step / bandwidth, 0, None)
    return ker / ker.sum()


def smooth(density: EmpiricalDensity, bandwidth: float) -> EmpiricalDensity:
    """Fejer-type (triangular) smoothing that conserves the total integral.

    Periodic densities wrap around; otherwise mass spilling past an end of the
    grid is reflected back inside.
    """
    step = density.step
    if bandwidth < step * (1 - 1e-9):
        raise ValueError("bandwidth must be at least one grid step")
    ker = triangular_kernel(bandwidth, step)
    m = ker.size // 2
    v = density.values
    n = v.size
    if m >= n:
        raise ValueError("bandwidth wider than the grid")
    if density.period is not None:
        circ = np.zeros(n)
        np.add.at(circ, np.arange(-m, m + 1) % n, ker)
        out = np.fft.irfft(np.fft.rfft(v) * np.fft.rfft(circ), n)
    else:
        full = np.convolve(v, ker)  # full[i] sits at grid index i - m
        out = full[m:m + n].copy()
        out[:m] += full[:m][::-1]
        out[n - m:] += full[m + n:][::-1]
    return EmpiricalDensity(density.grid, out, bandwidth, density.period)


# --------------------------------------------------------------------------
# coefficients -> density, Wiener criterion


def eta_to_density(coeffs: AutocorrCoeffs, k_grid) -> EmpiricalDensity:
    """Fejer-summed Fourier series ``sum (1 - |m|/(M+1)) eta(m) exp(-2 pi i k m)``."""
    if not coeffs.is_hermitian(1e-10):
        raise ValueError("coefficients are not hermitian")
    k = np.asarray(k_grid, dtype=float)
    M = coeffs.max_lag
    eta = coeffs.as_complex()
    m = np.arange(1, M + 1)
    fej = 1 - m / (M + 1)
    pos = eta[M + 1:] * fej
    x = k * coeffs.spacing
    out = np.empty(k.size)
    for lo in range(0, k.size, _CHUNK):
        ph = np.exp(-2j * np.pi * np.outer(x[lo:lo + _CHUNK], m))
        out[lo:lo + _CHUNK] = eta[M].real + 2 * (ph @ pos).real
    period = 1.0 / coeffs.spacing
    dk = _uniform_step(k)
    per = period if dk is not None and np.isclose(k.size * dk, period, rtol=1e-12) else None
    return EmpiricalDensity(k, out, 0.0, per)


def wiener_sigma(coeffs: AutocorrCoeffs, N: int):
    """``Sigma(N) = sum_{|m| <= N} |eta(m)|^2``; exact for rational coefficients."""
    if N < 0 or N > coeffs.max_lag:
        raise ValueError(f"N={N} exceeds the available lags ({coeffs.max_lag})")
    M = coeffs.max_lag
    vals = coeffs.values[M - N:M + N + 1]
    if vals.dtype == object:
        return sum((abs(v) ** 2 for v in vals), start=0 * vals[0])
    return float(np.sum(np.abs(vals) ** 2))


# --------------------------------------------------------------------------
# atoms by window scaling


@dataclass(frozen=True)
class AtomEstimate:
    k: float
    intensity: float
    ratio: float
    is_atom: bool


def atom_by_window_scaling(small: WeightedComb, large: WeightedComb, k: float,
                           threshold: float = 1.5) -> AtomEstimate:
    """Separate an atom at ``k`` from diffuse scattering by peak-height growth.

    The periodogram at an atom grows like ``I * vol``; the slope between the
    two windows estimates ``I``. With a doubled window, an atom gives a height
    ratio near 2 and a continuous spectrum a ratio near 1.
    """
    p1 = periodogram(small, [k], method="direct").values[0]
    p2 = periodogram(large, [k], method="direct").values[0]
    slope = (p2 - p1) / (large.volume - small.volume)
    ratio = p2 / p1 if p1 > 0 else np.inf
    return AtomEstimate(float(k), float(slope), float(ratio), bool(ratio >= threshold))
