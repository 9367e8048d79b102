"""Random combs with known diffraction.

Bernoulli coin tossing and Bernoullisation, random dimers and their factor,
the Ledrappier shift on a square window, and unfolded GUE spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comb import (EmpiricalDensity, SpectralMeasure, WeightedComb, exponential_sums,
                   smooth)
from .rng import as_generator, run_replicas
from .substitution import SignedSequence


def _check_prob(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")


def _signs(rng, p: float, size) -> np.ndarray:
    return np.where(rng.random(size) < p, 1, -1).astype(np.int8)


def _integer_atoms(k_grid, spacing: float, intensity: float) -> list:
    if intensity <= 0:
        return []
    k = np.asarray(k_grid, dtype=float)
    lo = int(np.ceil(k.min() / spacing - 1e-12))
    hi = int(np.floor(k.max() / spacing + 1e-12))
    return [(j * spacing, intensity) for j in range(lo, hi + 1)]


# --------------------------------------------------------------------------
# Bernoulli


def bernoulli_comb(p: float, N: int, rng) -> SignedSequence:
    """I.i.d. signs on ``[-N, N]`` with ``P(+1) = p``."""
    _check_prob(p)
    if N < 0:
        raise ValueError("N must be nonnegative")
    return SignedSequence(_signs(as_generator(rng), p, 2 * N + 1), -N)


def bernoulli_analytic(p: float, k_grid) -> SpectralMeasure:
    """Atoms ``(2p-1)^2`` on the integers plus the flat density ``4p(1-p)``."""
    _check_prob(p)
    k = np.asarray(k_grid, dtype=float)
    dens = EmpiricalDensity(k, np.full(k.size, 4 * p * (1 - p)))
    return SpectralMeasure(_integer_atoms(k, 1.0, (2 * p - 1) ** 2), dens, "bernoulli", {"p": p})


def entropy(p: float) -> float:
    """Natural-log entropy of a ``p``-coin; 0 at the endpoints."""
    _check_prob(p)
    return float(-sum(q * np.log(q) for q in (p, 1 - p) if q > 0))


def bernoullise(w, p: float, rng) -> SignedSequence:
    """Flip each sign independently with probability ``1 - p``."""
    _check_prob(p)
    if not isinstance(w, SignedSequence):
        w = SignedSequence(w)
    x = _signs(as_generator(rng), p, len(w))
    return SignedSequence(w.values * x, w.start)


# --------------------------------------------------------------------------
# dimers


@dataclass(frozen=True)
class DimerWord:
    """Random dimer decoration on ``[start, start + len)``.

    Dimers occupy ``{2j + offset, 2j + 1 + offset}``; equal neighbours can only
    occur across dimers, i.e. at indices ``= offset + 1 (mod 2)``.
    """

    values: np.ndarray
    offset: int
    start: int = 0

    def __post_init__(self):
        if self.offset not in (0, 1):
            raise ValueError("offset must be 0 or 1")
        seq = SignedSequence(self.values, self.start)
        object.__setattr__(self, "values", seq.values)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.values.size)

    def equal_neighbours(self) -> np.ndarray:
        """``M(w)``: indices ``n`` with ``w(n) = w(n+1)`` inside the window."""
        v = self.values
        return self.indices[:-1][v[:-1] == v[1:]]

    def as_sequence(self) -> SignedSequence:
        return SignedSequence(self.values, self.start)


def dimer_sample(N: int, rng) -> DimerWord:
    """Random dimer word on ``[-N, N-1]``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    g = as_generator(rng)
    offset = int(g.integers(2))
    n = np.arange(-N, N)
    j = (n - offset) // 2
    deco = _signs(g, 0.5, j.max() - j.min() + 1)
    first = (n - offset) % 2 == 0
    vals = np.where(first, 1, -1) * deco[j - j.min()]
    return DimerWord(vals, offset, -N)


def dimer_weights(w, h_plus: complex, h_minus: complex) -> np.ndarray:
    """Replace ``+1 -> h_plus`` and ``-1 -> h_minus``."""
    v = w.values if hasattr(w, "values") else np.asarray(w)
    return np.where(v > 0, h_plus, h_minus).astype(complex)


def dimer_analytic(h_plus: complex, h_minus: complex, k_grid) -> SpectralMeasure:
    """Atoms ``|h+ + h-|^2/4`` on Z, density ``|h+ - h-|^2/4 (1 - cos 2 pi k)``."""
    k = np.asarray(k_grid, dtype=float)
    dens = abs(h_plus - h_minus) ** 2 / 4 * (1 - np.cos(2 * np.pi * k))
    atoms = _integer_atoms(k, 1.0, abs(h_plus + h_minus) ** 2 / 4)
    return SpectralMeasure(atoms, EmpiricalDensity(k, dens), "dimer",
                           {"h_plus": str(h_plus), "h_minus": str(h_minus)})


def dimer_factor(w) -> SignedSequence:
    """``v(n) = -w(n) w(n+1)``; insensitive to a global sign flip of ``w``."""
    seq = w.as_sequence() if isinstance(w, DimerWord) else w
    if not isinstance(seq, SignedSequence):
        seq = SignedSequence(seq)
    if len(seq) < 2:
        raise ValueError("need at least two symbols")
    v = seq.values
    return SignedSequence(-v[:-1] * v[1:], seq.start)


def factor_analytic(k_grid) -> SpectralMeasure:
    """Atoms ``1/4`` on ``Z/2`` and density ``1/2``."""
    k = np.asarray(k_grid, dtype=float)
    return SpectralMeasure(_integer_atoms(k, 0.5, 0.25), EmpiricalDensity(k, np.full(k.size, 0.5)),
                           "dimer-factor")


# --------------------------------------------------------------------------
# Ledrappier


@dataclass(frozen=True)
class LedrappierPatch:
    """``values[r, i]``: row ``r`` along ``e2``, column ``i`` along ``e1``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("patch must be square")
        if not np.all(np.abs(v) == 1):
            raise ValueError("entries must be +1 or -1")
        object.__setattr__(self, "values", v.astype(np.int8))

    @property
    def size(self) -> int:
        return self.values.shape[0]


def ledrappier_sample(N: int, rng, bottom=None) -> LedrappierPatch:
    """Haar-distributed ``N x N`` window: i.i.d. bottom row, rows above forced.

    ``w(x + e2) = w(x) w(x + e1)``; each row is one shorter than the one below,
    so a bottom row of length ``2N - 1`` fills the window.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    row = _signs(as_generator(rng), 0.5, 2 * N - 1) if bottom is None \
        else np.asarray(bottom, dtype=np.int8)
    if row.size != 2 * N - 1:
        raise ValueError("bottom row must have length 2N - 1")
    out = np.empty((N, N), dtype=np.int8)
    for r in range(N):
        out[r] = row[:N]
        row = row[:-1] * row[1:]
    return LedrappierPatch(out)


def iid_patch(N: int, rng) -> LedrappierPatch:
    return LedrappierPatch(_signs(as_generator(rng), 0.5, (N, N)))


def _triples(patch: LedrappierPatch) -> np.ndarray:
    v = patch.values.astype(np.int64)
    return v[:-1, :-1] * v[:-1, 1:] * v[1:, :-1]


def ledrappier_three_point(patch: LedrappierPatch) -> float:
    """Mean of ``w(x) w(x+e1) w(x+e2)`` over sites with both neighbours inside."""
    return float(_triples(patch).mean())


def ledrappier_residual(patch: LedrappierPatch) -> int:
    """Number of sites violating the three-site relation."""
    return int(np.count_nonzero(_triples(patch) != 1))


def row_autocorr(patch: LedrappierPatch, max_lag: int) -> np.ndarray:
    """Two-point correlation along ``e1``, pooled over all rows; index ``m = 0..max_lag``."""
    v = patch.values.astype(np.int64)
    n = v.shape[1]
    if max_lag >= n:
        raise ValueError("max_lag must be below the patch size")
    return np.array([np.mean(v[:, : n - m] * v[:, m:]) for m in range(max_lag + 1)])


# --------------------------------------------------------------------------
# GUE

# entries H = (A + A^*)/2 * GUE_SCALE with complex standard normal A give a
# semicircle of radius sqrt(2N/pi)
GUE_SCALE = 1 / np.sqrt(2 * np.pi)


def gue_radius(N: int) -> float:
    return float(np.sqrt(2 * N / np.pi))


def _semicircle_count(u):
    """Expected number of eigenvalues in ``[0, u R]`` divided by ``N``."""
    return (u * np.sqrt(1 - u * u) + np.arcsin(u)) / np.pi


def gue_window(N: int, cut: float = 0.5) -> float:
    """Length of the unfolded window kept for ``|eigenvalue| <= cut * radius``."""
    return float(2 * N * _semicircle_count(cut))


def gue_matrix(N: int, rng) -> np.ndarray:
    g = as_generator(rng)
    A = g.standard_normal((N, N)) + 1j * g.standard_normal((N, N))
    return (A + A.conj().T) / 2 * GUE_SCALE


def gue_eigenvalue_points(N: int, rng, cut: float = 0.5) -> WeightedComb:
    """Central eigenvalues of one GUE matrix, unfolded to unit mean density.

    Eigenvalues with ``|lambda| <= cut * sqrt(2N/pi)`` are mapped through the
    semicircle counting function, which is the linear rescaling at the centre
    and removes the residual curvature of the density across the window.
    """
    if N < 50:
        raise ValueError("matrix size must be at least 50")
    if not 0 < cut < 1:
        raise ValueError("cut must lie in (0, 1)")
    ev = np.linalg.eigvalsh(gue_matrix(N, rng))
    u = ev / gue_radius(N)
    u = u[np.abs(u) <= cut]
    return WeightedComb(N * _semicircle_count(u), np.ones(u.size), gue_window(N, cut) / 2)


def gue_samples(N: int, n_samples: int, source, workers: int = 1, cut: float = 0.5) -> list:
    """Independent unfolded samples on child streams of ``source``."""
    return run_replicas(lambda g: gue_eigenvalue_points(N, g, cut), source, n_samples, workers)


def gue_target(k):
    """Two-point diffuse part for the unitary ensemble: ``min(|k|, 1)``."""
    return np.minimum(np.abs(np.asarray(k, dtype=float)), 1.0)


def gue_diffraction_empirical(samples, k_grid, bandwidth: float = 0.05) -> EmpiricalDensity:
    """Average periodogram with the central atom removed, then smoothed.

    For each sample the mean density ``n/T`` times the window indicator is
    subtracted before squaring, which takes out the atom at 0 and its
    sidelobes.
    """
    samples = list(samples)
    if len(samples) < 100:
        raise ValueError("need at least 100 samples")
    k = np.asarray(k_grid, dtype=float)
    acc = np.zeros(k.size)
    safe = np.where(k == 0, 1.0, k)
    for comb in samples:
        T = comb.volume
        rho = len(comb) / T
        win = np.where(k == 0, T, np.sin(np.pi * k * T) / (np.pi * safe))
        s = exponential_sums(comb, k, method="direct") - rho * win
        acc += np.abs(s) ** 2 / T
    dens = EmpiricalDensity(k, acc / len(samples))
    return smooth(dens, bandwidth) if bandwidth > 0 else dens


def mean_density(samples) -> float:
    samples = list(samples)
    return float(sum(len(c) for c in samples) / sum(c.volume for c in samples))


def small_spacing_fraction(samples, threshold: float = 0.05) -> float:
    """Fraction of nearest-neighbour spacings below ``threshold``."""
    gaps = np.concatenate([np.diff(c.positions) for c in samples])
    return float(np.mean(gaps < threshold))
