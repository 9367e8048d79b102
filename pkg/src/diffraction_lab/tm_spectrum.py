"""Thue-Morse singular continuous measure on the unit interval.

The distribution function is computed by a Volterra iteration starting from
``F_0(x) = x``.  Iterates are stored as cell increments ``D_i = F(x_{i+1}) - F(x_i)``
so that tiny increments near ``x = 1`` are not lost to cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DistributionFunction:
    """Non-decreasing function on a uniform grid of ``[0, 1]``."""

    increments: np.ndarray
    iterations: int = 0
    cauchy: tuple = field(default=())

    def __post_init__(self):
        d = np.asarray(self.increments, dtype=float)
        if d.ndim != 1 or d.size < 2:
            raise ValueError("need at least two cells")
        if np.any(d < 0):
            raise ValueError("increments must be nonnegative")
        object.__setattr__(self, "increments", d)

    @classmethod
    def identity(cls, grid_size: int) -> "DistributionFunction":
        return cls(np.full(grid_size, 1.0 / grid_size))

    @classmethod
    def from_values(cls, values) -> "DistributionFunction":
        return cls(np.diff(np.asarray(values, dtype=float)))

    @property
    def grid_size(self) -> int:
        return self.increments.size

    @property
    def step(self) -> float:
        return 1.0 / self.grid_size

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size + 1)

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def derivative(self) -> np.ndarray:
        """Centred differences at the nodes ``x_0 .. x_{G-1}`` (periodic wrap at 0)."""
        d = self.increments
        return (d + np.roll(d, 1)) / (2 * self.step)


def volterra_step(F: DistributionFunction) -> DistributionFunction:
    """One step ``F -> 1/2 int_0^{2x} (1 - cos(pi y)) F'(y) dy``.

    ``F'`` on ``[1, 2]`` uses the extension ``F(x + 1) = F(x) + 1``, so the
    derivative is periodic and the boundary stencil wraps around.
    """
    G = F.grid_size
    if G % 2:
        raise ValueError("grid size must be even")
    h = F.step
    dF = F.derivative()
    y = np.arange(2 * G + 1) * h
    g = (1 - np.cos(np.pi * y)) * np.concatenate([dF, dF, dF[:1]])
    # each new cell [x_j, x_{j+1}] maps to two cells of the doubled grid
    d = (h / 4) * (g[0:-1:2] + 2 * g[1::2] + g[2::2])
    return DistributionFunction(_monotone_projection(d), F.iterations + 1)


def _monotone_projection(d: np.ndarray) -> np.ndarray:
    d = np.clip(d, 0.0, None)
    return d / d.sum()


def tm_iterates(iterations: int, grid_size: int = 4096):
    """Yield ``F_1, ..., F_iterations``."""
    F = DistributionFunction.identity(grid_size)
    for _ in range(iterations):
        F = volterra_step(F)
        yield F


def tm_distribution(iterations: int = 12, grid_size: int = 4096) -> DistributionFunction:
    """Iterate ``iterations`` times and record sup-norm differences between iterates."""
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    prev = DistributionFunction.identity(grid_size).values
    diffs = []
    for F in tm_iterates(iterations, grid_size):
        cur = F.values
        diffs.append(float(np.max(np.abs(cur - prev))))
        prev = cur
    return DistributionFunction(F.increments, iterations, tuple(diffs))


def riesz_density(n: int, x):
    """``prod_{m<n} (1 - cos(2^{m+1} pi x))``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for m in range(n):
        out = out * (1 - np.cos(2.0 ** (m + 1) * np.pi * x))
    return out


def cantor_function(x, depth: int = 40):
    """Middle-thirds Cantor function truncated after ``depth`` ternary digits."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("x must lie in [0, 1]")
    out = np.zeros_like(x)
    done = x >= 1.0
    out[done] = 1.0
    t = np.where(done, 0.0, x)
    scale = 0.5
    for _ in range(depth):
        t = 3 * t
        digit = np.floor(t)
        t = t - digit
        live = ~done
        # digit 1 lands in a removed third: value frozen from here on
        out[live & (digit == 1)] += scale
        done = done | (digit == 1)
        out[live & (digit == 2)] += scale
        scale /= 2
    return out if out.ndim else float(out)


def moments_from_F(F: DistributionFunction, m: int) -> complex:
    """Stieltjes sum of ``exp(2 pi i m y)`` against ``dF`` at cell midpoints."""
    if abs(m) > F.grid_size // 4:
        raise ValueError("|m| must not exceed grid_size/4")
    mid = (np.arange(F.grid_size) + 0.5) * F.step
    return complex(np.sum(np.exp(2j * np.pi * m * mid) * F.increments))


def functional_relation_residual(F: DistributionFunction, F_prev: DistributionFunction) -> float:
    """Sup over grid nodes of ``|F(x/2) + F((x+1)/2) - F(1/2) - F_prev(x)|``.

    For the limit measure the two halves of the doubling map add up to the
    measure itself; for iterates the right side is the previous iterate.
    """
    if F.grid_size != F_prev.grid_size or F.grid_size % 2:
        raise ValueError("need equal even grid sizes")
    G = F.grid_size
    v, p = F.values, F_prev.values
    i = np.arange(G // 2 + 1)
    lhs = v[i] + v[i + G // 2] - v[G // 2]
    return float(np.max(np.abs(lhs - p[2 * i])))


def symmetry_residual(F: DistributionFunction) -> float:
    """Sup of ``|F(x) + F(1 - x) - 1|`` on the grid."""
    v = F.values
    return float(np.max(np.abs(v + v[::-1] - 1)))
