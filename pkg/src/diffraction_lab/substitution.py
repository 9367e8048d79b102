"""Thue-Morse, Rudin-Shapiro, period doubling and Fibonacci sequences.

Generators, exact autocorrelation recursions, and the Bragg intensities of the
perfect Fibonacci chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

TAU = (1 + 5 ** 0.5) / 2
SQRT5 = 5 ** 0.5


@dataclass(frozen=True)
class SubstitutionRule:
    images: dict

    def __post_init__(self):
        if not self.images:
            raise ValueError("empty substitution")
        for a, img in self.images.items():
            if len(img) == 0:
                raise ValueError(f"empty image for {a!r}")
            for b in img:
                if b not in self.images:
                    raise ValueError(f"image of {a!r} leaves the alphabet: {b!r}")

    @property
    def alphabet(self) -> tuple:
        return tuple(self.images)

    def matrix(self) -> np.ndarray:
        """Substitution matrix, ``M[a, b]`` = number of ``a`` in the image of ``b``."""
        idx = {a: i for i, a in enumerate(self.alphabet)}
        M = np.zeros((len(idx), len(idx)), dtype=np.int64)
        for b, img in self.images.items():
            for a in img:
                M[idx[a], idx[b]] += 1
        return M

    def is_primitive(self) -> bool:
        M = (self.matrix() > 0).astype(np.int64)
        n = M.shape[0]
        P = M.copy()
        # Wielandt bound
        for _ in range((n - 1) ** 2 + 1):
            if np.all(P > 0):
                return True
            P = np.minimum(P @ M, 1)
        return bool(np.all(P > 0))


@dataclass(frozen=True)
class SignedSequence:
    """``+-1`` values ``w(start), w(start + 1), ...``."""

    values: np.ndarray
    start: int = 0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("need a nonempty 1-d sequence")
        if not np.all(np.abs(v) == 1):
            raise ValueError("entries must be +1 or -1")
        object.__setattr__(self, "values", v.astype(np.int8))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.values.size)

    def __len__(self):
        return self.values.size

    def __neg__(self) -> "SignedSequence":
        return SignedSequence(-self.values, self.start)


THUE_MORSE = SubstitutionRule({1: (1, -1), -1: (-1, 1)})
PERIOD_DOUBLING = SubstitutionRule({"a": "ab", "b": "aa"})
FIBONACCI = SubstitutionRule({"a": "ab", "b": "a"})
RUDIN_SHAPIRO_4 = SubstitutionRule({"a": "ac", "b": "dc", "c": "ab", "d": "db"})


def substitute(rule: SubstitutionRule, seed, steps: int):
    """Apply ``rule`` ``steps`` times to ``seed``.

    String seeds give strings back, anything else a tuple of symbols.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    alphabet = rule.alphabet
    code = {a: i for i, a in enumerate(alphabet)}
    try:
        word = np.array([code[s] for s in seed], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"symbol {exc.args[0]!r} not in the alphabet") from None
    lens = np.array([len(rule.images[a]) for a in alphabet])
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    flat = np.array([code[s] for a in alphabet for s in rule.images[a]], dtype=np.int64)
    for _ in range(steps):
        ln = lens[word]
        base = np.repeat(starts[word] - np.concatenate([[0], np.cumsum(ln)[:-1]]), ln)
        word = flat[base + np.arange(base.size)]
    out = [alphabet[i] for i in word]
    if isinstance(seed, str):
        return "".join(out)
    return tuple(out)


# --------------------------------------------------------------------------
# Thue-Morse


def tm_value(i: int) -> int:
    """``(-1)^(binary digit sum of i)``."""
    if i < 0:
        raise ValueError("tm_value needs i >= 0")
    return -1 if bin(i).count("1") % 2 else 1


def tm_sequence(n: int) -> np.ndarray:
    """One-sided fixed point ``v_0 ... v_{n-1}``."""
    i = np.arange(n, dtype=np.uint64)
    return (1 - 2 * (np.bitwise_count(i) % 2)).astype(np.int8)


def tm_two_sided(i: int) -> int:
    """Two-sided fixed point of rho^2 with legal seed 1|1 at positions -1|0."""
    return tm_value(i) if i >= 0 else tm_value(-i - 1)


def tm_two_sided_window(N: int) -> np.ndarray:
    """``w(-N), ..., w(N)`` of the two-sided fixed point."""
    i = np.arange(-N, N + 1)
    j = np.where(i >= 0, i, -i - 1).astype(np.uint64)
    return (1 - 2 * (np.bitwise_count(j) % 2)).astype(np.int8)


@lru_cache(maxsize=None)
def tm_eta(m: int) -> Fraction:
    """Exact Thue-Morse autocorrelation coefficient from the scaling recursions."""
    m = abs(m)
    if m == 0:
        return Fraction(1)
    if m == 1:
        # eta(1) = -(eta(0) + eta(1))/2 solved for eta(1)
        return -tm_eta(0) / 3
    if m % 2 == 0:
        return tm_eta(m // 2)
    q = m // 2
    return -(tm_eta(q) + tm_eta(q + 1)) / 2


# --------------------------------------------------------------------------
# Rudin-Shapiro


def rs_value(n: int) -> int:
    """Binary Rudin-Shapiro sequence from ``w(-1) = -1``, ``w(0) = 1``.

    Negative indices use the floor quotient, so every step shrinks ``|n|``
    until one of the two seeds is reached.
    """
    sign = 1
    while n not in (-1, 0):
        q, ell = divmod(n, 4)
        if ell >= 2 and (q + ell) % 2:
            sign = -sign
        n = q
    return sign if n == 0 else -sign


def rs_sequence(lo: int, hi: int) -> np.ndarray:
    """``w(lo), ..., w(hi - 1)``."""
    n = np.arange(lo, hi, dtype=np.int64)
    sign = np.ones(n.size, dtype=np.int8)
    active = (n != 0) & (n != -1)
    while active.any():
        q = n // 4
        ell = n - 4 * q
        flip = active & (ell >= 2) & ((q + ell) % 2 == 1)
        sign[flip] *= -1
        n = np.where(active, q, n)
        active = (n != 0) & (n != -1)
    return np.where(n == 0, sign, -sign).astype(np.int8)


def rs_sequence_via_substitution(n: int) -> np.ndarray:
    """First ``n`` letters of the four-letter fixed point, reduced to signs."""
    steps = max(0, int(np.ceil(np.log2(max(n, 1)))))
    word = substitute(RUDIN_SHAPIRO_4, "a", steps)[:n]
    return np.array([1 if c in "ac" else -1 for c in word], dtype=np.int8)


def _rs_rhs(m: int, get):
    q, r = divmod(m, 4)
    s = 1 if q % 2 == 0 else -1
    e0, t0 = get(q)
    e1, t1 = get(q + 1)
    h, f = Fraction(1, 2), Fraction(1, 4)
    if r == 0:
        return (1 + s) * h * e0, Fraction(0)
    if r == 1:
        return ((1 - s) * f * e0 + s * f * t0 - f * t1,
                (1 - s) * f * e0 - s * f * t0 + f * t1)
    if r == 2:
        return Fraction(0), s * h * t0 + h * t1
    return ((1 + s) * f * e1 - s * f * t0 + f * t1,
            -(1 + s) * f * e1 - s * f * t0 + f * t1)


def _rs_self_consistent(m: int):
    """Solve the recursion at ``m = +-1``, where it refers back to ``m`` itself."""
    def rhs_with(unknown):
        return _rs_rhs(m, lambda j: unknown if j == m else rs_eta_theta(j))
    b = rhs_with((Fraction(0), Fraction(0)))
    c0 = [x - y for x, y in zip(rhs_with((Fraction(1), Fraction(0))), b)]
    c1 = [x - y for x, y in zip(rhs_with((Fraction(0), Fraction(1))), b)]
    # (I - A) X = b with A = [[c0[0], c1[0]], [c0[1], c1[1]]]
    a11, a12, a21, a22 = 1 - c0[0], -c1[0], -c0[1], 1 - c1[1]
    det = a11 * a22 - a12 * a21
    if det == 0:
        raise ArithmeticError("singular base system")
    return ((b[0] * a22 - a12 * b[1]) / det, (a11 * b[1] - a21 * b[0]) / det)


@lru_cache(maxsize=None)
def rs_eta_theta(m: int):
    """Exact ``(eta(m), theta(m))`` from the closed Rudin-Shapiro recursion system."""
    if m == 0:
        return Fraction(1), Fraction(0)
    if m in (1, -1):
        return _rs_self_consistent(m)
    return _rs_rhs(m, rs_eta_theta)


# --------------------------------------------------------------------------
# period doubling factor


def pd_block_map(w) -> str:
    """Sliding block map ``1 -1, -1 1 -> a``; ``1 1, -1 -1 -> b``."""
    w = np.asarray(w)
    if w.size < 2:
        raise ValueError("need at least two symbols")
    diff = w[:-1] != w[1:]
    return "".join(np.where(diff, "a", "b"))


# --------------------------------------------------------------------------
# Fibonacci chain


@dataclass(frozen=True)
class FibonacciChain:
    """Left endpoints of the Fibonacci tiling; ``a`` = long (tau), ``b`` = short (1)."""

    left_endpoints: np.ndarray
    interval_types: str

    @property
    def length(self) -> float:
        na = self.interval_types.count("a")
        return na * TAU + (len(self.interval_types) - na)

    def __len__(self):
        return len(self.interval_types)


def fibonacci_chain(steps: int) -> FibonacciChain:
    if steps < 1:
        raise ValueError("steps must be at least 1")
    word = substitute(FIBONACCI, "a", steps)
    is_a = np.frombuffer(word.encode(), dtype=np.uint8) == ord("a")
    na = np.concatenate([[0], np.cumsum(is_a)[:-1]])
    nb = np.arange(is_a.size) - na
    return FibonacciChain(na * TAU + nb, word)


def fibonacci_intensity(a: int, b: int):
    """Bragg peak ``(k, I(k))`` at ``k = (a + b tau)/sqrt5``.

    ``I(k) = (tau/sqrt5 * sin(pi tau k')/(pi tau k'))^2`` with the algebraic
    conjugate ``k' = (a + b(1 - tau))/(-sqrt5)``.
    """
    k = (a + b * TAU) / SQRT5
    kc = (a + b * (1 - TAU)) / (-SQRT5)
    z = np.pi * TAU * kc
    amp = TAU / SQRT5 * (np.sin(z) / z if z != 0 else 1.0)
    return k, amp * amp


def fibonacci_bragg_table(kmax: float, min_intensity: float = 1e-3):
    """All peaks with ``0 <= k <= kmax`` and intensity at least ``min_intensity``.

    Rows ``(a, b, k, I)`` sorted by ``k``.
    """
    # I >= min_intensity bounds |k'| through the sinc envelope
    kc_max = TAU / SQRT5 / (np.pi * TAU * np.sqrt(min_intensity)) + 1
    rows = []
    bmax = int(np.ceil((kmax + kc_max) * SQRT5 / (TAU - (1 - TAU)))) + 2
    for b in range(-bmax, bmax + 1):
        # a range from 0 <= k <= kmax
        lo = int(np.floor(-b * TAU))
        hi = int(np.ceil(kmax * SQRT5 - b * TAU))
        for a in range(lo, hi + 1):
            k, inten = fibonacci_intensity(a, b)
            if -1e-12 <= k <= kmax and inten >= min_intensity:
                rows.append((a, b, k, inten))
    rows.sort(key=lambda r: r[2])
    return rows
