import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from diffraction_lab import stochastic, substitution as sub, tm_spectrum as tm
from diffraction_lab.comb import (AutocorrCoeffs, EmpiricalDensity, SpectralMeasure, WeightedComb,
                                  atom_by_window_scaling, autocorr_lattice, autocorr_pointset,
                                  eta_to_density, exponential_sums, l1_distance, periodogram,
                                  smooth, unit_period_grid, wiener_sigma)
from diffraction_lab.rng import RandomSource

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# --------------------------------------------------------------------------
# types


def test_comb_rejects_unsorted_positions():
    with pytest.raises(ValueError):
        WeightedComb(np.array([0.0, -1.0]), np.ones(2), 2.0)


def test_comb_rejects_points_outside_window():
    with pytest.raises(ValueError):
        WeightedComb(np.array([0.0, 3.0]), np.ones(2), 2.0)


def test_comb_rejects_length_mismatch():
    with pytest.raises(ValueError):
        WeightedComb(np.array([0.0, 1.0]), np.ones(3), 2.0)


def test_from_sequence_is_centred():
    c = WeightedComb.from_sequence(np.ones(5))
    assert np.array_equal(c.positions, [-2, -1, 0, 1, 2])
    assert c.volume == 5


def test_spectral_measure_validation():
    d = EmpiricalDensity(np.linspace(0, 1, 5), np.ones(5))
    with pytest.raises(ValueError):
        SpectralMeasure([(0.0, -1.0)], d)
    with pytest.raises(ValueError):
        SpectralMeasure([(0.0, 1.0), (0.0, 2.0)], d)
    with pytest.raises(ValueError):
        SpectralMeasure([], EmpiricalDensity(d.grid, -np.ones(5)))
    assert SpectralMeasure([(0.5, 0.25)], d).atom_at(0.5) == 0.25


def test_l1_distance_of_constants():
    k = np.linspace(0, 1, 101)
    assert l1_distance(np.ones(101), np.zeros(101), 0, 1, k) == pytest.approx(1.01)


# --------------------------------------------------------------------------
# lattice autocorrelation


def test_autocorr_constant_sequence():
    eta = autocorr_lattice(np.ones(201), 10)
    assert np.allclose(eta.as_complex(), 1)


def test_autocorr_alternating_sequence():
    n = np.arange(-100, 101)
    eta = autocorr_lattice((-1.0) ** n, 10)
    assert np.allclose(eta.as_complex(), (-1.0) ** eta.lags)


def test_autocorr_thue_morse_eta1():
    eta = autocorr_lattice(sub.tm_two_sided_window(2 ** 16), 1)
    assert abs(eta[1] - (-1 / 3)) <= 5e-3


def test_autocorr_max_lag_bound():
    with pytest.raises(ValueError):
        autocorr_lattice(np.ones(10), 5)


@given(arrays(complex, st.integers(8, 60), elements=st.complex_numbers(max_magnitude=5, allow_nan=False)))
def test_autocorr_hermitian_and_bounded(w):
    eta = autocorr_lattice(w, w.size // 2 - 1)
    v = eta.as_complex()
    M = eta.max_lag
    assert np.array_equal(v, np.conj(v[::-1]))
    assert v[M].imag == 0 and v[M].real >= 0


@given(st.lists(st.sampled_from([-1, 1]), min_size=8, max_size=80))
def test_autocorr_of_signs_bounded_by_eta0(signs):
    # with the bias-corrected normalization |eta(m)| <= 1 = eta(0) for +-1 sequences
    eta = autocorr_lattice(np.array(signs), len(signs) // 2 - 1)
    assert np.all(np.abs(eta.as_complex()) <= eta[0].real + 1e-12)


# --------------------------------------------------------------------------
# point-set autocorrelation


def test_autocorr_pointset_integer_lattice():
    N = 1000
    comb = WeightedComb.from_sequence(np.ones(2 * N + 1))
    atom0, dens = autocorr_pointset(comb, 2.5, 0.5)
    assert atom0 == pytest.approx(1.0)
    mass = dens.values * 0.5
    for lag in (-2, -1, 1, 2):
        i = np.argmin(np.abs(dens.grid - (lag + 0.25 * np.sign(lag))))
        assert mass[i] == pytest.approx((2 * N + 1 - abs(lag)) / (2 * N + 1))
    assert mass.sum() == pytest.approx(sum((2 * N + 1 - m) / (2 * N + 1) for m in (1, 2)) * 2)


def test_autocorr_pointset_poisson_is_flat():
    g = RandomSource(11).generator()
    L = 1e4
    x = np.sort(g.uniform(-L, L, g.poisson(2 * L)))
    comb = WeightedComb(x, np.ones(x.size), L)
    atom0, dens = autocorr_pointset(comb, 5.0, 0.5)
    assert atom0 == pytest.approx(1.0, abs=0.03)
    # binomial error per bin: sqrt(pairs)/(vol * bin)
    sigma = np.sqrt(2 * L * 0.5) / (2 * L * 0.5)
    rho = x.size / (2 * L)
    assert np.all(np.abs(dens.values - rho ** 2) <= 4 * sigma)


def test_autocorr_pointset_dimer():
    w = stochastic.dimer_sample(2 ** 14, RandomSource(5).generator())
    comb = WeightedComb.from_sequence(w.values.astype(float))
    _, dens = autocorr_pointset(comb, 4.0, 0.5)
    mass = dens.values * 0.5
    at = {round(c - 0.25 * np.sign(c)): m for c, m in zip(dens.grid, mass)}
    assert at[1] == pytest.approx(-0.5, abs=0.02)
    assert at[-1] == pytest.approx(-0.5, abs=0.02)
    assert abs(at[2]) < 0.02 and abs(at[3]) < 0.02


# --------------------------------------------------------------------------
# periodogram


def test_periodogram_bragg_peak_at_zero():
    N = 50
    comb = WeightedComb.from_sequence(np.ones(2 * N + 1))
    assert periodogram(comb, [0.0]).values[0] == pytest.approx(2 * N + 1)


def test_periodogram_single_point():
    comb = WeightedComb(np.array([0.0]), np.array([1.0]), 1.0)
    assert np.allclose(periodogram(comb, np.linspace(-3, 3, 13)).values, 0.5)


def test_periodogram_thue_morse_has_no_atom_at_one_third():
    small = WeightedComb.from_sequence(sub.tm_two_sided_window(2 ** 13).astype(float))
    large = WeightedComb.from_sequence(sub.tm_two_sided_window(2 ** 14).astype(float))
    est = atom_by_window_scaling(small, large, 1 / 3)
    assert not est.is_atom
    assert est.ratio < 1.5


def test_periodogram_empty_comb():
    with pytest.raises(ValueError):
        periodogram(WeightedComb(np.empty(0), np.empty(0), 1.0), [0.0])


@given(arrays(float, st.integers(3, 64), elements=finite))
def test_fft_and_direct_paths_agree(w):
    comb = WeightedComb.from_sequence(w)
    k = unit_period_grid(128)
    a = exponential_sums(comb, k, "fft")
    b = exponential_sums(comb, k, "direct")
    scale = max(np.abs(w).sum(), 1e-300)
    assert np.max(np.abs(a - b)) <= 1e-9 * scale


def test_taylor_path_matches_direct():
    g = RandomSource(3).generator()
    x = np.sort(g.uniform(-500, 500, 2000))
    comb = WeightedComb(x, g.standard_normal(x.size), 500.0)
    k = np.arange(0, 3, 1 / 1000)
    a = exponential_sums(comb, k, "taylor")
    b = exponential_sums(comb, k, "direct")
    assert np.max(np.abs(a - b)) <= 1e-9 * np.abs(comb.weights).sum()


@given(arrays(float, st.integers(3, 64), elements=finite.filter(lambda v: abs(v) > 1e-3)))
def test_parseval_on_lattice_combs(w):
    comb = WeightedComb.from_sequence(w)
    p = periodogram(comb, unit_period_grid(256))
    assert p.values.mean() == pytest.approx(np.sum(w ** 2) / comb.volume, rel=1e-6)


def test_atom_detection_on_integer_lattice():
    small = WeightedComb.from_sequence(np.ones(2 ** 15 + 1))
    large = WeightedComb.from_sequence(np.ones(2 ** 16 + 1))
    est = atom_by_window_scaling(small, large, 0.0)
    assert est.is_atom
    assert est.intensity == pytest.approx(1.0, rel=0.05)


# --------------------------------------------------------------------------
# smoothing


def test_smooth_flat_is_flat():
    d = EmpiricalDensity(np.linspace(0, 1, 101), np.full(101, 3.0))
    assert np.allclose(smooth(d, 0.05).values, 3.0)


def test_smooth_point_mass_gives_unit_triangle():
    k = np.arange(201) * 0.01
    v = np.zeros(201)
    v[100] = 1 / 0.01
    s = smooth(EmpiricalDensity(k, v), 0.05)
    assert s.integral() == pytest.approx(1.0)
    assert np.argmax(s.values) == 100
    assert np.all(s.values[100:106] >= s.values[101:107])


def test_smooth_rejects_narrow_bandwidth():
    with pytest.raises(ValueError):
        smooth(EmpiricalDensity(np.linspace(0, 1, 11), np.ones(11)), 0.01)


def test_smoothed_dimer_periodogram():
    w = stochastic.dimer_sample(2 ** 15, RandomSource(9).generator())
    p = periodogram(WeightedComb.from_sequence(w.values.astype(float)), unit_period_grid(2 ** 16))
    s = smooth(p, 0.02)
    assert l1_distance(s.values, 1 - np.cos(2 * np.pi * s.grid), 0, 1, s.grid) <= 0.05


@given(arrays(float, st.integers(20, 200), elements=st.floats(0, 100)), st.integers(1, 8),
       st.booleans())
def test_smooth_conserves_mass(v, width, periodic):
    k = np.arange(v.size) / v.size
    d = EmpiricalDensity(k, v, period=1.0 if periodic else None)
    s = smooth(d, width / v.size)
    assert s.values.sum() == pytest.approx(v.sum(), rel=1e-9, abs=1e-9)
    assert np.all(s.values >= -1e-9)


# --------------------------------------------------------------------------
# coefficients to density, Wiener


def test_eta_delta_gives_flat_density():
    eta = AutocorrCoeffs.from_function(lambda m: 1.0 if m == 0 else 0.0, 16)
    d = eta_to_density(eta, unit_period_grid(64))
    assert np.allclose(d.values, 1.0)


def test_eta_constant_gives_fejer_kernel():
    M = 32
    eta = AutocorrCoeffs.from_function(lambda m: 1.0, M)
    d = eta_to_density(eta, unit_period_grid(256))
    assert d.values[0] == pytest.approx(M + 1)
    assert d.values.mean() == pytest.approx(1.0)
    assert np.all(d.values >= -1e-9)


def test_eta_thue_morse_cumulative_matches_distribution_function():
    eta = AutocorrCoeffs.from_function(sub.tm_eta, 2 ** 10)
    k = unit_period_grid(2 ** 12)
    d = eta_to_density(eta, k)
    # trapezoid rule on the periodic grid, so node i integrates [0, k_i]
    v = d.values
    F_eta = np.concatenate([[0.0], np.cumsum((v + np.roll(v, -1)) / 2) / k.size])
    F = tm.tm_distribution(12, 2 ** 12)
    assert np.max(np.abs(F_eta - F.values)) <= 0.01


@given(arrays(float, st.integers(2, 30), elements=st.floats(-3, 3)))
def test_eta_to_density_nonnegative_for_positive_definite(w):
    # autocorrelations of finite sequences are positive definite
    full = np.correlate(w, w, "full")
    M = w.size - 1
    if full[M] <= 0:
        return
    d = eta_to_density(AutocorrCoeffs(full.astype(complex)), unit_period_grid(128))
    assert np.all(d.values >= -1e-9 * full[M])


def test_wiener_sigma_examples():
    tm_eta = AutocorrCoeffs.from_function(sub.tm_eta, 8)
    from fractions import Fraction
    assert wiener_sigma(tm_eta, 1) == Fraction(11, 9)
    delta = AutocorrCoeffs.from_function(lambda m: Fraction(int(m == 0)), 8)
    assert all(wiener_sigma(delta, n) == 1 for n in range(9))


def test_wiener_sigma_range():
    with pytest.raises(ValueError):
        wiener_sigma(AutocorrCoeffs.from_function(lambda m: 1.0, 4), 5)
