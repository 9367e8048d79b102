import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from diffraction_lab import palm, renewal
from diffraction_lab.comb import WeightedComb
from diffraction_lab.palm import ComplexMeasureRealization, MarkedProcessModel
from diffraction_lab.rng import RandomSource

unit_complex = st.floats(0, 2 * np.pi).map(lambda t: complex(np.cos(t), np.sin(t)))


def lattice(N):
    x = np.arange(-N, N + 1, dtype=float)
    return ComplexMeasureRealization(x, np.ones(x.size), N + 0.5)


@pytest.fixture(scope="module")
def poisson_sample():
    (r,) = MarkedProcessModel().samples(2e4, 1, RandomSource(31))
    return r


# --------------------------------------------------------------------------
# polar decomposition


def test_polar_examples():
    c = WeightedComb(np.array([0.0, 1.0]), np.array([2.0, -2.0]), 2.0)
    x, mod, ph = palm.polar_decompose(c)
    assert np.array_equal(mod, [2, 2])
    assert ph[0] == 0 and ph[1] == pytest.approx(np.pi)


def test_polar_drops_zero_weights():
    c = WeightedComb(np.array([0.0, 1.0]), np.array([0.0, 1j]), 2.0)
    x, mod, ph = palm.polar_decompose(c)
    assert np.array_equal(x, [1.0])


@given(arrays(complex, st.integers(1, 50),
              elements=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False)))
def test_polar_roundtrip(w):
    c = WeightedComb(np.arange(w.size, dtype=float), w, float(w.size))
    _, mod, ph = palm.polar_decompose(c)
    back = mod * np.exp(1j * ph)
    assert np.all(np.abs(back - w) <= 1e-14 * np.abs(w) * 4)
    assert np.all((ph >= 0) & (ph < 2 * np.pi))


# --------------------------------------------------------------------------
# empirical autocorrelation


def test_integer_lattice_autocorrelation():
    N = 2000
    e = palm.empirical_autocorr(lattice(N), N, 3.0, 0.5)
    assert e.atom0.real == pytest.approx(1.0, abs=1e-3)
    mass = (e.density * e.bin_width).real
    for lag in (-2, -1, 1, 2):
        i = int(np.argmin(np.abs(e.grid - lag - 0.25 * np.sign(lag))))
        assert mass[i] == pytest.approx(1.0, abs=2e-3)
    # lag 3 sits on the excluded outer edge
    assert mass.sum() == pytest.approx(4.0, abs=0.01)


def test_marked_poisson_autocorrelation(poisson_sample):
    model = MarkedProcessModel()
    e = palm.empirical_autocorr(poisson_sample, 2e4, 5.0, 0.5)
    assert e.atom0.real == pytest.approx(model.rate * model.mean_sq_mark, abs=0.05)
    target = model.rate ** 2 * abs(model.mean_mark) ** 2
    assert np.mean(e.density.real) == pytest.approx(target, abs=0.05)
    assert np.max(np.abs(e.density.imag)) < 0.1


def test_autocorrelation_is_hermitian(poisson_sample):
    assert palm.empirical_autocorr(poisson_sample, 1e4, 5.0, 0.25).is_hermitian()


def test_conjugation_identity_is_exact(poisson_sample):
    a = palm.empirical_autocorr(poisson_sample, 1e4, 5.0, 0.25)
    b = palm.empirical_autocorr_alt(poisson_sample, 1e4, 5.0, 0.25)
    assert np.array_equal(b.density, np.conj(a.density))
    assert b.atom0 == np.conj(a.atom0)
    c = a.conj()
    assert np.array_equal(c.density, b.density)


@pytest.mark.parametrize("c", [1, -1, 1j, -1j])
def test_quarter_turn_invariance_is_exact(poisson_sample, c):
    r = poisson_sample
    rot = ComplexMeasureRealization(r.positions, r.weights * c, r.window_radius)
    a = palm.empirical_autocorr(r, 1e4, 5.0, 0.25)
    b = palm.empirical_autocorr(rot, 1e4, 5.0, 0.25)
    assert np.array_equal(a.density, b.density) and a.atom0 == b.atom0


@given(unit_complex)
def test_unit_rotation_invariance(c):
    g = RandomSource(5).generator()
    x = np.sort(g.uniform(-200, 200, 400))
    w = g.standard_normal(400) + 1j * g.standard_normal(400)
    r = ComplexMeasureRealization(x, w, 200.0)
    rot = ComplexMeasureRealization(x, w * c, 200.0)
    a = palm.empirical_autocorr(r, 200, 5.0, 0.5)
    b = palm.empirical_autocorr(rot, 200, 5.0, 0.5)
    scale = np.max(np.abs(a.density))
    assert np.max(np.abs(a.density - b.density)) <= 1e-14 * scale
    assert abs(a.atom0 - b.atom0) <= 1e-14 * abs(a.atom0)


def test_window_checks(poisson_sample):
    with pytest.raises(ValueError):
        palm.empirical_autocorr(poisson_sample, 3e4)
    with pytest.raises(ValueError):
        palm.empirical_autocorr(poisson_sample, 1e3, 5.0, 0.3)


def test_two_runs_converge_as_window_grows():
    model = MarkedProcessModel()
    means = []
    for R in (1e3, 1e4, 1e5):
        v = []
        for s in range(3):
            a, b = model.samples(R, 2, RandomSource(100 + s))
            v.append(palm.empirical_autocorr(a, R, 5.0, 0.25).l1(palm.empirical_autocorr(b, R, 5.0, 0.25)))
        means.append(np.mean(v))
    assert means[0] > means[1] > means[2]


# --------------------------------------------------------------------------
# boundary term


def test_boundary_term_zero_without_points_near_boundary():
    x = np.arange(-3.0, 4.0)
    r = ComplexMeasureRealization(x, np.ones(x.size), 100.0)
    assert palm.boundary_term_check(r, 40.0, 5.0, 0.5) == 0


def test_boundary_term_on_lattice_counts_straddling_pairs():
    N, n, R = 200, 50.5, 5.0
    r = lattice(N)
    x = r.positions
    inside = np.abs(x) <= n
    d = x[:, None] - x[None, :]
    straddle = inside[:, None] & ~inside[None, :] & (np.abs(d) < R) & (d != 0)
    assert palm.boundary_term_check(r, n, R, 0.5) == pytest.approx(straddle.sum() / (2 * n))


def test_boundary_term_decreases():
    model = MarkedProcessModel()
    (r,) = model.samples(4e4, 1, RandomSource(7))
    vals = [palm.boundary_term_check(r, n, 5.0, 0.5) for n in (1e2, 1e3, 1e4)]
    assert vals[0] > vals[1] > vals[2]


# --------------------------------------------------------------------------
# Palm intensity


def test_palm_on_integer_lattice():
    N = 500
    I, rho = palm.palm_intensity_estimate(lattice(N), 400, 3.0, 0.5)
    assert rho == pytest.approx(801 / 800)
    assert I.atom0 == pytest.approx(1.0)
    mass = (I.density * I.bin_width).real
    # one lattice point in each bin containing a nonzero lag below 3
    expected = np.zeros(mass.size)
    for lag in (-2, -1, 1, 2):
        expected[np.argmin(np.abs(I.grid - lag - 0.25 * np.sign(lag)))] = 1
    assert np.allclose(mass, expected)


def test_palm_matches_renewal_autocorrelation():
    model = MarkedProcessModel.from_json({"ground": {"type": "renewal", "dist": "gamma:5"},
                                          "marks": {"type": "unit"}})
    (r,) = model.samples(4e5, 1, RandomSource(21))
    I, rho = palm.palm_intensity_estimate(r, 2e5, 5.0, 0.25)
    est = I.scaled(rho)
    nu = renewal.renewal_measure(renewal.gamma_family(5), 5.0)
    # bin averages of nu + reflected nu
    ref = np.array([np.interp(np.linspace(abs(c) - 0.125, abs(c) + 0.125, 101), nu.grid, nu.density).mean()
                    for c in est.grid])
    l1 = abs(est.atom0 - 1) + np.sum(np.abs(est.density - ref)) * 0.25
    assert l1 <= 0.05


def test_palm_matches_autocorrelation_on_marked_poisson(poisson_sample):
    n = 1e4
    I, rho = palm.palm_intensity_estimate(poisson_sample, n, 5.0, 0.25)
    e = palm.empirical_autocorr(poisson_sample, n, 5.0, 0.25)
    assert I.scaled(rho).l1(e, -5, 5) <= 0.05


# --------------------------------------------------------------------------
# Campbell pairing


def test_campbell_zero_function(poisson_sample):
    assert palm.campbell_pairing(lambda x, pos, w: 0.0, [poisson_sample]) == 0


def test_campbell_indicator_is_intensity_of_total_variation():
    model = MarkedProcessModel()
    reals = model.samples(50.0, 400, RandomSource(8))
    val = palm.campbell_pairing(lambda x, pos, w: 1.0 if 0 <= x <= 1 else 0.0, reals)
    direct = np.mean([np.abs(r.weights[(r.positions >= 0) & (r.positions <= 1)]).sum() for r in reals])
    assert val == pytest.approx(direct, rel=1e-12)
    # E|W| for marks 1 + 0.5 exp(iU), by quadrature
    u = np.linspace(0, 2 * np.pi, 100001)
    e_abs = np.trapezoid(np.abs(1 + 0.5 * np.exp(1j * u)), u) / (2 * np.pi)
    assert val.real == pytest.approx(e_abs, abs=4 * np.sqrt(1.25 / 400))


def test_campbell_matches_second_moment():
    reals = MarkedProcessModel().samples(20.0, 300, RandomSource(9))
    A, A2 = (0.0, 2.0), (1.0, 3.0)
    mass = palm.window_mass(A)
    val = palm.campbell_pairing(lambda x, pos, w: mass(pos, w) if A2[0] <= x < A2[1] else 0.0, reals)
    direct = palm.second_moment_direct(reals, A, A2)
    vals = [mass(r.positions, r.weights) * np.conj(palm.window_mass(A2)(r.positions, r.weights))
            for r in reals]
    sigma = np.std(vals) / np.sqrt(len(vals))
    assert abs(val - direct) <= 3 * sigma
    assert abs(val - direct) <= 1e-12 * max(abs(direct), 1)


def test_campbell_needs_realizations():
    with pytest.raises(ValueError):
        palm.campbell_pairing(lambda x, pos, w: 0.0, [])


# --------------------------------------------------------------------------
# positive definiteness


def test_cubic_bspline():
    assert palm.cubic_bspline(0.0) == pytest.approx(2 / 3)
    u = np.linspace(-3, 3, 60001)
    assert np.trapezoid(palm.cubic_bspline(u), u) == pytest.approx(1.0)


@pytest.mark.parametrize("scale", [0.125, 0.25, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("freq", [0.0, 0.3, 1.0])
def test_positive_definiteness_surrogate(poisson_sample, scale, freq):
    val, norm = palm.pd_functional(poisson_sample, 5e3, scale, freq)
    assert val >= -1e-9 * norm


# --------------------------------------------------------------------------
# models


def test_model_from_json():
    m = MarkedProcessModel.from_json({"ground": {"type": "poisson", "rate": 2.0},
                                      "marks": {"type": "phase", "amplitude": 0.3}})
    assert m.rate == 2.0 and m.mean_sq_mark == pytest.approx(1.09) and m.mean_mark == 1
    u = MarkedProcessModel.from_json({"marks": {"type": "unit"}})
    assert u.mean_sq_mark == 1
    with pytest.raises(ValueError):
        MarkedProcessModel.from_json({"marks": {"type": "gaussian"}})
    with pytest.raises(ValueError):
        MarkedProcessModel(ground="cox")
    with pytest.raises(ValueError):
        MarkedProcessModel(ground="renewal")


def test_model_samples_are_reproducible():
    m = MarkedProcessModel()
    a = m.samples(100.0, 4, RandomSource(3), workers=1)
    b = m.samples(100.0, 4, RandomSource(3), workers=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.positions, y.positions) and np.array_equal(x.weights, y.weights)


def test_analytic_reduced():
    m = MarkedProcessModel(rate=2.0)
    ana = m.analytic_reduced(5.0, 0.5)
    assert ana.atom0 == pytest.approx(2 * 1.25)
    assert np.allclose(ana.density, 4.0)
    with pytest.raises(NotImplementedError):
        MarkedProcessModel("renewal", renewal=renewal.gamma_family(2)).analytic_reduced()


def test_restrict(poisson_sample):
    r = poisson_sample.restrict(100.0)
    assert r.window_radius == 100.0
    assert np.all(np.abs(r.positions) <= 100.0)
