import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from stokesmorse import spectral
from stokesmorse.errors import ResolutionError, SymmetryError
from stokesmorse.spectral import PeriodicFunction


def trig(a, b, n):
    t = spectral.grid(n)
    k = np.arange(len(a))
    return PeriodicFunction(np.cos(np.multiply.outer(t, k)) @ a + np.sin(np.multiply.outer(t, k)) @ b)


coef_lists = st.lists(st.floats(-3, 3), min_size=2, max_size=12)


@st.composite
def band_limited(draw):
    a = np.array(draw(coef_lists))
    b = np.array(draw(st.lists(st.floats(-3, 3), min_size=a.size, max_size=a.size)))
    b[0] = 0.0
    n = spectral.next_pow2(max(8, 4 * a.size))
    return trig(a, b, n), a, b


# -- construction -------------------------------------------------------------


def test_grid_starts_at_minus_pi():
    t = spectral.grid(8)
    assert t[0] == -math.pi
    assert t[-1] == pytest.approx(math.pi - 2 * math.pi / 8)


@pytest.mark.parametrize("n", [4, 12, 100])
def test_rejects_bad_grid_size(n):
    with pytest.raises(ValueError):
        PeriodicFunction(np.zeros(n))


def test_rejects_nonfinite():
    s = np.zeros(8)
    s[3] = np.nan
    with pytest.raises(ValueError):
        PeriodicFunction(s)


def test_samples_are_read_only():
    u = PeriodicFunction(np.zeros(8))
    with pytest.raises(ValueError):
        u.samples[0] = 1.0


def test_synthesize_sin3():
    c = np.zeros(7, dtype=complex)
    c[6], c[0] = -0.5j, 0.5j  # sin 3t = (e^{3it} - e^{-3it}) / 2i
    u = spectral.synthesize(c, 16)
    assert np.max(np.abs(u.samples - np.sin(3 * u.t))) < 1e-14


def test_synthesize_rejects_non_hermitian():
    with pytest.raises(SymmetryError):
        spectral.synthesize([1.0, 0.0, 2.0])


def test_synthesize_too_many_modes():
    with pytest.raises(ResolutionError):
        spectral.synthesize(np.ones(9), 8)


def test_from_cosines_and_back():
    c = [0.5, 1.0, -0.25, 0.125]
    u = PeriodicFunction.from_cosines(c, 16)
    assert np.allclose(u.cosines(3), c, atol=1e-15)
    assert np.allclose(u.sines(), 0.0, atol=1e-15)


def test_coeffs_centered_and_hermitian():
    u = trig([1.0, 2.0], [0.0, 4.0], 8)
    c = u.coeffs
    assert c.size == 9
    assert u.mode(0) == pytest.approx(1.0)
    assert u.mode(1) == pytest.approx(1.0 - 2.0j)
    assert u.mode(-1) == pytest.approx(1.0 + 2.0j)
    assert u.mode(7) == 0


def test_nyquist_split():
    u = PeriodicFunction.from_callable(lambda t: np.cos(4 * t), 8)
    assert u.mode(4) == pytest.approx(0.5)
    assert u.mode(-4) == pytest.approx(0.5)


# -- multipliers --------------------------------------------------------------


def test_hilbert_of_cos_is_sin():
    u = PeriodicFunction.from_callable(np.cos, 32)
    assert np.max(np.abs(spectral.hilbert(u).samples - np.sin(u.t))) < 1e-15


def test_hilbert_of_constant_vanishes():
    assert np.all(np.abs(spectral.hilbert(PeriodicFunction.constant(3.0, 16)).samples) < 1e-15)


def test_nyquist_mode_annihilated_by_hilbert_and_derivative():
    u = PeriodicFunction.from_callable(lambda t: np.cos(8 * t), 16)
    assert spectral.linf_norm(spectral.hilbert(u)) < 1e-14
    assert spectral.linf_norm(spectral.derivative(u)) < 1e-13


@given(band_limited())
def test_c_squared_is_minus_identity_plus_mean(data):
    u, a, b = data
    ccu = spectral.hilbert(spectral.hilbert(u))
    assert np.max(np.abs(ccu.samples + u.samples - a[0])) <= 1e-12 * (1 + np.max(np.abs(a)) + np.max(np.abs(b)))


@given(band_limited())
def test_conjugate_derivative_multiplier(data):
    u, a, b = data
    k = np.arange(a.size)
    expected = trig(k * a, k * b, u.n)
    assert np.max(np.abs(spectral.conjugate_derivative(u).samples - expected.samples)) < 1e-11


@given(band_limited())
def test_e0_nonnegative_and_vanishes_on_constants(data):
    u, a, b = data
    e = spectral.e0_form(u)
    assert e >= -1e-12
    assert spectral.e0_form(PeriodicFunction.constant(a[0], u.n)) == pytest.approx(0.0, abs=1e-12)


@given(band_limited())
def test_e0_equals_integral_of_u_times_conjugate_derivative(data):
    u, _, _ = data
    direct = spectral.integrate(spectral.product(u, spectral.conjugate_derivative(u)))
    assert spectral.e0_form(u) == pytest.approx(direct, rel=1e-10, abs=1e-10)


@given(band_limited())
def test_energy_norm_equivalent_to_h_half(data):
    u, _, _ = data
    h = spectral.h_half_norm(u)
    e = spectral.energy_norm(u)
    # E0 + ||u||^2 = 2 pi sum (1 + |n|) |u_n|^2
    assert e == pytest.approx(math.sqrt(2 * math.pi) * h, rel=1e-12, abs=1e-12)


def test_e0_of_cos_is_pi():
    u = PeriodicFunction.from_callable(np.cos, 16)
    assert spectral.e0_form(u) == pytest.approx(math.pi, rel=1e-14)


@pytest.mark.parametrize("a,b", [([0.0, 1.0], [0.0, 0.0]), ([0.3, 1.0, 0.5, -0.2], [0.0, 0.3, 0.0, 0.7])])
def test_e0_matches_disk_dirichlet_energy(a, b):
    u = trig(np.array(a), np.array(b), 32)
    polar = oracles.disk_energy_polar(a, b)
    assert spectral.disk_dirichlet_energy(u) == pytest.approx(polar, rel=1e-10)
    assert spectral.e0_form(u) == pytest.approx(polar, rel=1e-10)


# -- products, resampling, evaluation ----------------------------------------


def test_product_cos_squared_exact():
    u = PeriodicFunction.from_callable(np.cos, 16)
    p = spectral.product(u, u)
    assert np.max(np.abs(p.samples - np.cos(u.t) ** 2)) < 1e-15


def test_product_drops_unresolved_modes():
    u = PeriodicFunction.from_callable(lambda t: np.cos(3 * t), 8)
    p = spectral.product(u, u)  # cos^2 3t = (1 + cos 6t)/2; mode 6 lies beyond N/2
    assert np.allclose(p.samples, 0.5, atol=1e-15)


def test_product_of_mixed_grids():
    u = PeriodicFunction.from_callable(np.cos, 8)
    w = PeriodicFunction.from_callable(np.sin, 32)
    p = spectral.product(u, w)
    assert p.n == 32
    assert np.max(np.abs(p.samples - 0.5 * np.sin(2 * p.t))) < 1e-15


@given(band_limited(), st.sampled_from([2, 4]))
def test_refinement_exact(data, factor):
    u, _, _ = data
    fine = u.resample(factor * u.n)
    assert np.max(np.abs(fine.samples[::factor] - u.samples)) < 1e-12
    assert np.max(np.abs(fine.resample(u.n).samples - u.samples)) < 1e-12


def test_evaluate_interpolant_and_derivatives():
    u = trig(np.array([0.2, 1.0, 0.0, 0.3]), np.array([0.0, 0.0, 0.5, 0.0]), 16)
    t = np.array([0.123, 1.7, -2.9])
    f = 0.2 + np.cos(t) + 0.5 * np.sin(2 * t) + 0.3 * np.cos(3 * t)
    df = -np.sin(t) + np.cos(2 * t) - 0.9 * np.sin(3 * t)
    assert np.allclose(u.evaluate(t), f, atol=1e-14)
    assert np.allclose(u.evaluate(t, 1), df, atol=1e-13)


def test_integrate_and_norms():
    u = PeriodicFunction.from_callable(np.cos, 64)
    assert spectral.integrate(u) == pytest.approx(0.0, abs=1e-14)
    assert spectral.l1_norm(u) == pytest.approx(4.0, rel=1e-3)
    assert spectral.l2_norm(u) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert spectral.linf_norm(u) == pytest.approx(1.0)


def test_arithmetic():
    u = PeriodicFunction.from_callable(np.cos, 8)
    w = PeriodicFunction.from_callable(np.sin, 8)
    assert np.allclose((u + w - w).samples, u.samples)
    assert np.allclose((2 * u / 2).samples, u.samples)
    assert np.allclose((1 - u).samples, 1 - u.samples)
    assert np.allclose((u * w).samples, 0.5 * np.sin(2 * u.t), atol=1e-15)


def test_serialization_round_trip(tmp_path):
    u = PeriodicFunction.from_callable(lambda t: np.exp(np.cos(t)), 16)
    v = PeriodicFunction.from_json(u.to_json())
    assert np.array_equal(u.samples, v.samples)
    d = u.to_dict()
    d["n"] = 8
    with pytest.raises(ValueError):
        PeriodicFunction.from_dict(d)
    json.loads(u.to_json())
