import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from stokesmorse import negcount, spectral, waves
from stokesmorse.acceptance import _basis_coefficients
from stokesmorse.errors import DivergenceError, ResolutionError, SingularWaveError
from stokesmorse.spectral import PeriodicFunction
from stokesmorse.waves import BernoulliProblem, WaveSolution

STOKES = BernoulliProblem.stokes(1.0)
# (1 - s)^2: decreasing and log-concave for s < 1, |l'| l^(1/2 - 1) = 2
SQUARE = BernoulliProblem((1.0, -2.0, 1.0), mu=1.0, rho=2.0, m1=2.0, m2=2.0, name="square")


@pytest.fixture(scope="module")
def perturbation():
    return oracles.perturbation_oracle()


@pytest.fixture(scope="module")
def branch():
    return waves.branch_continuation(STOKES, [0.02, 0.06, 0.1, 0.14, 0.18, 0.22], n=128)


def random_v(seed, n=64, amp=0.1, modes=5):
    rng = np.random.default_rng(seed)
    t = spectral.grid(n)
    k = np.arange(1, modes + 1)
    return PeriodicFunction(np.cos(np.multiply.outer(t, k)) @ (amp * rng.normal(size=modes) / k)
                            + np.sin(np.multiply.outer(t, k)) @ (amp * rng.normal(size=modes) / k))


# -- problem definition -------------------------------------------------------


def test_stokes_profile():
    p = BernoulliProblem.stokes(0.7)
    y = np.linspace(-1, 0.5, 7)
    assert np.allclose(p.lam(y), 1 - 1.4 * y)
    assert np.allclose(p.Lam(y), y - 0.7 * y**2)
    assert np.allclose(p.dlam(y), -1.4)
    assert p.m1_value == p.m2_value == pytest.approx(1.4)
    assert p.bifurcation_mu == 1.0 and p.is_stokes


def test_conditions_hold_for_builtins():
    for p, top in ((BernoulliProblem.stokes(0.9), 0.5), (SQUARE, 0.9)):
        checks = p.check_conditions(np.linspace(-2, top, 200))
        assert all(checks.values()), checks


def test_conditions_detect_violations():
    convex = BernoulliProblem((1.0, -1.0, 0.0, 0.0, 0.5), mu=1.0, m1=None, m2=None)  # l'' > 0 somewhere
    checks = convex.check_conditions(np.linspace(-1, 0.9, 200))
    assert not checks["log_concave"] or not checks["monotone"]
    wrong_m = BernoulliProblem((1.0, -2.0), mu=1.0, m1=3.0, m2=3.0)
    assert not wrong_m.check_conditions(np.linspace(-1, 0.4, 50))["strvarrho"]


@pytest.mark.parametrize("profile", [(2.0, -1.0), (1.0,)])
def test_profile_validation(profile):
    with pytest.raises(ValueError):
        BernoulliProblem(profile)


# -- functional and residual --------------------------------------------------


def test_functional_at_zero():
    assert waves.functional_value(PeriodicFunction(np.zeros(16)), STOKES) == 0.0


@pytest.mark.parametrize("a,mu", [(0.01, 0.9), (0.3, 1.7), (1.0, 0.5)])
def test_functional_of_cosine(a, mu):
    v = PeriodicFunction.from_cosines([0.0, a], 16)
    expected = math.pi * a * a * (1 - mu)
    p = STOKES.with_mu(mu)
    assert waves.functional_value(v, p) == pytest.approx(expected, rel=1e-13, abs=1e-16)
    assert waves.stokes_functional_value(v, mu) == pytest.approx(expected, rel=1e-13, abs=1e-16)


@given(st.integers(0, 10_000), st.floats(0.3, 2.0))
def test_stokes_and_bernoulli_functionals_agree(seed, mu):
    v = random_v(seed)
    assert waves.functional_value(v, STOKES.with_mu(mu)) == pytest.approx(waves.stokes_functional_value(v, mu),
                                                                         rel=1e-12, abs=1e-14)


def test_functional_continuous_at_zero():
    v = random_v(3)
    vals = [abs(waves.functional_value(s * v, STOKES)) for s in (1e-1, 1e-2, 1e-3)]
    assert vals[2] < vals[1] < vals[0] and vals[2] < 1e-5


def test_residual_at_zero_vanishes():
    for mu in (0.3, 1.0, 2.5):
        assert spectral.linf_norm(waves.euler_lagrange_residual(PeriodicFunction(np.zeros(16)), STOKES.with_mu(mu))) == 0


@pytest.mark.parametrize("a,mu", [(0.1, 0.9), (0.5, 1.3)])
def test_residual_of_cosine_matches_symbolic_expansion(a, mu):
    F = waves.euler_lagrange_residual(PeriodicFunction.from_cosines([0.0, a], 16), STOKES.with_mu(mu))
    ref = oracles.cos_residual_oracle(a, mu)
    c = F.cosines(4)
    for k in range(5):
        assert c[k] == pytest.approx(ref.get(k, 0).real, abs=1e-14)
    # closed form 2a(1-mu) cos t - mu a^2 - 2 mu a^2 cos 2t
    assert c[:3] == pytest.approx([-mu * a * a, 2 * a * (1 - mu), -2 * mu * a * a], abs=1e-14)
    assert np.max(np.abs(F.sines())) < 1e-14


@given(st.integers(0, 10_000), st.floats(0.1, 3.0))
def test_stokes_residual_consistency(seed, mu):
    v = random_v(seed, n=64, amp=0.3, modes=12)
    diff = waves.euler_lagrange_residual(v, STOKES.with_mu(mu)) - waves.stokes_residual(v, mu)
    assert spectral.linf_norm(diff) <= 1e-12


@pytest.mark.parametrize("problem", [BernoulliProblem.stokes(0.9), SQUARE.with_mu(0.8)])
@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_difference(problem, seed):
    v = random_v(seed)
    u = random_v(seed + 100, amp=1.0) + 0.3
    h = 1e-6
    fd = (waves.functional_value(v + h * u, problem) - waves.functional_value(v - h * u, problem)) / (2 * h)
    grad = spectral.integrate(spectral.product(waves.euler_lagrange_residual(v, problem), u))
    assert grad == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("problem", [BernoulliProblem.stokes(0.9), SQUARE.with_mu(0.8)])
@pytest.mark.parametrize("seed", range(4))
def test_hessian_matches_second_difference(problem, seed):
    v = random_v(seed)
    u = random_v(seed + 100, amp=1.0) + 0.3
    h = 1e-4
    J = lambda w: waves.functional_value(w, problem)  # noqa: E731
    fd = (J(v + h * u) - 2 * J(v) + J(v - h * u)) / h**2
    form = waves.hessian_form(WaveSolution(problem, v), 8)
    assert form.quadratic(_basis_coefficients(u, 8)) == pytest.approx(fd, rel=1e-4)
    assert waves.hessian_quadratic(v, u, problem) == pytest.approx(fd, rel=1e-4)


def test_weighted_term_is_not_symmetric_before_symmetrization():
    # A_ij = int w phi_i C phi_j' is a genuinely nonsymmetric matrix; only
    # its symmetric part represents the quadratic form
    v = random_v(0)
    w = PeriodicFunction(2 * STOKES.lam(v.resample(64).samples))
    G = negcount.weight_gram(w, 8)
    A = G * negcount.basis_modes(8)[None, :]
    assert np.max(np.abs(A - A.T)) > 1e-3


# -- Newton -------------------------------------------------------------------


def test_trivial_branch_fixed_point():
    seed = WaveSolution.trivial(STOKES.with_mu(0.5), 32)
    sol = waves.newton_solve(seed, mu=0.5)
    assert spectral.linf_norm(sol.v) == 0.0 and sol.iterations == 0


def test_small_wave_against_perturbation_oracle(perturbation):
    mu2, p0, p2, mu1 = perturbation
    assert (mu1, mu2, p0, p2) == (0.0, -1.0, -0.5, 1.0)
    a = 0.01
    sol = waves.newton_solve(waves.small_amplitude_seed(STOKES, a, 64), amplitude=a)
    assert sol.residual < 1e-10
    assert sol.converged()
    assert (sol.mu - 1) == pytest.approx(mu2 * a * a, rel=0.01)
    c = sol.v.cosines(3)
    assert c[0] == pytest.approx(p0 * a * a, rel=0.01)
    assert c[2] == pytest.approx(p2 * a * a, rel=0.01)
    assert sol.amplitude == a


def test_negative_amplitude_is_half_period_translate():
    a = 0.05
    plus = waves.newton_solve(waves.small_amplitude_seed(STOKES, a, 64), amplitude=a)
    minus = waves.newton_solve(waves.small_amplitude_seed(STOKES, -a, 64), amplitude=-a)
    assert minus.mu == pytest.approx(plus.mu, abs=1e-13)
    shifted = np.roll(plus.v.samples, 32)  # t -> t + pi
    assert np.max(np.abs(shifted - minus.v.samples)) < 1e-12


def test_fixed_mu_solve_reproduces_branch_point(branch):
    sol = branch.solutions[3]
    again = waves.newton_solve(WaveSolution(sol.problem, sol.v * 1.01), mu=sol.mu)
    assert again.amplitude == pytest.approx(sol.amplitude, abs=1e-10)


def test_newton_argument_errors():
    seed = waves.small_amplitude_seed(STOKES, 0.1, 32)
    with pytest.raises(ValueError):
        waves.newton_solve(seed)
    with pytest.raises(ValueError):
        waves.newton_solve(seed, amplitude=0.1, mu=1.0)


def test_newton_divergence_reports_residual():
    seed = waves.small_amplitude_seed(STOKES, 0.25, 64)
    with pytest.raises(DivergenceError) as info:
        waves.newton_solve(seed, amplitude=0.25, maxiter=1)
    assert info.value.residual > 0


def test_singular_seed_rejected():
    seed = WaveSolution(STOKES, PeriodicFunction.from_cosines([0.0, 0.8], 32))
    with pytest.raises(SingularWaveError):
        waves.newton_solve(seed, amplitude=0.8)


def test_under_resolved_wave_rejected():
    br = waves.branch_continuation(STOKES, [0.1, 0.2, 0.29], n=64)
    assert len(br.solutions) == 1 and "ResolutionError" in br.stop_reason
    with pytest.raises(ResolutionError):
        waves.newton_solve(waves.small_amplitude_seed(STOKES, 0.1, 32), amplitude=0.1)


# -- continuation -------------------------------------------------------------


def test_single_point_branch():
    br = waves.branch_continuation(STOKES, [0.01], n=32)
    assert len(br.solutions) == 1 and br.stop_reason is None


def test_branch_mu_and_nu(branch, perturbation):
    mu2 = perturbation[0]
    sols = branch.solutions
    assert [s.amplitude for s in sols] == [0.02, 0.06, 0.1, 0.14, 0.18, 0.22]
    assert abs(sols[0].mu - 1 - mu2 * 0.02**2) < 1e-6
    nus = [waves.nu_diagnostics(s)[0] for s in sols]
    assert nus == sorted(nus)


def test_branch_big_step_uses_bisection(branch):
    jumped = waves.branch_continuation(STOKES, [0.02, 0.22], n=128)
    assert jumped.solutions[-1].mu == pytest.approx(branch.solutions[-1].mu, abs=1e-12)


def test_branch_stops_at_nu0_cap():
    br = waves.branch_continuation(STOKES, [0.1, 0.2, 0.22], n=128, nu0_cap=2.0)
    assert len(br.solutions) == 2 and "exceeds cap" in br.stop_reason


def test_branch_resume_is_deterministic(branch):
    full = branch.solutions
    rec = full[2].to_dict()
    start = WaveSolution.from_dict(rec, STOKES)
    resumed = waves.branch_continuation(STOKES, [0.02, 0.06, 0.1, 0.14, 0.18, 0.22], n=128, start=start)
    assert [s.amplitude for s in resumed.solutions] == [0.14, 0.18, 0.22]
    for a, b in zip(resumed.solutions, full[3:]):
        assert a.mu == b.mu
        assert np.array_equal(a.cosines, b.cosines)


def test_branch_rejects_unsorted_amplitudes():
    with pytest.raises(ValueError):
        waves.branch_continuation(STOKES, [0.2, 0.1])


def test_square_profile_branch():
    br = waves.branch_continuation(SQUARE, [0.02, 0.05, 0.1], n=64)
    assert len(br.solutions) == 3
    for s in br.solutions:
        assert s.residual < 1e-10
    assert br.solutions[0].mu == pytest.approx(SQUARE.bifurcation_mu, abs=1e-2)


# -- second variation ---------------------------------------------------------


@pytest.mark.parametrize("mu", [0.8, 1.5, 2.3, 0.4])
def test_trivial_hessian_is_diagonal(mu):
    sol = WaveSolution.trivial(STOKES.with_mu(mu), 32)
    H = waves.hessian_form(sol, 6).matrix
    expected = np.diag(2 * (negcount.basis_modes(6) - mu))
    assert np.max(np.abs(H - expected)) < 1e-13


@pytest.mark.parametrize("mu,expected", [(0.8, 1), (1.5, 3), (2.3, 5)])
def test_trivial_morse_index(mu, expected):
    rep = waves.morse_index(WaveSolution.trivial(STOKES.with_mu(mu), 32), m=8, max_m=32)
    assert rep.count == expected and not rep.indeterminate and rep.converged


@given(st.floats(0.05, 6.0).filter(lambda x: abs(x - round(x)) > 1e-3))
def test_trivial_morse_index_formula(mu):
    rep = waves.morse_index(WaveSolution.trivial(STOKES.with_mu(mu), 64), m=8, max_m=16)
    assert rep.count == 2 * math.floor(mu) + 1


def test_small_wave_morse_index():
    # exchange of stability: the branch bends to mu < 1, where the trivial
    # index is 1; the wave gains one negative direction (in span{1, cos t})
    # and the translation mode v' is a null direction
    a = 0.01
    sol = waves.newton_solve(waves.small_amplitude_seed(STOKES, a, 64), amplitude=a)
    rep = waves.morse_index(sol, m=8, max_m=32)
    assert (rep.count, rep.count_upper) == (2, 3)
    ev = np.linalg.eigvalsh(waves.hessian_form(sol, 8).matrix)
    assert -10 * a * a < ev[1] < 0
    assert abs(ev[2]) < 1e-12


def test_translation_mode_in_kernel(branch):
    sol = branch.solutions[-1]
    m = 32  # the projection of v' must capture its spectrum
    dv = spectral.derivative(sol.v)
    q = waves.hessian_form(sol, m).quadratic(_basis_coefficients(dv, m))
    assert abs(q) < 1e-10 * spectral.e0_form(dv)


# -- diagnostics --------------------------------------------------------------


def test_nu_at_zero():
    nu, nu0 = waves.nu_diagnostics(WaveSolution.trivial(STOKES.with_mu(0.8), 16))
    assert (nu, nu0) == (pytest.approx(1.6), pytest.approx(1.0))


def test_nu_equals_two_mu_nu0_on_stokes_waves(branch):
    for s in branch.solutions:
        nu, nu0 = waves.nu_diagnostics(s)
        assert nu == pytest.approx(2 * s.mu * nu0, rel=1e-14)


def test_nu_singular():
    sol = WaveSolution(STOKES, PeriodicFunction.from_cosines([0.0, 0.8], 16))
    with pytest.raises(SingularWaveError):
        waves.nu_diagnostics(sol)


def test_plotnikov_potential_at_zero():
    sol = WaveSolution.trivial(STOKES.with_mu(0.8), 32)
    pot = waves.plotnikov_potential(sol)
    assert np.allclose(pot.V.samples, 0.8, atol=1e-15)
    assert negcount.n_minus(pot, 8).count == 1 == waves.morse_index(sol, 8, 16).count


def test_plotnikov_checks_along_branch(branch):
    for s in branch.solutions:
        d = waves.diagnose(s, m=16, max_m=128)
        assert d.checks["V_positive"] and d.checks["l1_le_pi_nu"] and d.checks["linf_le_sqrt_nu0"]
        assert d.checks["one_plus_cdv_positive"] and d.checks["lam_min_positive"]
        assert d.morse == d.n_minus_plotnikov
        assert d.checks["bernoulli_identity_defect"] < 1e-10


def test_bernoulli_identity_and_crest_equality(branch):
    # lambda(v) ((1 + Cv')^2 + v'^2) = 1 at critical points, so
    # max |1 + Cv'| = sqrt(nu0), attained at the crest where v' = 0
    s = branch.solutions[-1]
    assert waves.bernoulli_identity_defect(s) < 1e-10
    d = waves.diagnose(s, m=16, max_m=64)
    assert d.linf_one_plus_cdv == pytest.approx(math.sqrt(d.nu0), rel=1e-8)


def test_main_bounds_trivial_branch():
    sol = WaveSolution.trivial(STOKES.with_mu(0.8), 32)
    rep = waves.check_main_bounds(sol, m=8, max_m=16)
    assert rep["morse"] == 1 and rep["nu"] == pytest.approx(1.6) and rep["nu0"] == pytest.approx(1.0)
    assert rep["upper_expr"] - 1 == pytest.approx(1.6 * math.log(3), rel=1e-14)
    assert rep["upper_expr"] - 1 >= rep["morse"] - 1
    assert rep["lower_expr"] == pytest.approx(math.log(2.6) ** (1 / 3), rel=1e-14)


def test_diagnose_branch_parallel_matches_serial(branch):
    sols = branch.solutions[:3]
    a = waves.diagnose_branch(sols, m=16, max_m=64)
    b = waves.diagnose_branch(sols, m=16, max_m=64, workers=3)
    assert [x.to_dict() for x in a] == [x.to_dict() for x in b]


def test_solution_serialization(branch):
    s = branch.solutions[1]
    back = WaveSolution.from_dict(s.to_dict(), STOKES)
    assert back.mu == s.mu and np.array_equal(back.v.samples, s.v.samples)
