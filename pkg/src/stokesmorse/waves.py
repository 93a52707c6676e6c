"""Critical points of the Bernoulli functional and their Morse indices.

For a profile ``lambda`` with primitive ``Lambda`` the functional is

    J(v) = int ( Lambda(v) (1 + C v') - v ) dt

and its gradient density (using that ``u -> C u'`` is self-adjoint) is

    F(v) = lambda(v) (1 + C v') + C( lambda(v) v' ) - 1 .

Stokes waves are the case ``lambda(y) = 1 - 2 mu y``, ``Lambda(y) = y - mu y^2``,
where ``F = 2 C v' - 2 mu v - 2 mu v C v' - 2 mu C(v v')``.

Profiles are polynomials ``lambda(y) = l(mu y)`` with ``l(0) = 1``, so the
parameter ``mu`` scales the ordinate; ``l(s) = 1 - 2 s`` gives Stokes waves.
Solutions are sought among even functions (cosine series); Hessians and
Morse indices use the full trigonometric basis.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial

from . import negcount, orlicz, spectral
from .errors import DivergenceError, ResolutionError, SingularWaveError
from .spectral import PeriodicFunction

log = logging.getLogger(__name__)

__all__ = [
    "BernoulliProblem",
    "WaveSolution",
    "WaveDiagnostics",
    "functional_value",
    "stokes_functional_value",
    "euler_lagrange_residual",
    "stokes_residual",
    "newton_solve",
    "small_amplitude_seed",
    "branch_continuation",
    "hessian_form",
    "hessian_quadratic",
    "morse_index",
    "nu_diagnostics",
    "plotnikov_potential",
    "check_main_bounds",
    "diagnose",
    "diagnose_branch",
]


@dataclass(frozen=True)
class BernoulliProblem:
    """``lambda(y) = l(mu y)`` for a polynomial profile ``l`` with ``l(0) = 1``.

    ``m1``, ``m2`` are profile-level bounds
    ``m1 <= |l'(s)| l(s)^(1/rho - 1) <= m2``; the bounds for ``lambda`` are
    ``mu m1`` and ``mu m2`` (see :attr:`m1_value`).
    """

    profile: tuple = (1.0, -2.0)
    mu: float = 1.0
    rho: float = 1.0
    m1: float | None = 2.0
    m2: float | None = 2.0
    name: str = "stokes"

    def __post_init__(self):
        p = tuple(float(c) for c in self.profile)
        if len(p) < 2 or p[0] != 1.0:
            raise ValueError("profile must be a polynomial with l(0) = 1 and degree >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        object.__setattr__(self, "profile", p)

    @classmethod
    def stokes(cls, mu):
        return cls((1.0, -2.0), float(mu), 1.0, 2.0, 2.0, "stokes")

    @property
    def is_stokes(self):
        return self.profile == (1.0, -2.0)

    def with_mu(self, mu):
        return replace(self, mu=float(mu))

    @property
    def _l(self):
        return Polynomial(self.profile)

    @property
    def degree(self):
        return len(self.profile) - 1

    def lam(self, y):
        return self._l(self.mu * np.asarray(y))

    def dlam(self, y):
        return self.mu * self._l.deriv()(self.mu * np.asarray(y))

    def Lam(self, y):
        return self._l.integ(lbnd=0.0)(self.mu * np.asarray(y)) / self.mu

    def dlam_dmu(self, y):
        y = np.asarray(y)
        return y * self._l.deriv()(self.mu * y)

    @property
    def m1_value(self):
        return None if self.m1 is None else self.mu * self.m1

    @property
    def m2_value(self):
        return None if self.m2 is None else self.mu * self.m2

    @property
    def bifurcation_mu(self):
        """``mu`` at which the first cosine mode bifurcates from ``v = 0``."""
        return 2.0 / abs(self.profile[1])

    def check_conditions(self, y):
        """Sampled checks of the structural conditions on ``lambda``.

        Returns a dict of booleans: primitive (``Lambda' = lambda`` by
        centred differences), monotone (``lambda' <= 0``), log-concave
        (second differences of ``ln lambda``) and, when ``m1``/``m2`` are
        set, the two-sided bound on ``|lambda'|/lambda``.
        """
        y = np.sort(np.asarray(y, dtype=float))
        lam = self.lam(y)
        pos = lam > 0
        h = 1e-5 * max(1.0, float(np.max(np.abs(y))))
        fd = (self.Lam(y + h) - self.Lam(y - h)) / (2 * h)
        out = {"primitive": bool(np.all(np.abs(fd - lam) <= 1e-6 * (1 + np.abs(lam))))}
        out["monotone"] = bool(np.all(self.dlam(y[pos]) <= 1e-14))
        yp = y[pos]
        if yp.size >= 3:
            ll = np.log(self.lam(yp))
            d2 = ll[2:] - 2 * ll[1:-1] + ll[:-2]
            uniform = np.allclose(np.diff(yp), yp[1] - yp[0])
            out["log_concave"] = bool(np.all(d2 <= 1e-12)) if uniform else None
        if self.m1 is not None and self.m2 is not None and np.any(pos):
            lp = self.lam(yp)
            r = np.abs(self.dlam(yp)) / lp * lp ** (1.0 / self.rho)
            out["strvarrho"] = bool(
                np.all(r >= self.m1_value * (1 - 1e-12)) and np.all(r <= self.m2_value * (1 + 1e-12))
            )
        return out


# ---------------------------------------------------------------------------
# pseudo-spectral evaluation on a padded grid


def _pad_size(problem, n):
    kmax = n // 2
    return spectral.next_pow2((problem.degree + 2) * kmax + 1)


def _cosproj(samples, kmax):
    """Cosine amplitudes ``a_0..a_kmax`` of grid data (last axis)."""
    m = samples.shape[-1]
    h = np.fft.rfft(samples, axis=-1)[..., : kmax + 1] / m
    h = h * (1.0 - 2.0 * (np.arange(kmax + 1) % 2))
    a = 2.0 * h.real
    a[..., 0] = h[..., 0].real
    return a


def _cu_prime(samples):
    """``C u'`` (multiplier ``|n|``) of real grid data along the last axis."""
    m = samples.shape[-1]
    h = np.fft.rfft(samples, axis=-1)
    h *= np.arange(h.shape[-1])
    return np.fft.irfft(h, m, axis=-1)


def _hilbert(samples):
    m = samples.shape[-1]
    h = np.fft.rfft(samples, axis=-1)
    mult = -1j * np.ones(h.shape[-1])
    mult[0] = 0.0
    mult[-1] = 0.0
    return np.fft.irfft(h * mult, m, axis=-1)


@dataclass
class _Fields:
    v: np.ndarray
    dv: np.ndarray
    cdv: np.ndarray
    m: int


def _fields(v, m):
    vv = v.resample(m)
    return _Fields(
        vv.samples,
        spectral.derivative(vv).samples,
        spectral.conjugate_derivative(vv).samples,
        m,
    )


def euler_lagrange_residual(v, problem):
    """Gradient density ``F(v)`` on the grid of ``v`` (dealiased)."""
    m = _pad_size(problem, v.n)
    f = _fields(v, m)
    lam = problem.lam(f.v)
    F = lam * (1.0 + f.cdv) + _hilbert(lam * f.dv) - 1.0
    return PeriodicFunction(F).resample(v.n)


def stokes_residual(v, mu):
    """``2 C v' - 2 mu v - 2 mu v C v' - 2 mu C(v v')`` via dealiased products."""
    cdv = spectral.conjugate_derivative(v)
    vcdv = spectral.product(v, cdv)
    vdv = spectral.product(v, spectral.derivative(v))
    return 2.0 * cdv - 2.0 * mu * v - 2.0 * mu * vcdv - 2.0 * mu * spectral.hilbert(vdv)


def functional_value(v, problem):
    """``int Lambda(v) (1 + C v') - v`` (exact for band-limited ``v``)."""
    m = _pad_size(problem, v.n)
    f = _fields(v, m)
    integrand = problem.Lam(f.v) * (1.0 + f.cdv) - f.v
    return 2.0 * math.pi * float(np.mean(integrand))


def stokes_functional_value(v, mu):
    """``int v C v' - mu v^2 (1 + C v')``; equals :func:`functional_value`
    for ``lambda = 1 - 2 mu y`` since ``Lambda(0) = 0``."""
    cdv = spectral.conjugate_derivative(v)
    v2 = spectral.product(v, v)
    return spectral.e0_form(v) - mu * spectral.integrate(v2) - mu * spectral.integrate(spectral.product(v2, cdv))


def _linearized_cos(v, problem, kmax, chunk=256):
    """Cosine projections of ``DF(v)[cos k t]`` for ``k = 0..kmax``.

    ``DF(v) u = lambda'(v)(1 + C v') u + lambda(v) C u' + C((lambda(v) u)')``.
    """
    m = _pad_size(problem, v.n)
    f = _fields(v, m)
    lam = problem.lam(f.v)
    a = problem.dlam(f.v) * (1.0 + f.cdv)
    t = spectral.grid(m)
    cols = np.empty((kmax + 1, kmax + 1))
    for start in range(0, kmax + 1, chunk):
        k = np.arange(start, min(start + chunk, kmax + 1))
        u = np.cos(np.multiply.outer(k, t))
        out = a * u + lam * (k[:, None] * u) + _cu_prime(lam * u)
        cols[k] = _cosproj(out, kmax)
    return cols.T


def _dmu_cos(v, problem, kmax):
    m = _pad_size(problem, v.n)
    f = _fields(v, m)
    lm = problem.dlam_dmu(f.v)
    out = lm * (1.0 + f.cdv) + _hilbert(lm * f.dv)
    return _cosproj(out, kmax)


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True, eq=False)
class WaveSolution:
    """An even critical point ``v`` of the functional of ``problem``."""

    problem: BernoulliProblem
    v: PeriodicFunction
    residual: float = math.inf
    iterations: int = 0
    coeffs: np.ndarray | None = None

    @property
    def mu(self):
        return self.problem.mu

    @property
    def n(self):
        return self.v.n

    @property
    def amplitude(self):
        """First cosine coefficient of ``v``."""
        return float(self.cosines[1])

    @property
    def cosines(self):
        """Cosine coefficients ``c_0..c_{N/2-1}`` (the Newton unknowns when known)."""
        return self.coeffs if self.coeffs is not None else self.v.cosines(self.n // 2 - 1)

    @property
    def lam_min(self):
        return float(np.min(self.problem.lam(self.v.samples)))

    def converged(self, tol=1e-10):
        return self.residual <= tol * (1.0 + spectral.linf_norm(self.v))

    @classmethod
    def trivial(cls, problem, n=64):
        v = PeriodicFunction(np.zeros(n))
        return cls(problem, v, float(spectral.linf_norm(euler_lagrange_residual(v, problem))))

    def to_dict(self):
        return {
            "profile": list(self.problem.profile),
            "mu": self.mu,
            "n": self.n,
            "coeffs": self.cosines.tolist(),
            "residual": self.residual,
            "a": self.amplitude,
        }

    @classmethod
    def from_dict(cls, d, problem):
        p = problem.with_mu(d["mu"])
        c = np.array(d["coeffs"], dtype=float)
        v = PeriodicFunction.from_cosines(c, int(d["n"]))
        return cls(p, v, float(d.get("residual", math.inf)), coeffs=c)


def small_amplitude_seed(problem, a, n=128):
    """``v = a cos t`` at the bifurcation value of ``mu``."""
    p = problem.with_mu(problem.bifurcation_mu)
    return WaveSolution(p, PeriodicFunction.from_cosines([0.0, a], n))


def _check_regular(v, problem):
    lmin = float(np.min(problem.lam(v.samples)))
    if not lmin > 0:
        raise SingularWaveError(f"min lambda(v) = {lmin:.3g} <= 0")


def _check_resolved(c, tol):
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return
    tail = float(np.max(np.abs(c[3 * c.size // 4 :])))
    if tail > tol * scale:
        raise ResolutionError(f"spectral tail {tail / scale:.2e} exceeds {tol:g}; refine the grid")


def newton_solve(seed, *, amplitude=None, mu=None, tol=1e-10, maxiter=50, resolution_tol=1e-11):
    """Newton's method for ``F(v) = 0`` among even functions.

    Exactly one of ``amplitude`` (first cosine coefficient fixed, ``mu``
    free) or ``mu`` (parameter fixed) must be given.  The Jacobian is
    assembled column by column from the linearized operator applied to
    ``cos k t``, ``k = 0..N/2-1``.

    Raises
    ------
    DivergenceError
        No convergence within ``maxiter`` iterations.
    SingularWaveError
        An iterate has ``min lambda(v) <= 0``.
    ResolutionError
        The converged spectrum is not resolved on the grid.
    """
    if (amplitude is None) == (mu is None):
        raise ValueError("give exactly one of amplitude= or mu=")
    problem = seed.problem if mu is None else seed.problem.with_mu(mu)
    n = seed.n
    kmax = n // 2 - 1
    c = np.array(seed.cosines[: kmax + 1], dtype=float)
    if amplitude is not None:
        c[1] = amplitude
    mu_cur = problem.mu

    def state(c, mu_cur):
        p = problem.with_mu(mu_cur)
        v = PeriodicFunction.from_cosines(c, n)
        return p, v

    p, v = state(c, mu_cur)
    _check_regular(v, p)
    best = None
    for it in range(maxiter + 1):
        F = euler_lagrange_residual(v, p)
        res = spectral.linf_norm(F)
        scale = 1.0 + spectral.linf_norm(v)
        if best is not None and res >= best[0] and best[0] <= tol * scale:
            break
        best = (res, c.copy(), mu_cur, it)
        if res <= 1e-3 * tol * scale:
            break
        if it == maxiter:
            break
        rhs = F.cosines(kmax)
        J = _linearized_cos(v, p, kmax)
        if amplitude is not None:
            J = np.hstack([J, _dmu_cos(v, p, kmax)[:, None]])
            row = np.zeros(kmax + 2)
            row[1] = 1.0
            J = np.vstack([J, row])
            rhs = np.append(rhs, c[1] - amplitude)
        try:
            dx = np.linalg.solve(J, -rhs)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -rhs, rcond=None)[0]
        c = c + dx[: kmax + 1]
        if amplitude is not None:
            mu_cur = mu_cur + dx[-1]
        p, v = state(c, mu_cur)
        _check_regular(v, p)
    res, c, mu_cur, it = best
    p, v = state(c, mu_cur)
    if not res <= tol * (1.0 + spectral.linf_norm(v)):
        raise DivergenceError(f"Newton did not converge: residual {res:.3e} after {it} iterations", res)
    _check_resolved(c, resolution_tol)
    return WaveSolution(p, v, res, it, c)


@dataclass
class Branch:
    solutions: list
    stop_reason: str | None = None


def branch_continuation(problem, amplitudes, n=128, nu0_cap=50.0, max_halvings=8, start=None, **newton_kw):
    """Continue the primary branch in the first cosine coefficient.

    Each target amplitude is seeded from the previous solution with its
    first coefficient moved to the target.  A failed step is retried from
    intermediate amplitudes, halving the step up to ``max_halvings``
    times.  The branch stops at the first singular or under-resolved wave
    or once ``nu0`` exceeds ``nu0_cap``.

    Parameters
    ----------
    start : WaveSolution, optional
        Resume from this solution (amplitudes at or below its amplitude
        are skipped).
    """
    amps = [float(a) for a in amplitudes]
    if any(b <= a for a, b in zip(amps, amps[1:])):
        raise ValueError("amplitudes must be increasing")
    out = []
    prev = start
    if prev is not None:
        amps = [a for a in amps if a > prev.amplitude]
    for a in amps:
        try:
            sol = _reach(problem, prev, a, n, max_halvings, newton_kw)
        except (SingularWaveError, ResolutionError, DivergenceError) as exc:
            log.info("branch stopped before a=%g: %s", a, exc)
            return Branch(out, f"{type(exc).__name__}: {exc}")
        nu, nu0 = nu_diagnostics(sol)
        if nu0 > nu0_cap:
            return Branch(out, f"nu0 = {nu0:.4g} exceeds cap {nu0_cap:g}")
        out.append(sol)
        prev = sol
    return Branch(out, None)


def _reach(problem, prev, a, n, max_halvings, newton_kw):
    if prev is None:
        prev = small_amplitude_seed(problem, 0.0, n)
        a_prev = 0.0
    else:
        a_prev = prev.amplitude
    target = a
    halvings = 0
    while True:
        seed = prev if a_prev != 0.0 else small_amplitude_seed(problem, target, n)
        try:
            sol = newton_solve(seed, amplitude=target, **newton_kw)
        except (DivergenceError, SingularWaveError) as exc:
            halvings += 1
            if halvings > max_halvings:
                raise exc
            target = a_prev + 0.5 * (target - a_prev)
            continue
        if target == a:
            return sol
        prev, a_prev, target = sol, target, a


# ---------------------------------------------------------------------------
# second variation


def _weights(sol, n):
    """Grid data of ``2 lambda(v)`` and ``lambda'(v)(1 + C v')`` on ``n`` points."""
    f = _fields(sol.v, n)
    p = sol.problem
    return (
        PeriodicFunction(2.0 * p.lam(f.v)),
        PeriodicFunction(p.dlam(f.v) * (1.0 + f.cdv)),
    )


def hessian_form(sol, m):
    """Galerkin matrix of ``Q_v[u] = int 2 lambda(v) u C u' + lambda'(v)(1 + C v') u^2``.

    The nonlocal term has matrix ``G_w D`` (``w = 2 lambda(v)``,
    ``D = diag |n|``); its symmetric part ``(G_w D + D G_w)/2`` represents
    the quadratic form.
    """
    n = max(spectral.next_pow2(4 * m), 2 * sol.n)
    w1, w2 = _weights(sol, n)
    D = negcount.basis_modes(m).astype(float)
    G1 = negcount.weight_gram(w1, m)
    A = G1 * D[None, :]
    H = 0.5 * (A + A.T) + negcount.weight_gram(w2, m)
    return negcount.GalerkinForm(H, m)


def hessian_quadratic(v, u, problem):
    """``Q_v[u]`` by quadrature on a padded grid (no Galerkin truncation)."""
    m = 2 * spectral.next_pow2(max(v.n, u.n))
    f = _fields(v, m)
    uu = u.resample(m)
    cu = spectral.conjugate_derivative(uu).samples
    integrand = 2.0 * problem.lam(f.v) * uu.samples * cu + problem.dlam(f.v) * (1.0 + f.cdv) * uu.samples**2
    return 2.0 * math.pi * float(np.mean(integrand))


def _stable_count(build, m, max_m):
    """Count at ``m`` and ``2m``, doubling until the strict counts agree.

    The upper end is not compared: the translation mode of a wave is a
    null direction whose discrete eigenvalue approaches zero from either
    side as ``m`` grows.
    """
    prev = negcount.count_negative(build(m))
    while 2 * m <= max_m:
        m *= 2
        cur = negcount.count_negative(build(m))
        if cur.count == prev.count:
            cur.converged = True
            cur.extra["m_coarse"] = prev.m
            return cur
        prev = cur
    prev.converged = False
    return prev


def morse_index(sol, m=32, max_m=512):
    """Negative-eigenvalue count of the Hessian, stabilized across doubling.

    The returned :class:`~stokesmorse.negcount.CountReport` has
    ``count``/``count_upper`` bracketing the index when eigenvalues lie
    within the margin (the translation mode ``v'`` is a null direction for
    every nontrivial wave).
    """
    return _stable_count(lambda mm: hessian_form(sol, mm), m, max_m)


def _crest_polish(v):
    """Location and value of ``max v`` refined by one Newton step on ``v'``."""
    j = int(np.argmax(v.samples))
    t0 = float(v.t[j])
    d1 = float(v.evaluate(t0, 1))
    d2 = float(v.evaluate(t0, 2))
    t1 = t0 - d1 / d2 if d2 < 0 else t0
    if abs(t1 - t0) > 2 * math.pi / v.n:
        t1 = t0
    return t1, max(float(v.evaluate(t1)), float(v.samples[j]))


def nu_diagnostics(sol):
    """``(nu, nu0) = (max |lambda'(v)|/lambda(v), 1/min lambda(v))``.

    For decreasing log-concave ``lambda`` both maxima sit at ``max v``;
    the crest is refined by one Newton step on ``v'``.
    """
    p = sol.problem
    _, vmax = _crest_polish(sol.v)
    ys = np.append(sol.v.samples, vmax)
    lam = p.lam(ys)
    if not np.min(lam) > 0:
        raise SingularWaveError(f"min lambda(v) = {np.min(lam):.3g} <= 0")
    nu = float(np.max(np.abs(p.dlam(ys)) / lam))
    nu0 = float(1.0 / np.min(lam))
    return nu, nu0


def plotnikov_potential(sol, n=None, tol=1e-10):
    """``V = (C(lambda'(v) v'/lambda(v)) - (lambda'(v)/lambda(v))(1 + C v')) / 2``.

    Computed on a grid of ``n`` points (default twice the solution grid,
    evaluated on a further doubled grid then truncated).

    Raises
    ------
    ResolutionError
        If ``V < -tol`` somewhere (positivity lost to under-resolution).
    """
    n = 2 * sol.n if n is None else n
    big = 2 * n
    f = _fields(sol.v, big)
    p = sol.problem
    lam = p.lam(f.v)
    if not np.min(lam) > 0:
        raise SingularWaveError("min lambda(v) <= 0")
    r = p.dlam(f.v) / lam
    V2 = _hilbert(r * f.dv) - r * (1.0 + f.cdv)
    V = PeriodicFunction(0.5 * V2).resample(n)
    vmin = float(np.min(V.samples))
    if vmin < -tol:
        raise ResolutionError(f"Plotnikov potential not positive (min {vmin:.3g}); under-resolved wave")
    return negcount.Potential(V, tol=max(tol, 1e-12))


def plotnikov_count(sol, m=32, max_m=512):
    """``N_-(q_V)`` for the Plotnikov potential, stabilized across doubling."""

    def build(mm):
        pot = plotnikov_potential(sol, n=max(spectral.next_pow2(4 * mm), 2 * sol.n))
        return negcount.assemble_qv(pot, mm)

    return _stable_count(build, m, max_m)


# ---------------------------------------------------------------------------
# bounds


def bernoulli_identity_defect(sol):
    """``max |lambda(v) ((1 + C v')^2 + v'^2) - 1|`` on a padded grid."""
    f = _fields(sol.v, 2 * sol.n)
    lam = sol.problem.lam(f.v)
    return float(np.max(np.abs(lam * ((1.0 + f.cdv) ** 2 + f.dv**2) - 1.0)))


@dataclass
class WaveDiagnostics:
    """Per-wave diagnostics and the two-sided Morse-index estimate."""

    a: float
    mu: float
    residual: float
    nu: float
    nu0: float
    morse: int
    morse_upper: int
    morse_m: int
    n_minus_plotnikov: int
    n_minus_upper: int
    v_min: float
    v_l1: float
    v_b: float
    linf_one_plus_cdv: float
    min_one_plus_cdv: float
    lower_expr: float
    upper_expr: float
    bound_ratios: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


def check_main_bounds(sol, morse=None, pot=None, m=32, max_m=512):
    """Evaluate ``lower <= M(v) <= upper`` with unit constants and the ratios.

    ``lower = (m1/m2) ln^{rho/(rho+2)}(1 + nu)`` and
    ``upper = 1 + nu ln(2 + nu0)``.  Ratios:

    * ``lower_over_morse``  (bounded by ``1/M1``)
    * ``morse_over_upper``  (``M / (1 + nu ln(2 + nu0))``)
    * ``m2_fit = (M - 1)_+ / (nu ln(2 + nu0))``
    * ``m3_fit = ||V||_1 / ((m1/m2) ln^{rho/(rho+2)}(1 + nu))``
    * ``m4_fit = ||V||_B / (nu ln(2 + nu0))``
    """
    p = sol.problem
    nu, nu0 = nu_diagnostics(sol)
    if morse is None:
        morse = morse_index(sol, m, max_m)
    if pot is None:
        pot = plotnikov_potential(sol)
    ratio_m = 1.0 if p.m1 is None or p.m2 is None else p.m1 / p.m2
    lower = ratio_m * math.log1p(nu) ** (p.rho / (p.rho + 2.0))
    growth = nu * math.log(2.0 + nu0)
    upper = 1.0 + growth
    M = morse.count
    l1 = pot.l1()
    bn = pot.b_norm()
    return {
        "nu": nu,
        "nu0": nu0,
        "morse": M,
        "lower_expr": lower,
        "upper_expr": upper,
        "lower_over_morse": lower / M if M > 0 else math.inf,
        "morse_over_upper": M / upper,
        "m2_fit": max(M - 1, 0) / growth,
        "m3_fit": l1 / lower if lower > 0 else math.inf,
        "m4_fit": bn / growth,
        "v_l1": l1,
        "v_b": bn,
    }


def diagnose(sol, m=32, max_m=512):
    """Full diagnostics of a converged wave."""
    p = sol.problem
    nu, nu0 = nu_diagnostics(sol)
    morse = morse_index(sol, m, max_m)
    pot = plotnikov_potential(sol)
    plot = plotnikov_count(sol, m, max_m)
    bounds = check_main_bounds(sol, morse, pot)
    f = _fields(sol.v, 2 * sol.n)
    opc = 1.0 + f.cdv
    checks = {
        "lam_min_positive": sol.lam_min > 0,
        "one_plus_cdv_positive": bool(np.min(opc) > 0),
        "V_positive": bool(np.min(pot.V.samples) > 0),
        "l1_le_pi_nu": bounds["v_l1"] <= math.pi * nu * (1 + 1e-10),
        "linf_le_sqrt_nu0": float(np.max(np.abs(opc))) <= math.sqrt(nu0) * (1 + 1e-8),
        "morse_matches_plotnikov": morse.count == plot.count,
        "bernoulli_identity_defect": bernoulli_identity_defect(sol),
        "morse_converged": bool(morse.converged),
        "plotnikov_converged": bool(plot.converged),
    }
    return WaveDiagnostics(
        a=sol.amplitude,
        mu=p.mu,
        residual=sol.residual,
        nu=nu,
        nu0=nu0,
        morse=morse.count,
        morse_upper=morse.count_upper,
        morse_m=morse.m,
        n_minus_plotnikov=plot.count,
        n_minus_upper=plot.count_upper,
        v_min=float(np.min(pot.V.samples)),
        v_l1=bounds["v_l1"],
        v_b=bounds["v_b"],
        linf_one_plus_cdv=float(np.max(np.abs(opc))),
        min_one_plus_cdv=float(np.min(opc)),
        lower_expr=bounds["lower_expr"],
        upper_expr=bounds["upper_expr"],
        bound_ratios={k: bounds[k] for k in ("lower_over_morse", "morse_over_upper", "m2_fit", "m3_fit", "m4_fit")},
        checks=checks,
    )


def diagnose_branch(solutions, m=32, max_m=512, workers=1):
    """:func:`diagnose` over converged solutions; ``workers > 1`` uses threads.

    Results are returned in input order regardless of completion order.
    """
    if workers <= 1:
        return [diagnose(s, m, max_m) for s in solutions]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: diagnose(s, m, max_m), solutions))
