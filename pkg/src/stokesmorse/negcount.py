"""Galerkin assembly of ``q_V[u] = int (C u') u - V u^2`` and eigenvalue counting.

The trial space is spanned by the orthonormal real trigonometric basis

    1/sqrt(2 pi),  cos(n t)/sqrt(pi),  sin(n t)/sqrt(pi),   1 <= n <= m,

ordered ``[1, cos 1, sin 1, cos 2, sin 2, ...]``.  In this basis the
operator ``u -> C u'`` is exactly ``diag(|n|)`` and the potential term is
the Gram matrix ``G_ij = int V phi_i phi_j``, assembled from the discrete
Fourier coefficients of ``V`` (the trapezoid rule on the grid of ``V``).
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from . import orlicz, spectral
from .errors import ResolutionError
from .spectral import PeriodicFunction

log = logging.getLogger(__name__)

__all__ = [
    "Potential",
    "GalerkinForm",
    "CountReport",
    "basis_modes",
    "weight_gram",
    "assemble_qv",
    "inertia",
    "count_negative",
    "n_minus",
    "converged_n_minus",
    "weyl_slope",
    "fit_latour_constants",
]

EIGEN_CROSSCHECK_DIM = 512


@dataclass(frozen=True, eq=False)
class Potential:
    """A nonnegative periodic potential (samples ``>= -1e-12``)."""

    V: PeriodicFunction
    tol: float = 1e-12

    def __post_init__(self):
        if np.min(self.V.samples) < -self.tol:
            raise ValueError(f"potential takes negative values (min {np.min(self.V.samples):.3g})")

    @classmethod
    def from_callable(cls, f, n):
        return cls(PeriodicFunction.from_callable(f, n))

    @property
    def strictly_positive(self):
        return bool(np.min(self.V.samples) > 0.0)

    @property
    def is_zero(self):
        return not np.any(self.V.samples > self.tol)

    @property
    def n(self):
        return self.V.n

    def scaled(self, alpha):
        return Potential(self.V * alpha, self.tol)

    def resample(self, n):
        # the trigonometric interpolant of nonnegative samples may dip
        # slightly below zero between nodes
        return Potential(self.V.resample(n), tol=max(self.tol, 1e-9 * (1 + spectral.linf_norm(self.V))))

    def l1(self):
        return spectral.l1_norm(self.V)

    def b_norm(self):
        """``||V||_{B, [-pi, pi]}`` (Orlicz norm)."""
        return orlicz.orlicz_norm(orlicz.SampledDensity.from_periodic(self.V), orlicz.B)


def basis_modes(m):
    """Frequencies ``|n|`` of the basis functions, in basis order."""
    k = np.zeros(2 * m + 1, dtype=int)
    k[1::2] = np.arange(1, m + 1)
    k[2::2] = np.arange(1, m + 1)
    return k


def weight_gram(w, m):
    """Gram matrix ``int w phi_i phi_j`` in the orthonormal trig basis of order ``m``.

    With ``Cc(j) = (1/2pi) int w cos(j t)`` and ``Ss(j) = (1/2pi) int w sin(j t)``
    the entries are combinations ``Cc(n -+ k)``, ``Ss(n +- k)``.
    """
    if w.n < 4 * m:
        raise ResolutionError(f"grid {w.n} too coarse for truncation m={m} (need >= {4 * m})")
    h = w.half_spectrum
    nh = w.n // 2
    j = np.arange(0, 2 * m + 1)
    # trapezoid-rule coefficients, including the full Nyquist value
    cc = h.real[j] if 2 * m < nh else np.append(h.real[: 2 * m], h.real[nh])
    ss = -h.imag[j] if 2 * m < nh else np.append(-h.imag[: 2 * m], 0.0)

    def Cc(d):
        return cc[np.abs(d)]

    def Ss(d):
        return np.sign(d) * ss[np.abs(d)]

    n = np.arange(1, m + 1)
    N, K = np.meshgrid(n, n, indexing="ij")
    G = np.empty((2 * m + 1, 2 * m + 1))
    G[0, 0] = cc[0]
    r2 = math.sqrt(2.0)
    G[0, 1::2] = G[1::2, 0] = r2 * Cc(n)
    G[0, 2::2] = G[2::2, 0] = r2 * Ss(n)
    G[1::2, 1::2] = Cc(N - K) + Cc(N + K)
    G[2::2, 2::2] = Cc(N - K) - Cc(N + K)
    # row cos(n), column sin(k)
    cs = Ss(K + N) + Ss(K - N)
    G[1::2, 2::2] = cs
    G[2::2, 1::2] = cs.T
    return G


@dataclass(frozen=True, eq=False)
class GalerkinForm:
    """Symmetric matrix of a quadratic form on trig polynomials of degree ``m``."""

    matrix: np.ndarray
    m: int

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.shape != (2 * self.m + 1, 2 * self.m + 1):
            raise ValueError("matrix dimension must be 2m+1")
        scale = 1.0 + np.max(np.abs(a))
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise ValueError("Galerkin matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self):
        return 2 * self.m + 1

    def quadratic(self, c):
        c = np.asarray(c, dtype=float)
        return float(c @ self.matrix @ c)


def assemble_qv(V, m):
    """Galerkin matrix ``D - G`` of ``q_V`` on trig polynomials of degree ``m``."""
    if m < 1:
        raise ValueError("truncation m must be >= 1")
    pot = V.V if isinstance(V, Potential) else V
    G = weight_gram(pot, m)
    return GalerkinForm(np.diag(basis_modes(m).astype(float)) - G, m)


def inertia(a):
    """Numbers of (negative, zero, positive) eigenvalues via ``LDL^T``.

    Uses the Bunch-Kaufman factorization (symmetric pivoting); the block
    diagonal factor has 1x1 and 2x2 blocks whose signs are counted.
    """
    a = np.asarray(a, dtype=float)
    _, d, _ = linalg.ldl(a, lower=True, hermitian=True, overwrite_a=False, check_finite=False)
    n = d.shape[0]
    neg = zero = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            blk = d[i : i + 2, i : i + 2]
            det = blk[0, 0] * blk[1, 1] - blk[1, 0] * blk[0, 1]
            if det < 0:
                neg += 1
            elif det > 0:
                neg += 2 if blk[0, 0] + blk[1, 1] < 0 else 0
            else:
                zero += 1
                neg += 1 if blk[0, 0] + blk[1, 1] < 0 else 0
            i += 2
        else:
            if d[i, i] < 0:
                neg += 1
            elif d[i, i] == 0:
                zero += 1
            i += 1
    return neg, zero, n - neg - zero


@dataclass
class CountReport:
    """Negative-eigenvalue count of a Galerkin form.

    ``count`` is the number of eigenvalues below ``-eps``; when eigenvalues
    lie in ``[-eps, eps]`` the exact count is only known to lie in
    ``[count, count_upper]`` and ``indeterminate`` is set.
    """

    count: int
    count_upper: int
    m: int
    eps: float
    margin: float
    indeterminate: bool = False
    eig_count: int | None = None
    l1_norm: float | None = None
    b_norm: float | None = None
    alpha: float = 1.0
    converged: bool | None = None
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def lower_ratio(self):
        """``N_- / ||V||_1`` (empirical ``C_1``)."""
        if not self.l1_norm:
            return None
        return self.count / self.l1_norm

    @property
    def upper_ratio(self):
        """``(N_- - 1)_+ / ||V||_B`` (empirical ``C_2``)."""
        if not self.b_norm:
            return None
        return max(self.count - 1, 0) / self.b_norm

    def to_dict(self):
        d = asdict(self)
        d["lower_ratio"] = self.lower_ratio
        d["upper_ratio"] = self.upper_ratio
        if self.l1_norm is not None:
            # both sides of the two-sided estimate with unit constants
            d["est_lower_c1"] = self.l1_norm
            d["est_upper_c1"] = None if self.b_norm is None else self.b_norm + 1.0
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


def count_negative(form, eps=None, crosscheck_dim=EIGEN_CROSSCHECK_DIM):
    """Count negative eigenvalues of a symmetric Galerkin form.

    The count of eigenvalues ``< -eps`` comes from the inertia of
    ``A + eps I``; the inertia of ``A - eps I`` bounds the count from above.
    For dimensions ``<= crosscheck_dim`` a full symmetric eigensolve
    confirms the count.  ``eps = 1e-9 (1 + ||A||)``.
    """
    a = form.matrix if isinstance(form, GalerkinForm) else np.asarray(form, dtype=float)
    m = form.m if isinstance(form, GalerkinForm) else (a.shape[0] - 1) // 2
    n = a.shape[0]
    norm = float(np.max(np.sum(np.abs(a), axis=1)))
    if eps is None:
        eps = 1e-9 * (1.0 + norm)
    eye = np.eye(n)
    lo, _, _ = inertia(a + eps * eye)
    hi_neg, hi_zero, _ = inertia(a - eps * eye)
    hi = hi_neg + hi_zero
    eig_count = None
    if n <= crosscheck_dim:
        ev = linalg.eigvalsh(a, check_finite=False)
        eig_count = int(np.sum(ev < -eps))
        if eig_count != lo:
            raise ArithmeticError(f"inertia count {lo} disagrees with eigensolve count {eig_count}")
        margin = float(np.min(np.abs(ev)))
    else:
        idx = [max(lo - 1, 0), min(hi, n - 1)]
        ev = linalg.eigh(a, eigvals_only=True, subset_by_index=idx, check_finite=False)
        margin = float(np.min(np.abs(ev)))
    return CountReport(
        count=int(lo),
        count_upper=int(hi),
        m=int(m),
        eps=float(eps),
        margin=margin,
        indeterminate=bool(hi != lo),
        eig_count=eig_count,
    )


def _as_potential(V):
    return V if isinstance(V, Potential) else Potential(V)


def n_minus(V, m, alpha=1.0, resample=True):
    """``N_-(q_{alpha V})`` at truncation ``m`` with both norms of ``alpha V``.

    With ``resample=True`` a potential on a grid coarser than ``4m`` is
    first spectrally refined (exact for band-limited potentials).
    """
    pot = _as_potential(V)
    if resample and pot.n < 4 * m:
        pot = pot.resample(spectral.next_pow2(4 * m))
    if alpha != 1.0:
        pot = pot.scaled(alpha)
    rep = count_negative(assemble_qv(pot, m))
    rep.alpha = float(alpha)
    rep.l1_norm = pot.l1()
    rep.b_norm = 0.0 if pot.is_zero else pot.b_norm()
    return rep


def converged_n_minus(V, m0, alpha=1.0, max_m=4096):
    """Double the truncation until the count is equal at ``m`` and ``2m``.

    Returns the report at the finer truncation with ``converged`` set; a
    report with ``converged=False`` is returned when ``max_m`` is reached.
    """
    m = max(int(m0), 1)
    prev = n_minus(V, m, alpha)
    while 2 * m <= max_m:
        m *= 2
        cur = n_minus(V, m, alpha)
        if cur.count == prev.count and cur.count_upper == prev.count_upper:
            cur.converged = True
            cur.extra["m_coarse"] = prev.m
            return cur
        prev = cur
    prev.converged = False
    return prev


def default_truncation(V, alpha=1.0):
    """Starting truncation ``m ~ 4 alpha max V`` (at least 8)."""
    pot = _as_potential(V)
    vmax = float(np.max(pot.V.samples))
    return max(8, int(math.ceil(4.0 * alpha * vmax)))


@dataclass
class WeylPoint:
    alpha: float
    count: int
    ratio: float
    target: float
    rel_dev: float
    m: int

    def to_dict(self):
        return asdict(self)


def weyl_slope(V, alphas, m=None, check=True, max_m=8192):
    """``N_-(q_{alpha V}) / alpha`` against ``(1/pi) int V``.

    Parameters
    ----------
    V : Potential
    alphas : increasing sequence of positive floats
    m : int, optional
        Truncation; default ``4 alpha_max max V``.
    check : bool
        Recount at ``2m`` and raise :class:`ResolutionError` if any count
        changes.
    """
    pot = _as_potential(V)
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha list is empty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])) or alphas[0] <= 0:
        raise ValueError("alphas must be positive and increasing")
    if pot.is_zero:
        raise ValueError("Weyl slope needs V != 0")
    target = spectral.integrate(pot.V) / math.pi
    m = default_truncation(pot, alphas[-1]) if m is None else int(m)
    if check and 2 * m > max_m:
        raise ResolutionError(f"convergence check needs m={2 * m} > max_m={max_m}")
    out = []
    for a in alphas:
        rep = n_minus(pot, m, a)
        if check:
            fine = n_minus(pot, 2 * m, a)
            if fine.count != rep.count:
                raise ResolutionError(
                    f"count not converged at alpha={a}: {rep.count} (m={m}) vs {fine.count} (m={2 * m})"
                )
        ratio = rep.count / a
        out.append(WeylPoint(a, rep.count, ratio, target, abs(ratio - target) / target, m))
    return out


@dataclass
class LatourFit:
    c_lower: float
    c_upper: float
    members: int
    excluded: int

    def to_dict(self):
        return asdict(self)


def fit_latour_constants(reports, path=None):
    """Empirical constants of ``C1 ||V||_1 <= N_- <= C2 ||V||_B + 1``.

    ``c_lower = min N_-/||V||_1`` and ``c_upper = max (N_- - 1)_+/||V||_B``
    over reports with ``V != 0``; members with ``converged is False`` are
    excluded with a warning.  ``c_upper`` is floored at the smallest
    positive float when every count is 1.
    """
    used = []
    excluded = 0
    for r in reports:
        if not r.l1_norm:
            excluded += 1
            continue
        if r.converged is False:
            warnings.warn(f"excluding non-converged count (m={r.m}, label={r.label!r})", stacklevel=2)
            excluded += 1
            continue
        used.append(r)
    if not used:
        raise ValueError("empty ensemble")
    c_lower = min(r.count / r.l1_norm for r in used)
    c_upper = max(max(r.count - 1, 0) / r.b_norm for r in used)
    fit = LatourFit(c_lower, max(c_upper, np.finfo(float).tiny), len(used), excluded)
    if path is not None:
        with open(path, "w") as fh:
            json.dump(fit.to_dict(), fh, indent=2)
    return fit
