"""N-functions, Orlicz/Luxemburg norms and the covering construction.

The built-in pair of mutually complementary N-functions is

    A(s) = exp|s| - 1 - |s|,        B(s) = (1 + |s|) ln(1 + |s|) - |s| .

Norms of a sampled density ``f`` on an interval ``I`` (Lebesgue measure,
trapezoid quadrature):

* Luxemburg  ``||f||_(Psi) = inf{k > 0 : int Psi(f/k) <= 1}``
* Orlicz     ``||f||_Psi = sup{|int f g| : int Phi(g) <= 1}``
* averaged   ``||f||^(av)_Psi`` , same sup with constraint level ``|I|``

The two duality norms are evaluated through the Amemiya formula
``inf_{k>0} (c + int Psi(k f)) / k`` with ``c = 1`` or ``c = |I|``.  The
infimum is attained where ``int Phi(Psi'(k |f|)) = c``, and its value there
is ``int |f| Psi'(k |f|)``; that root is located with Brent's method in
``log k``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import spectral
from .errors import ResolutionError

__all__ = [
    "NFunction",
    "A",
    "B",
    "SampledDensity",
    "modular",
    "luxemburg_norm",
    "orlicz_norm",
    "averaged_norm",
    "solomyak_partition",
    "partition_norms",
    "check_elem_bounds",
    "bound_1infty",
    "zygmund_check",
    "ZygmundReport",
    "ZYGMUND_A0",
]

OVERFLOW_ARG = 700.0

# Small-argument series avoid cancellation in expm1(a) - a and (1+a)log1p(a) - a.
_SERIES_CUT = 0.1
_A_SERIES = np.array([1.0 / math.factorial(k) for k in range(2, 20)])
_B_SERIES = np.array([(-1.0) ** k / (k * (k - 1)) for k in range(2, 20)])


def _series(a, coef):
    out = np.zeros_like(a)
    for c in coef[::-1]:
        out = (out + c) * a
    return out * a


def _A(s):
    a = np.abs(np.asarray(s, dtype=float))
    if a.size and np.max(a) > OVERFLOW_ARG:
        raise OverflowError(f"A(s) overflows for |s| > {OVERFLOW_ARG:g}")
    small = a < _SERIES_CUT
    out = np.expm1(a) - a
    if np.any(small):
        out = np.where(small, _series(a, _A_SERIES), out)
    return out


def _dA(s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    if a.size and np.max(a) > OVERFLOW_ARG:
        raise OverflowError(f"A'(s) overflows for |s| > {OVERFLOW_ARG:g}")
    return np.sign(s) * np.expm1(a)


def _B(s):
    a = np.abs(np.asarray(s, dtype=float))
    small = a < _SERIES_CUT
    out = (1.0 + a) * np.log1p(a) - a
    if np.any(small):
        out = np.where(small, _series(a, _B_SERIES), out)
    return out


def _dB(s):
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.log1p(np.abs(s))


@dataclass(frozen=True)
class NFunction:
    """An even convex Young function with its derivative and complement.

    ``phi`` and ``dphi`` act elementwise on arrays; ``complement`` names the
    Young conjugate in :data:`NFUNCTIONS`.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    complement_name: str

    def __call__(self, s):
        return self.phi(s)

    @property
    def complement(self):
        return NFUNCTIONS[self.complement_name]

    def inverse(self, y):
        """``phi^{-1}(y)`` on ``[0, inf)``."""
        if y < 0:
            raise ValueError("phi^{-1} needs y >= 0")
        if y == 0:
            return 0.0
        hi = 1.0
        while self.phi(hi) < y:
            hi *= 2.0
        return optimize.brentq(lambda s: float(self.phi(s)) - y, 0.0, hi, xtol=1e-15, rtol=1e-15)


A = NFunction("A", _A, _dA, "B")
B = NFunction("B", _B, _dB, "A")
NFUNCTIONS = {"A": A, "B": B}


@dataclass(frozen=True, eq=False)
class SampledDensity:
    """Samples of a function on a uniform grid of ``[a, b]``.

    With ``periodic=True`` the nodes are ``a + (b-a) j/N``, ``j < N`` and
    the quadrature is the periodic trapezoid rule; otherwise the nodes are
    ``linspace(a, b, N)`` with the ordinary trapezoid rule.
    """

    a: float
    b: float
    values: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if not self.b > self.a:
            raise ValueError("interval must satisfy b > a")
        if v.ndim != 1 or v.size < 8:
            raise ValueError("a density needs at least 8 samples")
        if np.any(np.isnan(v)):
            raise ValueError("density contains NaN samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, a, b, n, periodic=False):
        nodes = _nodes(a, b, n, periodic)
        return cls(a, b, np.asarray(f(nodes), dtype=float) * np.ones(n), periodic)

    @classmethod
    def from_periodic(cls, u):
        """Wrap a :class:`~stokesmorse.spectral.PeriodicFunction` on ``[-pi, pi]``."""
        return cls(-np.pi, np.pi, u.samples, periodic=True)

    @property
    def n(self):
        return self.values.size

    @property
    def length(self):
        return self.b - self.a

    @property
    def nodes(self):
        return _nodes(self.a, self.b, self.n, self.periodic)

    @property
    def weights(self):
        return _weights(self.a, self.b, self.n, self.periodic)

    def integral(self, g=None):
        vals = self.values if g is None else g
        return float(np.dot(self.weights, vals))

    def l1(self):
        return self.integral(np.abs(self.values))

    def linf(self):
        return float(np.max(np.abs(self.values)))

    def scaled(self, c):
        return SampledDensity(self.a, self.b, c * self.values, self.periodic)

    # -- serialization ------------------------------------------------
    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "periodic": self.periodic,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["a"]), float(d["b"]), d["values"], bool(d.get("periodic", False)))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(self.nodes, self.values):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, periodic=False, b=None):
        """Read ``t,value`` rows.

        For periodic data the right endpoint is not sampled; pass ``b`` or
        it is inferred from the spacing.
        """
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        t = np.array([float(r[0]) for r in rows])
        v = np.array([float(r[1]) for r in rows])
        if t.size < 8:
            raise ValueError("a density needs at least 8 samples")
        h = np.diff(t)
        if np.max(np.abs(h - h[0])) > 1e-9 * max(1.0, abs(h[0])):
            raise ValueError(f"nonuniform grid: spacing ranges over [{h.min():.6g}, {h.max():.6g}]")
        if periodic:
            end = t[-1] + h[0] if b is None else b
            return cls(float(t[0]), float(end), v, True)
        return cls(float(t[0]), float(t[-1]), v, False)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _nodes(a, b, n, periodic):
    if periodic:
        return a + (b - a) * np.arange(n) / n
    return np.linspace(a, b, n)


def _weights(a, b, n, periodic):
    if periodic:
        return np.full(n, (b - a) / n)
    w = np.full(n, (b - a) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


# ---------------------------------------------------------------------------
# modular and norms


def _modular(values, weights, psi, kappa):
    try:
        return float(np.dot(weights, psi.phi(values / kappa)))
    except OverflowError:
        return math.inf


def modular(f, psi, kappa):
    """``int Psi(f / kappa)`` over the density's interval."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return _modular(f.values, f.weights, psi, kappa)


def _luxemburg(values, weights, psi, rtol=1e-10):
    values = np.abs(values)
    if not np.any(values > 0):
        return 0.0
    if np.any(np.isnan(values)):
        raise ValueError("density contains NaN samples")

    def g(x):
        m = _modular(values, weights, psi, math.exp(x))
        return (m if math.isfinite(m) else 1e300) - 1.0

    x0 = math.log(float(np.dot(weights, values)))
    lo, hi = x0 - 1.0, x0 + 1.0
    while g(lo) < 0:
        lo -= 2.0
    while g(hi) > 0:
        hi += 2.0
    x = optimize.brentq(g, lo, hi, xtol=rtol * 1e-2, rtol=1e-15, maxiter=500)
    return math.exp(x)


def luxemburg_norm(f, psi):
    """Luxemburg (gauge) norm: the ``kappa`` with ``int Psi(f/kappa) = 1``.

    Found by bracketing in ``log kappa`` and Brent's method to relative
    tolerance ``1e-10``; returns ``0`` for the zero density.
    """
    return _luxemburg(f.values, f.weights, psi)


def _amemiya(values, weights, psi, level):
    """``inf_k (level + int Psi(k |f|)) / k``."""
    values = np.abs(values)
    if np.any(np.isnan(values)):
        raise ValueError("density contains NaN samples")
    if not np.any(values > 0):
        return 0.0
    phi = psi.complement

    def stationarity(x):
        try:
            slope = psi.dphi(math.exp(x) * values)
            return float(np.dot(weights, phi.phi(slope))) - level
        except OverflowError:
            return 1e300

    # k = 1/||f||_(Psi) is a good centre; stationarity is increasing in k
    x0 = -math.log(_luxemburg(values, weights, psi, rtol=1e-3))
    lo, hi = x0 - 1.0, x0 + 1.0
    while stationarity(lo) > 0:
        lo -= 2.0
    while stationarity(hi) < 0:
        hi += 2.0
    x = optimize.brentq(stationarity, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    k = math.exp(x)
    return float(np.dot(weights, values * psi.dphi(k * values)))


def orlicz_norm(f, psi):
    """Orlicz (duality) norm with constraint ``int Phi(g) <= 1``."""
    return _amemiya(f.values, f.weights, psi, 1.0)


def averaged_norm(f, psi):
    """Averaged Orlicz norm: duality constraint ``int Phi(g) <= |I|``."""
    return _amemiya(f.values, f.weights, psi, f.length)


# ---------------------------------------------------------------------------
# covering


def _sub_density(nodes, values, x, y):
    """Piecewise-linear restriction to ``[x, y]``: nodes and trapezoid weights."""
    inner = (nodes > x) & (nodes < y)
    pts = np.concatenate([[x], nodes[inner], [y]])
    vals = np.concatenate([np.interp([x], nodes, values), values[inner], np.interp([y], nodes, values)])
    d = np.diff(pts)
    w = np.zeros(pts.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return vals, w


def solomyak_partition(V, n, psi=B, tol=1e-8):
    """Greedy left-to-right covering with a common averaged-norm budget.

    The interval is rescaled to unit length, the budget is
    ``tau = 2 ||V||_{B,I} / n`` and each interval is grown (Brent's method
    on its right endpoint) until its averaged norm reaches ``tau``; the last
    interval may fall short.  Intervals are returned in the original
    coordinates and are pairwise disjoint up to endpoints.

    Returns
    -------
    intervals : list of (float, float)
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    vals = np.asarray(V.values, dtype=float)
    if np.min(vals) < -1e-12:
        raise ValueError("potential must be nonnegative")
    vals = np.clip(vals, 0.0, None)
    if V.periodic:
        vals = np.append(vals, vals[0])
    nodes = np.linspace(0.0, 1.0, vals.size)
    scale = V.length

    def to_orig(s):
        return V.a + scale * s

    w_full = _weights(0.0, 1.0, vals.size, False)
    total = _amemiya(vals, w_full, psi, 1.0)
    if total == 0.0 or n == 1:
        return [(V.a, V.b)]
    tau = 2.0 * total / n
    cell = 1.0 / (vals.size - 1)

    def norm_on(x, y):
        if y <= x:
            return 0.0
        sv, sw = _sub_density(nodes, vals, x, y)
        return _amemiya(sv, sw, psi, y - x)

    out = []
    x = 0.0
    while True:
        if norm_on(x, 1.0) <= tau * (1.0 + tol):
            out.append((to_orig(x), V.b))
            break
        y = optimize.brentq(lambda y: norm_on(x, y) - tau, x, 1.0, xtol=1e-14, rtol=1e-15)
        if y - x < 0.25 * cell:
            raise ResolutionError(
                f"budget {tau:.3g} needs an interval shorter than the grid resolution {cell:.3g}"
            )
        out.append((to_orig(x), to_orig(y)))
        x = y
        if len(out) > n:
            raise ResolutionError("covering exceeded n intervals; density is under-resolved")
    return out


def partition_norms(V, intervals, n, psi=B):
    """Budget and per-interval averaged norms of a covering.

    Both are measured after rescaling the interval of ``V`` to unit length,
    as in :func:`solomyak_partition`.

    Returns
    -------
    tau : float
        ``2 ||V||_{B,I} / n``.
    norms : list of float
    """
    vals = np.clip(np.asarray(V.values, dtype=float), 0.0, None)
    if V.periodic:
        vals = np.append(vals, vals[0])
    nodes = np.linspace(0.0, 1.0, vals.size)
    total = _amemiya(vals, _weights(0.0, 1.0, vals.size, False), psi, 1.0)
    norms = []
    for a, b in intervals:
        x, y = (a - V.a) / V.length, (b - V.a) / V.length
        sv, sw = _sub_density(nodes, vals, x, y)
        norms.append(_amemiya(sv, sw, psi, y - x) if y > x else 0.0)
    return 2.0 * total / n, norms


# ---------------------------------------------------------------------------
# elementary inequalities


def _lnplus(s):
    return np.log(np.maximum(s, 1.0))


def check_elem_bounds(s):
    """``(s ln+ s / 2, B(s), s + 2 s ln+ s)``; the three are nondecreasing."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    lp = float(_lnplus(s))
    return 0.5 * s * lp, float(B.phi(s)), s + 2.0 * s * lp


def bound_1infty(g):
    """``(||g||_B, 8 ||g||_1 ln(2 + |I| ||g||_inf / ||g||_1))``.

    On ``[-pi, pi]`` the factor ``|I|`` is the ``2 pi`` of the classical
    estimate.
    """
    l1 = g.l1()
    if l1 == 0.0:
        raise ValueError("g must not vanish identically")
    lhs = orlicz_norm(g, B)
    rhs = 8.0 * l1 * math.log(2.0 + g.length * g.linf() / l1)
    return lhs, rhs


ZYGMUND_A0 = math.pi / 2.0 + (2.0 * math.pi + 1.0) * math.log(1.0 + 1.0 / (2.0 * math.pi))


@dataclass
class ZygmundReport:
    cf_l1: float
    f_l1: float
    llogl: float
    luxemburg_b: float
    orlicz_b: float
    a0: float = ZYGMUND_A0
    nonnegative: bool = False
    bound: float | None = None
    holds: bool | None = None
    classical_lhs: float | None = None
    classical_rhs: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


def zygmund_check(f):
    """Conjugate-function estimates for a periodic density on ``[-pi, pi]``.

    For ``f >= 0`` the report checks
    ``||f||_B <= 2 ||f||_(B) <= 2 A0 max(||Cf||_1, ||f||_1)`` and the
    underlying integral inequality
    ``int (1+f) ln(1+f) <= (pi/2) ||Cf||_1 + 2pi (1 + m) ln(1 + m)``,
    ``m = ||f||_1 / 2pi``.
    """
    if not f.periodic or not np.isclose(f.length, 2.0 * np.pi):
        raise ValueError("zygmund_check needs a periodic density on [-pi, pi]")
    u = spectral.PeriodicFunction(f.values)
    cf = spectral.hilbert(u)
    cf_l1 = spectral.l1_norm(cf)
    f_l1 = f.l1()
    absf = np.abs(f.values)
    llogl = f.integral(absf * _lnplus(absf))
    lux = luxemburg_norm(f, B)
    orl = orlicz_norm(f, B)
    rep = ZygmundReport(cf_l1, f_l1, llogl, lux, orl)
    if np.min(f.values) >= 0.0:
        rep.nonnegative = True
        kappa1 = max(cf_l1, f_l1)
        rep.bound = 2.0 * ZYGMUND_A0 * kappa1
        rep.holds = bool(orl <= 2.0 * lux * (1 + 1e-12) and 2.0 * lux <= rep.bound * (1 + 1e-12))
        m = f_l1 / (2.0 * np.pi)
        rep.classical_lhs = f.integral((1.0 + f.values) * np.log1p(f.values))
        rep.classical_rhs = 0.5 * np.pi * cf_l1 + 2.0 * np.pi * (1.0 + m) * math.log1p(m)
        rep.extra["kappa1"] = kappa1
    return rep
