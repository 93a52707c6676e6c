"""Fourier-grid core for real 2*pi-periodic functions.

Functions are held as samples on the uniform grid
``t_j = -pi + 2*pi*j/N`` (``N`` a power of two, ``N >= 8``) together with
their Fourier coefficients

    u_hat(n) = (1/2pi) * integral_{-pi}^{pi} u(t) exp(-i n t) dt .

All Fourier multipliers below are written in this convention:

* periodic Hilbert transform ``C``:   ``-i sign(n)``  (zero at ``n = 0``)
* the nonlocal operator ``u -> C u'``: ``|n|``

Internally the half spectrum ``h[k] = u_hat(k)`` for ``0 <= k < N/2`` is
used, with ``h[N/2]`` holding the full amplitude of ``cos(N t / 2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ResolutionError, SymmetryError

__all__ = [
    "PeriodicFunction",
    "synthesize",
    "hilbert",
    "conjugate_derivative",
    "derivative",
    "product",
    "integrate",
    "e0_form",
    "l1_norm",
    "l2_norm",
    "linf_norm",
    "h_half_norm",
    "energy_norm",
    "disk_dirichlet_energy",
    "grid",
    "next_pow2",
]


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n):
    """Smallest power of two that is ``>= n``."""
    n = int(n)
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def grid(n):
    """Uniform periodic grid ``-pi + 2*pi*j/n``."""
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _sign(k):
    # (-1)^k, the phase from starting the grid at -pi.
    return 1.0 - 2.0 * (np.asarray(k) % 2)


@dataclass(frozen=True, eq=False)
class PeriodicFunction:
    """A real 2*pi-periodic function on a uniform power-of-two grid.

    Parameters
    ----------
    samples : array_like
        Real values at ``t_j = -pi + 2*pi*j/N``.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        n = s.size
        if n < 8 or not _is_pow2(n):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples contain non-finite values")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    # -- construction -------------------------------------------------
    @classmethod
    def from_callable(cls, f, n):
        """Sample ``f`` on the ``n``-point grid."""
        return cls(np.asarray(f(grid(n)), dtype=float) * np.ones(n))

    @classmethod
    def constant(cls, c, n=8):
        return cls(np.full(n, float(c)))

    @classmethod
    def from_half_spectrum(cls, h, n):
        """Build from ``h[k]``, ``k = 0..n/2`` (see module docstring)."""
        h = np.asarray(h, dtype=complex)
        if h.size != n // 2 + 1:
            raise ValueError("half spectrum has wrong length")
        k = np.arange(h.size)
        samples = np.fft.irfft(h * _sign(k) * n, n)
        return cls(samples)

    @classmethod
    def from_cosines(cls, c, n):
        """``sum_k c[k] cos(k t)`` on the ``n``-point grid."""
        c = np.asarray(c, dtype=float)
        if c.size > n // 2 + 1:
            raise ResolutionError(f"{c.size} cosine modes do not fit on grid {n}")
        h = np.zeros(n // 2 + 1, dtype=complex)
        h[: c.size] = c
        h[1 : n // 2] *= 0.5
        return cls.from_half_spectrum(h, n)

    # -- spectral views -----------------------------------------------
    @property
    def n(self):
        return self.samples.size

    @property
    def t(self):
        return grid(self.n)

    @cached_property
    def half_spectrum(self):
        n = self.n
        h = np.fft.rfft(self.samples) / n
        h *= _sign(np.arange(h.size))
        h.flags.writeable = False
        return h

    @cached_property
    def coeffs(self):
        """Centered coefficients ``u_hat(n)`` for ``n = -N/2..N/2``.

        The Nyquist amplitude is split evenly between ``+-N/2``.
        """
        h = np.array(self.half_spectrum)
        half = self.n // 2
        h[half] *= 0.5
        out = np.concatenate([np.conj(h[:0:-1]), h])
        out.flags.writeable = False
        return out

    def mode(self, k):
        """Fourier coefficient ``u_hat(k)``."""
        k = int(k)
        half = self.n // 2
        if abs(k) > half:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + half])

    def cosines(self, kmax=None):
        """Real cosine amplitudes ``a_k`` with ``u = sum a_k cos kt + ...``."""
        h = self.half_spectrum
        a = 2.0 * h.real
        a[0] = h[0].real
        a[-1] = h[-1].real
        return a if kmax is None else a[: kmax + 1]

    def sines(self, kmax=None):
        """Real sine amplitudes ``b_k`` (``b_0 = 0``)."""
        b = -2.0 * self.half_spectrum.imag
        b[0] = 0.0
        b[-1] = 0.0
        return b if kmax is None else b[: kmax + 1]

    def apply_multiplier(self, m):
        """Apply the even/odd Fourier multiplier ``m(k)`` given on ``k >= 0``."""
        k = np.arange(self.n // 2 + 1)
        return PeriodicFunction.from_half_spectrum(self.half_spectrum * m(k), self.n)

    def resample(self, n):
        """Spectral interpolation onto an ``n``-point grid.

        Refinement is exact.  Coarsening drops modes ``|k| >= n/2``.
        """
        if n == self.n:
            return self
        h = self.half_spectrum
        out = np.zeros(n // 2 + 1, dtype=complex)
        if n > self.n:
            out[: h.size] = h
            out[self.n // 2] *= 0.5
        else:
            out[: n // 2] = h[: n // 2]
        return PeriodicFunction.from_half_spectrum(out, n)

    def evaluate(self, t, nderiv=0):
        """Evaluate the trigonometric interpolant (or a derivative) at ``t``."""
        t = np.asarray(t, dtype=float)
        h = self.half_spectrum
        k = np.arange(h.size)
        w = np.full(h.size, 2.0)
        w[0] = 1.0
        amp = np.array(h, dtype=complex) * w
        amp[-1] = 0.5 * amp[-1]
        phase = np.exp(1j * np.multiply.outer(t, k))
        return np.real((phase * (1j * k) ** nderiv) @ amp)

    @property
    def mean(self):
        return float(self.half_spectrum[0].real)

    def __add__(self, other):
        if isinstance(other, PeriodicFunction):
            a, b = _match(self, other)
            return PeriodicFunction(a.samples + b.samples)
        return PeriodicFunction(self.samples + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return PeriodicFunction(-self.samples)

    def __mul__(self, c):
        if isinstance(c, PeriodicFunction):
            return product(self, c)
        return PeriodicFunction(self.samples * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return PeriodicFunction(self.samples / float(c))

    # -- serialization ------------------------------------------------
    def to_dict(self):
        return {"n": self.n, "samples": self.samples.tolist()}

    @classmethod
    def from_dict(cls, d):
        samples = d["samples"]
        if int(d["n"]) != len(samples):
            raise ValueError("field n does not match the number of samples")
        return cls(samples)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _match(u, w):
    n = max(u.n, w.n)
    return u.resample(n), w.resample(n)


def synthesize(coeffs, n=None, tol=1e-12):
    """Build a function from centered coefficients ``u_hat(-K..K)``.

    Parameters
    ----------
    coeffs : array_like of complex, length ``2K+1``
    n : int, optional
        Grid size; defaults to the smallest power of two ``>= max(8, 2K+2)``.

    Raises
    ------
    SymmetryError
        If ``u_hat(-k) != conj(u_hat(k))``.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size % 2 != 1:
        raise ValueError("coefficients must have odd length 2K+1")
    kmax = c.size // 2
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(c - np.conj(c[::-1]))) > tol * scale:
        raise SymmetryError("coefficients are not Hermitian: u_hat(-n) != conj(u_hat(n))")
    if n is None:
        n = next_pow2(max(8, 2 * kmax + 2))
    if 2 * kmax >= n:
        raise ResolutionError(f"{kmax} modes do not fit on grid {n}")
    h = np.zeros(n // 2 + 1, dtype=complex)
    h[: kmax + 1] = c[kmax:]
    h[0] = h[0].real
    return PeriodicFunction.from_half_spectrum(h, n)


def hilbert(u):
    """Periodic Hilbert transform, multiplier ``-i sign(n)``."""

    def m(k):
        out = -1j * np.ones(k.size)
        out[0] = 0.0
        # sin(N t / 2) vanishes on the grid
        out[-1] = 0.0
        return out

    return u.apply_multiplier(m)


def conjugate_derivative(u):
    """The first-order nonlocal operator ``u -> C u'``, multiplier ``|n|``."""
    return u.apply_multiplier(lambda k: k.astype(float))


def derivative(u):
    """Ordinary derivative ``u'``."""

    def m(k):
        out = 1j * k.astype(float)
        out[-1] = 0.0
        return out

    return u.apply_multiplier(m)


def product(u, w):
    """Pointwise product, dealiased by zero-padding to twice the grid.

    Grids of different sizes are first resampled to the larger one.  The
    result lives on that grid and keeps modes ``|k| < N/2``.
    """
    u, w = _match(u, w)
    n = u.n
    big = 2 * n
    p = PeriodicFunction(u.resample(big).samples * w.resample(big).samples)
    return p.resample(n)


def integrate(u):
    """``integral_{-pi}^{pi} u dt`` by the trapezoid rule, ``= 2 pi u_hat(0)``."""
    return 2.0 * np.pi * float(np.mean(u.samples))


def e0_form(u):
    """``E_0[u] = integral (C u') u dt = 2 pi sum_n |n| |u_hat(n)|^2``."""
    c = u.coeffs
    half = u.n // 2
    k = np.abs(np.arange(-half, half + 1))
    return 2.0 * np.pi * float(np.sum(k * np.abs(c) ** 2))


def l1_norm(u):
    return 2.0 * np.pi * float(np.mean(np.abs(u.samples)))


def l2_norm(u):
    return float(np.sqrt(2.0 * np.pi * np.mean(u.samples**2)))


def linf_norm(u):
    return float(np.max(np.abs(u.samples)))


def h_half_norm(u):
    """``(sum_n (1 + |n|) |u_hat(n)|^2)^(1/2)``."""
    c = u.coeffs
    half = u.n // 2
    k = np.abs(np.arange(-half, half + 1))
    return float(np.sqrt(np.sum((1.0 + k) * np.abs(c) ** 2)))


def energy_norm(u):
    """``(E_0[u] + ||u||_{L^2}^2)^(1/2)``, equivalent to :func:`h_half_norm`."""
    return float(np.sqrt(e0_form(u) + l2_norm(u) ** 2))


def disk_dirichlet_energy(u):
    """Dirichlet energy of the harmonic extension of ``u`` into the unit disk.

    Uses the closed form ``pi |n| (a_n^2 + b_n^2)`` for the extension
    ``r^n (a_n cos n theta + b_n sin n theta)`` of each trigonometric mode.
    """
    a = u.cosines()
    b = u.sines()
    k = np.arange(a.size)
    return float(np.pi * np.sum(k * (a**2 + b**2)))
