"""Hankel function H0^(1) of complex argument.

Ascending series for J0 and Y0 when |z| <= 12, Hankel's asymptotic expansion
beyond.  In the left half-plane the expansion is applied to -z and mapped
back by analytic continuation, which avoids its Stokes-line breakdown near
arg z = -pi.  Both branches are exposed so the overlap band can be checked.
"""

import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.5772156649015329
SERIES_RADIUS = 12.0
_NTERMS = 80

# (z/2)^{2m} coefficients: (-1)^m / (m!)^2 and harmonic numbers H_m
_C = np.array([(-1) ** m / math.factorial(m) ** 2 for m in range(_NTERMS)], dtype=float)
_H = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, _NTERMS))])


def _check(z):
    z = np.asarray(z, complex)
    if np.any(z == 0):
        raise DomainError("H0(1) is singular at z = 0")
    if np.any((z.real <= 0) & (z.imag == 0)):
        raise DomainError("argument on the branch cut arg z = pi")
    return z


def j0_y0_series(z):
    """J0(z), Y0(z) from the ascending series."""
    z = _check(z)
    w = (0.5 * z) ** 2
    j = np.zeros(z.shape, complex)
    s = np.zeros(z.shape, complex)
    # Horner in w over the truncated series
    for m in range(_NTERMS - 1, -1, -1):
        j = j * w + _C[m]
        s = s * w + _C[m] * _H[m]
    y = (2.0 / np.pi) * ((np.log(0.5 * z) + EULER_GAMMA) * j - s)
    return j, y


def hankel0_series(z):
    j, y = j0_y0_series(z)
    return j + 1j * y


def _expansion(z):
    """Hankel's expansion, summed up to its smallest term (accurate for Re z >= 0)."""
    out = np.empty(z.shape, complex)
    for idx, zz in np.ndenumerate(z):
        # a_k(0) = prod_{j=1..k} (-(2j-1)^2) / (k! 8^k)
        term = 1.0 + 0j
        total = term
        prev = abs(term)
        k = 1
        while k < 60:
            term = term * (-(2 * k - 1) ** 2) / (k * 8.0) * (1j / zz)
            if abs(term) > prev:
                break
            total += term
            prev = abs(term)
            if prev < 1e-17 * abs(total):
                break
            k += 1
        out[idx] = np.sqrt(2.0 / (np.pi * zz)) * np.exp(1j * (zz - np.pi / 4)) * total
    return out


def hankel0_first(z):
    """H0^(1)(z) = J0(z) + i Y0(z) for z != 0, |arg z| < pi.

    Relative accuracy is about 1e-11 for |z| > 12 and for |z| <= 12 with
    arg z <= 0.3.  Closer to the positive imaginary axis the series cancels
    against the exponentially small result and loses digits.
    """
    z = _check(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape, complex)
    near = np.abs(z) <= SERIES_RADIUS
    if near.any():
        out[near] = hankel0_series(z[near])
    if (~near).any():
        out[~near] = hankel0_asymptotic(z[~near])
    return out[0] if scalar else out


def hankel0_asymptotic(z):
    """Large-|z| evaluation: the expansion directly for Re z >= 0, continued from -z otherwise."""
    z = _check(z)
    out = np.empty(z.shape, complex)
    right = z.real >= 0
    if right.any():
        out[right] = _expansion(z[right])
    if (~right).any():
        zl = z[~right]
        w = -zl
        # Y0(w e^{+-i pi}) = Y0(w) +- 2i J0(w); H2(w) = conj H1(conj w)
        h1 = _expansion(w)
        h2 = np.conj(_expansion(np.conj(w)))
        out[~right] = np.where(zl.imag < 0, 2 * h1 + h2, -h2)
    return out
