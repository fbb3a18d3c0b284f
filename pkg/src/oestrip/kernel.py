"""Problem data of the matrix Riemann-Hilbert problems.

Connection matrices, the eigenvalue m(b) of the connection matrix on G2',
its continuous logarithm lambda(b), the index, the eigenvector parameter
alpha(k), and the diagonal variable change between U and U-hat.
"""

import cmath
import enum
import math

import numpy as np

from .errors import AtBranchPoint, DenominatorVanishes, IndexMismatch
from .linalg import inverse, mat2

TINY = 1e-14


class MatrixKind(enum.Enum):
    M1 = "M1"
    M2 = "M2"
    Mtilde1 = "Mtilde1"
    Mtilde2 = "Mtilde2"
    N1 = "N1"
    N2 = "N2"


class Case(str, enum.Enum):
    ANTISYM = "antisym"
    SYM = "sym"


def _denominator(xi, eta):
    d = np.asarray(eta - 1j * np.asarray(xi, complex))
    scale = abs(eta) + np.abs(xi)
    if np.any(np.abs(d) <= TINY * scale):
        raise DenominatorVanishes("eta - i xi vanishes: k is at +-k'")
    return d


def connection_matrix(kind, k, xi_value, params):
    """Connection matrix of the given kind at k, with the caller's branch of xi."""
    kind = MatrixKind(kind)
    k = np.asarray(k, complex)
    xi = np.asarray(xi_value, complex)
    eta, k0 = params.eta, params.k0
    d = _denominator(xi, eta)          # eta - i xi
    m = (eta + 1j * xi) / d            # equals (i xi + eta)/(i xi - eta) up to sign: see below
    if kind is MatrixKind.M1:
        return mat2(1.0, 2j * xi / d, 0.0, m)
    if kind is MatrixKind.M2:
        return mat2(m, 0.0, 2j * xi / d, 1.0)
    mt = -m                            # (i xi + eta)/(i xi - eta)
    if kind is MatrixKind.Mtilde1:
        return mat2(1.0, -2j * (k0 - k) / d, 0.0, mt)
    if kind is MatrixKind.Mtilde2:
        return mat2(mt, 0.0, -2j * (k0 + k) / d, 1.0)
    if kind is MatrixKind.N1:
        return mat2(1.0, -2 * eta / d, 0.0, mt)
    return mat2(mt, 0.0, -2 * eta / d, 1.0)


def m_from_xi(xi, eta):
    """(i xi + eta) / (i xi - eta)."""
    xi = np.asarray(xi, complex)
    den = 1j * xi - eta
    if np.any(np.abs(den) <= TINY * (abs(eta) + np.abs(xi))):
        raise DenominatorVanishes("i xi - eta vanishes at b = k' - k0")
    return (1j * xi + eta) / den


def m_of_b(b, params, tracker, path=None):
    """m(b) with xi continued to k0 + b along ``path`` (straight from 0 by default)."""
    xi = tracker.xi(params.k0 + complex(b), path)
    return complex(m_from_xi(xi, params.eta))


def lambda_of_b(mesh):
    """Continuous branch of log m / (2 pi i) on the mesh nodes."""
    return np.array(mesh.lam)


def _arg_change(f):
    """Continuous change of arg f along a node chain (no step may exceed pi)."""
    steps = np.angle(f[1:] / f[:-1])
    return float(np.sum(steps))


def index(params, mesh, tol=1e-8):
    """Continuous change of log m from b = 0 to b = i infinity, via arg f1 - arg f2.

    f1 = i xi + eta and f2 = i xi - eta have equal moduli at both ends, so only
    arguments matter.  Beyond b_1 = iT the remaining change is the analytic
    tail to the limit arg f = pi/2 (xi ~ -i b for large b on the principal sheet).
    """
    eta = params.eta
    xi = np.asarray(mesh.xi)
    f1 = 1j * xi + eta
    f2 = 1j * xi - eta
    tail1 = math.pi / 2 - cmath.phase(f1[0])
    tail2 = math.pi / 2 - cmath.phase(f2[0])
    # integrate from 0 up to iT: reverse the mesh direction
    d1 = -_arg_change(f1) + tail1
    d2 = -_arg_change(f2) + tail2
    # |m| -> 1 at i infinity, so the modulus part is -log|m(0)|
    idx = complex(-math.log(abs(f1[-1] / f2[-1])), d1 - d2)
    if abs(idx - 1j * math.pi) > tol:
        raise IndexMismatch(f"index {idx} differs from i*pi")
    return idx


def alpha_of_k(k, params, sign=-1, case=Case.ANTISYM):
    """Off-diagonal eigenvector parameter of the connection matrix on G2'."""
    if Case(case) is Case.SYM:
        return np.ones_like(np.asarray(k, complex)) if np.ndim(k) else 1.0 + 0j
    if params.eta == 0:
        raise DenominatorVanishes("alpha undefined for eta = 0")
    return sign * (-1j) * (params.k0 + np.asarray(k, complex)) / params.eta


def eigvec_matrix(k, params, sign=-1, case=Case.ANTISYM):
    """H(k) = [[1, 0], [alpha(k), 1]]; H diag(m, 1) H^{-1} is the connection matrix on G2'."""
    al = alpha_of_k(k, params, sign, case)
    return mat2(1.0, 0.0, al, 1.0)


def eig_reconstruct(k, xi, params, sign=-1, case=Case.ANTISYM):
    m = m_from_xi(xi, params.eta)
    H = eigvec_matrix(k, params, sign, case)
    return H @ mat2(m, 0.0, 0.0, 1.0) @ inverse(H)


def _diag_factors(k, params):
    k = np.asarray(k, complex)
    k0 = params.k0
    if np.any(np.abs(k - k0) <= TINY * abs(k0)) or np.any(np.abs(k + k0) <= TINY * abs(k0)):
        raise AtBranchPoint("variable change is singular at k = +-k0")
    ph = cmath.exp(1j * math.pi / 4)
    return ph / np.sqrt(k0 - k), ph / np.sqrt(k0 + k)


def variable_change(direction, U, k, params):
    """forward: U-hat = U diag(e^{i pi/4}(k0-k)^{-1/2}, e^{i pi/4}(k0+k)^{-1/2}); inverse undoes it.

    Principal roots: continuous on the real segment (-k0, k0) and its
    neighbourhood, which is where the pipeline evaluates them.
    """
    d1, d2 = _diag_factors(k, params)
    U = np.asarray(U, complex)
    if direction == "forward":
        f1, f2 = d1, d2
    elif direction == "inverse":
        f1, f2 = 1.0 / d1, 1.0 / d2
    else:
        raise ValueError(f"unknown direction {direction!r}")
    out = np.array(U, copy=True)
    out[..., :, 0] = U[..., :, 0] * np.asarray(f1)[..., None]
    out[..., :, 1] = U[..., :, 1] * np.asarray(f2)[..., None]
    return out
