"""2x2 complex matrix helpers.

Matrices are numpy arrays whose last two axes have shape (2, 2); leading axes
are batch axes.  Every function returns a new array and never mutates its
input.
"""

import numpy as np

from .errors import SingularMatrix

EPS_SING = 1e-13


def mat2(a11, a12, a21, a22):
    """Stack four (broadcastable) entries into a batch of 2x2 matrices."""
    a11, a12, a21, a22 = np.broadcast_arrays(*(np.asarray(v, complex) for v in (a11, a12, a21, a22)))
    out = np.empty(a11.shape + (2, 2), complex)
    out[..., 0, 0] = a11
    out[..., 0, 1] = a12
    out[..., 1, 0] = a21
    out[..., 1, 1] = a22
    return out


def identity(shape=()):
    out = np.zeros(tuple(shape) + (2, 2), complex)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    return out


def star(m):
    """Swap the rows, then the columns."""
    return np.array(np.asarray(m)[..., ::-1, ::-1], dtype=complex)


def determinant(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def norm_inf(m):
    """Maximum absolute row sum."""
    return np.abs(np.asarray(m)).sum(axis=-1).max(axis=-1)


def inverse(m, eps=EPS_SING):
    m = np.asarray(m, complex)
    det = determinant(m)
    scale = norm_inf(m) ** 2
    bad = ~(np.abs(det) > eps * scale)
    if np.any(bad):
        raise SingularMatrix(f"|det| = {np.min(np.abs(det)):.3e} below {eps:g} relative to ||m||^2")
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    out[..., 1, 1] = m[..., 0, 0]
    return out / det[..., None, None]


def diag2(d1, d2):
    return mat2(d1, 0.0, 0.0, d2)
