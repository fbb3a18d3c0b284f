"""Ordered exponentials X' = K(b, k) X along contours in the b-plane.

The coefficient is K(b, k) = r(b)/(k - (k0 + b)) - r*(b)/(k + (k0 + b)) with
r = P diag(xi1, 0) P^{-1}, P = [[1, p2], [p1, 1]].  Between mesh nodes p1, p2
are interpolated linearly in b (complex-linear, so also off the contour) and
xi1 = -lambda is evaluated exactly.
"""

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .contours import lambda_continued
from .errors import DegenerateP, DomainError, PoleTooClose, StepUnderflow
from .linalg import mat2

EPS_DEG = 1e-10
BASE_SUBSTEPS = 4
MAX_SUBSTEPS = 4096
ARC_SUBSTEPS = 8
EPS_SHORE_REL = 0.05
RHO_POLE_REL = 1e-6


@dataclass(frozen=True)
class Piece:
    """Straight segment (za -> zb) or circular arc, tagged with the mesh segment used for interpolation."""
    seg: int
    za: complex = 0j
    zb: complex = 0j
    center: complex = None
    radius: float = 0.0
    th0: float = 0.0
    th1: float = 0.0
    nsub: int = None

    @property
    def is_arc(self):
        return self.center is not None

    @classmethod
    def arc(cls, seg, center, radius, th0, th1):
        c = complex(center)
        return cls(seg=seg, za=c + radius * cmath.exp(1j * th0), zb=c + radius * cmath.exp(1j * th1),
                   center=c, radius=float(radius), th0=float(th0), th1=float(th1))

    def point(self, s):
        if self.is_arc:
            return self.center + self.radius * cmath.exp(1j * (self.th0 + s * (self.th1 - self.th0)))
        return self.za + s * (self.zb - self.za)

    def velocity(self, s):
        if self.is_arc:
            dth = self.th1 - self.th0
            return 1j * dth * self.radius * cmath.exp(1j * (self.th0 + s * dth))
        return self.zb - self.za

    @property
    def length(self):
        if self.is_arc:
            return abs(self.th1 - self.th0) * self.radius
        return abs(self.zb - self.za)

    def reversed(self):
        if self.is_arc:
            return Piece.arc(self.seg, self.center, self.radius, self.th1, self.th0)
        return Piece(seg=self.seg, za=self.zb, zb=self.za, nsub=self.nsub)

    def distance_to(self, p):
        """Distance from points p (array) to the piece."""
        p = np.asarray(p, complex)
        if self.is_arc:
            # sample densely; arcs are short and only need a conservative bound
            s = np.linspace(0.0, 1.0, 33)
            pts = np.array([self.point(x) for x in s])
            return np.min(np.abs(p[..., None] - pts), axis=-1)
        d = self.zb - self.za
        if d == 0:
            return np.abs(p - self.za)
        t = np.clip(((p - self.za) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return np.abs(self.za + t * d - p)


def reverse_contour(pieces):
    return [p.reversed() for p in reversed(pieces)]


def mesh_contour(mesh, start=0, stop=None):
    """Pieces along the mesh from node ``start`` to node ``stop`` (inclusive indices)."""
    stop = mesh.N - 1 if stop is None else stop
    nodes = mesh.nodes
    return [Piece(seg=j, za=complex(nodes[j]), zb=complex(nodes[j + 1])) for j in range(start, stop)]


def contour_to(mesh, b_stop):
    """Pieces along the mesh from b_1 to the point ``b_stop`` on it."""
    j = int(mesh.locate(b_stop)[0])
    pieces = mesh_contour(mesh, 0, j)
    if complex(b_stop) != complex(mesh.nodes[j]):
        pieces.append(Piece(seg=j, za=complex(mesh.nodes[j]), zb=complex(b_stop)))
    return pieces


def graded_segment(seg, za, zb, pole, base_ratio=2.0):
    """Split za -> zb into pieces shrinking geometrically towards whichever end lies near ``pole``."""
    da, db = abs(za - pole), abs(zb - pole)
    L = abs(zb - za)
    near_end = db < da
    dmin = min(da, db)
    if dmin <= 0 or L <= 2 * dmin:
        return [Piece(seg=seg, za=za, zb=zb)]
    # distances from the near end, geometric from dmin up to L
    marks = [0.0]
    x = dmin
    while x < L:
        marks.append(x)
        x *= base_ratio
    marks.append(L)
    unit = (za - zb) / L if near_end else (zb - za) / L
    anchor = zb if near_end else za
    pts = [anchor + unit * mk for mk in marks]
    if near_end:
        pts = pts[::-1]
    return [Piece(seg=seg, za=pts[i], zb=pts[i + 1]) for i in range(len(pts) - 1)]


class OECoefficient:
    """K(b, k) built from a coefficient table and its mesh."""

    def __init__(self, table, eps_deg=EPS_DEG):
        self.table = table
        self.mesh = table.mesh
        self.case = table.case
        self.k0 = complex(self.mesh.params.k0)
        self.eta = complex(self.mesh.params.eta)
        self.eps_deg = eps_deg
        self._nodes = [complex(z) for z in self.mesh.nodes]
        self._xi = [complex(z) for z in self.mesh.xi]
        self._m = [complex(z) for z in self.mesh.m]
        self._lam = [complex(z) for z in self.mesh.lam]
        self._p1 = [complex(z) for z in table.p1]
        self._p2 = [complex(z) for z in table.p2]

    def xi1_at(self, b, j):
        """Exact xi1 = -lambda at b, continued from node j."""
        if b == self._nodes[j]:
            return -self._lam[j]
        if j + 1 < len(self._nodes) and b == self._nodes[j + 1]:
            return -self._lam[j + 1]
        return -lambda_continued(b, self.k0, self.eta, self._xi[j], self._m[j], self._lam[j])

    def data(self, b, j):
        """(p1, p2, xi1) at b using segment j."""
        za, zb = self._nodes[j], self._nodes[j + 1]
        w = (b - za) / (zb - za)
        p1 = self._p1[j] + w * (self._p1[j + 1] - self._p1[j])
        p2 = self._p2[j] + w * (self._p2[j + 1] - self._p2[j])
        return p1, p2, self.xi1_at(b, j)

    def _c(self, p1, p2, xi1):
        den = 1.0 - p1 * p2
        if abs(den) <= self.eps_deg:
            raise DegenerateP(f"|p1 p2 - 1| = {abs(den):.3e}")
        return xi1 / den

    def r(self, b, j):
        p1, p2, xi1 = self.data(b, j)
        c = self._c(p1, p2, xi1)
        return mat2(c, -c * p2, c * p1, -c * p1 * p2)

    def entries(self, b, j, k):
        """Entries (K11, K12, K21, K22) of K(b, k), vectorised over k."""
        p1, p2, xi1 = self.data(b, j)
        c = self._c(p1, p2, xi1)
        kb = self.k0 + b
        u = 1.0 / (k - kb)
        v = 1.0 / (k + kb)
        pp = p1 * p2
        return c * (u + pp * v), -c * (p2 * u + p1 * v), c * (p1 * u + p2 * v), -c * (pp * u + v)

    def K(self, b, j, k):
        return mat2(*self.entries(b, j, k))

    def trace(self, b, j, k):
        """tr K = xi1 [1/(k - (k0+b)) - 1/(k + (k0+b))]."""
        xi1 = self.xi1_at(b, j)
        kb = self.k0 + b
        return xi1 * (1.0 / (k - kb) - 1.0 / (k + kb))


def plan_substeps(pieces, k, k0, base=BASE_SUBSTEPS, rho_pole=None, max_sub=MAX_SUBSTEPS):
    """Fixed substep counts: ``base`` per piece, multiplied when a pole b = +-k - k0 is closer than the piece length."""
    k = np.atleast_1d(np.asarray(k, complex))
    rho_pole = RHO_POLE_REL * abs(k0) if rho_pole is None else rho_pole
    poles = np.concatenate([k - k0, -k - k0])
    out = []
    for p in pieces:
        if p.nsub is not None:
            out.append(p)
            continue
        L = p.length
        if L == 0:
            out.append(replace(p, nsub=0))
            continue
        d = float(np.min(p.distance_to(poles)))
        if d < rho_pole:
            raise PoleTooClose(f"contour passes within {d:.3e} of a pole of K")
        n = base * (ARC_SUBSTEPS // 4 if p.is_arc else 1)
        if d < L:
            n *= 2 ** int(math.ceil(math.log2(L / d)))
        if n > max_sub:
            raise StepUnderflow(f"piece of length {L:.3e} needs {n} substeps (pole at {d:.3e})")
        out.append(replace(p, nsub=n))
    return out


def _rk4_pieces(pieces, coeff, k):
    k = np.asarray(k, complex)
    one = np.ones(k.shape, complex)
    x11, x12, x21, x22 = one.copy(), np.zeros_like(one), np.zeros_like(one), one.copy()

    def f(p, s, y11, y12, y21, y22):
        b = p.point(s)
        dz = p.velocity(s)
        a11, a12, a21, a22 = coeff.entries(b, p.seg, k)
        a11, a12, a21, a22 = a11 * dz, a12 * dz, a21 * dz, a22 * dz
        return (a11 * y11 + a12 * y21, a11 * y12 + a12 * y22,
                a21 * y11 + a22 * y21, a21 * y12 + a22 * y22)

    for p in pieces:
        n = p.nsub
        if not n:
            continue
        h = 1.0 / n
        for i in range(n):
            s = i * h
            X = (x11, x12, x21, x22)
            k1 = f(p, s, *X)
            k2 = f(p, s + h / 2, *(x + h / 2 * d for x, d in zip(X, k1)))
            k3 = f(p, s + h / 2, *(x + h / 2 * d for x, d in zip(X, k2)))
            k4 = f(p, s + h, *(x + h * d for x, d in zip(X, k3)))
            x11, x12, x21, x22 = (x + h / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
                                  for x, d1, d2, d3, d4 in zip(X, k1, k2, k3, k4))
    return mat2(x11, x12, x21, x22)


def oe_evaluate(pieces, coeff, k, base=BASE_SUBSTEPS, rho_pole=None):
    """OE along ``pieces`` at wavenumber(s) k, from the identity."""
    scalar = np.ndim(k) == 0
    kk = np.atleast_1d(np.asarray(k, complex))
    planned = plan_substeps(pieces, kk, coeff.k0, base, rho_pole)
    X = _rk4_pieces(planned, coeff, kk)
    return X[0] if scalar else X


def pi_matrix(k, a):
    k = np.asarray(k, complex)
    return mat2(np.exp(-1j * a * k), 0.0, 0.0, np.exp(1j * a * k))


def solve_at(k, coeff, start=0, base=BASE_SUBSTEPS, rho_pole=None):
    """RH solution U-hat(k) = OE_gamma[K db] Pi(k), integrating from mesh node ``start`` to 0."""
    pieces = mesh_contour(coeff.mesh, start)
    X = oe_evaluate(pieces, coeff, k, base, rho_pole)
    return X @ pi_matrix(k, coeff.mesh.params.a)


def solve_partial(k, coeff, b_stop, base=BASE_SUBSTEPS):
    """OE from b_1 down to the point ``b_stop`` of gamma, times Pi(k).

    This is the RH solution for the deformation parameter b_stop; it tends
    to Pi(k) as b_stop moves up towards i infinity.
    """
    pieces = contour_to(coeff.mesh, b_stop)
    X = oe_evaluate(pieces, coeff, k, base)
    return X @ pi_matrix(k, coeff.mesh.params.a)


@dataclass(frozen=True)
class ShoreContours:
    plus: list
    minus: list
    eps: float
    beta: complex
    seg: int


def shore_contours(mesh, k, eps=None, eps_rel=EPS_SHORE_REL):
    """Contours from b_1 to 0 passing beta = k - k0 on either side.

    ``plus`` keeps beta on its left (it passes on the right-hand side of the
    direction of travel), ``minus`` on its right, so plus followed by the
    reversal of ``minus`` is a counter-clockwise loop.  The detour radius is
    capped at 0.45 times the shortest neighbouring segment, since r(b) on the
    detour is extrapolated from the segment carrying beta.  Nodes inside the
    detour are skipped.
    """
    k0 = complex(mesh.params.k0)
    beta = complex(k) - k0
    nodes = [complex(z) for z in mesh.nodes]
    j = int(mesh.locate(beta)[0])
    za, zb = nodes[j], nodes[j + 1]
    dseg = zb - za
    t = ((beta - za) * dseg.conjugate()).real / abs(dseg) ** 2
    off = abs(za + t * dseg - beta)
    if off > 1e-9 * max(1.0, abs(beta)) or not 0.0 < t < 1.0:
        raise DomainError(f"k = {k} is not interior to a segment of the cut")
    lengths = [abs(nodes[i + 1] - nodes[i]) for i in (j - 1, j, j + 1) if 0 <= i < len(nodes) - 1]
    if eps is None:
        eps = eps_rel * abs(k0)
    eps = min(eps, 0.45 * min(lengths))
    if j == 0:
        eps = min(eps, 0.45 * abs(beta - za))
    if j + 1 == len(nodes) - 1:
        eps = min(eps, 0.45 * abs(zb - beta))
    d = dseg / abs(dseg)
    up = beta - eps * d
    down = beta + eps * d
    i_up = j if abs(beta - za) > eps else j - 1
    i_down = j + 1 if abs(zb - beta) > eps else j + 2
    th0 = cmath.phase(-d)
    head = mesh_contour(mesh, 0, i_up) + graded_segment(i_up, nodes[i_up], up, beta)
    tail = graded_segment(i_down - 1, down, nodes[i_down], beta) + mesh_contour(mesh, i_down)
    plus = head + [Piece.arc(j, beta, eps, th0, th0 + math.pi)] + tail
    minus = head + [Piece.arc(j, beta, eps, th0, th0 - math.pi)] + tail
    return ShoreContours(plus, minus, eps, beta, j)


def shore_loops(k, coeff, eps=None, base=BASE_SUBSTEPS, eps_rel=EPS_SHORE_REL):
    """(OE along plus, OE along minus) at k, without the Pi(k) factor."""
    sc = shore_contours(coeff.mesh, k, eps, eps_rel)
    return oe_evaluate(sc.plus, coeff, k, base), oe_evaluate(sc.minus, coeff, k, base)


def shore_values(k, coeff, eps=None, base=BASE_SUBSTEPS, eps_rel=EPS_SHORE_REL):
    """(U_R, U_L) at k on the cut G2'.

    U_R = OE_{gamma+} Pi(k) and U_L = OE_{gamma-}^{-1} Pi(k), where gamma-
    runs from 0 back to b_1; its inverse is the OE along ``minus``.
    """
    Pi = pi_matrix(k, coeff.mesh.params.a)
    plus, minus = shore_loops(k, coeff, eps, base, eps_rel)
    return plus @ Pi, minus @ Pi


def concat_property_check(h1, h2, coeff, k, base=BASE_SUBSTEPS):
    """||OE_h - OE_h2 OE_h1||_inf for h = h1 followed by h2."""
    whole = oe_evaluate(list(h1) + list(h2), coeff, k, base)
    parts = oe_evaluate(list(h2), coeff, k, base) @ oe_evaluate(list(h1), coeff, k, base)
    return float(np.max(np.abs(whole - parts).sum(axis=-1)))


def trace_integral(pieces, coeff, k, nodes=16):
    """Integral of tr K along the pieces by Gauss-Legendre per piece (for the Liouville check)."""
    g, w = np.polynomial.legendre.leggauss(nodes)
    s_all = 0.5 * (g + 1.0)
    total = 0j
    for p in pieces:
        if p.length == 0:
            continue
        for s, wi in zip(s_all, w):
            total += 0.5 * wi * coeff.trace(p.point(s), p.seg, k) * p.velocity(s)
    return total
