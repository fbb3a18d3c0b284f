"""Riccati marching for the residue r(b) of the ODE coefficient.

For every target node b_j with k_j = k0 + b_j, the pair (q1, q2) solves two
Riccati equations in beta from b_1 down to b_j, starting at
(alpha(k_j) e^{2 i a k_j}, 0); the value reached at b_j is p(b_j).  All
targets are advanced together: the step b_{j-1} -> b_j is a single Euler
step for target j (it only needs left-end data) and an RK4 step for every
target beyond j.  This produces exactly the values of restarting each inner
solve from b_1.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartOverflow, DegenerateP, NumericalFailure
from .kernel import Case, MatrixKind, alpha_of_k, connection_matrix
from .linalg import inverse, mat2
from .ode1 import EPS_DEG, EPS_SHORE_REL, OECoefficient, shore_loops, shore_values

log = logging.getLogger(__name__)

CHART_SWITCH = 10.0


def start_value(k, params, sign=-1, case=Case.ANTISYM):
    """q1(b_1; k) = alpha(k) e^{2 i a k}."""
    k = np.asarray(k, complex)
    return alpha_of_k(k, params, sign, case) * np.exp(2j * params.a * k)


def riccati_coefficients(p1, p2, xi1, beta, k, k0, eps_deg=EPS_DEG):
    """(A, B, C) per component, q' = A + B q + C q^2."""
    den = 1.0 - p1 * p2
    if np.any(np.abs(den) <= eps_deg):
        raise DegenerateP(f"|p1 p2 - 1| = {np.min(np.abs(den)):.3e} at beta = {beta}")
    c = xi1 / den
    u = 1.0 / (k - (k0 + beta))
    v = 1.0 / (k + (k0 + beta))
    pp = p1 * p2
    R11 = c * (u + pp * v)
    R12 = -c * (p2 * u + p1 * v)
    R21 = c * (p1 * u + p2 * v)
    R22 = -c * (pp * u + v)
    return (R21, R22 - R11, -R12), (R12, R11 - R22, -R21)


def riccati_rhs(beta, q1, q2, p1, p2, xi1, k, k0, inverted=(False, False), eps_deg=EPS_DEG):
    """Derivatives of (q1, q2) in the active charts; an inverted chart carries w = 1/q."""
    (A1, B1, C1), (A2, B2, C2) = riccati_coefficients(p1, p2, xi1, beta, k, k0, eps_deg)
    d1 = np.where(inverted[0], -(A1 * q1 * q1 + B1 * q1 + C1), A1 + B1 * q1 + C1 * q1 * q1)
    d2 = np.where(inverted[1], -(A2 * q2 * q2 + B2 * q2 + C2), A2 + B2 * q2 + C2 * q2 * q2)
    return d1, d2


def _to_direct(y, inv):
    if np.any(inv & (y == 0)):
        raise ChartOverflow("Riccati solution sits at infinity")
    with np.errstate(divide="ignore"):
        return np.where(inv, 1.0 / np.where(inv, y, 1.0), y)


def _switch(y, inv):
    flip = np.abs(y) > CHART_SWITCH
    if not np.any(flip):
        return y, inv
    if not np.all(np.isfinite(y[flip])):
        raise ChartOverflow("Riccati state overflowed both charts")
    y = np.where(flip, 1.0 / np.where(flip, y, 1.0), y)
    return y, inv ^ flip


@dataclass(frozen=True)
class CoefficientTable:
    case: Case
    mesh: object
    p1: np.ndarray
    p2: np.ndarray
    q_start: np.ndarray
    q_end: np.ndarray
    alpha_sign: int

    @property
    def xi1(self):
        return self.mesh.xi1

    def r(self, j):
        return r_of_b(self, j)

    def dump_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "re_b", "im_b", "re_p1", "im_p1", "re_p2", "im_p2"])
            for j, (b, p1, p2) in enumerate(zip(self.mesh.nodes, self.p1, self.p2)):
                w.writerow([j, repr(float(b.real)), repr(float(b.imag)), repr(float(p1.real)), repr(float(p1.imag)),
                            repr(float(p2.real)), repr(float(p2.imag))])


def r_of_b(table, j, eps_deg=EPS_DEG):
    """r(b_j) = P diag(xi1, 0) P^{-1}."""
    p1, p2 = complex(table.p1[j]), complex(table.p2[j])
    xi1 = complex(table.mesh.xi1[j])
    P = mat2(1.0, p2, p1, 1.0)
    if abs(1.0 - p1 * p2) <= eps_deg:
        raise DegenerateP(f"|p1 p2 - 1| <= {eps_deg:g} at node {j}")
    return P @ mat2(xi1, 0.0, 0.0, 0.0) @ inverse(P)


def march(mesh, case=Case.ANTISYM, alpha_sign=-1, eps_deg=EPS_DEG):
    """Fill p1, p2 on every node of the mesh."""
    case = Case(case)
    params = mesh.params
    k0 = params.k0
    b = np.asarray(mesh.nodes)
    N = len(b)
    xi1 = np.asarray(mesh.xi1)
    ks = k0 + b

    q_start = np.asarray(start_value(ks, params, alpha_sign, case), complex) * np.ones(N)
    y1 = q_start.copy()
    y2 = np.zeros(N, complex)
    inv1 = np.zeros(N, bool)
    inv2 = np.zeros(N, bool)
    y1, inv1 = _switch(y1, inv1)

    p1 = np.zeros(N, complex)
    p2 = np.zeros(N, complex)
    q_end = np.zeros((N, 2), complex)
    q_end[0] = (0.0, 0.0)

    def f(beta, pa, pb, x1, s1, s2, i1, i2, k):
        return riccati_rhs(beta, s1, s2, pa, pb, x1, k, k0, (i1, i2), eps_deg)

    for j in range(1, N):
        h = b[j] - b[j - 1]
        # closing Euler step for target j, left-end data only
        sl = slice(j, j + 1)
        d1, d2 = f(b[j - 1], p1[j - 1], p2[j - 1], xi1[j - 1], y1[sl], y2[sl], inv1[sl], inv2[sl], ks[sl])
        e1 = _to_direct(y1[sl] + h * d1, inv1[sl])[0]
        e2 = _to_direct(y2[sl] + h * d2, inv2[sl])[0]
        if not (np.isfinite(e1) and np.isfinite(e2)):
            raise ChartOverflow(f"march produced a non-finite value at node {j}")
        q_end[j] = (e1, e2)
        p1[j], p2[j] = q_end[j]
        if abs(1.0 - p1[j] * p2[j]) <= eps_deg:
            raise DegenerateP(f"|p1 p2 - 1| <= {eps_deg:g} at node {j}")
        if j + 1 >= N:
            break
        t = slice(j + 1, N)
        pm1 = 0.5 * (p1[j - 1] + p1[j])
        pm2 = 0.5 * (p2[j - 1] + p2[j])
        bm = b[j - 1] + 0.5 * h
        xm = mesh.xi1_at(bm, j - 1)
        s1, s2, i1, i2, kk = y1[t], y2[t], inv1[t], inv2[t], ks[t]
        a = f(b[j - 1], p1[j - 1], p2[j - 1], xi1[j - 1], s1, s2, i1, i2, kk)
        c = f(bm, pm1, pm2, xm, s1 + h / 2 * a[0], s2 + h / 2 * a[1], i1, i2, kk)
        d = f(bm, pm1, pm2, xm, s1 + h / 2 * c[0], s2 + h / 2 * c[1], i1, i2, kk)
        e = f(b[j], p1[j], p2[j], xi1[j], s1 + h * d[0], s2 + h * d[1], i1, i2, kk)
        n1 = s1 + h / 6 * (a[0] + 2 * c[0] + 2 * d[0] + e[0])
        n2 = s2 + h / 6 * (a[1] + 2 * c[1] + 2 * d[1] + e[1])
        if not (np.all(np.isfinite(n1)) and np.all(np.isfinite(n2))):
            raise ChartOverflow(f"inner Riccati solve overflowed while stepping to node {j}")
        y1[t], inv1[t] = _switch(n1, i1)
        y2[t], inv2[t] = _switch(n2, i2)

    for arr in (p1, p2, q_start, q_end):
        arr.setflags(write=False)
    return CoefficientTable(case=case, mesh=mesh, p1=p1, p2=p2, q_start=q_start,
                            q_end=q_end, alpha_sign=int(alpha_sign))



def target_matrix(case, k, xi, params):
    kind = MatrixKind.N2 if Case(case) is Case.SYM else MatrixKind.Mtilde2
    return connection_matrix(kind, k, xi, params)


def oe_residual(table, k, coeff=None, eps=None, form="conjugated", eps_rel=EPS_SHORE_REL):
    """OE-equation residual at k on the cut G2'.

    ``conjugated``: ||U_L^{-1} U_R - M||_inf, i.e. Pi^{-1} OE_loop Pi against M.
    ``direct``: ||OE_loop - Pi M Pi^{-1}||_inf, which avoids the e^{2a Im k}
    amplification of the conjugation high up the cut.
    """
    coeff = coeff or OECoefficient(table)
    mesh = table.mesh
    beta = complex(k) - mesh.params.k0
    j = int(mesh.locate(beta)[0])
    xi = complex(mesh.xi_near(beta, j))
    M = target_matrix(table.case, k, xi, mesh.params)
    if form == "direct":
        plus, minus = shore_loops(k, coeff, eps, eps_rel=eps_rel)
        # Pi M Pi^{-1}: only the lower-left entry changes, by e^{2iak}
        target = M.copy()
        target[1, 0] = M[1, 0] * np.exp(2j * mesh.params.a * complex(k))
        return float(np.max(np.abs(plus @ inverse(minus) - target).sum(axis=-1)))
    if form != "conjugated":
        raise ValueError(f"unknown residual form {form!r}")
    UR, UL = shore_values(k, coeff, eps, eps_rel=eps_rel)
    return float(np.max(np.abs(inverse(UL) @ UR - M).sum(axis=-1)))


def residual_points(mesh, n=10, t_hi=None, t_lo=None):
    """n points k = k0 + beta on the cut, |beta| geometric in [t_lo, t_hi], strictly inside segments."""
    a = mesh.params.a
    t_hi = 0.5 / a if t_hi is None else t_hi
    t_lo = 2e-3 / a if t_lo is None else t_lo
    out = []
    nodes = np.asarray(mesh.nodes)
    for t in np.geomspace(t_hi, t_lo, n):
        # walk the polyline to the first point with |b| = t below the top
        mags = np.abs(nodes)
        for j in range(mesh.N - 1):
            if mags[j] >= t > mags[j + 1]:
                s = (mags[j] - t) / (mags[j] - mags[j + 1])
                beta = nodes[j] + s * (nodes[j + 1] - nodes[j])
                break
        else:
            raise ValueError(f"no cut point with |b| = {t}")
        if s <= 1e-6 or s >= 1 - 1e-6:
            beta = nodes[j] + 0.5 * (nodes[j + 1] - nodes[j])
        out.append(mesh.params.k0 + beta)
    return np.array(out)


def median_residual(table, points=None, form="conjugated", eps_rel=EPS_SHORE_REL):
    coeff = OECoefficient(table)
    pts = residual_points(table.mesh) if points is None else points
    return float(np.median([oe_residual(table, k, coeff, form=form, eps_rel=eps_rel) for k in pts]))


def validate_alpha_sign(mesh, case=Case.ANTISYM, npoints=3, eps_deg=EPS_DEG):
    """March with both signs and keep the one with the smaller residual.

    Returns (sign, {sign: residual}).  The symmetric parameter has no sign.
    """
    if Case(case) is Case.SYM:
        return 1, {1: 0.0}
    pts = residual_points(mesh, n=npoints)
    scores = {}
    for sign in (-1, 1):
        try:
            table = march(mesh, case, sign, eps_deg)
            scores[sign] = median_residual(table, pts)
        except NumericalFailure as exc:
            log.debug("alpha sign %+d rejected: %s", sign, exc)
            scores[sign] = math.inf
        if not math.isfinite(scores[sign]):
            scores[sign] = math.inf
    best = min(scores, key=lambda s: (scores[s], s))
    if not math.isfinite(scores[best]):
        raise NumericalFailure("neither eigenvector sign yields a finite residual")
    log.info("alpha sign %+d (residuals %s)", best, scores)
    return best, scores
