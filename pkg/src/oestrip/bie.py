"""Boundary-integral reference solver on uniform panels.

Antisymmetric part: (d^2/dx^2 + k0^2) int G nu + (eta/2) nu = i k0 sin(theta_in) e^{-i k0 x cos theta_in}.
Symmetric part: mu/2 - eta int G mu = eta e^{-i k0 x cos theta_in}.

Panel integrals of G split off ln|s|/(2 pi), integrated exactly; the bounded
remainder uses the midpoint rule.  The second derivative acts on collocation
values through central differences, with one-sided four-point stencils on the
end panels.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .directivity import PHASE, PHASE_A, DirectivityTable, params_snapshot
from .errors import ConfigError, DomainError, SolveFailed
from .kernel import Case
from .special import EULER_GAMMA, hankel0_first


@dataclass(frozen=True)
class Panelization:
    n_panels: int
    a: float
    rule: str = "midpoint+log-exact"

    def __post_init__(self):
        if self.n_panels < 16:
            raise ConfigError("need at least 16 panels")

    @property
    def h(self):
        return 2.0 * self.a / self.n_panels

    @property
    def centers(self):
        return -self.a + self.h * (np.arange(self.n_panels) + 0.5)


@dataclass(frozen=True)
class DensityVector:
    case: Case
    x: np.ndarray
    values: np.ndarray

    def dump_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im"])
            for x, v in zip(self.x, self.values):
                w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def green(dx, params):
    """-(i/4) H0^(1)(k0 |dx|) on the strip axis."""
    dx = np.asarray(dx, float)
    if np.any(dx == 0):
        raise DomainError("G is singular at dx = 0")
    return -0.25j * hankel0_first(params.k0 * np.abs(dx))


def green_smooth(dx, params):
    """G(dx) - ln|dx|/(2 pi), with its finite limit at dx = 0."""
    dx = np.abs(np.asarray(dx, float))
    out = np.empty(dx.shape, complex)
    zero = dx == 0
    out[zero] = -0.25j + (np.log(params.k0 / 2) + EULER_GAMMA) / (2 * math.pi)
    nz = ~zero
    if nz.any():
        out[nz] = green(dx[nz], params) - np.log(dx[nz]) / (2 * math.pi)
    return out


def _log_integral(u, v):
    """int_u^v ln|s| ds."""
    def F(s):
        s = np.asarray(s, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s == 0, 0.0, s * np.log(np.abs(s)) - s)
    return F(v) - F(u)


def single_layer_matrix(panels, params):
    """A[i, j] = int over panel j of G(x_i - x'); Toeplitz in |i - j|."""
    h, n = panels.h, panels.n_panels
    d = h * np.arange(n)
    row = _log_integral(d - h / 2, d + h / 2) / (2 * math.pi) + h * green_smooth(d, params)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return row[idx]


def second_difference(n, h):
    D = np.zeros((n, n))
    i = np.arange(1, n - 1)
    D[i, i - 1] = 1.0
    D[i, i] = -2.0
    D[i, i + 1] = 1.0
    D[0, :4] = [2.0, -5.0, 4.0, -1.0]
    D[-1, -4:] = [-1.0, 4.0, -5.0, 2.0]
    return D / (h * h)


def _solve(M, f):
    try:
        x = np.linalg.solve(M, f)
    except np.linalg.LinAlgError as exc:
        raise SolveFailed(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SolveFailed("non-finite density")
    return x


def _incident(params, x):
    return np.exp(-1j * params.k0 * x * math.cos(params.theta_inc))


def solve_antisym(params, panels):
    x = panels.centers
    n = panels.n_panels
    A = single_layer_matrix(panels, params)
    M = second_difference(n, panels.h) @ A + params.k0 ** 2 * A + 0.5 * params.eta * np.eye(n)
    f = 1j * params.k0 * math.sin(params.theta_inc) * _incident(params, x)
    return DensityVector(Case.ANTISYM, x, _solve(M, f))


def solve_sym(params, panels):
    x = panels.centers
    n = panels.n_panels
    if params.eta == 0:
        return DensityVector(Case.SYM, x, np.zeros(n, complex))
    A = single_layer_matrix(panels, params)
    M = 0.5 * np.eye(n) - params.eta * A
    f = params.eta * _incident(params, x)
    return DensityVector(Case.SYM, x, _solve(M, f))


def solve(case, params, panels):
    return solve_antisym(params, panels) if Case(case) is Case.ANTISYM else solve_sym(params, panels)


def bie_directivity(case, density, theta_grid, params):
    """Midpoint quadrature of the far-field integrals; u^a(x,+0) = -nu/2, du^s/dy(x,+0) = mu/2.

    S^a = e^{i pi/4} k0 sin(theta) int u^a(x,+0) e^{-i k0 x cos theta} dx and
    S^s = e^{-i pi/4} int du^s/dy(x,+0) e^{-i k0 x cos theta} dx share the far-field
    normalisation, so their sum is the directivity of the full scattered field.
    """
    case = Case(case)
    theta = np.asarray(theta_grid, float)
    x = density.x
    h = x[1] - x[0]
    phase = np.exp(-1j * params.k0 * np.outer(np.cos(theta), x))
    snap = params_snapshot(params)
    if case is Case.ANTISYM:
        vals = PHASE_A * params.k0 * np.sin(theta) * (phase @ (-0.5 * density.values)) * h
        return DirectivityTable(theta, params.theta_inc, "BIE", snap, S_a=vals,
                                metadata={"n_panels": len(x)})
    vals = PHASE * (phase @ (0.5 * density.values)) * h
    return DirectivityTable(theta, params.theta_inc, "BIE", snap, S_s=vals,
                            metadata={"n_panels": len(x)})


def bie_table(params, n_panels, theta_grid, case="total"):
    panels = Panelization(n_panels, params.a)
    cases = [Case.ANTISYM, Case.SYM] if case == "total" else [Case(case)]
    tables = {c: bie_directivity(c, solve(c, params, panels), theta_grid, params) for c in cases}
    if len(tables) == 1:
        return next(iter(tables.values()))
    a, s = tables[Case.ANTISYM], tables[Case.SYM]
    return DirectivityTable(a.theta, a.theta_inc, "BIE", a.params, S_a=a.S_a, S_s=s.S_s,
                            metadata=a.metadata)

