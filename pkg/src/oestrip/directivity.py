"""Directivity from the RH solutions.

S^a = -e^{i pi/4} k0 sin(theta) U0(-k0 cos theta, k*) and
S^s = e^{-i pi/4} V0(-k0 cos theta, k*), k* = k0 cos(theta_in), where U0 and
V0 come from the embedding formulas applied to the row sums of U (after the
inverse variable change) and V.

Both components share one far-field normalisation, so S^a + S^s is the
directivity of the full scattered field.  The antisymmetric phase factor
e^{i pi/4} (rather than e^{-i pi/4}) is what makes the sum physical: the
double-layer far field carries an extra factor i k0 sin(theta) relative to
the single layer.
"""

import concurrent.futures
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .contours import MeshGrading, TOL_START, build_gamma
from .errors import CoincidentWavenumbers, ConfigError, DenominatorVanishes
from .kernel import Case
from .ode1 import BASE_SUBSTEPS, EPS_DEG, OECoefficient, mesh_contour, oe_evaluate, pi_matrix, plan_substeps
from .oe_solver import march, validate_alpha_sign

log = logging.getLogger(__name__)

DELTA_THETA = math.radians(3.0)
PHASE = complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))     # e^{-i pi/4}
PHASE_A = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))      # e^{i pi/4}


def theta_grid(n, delta=DELTA_THETA):
    if n < 2:
        raise ConfigError("theta grid needs at least two points")
    if not 0 < delta < math.pi / 2:
        raise ConfigError("grazing margin must lie in (0, pi/2)")
    return np.linspace(delta, math.pi - delta, n)


def xi_real(k, k0):
    """Principal sqrt(k0^2 - k^2): the tracked branch on and near the real segment (-k0, k0)."""
    k = np.asarray(k, complex)
    return np.sqrt(k0 * k0 - k * k)


def u0_tilde(case, k, solution, params, xi=None):
    """Row-sum pair (U0^1, U0^2) or (V0^1, V0^2) at k from U (antisym) or V (sym)."""
    case = Case(case)
    sol = np.asarray(solution, complex)
    xi = xi_real(k, params.k0) if xi is None else np.asarray(xi, complex)
    den = params.eta - 1j * xi
    if np.any(np.abs(den) <= 1e-14 * (abs(params.eta) + np.abs(xi))):
        raise DenominatorVanishes("eta - i xi vanishes on the evaluation grid")
    if case is Case.ANTISYM:
        pre = -1.0 / den
    else:
        pre = xi / (1j * den)
    return pre * (sol[..., 0, 0] + sol[..., 0, 1]), pre * (sol[..., 1, 0] + sol[..., 1, 1])


def embed(case, k, k_star, pair_k, pair_star, params, delta_k=None):
    """Embedding formula; raises CoincidentWavenumbers when |k - k*| <= delta_k."""
    case = Case(case)
    k = np.asarray(k, complex)
    delta_k = 1e-6 * abs(params.k0) if delta_k is None else delta_k
    if np.any(np.abs(k - k_star) <= delta_k):
        raise CoincidentWavenumbers(f"|k - k*| <= {delta_k:g}")
    a1, a2 = pair_star
    b1, b2 = pair_k
    if case is Case.ANTISYM:
        return xi_real(k_star, params.k0) / (k - k_star) * (a1 * b2 - b1 * a2)
    return 1j * params.eta / (k - k_star) * (a2 * b1 - b2 * a1)


@dataclass(frozen=True)
class DirectivityTable:
    theta: np.ndarray
    theta_inc: float
    method: str
    params: dict
    S_a: np.ndarray = None
    S_s: np.ndarray = None
    dropped: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    @property
    def S_total(self):
        if self.S_a is None or self.S_s is None:
            return None
        return self.S_a + self.S_s

    def component(self, name):
        return {"a": self.S_a, "s": self.S_s, "total": self.S_total}[name]

    def columns(self):
        cols = {"theta_deg": np.degrees(self.theta)}
        for tag, vals in (("S_a", self.S_a), ("S_s", self.S_s), ("S_total", self.S_total)):
            if vals is not None:
                cols[f"re_{tag}"] = vals.real
                cols[f"im_{tag}"] = vals.imag
                cols[f"abs_{tag}"] = np.abs(vals)
        return cols

    def to_csv(self, path, comments=()):
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([repr(float(v)) for v in row])

    def to_dict(self):
        def enc(vals):
            if vals is None:
                return None
            return [[float(v.real), float(v.imag)] if np.isfinite(v) else None for v in vals]
        return {
            "method": self.method,
            "theta_inc": self.theta_inc,
            "params": self.params,
            "theta_deg": [float(t) for t in np.degrees(self.theta)],
            "S_a": enc(self.S_a),
            "S_s": enc(self.S_s),
            "S_total": enc(self.S_total),
            "dropped": [] if self.dropped is None else [int(i) for i in np.flatnonzero(self.dropped)],
            "metadata": self.metadata,
        }

    def to_json(self, path, extra=None):
        doc = dict(extra or {})
        doc["table"] = self.to_dict()
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=False)


def params_snapshot(params):
    return {"k0": [params.k0.real, params.k0.imag], "a": params.a,
            "eta": [params.eta.real, params.eta.imag], "theta_inc": params.theta_inc}


def merge(a_table, s_table):
    """Combine single-component tables of the same method and grid."""
    if not np.array_equal(a_table.theta, s_table.theta):
        raise ValueError("tables live on different grids")
    dropped = None
    if a_table.dropped is not None or s_table.dropped is not None:
        dropped = np.zeros(len(a_table.theta), bool)
        for t in (a_table, s_table):
            if t.dropped is not None:
                dropped |= t.dropped
    return DirectivityTable(a_table.theta, a_table.theta_inc, a_table.method, a_table.params,
                            S_a=a_table.S_a, S_s=s_table.S_s, dropped=dropped,
                            metadata={**a_table.metadata, **s_table.metadata})


def _threads():
    raw = os.environ.get("OESTRIP_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"OESTRIP_THREADS must be an integer, got {raw!r}")
    return max(1, n)


class OEPipeline:
    """Mesh, coefficient tables and RH solutions for one parameter set."""

    def __init__(self, params, N=200, grading=None, tol_start=TOL_START, substeps=BASE_SUBSTEPS,
                 delta_theta=DELTA_THETA, mesh=None, eps_deg=EPS_DEG):
        self.params = params
        self.eps_deg = eps_deg
        self.substeps = substeps
        self.delta_theta = delta_theta
        self.mesh = mesh or build_gamma(params, N=N, grading=grading or MeshGrading(), tol_start=tol_start)
        self._tables = {}
        self.alpha_scores = None

    def table(self, case):
        case = Case(case)
        if case not in self._tables:
            sign = 1
            if case is Case.ANTISYM:
                sign, self.alpha_scores = validate_alpha_sign(self.mesh, case, eps_deg=self.eps_deg)
            self._tables[case] = march(self.mesh, case, sign, self.eps_deg)
        return self._tables[case]

    @property
    def alpha_sign(self):
        return self.table(Case.ANTISYM).alpha_sign

    def solve(self, case, k):
        """U (antisym, after the inverse variable change) or V (sym) at the wavenumbers k."""
        case = Case(case)
        coeff = OECoefficient(self.table(case))
        k = np.atleast_1d(np.asarray(k, complex))
        pieces = plan_substeps(mesh_contour(self.mesh), k, self.params.k0, self.substeps)
        nthreads = min(_threads(), len(k))

        def run(chunk):
            return oe_evaluate(pieces, coeff, chunk, self.substeps)

        if nthreads > 1:
            chunks = np.array_split(k, nthreads)
            with concurrent.futures.ThreadPoolExecutor(nthreads) as pool:
                X = np.concatenate(list(pool.map(run, chunks)))
        else:
            X = run(k)
        Uhat = X @ pi_matrix(k, self.params.a)
        if case is Case.ANTISYM:
            return kernel.variable_change("inverse", Uhat, k, self.params)
        return Uhat

    def component(self, case, theta):
        """Complex S^a or S^s on the angles ``theta``; points colliding with k* come back as NaN."""
        case = Case(case)
        theta = np.asarray(theta, float)
        d = self.delta_theta
        if np.any(theta < d * (1 - 1e-12)) or np.any(theta > math.pi - d * (1 - 1e-12)):
            raise ConfigError("theta outside the grazing margins")
        p = self.params
        k0 = p.k0
        k_star = p.k_star
        kappa = -k0 * np.cos(theta)
        delta_k = 1e-6 * abs(k0)
        keep = np.abs(kappa - k_star) > delta_k
        sols = self.solve(case, np.concatenate([[k_star], kappa[keep]]))
        pairs = u0_tilde(case, np.concatenate([[k_star], kappa[keep]]), sols, p)
        star = (pairs[0][0], pairs[1][0])
        at_k = (pairs[0][1:], pairs[1][1:])
        vals = embed(case, kappa[keep], k_star, at_k, star, p, delta_k)
        out = np.full(len(theta), np.nan + 0j)
        if case is Case.ANTISYM:
            out[keep] = -PHASE_A * k0 * np.sin(theta[keep]) * vals
        else:
            out[keep] = PHASE * vals
        return out, ~keep

    def directivity(self, theta, case="total"):
        theta = np.asarray(theta, float)
        cases = [Case.ANTISYM, Case.SYM] if case == "total" else [Case(case)]
        comps, dropped = {}, np.zeros(len(theta), bool)
        for c in cases:
            comps[c], dr = self.component(c, theta)
            dropped |= dr
        meta = {"N_gamma": self.mesh.N, "T": self.mesh.T,
                "detour": None if self.mesh.detour is None else self.mesh.detour.side}
        if Case.ANTISYM in comps:
            meta["alpha_sign"] = self.alpha_sign
        return DirectivityTable(theta, self.params.theta_inc, "OE", params_snapshot(self.params),
                                S_a=comps.get(Case.ANTISYM), S_s=comps.get(Case.SYM),
                                dropped=dropped if dropped.any() else None, metadata=meta)


def directivity_component(case, theta, theta_inc, context):
    """Single complex value of S^a or S^s at theta for the pipeline ``context``."""
    if abs(theta_inc - context.params.theta_inc) > 0:
        raise ConfigError("theta_inc differs from the pipeline's incidence angle")
    vals, dropped = context.component(case, np.array([theta]))
    if dropped[0]:
        raise CoincidentWavenumbers("theta maps onto k*")
    return complex(vals[0])


def directivity_total(theta_grid, theta_inc, context):
    if abs(theta_inc - context.params.theta_inc) > 0:
        raise ConfigError("theta_inc differs from the pipeline's incidence angle")
    return context.directivity(theta_grid, "total")


@dataclass(frozen=True)
class CompareReport:
    theta: np.ndarray
    abs_diff: dict
    rel_l2: dict
    rel_linf: dict
    config: dict

    def to_dict(self):
        return {
            "theta_deg": [float(t) for t in np.degrees(self.theta)],
            "abs_diff": {k: [float(x) for x in v] for k, v in self.abs_diff.items()},
            "rel_l2": self.rel_l2,
            "rel_linf": self.rel_linf,
            "config": self.config,
        }


def compare(oe, ref, config=None):
    """Discrepancies of |S| between two tables on the points finite in both.

    rel_l2 = ||(|S_oe| - |S_ref|)||_2 / ||S_ref||_2 and
    rel_linf = max ||S_oe| - |S_ref|| / max |S_ref|.
    """
    if not np.allclose(oe.theta, ref.theta, rtol=0, atol=1e-12):
        raise ValueError("tables live on different grids")
    diff, l2, linf = {}, {}, {}
    mask = np.ones(len(oe.theta), bool)
    for name in ("a", "s", "total"):
        A, B = oe.component(name), ref.component(name)
        if A is not None and B is not None:
            mask &= np.isfinite(A) & np.isfinite(B)
    for name in ("a", "s", "total"):
        A, B = oe.component(name), ref.component(name)
        if A is None or B is None:
            continue
        d = np.abs(A[mask]) - np.abs(B[mask])
        diff[name] = np.abs(d)
        l2[name] = float(np.linalg.norm(d) / np.linalg.norm(B[mask]))
        linf[name] = float(np.max(np.abs(d)) / np.max(np.abs(B[mask])))
    return CompareReport(oe.theta[mask], diff, l2, linf, dict(config or {}))
