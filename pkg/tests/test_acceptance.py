"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import math
from types import SimpleNamespace

import mpmath
import numpy as np
import pytest

from oestrip.bie import Panelization, bie_table, solve_sym
from oestrip.cli import main
from oestrip.contours import ProblemParams, build_gamma
from oestrip.directivity import OEPipeline, compare, theta_grid
from oestrip.kernel import index
from oestrip.oe_solver import march, median_residual, residual_points, start_value
from oestrip.ode1 import (
    OECoefficient, mesh_contour, oe_evaluate, pi_matrix, reverse_contour, solve_partial, trace_integral,
)
from oestrip.linalg import determinant
from oestrip.special import hankel0_asymptotic, hankel0_first, hankel0_series

INDEX_ETAS = [1 - 0.25j, 2 - 0.01j, 0.5 - 1j, -1 - 0.5j, -0.3 - 0.1j, 3 - 2j, -2 - 0.05j, 0.1 - 0.9j]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def ninf(m):
    return float(np.max(np.abs(m).sum(axis=-1)))


@pytest.fixture(scope="module")
def base_params():
    return ProblemParams.from_k0a(8.0, 1 - 0.25j, math.pi / 6)


@pytest.fixture(scope="module")
def index_meshes(base_params):
    return {eta: build_gamma(base_params.with_eta(eta), N=200) for eta in INDEX_ETAS}


def test_criterion_1_cross_method(base_params, report):
    theta = theta_grid(181)
    oe = OEPipeline(base_params, N=200).directivity(theta)
    ref = bie_table(base_params, 256, theta)
    rep = compare(oe, ref)
    worst_l2 = max(rep.rel_l2["a"], rep.rel_l2["s"])
    worst_linf = max(rep.rel_linf["a"], rep.rel_linf["s"])
    ok = worst_l2 <= 0.05 and worst_linf <= 0.12
    report(1, ok, f"rel L2 |S_a| {rep.rel_l2['a']:.2e}, |S_s| {rep.rel_l2['s']:.2e}; "
                  f"rel Linf |S_a| {rep.rel_linf['a']:.2e}, |S_s| {rep.rel_linf['s']:.2e}")


def test_criterion_2_residual_convergence(base_params, report):
    pts = residual_points(build_gamma(base_params, N=200))
    med = {}
    for case, sign in (("antisym", -1), ("sym", 1)):
        med[case] = [median_residual(march(build_gamma(base_params, N=N), case, sign), pts) for N in (50, 100, 200)]
    ok = all(m[0] > m[1] > m[2] and m[2] <= 5e-2 for m in med.values())
    report(2, ok, "; ".join(f"{c} medians " + ", ".join(f"{x:.2e}" for x in m) for c, m in med.items()))


def test_criterion_3_index(base_params, index_meshes, report):
    errs = [abs(index(base_params.with_eta(eta), m, tol=math.inf) - 1j * math.pi)
            for eta, m in index_meshes.items()]
    report(3, max(errs) <= 1e-8, f"max |Idx - i pi| = {max(errs):.2e} over {len(errs)} impedances")


def test_criterion_4_lambda_endpoints(index_meshes, report):
    top = max(abs(m.lam[0]) for m in index_meshes.values())
    tol = min(m.tol_start for m in index_meshes.values())
    bottom = max(abs(m.lam[-1] + 0.5) for m in index_meshes.values())
    report(4, top <= tol and bottom <= 1e-6, f"max |lambda(b1)| = {top:.2e}, max |lambda(0) + 1/2| = {bottom:.2e}")


def test_criterion_5_oe_algebra(base_params, report):
    mesh = build_gamma(base_params, N=200)
    coeff = OECoefficient(march(mesh, "antisym", -1))
    rng = np.random.default_rng(2024)
    worst_rev = worst_cat = worst_det = 0.0
    for _ in range(4):
        i, j = sorted(rng.choice(np.arange(1, mesh.N - 1), 2, replace=False))
        k = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.1, 0.1)) * base_params.k0
        h1, h2 = mesh_contour(mesh, 0, i), mesh_contour(mesh, i, j)
        a, b = oe_evaluate(h1, coeff, k), oe_evaluate(h2, coeff, k)
        whole = oe_evaluate(h1 + h2, coeff, k)
        back = oe_evaluate(reverse_contour(h1 + h2), coeff, k)
        worst_cat = max(worst_cat, ninf(whole - b @ a) / ninf(whole))
        worst_rev = max(worst_rev, ninf(back @ whole - np.eye(2)))
        full = mesh_contour(mesh)
        det = determinant(oe_evaluate(full, coeff, k))
        worst_det = max(worst_det, abs(det - np.exp(trace_integral(full, coeff, k, nodes=24))) / abs(det))
    ok = max(worst_rev, worst_cat, worst_det) <= 1e-8
    report(5, ok, f"reversal {worst_rev:.1e}, concatenation {worst_cat:.1e}, Liouville {worst_det:.1e}")


def test_criterion_6_initial_condition(base_params, report):
    mesh = build_gamma(base_params, N=200)
    coeff = OECoefficient(march(mesh, "antisym", -1))
    k = 0.3 * base_params.k0
    t0 = 2 * abs(base_params.k0)
    errs = [ninf(solve_partial(k, coeff, 1j * t) - pi_matrix(k, base_params.a)) for t in (t0, 2 * t0, 4 * t0)]
    ok = errs[0] > errs[1] > errs[2]
    report(6, ok, "||U(iT') - Pi|| at T' = 1, 2, 4 x " + f"{t0:.0f}: " + ", ".join(f"{e:.2e}" for e in errs))


def test_criterion_7_riccati_boundary_values(base_params, report):
    mesh = build_gamma(base_params, N=200)
    ok, notes = True, []
    for case, sign in (("antisym", -1), ("sym", 1)):
        t = march(mesh, case, sign)
        start = np.array_equal(t.q_start, start_value(mesh.k_nodes, base_params, sign, case) * np.ones(mesh.N))
        equal = np.array_equal(t.p1, t.q_end[:, 0]) and np.array_equal(t.p2, t.q_end[:, 1])
        top = t.p1[0] == 0 and t.p2[0] == 0
        ok &= bool(start and equal and top)
        notes.append(f"{case}: start {start}, p == q {equal}, p(b1) = 0 {top}")
    report(7, ok, "; ".join(notes))


def test_criterion_8_special_functions(report):
    rng = np.random.default_rng(8)
    z = rng.uniform(0.01, 12, 50) * np.exp(1j * rng.uniform(-math.pi + 0.01, 0.15, 50))
    with mpmath.workdps(40):
        ref = [complex(mpmath.hankel1(0, mpmath.mpc(w.real, w.imag))) for w in z]
    rel = max(abs(hankel0_first(complex(w)) - r) / abs(r) for w, r in zip(z, ref))
    band = np.linspace(10, 14, 9)[:, None] * np.exp(1j * np.array([-3.0, -1.5, -0.2, 0.0, 0.1]))[None, :]
    overlap = max(abs(hankel0_series(complex(w)) - hankel0_asymptotic(complex(w))) / abs(hankel0_asymptotic(complex(w)))
                  for w in band.ravel())
    wr = 0.0
    for x in (0.5, 2.0, 5.0, 11.0, 20.0):
        h = 1e-3
        v = [hankel0_first(x + s * h) for s in (-2, -1, 0, 1, 2)]
        d = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
        w = v[2].real * d.imag - d.real * v[2].imag
        wr = max(wr, abs(w - 2 / (math.pi * x)) * math.pi * x / 2)
    ok = rel <= 1e-10 and overlap <= 1e-8 and wr <= 1e-9
    report(8, ok, f"vs oracle {rel:.1e}, overlap {overlap:.1e}, Wronskian {wr:.1e}")


def test_criterion_9_bie_convergence(base_params, report):
    theta = theta_grid(181)
    tabs = [bie_table(base_params, n, theta) for n in (64, 128, 256)]
    diffs = {}
    for comp in ("S_a", "S_s"):
        v = [getattr(t, comp) for t in tabs]
        diffs[comp] = [np.linalg.norm(v[i + 1] - v[i]) / np.linalg.norm(v[i + 1]) for i in range(2)]
    # eta = 0 is outside ProblemParams (the OE method excludes it), the BIE accepts any duck-typed params
    zero_eta = SimpleNamespace(k0=base_params.k0, a=1.0, eta=0j, theta_inc=base_params.theta_inc)
    mu = solve_sym(zero_eta, Panelization(256, 1.0)).values
    ok = all(d[1] < d[0] for d in diffs.values()) and not np.any(mu)
    report(9, ok, "; ".join(f"{c} successive diffs " + ", ".join(f"{x:.2e}" for x in d) for c, d in diffs.items())
           + f"; eta = 0 density all zero {not np.any(mu)}")


def test_criterion_10_determinism(tmp_path, report):
    names = ("oe.csv", "bie.csv", "compare.csv")
    out = str(tmp_path / "run")
    assert main(["--mode", "compare", "--out", out]) == 0
    first = {n: (tmp_path / "run" / n).read_bytes() for n in names}
    assert main(["--mode", "compare", "--out", out]) == 0
    same = all((tmp_path / "run" / n).read_bytes() == first[n] for n in names)
    report(10, same, f"two compare runs bit-identical across {len(names)} files: {same}")
