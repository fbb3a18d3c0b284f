import cmath
import csv
import math

import numpy as np
import pytest

from oestrip.contours import (
    BranchedSqrtTracker, MeshGrading, ProblemParams, build_gamma, cuts_from_gamma, kprime,
    mesh_from_nodes, start_errors, truncation_height,
)
from oestrip.errors import BranchJump, BranchPointTooClose, ConfigError, TruncationTooLow

K0 = 8 + 0.008j


def fine_xi(k0, path, steps=20000):
    """Brute-force continuation with tiny uniform steps."""
    x = complex(k0)
    for za, zb in zip(path[:-1], path[1:]):
        for s in np.linspace(0, 1, steps + 1)[1:]:
            z = za + s * (zb - za)
            r = cmath.sqrt(k0 * k0 - z * z)
            x = r if abs(r - x) <= abs(r + x) else -r
    return x


def fine_lambda_end(mesh, sub=200):
    p = mesh.params
    lam = cmath.log(mesh.m[0]) / (2j * math.pi)
    x = complex(mesh.xi[0])
    m_prev = mesh.m[0]
    for za, zb in zip(mesh.nodes[:-1], mesh.nodes[1:]):
        for s in np.linspace(0, 1, sub + 1)[1:]:
            k = p.k0 + za + s * (zb - za)
            r = cmath.sqrt(p.k0 ** 2 - k * k)
            x = r if abs(r - x) <= abs(r + x) else -r
            m = (p.eta + 1j * x) / (p.eta - 1j * x)
            if s == 1.0 and zb == 0:
                m = -1 + 0j
            lam += cmath.log(m / m_prev) / (2j * math.pi)
            m_prev = m
    return lam


@pytest.mark.parametrize("eta,expected", [
    (0j, K0),
    (1j * 0, K0),
    (6.0, cmath.sqrt(K0 ** 2 + 36)),
])
def test_kprime_examples(eta, expected):
    assert kprime(K0, eta) == pytest.approx(expected, rel=1e-14)


def test_kprime_branch():
    for eta in (1 - 0.25j, -1 - 0.5j, -2 - 0.05j, 0.5 - 1j, 10j * -1):
        r = kprime(K0, eta)
        assert r.real >= 0
        assert r * r == pytest.approx(K0 ** 2 + eta ** 2, rel=1e-13)


def test_params_validation():
    with pytest.raises(ConfigError):
        ProblemParams(-1.0, 1.0, 1.0, 0.5)
    with pytest.raises(ConfigError):
        ProblemParams(8.0, 1.0, 1 + 0.1j, 0.5)
    with pytest.raises(ConfigError):
        ProblemParams(8.0, 1.0, 0j, 0.5)
    with pytest.raises(ConfigError):
        ProblemParams(8.0, 1.0, 1.0, math.pi)
    with pytest.raises(ConfigError):
        ProblemParams(8.0, 0.0, 1.0, 0.5)


def test_from_k0a():
    p = ProblemParams.from_k0a(8.0, 1 - 0.25j, 0.5, a=2.0)
    assert p.k0 == pytest.approx(4 + 4e-3j)
    assert p.k_star == pytest.approx(p.k0 * math.cos(0.5))


def test_tracker_endpoints():
    tr = BranchedSqrtTracker(K0)
    assert tr.xi(0) == K0
    assert tr.xi(K0) == 0
    assert tr.xi(-K0) == 0


@pytest.mark.parametrize("path", [
    [0j, 3 + 4j],
    [0j, 6 + 1j, 10 + 1j, 10 - 1j],
    [0j, -4 + 2j, -10 + 0.5j, -10 - 2j],
    [0j, 2j, 9 + 2j, 9 - 1j, 7 - 1j],
])
def test_tracker_matches_fine_continuation(path):
    tr = BranchedSqrtTracker(K0)
    got = tr.continue_along(path)[-1]
    assert got == pytest.approx(fine_xi(K0, path), rel=1e-12)


def test_tracker_loop_changes_sheet():
    tr = BranchedSqrtTracker(K0)
    loop = [0j, K0 + 1j, K0 + 1 + 0j, K0 - 1j, 0j]
    assert tr.continue_along(loop)[-1] == pytest.approx(-K0)


def test_tracker_branch_point_too_close():
    tr = BranchedSqrtTracker(K0)
    with pytest.raises(BranchPointTooClose):
        tr.continue_along([0j, K0 + 1e-9j, K0 + 1])


def test_straight_mesh(params, mesh):
    assert mesh.N == 200
    assert mesh.detour is None
    assert mesh.nodes[-1] == 0
    assert np.allclose(mesh.nodes[:-1].real, 0)
    assert np.all(np.diff(mesh.nodes[:-1].imag) < 0)
    assert mesh.nodes[0].imag == pytest.approx(mesh.T)
    assert mesh.m[-1] == -1
    assert mesh.lam[-1] == pytest.approx(-0.5, abs=1e-12)
    assert abs(mesh.m[0] - 1) < mesh.tol_start


def test_truncation_height(params):
    T = truncation_height(params)
    assert max(start_errors(params, T)) < 1e-8
    assert max(start_errors(params, 0.98 * T)) >= 1e-8


def test_truncation_too_low(params):
    with pytest.raises(TruncationTooLow):
        build_gamma(params, T=10.0)
    with pytest.raises(TruncationTooLow):
        truncation_height(params, tol_start=1e-305)


def test_small_n_rejected(params):
    with pytest.raises(ConfigError):
        build_gamma(params, N=15)


def test_grading_validation():
    with pytest.raises(ConfigError):
        MeshGrading(ratio=1.0).levels(10.0, 8.0, 5)
    with pytest.raises(ConfigError):
        MeshGrading(t_min_rel=10.0).levels(10.0, 8.0, 5)


def test_dyadic_nesting(params):
    coarse = build_gamma(params, N=17)
    fine = build_gamma(params, N=32)
    assert np.allclose(fine.nodes[:-1][::2], coarse.nodes[:-1], rtol=1e-12, atol=0)


@pytest.mark.parametrize("eta", [-1 - 0.5j, -0.3 - 0.1j, -2 - 0.05j])
def test_deformed_mesh(params, eta):
    p = params.with_eta(eta)
    m = build_gamma(p, N=100)
    assert m.detour is not None
    assert m.lam[-1] == pytest.approx(-0.5, abs=1e-10)
    assert fine_lambda_end(m) == pytest.approx(-0.5, abs=1e-8)
    assert np.all(np.abs(np.diff(m.lam)) < 0.25)


def test_branch_jump_detected(params):
    p = params.with_eta(-2 - 0.05j)
    bp = kprime(p.k0, p.eta) - p.k0
    nodes = [1j * 2e8, 1j * abs(bp), 0j]
    with pytest.raises(BranchJump):
        mesh_from_nodes(p, nodes)


def test_cuts(mesh):
    g1, g2 = cuts_from_gamma(mesh, 50)
    assert np.array_equal(g1, -g2)
    assert np.array_equal(g2, mesh.params.k0 + mesh.nodes[:51])


def test_mesh_csv(mesh, tmp_path):
    path = tmp_path / "mesh.csv"
    mesh.dump_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["index", "re_b", "im_b", "re_m", "im_m", "re_lambda", "im_lambda"]
    assert len(rows) == mesh.N + 1
    assert complex(float(rows[-1][5]), float(rows[-1][6])) == mesh.lam[-1]
