import csv

import numpy as np
import pytest

from oestrip.contours import build_gamma, mesh_from_nodes
from oestrip.errors import DegenerateP
from oestrip.oe_solver import (
    march, oe_residual, r_of_b, residual_points, riccati_coefficients, riccati_rhs, start_value,
    validate_alpha_sign,
)
from oestrip.ode1 import OECoefficient, mesh_contour, oe_evaluate


def test_riccati_rhs_at_zero_p(params):
    k0 = params.k0
    k, beta, xi1 = 3.0, 1j, 0.2 + 0.1j
    u, v = 1 / (k - k0 - beta), 1 / (k + k0 + beta)
    d1, d2 = riccati_rhs(beta, 0.0, 0.0, 0.0, 0.0, xi1, k, k0)
    # with p = 0 the residue is diag(xi1, 0) and the free terms vanish
    assert d1 == 0 and d2 == 0
    d1, d2 = riccati_rhs(beta, 1.0, 1.0, 0.0, 0.0, xi1, k, k0)
    assert d1 == pytest.approx(-xi1 * (u + v))
    assert d2 == pytest.approx(xi1 * (u + v))


def test_riccati_inverted_chart(params):
    args = (0.5j, 0.3 - 0.1j, 0.2j, 0.1 + 0.05j, 3.0, params.k0)
    q = 2.0 + 1.0j
    direct = riccati_rhs(args[0], q, q, *args[1:])
    inverted = riccati_rhs(args[0], 1 / q, 1 / q, *args[1:], inverted=(True, True))
    # w = 1/q obeys w' = -q'/q^2
    assert inverted[0] == pytest.approx(-direct[0] / q ** 2)
    assert inverted[1] == pytest.approx(-direct[1] / q ** 2)


def test_degenerate_p(params):
    with pytest.raises(DegenerateP):
        riccati_coefficients(2.0, 0.5, 1.0, 1j, 3.0, params.k0)


def test_two_node_march(params, mesh):
    m2 = mesh_from_nodes(params, [1j * mesh.T, 0j], check=False)
    t = march(m2, "antisym")
    q0 = start_value(params.k0 + 0j, params)
    d1, d2 = riccati_rhs(m2.nodes[0], q0, 0.0, 0.0, 0.0, m2.xi1[0], params.k0, params.k0)
    h = m2.nodes[1] - m2.nodes[0]
    assert t.p1[0] == 0 and t.p2[0] == 0
    assert t.p1[1] == pytest.approx(q0 + h * d1, rel=1e-14)
    assert t.p2[1] == pytest.approx(h * d2, abs=1e-300)


def test_start_and_end_values(params, mesh, table_a):
    ks = params.k0 + mesh.nodes
    assert np.array_equal(table_a.q_start, start_value(ks, params, -1) * np.ones(mesh.N))
    assert np.array_equal(table_a.p1, table_a.q_end[:, 0])
    assert np.array_equal(table_a.p2, table_a.q_end[:, 1])
    assert table_a.p1[0] == 0 and table_a.p2[0] == 0


@pytest.mark.parametrize("j", [120, 150, 190, 199])
def test_march_against_linear_system(params, mesh, table_a, coeff_a, j):
    """(1, q1) and (q2, 1) are transported by the linear system y' = K(b, k_j) y."""
    kj = params.k0 + mesh.nodes[j]
    X = oe_evaluate(mesh_contour(mesh, 0, j - 1), coeff_a, kj, base=16)
    y = X @ np.array([1.0, table_a.q_start[j]])
    z = X @ np.array([0.0, 1.0])
    q1, q2 = y[1] / y[0], z[0] / z[1]
    h = mesh.nodes[j] - mesh.nodes[j - 1]
    d1, d2 = riccati_rhs(mesh.nodes[j - 1], q1, q2, table_a.p1[j - 1], table_a.p2[j - 1],
                         mesh.xi1[j - 1], kj, params.k0)
    assert abs(q1 + h * d1 - table_a.p1[j]) < 1e-3 * max(1, abs(table_a.p1[j]))
    assert abs(q2 + h * d2 - table_a.p2[j]) < 1e-3 * max(1, abs(table_a.p2[j]))


@pytest.mark.parametrize("j", [50, 150, 199])
def test_residue_spectrum(table_a, j):
    r = r_of_b(table_a, j)
    ev = np.sort_complex(np.linalg.eigvals(r))
    expected = np.sort_complex(np.array([0, table_a.mesh.xi1[j]]))
    assert np.allclose(ev, expected, atol=1e-12 * max(1, abs(table_a.mesh.xi1[j])))


@pytest.mark.parametrize("height,tol", [(1e7, 1e-12), (1e5, 1e-8), (1e4, 1e-6)])
def test_direct_residual_high_on_cut(params, table_a, coeff_a, height, tol):
    assert oe_residual(table_a, params.k0 + 1j * height, coeff_a, form="direct") < tol


def test_unknown_residual_form(params, table_a, coeff_a):
    with pytest.raises(ValueError):
        oe_residual(table_a, params.k0 + 10j, coeff_a, form="other")


def test_residual_points(mesh):
    pts = residual_points(mesh)
    beta = np.abs(pts - mesh.params.k0)
    assert len(pts) == 10
    assert beta[0] == pytest.approx(0.5) and beta[-1] == pytest.approx(2e-3)
    assert np.all(np.diff(beta) < 0)


@pytest.mark.parametrize("case,sign", [("antisym", -1), ("sym", 1)])
def test_residual_converges(params, mesh, case, sign):
    pts = residual_points(mesh, n=3)
    res = []
    for N in (50, 100, 200):
        t = march(build_gamma(params, N=N), case, sign)
        c = OECoefficient(t)
        res.append([oe_residual(t, k, c) for k in pts])
    res = np.array(res)
    assert np.all(res[1] < res[0]) and np.all(res[2] < res[1])


def test_validate_alpha_sign(mesh):
    sign, scores = validate_alpha_sign(mesh)
    assert sign == -1
    assert scores[-1] < 0.1 < scores[1]
    assert validate_alpha_sign(mesh, "sym") == (1, {1: 0.0})


def test_sym_table(table_s, mesh):
    assert np.all(table_s.q_start == np.exp(2j * mesh.params.a * mesh.k_nodes))
    assert np.all(np.isfinite(table_s.p1)) and np.all(np.isfinite(table_s.p2))


def test_table_csv(table_a, tmp_path):
    path = tmp_path / "p.csv"
    table_a.dump_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["j", "re_b", "im_b", "re_p1", "im_p1", "re_p2", "im_p2"]
    assert len(rows) == table_a.mesh.N + 1
    last = rows[-1]
    assert complex(float(last[3]), float(last[4])) == table_a.p1[-1]
