"""Contour gamma from iT to 0, its mesh, and branch tracking of xi(k) = sqrt(k0^2 - k^2).

The cut G2'(b) is k0 + gamma(b) and G1'(b) is its negative.  When Re(eta) <= 0
the zero k' - k0 of iξ+η may sit near the straight contour; a semicircular
detour is then inserted and the side is picked so that lambda(0) = -1/2.
"""

import cmath
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .errors import (BranchJump, BranchPointTooClose, ConfigError, DeformationFailed,
                     TruncationTooLow)

TOL_START = 1e-8
RHO_MIN_REL = 1e-6
LAMBDA_JUMP_MAX = 0.25


@dataclass(frozen=True)
class ProblemParams:
    k0: complex
    a: float
    eta: complex
    theta_inc: float

    def __post_init__(self):
        object.__setattr__(self, "k0", complex(self.k0))
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "theta_inc", float(self.theta_inc))
        if not (math.isfinite(abs(self.k0)) and math.isfinite(abs(self.eta))):
            raise ConfigError("k0 and eta must be finite")
        if self.k0.real <= 0 or self.k0.imag < 0:
            raise ConfigError(f"need Re k0 > 0 and Im k0 >= 0, got {self.k0}")
        if self.eta.imag > 0:
            raise ConfigError(f"need Im eta <= 0, got {self.eta}")
        if self.eta == 0:
            raise ConfigError("eta = 0 is not admissible for the OE method")
        if not self.a > 0:
            raise ConfigError(f"need a > 0, got {self.a}")
        if not 0 < self.theta_inc < math.pi:
            raise ConfigError(f"theta_inc must lie in (0, pi), got {self.theta_inc}")

    @classmethod
    def from_k0a(cls, k0a, eta, theta_inc, a=1.0, im_rel=1e-3):
        """Wavenumber k0 = (k0a / a)(1 + i im_rel)."""
        return cls(k0=k0a / a * (1 + 1j * im_rel), a=a, eta=eta, theta_inc=theta_inc)

    @property
    def k_star(self):
        return self.k0 * math.cos(self.theta_inc)

    def with_eta(self, eta):
        return ProblemParams(self.k0, self.a, eta, self.theta_inc)


def kprime(k0, eta):
    """Root of k'^2 = k0^2 + eta^2 with Re >= 0 (Im >= 0 on a tie)."""
    r = complex(np.sqrt(complex(k0) ** 2 + complex(eta) ** 2))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


def _closest_root(z2, ref):
    r = complex(np.sqrt(z2))
    return r if abs(r - ref) <= abs(r + ref) else -r


def lambda_continued(b, k0, eta, xi_ref, m_ref, lam_ref):
    """lambda at the scalar b, continued from a node carrying (xi_ref, m_ref, lam_ref)."""
    k = k0 + b
    r = cmath.sqrt(k0 * k0 - k * k)
    if abs(r + xi_ref) < abs(r - xi_ref):
        r = -r
    m = (1j * r + eta) / (1j * r - eta)
    return lam_ref + cmath.log(m / m_ref) / (2j * math.pi)


def _seg_point_distance(za, zb, p):
    d = zb - za
    if d == 0:
        return abs(p - za)
    s = ((p - za) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(za + s * d - p)


class BranchedSqrtTracker:
    """Continuation of sqrt(k0^2 - k^2) from xi(0) = k0 along polylines.

    Paths are sequences of k values starting at 0.  Each segment is cut into
    steps no longer than a quarter of the distance to the nearest branch
    point, so the closest-root rule cannot jump sheets.
    """

    def __init__(self, k0, rho_min=None):
        self.k0 = complex(k0)
        self.rho_min = RHO_MIN_REL * abs(self.k0) if rho_min is None else float(rho_min)
        self._memo = {}

    def _radicand(self, k):
        return self.k0 ** 2 - k * k

    def _step(self, za, zb, xa):
        """Continue xa = xi(za) to zb; za, zb must keep clear of +-k0."""
        z, x = za, xa
        while z != zb:
            d = min(abs(z - self.k0), abs(z + self.k0))
            rest = zb - z
            if abs(rest) <= 0.25 * d:
                z = zb
            else:
                z = z + rest / abs(rest) * 0.25 * d
            x = _closest_root(self._radicand(z), x)
        return x

    def continue_along(self, path):
        """Values of xi at every vertex of ``path`` (which must start at 0)."""
        path = [complex(p) for p in path]
        if not path or path[0] != 0:
            raise ValueError("continuation path must start at k = 0")
        key = tuple(path)
        if key in self._memo:
            return self._memo[key]
        out = [self.k0]
        tiny = 1e-14 * abs(self.k0)
        for i in range(1, len(path)):
            za, zb = path[i - 1], path[i]
            last = i == len(path) - 1
            end_is_bp = min(abs(zb - self.k0), abs(zb + self.k0)) <= tiny
            if last and end_is_bp:
                out.append(0j)
                break
            for bp in (self.k0, -self.k0):
                if _seg_point_distance(za, zb, bp) < self.rho_min:
                    raise BranchPointTooClose(f"segment {za}->{zb} passes within {self.rho_min:g} of {bp}")
            out.append(self._step(za, zb, out[-1]))
        vals = np.array(out, complex)
        vals.setflags(write=False)
        if len(self._memo) < 256:
            self._memo[key] = vals
        return vals

    def xi(self, k, path=None):
        """xi at k, continued along ``path`` (default: the straight segment 0 -> k)."""
        k = complex(k)
        if path is None:
            path = [0j, k]
        elif complex(path[-1]) != k:
            path = list(path) + [k]
        return complex(self.continue_along(path)[-1])

    @staticmethod
    def near(k, k0, ref):
        """Root of k0^2 - k^2 closest to ``ref`` (elementwise)."""
        k = np.asarray(k, complex)
        r = np.sqrt(complex(k0) ** 2 - k * k)
        return np.where(np.abs(r - ref) <= np.abs(r + ref), r, -r)


@dataclass(frozen=True)
class MeshGrading:
    """Node placement on gamma.

    Straight parts use geometric spacing in |b| from T down to t_min_rel*|k0|,
    followed by the endpoint b = 0.  ``ratio`` overrides t_min_rel with a
    fixed geometric ratio.
    """
    t_min_rel: float = 1e-5
    ratio: float = None
    n_arc: int = 24

    def levels(self, T, k0, n):
        """n geometric levels from T downwards (the node b = 0 is appended separately)."""
        if self.ratio is not None:
            if not self.ratio > 1:
                raise ConfigError("grading ratio must exceed 1")
            return T * self.ratio ** (-np.arange(n, dtype=float))
        t_min = self.t_min_rel * abs(k0)
        if not 0 < t_min < T:
            raise ConfigError("t_min must lie in (0, T)")
        return np.geomspace(T, t_min, n)


@dataclass(frozen=True)
class Detour:
    bprime: complex
    rho: float
    side: str


@dataclass(frozen=True)
class GammaMesh:
    params: ProblemParams
    nodes: np.ndarray
    xi: np.ndarray
    m: np.ndarray
    lam: np.ndarray
    T: float
    tol_start: float = TOL_START
    detour: Detour = None
    grading: MeshGrading = field(default_factory=MeshGrading)

    @property
    def N(self):
        return len(self.nodes)

    @property
    def xi1(self):
        return -self.lam

    @property
    def k_nodes(self):
        return self.params.k0 + self.nodes

    def seg_length(self, j):
        return abs(self.nodes[j + 1] - self.nodes[j])

    def locate(self, b):
        """Index of the segment nearest to each point of ``b``."""
        b = np.atleast_1d(np.asarray(b, complex))
        za = self.nodes[:-1][None, :]
        d = (self.nodes[1:] - self.nodes[:-1])[None, :]
        s = ((b[:, None] - za) * d.conj()).real / np.abs(d) ** 2
        s = np.clip(s, 0.0, 1.0)
        dist = np.abs(za + s * d - b[:, None])
        return np.argmin(dist, axis=1)

    def xi_near(self, b, j):
        """xi(k0 + b) on the branch of the segment j (its left node's value)."""
        k = self.params.k0 + np.asarray(b, complex)
        return BranchedSqrtTracker.near(k, self.params.k0, self.xi[j])

    def lam_near(self, b, j):
        """Continuous lambda at b, continued from node j."""
        xi = self.xi_near(b, j)
        m = kernel.m_from_xi(xi, self.params.eta)
        return self.lam[j] + np.log(m / self.m[j]) / (2j * np.pi)

    def xi1_at(self, b, j):
        """Exact xi1 = -lambda at the scalar b, continued from node j."""
        return -lambda_continued(complex(b), self.params.k0, self.params.eta, complex(self.xi[j]),
                                 complex(self.m[j]), complex(self.lam[j]))

    def cut_g2(self, j):
        """Part of G2'(b_j): k0 + gamma from iT down to b_j."""
        return self.params.k0 + self.nodes[: j + 1]

    def cut_g1(self, j):
        return -self.cut_g2(j)

    def dump_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re_b", "im_b", "re_m", "im_m", "re_lambda", "im_lambda"])
            for j, (b, m, lam) in enumerate(zip(self.nodes, self.m, self.lam)):
                w.writerow([j, repr(float(b.real)), repr(float(b.imag)), repr(float(m.real)), repr(float(m.imag)),
                            repr(float(lam.real)), repr(float(lam.imag))])


def cuts_from_gamma(mesh, j):
    """(G1'(b_j), G2'(b_j)) as node arrays; G1' is the negation of G2'."""
    g2 = mesh.cut_g2(j)
    return -g2, g2


def start_errors(params, T):
    """(|m(iT) - 1|, |exp(2ia(k0 + iT))|) on the principal branch."""
    k0, eta = params.k0, params.eta
    b = 1j * T
    xi = complex(np.sqrt(-b * (2 * k0 + b)))
    m = kernel.m_from_xi(xi, eta)
    return abs(m - 1), abs(np.exp(2j * params.a * (k0 + b)))


def truncation_height(params, tol_start=TOL_START):
    """Smallest T (to 1%) with both start errors below tol_start."""
    hi = max(1.0, abs(params.k0))
    while max(start_errors(params, hi)) >= tol_start:
        hi *= 2.0
        if hi > 1e150:  # xi = sqrt(-b(2k0 + b)) overflows beyond this
            raise TruncationTooLow("no admissible truncation height")
    lo = hi / 2.0
    while hi - lo > 0.01 * lo:
        mid = 0.5 * (lo + hi)
        if max(start_errors(params, mid)) < tol_start:
            hi = mid
        else:
            lo = mid
    return hi


def _track_mesh(params, nodes, tracker):
    """xi at k0 + nodes: straight continuation from 0 to k0 + b_1, then along the mesh."""
    k0 = params.k0
    path = [0j, k0 + nodes[0]]
    x = tracker.continue_along(path)[-1]
    out = [x]
    for j in range(1, len(nodes)):
        kb = k0 + nodes[j]
        if j == len(nodes) - 1 and nodes[j] == 0:
            out.append(0j)
            break
        ka = k0 + nodes[j - 1]
        if _seg_point_distance(ka, kb, k0) < tracker.rho_min or _seg_point_distance(ka, kb, -k0) < tracker.rho_min:
            raise BranchPointTooClose(f"mesh segment {j} passes within rho_min of a branch point")
        out.append(tracker._step(ka, kb, out[-1]))
    return np.array(out, complex)


def _unwrap_lambda(m):
    lam = np.empty(len(m), complex)
    lam[0] = np.log(m[0]) / (2j * np.pi)
    steps = np.log(m[1:] / m[:-1]) / (2j * np.pi)
    lam[1:] = lam[0] + np.cumsum(steps)
    return lam, steps


def mesh_from_nodes(params, nodes, T=None, tol_start=TOL_START, detour=None, grading=None,
                    tracker=None, check=True):
    """Attach eigen-data to an explicit node list (b_1 first, b_N = 0 last)."""
    nodes = np.asarray(nodes, complex).copy()
    if len(nodes) < 2:
        raise ConfigError("a mesh needs at least two nodes")
    tracker = tracker or BranchedSqrtTracker(params.k0)
    xi = _track_mesh(params, nodes, tracker)
    m = kernel.m_from_xi(xi, params.eta)
    lam, steps = _unwrap_lambda(m)
    if check and np.any(np.abs(steps) >= LAMBDA_JUMP_MAX):
        j = int(np.argmax(np.abs(steps)))
        raise BranchJump(f"lambda jumps by {abs(steps[j]):.3f} between nodes {j} and {j + 1}")
    for arr in (nodes, xi, m, lam):
        arr.setflags(write=False)
    return GammaMesh(params=params, nodes=nodes, xi=xi, m=m, lam=lam,
                     T=float(T if T is not None else abs(nodes[0])), tol_start=tol_start,
                     detour=detour, grading=grading or MeshGrading())


def _endpoint_ok(mesh, tol=1e-6):
    return abs(mesh.lam[-1] + 0.5) <= tol


def _detour_nodes(levels, bprime, rho, side, n_arc):
    """Straight levels above the detour, a connector, the arc, and a radial leg to 0."""
    top = bprime + 1j * rho
    bot = bprime - 1j * rho
    Y = top.imag
    if Y <= 0:
        raise DeformationFailed(f"detour top {top} is not above the real axis")
    upper = [1j * t for t in levels if t > Y * 1.05]
    pieces = list(upper)
    # connector iY -> top, graded towards the arc
    span = abs(top - 1j * Y)
    if span > 0.25 * rho:
        dists = np.geomspace(span, 0.25 * rho, max(4, int(math.ceil(math.log(4 * span / rho) / math.log(1.3)))))
        pieces.append(1j * Y)
        pieces.extend(top - (top - 1j * Y) / span * d for d in dists[1:])
    pieces.append(top)
    # semicircle from top to bot through the east or west point
    sgn = -1.0 if side == "east" else 1.0
    th = np.pi / 2 + sgn * np.linspace(0.0, np.pi, n_arc + 1)[1:]
    pieces.extend(bprime + rho * np.exp(1j * th))
    # graded start of the leg bot -> 0, then the straight levels rotated onto it
    u = bot / abs(bot)
    lower = [t for t in levels if t < abs(bot) / 1.05]
    first = lower[0] if lower else 0.0
    gap = abs(bot) - first
    if gap > 0.25 * rho:
        dists = np.geomspace(0.25 * rho, gap, max(4, int(math.ceil(math.log(4 * gap / rho) / math.log(1.3)))))
        pieces.extend(bot - u * d for d in dists[:-1])
    pieces.extend(u * t for t in lower)
    pieces.append(0j)
    return np.array(pieces, complex)


def _refine_for_continuity(params, nodes, tracker, max_step=0.1, rounds=12):
    """Bisect segments whose lambda increment exceeds max_step."""
    for _ in range(rounds):
        xi = _track_mesh(params, nodes, tracker)
        _, steps = _unwrap_lambda(kernel.m_from_xi(xi, params.eta))
        bad = np.flatnonzero(np.abs(steps) > max_step)
        if bad.size == 0:
            break
        mids = 0.5 * (nodes[bad] + nodes[bad + 1])
        nodes = np.insert(nodes, bad + 1, mids)
    return nodes


def detour_radius(params, bprime):
    k0 = abs(params.k0)
    rho = min(max(0.1 * abs(bprime), 1e-3 * k0), 0.5 * k0)
    return min(rho, 0.5 * abs(bprime))


def build_gamma(params, T=None, N=200, grading=None, tol_start=TOL_START, side=None):
    """Mesh gamma from iT to 0.

    ``side`` forces the detour side ("none", "east" or "west"); by default the
    straight contour is used when Re(eta) > 0 and otherwise the first of
    straight/east/west whose lambda chain ends at -1/2 wins.
    """
    if N < 16:
        raise ConfigError("N must be at least 16")
    grading = grading or MeshGrading()
    if T is None:
        T = truncation_height(params, tol_start)
    else:
        err = max(start_errors(params, T))
        if err >= tol_start:
            raise TruncationTooLow(f"start error {err:.3e} at T = {T:g} exceeds {tol_start:g}")
    tracker = BranchedSqrtTracker(params.k0)
    levels = grading.levels(T, params.k0, N - 1)
    straight = np.concatenate([1j * levels, [0j]])

    if side is None:
        sides = ["none"] if params.eta.real > 0 else ["none", "east", "west"]
    else:
        sides = [side]
    bp = kprime(params.k0, params.eta) - params.k0
    failures = []
    for s in sides:
        try:
            if s == "none":
                mesh = mesh_from_nodes(params, straight, T, tol_start, None, grading, tracker)
            else:
                rho = detour_radius(params, bp)
                nodes = _detour_nodes(levels, bp, rho, s, grading.n_arc)
                nodes = _refine_for_continuity(params, nodes, tracker)
                mesh = mesh_from_nodes(params, nodes, T, tol_start, Detour(bp, rho, s), grading, tracker)
        except (BranchJump, BranchPointTooClose, DeformationFailed) as exc:
            failures.append(f"{s}: {exc}")
            continue
        if _endpoint_ok(mesh):
            return mesh
        failures.append(f"{s}: lambda(0) = {mesh.lam[-1]:.6g}")
    raise DeformationFailed("no contour yields lambda(0) = -1/2 (" + "; ".join(failures) + ")")
