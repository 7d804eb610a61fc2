"""Per-pentachoron algebra: F-matrices, edge operators, h_b, omega, H_u and eta_u.

Conventions (all verified by the test-suite):

* A pentachoron ``u`` is handled with its vertex labels in increasing order
  ``v0 < ... < v4`` and its orientation ``eps`` relative to that order.  Row
  and column ``k`` of its 5x5 skew matrix ``F`` belong to the facet opposite
  ``v_k``; ``F_xy`` is short for the entry between the facets opposite ``x``
  and ``y``.
* For an edge ``b = ij`` and the facet ``t`` opposite ``m``, the remaining two
  vertices are named ``k, l`` so that ``(i, j, k, l, m)`` has orientation
  ``eps``; then::

      beta~  = F_ik F_jl - F_il F_jk
      gamma~ = F_ik F_jm F_lm - F_im F_jk F_lm - F_il F_jm F_km + F_im F_jl F_km

* ``h_ij = p (beta~_{ki,t} gamma~_{kj,t} + beta~_{kj,t} gamma~_{ki,t})`` where ``k``
  is the vertex in role ``k`` for ``(b, t)``; the value does not depend on the
  facet ``t`` and changes sign with the orientation of ``ij``; all formulas
  below use the increasingly oriented edge.
* ``omega_ijk = -p / (h_ij h_ik h_jk)`` on increasing triples.
* The edge operator is ``d_b = sum_t beta_bt d/dt[t] + gamma_bt t[t]`` with::

      beta_bt  =  eps * h_b * beta~_bt
      gamma_bt = -eps * h_b * gamma~_bt

  so that ``d_b`` annihilates the weight whose ``t[t] t[t']`` coefficient is
  ``-F_tt'``, the operators obey the vertex relations
  ``sum_{j>v} d_vj - sum_{i<v} d_iv = 0`` and ``sum_b rho_b d_b = 0`` whenever
  ``omega = delta rho``, and operators of adjacent pentachora can be glued.

Given a cocycle, the matrix ``F`` and scalar ``p`` of each pentachoron are
found by a numerical solve.  The solution set is a union of branches modulo
the rescaling ``F_tt' -> lambda_t lambda_t' F_tt'``, ``p -> p / prod(lambda)^3``.
The branch is selected by the square roots ``q_s``: on the facet ``t = abce``
(increasing labels) of ``u`` the gauge-invariant ratio satisfies::

      beta_{ce,t} / beta_{ab,t} = q_abc q_abe / (q_ace q_bce)

and the gauge is fixed by ``beta_{ab,t} = 1`` for the first edge ``ab`` of every
facet.  The data on a facet then depend only on the cocycle and the ``q`` on
that facet, which makes the weights of adjacent pentachora glue.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .grassmann import Multivector, apply_first_order, gaussian_weight
from .numerics import PrecisionContext, rel_residual, sqrt_branch, to_mpc, working_precision
from .triangulation import Triangulation, perm_sign

__all__ = [
    "LocalPenta",
    "PentaWeight",
    "EdgeOperator",
    "FAssignment",
    "HEta",
    "SolverError",
    "random_skew",
    "beta_gamma_tilde",
    "h_edge",
    "omega_from_F",
    "edge_operator",
    "annihilation_residual",
    "solve_pentachoron",
    "solve_weights",
    "gluing_mismatch",
    "H_and_eta",
    "H_squared_pairs",
    "phi_first_pillow",
    "fassignment_to_json",
    "local_data",
    "local_identity_suite",
]


class SolverError(RuntimeError):
    """The numerical solve for the pentachoron matrices did not converge."""

    def __init__(self, message: str, trace: Sequence = ()):
        super().__init__(message)
        self.trace = list(trace)


def random_skew(rng, n: int = 5, mode: str = "rational"):
    """Random ``n x n`` skew matrix with rational (|p|,|q| <= 99) or complex entries."""
    F = [[0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            if mode == "rational":
                num = 0
                while num == 0:
                    num = int(rng.integers(-99, 100))
                v = Fraction(num, int(rng.integers(1, 100)))
            else:
                v = mpmath.mpc(complex(rng.normal(), rng.normal()))
            F[a][b], F[b][a] = v, -v
    return F


class LocalPenta:
    """Vertex-role bookkeeping of one pentachoron with increasing labels."""

    __slots__ = ("vertices", "orientation", "F", "pos")

    def __init__(self, vertices: Sequence[int], orientation: int, F):
        vertices = tuple(vertices)
        if list(vertices) != sorted(vertices) or len(set(vertices)) != 5:
            raise ValueError("pentachoron labels must be five increasing labels")
        self.vertices = vertices
        self.orientation = orientation
        self.F = F
        self.pos = {v: k for k, v in enumerate(vertices)}

    def f(self, x: int, y: int):
        """Entry between the facets opposite vertices ``x`` and ``y``."""
        return self.F[self.pos[x]][self.pos[y]]

    def f_facets(self, s: Sequence[int], t: Sequence[int]):
        """Entry between the facets with label sets ``s`` and ``t``."""
        (x,) = set(self.vertices) - set(s)
        (y,) = set(self.vertices) - set(t)
        return self.f(x, y)

    def roles(self, i: int, j: int, m: int) -> tuple[int, int]:
        return _role_table(self.vertices, self.orientation)[i, j, m]

    def beta_tilde(self, i: int, j: int, m: int):
        k, l = self.roles(i, j, m)
        f = self.f
        return f(i, k) * f(j, l) - f(i, l) * f(j, k)

    def gamma_tilde(self, i: int, j: int, m: int):
        k, l = self.roles(i, j, m)
        f = self.f
        return (f(i, k) * f(j, m) * f(l, m) - f(i, m) * f(j, k) * f(l, m)
                - f(i, l) * f(j, m) * f(k, m) + f(i, m) * f(j, l) * f(k, m))

    def h(self, i: int, j: int, p=1, m: int | None = None):
        """Scalar factor ``h_ij`` computed through the facet opposite ``m``.

        The auxiliary vertex ``k`` is the one fixed by the roles of ``(i, j, m)``;
        with this choice the value is the same for all three facets containing
        ``ij``, and ``h_ji = -h_ij``.  Downstream formulas use increasing edges.
        """
        others = [v for v in self.vertices if v not in (i, j)]
        m = others[0] if m is None else m
        if m not in others:
            raise ValueError("no admissible facet: the facet must contain the edge")
        k, _ = self.roles(i, j, m)
        return p * (self.beta_tilde(k, i, m) * self.gamma_tilde(k, j, m)
                    + self.beta_tilde(k, j, m) * self.gamma_tilde(k, i, m))

    def all_h(self, p=1) -> dict[tuple[int, int], object]:
        return {(i, j): self.h(i, j, p) for i, j in itertools.combinations(self.vertices, 2)}

    def omega(self, p=1, hs=None) -> dict[tuple[int, int, int], object]:
        hs = self.all_h(p) if hs is None else hs
        out = {}
        for i, j, k in itertools.combinations(self.vertices, 3):
            den = hs[i, j] * hs[i, k] * hs[j, k]
            if den == 0:
                raise ZeroDivisionError("vanishing h: degenerate matrix F")
            out[i, j, k] = -p / den
        return out

    def beta(self, i: int, j: int, m: int, hs=None, p=1):
        i, j = min(i, j), max(i, j)
        hb = hs[i, j] if hs is not None else self.h(i, j, p)
        return self.orientation * hb * self.beta_tilde(i, j, m)

    def gamma(self, i: int, j: int, m: int, hs=None, p=1):
        i, j = min(i, j), max(i, j)
        hb = hs[i, j] if hs is not None else self.h(i, j, p)
        return -self.orientation * hb * self.gamma_tilde(i, j, m)


@functools.lru_cache(maxsize=4096)
def _role_table(vertices: tuple[int, ...], orientation: int) -> dict:
    pos = {v: k for k, v in enumerate(vertices)}
    table = {}
    for i, j, m in itertools.permutations(vertices, 3):
        k, l = [v for v in vertices if v not in (i, j, m)]
        if perm_sign([pos[x] for x in (i, j, k, l, m)]) != orientation:
            k, l = l, k
        table[i, j, m] = (k, l)
    return table


def _local(F, vertices, orientation) -> LocalPenta:
    return LocalPenta(vertices, orientation, F)


def beta_gamma_tilde(F, vertices: Sequence[int], orientation: int, b: tuple[int, int], t: Sequence[int]):
    """``(beta~_bt, gamma~_bt)`` for the oriented edge ``b`` and facet ``t`` (label set)."""
    lp = _local(F, vertices, orientation)
    (m,) = set(vertices) - set(t)
    i, j = b
    if i not in t or j not in t:
        raise ValueError("edge is not contained in the facet")
    return lp.beta_tilde(i, j, m), lp.gamma_tilde(i, j, m)


def h_edge(F, vertices: Sequence[int], orientation: int, b: tuple[int, int], p, t: Sequence[int] | None = None):
    """``h_b`` evaluated through the facet ``t`` (default: the first facet containing ``b``)."""
    lp = _local(F, vertices, orientation)
    m = None
    if t is not None:
        if b[0] not in t or b[1] not in t or set(t) - set(vertices) or len(set(t)) != 4:
            raise ValueError("no admissible facet: edge not contained in t")
        (m,) = set(vertices) - set(t)
    return lp.h(b[0], b[1], p, m)


def omega_from_F(F, vertices: Sequence[int], orientation: int, p) -> dict[tuple[int, int, int], object]:
    """Cocycle values on the ten increasing triples of the pentachoron."""
    return _local(F, vertices, orientation).omega(p)


@dataclass(frozen=True)
class EdgeOperator:
    """``d_b = sum_t beta[t] d/dt[t] + gamma[t] t[t]``; keys are the vertices opposite the facets."""

    edge: tuple[int, int]
    beta: dict[int, object]
    gamma: dict[int, object]

    def on_generators(self, facet_gen: Mapping[int, int]) -> tuple[dict[int, object], dict[int, object]]:
        return ({facet_gen[m]: c for m, c in self.beta.items()}, {facet_gen[m]: c for m, c in self.gamma.items()})


@dataclass(frozen=True)
class PentaWeight:
    """Matrix ``F`` (facet order = increasing opposite vertex) and scalar ``p`` of one pentachoron."""

    vertices: tuple[int, ...]
    orientation: int
    F: tuple
    p: object

    @property
    def local(self) -> LocalPenta:
        return LocalPenta(self.vertices, self.orientation, self.F)

    def hs(self):
        return self.local.all_h(self.p)

    def omega(self):
        return self.local.omega(self.p)

    def facet(self, m: int) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if v != m)

    def weight(self, facet_gen: Mapping[int, int]) -> Multivector:
        """Gaussian weight with generator ``facet_gen[m]`` for the facet opposite ``m``."""
        return gaussian_weight(self.F, [facet_gen[m] for m in self.vertices])

    def negated(self) -> "PentaWeight":
        """Partner with opposite orientation: ``F -> -F``, same ``p``."""
        return PentaWeight(self.vertices, -self.orientation, tuple(tuple(-x for x in row) for row in self.F), self.p)


def edge_operator(pw: PentaWeight, b: tuple[int, int], hs=None) -> EdgeOperator:
    lp = pw.local
    hs = pw.hs() if hs is None else hs
    i, j = sorted(b)
    ms = [m for m in pw.vertices if m not in (i, j)]
    return EdgeOperator((i, j), {m: lp.beta(i, j, m, hs) for m in ms}, {m: lp.gamma(i, j, m, hs) for m in ms})


def annihilation_residual(pw: PentaWeight, b: tuple[int, int]):
    """``d_b`` applied to the pentachoron weight (a multivector that must vanish)."""
    gens = {m: k for k, m in enumerate(pw.vertices)}
    W = pw.weight(gens)
    beta, gamma = edge_operator(pw, b).on_generators(gens)
    return apply_first_order(W, beta, gamma)


# ---------------------------------------------------------------------------
# solving for F given omega and q

_FIXED = ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4))
_FREE = ((0, 2), (0, 3), (1, 3), (1, 4), (2, 4))


def _build_F(z, one):
    F = [[0 * one] * 5 for _ in range(5)]
    for a, b in _FIXED:
        F[a][b], F[b][a] = one, -one
    for n, (a, b) in enumerate(_FREE):
        F[a][b], F[b][a] = z[n], -z[n]
    return F


class _Targets:
    """Gauge-invariant targets of one pentachoron in a given number type."""

    def __init__(self, vertices, orientation, omega, q, conv):
        self.vertices = tuple(vertices)
        self.orientation = orientation
        self.faces = list(itertools.combinations(vertices, 3))
        f0 = self.faces[0]
        self.omega_ratio = [conv(omega[s]) / conv(omega[f0]) for s in self.faces[1:]]
        self.k_ratio = []
        for m in vertices:
            a, b, c, e = [v for v in vertices if v != m]
            self.k_ratio.append(conv(q[a, b, c]) * conv(q[a, b, e]) / (conv(q[a, c, e]) * conv(q[b, c, e])))

    def residual(self, z, one):
        lp = LocalPenta(self.vertices, self.orientation, _build_F(z, one))
        hs = lp.all_h(one)
        om = lp.omega(one, hs)
        f0 = self.faces[0]
        out = [om[s] / om[f0] / r - 1 for s, r in zip(self.faces[1:], self.omega_ratio)]
        for m, r in zip(self.vertices, self.k_ratio):
            a, b, c, e = [v for v in self.vertices if v != m]
            out.append(lp.beta(c, e, m, hs) / lp.beta(a, b, m, hs) / r - 1)
        return out


@np.errstate(all="ignore")
def _newton_double(targets: _Targets, z0: np.ndarray, max_iter=80, tol=1e-12):
    def f(z):
        try:
            with np.errstate(all="ignore"):
                return np.array(targets.residual(list(z), 1.0 + 0j), dtype=complex)
        except (ZeroDivisionError, OverflowError):
            return None

    z = z0.astype(complex)
    r = f(z)
    history = []
    for it in range(max_iter):
        if r is None or not np.all(np.isfinite(r)):
            return None
        size = np.abs(r).max()
        if size < tol:
            return z
        history.append(size)
        if it >= 20 and size > 0.9 * history[it - 10]:
            return None
        J = np.empty((len(r), 5), dtype=complex)
        for c in range(5):
            dz = np.zeros(5, dtype=complex)
            dz[c] = 1e-7 * max(1.0, abs(z[c]))
            rc = f(z + dz)
            if rc is None:
                return None
            J[:, c] = (rc - r) / dz[c]
        if not np.all(np.isfinite(J)):
            return None
        try:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-4:
            zn = z + lam * step
            rn = f(zn)
            if rn is not None and np.all(np.isfinite(rn)) and np.abs(rn).max() < np.abs(r).max():
                break
            lam /= 2
        if rn is None:
            return None
        z, r = zn, rn
    return None


def _newton_mp(targets: _Targets, z, tol, max_iter=40):
    one = mpmath.mpc(1)
    z = [mpmath.mpc(x) for x in z]

    def norm(r):
        return max(abs(x) for x in r)

    r = targets.residual(z, one)
    best = norm(r)
    for _ in range(max_iter):
        if best < tol:
            return z, best
        J = mpmath.matrix(len(r), 5)
        for c in range(5):
            step = mpmath.mpf(2) ** (-(mpmath.mp.prec // 2)) * max(1, abs(z[c]))
            zc = list(z)
            zc[c] += step
            rc = targets.residual(zc, one)
            for row in range(len(r)):
                J[row, c] = (rc[row] - r[row]) / step
        JH = J.H
        delta = mpmath.lu_solve(JH * J, -(JH * mpmath.matrix(r)))
        zn = [z[c] + delta[c] for c in range(5)]
        rn = targets.residual(zn, one)
        if norm(rn) >= best:
            return z, best
        z, r, best = zn, rn, norm(rn)
    return z, best


def solve_pentachoron(vertices: Sequence[int], orientation: int, omega: Mapping, q: Mapping, ctx: PrecisionContext,
                      rng=None, max_starts: int = 2000) -> PentaWeight:
    """Matrix ``F`` and scalar ``p`` reproducing ``omega`` on the branch selected by ``q``.

    ``omega`` and ``q`` map the ten increasing label triples of the
    pentachoron to values.  The result is gauge-normalised (``beta_{ab,t} = 1``
    for the first edge of every facet) and verified to reproduce ``omega`` and
    the branch relations within ``ctx.tol_rel``.
    """
    rng = ctx.rng(2) if rng is None else rng
    vertices = tuple(vertices)
    dbl = _Targets(vertices, orientation, omega, q, complex)
    trace = []
    with working_precision(ctx.bits):
        hp = _Targets(vertices, orientation, omega, q, to_mpc)
        for start in range(max_starts):
            z0 = rng.normal(size=5) + 1j * rng.normal(size=5)
            z = _newton_double(dbl, z0)
            if z is None:
                continue
            zz, res = _newton_mp(hp, [complex(x) for x in z], ctx.tol_rel * mpmath.mpf(2) ** -8)
            trace.append((start, float(res)))
            if res > ctx.tol_rel:
                continue
            pw = _normalise(vertices, orientation, zz, omega)
            if _verify(pw, omega, q) <= ctx.tol_rel:
                return pw
        raise SolverError(f"solver failed after {max_starts} seeds", trace)


def _normalise(vertices, orientation, z, omega) -> PentaWeight:
    one = mpmath.mpc(1)
    lp = LocalPenta(vertices, orientation, _build_F(z, one))
    f0 = (vertices[0], vertices[1], vertices[2])
    p = mpmath.sqrt(lp.omega(one)[f0] / to_mpc(omega[f0]))
    hs = lp.all_h(p)
    mu = []
    for m in vertices:
        a, b = [v for v in vertices if v != m][:2]
        mu.append(lp.beta(a, b, m, hs))
    lam = mpmath.fprod(mu)
    F = tuple(tuple(mu[r] * mu[c] * lp.F[r][c] for c in range(5)) for r in range(5))
    return PentaWeight(tuple(vertices), orientation, F, p / lam ** 3)


def _verify(pw: PentaWeight, omega, q):
    lp = pw.local
    hs = lp.all_h(pw.p)
    worst = mpmath.mpf(0)
    for s, val in lp.omega(pw.p, hs).items():
        worst = max(worst, rel_residual(val, omega[s]))
    for m in pw.vertices:
        a, b, c, e = [v for v in pw.vertices if v != m]
        worst = max(worst, rel_residual(lp.beta(a, b, m, hs), 1))
        lhs = lp.beta(c, e, m, hs) * to_mpc(q[a, c, e]) * to_mpc(q[b, c, e])
        worst = max(worst, rel_residual(lhs, to_mpc(q[a, b, c]) * to_mpc(q[a, b, e])))
    return worst


@dataclass
class FAssignment:
    """Solved weights of all pentachora plus solve diagnostics."""

    weights: dict[int, PentaWeight]
    diagnostics: dict = field(default_factory=dict)


def local_data(tri: Triangulation, uid: int, values: Mapping[int, object]) -> dict[tuple[int, int, int], object]:
    """Face values of pentachoron ``uid`` keyed by increasing label triples."""
    cx = tri.simplicial
    verts = tri.penta(uid).sorted_vertices
    return {s: values[cx.simplex_id(uid, s)] for s in itertools.combinations(verts, 3)}


def solve_weights(tri: Triangulation, omega, q, ctx: PrecisionContext, rng=None, gates: bool = True) -> FAssignment:
    """Solve every pentachoron and verify gluing and annihilation gates.

    ``omega`` is a :class:`~pachner_lab.cocycle.Cochain2`, ``q`` a
    :class:`~pachner_lab.cocycle.QAssignment`.
    """
    rng = ctx.rng(3) if rng is None else rng
    weights = {}
    for p in tri.pentachora:
        weights[p.uid] = solve_pentachoron(p.sorted_vertices, p.sorted_orientation, local_data(tri, p.uid, omega.values),
                                           local_data(tri, p.uid, q.q), ctx, rng)
    fa = FAssignment(weights)
    if gates:
        with working_precision(ctx.bits):
            mismatch = gluing_mismatch(tri, fa)
            annihil = max(
                (max((abs(to_mpc(c)) for c in annihilation_residual(w, b).terms.values()), default=mpmath.mpf(0))
                 for w in weights.values() for b in itertools.combinations(w.vertices, 2)),
                default=mpmath.mpf(0))
        fa.diagnostics.update(gluing_mismatch=mismatch, annihilation=annihil)
        if mismatch > ctx.tol_rel ** 0.5 or annihil > ctx.tol_rel ** 0.5:
            raise SolverError(f"solved weights fail the gates (gluing {mpmath.nstr(mismatch, 5)}, "
                              f"annihilation {mpmath.nstr(annihil, 5)})")
    return fa


def gluing_mismatch(tri: Triangulation, fa: FAssignment):
    """Largest violation of ``beta`` equality / ``gamma`` opposition across inner tetrahedra."""
    cx = tri.simplicial
    worst = mpmath.mpf(0)
    cache = {uid: w.hs() for uid, w in fa.weights.items()}
    for t in range(len(cx.tetrahedra)):
        slots = cx.slots_of_tetra(t)
        if len(slots) != 2:
            continue
        (u1, k1), (u2, k2) = slots
        w1, w2 = fa.weights[u1], fa.weights[u2]
        m1, m2 = tri.penta(u1).vertices[k1], tri.penta(u2).vertices[k2]
        labels = cx.tetrahedra[t].labels
        for i, j in itertools.combinations(labels, 2):
            b1 = w1.local.beta(i, j, m1, cache[u1])
            b2 = w2.local.beta(i, j, m2, cache[u2])
            g1 = w1.local.gamma(i, j, m1, cache[u1])
            g2 = w2.local.gamma(i, j, m2, cache[u2])
            worst = max(worst, rel_residual(b1, b2), rel_residual(g1, -g2))
    return worst


# ---------------------------------------------------------------------------
# H_u, eta_u, Phi


@dataclass(frozen=True)
class HEta:
    H: object
    eta: object
    pair_values: dict
    max_pair_residual: object


def _H_pairs(pw: PentaWeight, qprod) -> dict:
    lp = pw.local
    hs = lp.all_h(pw.p)
    out = {}
    for i, j in itertools.combinations(pw.vertices, 2):
        for m in pw.vertices:
            if m in (i, j):
                continue
            k, l = lp.roles(i, j, m)
            den = (lp.f_facets((i, k, l, m), (i, j, k, m)) * lp.f_facets((j, k, l, m), (i, j, l, m))
                   - lp.f_facets((i, k, l, m), (i, j, l, m)) * lp.f_facets((j, k, l, m), (i, j, k, m)))
            if den == 0:
                raise ZeroDivisionError("vanishing denominator in H_u")
            out[(i, j), m] = (lp.beta(i, j, m, hs), qprod(i, j, k, l, m), den)
    return out


def H_and_eta(pw: PentaWeight, q: Mapping[tuple[int, int, int], object], sign: int = 1) -> HEta:
    """``H_u = beta_bt q_{ijk} q_{ijl} q_{ijm} q_{klm} / (F F - F F)`` over all 30 pairs, and ``eta_u``.

    ``q`` maps increasing label triples to square roots.  The canonical value
    is the one of the first edge and first facet; ``max_pair_residual`` is
    the largest deviation over the 30 (edge, facet) pairs.

    ``H_u`` changes sign with the orientation of ``u`` (``F -> -F`` keeps
    ``beta`` and negates the denominator), so ``eta_u`` is the root of
    ``eps_u * H_u``: the value for the pentachoron taken in increasing vertex
    order.  Two oppositely oriented copies of a pentachoron then carry the
    same ``eta``, and their product is ``H`` of the positively oriented copy.
    """

    def qprod(i, j, k, l, m):
        return (q[tuple(sorted((i, j, k)))] * q[tuple(sorted((i, j, l)))] * q[tuple(sorted((i, j, m)))]
                * q[tuple(sorted((k, l, m)))])

    pairs = _H_pairs(pw, qprod)
    values = {key: beta * qp / den for key, (beta, qp, den) in pairs.items()}
    first = next(iter(values.values()))
    worst = max(rel_residual(v, first) for v in values.values())
    return HEta(first, sqrt_branch(pw.orientation * first, sign), values, worst)


def H_squared_pairs(pw: PentaWeight, omega: Mapping[tuple[int, int, int], object]) -> dict:
    """``H_u**2`` over all 30 pairs, written with ``omega`` instead of ``q`` (exact for rationals)."""

    def wprod(i, j, k, l, m):
        return (omega[tuple(sorted((i, j, k)))] * omega[tuple(sorted((i, j, l)))]
                * omega[tuple(sorted((i, j, m)))] * omega[tuple(sorted((k, l, m)))])

    pairs = _H_pairs(pw, wprod)
    return {key: beta * beta * wp / (den * den) for key, (beta, wp, den) in pairs.items()}


def phi_first_pillow(pw: PentaWeight, labels: Sequence[int] | None = None):
    """``Phi = (F_{1456,1245} F_{2456,1246} - F_{1456,1246} F_{2456,1245}) / beta_{12,1256}``.

    ``labels`` gives the actual labels playing the roles 1, 2, 4, 5, 6
    (default: the pentachoron's labels in increasing order).
    """
    one, two, four, five, six = pw.vertices if labels is None else labels
    lp = pw.local
    num = (lp.f_facets((one, four, five, six), (one, two, four, five)) * lp.f_facets((two, four, five, six), (one, two, four, six))
           - lp.f_facets((one, four, five, six), (one, two, four, six)) * lp.f_facets((two, four, five, six), (one, two, four, five)))
    beta = lp.beta(one, two, four, p=pw.p) if (one < two) else lp.beta(two, one, four, p=pw.p)
    if beta == 0:
        raise ZeroDivisionError("vanishing beta_{12,1256}")
    return num / beta


def fassignment_to_json(fa: FAssignment, digits: int | None = None) -> dict:
    digits = digits or mpmath.mp.dps + 5

    def enc(x):
        z = to_mpc(x)
        return [mpmath.nstr(z.real, digits), mpmath.nstr(z.imag, digits)]

    return {str(uid): {"vertices": list(w.vertices), "orientation": w.orientation,
                       "F": [[enc(x) for x in row] for row in w.F], "p": enc(w.p)}
            for uid, w in sorted(fa.weights.items())}


def local_identity_suite(rng, samples: int = 50) -> dict[str, int]:
    """Exact checks for random rational matrices; returns failure counts per identity.

    * ``h_independence``: ``h_ij`` agrees for the three facets containing ``ij``;
    * ``h_antisymmetry``: ``h_ji = -h_ij`` (the roles of ``k, l`` swap with ``i, j``);
    * ``cocycle``: ``omega`` from ``F`` satisfies the cocycle identity on all five facets;
    * ``annihilation``: every ``d_b`` kills the weight;
    * ``H_squared``: ``H_u**2`` written with ``omega`` agrees across all 30 (edge, facet) pairs.
    """
    failures = {"h_independence": 0, "h_antisymmetry": 0, "cocycle": 0, "annihilation": 0, "H_squared": 0}
    for _ in range(samples):
        labels = tuple(sorted(int(x) for x in rng.choice(np.arange(1, 10), size=5, replace=False)))
        orientation = int(rng.choice([1, -1]))
        F = tuple(map(tuple, random_skew(rng)))
        p = Fraction(int(rng.integers(1, 30)), int(rng.integers(1, 30)))
        pw = PentaWeight(labels, orientation, F, p)
        lp = pw.local
        for i, j in itertools.combinations(labels, 2):
            others = [v for v in labels if v not in (i, j)]
            values = {lp.h(i, j, p, m) for m in others}
            if len(values) != 1:
                failures["h_independence"] += 1
            if lp.h(j, i, p) != -lp.h(i, j, p):
                failures["h_antisymmetry"] += 1
        try:
            omega = lp.omega(p)
        except ZeroDivisionError:
            continue
        for a, b, c, d in itertools.combinations(labels, 4):
            if omega[b, c, d] - omega[a, c, d] + omega[a, b, d] - omega[a, b, c] != 0:
                failures["cocycle"] += 1
        for b in itertools.combinations(labels, 2):
            if not annihilation_residual(pw, b).is_zero():
                failures["annihilation"] += 1
        if len(set(H_squared_pairs(pw, omega).values())) != 1:
            failures["H_squared"] += 1
    return failures
