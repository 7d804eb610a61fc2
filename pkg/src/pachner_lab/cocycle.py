"""Simplicial 1- and 2-cochains, square-root branches q_s and the products K_t.

Cochains are indexed by the derived simplex ids of a triangulation (see
:class:`pachner_lab.triangulation.SimplicialData`).  An edge value is the value
on the edge oriented from its smaller to its larger label, a face value the
value on the face ``ijk`` with ``i < j < k``; other orientations follow by
antisymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import mpmath

from .numerics import PrecisionContext, VanishingValueError, sample_scalar, sqrt_branch, to_mpc, working_precision
from .triangulation import Triangulation, relabel

__all__ = [
    "Cochain1",
    "Cochain2",
    "QAssignment",
    "coboundary1",
    "is_cocycle",
    "cocycle_defects",
    "sample_cocycle",
    "random_signs",
    "assign_q",
    "change_by_edge",
    "edge_coordinates",
    "reorder_vertices",
    "cochain_to_json",
    "cochain_from_json",
]


@dataclass(frozen=True)
class Cochain1:
    values: dict[int, object]  # edge id -> value on the increasingly oriented edge


@dataclass(frozen=True)
class Cochain2:
    values: dict[int, object]  # face id -> value on the increasingly ordered face

    def __getitem__(self, f: int):
        return self.values[f]


@dataclass(frozen=True)
class QAssignment:
    """Square roots ``q_s`` (with their branch signs) and ``K_t = prod_{s in t} q_s``."""

    q: dict[int, object]
    signs: dict[int, int]
    K: dict[int, object]


def coboundary1(rho: Cochain1, tri: Triangulation) -> Cochain2:
    """``(delta rho)_{ijk} = rho_{jk} - rho_{ik} + rho_{ij}``."""
    cx = tri.simplicial
    out = {}
    for f in range(len(cx.faces)):
        ij, ik, jk = cx.boundary_edges_of_face(f)
        out[f] = rho.values[jk] - rho.values[ik] + rho.values[ij]
    return Cochain2(out)


def cocycle_defects(omega: Cochain2, tri: Triangulation) -> dict[int, object]:
    """``omega_jkl - omega_ikl + omega_ijl - omega_ijk`` for every tetrahedron."""
    cx = tri.simplicial
    out = {}
    for t in range(len(cx.tetrahedra)):
        ijk, ijl, ikl, jkl = cx.faces_of_tetra(t)
        out[t] = omega[jkl] - omega[ikl] + omega[ijl] - omega[ijk]
    return out


def is_cocycle(omega: Cochain2, tri: Triangulation, tol=0) -> bool:
    defects = cocycle_defects(omega, tri)
    if tol == 0:
        return all(d == 0 for d in defects.values())
    return all(abs(to_mpc(d)) <= tol for d in defects.values())


def sample_cocycle(tri: Triangulation, ctx: PrecisionContext, mode: str = "unit-complex", rng=None,
                   max_tries: int = 100) -> tuple[Cochain1, Cochain2]:
    """Random coboundary ``omega = delta rho`` with every face value nonzero."""
    rng = ctx.rng(1) if rng is None else rng
    cx = tri.simplicial
    for _ in range(max_tries):
        rho = Cochain1({e: sample_scalar(ctx, mode, rng) for e in range(len(cx.edges))})
        with working_precision(ctx.bits):
            omega = coboundary1(rho, tri)
        if all(v != 0 for v in omega.values.values()):
            return rho, omega
    raise RuntimeError(f"no nonvanishing cocycle found after {max_tries} samples")


def random_signs(tri: Triangulation, rng) -> dict[int, int]:
    return {f: int(rng.choice([1, -1])) for f in range(len(tri.simplicial.faces))}


def assign_q(omega: Cochain2, signs: Mapping[int, int] | None, tri: Triangulation,
             ctx: PrecisionContext | None = None) -> QAssignment:
    """``q_s = sign_s * sqrt(omega_s)`` and ``K_ijkl = q_ijk q_ijl q_ikl q_jkl``.

    Square roots are taken at ``ctx.bits`` (default: the ambient mpmath precision).
    """
    signs = {f: 1 for f in omega.values} if signs is None else dict(signs)
    q = {}
    with working_precision(ctx.bits if ctx is not None else mpmath.mp.prec):
        for f, w in omega.values.items():
            if w == 0:
                raise VanishingValueError("square root of vanishing cocycle value")
            q[f] = sqrt_branch(w, signs[f])
        cx = tri.simplicial
        K = {}
        for t in range(len(cx.tetrahedra)):
            a, b, c, d = cx.faces_of_tetra(t)
            K[t] = q[a] * q[b] * q[c] * q[d]
    return QAssignment(q, signs, K)


def change_by_edge(omega: Cochain2, tri: Triangulation, b: int, c) -> Cochain2:
    """``omega + c * delta(b)`` for the basis 1-cochain of edge ``b``."""
    cx = tri.simplicial
    out = dict(omega.values)
    for f in cx.faces_of_edge(b):
        ij, ik, jk = cx.boundary_edges_of_face(f)
        coeff = (1 if ij == b else 0) - (1 if ik == b else 0) + (1 if jk == b else 0)
        out[f] = out[f] + coeff * c
        if out[f] == 0:
            raise VanishingValueError(f"shifted cocycle vanishes on face {cx.faces[f].labels}")
    return Cochain2(out)


def edge_coordinates(omega: Cochain2, tri: Triangulation, tree: list[int]) -> dict[int, object]:
    """Coordinates ``c_b`` with ``omega = sum_b c_b delta(b)`` and ``c = 0`` on ``tree``.

    For a triangulation with trivial first and second cohomology the
    coordinates are unique.  Solved by Gaussian elimination with pivoting
    (exact for rationals).
    """
    cx = tri.simplicial
    tree_set = set(tree)
    cols = [e for e in range(len(cx.edges)) if e not in tree_set]
    col_index = {e: i for i, e in enumerate(cols)}
    rows = []
    for f in range(len(cx.faces)):
        ij, ik, jk = cx.boundary_edges_of_face(f)
        row = [0] * len(cols)
        for e, s in ((ij, 1), (ik, -1), (jk, 1)):
            if e in col_index:
                row[col_index[e]] += s
        rows.append(row + [omega[f]])
    exact = all(isinstance(v, (int, Fraction)) for v in omega.values.values())
    n = len(cols)
    r = 0
    pivots = []
    for col in range(n):
        best = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                if exact:
                    best = i
                    break
                if best is None or abs(rows[i][col]) > abs(rows[best][col]):
                    best = i
        if best is None:
            raise ValueError("coboundary basis is degenerate (nontrivial cohomology?)")
        rows[r], rows[best] = rows[best], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv if not exact else Fraction(v) / piv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    residual = max((abs(to_mpc(rows[i][-1])) for i in range(r, len(rows))), default=0)
    scale = max(abs(to_mpc(v)) for v in omega.values.values())
    if exact and residual != 0 or not exact and residual > scale * mpmath.mpf(2) ** (-mpmath.mp.prec // 2):
        raise ValueError("omega is not a coboundary")
    coords = {e: 0 for e in tree}
    for i, col in enumerate(pivots):
        coords[cols[col]] = rows[i][-1]
    return coords


def reorder_vertices(tri: Triangulation, omega: Cochain2, q: QAssignment, i: int, root=None):
    """Swap the neighbouring labels ``i`` and ``i+1``.

    Returns ``(tri', omega', q', predicted_factor)``.  Face values are carried
    over as values on *oriented* faces, so faces containing both labels
    change sign; their ``q`` are multiplied by one common root of ``-1``
    (default ``+1j``), which keeps ``K_t = prod q_s`` attached to the
    tetrahedron orientation given by the new vertex order.  The predicted
    factor for the invariant is ``prod_edges root**(2*n2 - 6)`` over the edges
    joining the two labels, each such factor being ``+-1``.
    """
    j = i + 1
    if i not in tri.vertex_labels or j not in tri.vertex_labels:
        raise ValueError("reordering needs two existing neighbouring labels")
    root = mpmath.mpc(0, 1) if root is None else root
    new_tri = relabel(tri, {i: j, j: i})
    cx, ncx = tri.simplicial, new_tri.simplicial
    swap = {i: j, j: i}
    new_omega, new_q, new_signs = {}, {}, {}
    for f, cls in enumerate(cx.faces):
        u, labels = cls.corners[0]
        nf = ncx.simplex_id(u, [swap.get(v, v) for v in labels])
        both = i in labels and j in labels
        new_omega[nf] = -omega[f] if both else omega[f]
        new_q[nf] = root * q.q[f] if both else q.q[f]
        new_signs[nf] = q.signs[f]
    K = {}
    for t in range(len(ncx.tetrahedra)):
        a, b, c, d = ncx.faces_of_tetra(t)
        K[t] = new_q[a] * new_q[b] * new_q[c] * new_q[d]
    factor = mpmath.mpc(1)
    for e, cls in enumerate(cx.edges):
        if cls.labels == (i, j):
            n2 = len(cx.faces_of_edge(e))
            factor *= root ** (2 * n2 - 6)
    return new_tri, Cochain2(new_omega), QAssignment(new_q, new_signs, K), factor


def _encode(v):
    if isinstance(v, Fraction):
        return [str(v), "0"]
    z = to_mpc(v)
    return [mpmath.nstr(z.real, mpmath.mp.dps + 5, strip_zeros=False), mpmath.nstr(z.imag, mpmath.mp.dps + 5, strip_zeros=False)]


def _decode(pair):
    re, im = pair
    if all(isinstance(x, (int, str)) for x in (re, im)) and not any(
            c in str(x).lower() for x in (re, im) for c in ".en"):
        if Fraction(im) != 0:
            raise ValueError("exact values must be real rationals")
        return Fraction(re)
    return mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im))


def cochain_to_json(rho: Cochain1 | None, omega: Cochain2, tri: Triangulation) -> dict:
    """``{"edges": {"i-j": [re, im]}, "faces": {"i-j-k": [re, im]}}``; repeated label sets get primes."""
    cx = tri.simplicial
    out = {}
    if rho is not None:
        names = cx.names(1)
        out["edges"] = {"-".join(map(str, cx.edges[e].labels)) + names[e].count("'") * "'": _encode(v)
                        for e, v in rho.values.items()}
    fnames = cx.names(2)
    out["faces"] = {"-".join(map(str, cx.faces[f].labels)) + fnames[f].count("'") * "'": _encode(v)
                    for f, v in omega.values.items()}
    return out


def cochain_from_json(data: dict, tri: Triangulation) -> tuple[Cochain1 | None, Cochain2]:
    """Inverse of :func:`cochain_to_json`; faces are recomputed from edges when present."""
    from .triangulation import SchemaError

    cx = tri.simplicial
    if not isinstance(data, dict) or ("edges" not in data and "faces" not in data):
        raise SchemaError("expected an object with 'edges' or 'faces'", "$")
    rho = None
    if "edges" in data:
        lookup = {"-".join(map(str, cx.edges[e].labels)) + cx.names(1)[e].count("'") * "'": e
                  for e in range(len(cx.edges))}
        vals = {}
        for key, pair in data["edges"].items():
            if key not in lookup:
                raise SchemaError(f"unknown edge {key!r}", f"$.edges.{key}")
            try:
                vals[lookup[key]] = _decode(pair)
            except (TypeError, ValueError) as exc:
                raise SchemaError(str(exc), f"$.edges.{key}") from None
        if set(vals) != set(range(len(cx.edges))):
            raise SchemaError("edge values missing", "$.edges")
        rho = Cochain1(vals)
        return rho, coboundary1(rho, tri)
    lookup = {"-".join(map(str, cx.faces[f].labels)) + cx.names(2)[f].count("'") * "'": f
              for f in range(len(cx.faces))}
    vals = {}
    for key, pair in data["faces"].items():
        if key not in lookup:
            raise SchemaError(f"unknown face {key!r}", f"$.faces.{key}")
        vals[lookup[key]] = _decode(pair)
    if set(vals) != set(range(len(cx.faces))):
        raise SchemaError("face values missing", "$.faces")
    return None, Cochain2(vals)
