"""Local Grassmann identities: the two pillow weights and the 3-3 relation.

Every verifier samples a cocycle on the boundary of the 5-simplex (labels
1..6), solves the pentachora involved, builds the Grassmann integrals and
compares full coefficient maps.  The result is an :class:`IdentityReport`.

Generator conventions
---------------------
First pillow (pentachoron 12456 and its oppositely oriented twin)::

    0: 1245  1: 1246  2: 1256  3: 1456  4: 2456  5: 1456'  6: 2456'

Second pillow (pentachoron 13456 and its twin)::

    0: 1345  1: 1346  2: 1356  3: 1456  4: 3456  5: 3456'

3-3 relation: inner generators 1234, 1235, 1236 (left) and 1456, 2456, 3456
(right) get ids 9..14; the nine boundary tetrahedra get ids 0..8 in the
order of :data:`BOUNDARY_33`.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath

from .cocycle import assign_q, random_signs, sample_cocycle
from .grassmann import Multivector, apply_first_order, berezin_integral, delta, generator, multiply, product
from .numerics import PrecisionContext, rel_residual, to_mpc, working_precision
from .pentaweight import (
    H_and_eta,
    PentaWeight,
    SolverError,
    edge_operator,
    local_data,
    phi_first_pillow,
    random_skew,
    solve_pentachoron,
)
from .triangulation import Triangulation, boundary_of_5_simplex

__all__ = [
    "IdentityReport",
    "multivector_residual",
    "sample_local_problem",
    "pillow1_integral",
    "verify_pillow1",
    "pillow2_integral",
    "pillow2_unit_scalar",
    "pillow2_beta_matrix",
    "verify_pillow2",
    "verify_pillow2_exact",
    "relation33_sides",
    "verify_relation33",
    "verify_H_consistency",
    "BOUNDARY_33",
]

BOUNDARY_33 = ((1, 2, 4, 5), (1, 3, 4, 5), (2, 3, 4, 5), (1, 2, 4, 6), (1, 3, 4, 6), (2, 3, 4, 6),
               (1, 2, 5, 6), (1, 3, 5, 6), (2, 3, 5, 6))
_LEFT_33 = (((1, 2, 3, 4, 5), 1), ((1, 2, 3, 4, 6), -1), ((1, 2, 3, 5, 6), 1))
_RIGHT_33 = (((1, 2, 4, 5, 6), 1), ((1, 3, 4, 5, 6), -1), ((2, 3, 4, 5, 6), 1))
_INNER_LEFT = ((1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 3, 6))
_INNER_RIGHT = ((1, 4, 5, 6), (2, 4, 5, 6), (3, 4, 5, 6))


@dataclass
class IdentityReport:
    """Outcome of one identity check."""

    identity: str
    seed: int
    bits: int
    residual: float
    passed: bool
    time_ms: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def _max_abs(values) -> object:
    return max((abs(to_mpc(v)) for v in values), default=mpmath.mpf(0))


def multivector_residual(a: Multivector, b: Multivector):
    """Largest coefficient difference relative to the largest coefficient of either side.

    All monomials present in either multivector are compared, so a term
    missing on one side counts as a mismatch.  Exact (``Fraction``) inputs give
    an exact result.
    """
    keys = set(a.masks) | set(b.masks)
    ta, tb = a.masks, b.masks
    diffs = [ta.get(k, 0) - tb.get(k, 0) for k in keys]
    if all(isinstance(x, (int, Fraction)) for x in diffs):
        scale = max((abs(Fraction(x)) for x in list(ta.values()) + list(tb.values())), default=Fraction(0))
        worst = max((abs(Fraction(d)) for d in diffs), default=Fraction(0))
        return worst if worst == 0 else worst / scale
    scale = max(_max_abs(ta.values()), _max_abs(tb.values()))
    worst = _max_abs(diffs)
    return worst if worst == 0 else worst / scale


def _float(x) -> float:
    return float(x) if not isinstance(x, mpmath.mpc) else float(abs(x))


def sample_local_problem(ctx: PrecisionContext, rng=None) -> tuple[Triangulation, object, object]:
    """Random cocycle and square roots on the boundary of the 5-simplex."""
    rng = ctx.rng(11) if rng is None else rng
    tri = boundary_of_5_simplex()
    _, omega = sample_cocycle(tri, ctx, "unit-complex", rng)
    q = assign_q(omega, random_signs(tri, rng), tri, ctx)
    return tri, omega, q


def _face_values(tri: Triangulation, values: Mapping[int, object]) -> dict[tuple[int, int, int], object]:
    cx = tri.simplicial
    return {cls.labels: values[f] for f, cls in enumerate(cx.faces)}


def _solve_local(tri, omega, q, vertices, orientation, ctx, rng) -> PentaWeight:
    om, qq = _face_values(tri, omega.values), _face_values(tri, q.q)
    sub = lambda d: {s: d[s] for s in itertools.combinations(vertices, 3)}
    return solve_pentachoron(vertices, orientation, sub(om), sub(qq), ctx, rng)


def verify_H_consistency(ctx: PrecisionContext, tol: float = 1e-40) -> IdentityReport:
    """``H_u`` agrees across all 30 (edge, facet) pairs of a solved pentachoron with pinned square roots."""
    t0 = time.perf_counter()
    rng = ctx.rng(13)
    with working_precision(ctx.bits):
        tri, omega, q = sample_local_problem(ctx, rng)
        verts = tuple(int(v) for v in sorted(rng.choice(range(1, 7), size=5, replace=False)))
        orientation = int(rng.choice([1, -1]))
        pw = _solve_local(tri, omega, q, verts, orientation, ctx, rng)
        qq = _face_values(tri, q.q)
        he = H_and_eta(pw, {s: qq[s] for s in itertools.combinations(verts, 3)})
        residual = he.max_pair_residual
    return IdentityReport("H_consistency", ctx.seed, ctx.bits, _float(residual), bool(residual <= tol),
                          (time.perf_counter() - t0) * 1e3, tol,
                          {"vertices": list(verts), "orientation": orientation, "pairs": len(he.pair_values),
                           "H": mpmath.nstr(he.H, 15)})


# ---------------------------------------------------------------------------
# first pillow

_P1_GENS = {1: 4, 2: 3, 4: 2, 5: 1, 6: 0}
_P1_TWIN = {1: 6, 2: 5, 4: 2, 5: 1, 6: 0}


def pillow1_integral(pw: PentaWeight, w_facet: int = 4) -> Multivector:
    """Triple integral of the weight, its twin and ``t[facet] / beta_{12,facet}``.

    ``w_facet`` names the facet carrying the edge weight by its opposite
    vertex: 4 (1256, default), 5 (1246) or 6 (1245).
    """
    if w_facet not in (4, 5, 6):
        raise ValueError("the edge weight must sit on a facet containing edge 12")
    twin = pw.negated()
    beta = edge_operator(pw, (1, 2)).beta[w_facet]
    w = generator(_P1_GENS[w_facet], 1 / beta)
    integrand = product([pw.weight(_P1_GENS), twin.weight(_P1_TWIN), w])
    return berezin_integral(integrand, [0, 1, 2])


def _two_deltas() -> Multivector:
    return multiply(delta(3, 5), delta(4, 6))


def verify_pillow1(ctx: PrecisionContext, tol: float = 1e-50) -> IdentityReport:
    """Pillow built from pentachoron 12456: factorisation, Phi, normalisation and w-choice independence."""
    t0 = time.perf_counter()
    rng = ctx.rng(12)
    with working_precision(ctx.bits):
        tri, omega, q = sample_local_problem(ctx, rng)
        pw = _solve_local(tri, omega, q, (1, 2, 4, 5, 6), 1, ctx, rng)
        P = pillow1_integral(pw)
        phi = phi_first_pillow(pw)
        dd = _two_deltas()
        factorised = multivector_residual(P, dd * phi)
        extracted = -P.coefficient((3, 6))
        phi_check = rel_residual(extracted, phi)
        choice = max(multivector_residual(pillow1_integral(pw, f), P) for f in (5, 6))
        qq = _face_values(tri, q.q)
        local_q = {s: qq[s] for s in itertools.combinations(pw.vertices, 3)}
        he = H_and_eta(pw, local_q)
        norm = he.eta ** 2 / (qq[1, 2, 4] * qq[1, 2, 5] * qq[1, 2, 6] * qq[4, 5, 6])
        normalised = multivector_residual(P * norm, dd)
        residual = max(factorised, phi_check, choice, normalised, he.max_pair_residual)
    report = IdentityReport("pillow1", ctx.seed, ctx.bits, _float(residual), bool(residual <= tol),
                            (time.perf_counter() - t0) * 1e3, tol,
                            {"factorisation": _float(factorised), "phi_extraction": _float(phi_check),
                             "w_choice": _float(choice), "normalised": _float(normalised),
                             "H_pairs": _float(he.max_pair_residual)})
    return report


# ---------------------------------------------------------------------------
# second pillow

_P2_GENS = {1: 4, 3: 3, 4: 2, 5: 1, 6: 0}
_P2_TWIN = {1: 5, 3: 3, 4: 2, 5: 1, 6: 0}


def pillow2_beta_matrix(pw: PentaWeight) -> list[list[object]]:
    """Coefficients of d/dt[1345], d/dt[1346], d/dt[1356] (columns) in d_13, d_14, d_15 (rows)."""
    hs = pw.hs()
    rows = []
    for b in ((1, 3), (1, 4), (1, 5)):
        op = edge_operator(pw, b, hs)
        rows.append([op.beta.get(m, 0) for m in (6, 5, 4)])
    return rows


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def pillow2_unit_scalar(pw: PentaWeight):
    """Scalar ``d_13 d_14 d_15 (t[1345] t[1346] t[1356])``; dividing by it makes the edge weight invert the operators."""
    hs = pw.hs()
    mono = product([generator(0), generator(1), generator(2)])
    for b in ((1, 5), (1, 4), (1, 3)):
        beta, _ = edge_operator(pw, b, hs).on_generators(_P2_GENS)
        mono = apply_first_order(mono, beta)
    return mono.scalar_part()


def pillow2_integral(pw: PentaWeight) -> tuple[Multivector, object]:
    """Quadruple integral of the weight, its twin and the edge weight ``w``; returns ``(value, det m)``.

    ``w = t[1345] t[1346] t[1356] / c`` with ``c`` from :func:`pillow2_unit_scalar`,
    so that ``d_13 d_14 d_15 w = 1``; ``c = -det m`` for the beta matrix ``m``.
    """
    det = _det3(pillow2_beta_matrix(pw))
    c = pillow2_unit_scalar(pw)
    if det == 0 or c == 0:
        raise ZeroDivisionError("singular beta matrix of the second pillow")
    w = product([generator(0), generator(1), generator(2)]) * (1 / c)
    integrand = product([pw.weight(_P2_GENS), pw.negated().weight(_P2_TWIN), w])
    return berezin_integral(integrand, [0, 1, 2, 3]), det


def _pillow2_prediction(pw: PentaWeight, det) -> Multivector:
    f = pw.local.f_facets((3, 4, 5, 6), (1, 4, 5, 6))
    return delta(4, 5) * (-f / det)


def verify_pillow2_exact(rng, samples: int = 20) -> Fraction:
    """Closed form of the second pillow integral for random rational matrices (exact residual)."""
    worst = Fraction(0)
    for _ in range(samples):
        pw = PentaWeight((1, 3, 4, 5, 6), int(rng.choice([1, -1])), tuple(map(tuple, random_skew(rng))),
                         Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50))))
        m = pillow2_beta_matrix(pw)
        if m[1][2] != 0 or m[2][1] != 0:
            return Fraction(1)
        value, det = pillow2_integral(pw)
        worst = max(worst, multivector_residual(value, _pillow2_prediction(pw, det)))
    return worst


def verify_pillow2(ctx: PrecisionContext, tol: float = 1e-50) -> IdentityReport:
    """Pillow built from pentachoron 13456: closed form of the integral and its normalisation."""
    t0 = time.perf_counter()
    rng = ctx.rng(13)
    with working_precision(ctx.bits):
        tri, omega, q = sample_local_problem(ctx, rng)
        pw = _solve_local(tri, omega, q, (1, 3, 4, 5, 6), 1, ctx, rng)
        value, det = pillow2_integral(pw)
        closed = multivector_residual(value, _pillow2_prediction(pw, det))
        qq = _face_values(tri, q.q)
        he = H_and_eta(pw, {s: qq[s] for s in itertools.combinations(pw.vertices, 3)})
        norm = he.eta ** 2 / mpmath.fprod(qq[s] for s in ((1, 3, 4), (1, 3, 5), (1, 3, 6), (1, 4, 5), (1, 4, 6),
                                                          (1, 5, 6)))
        normalised = multivector_residual(value * norm, delta(4, 5))
        unit = rel_residual(pillow2_unit_scalar(pw), -det)
        m = pillow2_beta_matrix(pw)
        zeros = max(abs(to_mpc(m[1][2])), abs(to_mpc(m[2][1])))
        residual = max(closed, normalised, zeros, unit, he.max_pair_residual)
    exact = verify_pillow2_exact(ctx.rng(14), 5)
    return IdentityReport("pillow2", ctx.seed, ctx.bits, _float(residual), bool(residual <= tol and exact == 0),
                          (time.perf_counter() - t0) * 1e3, tol,
                          {"closed_form": _float(closed), "normalised": _float(normalised), "unit_scalar_vs_det": _float(unit),
                           "matrix_zeros": _float(zeros), "closed_form_exact_rational": str(exact)})


# ---------------------------------------------------------------------------
# 3-3 relation

def _gen_ids_33() -> dict[tuple[int, ...], int]:
    ids = {t: k for k, t in enumerate(BOUNDARY_33)}
    for k, t in enumerate(_INNER_LEFT + _INNER_RIGHT):
        ids[t] = 9 + k
    return ids


def relation33_sides(weights: Mapping[tuple[int, ...], PentaWeight], q: Mapping[tuple[int, int, int], object]):
    """Both sides of the 3-3 relation as multivectors in the nine boundary generators.

    ``weights`` maps the six vertex sets to solved weights, ``q`` maps label
    triples to square roots.
    """
    ids = _gen_ids_33()
    sides = []
    for pentas, inner, face in ((_LEFT_33, _INNER_LEFT, (1, 2, 3)), (_RIGHT_33, _INNER_RIGHT, (4, 5, 6))):
        factors, eta = [], 1
        for verts, _ in pentas:
            pw = weights[verts]
            gens = {m: ids[tuple(v for v in verts if v != m)] for m in verts}
            factors.append(pw.weight(gens))
            he = H_and_eta(pw, {s: q[s] for s in itertools.combinations(verts, 3)})
            eta = eta * he.eta
        integral = berezin_integral(product(factors), [ids[t] for t in inner])
        sides.append(integral * (eta / q[face]))
    return sides[0], sides[1]


def verify_relation33(ctx: PrecisionContext, tol: float = 1e-40, max_reseeds: int = 10) -> IdentityReport:
    """Relation between the three pentachora around triangle 123 and the three around 456."""
    t0 = time.perf_counter()
    rng = ctx.rng(15)
    attempts = 0
    with working_precision(ctx.bits):
        while True:
            attempts += 1
            tri, omega, q = sample_local_problem(ctx, rng)
            try:
                weights = {verts: _solve_local(tri, omega, q, verts, o, ctx, rng)
                           for verts, o in _LEFT_33 + _RIGHT_33}
                break
            except SolverError:
                if attempts >= max_reseeds:
                    raise
        qq = _face_values(tri, q.q)
        L, R = relation33_sides(weights, qq)
        plus, minus = multivector_residual(L, R), multivector_residual(L, -R)
        residual, sign = (plus, 1) if plus <= minus else (minus, -1)
        inner = set(range(9, 15))
        leaked = any(set(key) & inner for key in L.terms) or any(set(key) & inner for key in R.terms)
        parities = {d % 2 for d in L.degrees() | R.degrees()}
        mixed = len(parities) != 1
    return IdentityReport("rel33", ctx.seed, ctx.bits, _float(residual),
                          bool(residual <= tol and not leaked and not mixed), (time.perf_counter() - t0) * 1e3, tol,
                          {"sign": sign, "attempts": attempts, "monomials_left": len(L.terms),
                           "monomials_right": len(R.terms), "inner_generator_leak": leaked,
                           "degrees": sorted(L.degrees() | R.degrees())})
