import itertools
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pachner_lab.cocycle import (
    Cochain1,
    Cochain2,
    assign_q,
    change_by_edge,
    coboundary1,
    cochain_from_json,
    cochain_to_json,
    cocycle_defects,
    edge_coordinates,
    is_cocycle,
    random_signs,
    reorder_vertices,
    sample_cocycle,
)
from pachner_lab.numerics import PrecisionContext, VanishingValueError, make_rng, working_precision
from pachner_lab.triangulation import (
    SchemaError,
    apply_move02_first,
    apply_pachner_15,
    boundary_of_5_simplex,
    spanning_tree_B,
)

S4 = boundary_of_5_simplex()
rationals = st.fractions(min_value=-20, max_value=20, max_denominator=20)


def _label_maps(tri):
    cx = tri.simplicial
    edges = {cls.labels: e for e, cls in enumerate(cx.edges)}
    faces = {cls.labels: f for f, cls in enumerate(cx.faces)}
    return edges, faces


@given(st.lists(rationals, min_size=15, max_size=15))
def test_coboundary_matches_label_formula(values):
    rho = Cochain1(dict(enumerate(values)))
    omega = coboundary1(rho, S4)
    edges, faces = _label_maps(S4)
    for (i, j, k), f in faces.items():
        expected = values[edges[j, k]] - values[edges[i, k]] + values[edges[i, j]]
        assert omega[f] == expected
    assert is_cocycle(omega, S4)
    assert all(d == 0 for d in cocycle_defects(omega, S4).values())


def test_cocycle_defect_detected():
    _, omega = sample_cocycle(S4, PrecisionContext(seed=2), "rational", make_rng(2))
    broken = dict(omega.values)
    broken[0] += 1
    assert not is_cocycle(Cochain2(broken), S4)


def test_coboundary_on_doubled_classes_is_cocycle():
    tri, _ = apply_move02_first(S4, 0, 1)
    _, omega = sample_cocycle(tri, PrecisionContext(seed=4), "rational", make_rng(4))
    assert is_cocycle(omega, tri)


def test_q_squares_to_omega_and_K_is_product():
    ctx = PrecisionContext(256, seed=5)
    with working_precision(256):
        _, omega = sample_cocycle(S4, ctx, "unit-complex", make_rng(5))
        signs = random_signs(S4, make_rng(6))
        q = assign_q(omega, signs, S4, ctx)
        for f, w in omega.values.items():
            assert abs(q.q[f] ** 2 - w) < mpmath.mpf(2) ** -240
        cx = S4.simplicial
        for t in range(15):
            a, b, c, d = cx.faces_of_tetra(t)
            assert q.K[t] == q.q[a] * q.q[b] * q.q[c] * q.q[d]
        flipped = dict(signs)
        flipped[0] = -flipped[0]
        q2 = assign_q(omega, flipped, S4, ctx)
        assert q2.q[0] == -q.q[0]


def test_q_rejects_vanishing_values():
    omega = Cochain2({f: Fraction(1) for f in range(20)})
    omega.values[3] = Fraction(0)
    with pytest.raises(VanishingValueError):
        assign_q(omega, None, S4)


@settings(max_examples=30)
@given(st.lists(rationals.filter(lambda x: x != 0), min_size=15, max_size=15), st.integers(0, 14),
       rationals.filter(lambda x: x != 0))
def test_edge_coordinates_reconstruct_and_shift(values, b, c):
    rho = Cochain1(dict(enumerate(values)))
    omega = coboundary1(rho, S4)
    tree, B = spanning_tree_B(S4)
    coords = edge_coordinates(omega, S4, tree)
    rebuilt = coboundary1(Cochain1({e: coords.get(e, 0) for e in range(15)}), S4)
    assert rebuilt.values == omega.values
    assert all(coords[e] == 0 for e in tree)
    try:
        shifted = change_by_edge(omega, S4, b, c)
    except VanishingValueError:
        return
    assert is_cocycle(shifted, S4)
    delta_b = coboundary1(Cochain1({e: (c if e == b else 0) for e in range(15)}), S4)
    assert all(shifted[f] == omega[f] + delta_b[f] for f in range(20))


def test_edge_coordinates_reject_non_coboundary():
    tree, _ = spanning_tree_B(S4)
    bad = Cochain2({f: Fraction(f + 1) for f in range(20)})
    with pytest.raises(ValueError):
        edge_coordinates(bad, S4, tree)


def test_reorder_predicted_factor_is_sign():
    ctx = PrecisionContext(256, seed=3)
    with working_precision(256):
        _, omega = sample_cocycle(S4, ctx, "unit-complex", make_rng(3))
        q = assign_q(omega, None, S4, ctx)
        new_tri, omega2, q2, factor = reorder_vertices(S4, omega, q, 2)
        assert abs(factor ** 2 - 1) < 1e-60
        assert is_cocycle(omega2, new_tri, tol=mpmath.mpf(2) ** -200)
        for f, w in omega2.values.items():
            assert abs(q2.q[f] ** 2 - w) < mpmath.mpf(2) ** -200


def test_sampling_is_deterministic():
    ctx = PrecisionContext(256, seed=11)
    a = sample_cocycle(S4, ctx, "unit-complex")[1]
    b = sample_cocycle(S4, ctx, "unit-complex")[1]
    assert a.values == b.values


def test_json_round_trip_exact_and_complex():
    tri, _ = apply_pachner_15(S4, 0)
    ctx = PrecisionContext(256, seed=1)
    rho, omega = sample_cocycle(tri, ctx, "rational", make_rng(1))
    data = cochain_to_json(rho, omega, tri)
    rho2, omega2 = cochain_from_json(data, tri)
    assert rho2.values == rho.values and omega2.values == omega.values
    with working_precision(256):
        rho, omega = sample_cocycle(tri, ctx, "unit-complex", make_rng(1))
        data = cochain_to_json(None, omega, tri)
        _, omega3 = cochain_from_json(data, tri)
        assert all(abs(omega3[f] - omega[f]) < mpmath.mpf(2) ** -250 for f in omega.values)


def test_json_schema_errors():
    with pytest.raises(SchemaError):
        cochain_from_json({"nothing": 1}, S4)
    with pytest.raises(SchemaError):
        cochain_from_json({"edges": {"1-99": ["1", "0"]}}, S4)
    with pytest.raises(SchemaError):
        cochain_from_json({"edges": {"1-2": ["1", "0"]}}, S4)
