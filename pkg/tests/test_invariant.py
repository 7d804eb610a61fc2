import mpmath
import pytest

from pachner_lab.cocycle import assign_q, random_signs, sample_cocycle
from pachner_lab.grassmann import apply_first_order
from pachner_lab.invariant import (
    InvariantError,
    assemble_global,
    choose_pivots,
    compute_invariant,
    global_edge_operators,
    harness,
    invariant_from_cochain,
    partial_inverse_one,
    torsion_via_minors,
    verify_torsion_routes,
)
from pachner_lab.numerics import PrecisionContext, rel_residual, working_precision
from pachner_lab.pentaweight import solve_weights
from pachner_lab.triangulation import boundary_of_5_simplex, content_hash, spanning_tree_B

S4 = boundary_of_5_simplex()


@pytest.fixture(scope="module")
def solved():
    ctx = PrecisionContext(256, seed=8)
    rng = ctx.rng(1)
    with working_precision(256):
        _, omega = sample_cocycle(S4, ctx, "unit-complex", rng)
        q = assign_q(omega, random_signs(S4, rng), S4, ctx)
        fa = solve_weights(S4, omega, q, ctx, rng)
    return ctx, omega, q, fa


def test_product_weight_and_operators(solved):
    ctx, omega, q, fa = solved
    with working_precision(256):
        gw = assemble_global(S4, fa, tol=1e-50)
        assert gw.size == 15
        assert all(gw.f3[a][b] == -gw.f3[b][a] for a in range(15) for b in range(15))
        _, B = spanning_tree_B(S4)
        row = global_edge_operators(S4, fa, B, B[0], gw, tol=1e-50)
        assert len(row.edges) == 9
        w, S, c = partial_inverse_one(row, gw.size)
        v = w
        for beta in reversed(row.beta):
            v = apply_first_order(v, beta)
        assert abs(v.scalar_part() - 1) < 1e-60 and v.degrees() == {0}
        mat = torsion_via_minors(S4, fa, B, B[0], gw, row)
        assert len(mat["R"]) == 6 and mat["skew_defect"] < 1e-60


def test_invariant_is_unit_on_the_sphere(solved):
    ctx, omega, q, fa = solved
    with working_precision(256):
        res = compute_invariant(S4, omega, q, fa, tol=1e-40)
        assert res.m3 == 6
        assert min(rel_residual(res.value, 1), rel_residual(res.value, -1)) < 1e-40
        assert res.diagnostics["matrix_route_residual"] < 1e-40
        _, B = spanning_tree_B(S4)
        other = compute_invariant(S4, omega, q, fa, omit=[b for b in B if b != res.omitted_edge][0])
        assert min(rel_residual(other.value, res.value), rel_residual(other.value, -res.value)) < 1e-40
        data = res.to_json(S4, 8, 256)
        assert data["triangulation_hash"] == content_hash(S4)
        assert data["sign_convention"] == "defined up to sign"


def test_choose_pivots_rejects_rank_deficiency():
    with working_precision(128):
        C = [[1, 2, 0], [2, 4, 0]]
        with pytest.raises(InvariantError):
            choose_pivots(C)
        assert sorted(choose_pivots([[1, 2, 0], [0, 1, 3]])) in ([0, 1], [0, 2], [1, 2])


def test_torsion_routes_single_seed():
    rep = verify_torsion_routes(PrecisionContext(256, seed=3))
    assert rep.passed, rep.details
    assert rep.details["second_pivots_found"]


def test_invariant_from_cochain_deterministic():
    ctx = PrecisionContext(256, seed=2)
    with working_precision(256):
        _, omega = sample_cocycle(S4, ctx, "rational", ctx.rng(1))
        q = assign_q(omega, None, S4, ctx)
        a, _ = invariant_from_cochain(S4, omega, q, ctx, ctx.rng(5))
        b, _ = invariant_from_cochain(S4, omega, q, ctx, ctx.rng(5))
    assert a.value == b.value


@pytest.mark.parametrize("scenario", ["qsign", "class-shift"])
def test_harness_cheap_scenarios(scenario):
    rep = harness(scenario, PrecisionContext(256, seed=1))
    assert rep.passed, rep.details
    assert rep.details["assumptions"] == []


def test_harness_unknown_scenario():
    with pytest.raises(ValueError):
        harness("nope", PrecisionContext(256))
