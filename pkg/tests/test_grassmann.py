"""Grassmann kernel against a naive tuple-based reference implementation."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pachner_lab.grassmann import (
    Multivector,
    berezin_integral,
    delta,
    gaussian_from_form,
    gaussian_weight,
    generator,
    identity_suite,
    left_derivative,
    multiply,
    pfaffian,
    product,
    random_rational_skew,
    render,
    scalar,
    substitute,
)
from pachner_lab.numerics import make_rng

# ---------------------------------------------------------------------------
# reference implementation: dict {sorted tuple: coefficient}, signs by counting inversions


def _inversions(seq):
    return sum(1 for a, b in itertools.combinations(seq, 2) if a > b)


def ref_canonical(seq):
    if len(set(seq)) != len(seq):
        return None, 0
    return tuple(sorted(seq)), (-1) ** _inversions(seq)


def ref_mul(a, b):
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key, sign = ref_canonical(ka + kb)
            if sign:
                out[key] = out.get(key, 0) + sign * ca * cb
    return {k: v for k, v in out.items() if v != 0}


def ref_integrate(a, g):
    """Coefficient of t[g] written rightmost."""
    out = {}
    for key, c in a.items():
        if g in key:
            after = sum(1 for x in key if x > g)
            rest = tuple(x for x in key if x != g)
            out[rest] = out.get(rest, 0) + (-1) ** after * c
    return {k: v for k, v in out.items() if v != 0}


def ref_derivative(a, g):
    """Left derivative: move t[g] to the front, then drop it."""
    out = {}
    for key, c in a.items():
        if g in key:
            before = sum(1 for x in key if x < g)
            rest = tuple(x for x in key if x != g)
            out[rest] = out.get(rest, 0) + (-1) ** before * c
    return {k: v for k, v in out.items() if v != 0}


def ref_pfaffian(A):
    """Sum over perfect matchings with the crossing sign."""
    n = len(A)

    def matchings(idx):
        if not idx:
            yield []
            return
        first = idx[0]
        for pos in range(1, len(idx)):
            rest = idx[1:pos] + idx[pos + 1:]
            for m in matchings(rest):
                yield [(first, idx[pos])] + m

    total = 0
    for m in matchings(tuple(range(n))):
        flat = [x for pair in m for x in pair]
        term = (-1) ** _inversions(flat)
        for a, b in m:
            term *= A[a][b]
        total += term
    return total


def ref_det(M):
    M = [[Fraction(x) for x in row] for row in M]
    n, det = len(M), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return det


GENS = list(range(6))
coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=5)
subsets = st.lists(st.sampled_from(GENS), unique=True, max_size=6).map(lambda s: tuple(sorted(s)))
mvs = st.dictionaries(subsets, coeffs, max_size=8).map(lambda d: {k: v for k, v in d.items() if v != 0})


def mv(d):
    return Multivector(d)


# ---------------------------------------------------------------------------
# frozen examples


def test_construction_canonicalises_order_and_drops_repeats():
    assert Multivector({(2, 1): 3}) == Multivector({(1, 2): -3})
    assert Multivector({(1, 1): 5}).is_zero()
    assert Multivector({(3, 1, 2): 1}).coefficient((1, 2, 3)) == 1  # two transpositions
    assert generator(4, 2).coefficient((4,)) == 2


def test_anticommutation_and_nilpotency():
    t1, t2 = generator(1), generator(2)
    assert t1 * t2 == -(t2 * t1)
    assert (t1 * t1).is_zero()


def test_berezin_order_convention():
    t12 = Multivector({(1, 2): 1})
    assert berezin_integral(t12, [2, 1]) == scalar(1)
    assert berezin_integral(t12, [1, 2]) == scalar(-1)
    assert berezin_integral(scalar(7), [1]).is_zero()
    with pytest.raises(ValueError):
        berezin_integral(t12, [1, 1])


def test_left_derivative_frozen():
    assert left_derivative(Multivector({(1, 2): 1}), 2) == Multivector({(1,): -1})
    assert left_derivative(Multivector({(1, 2): 1}), 1) == generator(2)


def test_pfaffian_frozen():
    a = [[0, 3], [-3, 0]]
    assert pfaffian(a) == 3
    b = [[0, 1, 2, 3], [-1, 0, 4, 5], [-2, -4, 0, 6], [-3, -5, -6, 0]]
    assert pfaffian(b) == 1 * 6 - 2 * 5 + 3 * 4
    assert pfaffian([]) == 1
    with pytest.raises(ValueError):
        pfaffian([[0]])


def test_gaussian_weight_frozen():
    F = [[0, Fraction(2, 3)], [Fraction(-2, 3), 0]]
    assert gaussian_weight(F, (3, 5)) == Multivector({(): 1, (3, 5): Fraction(-2, 3)})
    with pytest.raises(ValueError):
        gaussian_weight([[0, 1], [1, 0]], (0, 1))
    with pytest.raises(ValueError):
        gaussian_weight(F, (2, 2))


def test_delta_substitution_frozen():
    f = Multivector({(1, 3): 1})
    assert berezin_integral(f * delta(1, 2), [1]) == Multivector({(2, 3): 1})
    assert substitute(Multivector({(1, 2): 1}), 1, 2).is_zero()
    assert substitute(Multivector({(1, 3): 1}), 1, 4) == Multivector({(3, 4): -1})
    with pytest.raises(ValueError):
        delta(1, 1)


def test_render():
    assert render(Multivector({(): 1, (1, 2): -2})) == "1 - 2*t[1]t[2]"
    assert render(Multivector()) == "0"
    assert render(generator(0), {0: "1234"}) == "t[1234]"


def test_grading_helpers():
    v = Multivector({(): 1, (1, 2): 2, (1, 2, 3): 1})
    assert v.degrees() == {0, 2, 3}
    assert not v.is_even()
    assert v.truncate(2).is_even()
    assert v.scalar_part() == 1


# ---------------------------------------------------------------------------
# properties against the reference


@given(mvs, mvs)
def test_product_matches_reference(a, b):
    assert multiply(mv(a), mv(b)) == mv(ref_mul(a, b))


@given(mvs, mvs, mvs)
def test_associativity(a, b, c):
    A, B, C = mv(a), mv(b), mv(c)
    assert (A * B) * C == A * (B * C)


@given(mvs, st.sampled_from(GENS))
def test_integral_matches_reference(a, g):
    assert berezin_integral(mv(a), [g]) == mv(ref_integrate(a, g))


@given(mvs, st.sampled_from(GENS))
def test_derivative_matches_reference(a, g):
    assert left_derivative(mv(a), g) == mv(ref_derivative(a, g))


@given(st.integers(0, 6), mvs, st.sampled_from(GENS))
def test_graded_leibniz(deg, b, g):
    a = {k: 1 for k in itertools.combinations(GENS, deg)}
    A, B = mv(a), mv(b)
    lhs = left_derivative(A * B, g)
    rhs = left_derivative(A, g) * B + (-1) ** deg * (A * left_derivative(B, g))
    assert lhs == rhs


@given(mvs, st.sampled_from(GENS), st.sampled_from(GENS))
def test_delta_substitutes(a, g, h):
    if g == h:
        return
    A = mv(a)
    assert berezin_integral(A * delta(g, h), [g]) == substitute(A, g, h)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_pfaffian_matches_matchings(n):
    rng = make_rng(n)
    for _ in range(10):
        A = random_rational_skew(rng, n)
        assert pfaffian(A) == ref_pfaffian(A)


def test_pfaffian_squared_is_determinant():
    rng = make_rng(8)
    for n in (2, 4, 6, 8):
        A = random_rational_skew(rng, n)
        assert pfaffian(A) ** 2 == ref_det(A)


def test_gaussian_integral_is_pfaffian():
    rng = make_rng(9)
    for n in (2, 4, 6):
        A = random_rational_skew(rng, n)
        value = berezin_integral(gaussian_from_form(A), list(range(n))).scalar_part()
        assert value == (-2) ** (n // 2) * ref_pfaffian(A)


def test_product_helper_matches_fold():
    rng = make_rng(3)
    from pachner_lab.grassmann import random_multivector

    xs = [random_multivector(rng, range(5)) for _ in range(4)]
    folded = scalar(1)
    for x in xs:
        folded = folded * x
    assert product(xs) == folded


def test_identity_suite_clean():
    assert identity_suite(make_rng(0), samples=10) == {k: 0 for k in
                                                        ("gaussian", "delta", "leibniz", "associativity", "canonical")}
