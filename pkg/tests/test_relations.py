from fractions import Fraction

import mpmath
import pytest

from pachner_lab.grassmann import Multivector, generator
from pachner_lab.numerics import PrecisionContext, make_rng
from pachner_lab.relations import (
    IdentityReport,
    multivector_residual,
    verify_H_consistency,
    verify_pillow1,
    verify_pillow2,
    verify_pillow2_exact,
    verify_relation33,
)


def test_multivector_residual_exact_and_missing_terms():
    a = Multivector({(): Fraction(1), (1, 2): Fraction(2)})
    assert multivector_residual(a, a) == 0
    assert multivector_residual(a, Multivector({(): Fraction(1)})) == 1  # missing term counts fully
    b = Multivector({(): mpmath.mpf(1)})
    assert multivector_residual(b, b + generator(3, mpmath.mpf("1e-30"))) < 1e-29


def test_identity_report_json():
    rep = IdentityReport("x", 1, 256, 0.0, True, 1.0, 1e-10, {"k": 1})
    data = rep.to_json()
    assert data["pass"] is True and "passed" not in data


@pytest.mark.parametrize("seed", [0, 1])
def test_pillow1(seed):
    rep = verify_pillow1(PrecisionContext(256, seed=seed))
    assert rep.passed, rep.details
    for key in ("factorisation", "phi_extraction", "w_choice", "normalised", "H_pairs"):
        assert rep.details[key] < 1e-50


@pytest.mark.parametrize("seed", [0, 1])
def test_pillow2(seed):
    rep = verify_pillow2(PrecisionContext(256, seed=seed))
    assert rep.passed, rep.details


def test_pillow2_closed_form_exact():
    assert verify_pillow2_exact(make_rng(3), samples=3) == 0


def test_H_consistency():
    rep = verify_H_consistency(PrecisionContext(256, seed=4))
    assert rep.passed and rep.details["pairs"] == 30


def test_relation33_single_sample():
    rep = verify_relation33(PrecisionContext(256, seed=1))
    assert rep.passed, rep.details
    assert rep.details["monomials_left"] == rep.details["monomials_right"] == 256
    assert rep.details["degrees"] == [1, 3, 5, 7, 9]
    assert not rep.details["inner_generator_leak"]
