from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pachner_lab.numerics import (
    PrecisionContext,
    VanishingValueError,
    make_rng,
    rel_residual,
    sample_scalar,
    sqrt_branch,
    to_mpc,
    working_precision,
)


def test_default_tolerance_tracks_precision():
    assert PrecisionContext(256).tol_rel == 2.0 ** -192
    assert PrecisionContext(384).tol_rel == 2.0 ** -288


@pytest.mark.parametrize("kwargs", [{"bits": 32}, {"bits": 256, "tol_rel": 1e-3}, {"bits": 256, "tol_rel": 0.0},
                                    {"bits": 100.5}, {"seed": -1}])
def test_invalid_contexts_rejected(kwargs):
    with pytest.raises(ValueError):
        PrecisionContext(**kwargs)


def test_rng_reproducible_and_streams_independent():
    a, b = make_rng(7).normal(size=4), make_rng(7).normal(size=4)
    assert (a == b).all()
    assert not (make_rng(7, 1).normal(size=4) == a).all()
    assert PrecisionContext(seed=3).rng(2).integers(1 << 30) == make_rng(3, 2).integers(1 << 30)


def test_working_precision_restores():
    before = mpmath.mp.prec
    with working_precision(300):
        assert mpmath.mp.prec == 300
    assert mpmath.mp.prec == before


def test_sqrt_branch_principal_and_pinned():
    with working_precision(128):
        assert sqrt_branch(Fraction(9, 4), 1) == Fraction(3, 2)
        assert sqrt_branch(Fraction(9, 4), -1) == Fraction(-3, 2)
        r = sqrt_branch(mpmath.mpc(-4), 1)
        assert r == mpmath.mpc(0, 2)  # boundary case: argument pi/2, not -pi/2
        z = mpmath.mpc(-1, -1e-30)
        assert sqrt_branch(z, 1).real > 0
    with pytest.raises(VanishingValueError):
        sqrt_branch(0, 1)
    with pytest.raises(ValueError):
        sqrt_branch(4, 2)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.sampled_from([1, -1]))
def test_sqrt_branch_squares_back(re, im, sign):
    if re == 0 and im == 0:
        return
    with working_precision(200):
        z = mpmath.mpc(re, im)
        r = sqrt_branch(z, sign)
        assert abs(r * r - z) <= mpmath.mpf(2) ** -180 * max(1, abs(z))
        assert (sign * r).real >= 0


def test_rel_residual_exact_and_numeric():
    assert rel_residual(Fraction(1, 3), Fraction(1, 3)) == 0
    assert rel_residual(Fraction(3), Fraction(1)) == Fraction(2, 3)
    assert isinstance(rel_residual(Fraction(1), 2), Fraction)
    assert rel_residual(mpmath.mpf(1), mpmath.mpf(1)) == 0
    assert abs(rel_residual(1.0, 1.5) - mpmath.mpf(1) / 3) < 1e-15


def test_sample_scalar_modes():
    ctx = PrecisionContext(seed=1)
    values = [sample_scalar(ctx, "rational", make_rng(k)) for k in range(50)]
    assert all(isinstance(v, Fraction) and v != 0 for v in values)
    z = sample_scalar(ctx, "unit-complex", make_rng(0))
    assert 0.5 <= abs(z) <= 2
    assert sample_scalar(ctx) == sample_scalar(ctx)
    with pytest.raises(ValueError):
        sample_scalar(ctx, "bogus")


def test_to_mpc_accepts_common_types():
    import numpy as np

    assert to_mpc(Fraction(1, 4)) == mpmath.mpf("0.25")
    assert to_mpc(np.complex128(1 + 2j)) == mpmath.mpc(1, 2)
    assert to_mpc(3) == 3
