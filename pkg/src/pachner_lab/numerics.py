"""Coefficient rings, square-root branches and residual measurement.

Two coefficient rings are used throughout the package:

* exact rationals (:class:`fractions.Fraction`) for identities that are rational
  in the entries of the pentachoron matrices, so that "residual = 0" can be
  asserted literally;
* arbitrary-precision complex numbers (:class:`mpmath.mpc`) wherever square
  roots of cocycle values appear.

All precision-dependent work happens inside :func:`working_precision`, which
sets the binary precision of :mod:`mpmath` for the duration of a block.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

__all__ = [
    "PrecisionContext",
    "VanishingValueError",
    "working_precision",
    "sqrt_branch",
    "rel_residual",
    "sample_scalar",
    "make_rng",
    "to_mpc",
    "is_zero",
]


class VanishingValueError(ValueError):
    """Raised when a square root of a zero cocycle value is requested."""


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision, solver tolerance and random seed of one run.

    ``tol_rel`` defaults to ``2**(-3*bits/4)``; it must stay below
    ``2**(-bits/4)`` so that a tolerance can never be looser than a quarter
    of the available digits.
    """

    bits: int = 256
    tol_rel: float | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise ValueError(f"precision must be an integer >= 64 bits, got {self.bits}")
        if self.tol_rel is None:
            object.__setattr__(self, "tol_rel", 2.0 ** (-3 * self.bits / 4))
        if not (0 < self.tol_rel < 2.0 ** (-self.bits / 4)):
            raise ValueError(
                f"tol_rel={self.tol_rel!r} must lie in (0, 2^(-bits/4)) for bits={self.bits}"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_seed(self, seed: int) -> "PrecisionContext":
        return PrecisionContext(self.bits, self.tol_rel, seed)

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Deterministic generator for this context (optionally a sub-stream)."""
        return make_rng(self.seed, stream)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stream)])


@contextlib.contextmanager
def working_precision(bits: int):
    """Set mpmath's binary precision to ``bits`` inside the block."""
    with mpmath.workprec(int(bits)):
        yield


def to_mpc(x) -> mpmath.mpc:
    """Convert a Python/NumPy/Fraction/mpmath number to ``mpc`` at current precision."""
    if isinstance(x, Fraction):
        return mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
    if isinstance(x, (np.complexfloating, np.floating, np.integer)):
        x = complex(x)
    return mpmath.mpc(x)


def is_zero(x) -> bool:
    return x == 0


def sqrt_branch(x, sign: int):
    """Square root of ``x`` on a pinned branch.

    Returns ``sign`` times the principal square root, the principal root
    being the one with argument in (-pi/2, pi/2].  Exact rational perfect
    squares stay rational.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if x == 0:
        raise VanishingValueError("square root of vanishing cocycle value")
    if isinstance(x, Fraction) and x > 0:
        num, den = mpmath.sqrt(x.numerator), mpmath.sqrt(x.denominator)
        if int(num) ** 2 == x.numerator and int(den) ** 2 == x.denominator:
            return sign * Fraction(int(num), int(den))
    z = to_mpc(x)
    r = mpmath.sqrt(z)
    # mpmath's principal branch cuts along the negative real axis with
    # arg(sqrt) in (-pi/2, pi/2]; normalise the boundary case explicitly.
    if r.real == 0 and r.imag < 0:
        r = -r
    return sign * r


def rel_residual(a, b):
    """``|a - b| / max(1, |a|, |b|)``; exactly zero iff ``a == b``.

    Rational inputs give an exact :class:`Fraction`, otherwise an ``mpf``.
    """
    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        return Fraction(abs(Fraction(a) - Fraction(b))) / max(Fraction(1), abs(Fraction(a)), abs(Fraction(b)))
    a, b = to_mpc(a), to_mpc(b)
    return abs(a - b) / max(mpmath.mpf(1), abs(a), abs(b))


def sample_scalar(ctx: PrecisionContext, mode: str = "unit-complex", rng: np.random.Generator | None = None):
    """Random nonzero scalar.

    ``mode="rational"`` returns a nonzero :class:`Fraction` ``p/q`` with
    ``|p|, |q| <= 99``; ``mode="unit-complex"`` returns an ``mpc`` in the
    annulus ``0.5 <= |z| <= 2``.  Without an explicit generator the value is
    a deterministic function of ``ctx.seed``.
    """
    rng = ctx.rng() if rng is None else rng
    if mode == "rational":
        num = 0
        while num == 0:
            num = int(rng.integers(-99, 100))
        den = int(rng.integers(1, 100))
        return Fraction(num, den)
    if mode in ("unit-complex", "complex"):
        radius = rng.uniform(0.5, 2.0)
        angle = rng.uniform(-np.pi, np.pi)
        with working_precision(ctx.bits):
            return mpmath.mpc(radius) * mpmath.expjpi(mpmath.mpf(angle) / mpmath.pi)
    raise ValueError(f"unknown sampling mode {mode!r}")
