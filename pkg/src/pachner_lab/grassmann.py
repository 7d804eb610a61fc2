"""Sparse Grassmann algebra over integer-indexed generators.

A :class:`Multivector` is a finite sum of monomials ``c * t[g1] t[g2] ... t[gk]``
with strictly increasing generator ids.  Internally each monomial is a bit mask
(bit ``g`` set iff generator ``g`` occurs), which makes products and
derivatives cheap; the public :attr:`Multivector.terms` view uses sorted
tuples.  Coefficients may be ``int``, :class:`fractions.Fraction`, ``complex``
or :class:`mpmath.mpc`; the algebra never inspects them beyond ``+ - *`` and
comparison with zero.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Multivector",
    "generator",
    "scalar",
    "multiply",
    "product",
    "left_derivative",
    "berezin_integral",
    "gaussian_weight",
    "pfaffian",
    "delta",
    "substitute",
    "apply_first_order",
    "render",
    "random_multivector",
    "random_rational_skew",
    "gaussian_from_form",
    "identity_suite",
]


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _mask_to_tuple(mask: int) -> tuple[int, ...]:
    out = []
    g = 0
    while mask:
        if mask & 1:
            out.append(g)
        mask >>= 1
        g += 1
    return tuple(out)


def _tuple_to_mask(key: Iterable[int]) -> tuple[int, int]:
    """Mask of a generator sequence and the sign of sorting it (0 if repeated)."""
    key = list(key)
    mask = 0
    for g in key:
        if g < 0:
            raise ValueError("generator ids must be non-negative")
        if mask >> g & 1:
            return 0, 0
        mask |= 1 << g
    inversions = sum(1 for a in range(len(key)) for b in range(a + 1, len(key)) if key[a] > key[b])
    return mask, (-1 if inversions % 2 else 1)


def _merge_sign(a: int, b: int) -> int:
    """Sign of reordering monomial(a)*monomial(b) into increasing order."""
    count = 0
    while b:
        low = b & -b
        g = low.bit_length() - 1
        count += _popcount(a >> (g + 1))
        b ^= low
    return -1 if count & 1 else 1


class Multivector:
    """Immutable element of the Grassmann algebra.

    Build one with :func:`generator`, :func:`scalar` or from a mapping of
    generator tuples to coefficients::

        Multivector({(): 1, (1, 2): -2})   # 1 - 2 t[1]t[2]

    Tuples need not be sorted; they are canonicalised with the appropriate
    sign, and tuples with a repeated generator are dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Sequence[int], object] | None = None):
        acc: dict[int, object] = {}
        for key, c in (terms or {}).items():
            mask, sign = _tuple_to_mask(key)
            if sign == 0:
                continue
            _accumulate(acc, mask, c if sign > 0 else -c)
        self._terms = {m: c for m, c in acc.items() if c != 0}

    @classmethod
    def _from_masks(cls, masks: dict[int, object]) -> "Multivector":
        obj = cls.__new__(cls)
        obj._terms = {m: c for m, c in masks.items() if c != 0}
        return obj

    # -- views -----------------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], object]:
        return {_mask_to_tuple(m): c for m, c in self._terms.items()}

    @property
    def masks(self) -> dict[int, object]:
        return dict(self._terms)

    def coefficient(self, key: Sequence[int]):
        mask, sign = _tuple_to_mask(key)
        if sign == 0:
            return 0
        c = self._terms.get(mask, 0)
        return c if sign > 0 else -c

    def generators(self) -> set[int]:
        acc = 0
        for m in self._terms:
            acc |= m
        return set(_mask_to_tuple(acc))

    def degrees(self) -> set[int]:
        return {_popcount(m) for m in self._terms}

    def is_even(self) -> bool:
        return all(_popcount(m) % 2 == 0 for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def scalar_part(self):
        return self._terms.get(0, 0)

    def map_coefficients(self, fn) -> "Multivector":
        return Multivector._from_masks({m: fn(c) for m, c in self._terms.items()})

    def truncate(self, max_degree: int) -> "Multivector":
        return Multivector._from_masks({m: c for m, c in self._terms.items() if _popcount(m) <= max_degree})

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        acc = dict(self._terms)
        for m, c in other._terms.items():
            _accumulate(acc, m, c)
        return Multivector._from_masks(acc)

    __radd__ = __add__

    def __neg__(self):
        return Multivector._from_masks({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return multiply(self, other)
        return Multivector._from_masks({m: c * other for m, c in self._terms.items()})

    def __rmul__(self, other):
        if isinstance(other, Multivector):
            return multiply(other, self)
        return Multivector._from_masks({m: other * c for m, c in self._terms.items()})

    def __truediv__(self, other):
        return Multivector._from_masks({m: c / other for m, c in self._terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"Multivector({render(self)})"


def _accumulate(acc: dict, mask: int, c) -> None:
    if mask in acc:
        s = acc[mask] + c
        if s == 0:
            del acc[mask]
        else:
            acc[mask] = s
    elif c != 0:
        acc[mask] = c


def _coerce(x) -> Multivector:
    if isinstance(x, Multivector):
        return x
    if isinstance(x, (int, float, complex, Fraction)) or hasattr(x, "real"):
        return scalar(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a multivector")


def generator(g: int, coefficient=1) -> Multivector:
    """The generator ``t[g]`` (times an optional coefficient)."""
    return Multivector._from_masks({1 << g: coefficient})


def scalar(c) -> Multivector:
    return Multivector._from_masks({0: c})


def multiply(a: Multivector, b: Multivector) -> Multivector:
    """Associative product with anticommuting generators and ``t[g]**2 = 0``."""
    acc: dict[int, object] = {}
    for ma, ca in a._terms.items():
        for mb, cb in b._terms.items():
            if ma & mb:
                continue
            c = ca * cb
            _accumulate(acc, ma | mb, c if _merge_sign(ma, mb) > 0 else -c)
    return Multivector._from_masks(acc)


def product(factors: Iterable[Multivector]) -> Multivector:
    out = scalar(1)
    for f in factors:
        out = multiply(out, f)
    return out


def left_derivative(v: Multivector, g: int) -> Multivector:
    """Left derivative: move ``t[g]`` to the front of each monomial, then drop it."""
    bit = 1 << g
    below = bit - 1
    acc = {}
    for m, c in v._terms.items():
        if m & bit:
            acc[m ^ bit] = -c if _popcount(m & below) & 1 else c
    return Multivector._from_masks(acc)


def _integrate_one(v: Multivector, g: int) -> Multivector:
    bit = 1 << g
    acc = {}
    for m, c in v._terms.items():
        if m & bit:
            # move t[g] to the rightmost position, past the larger generators
            acc[m ^ bit] = -c if _popcount(m >> (g + 1)) & 1 else c
    return Multivector._from_masks(acc)


def berezin_integral(v: Multivector, gens: Sequence[int]) -> Multivector:
    """Iterated Berezin integral ``\\int ... \\int v dt[g1] dt[g2] ...``.

    ``gens[0]`` is the innermost differential and is integrated first.  A
    single integral takes ``f = f0 + f1 t[g]`` (``t[g]`` written rightmost)
    to ``f1``.
    """
    if len(set(gens)) != len(gens):
        raise ValueError("repeated integration variable")
    for g in gens:
        v = _integrate_one(v, g)
    return v


def gaussian_weight(F, facets: Sequence[int]) -> Multivector:
    """Gaussian weight ``prod_{a<b} (1 - F[a][b] t[facets[a]] t[facets[b]])``.

    The coefficient of ``t[facets[a]] t[facets[b]]`` (in this order, ``a < b``)
    is ``-F[a][b]``; the product of the commuting quadratic factors equals the
    exponential of the quadratic form.
    """
    n = len(facets)
    if len(set(facets)) != n:
        raise ValueError("facet generators must be distinct")
    for a in range(n):
        if F[a][a] != 0:
            raise ValueError("matrix is not skew-symmetric (nonzero diagonal)")
        for b in range(a + 1, n):
            if F[a][b] != -F[b][a]:
                raise ValueError("matrix is not skew-symmetric")
    out = scalar(1)
    for a in range(n):
        for b in range(a + 1, n):
            if F[a][b] != 0:
                factor = Multivector({(): 1, (facets[a], facets[b]): -F[a][b]})
                out = multiply(out, factor)
    return out


def pfaffian(A):
    """Pfaffian by expansion along the first row (memoised over index subsets).

    Exact for rational entries; ``Pf(A)**2 == det(A)``.
    """
    n = len(A)
    if n % 2:
        raise ValueError("Pfaffian requires an even-sized matrix")

    @lru_cache(maxsize=None)
    def pf(idx: tuple[int, ...]):
        if not idx:
            return 1
        i0 = idx[0]
        total = 0
        for pos in range(1, len(idx)):
            j = idx[pos]
            a = A[i0][j]
            if a == 0:
                continue
            rest = idx[1:pos] + idx[pos + 1:]
            term = a * pf(rest)
            total = total + term if pos % 2 == 1 else total - term
        return total

    return pf(tuple(range(n)))


def delta(g: int, g_prime: int) -> Multivector:
    """Grassmann delta function ``t[g] - t[g']``."""
    if g == g_prime:
        raise ValueError("delta function needs two distinct generators")
    return Multivector._from_masks({1 << g: 1, 1 << g_prime: -1})


def substitute(v: Multivector, g: int, g_new: int) -> Multivector:
    """Replace generator ``g`` by ``g_new`` (terms already containing ``g_new`` vanish)."""
    acc: dict[int, object] = {}
    bit, new = 1 << g, 1 << g_new
    for m, c in v._terms.items():
        if not m & bit:
            _accumulate(acc, m, c)
            continue
        if m & new:
            continue
        # write t[g] leftmost, rename it, then sort it into place
        rest = m ^ bit
        sign = -1 if _popcount(m & (bit - 1)) & 1 else 1
        sign *= -1 if _popcount(rest & (new - 1)) & 1 else 1
        _accumulate(acc, rest | new, c if sign > 0 else -c)
    return Multivector._from_masks(acc)


def apply_first_order(v: Multivector, deriv: Mapping[int, object], mult: Mapping[int, object] | None = None) -> Multivector:
    """Apply ``sum_g deriv[g] * d/dt[g] + sum_g mult[g] * t[g]`` (left action)."""
    out = Multivector()
    for g, c in deriv.items():
        if c != 0:
            out = out + left_derivative(v, g) * c
    for g, c in (mult or {}).items():
        if c != 0:
            out = out + multiply(generator(g, c), v)
    return out


def _format_coefficient(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, int):
        return str(c)
    try:
        import mpmath

        if isinstance(c, (mpmath.mpc, mpmath.mpf)):
            c = complex(c)
    except ImportError:  # pragma: no cover
        pass
    if isinstance(c, complex):
        if c.imag == 0:
            return f"{c.real:.12g}"
        return f"({c.real:.12g}{c.imag:+.12g}j)"
    return str(c)


def _is_negative_real(c) -> bool:
    if isinstance(c, (int, Fraction, float)):
        return c < 0
    try:
        return complex(c).imag == 0 and complex(c).real < 0
    except TypeError:
        return False


def render(v: Multivector, names: Mapping[int, str] | None = None) -> str:
    """Text rendering, terms sorted by degree then key, e.g. ``1 - 2*t[1234]t[1235]``."""
    if v.is_zero():
        return "0"
    names = names or {}
    pieces = []
    for key in sorted(v.terms, key=lambda k: (len(k), k)):
        c = v.terms[key]
        mono = "".join(f"t[{names.get(g, g)}]" for g in key)
        negative = _is_negative_real(c)
        mag = -c if negative else c
        if not key:
            body = _format_coefficient(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_coefficient(mag)}*{mono}"
        if not pieces:
            pieces.append(("-" if negative else "") + body)
        else:
            pieces.append((" - " if negative else " + ") + body)
    return "".join(pieces)


# ---------------------------------------------------------------------------
# exact identity suite


def _random_fraction(rng, bound: int = 9) -> Fraction:
    return Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))


def random_multivector(rng, gens: Sequence[int], degree: int | None = None, density: float = 0.7) -> Multivector:
    """Random rational multivector over ``gens`` (homogeneous of ``degree`` if given)."""
    from itertools import combinations

    degrees = [degree] if degree is not None else range(len(gens) + 1)
    terms = {}
    for d in degrees:
        for key in combinations(sorted(gens), d):
            if rng.random() < density:
                terms[key] = _random_fraction(rng)
    return Multivector(terms)


def random_rational_skew(rng, n: int, bound: int = 9) -> list[list[Fraction]]:
    A = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            A[a][b] = _random_fraction(rng, bound)
            A[b][a] = -A[a][b]
    return A


def gaussian_from_form(A) -> Multivector:
    """``exp(Theta^T A Theta)``: coefficient ``2 A[a][b]`` on ``t[a] t[b]`` for ``a < b``."""
    n = len(A)
    out = scalar(1)
    for a in range(n):
        for b in range(a + 1, n):
            if A[a][b] != 0:
                out = multiply(out, Multivector({(): 1, (a, b): 2 * A[a][b]}))
    return out


def identity_suite(rng, samples: int = 100, sizes: Sequence[int] = (2, 4, 6, 8)) -> dict[str, int]:
    """Exact checks of the kernel; returns the number of failures per identity (all zero when sound).

    * ``gaussian``: integral of ``exp(Theta^T A Theta)`` over all generators is ``(-2)**(n/2) Pf(A)``;
    * ``delta``: integrating ``f * delta(t, t')`` over ``t`` substitutes ``t -> t'``, on every monomial over 4 generators;
    * ``leibniz``: graded Leibniz rule for the left derivative on random homogeneous pairs;
    * ``associativity`` and ``canonical``: products of random triples, re-canonicalisation fixed point.
    """
    from itertools import combinations

    failures = {"gaussian": 0, "delta": 0, "leibniz": 0, "associativity": 0, "canonical": 0}
    for n in sizes:
        for _ in range(samples):
            A = random_rational_skew(rng, n)
            value = berezin_integral(gaussian_from_form(A), list(range(n))).scalar_part()
            if value != (-2) ** (n // 2) * pfaffian(A):
                failures["gaussian"] += 1
    gens = [0, 1, 2, 3]
    for d in range(5):
        for key in combinations(gens, d):
            for c in (1, Fraction(-3, 7)):
                f = Multivector({key: c})
                lhs = berezin_integral(multiply(f, delta(0, 4)), [0])
                if lhs != substitute(f, 0, 4):
                    failures["delta"] += 1
    for _ in range(samples):
        da, db = int(rng.integers(0, 4)), int(rng.integers(0, 4))
        a = random_multivector(rng, range(5), da)
        b = random_multivector(rng, range(5), db)
        g = int(rng.integers(0, 5))
        lhs = left_derivative(multiply(a, b), g)
        rhs = multiply(left_derivative(a, g), b) + multiply(a, left_derivative(b, g)) * (-1) ** da
        if lhs != rhs:
            failures["leibniz"] += 1
        c = random_multivector(rng, range(5), density=0.4)
        if multiply(multiply(a, b), c) != multiply(a, multiply(b, c)):
            failures["associativity"] += 1
        v = multiply(a, c)
        if Multivector(v.terms) != v or any(coef == 0 for coef in v.terms.values()):
            failures["canonical"] += 1
    return failures
