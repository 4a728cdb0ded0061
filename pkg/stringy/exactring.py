"""
Exact arithmetic for E-polynomials and stringy rational functions.

Fractional powers of uv are carried by one auxiliary variable z with the
relation uv = z^N (N is the root index). Every monomial u^a v^b z^c is kept
in normal form min(a, b) = 0, so that the ring Z[u, v, z]/(uv - z^N) is a
free Z[z]-module on {u^a} and {v^b}. Denominators are products of cyclotomic
polynomials in z, which makes reduction a sequence of exact divisions.
"""
import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Hashable, Iterable, Mapping

import sympy
from sympy import QQ, ZZ, totient
from sympy.ntheory import divisors, factorint
from sympy.polys.densearith import dup_add, dup_div, dup_mul
from sympy.polys.densebasic import dup_strip
from sympy.polys.densetools import dup_revert, dup_shift

from stringy.errors import (
    LogTerminalViolation,
    NotPolynomial,
    PoleError,
    RootIndexError,
    StructuralError,
)

logger = logging.getLogger("stringy.exactring")

_Z = sympy.Symbol("z")

# Laurent polynomial in the root variable: exponent -> nonzero integer
Poly = dict[int, int]
Groups = dict[Hashable, Poly]


def as_rational(value) -> Fraction:
    """
    Accepts ints, Fractions and strings such as "3", "-1/2" or "2/4".
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def format_rational(value: Fraction) -> str:
    value = as_rational(value)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# univariate helpers


@lru_cache(maxsize=None)
def cyclotomic_coeffs(m: int) -> tuple[int, ...]:
    """Coefficients of the m-th cyclotomic polynomial, constant term first."""
    poly = sympy.cyclotomic_poly(m, _Z, polys=True)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def _dense(poly: Poly, lo: int) -> list:
    """Dense ZZ coefficients of z^-lo * poly, leading coefficient first."""
    return dup_strip([ZZ(poly.get(e, 0)) for e in range(max(poly), lo - 1, -1)])


def _laurent(f: list, lo: int) -> Poly:
    top = lo + len(f) - 1
    return {top - i: int(c) for i, c in enumerate(f) if c}


def _poly_add(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return dict(p or q)
    lo = min(min(p), min(q))
    return _laurent(dup_add(_dense(p, lo), _dense(q, lo), ZZ), lo)


def _poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return {}
    lo_p, lo_q = min(p), min(q)
    return _laurent(dup_mul(_dense(p, lo_p), _dense(q, lo_q), ZZ), lo_p + lo_q)


def _poly_from_coeffs(coeffs: Iterable[int]) -> Poly:
    return {i: c for i, c in enumerate(coeffs) if c}


def _divide_exact(poly: Poly, divisor: tuple[int, ...]) -> Poly | None:
    """
    Exact division of a Laurent polynomial by a monic polynomial whose
    constant term is nonzero (given constant term first). Returns None when
    the remainder is nonzero.
    """
    if not poly:
        return {}
    lo = min(poly)
    quotient, remainder = dup_div(_dense(poly, lo), dup_strip([ZZ(c) for c in reversed(divisor)]), ZZ)
    if remainder:
        return None
    return _laurent(quotient, lo)


def _divide_groups(groups: Groups, divisor: tuple[int, ...]) -> Groups | None:
    out: Groups = {}
    for key, poly in groups.items():
        q = _divide_exact(poly, divisor)
        if q is None:
            return None
        if q:
            out[key] = q
    return out


# ---------------------------------------------------------------------------
# cyclotomic multisets


class CyclotomicMultiset:
    """
    Product of cyclotomic polynomials Phi_m(z)^mult; the empty multiset is 1.
    """

    __slots__ = ("_factors",)

    def __init__(self, factors: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = factors.items() if isinstance(factors, Mapping) else factors
        merged: Counter = Counter()
        for m, mult in items:
            if m < 1:
                raise ValueError(f"cyclotomic index must be positive, got {m}")
            merged[int(m)] += int(mult)
        if any(v < 0 for v in merged.values()):
            raise ValueError("negative multiplicity in cyclotomic multiset")
        self._factors = tuple(sorted((m, v) for m, v in merged.items() if v))

    @property
    def factors(self) -> dict[int, int]:
        return dict(self._factors)

    def items(self):
        return iter(self._factors)

    def __bool__(self):
        return bool(self._factors)

    def __len__(self):
        return len(self._factors)

    def __eq__(self, other):
        return isinstance(other, CyclotomicMultiset) and self._factors == other._factors

    def __hash__(self):
        return hash(self._factors)

    def __repr__(self):
        inner = ", ".join(f"Phi{m}^{e}" if e > 1 else f"Phi{m}" for m, e in self._factors)
        return f"CyclotomicMultiset({inner})"

    def __mul__(self, other: "CyclotomicMultiset") -> "CyclotomicMultiset":
        merged = Counter(self.factors)
        merged.update(other.factors)
        return CyclotomicMultiset(merged)

    def lcm(self, other: "CyclotomicMultiset") -> "CyclotomicMultiset":
        merged = dict(self.factors)
        for m, e in other.items():
            merged[m] = max(merged.get(m, 0), e)
        return CyclotomicMultiset(merged)

    def __truediv__(self, other: "CyclotomicMultiset") -> "CyclotomicMultiset":
        merged = Counter(self.factors)
        for m, e in other.items():
            if merged[m] < e:
                raise ValueError(f"Phi{m}^{e} does not divide {self!r}")
            merged[m] -= e
        return CyclotomicMultiset(merged)

    def degree(self) -> int:
        return sum(int(totient(m)) * e for m, e in self._factors)

    def polynomial(self) -> Poly:
        out: Poly = {0: 1}
        for m, e in self._factors:
            phi = _poly_from_coeffs(cyclotomic_coeffs(m))
            for _ in range(e):
                out = _poly_mul(out, phi)
        return out

    def evaluate(self, z0: Fraction) -> Fraction:
        value = Fraction(1)
        for m, e in self._factors:
            value *= _eval_poly(_poly_from_coeffs(cyclotomic_coeffs(m)), z0) ** e
        return value

    def lifted(self, k: int) -> "CyclotomicMultiset":
        """Factors of the same product after substituting z -> z^k."""
        merged: Counter = Counter()
        for m, e in self._factors:
            for mm, mult in _lift_cyclotomic(m, k).items():
                merged[mm] += mult * e
        return CyclotomicMultiset(merged)


def _lift_cyclotomic(m: int, k: int) -> Counter:
    # Phi_m(x^p) = Phi_mp(x) if p | m, else Phi_mp(x) Phi_m(x)
    result = Counter({m: 1})
    for p, e in factorint(k).items():
        for _ in range(e):
            nxt: Counter = Counter()
            for mm, mult in result.items():
                nxt[mm * p] += mult
                if mm % p:
                    nxt[mm] += mult
            result = nxt
    return result


def _eval_poly(poly: Poly, x: Fraction) -> Fraction:
    total = Fraction(0)
    for e, c in poly.items():
        if e < 0 and x == 0:
            raise PoleError("negative power evaluated at zero")
        total += c * Fraction(x) ** e
    return total


def cyclotomic_factors(b, N: int) -> CyclotomicMultiset:
    """
    Factorization of z^(N*b) - 1 into cyclotomic polynomials, i.e. the
    denominator (uv)^b - 1 written in z = (uv)^(1/N).
    """
    b = as_rational(b)
    exponent = b * N
    if exponent.denominator != 1 or exponent <= 0:
        raise RootIndexError(f"root index {N} too small for exponent {b}")
    return CyclotomicMultiset({m: 1 for m in divisors(int(exponent))})


# ---------------------------------------------------------------------------
# E-polynomials


class EPolynomial:
    """
    Integer polynomial in u, v: the Hodge-Deligne generating function.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, int], int] | None = None):
        clean: dict[tuple[int, int], int] = {}
        for (p, q), c in (terms or {}).items():
            if p < 0 or q < 0:
                raise ValueError(f"negative exponent in E-polynomial term {(p, q)}")
            if c:
                clean[(int(p), int(q))] = clean.get((int(p), int(q)), 0) + int(c)
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def from_uv(cls, coeffs: Iterable[int]) -> "EPolynomial":
        """Polynomial in t = uv given by its coefficients, constant first."""
        return cls({(i, i): c for i, c in enumerate(coeffs) if c})

    @classmethod
    def constant(cls, c: int) -> "EPolynomial":
        return cls({(0, 0): c})

    @classmethod
    def from_triples(cls, value) -> "EPolynomial":
        """Reads [[p, q, coeff], ...]; EPolynomial instances pass through."""
        if isinstance(value, EPolynomial):
            return value
        if not isinstance(value, (list, tuple)):
            raise ValueError(f"E-polynomial must be a list of terms, got {value!r}")
        terms: dict[tuple[int, int], int] = {}
        for entry in value:
            well_formed = isinstance(entry, (list, tuple)) and len(entry) == 3
            if not well_formed or not all(isinstance(x, int) and not isinstance(x, bool) for x in entry):
                raise ValueError(f"E-polynomial term must be [p, q, coeff] integers, got {entry!r}")
            p, q, c = entry
            terms[(p, q)] = terms.get((p, q), 0) + c
        return cls(terms)

    def to_triples(self) -> list[list[int]]:
        return [[p, q, c] for (p, q), c in sorted(self._terms.items())]

    @property
    def terms(self) -> dict[tuple[int, int], int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, EPolynomial) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"EPolynomial({dict(sorted(self._terms.items()))})"

    def __add__(self, other: "EPolynomial") -> "EPolynomial":
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return EPolynomial(out)

    def __neg__(self) -> "EPolynomial":
        return EPolynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "EPolynomial") -> "EPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "EPolynomial":
        if isinstance(other, int):
            return EPolynomial({k: c * other for k, c in self._terms.items()})
        out: dict[tuple[int, int], int] = {}
        for (p1, q1), c1 in self._terms.items():
            for (p2, q2), c2 in other._terms.items():
                key = (p1 + p2, q1 + q2)
                out[key] = out.get(key, 0) + c1 * c2
        return EPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "EPolynomial":
        out = EPolynomial.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def evaluate(self, u0, v0) -> Fraction:
        u0, v0 = Fraction(u0), Fraction(v0)
        return sum((c * u0 ** p * v0 ** q for (p, q), c in self._terms.items()), Fraction(0))

    def total_degree(self) -> int:
        return max((p + q for p, q in self._terms), default=-1)

    def uv_degree(self) -> int:
        """Largest exponent of uv needed to bound the polynomial: max(p, q)."""
        return max((max(p, q) for p, q in self._terms), default=-1)

    def swap(self) -> "EPolynomial":
        return EPolynomial({(q, p): c for (p, q), c in self._terms.items()})

    def reversed_dual(self, d: int) -> "EPolynomial":
        """(uv)^d E(1/u, 1/v). The constructor rejects the negative exponents left when d < degree."""
        return EPolynomial({(d - p, d - q): c for (p, q), c in self._terms.items()})

    def to_ring(self, N: int) -> "RingElement":
        return RingElement(N, {(p, q, 0): c for (p, q), c in self._terms.items()})


# ---------------------------------------------------------------------------
# the ring Z[u, v, z]/(uv - z^N)


class RingElement:
    __slots__ = ("N", "_terms")

    def __init__(self, N: int, terms: Mapping[tuple[int, int, int], int] | None = None):
        if N < 1:
            raise StructuralError(f"root index must be positive, got {N}")
        self.N = int(N)
        clean: dict[tuple[int, int, int], int] = {}
        for (a, b, c), coeff in (terms or {}).items():
            k = min(a, b)
            key = (a - k, b - k, c + k * self.N)
            clean[key] = clean.get(key, 0) + coeff
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def constant(cls, N: int, c: int = 1) -> "RingElement":
        return cls(N, {(0, 0, 0): c})

    @classmethod
    def from_z_poly(cls, N: int, poly: Poly) -> "RingElement":
        return cls(N, {(0, 0, e): c for e, c in poly.items()})

    @classmethod
    def from_groups(cls, N: int, groups: Groups) -> "RingElement":
        return cls(N, {(a, b, c): coeff for (a, b), poly in groups.items() for c, coeff in poly.items()})

    @property
    def terms(self) -> dict[tuple[int, int, int], int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, RingElement) and self.N == other.N and self._terms == other._terms

    def __hash__(self):
        return hash((self.N, frozenset(self._terms.items())))

    def __repr__(self):
        return f"RingElement(N={self.N}, {dict(sorted(self._terms.items()))})"

    def _check(self, other: "RingElement"):
        if self.N != other.N:
            raise StructuralError(f"root index mismatch: {self.N} != {other.N}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return RingElement(self.N, out)

    def __neg__(self) -> "RingElement":
        return RingElement(self.N, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other) -> "RingElement":
        if isinstance(other, int):
            return RingElement(self.N, {k: c * other for k, c in self._terms.items()})
        self._check(other)
        out: dict[tuple[int, int, int], int] = {}
        for (a1, b1, c1), x in self._terms.items():
            for (a2, b2, c2), y in other._terms.items():
                a, b, c = a1 + a2, b1 + b2, c1 + c2
                k = min(a, b)
                key = (a - k, b - k, c + k * self.N)
                out[key] = out.get(key, 0) + x * y
        return RingElement(self.N, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "RingElement":
        out = RingElement.constant(self.N)
        for _ in range(k):
            out = out * self
        return out

    def groups(self) -> Groups:
        out: Groups = {}
        for (a, b, c), coeff in self._terms.items():
            out.setdefault((a, b), {})[c] = coeff
        return out

    def lifted(self, k: int) -> "RingElement":
        return RingElement(self.N * k, {(a, b, c * k): coeff for (a, b, c), coeff in self._terms.items()})


def ring_multiply(x: RingElement, y: RingElement) -> RingElement:
    return x * y


# ---------------------------------------------------------------------------
# generic reduction over a root variable


def _cancel(groups: Groups, den: CyclotomicMultiset) -> tuple[Groups, CyclotomicMultiset]:
    remaining = Counter(den.factors)
    for m in sorted(remaining):
        divisor = cyclotomic_coeffs(m)
        while remaining[m] and groups:
            q = _divide_groups(groups, divisor)
            if q is None:
                break
            groups = q
            remaining[m] -= 1
    if not groups:
        return {}, CyclotomicMultiset()
    return groups, CyclotomicMultiset(remaining)


def _descend_once(groups: Groups, den: CyclotomicMultiset, p: int) -> tuple[Groups, CyclotomicMultiset] | None:
    if any(e % p for poly in groups.values() for e in poly):
        return None
    dpoly = den.polynomial()
    if any(e % p for e in dpoly):
        return None
    rest = {e // p: c for e, c in dpoly.items()}
    candidates = sorted({m // p if m % p == 0 else m for m, _ in den.items()})
    factors: Counter = Counter()
    for m in candidates:
        divisor = cyclotomic_coeffs(m)
        while True:
            q = _divide_exact(rest, divisor)
            if q is None:
                break
            rest = q
            factors[m] += 1
    if rest != {0: 1}:
        return None
    new_groups = {key: {e // p: c for e, c in poly.items()} for key, poly in groups.items()}
    return new_groups, CyclotomicMultiset(factors)


def reduce_root(root: int, groups: Groups, den: CyclotomicMultiset) -> tuple[int, Groups, CyclotomicMultiset]:
    """
    Cancel cyclotomic factors that divide the numerator and descend to the
    smallest root index representing the same function.
    """
    groups, den = _cancel(groups, den)
    if not groups:
        return 1, {}, CyclotomicMultiset()
    changed = True
    while changed and root > 1:
        changed = False
        for p in sorted(factorint(root)):
            step = _descend_once(groups, den, p)
            if step is not None:
                groups, den = step
                root //= p
                changed = True
                break
    return root, groups, den


def lift_groups(groups: Groups, den: CyclotomicMultiset, k: int) -> tuple[Groups, CyclotomicMultiset]:
    return (
        {key: {e * k: c for e, c in poly.items()} for key, poly in groups.items()},
        den.lifted(k),
    )


# ---------------------------------------------------------------------------
# stringy fractions


class StringyFraction:
    """
    num / den with num in Z[u, v, z]/(uv - z^N) and den a product of
    cyclotomic polynomials in z. Arithmetic results are always reduced.
    """

    __slots__ = ("N", "num", "den")

    def __init__(self, N: int, num: RingElement, den: CyclotomicMultiset | None = None):
        if num.N != N:
            raise StructuralError(f"numerator root index {num.N} differs from {N}")
        self.N = N
        self.num = num
        self.den = den or CyclotomicMultiset()

    @classmethod
    def from_epolynomial(cls, E: EPolynomial, N: int = 1) -> "StringyFraction":
        return cls(N, E.to_ring(N))

    @classmethod
    def constant(cls, c: int = 1) -> "StringyFraction":
        return cls(1, RingElement.constant(1, c))

    @classmethod
    def uv_ratio(cls, num_exponent, den_exponent) -> "StringyFraction":
        """((uv)^num_exponent - 1) / ((uv)^den_exponent - 1), reduced."""
        num_exponent, den_exponent = as_rational(num_exponent), as_rational(den_exponent)
        N = lcm(num_exponent.denominator, den_exponent.denominator)
        top = RingElement.from_z_poly(N, {int(num_exponent * N): 1, 0: -1})
        return reduce_fraction(cls(N, top, cyclotomic_factors(den_exponent, N)))

    def __repr__(self):
        return f"StringyFraction(N={self.N}, num={self.num!r}, den={self.den!r})"

    def lifted(self, k: int) -> "StringyFraction":
        if k == 1:
            return self
        groups, den = lift_groups(self.num.groups(), self.den, k)
        return StringyFraction(self.N * k, RingElement.from_groups(self.N * k, groups), den)

    def _aligned(self, other: "StringyFraction") -> tuple["StringyFraction", "StringyFraction"]:
        N = lcm(self.N, other.N)
        return self.lifted(N // self.N), other.lifted(N // other.N)

    def __add__(self, other: "StringyFraction") -> "StringyFraction":
        f, g = self._aligned(other)
        den = f.den.lcm(g.den)
        fnum = f.num * RingElement.from_z_poly(f.N, (den / f.den).polynomial())
        gnum = g.num * RingElement.from_z_poly(f.N, (den / g.den).polynomial())
        return reduce_fraction(StringyFraction(f.N, fnum + gnum, den))

    def __neg__(self) -> "StringyFraction":
        return StringyFraction(self.N, -self.num, self.den)

    def __sub__(self, other: "StringyFraction") -> "StringyFraction":
        return self + (-other)

    def __mul__(self, other: "StringyFraction") -> "StringyFraction":
        f, g = self._aligned(other)
        return reduce_fraction(StringyFraction(f.N, f.num * g.num, f.den * g.den))

    def __eq__(self, other):
        if not isinstance(other, StringyFraction):
            return NotImplemented
        f, g = reduce_fraction(self), reduce_fraction(other)
        return f.N == g.N and f.num == g.num and f.den == g.den

    def __hash__(self):
        f = reduce_fraction(self)
        return hash((f.N, f.num, f.den))

    def is_zero(self) -> bool:
        return self.num.is_zero()


def reduce_fraction(f: StringyFraction) -> StringyFraction:
    N, groups, den = reduce_root(f.N, f.num.groups(), f.den)
    return StringyFraction(N, RingElement.from_groups(N, groups), den)


def same_function(f: StringyFraction, g: StringyFraction) -> bool:
    """Cross-multiplied equality num_f * den_g == num_g * den_f."""
    f, g = f._aligned(g)
    left = f.num * RingElement.from_z_poly(f.N, g.den.polynomial())
    right = g.num * RingElement.from_z_poly(f.N, f.den.polynomial())
    return left == right


def lift_root_index(f: StringyFraction, N: int) -> StringyFraction:
    if N % f.N:
        raise RootIndexError(f"cannot lift root index {f.N} to {N}")
    return f.lifted(N // f.N)


def is_polynomial(f: StringyFraction) -> bool:
    if f.den:
        return False
    return all(c >= 0 and c % f.N == 0 for (_, _, c), _ in f.num.items())


def as_epolynomial(f: StringyFraction) -> EPolynomial:
    f = reduce_fraction(f)
    if f.den:
        raise NotPolynomial("stringy E-function has a nontrivial denominator", denominator=f.den)
    terms: dict[tuple[int, int], int] = {}
    for (a, b, c), coeff in f.num.items():
        if c < 0 or c % f.N:
            raise NotPolynomial(
                f"residual power z^{c} with root index {f.N}", residual=Fraction(c, f.N)
            )
        k = c // f.N
        terms[(a + k, b + k)] = terms.get((a + k, b + k), 0) + coeff
    return EPolynomial(terms)


def poincare_dual(f: StringyFraction, d: int) -> StringyFraction:
    """(uv)^d f(1/u, 1/v), reduced."""
    N = f.N
    terms: dict[tuple[int, int, int], int] = {}
    for (a, b, c), coeff in f.num.items():
        if a:
            key = (0, a, N * d - c - N * a)
        elif b:
            key = (b, 0, N * d - c - N * b)
        else:
            key = (0, 0, N * d - c)
        terms[key] = terms.get(key, 0) + coeff
    # Phi_m(1/z) = z^-phi(m) Phi_m(z) for m > 1 and -z^-1 Phi_1(z) for m = 1
    shift = f.den.degree()
    sign = -1 if f.den.factors.get(1, 0) % 2 else 1
    num = RingElement(N, terms) * RingElement(N, {(0, 0, shift): sign})
    return reduce_fraction(StringyFraction(N, num, f.den))


def evaluate_at(f: StringyFraction, u0, v0) -> Fraction:
    u0, v0 = Fraction(u0), Fraction(v0)
    t0 = u0 * v0
    if f.N == 1:
        z0 = t0
    elif t0 in (0, 1):
        z0 = t0
    else:
        raise RootIndexError(f"cannot evaluate with root index {f.N} at uv = {t0}")
    den = f.den.evaluate(z0)
    if den == 0:
        raise PoleError(f"denominator vanishes at u={u0}, v={v0}")
    total = Fraction(0)
    for (a, b, c), coeff in f.num.items():
        if c < 0 and z0 == 0:
            raise PoleError(f"z^{c} has a pole at u={u0}, v={v0}")
        total += coeff * u0 ** a * v0 ** b * z0 ** c
    return total / den


# ---------------------------------------------------------------------------
# term sums and limits


class TermSum:
    """
    Unreduced sum over strata: sum of E_J * prod_j (uv - 1)/((uv)^(a_j+1) - 1).
    """

    __slots__ = ("terms", "d")

    def __init__(self, terms: Iterable[tuple[EPolynomial, Iterable]], d: int):
        self.terms: list[tuple[EPolynomial, tuple[Fraction, ...]]] = []
        for E, discrepancies in terms:
            a = tuple(as_rational(x) for x in discrepancies)
            for value in a:
                if value <= -1:
                    raise LogTerminalViolation(f"discrepancy {value} is not > -1", discrepancy=value)
            self.terms.append((E, a))
        self.d = d

    def __repr__(self):
        return f"TermSum(d={self.d}, terms={len(self.terms)})"

    def root_index(self) -> int:
        return lcm(1, *((x + 1).denominator for _, a in self.terms for x in a))


def euler_limit(t: TermSum) -> Fraction:
    total = Fraction(0)
    for E, discrepancies in t.terms:
        weight = Fraction(1)
        for a in discrepancies:
            if a <= -1:
                raise LogTerminalViolation(f"discrepancy {a} is not > -1", discrepancy=a)
            weight /= a + 1
        total += E.evaluate(1, 1) * weight
    return total


def _taylor_at_one(poly: Poly) -> list[int]:
    """Coefficients in eps of poly(1 + eps); poly has nonnegative exponents."""
    shifted = dup_shift(_dense(poly, 0), ZZ.one, ZZ)
    return [int(c) for c in reversed(shifted)]


def _to_qq(series: list) -> list:
    # ascending exact coefficients -> dense QQ, leading coefficient first
    return dup_strip([QQ(int(x.numerator), int(x.denominator)) for x in map(Fraction, reversed(series))])


def _from_qq(f: list, order: int) -> list[Fraction]:
    out = [Fraction(int(c.numerator), int(c.denominator)) for c in reversed(f)][: order + 1]
    return out + [Fraction(0)] * (order + 1 - len(out))


def _series_div(num: list, den: list, order: int) -> list[Fraction]:
    """num / den modulo eps^(order + 1); den must have a nonzero constant term."""
    inverse = dup_revert(_to_qq(den[: order + 1]), order + 1, QQ)
    return _from_qq(dup_mul(_to_qq(num[: order + 1]), inverse, QQ), order)


def _series_mul(x: list[Fraction], y: list[Fraction], order: int) -> list[Fraction]:
    return _from_qq(dup_mul(_to_qq(x[: order + 1]), _to_qq(y[: order + 1]), QQ), order)


def series_expand_u(f: StringyFraction, order: int) -> list[Fraction]:
    """
    Taylor coefficients of f(u, 1) in (u - 1) up to the given order.
    """
    f = reduce_fraction(f)
    N = f.N
    num: Poly = {}
    for (a, _, c), coeff in f.num.items():
        num[N * a + c] = num.get(N * a + c, 0) + coeff
    num = {e: c for e, c in num.items() if c}
    if not num:
        return [Fraction(0)] * (order + 1)
    den = f.den.polynomial()
    shift = max(0, -min(num))
    num_eps = _taylor_at_one({e + shift: c for e, c in num.items()})
    den_eps = _taylor_at_one({e + shift: c for e, c in den.items()})
    k_num = next(i for i, c in enumerate(num_eps) if c)
    k_den = next(i for i, c in enumerate(den_eps) if c)
    if k_den > k_num:
        raise LogTerminalViolation(f"pole of order {k_den - k_num} at u = 1")
    lead = k_num - k_den
    body = _series_div(num_eps[k_num:], den_eps[k_den:], order)
    in_eps = ([Fraction(0)] * lead + body)[: order + 1]
    if N == 1:
        return in_eps
    # z = u^(1/N): eps = (1 + delta)^(1/N) - 1
    r = Fraction(1, N)
    inner = [Fraction(0)]
    coeff = Fraction(1)
    for j in range(1, order + 1):
        coeff = coeff * (r - (j - 1)) / j
        inner.append(coeff)
    out = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order
    for k, s in enumerate(in_eps):
        if k:
            power = _series_mul(power, inner, order)
        if s:
            out = [o + s * p for o, p in zip(out, power)]
    return out
