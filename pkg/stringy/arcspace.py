"""
Arc-space volumes in Z[tau^(+-1)][theta^Q].

Volumes of cylinder sets are E-polynomials under the substitution
u -> tau/theta, v -> 1/(tau theta), normalized by theta^(2n) for an
n-dimensional space. Closed forms of convergent series are ArcFractions:
numerators in w = theta^(1/M), denominators products of cyclotomic
polynomials in w, reduced with the same exact division as StringyFraction.
"""
import logging
from fractions import Fraction
from functools import total_ordering
from math import lcm
from typing import Mapping

from stringy.errors import NotIntegrable
from stringy.exactring import (
    CyclotomicMultiset,
    EPolynomial,
    Groups,
    Poly,
    StringyFraction,
    _poly_add,
    _poly_mul,
    _series_div,
    as_rational,
    cyclotomic_factors,
    lift_groups,
    reduce_root,
)
from stringy.resolution import Kind, StratifiedResolutionData, StringyResult, convert_strata, require_valid_data

logger = logging.getLogger("stringy.arcspace")


class ArcMonomial(tuple):
    """tau^tau_exp theta^theta_exp."""

    __slots__ = ()

    def __new__(cls, tau_exp: int, theta_exp):
        return super().__new__(cls, (int(tau_exp), as_rational(theta_exp)))

    @property
    def tau_exp(self) -> int:
        return self[0]

    @property
    def theta_exp(self) -> Fraction:
        return self[1]


class ArcElement:
    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, Fraction], int] | None = None):
        clean: dict[ArcMonomial, int] = {}
        for (tau, theta), c in (terms or {}).items():
            key = ArcMonomial(tau, theta)
            clean[key] = clean.get(key, 0) + int(c)
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def monomial(cls, tau_exp: int = 0, theta_exp=0, c: int = 1) -> "ArcElement":
        return cls({(tau_exp, as_rational(theta_exp)): c})

    @property
    def terms(self) -> dict[ArcMonomial, int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, ArcElement) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        inner = ", ".join(f"tau^{t} theta^{s}: {c}" for (t, s), c in sorted(self._terms.items()))
        return f"ArcElement({inner})"

    def __add__(self, other: "ArcElement") -> "ArcElement":
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return ArcElement(out)

    def __neg__(self) -> "ArcElement":
        return ArcElement({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "ArcElement") -> "ArcElement":
        return self + (-other)

    def __mul__(self, other) -> "ArcElement":
        if isinstance(other, int):
            return ArcElement({k: c * other for k, c in self._terms.items()})
        out: dict[tuple[int, Fraction], int] = {}
        for (t1, s1), c1 in self._terms.items():
            for (t2, s2), c2 in other._terms.items():
                key = (t1 + t2, s1 + s2)
                out[key] = out.get(key, 0) + c1 * c2
        return ArcElement(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ArcElement":
        out = ArcElement.monomial()
        for _ in range(k):
            out = out * self
        return out

    def theta_shift(self, s) -> "ArcElement":
        s = as_rational(s)
        return ArcElement({(t, e + s): c for (t, e), c in self._terms.items()})

    def root_index(self) -> int:
        return lcm(1, *(e.denominator for _, e in self._terms))


@total_ordering
class LogNorm:
    """
    -log of the norm: ||x|| = exp(-value). The zero element has value
    +infinity, stored as None.
    """

    __slots__ = ("value",)

    def __init__(self, value: Fraction | None):
        self.value = None if value is None else as_rational(value)

    @classmethod
    def infinity(cls) -> "LogNorm":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __eq__(self, other):
        if isinstance(other, LogNorm):
            return self.value == other.value
        if self.value is None:
            return False
        return self.value == other

    def __hash__(self):
        return hash(self.value)

    def __lt__(self, other):
        other = other if isinstance(other, LogNorm) else LogNorm(other)
        if self.value is None:
            return False
        if other.value is None:
            return True
        return self.value < other.value

    def __add__(self, other: "LogNorm") -> "LogNorm":
        if self.value is None or other.value is None:
            return LogNorm.infinity()
        return LogNorm(self.value + other.value)

    def __repr__(self):
        return "LogNorm(+inf)" if self.value is None else f"LogNorm({self.value})"


def theta_lognorm(x: ArcElement) -> LogNorm:
    if x.is_zero():
        return LogNorm.infinity()
    return LogNorm(min(m.theta_exp for m in x.terms))


# ---------------------------------------------------------------------------
# closed forms


def _groups_of(x: ArcElement, M: int) -> Groups:
    groups: Groups = {}
    for (tau, e), c in x.items():
        scaled = e * M
        if scaled.denominator != 1:
            raise ValueError(f"theta^{e} is not a power of theta^(1/{M})")
        poly = groups.setdefault(tau, {})
        poly[int(scaled)] = poly.get(int(scaled), 0) + c
    return {k: {e: c for e, c in p.items() if c} for k, p in groups.items() if any(p.values())}


class ArcFraction:
    """
    num / den with num a Laurent polynomial in tau and w = theta^(1/M),
    den a product of cyclotomic polynomials in w. Always reduced.
    """

    __slots__ = ("M", "_groups", "den")

    def __init__(self, M: int, groups: Groups, den: CyclotomicMultiset | None = None):
        M, groups, den = reduce_root(int(M), groups, den or CyclotomicMultiset())
        self.M = M
        self._groups = groups
        self.den = den

    @classmethod
    def from_element(cls, x: ArcElement) -> "ArcFraction":
        M = x.root_index()
        return cls(M, _groups_of(x, M))

    @property
    def num(self) -> ArcElement:
        return ArcElement(
            {(tau, Fraction(e, self.M)): c for tau, poly in self._groups.items() for e, c in poly.items()}
        )

    def groups(self) -> Groups:
        return {k: dict(p) for k, p in self._groups.items()}

    def lifted(self, k: int) -> tuple[Groups, CyclotomicMultiset]:
        return lift_groups(self._groups, self.den, k)

    def __repr__(self):
        return f"ArcFraction(M={self.M}, num={self.num!r}, den={self.den!r})"

    def _aligned(self, other: "ArcFraction"):
        M = lcm(self.M, other.M)
        return M, self.lifted(M // self.M), other.lifted(M // other.M)

    def __add__(self, other: "ArcFraction") -> "ArcFraction":
        M, (g1, d1), (g2, d2) = self._aligned(other)
        den = d1.lcm(d2)
        out = _scale_groups(g1, (den / d1).polynomial())
        for tau, poly in _scale_groups(g2, (den / d2).polynomial()).items():
            merged = _poly_add(out.get(tau, {}), poly)
            if merged:
                out[tau] = merged
            else:
                out.pop(tau, None)
        return ArcFraction(M, out, den)

    def __mul__(self, other: "ArcFraction") -> "ArcFraction":
        M, (g1, d1), (g2, d2) = self._aligned(other)
        out: Groups = {}
        for t1, p1 in g1.items():
            for t2, p2 in g2.items():
                merged = _poly_add(out.get(t1 + t2, {}), _poly_mul(p1, p2))
                if merged:
                    out[t1 + t2] = merged
                else:
                    out.pop(t1 + t2, None)
        return ArcFraction(M, out, d1 * d2)

    def __eq__(self, other):
        if not isinstance(other, ArcFraction):
            return NotImplemented
        return self.M == other.M and self._groups == other._groups and self.den == other.den

    def __hash__(self):
        return hash((self.M, frozenset((k, frozenset(p.items())) for k, p in self._groups.items()), self.den))

    def is_zero(self) -> bool:
        return not self._groups

    def lognorm(self) -> LogNorm:
        # cyclotomic polynomials have a unit constant term, so only num counts
        return theta_lognorm(self.num)


def _scale_groups(groups: Groups, poly: Poly) -> Groups:
    return {k: _poly_mul(p, poly) for k, p in groups.items()}


def _substitute(E: EPolynomial, M: int) -> Groups:
    # u^p v^q -> tau^(p - q) theta^(-(p + q)), in powers of w = theta^(1/M)
    groups: Groups = {}
    for (p, q), c in E.items():
        poly = groups.setdefault(p - q, {})
        e = -(p + q) * M
        poly[e] = poly.get(e, 0) + c
    return {k: {e: c for e, c in p.items() if c} for k, p in groups.items() if any(p.values())}


def cylinder_volume(B: EPolynomial, l: int, n: int) -> ArcElement:
    volume = ArcElement({(p - q, Fraction(-(p + q))): c for (p, q), c in B.items()})
    return volume.theta_shift(2 * n * (l + 1))


def whole_space_volume(E: EPolynomial, n: int) -> ArcElement:
    return cylinder_volume(E, 0, n)


def jacobian_transport(vol: ArcElement, k: int) -> ArcElement:
    return vol.theta_shift(2 * k)


def _divisor_factor(a: Fraction, M: int) -> ArcFraction:
    # (theta^-2 - 1) theta^(2(1+a)) / (1 - theta^(2(1+a)))
    b = int(2 * (1 + a) * M)
    top = _poly_add({b - 2 * M: 1}, {b: -1})
    # 1 - theta^b = -(w^b - 1)
    return ArcFraction(M, {0: {e: -c for e, c in top.items()}}, cyclotomic_factors(2 * (1 + a), M))


def motivic_integral_nc(data: StratifiedResolutionData, n: int) -> ArcFraction:
    """
    Integral of exp(-F_D) over the arc space of the resolution, as the sum
    over strata of the per-divisor geometric series in closed form.
    """
    for div in data.divisors:
        if div.a <= -1:
            raise NotIntegrable(f"discrepancy {div.a} of {div.name} is not > -1", discrepancy=div.a)
    data = require_valid_data(data)
    if data.kind == Kind.CLOSED:
        data = convert_strata(data, Kind.OPEN)
    a = data.discrepancies()
    M = lcm(1, *((2 * (1 + x)).denominator for x in a))
    total = ArcFraction(M, {})
    factors = {j: _divisor_factor(x, M) for j, x in enumerate(a)}
    for J, E in sorted(data.strata_map().items(), key=lambda item: (len(item[0]), item[0])):
        groups = _substitute(E, M)
        term = ArcFraction(M, {t: {e + 2 * n * M: c for e, c in p.items()} for t, p in groups.items()})
        for j in J:
            term = term * factors[j]
        total = total + term
    logger.debug("motivic integral", extra={"data": data.name, "root_index": total.M, "strata": len(data.strata)})
    return total


def from_stringy(result: StringyResult | StringyFraction, n: int) -> ArcFraction:
    """
    u -> tau/theta, v -> 1/(tau theta), so uv -> theta^-2 and z -> w^-2 with
    w = theta^(1/N), then times theta^(2n).
    """
    f = result.fraction if isinstance(result, StringyResult) else result
    M = f.N
    groups: Groups = {}
    for (a, b, c), coeff in f.num.items():
        poly = groups.setdefault(a - b, {})
        e = -M * (a + b) - 2 * c + 2 * n * M
        poly[e] = poly.get(e, 0) + coeff
    # D(w^-2) = sign * w^-deg * D'(w) with D' the cyclotomic factors of D(w^2)
    lifted = f.den.lifted(2)
    deg = lifted.degree()
    sign = -1 if lifted.factors.get(1, 0) % 2 else 1
    groups = {k: {e + deg: sign * c for e, c in p.items() if c} for k, p in groups.items()}
    return ArcFraction(M, {k: p for k, p in groups.items() if p}, lifted)


def expand_theta(frac: ArcFraction, order: int) -> ArcElement:
    """
    Leading terms of the theta-adic expansion: every term with theta
    exponent below lognorm + order.
    """
    if frac.is_zero() or order <= 0:
        return ArcElement()
    M = frac.M
    groups = frac.groups()
    lo = min(e for p in groups.values() for e in p)
    length = order * M
    den = frac.den.polynomial()
    den_coeffs = [den.get(i, 0) for i in range(max(den) + 1)]
    out: dict[tuple[int, Fraction], int] = {}
    for tau, poly in groups.items():
        num_coeffs = [poly.get(lo + i, 0) for i in range(max(poly) - lo + 1)]
        series = _series_div(num_coeffs, den_coeffs, length - 1)
        for i, c in enumerate(series):
            if c:
                out[(tau, Fraction(lo + i, M))] = int(c)
    return ArcElement(out)
