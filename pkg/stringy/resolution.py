"""
Stringy E-functions from stratified log-resolution data.

The input lists the exceptional divisors D_1..D_r of a log resolution
Y -> X with their discrepancies a_i, and the E-polynomials of the strata
indexed by subsets J of divisors. In open kind the strata are
D_J° = D_J minus the other divisors (with D_∅° = Y \\ D); in closed kind
they are the intersections D_J (with D_∅ = Y).
"""
import logging
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Annotated, NamedTuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator
from sympy.ntheory import divisors

from stringy.errors import (
    InvalidInput,
    InvalidResolutionData,
    NotPolynomial,
    PoleError,
    RootIndexError,
    StringyHodgeDoNotExist,
    Unsupported,
)
from stringy.exactring import (
    CyclotomicMultiset,
    EPolynomial,
    RingElement,
    StringyFraction,
    TermSum,
    as_epolynomial,
    as_rational,
    cyclotomic_factors,
    euler_limit,
    evaluate_at,
    format_rational,
    poincare_dual,
    series_expand_u,
)

logger = logging.getLogger("stringy.resolution")


def _rational_field(value) -> Fraction:
    try:
        return as_rational(value)
    except (TypeError, ZeroDivisionError) as err:
        raise ValueError(str(err)) from err


RationalValue = Annotated[
    Fraction,
    BeforeValidator(_rational_field),
    PlainSerializer(format_rational, return_type=str),
]
EPolyValue = Annotated[
    EPolynomial,
    BeforeValidator(EPolynomial.from_triples),
    PlainSerializer(EPolynomial.to_triples, return_type=list),
]

# threefolds with Gorenstein canonical singularities are expected to have
# e_st with denominator in this set
THREEFOLD_DENOMINATORS = frozenset({1, 2, 3, 4, 6})


class Kind(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


class Ordering(str, Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


def _order(x, y) -> Ordering:
    if x < y:
        return Ordering.LT
    if x > y:
        return Ordering.GT
    return Ordering.EQ


class DivisorRecord(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    a: RationalValue


class StratumRecord(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    J: tuple[int, ...] = ()
    E: EPolyValue

    @field_validator("J", mode="before")
    @classmethod
    def _sorted_subset(cls, value):
        return tuple(sorted(set(int(i) for i in value)))


class StratifiedResolutionData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    name: str = ""
    d: int = Field(alias="dim", ge=0)
    divisors: tuple[DivisorRecord, ...] = ()
    kind: Kind = Kind.OPEN
    strata: tuple[StratumRecord, ...] = ()
    projective: bool = False
    calabi_yau: bool = False
    variety: str = ""

    def strata_map(self) -> dict[tuple[int, ...], EPolynomial]:
        table: dict[tuple[int, ...], EPolynomial] = {}
        for record in self.strata:
            table[record.J] = table.get(record.J, EPolynomial()) + record.E
        return table

    def discrepancies(self) -> list[Fraction]:
        return [div.a for div in self.divisors]


class Diagnostic(BaseModel):
    code: str
    message: str
    subject: str = ""


class DataValidation(BaseModel):
    diagnostics: list[Diagnostic] = []
    classification: str

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class StringyResult:
    """
    Reduced E_st together with the unreduced term sum it came from (None
    for results computed without stratified data) and the dimension.
    """

    __slots__ = ("fraction", "sum", "d")

    def __init__(self, fraction: StringyFraction, sum: TermSum | None, d: int):
        self.fraction = fraction
        self.sum = sum
        self.d = d

    def __repr__(self):
        return f"StringyResult(d={self.d}, fraction={self.fraction!r})"

    @property
    def euler(self) -> Fraction:
        if self.sum is not None:
            return euler_limit(self.sum)
        return series_expand_u(self.fraction, 0)[0]


class HodgeTable:
    __slots__ = ("entries", "d", "negative_entries", "degree_ok")

    def __init__(self, entries: dict[tuple[int, int], int], d: int):
        self.entries = entries
        self.d = d
        self.negative_entries = sorted(k for k, v in entries.items() if v < 0)
        top = max((p + q for (p, q), v in entries.items() if v), default=-1)
        self.degree_ok = top == 2 * d

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self.entries.get(key, 0)

    def is_symmetric(self) -> bool:
        return all(self[(q, p)] == v for (p, q), v in self.entries.items())

    def rows(self) -> list[list[int]]:
        return [[self[(p, q)] for q in range(self.d + 1)] for p in range(self.d + 1)]


class VirasoroCheck(NamedTuple):
    lhs: Fraction
    rhs: Fraction
    equal: bool


class EulerDenominatorReport(NamedTuple):
    euler: Fraction
    denominator: int
    threefold_expected: bool | None
    factorial_integral: bool


# ---------------------------------------------------------------------------
# validation and strata conversion


def _classify(discrepancies: list[Fraction]) -> str:
    if any(a <= -1 for a in discrepancies):
        return "not-log-terminal"
    if all(a >= 0 and a.denominator == 1 for a in discrepancies):
        return "canonical-gorenstein"
    return "log-terminal"


def validate_data(data: StratifiedResolutionData) -> DataValidation:
    diagnostics: list[Diagnostic] = []
    for i, div in enumerate(data.divisors):
        if div.a <= -1:
            diagnostics.append(
                Diagnostic(
                    code="LogTerminalViolation",
                    message=f"discrepancy of {div.name or i} is {format_rational(div.a)}, not > -1",
                    subject=div.name or str(i),
                )
            )
    seen: set[tuple[int, ...]] = set()
    for record in data.strata:
        if record.J in seen:
            diagnostics.append(
                Diagnostic(code="DuplicateStratum", message=f"stratum {list(record.J)} listed twice", subject=str(list(record.J)))
            )
        seen.add(record.J)
        if any(j < 0 or j >= len(data.divisors) for j in record.J):
            diagnostics.append(
                Diagnostic(code="IndexOutOfRange", message=f"stratum {list(record.J)} names an unknown divisor", subject=str(list(record.J)))
            )
    if () not in seen:
        diagnostics.append(Diagnostic(code="MissingAmbient", message="the empty-set stratum is missing"))
    return DataValidation(diagnostics=diagnostics, classification=_classify(data.discrepancies()))


def require_valid_data(data: StratifiedResolutionData) -> StratifiedResolutionData:
    report = validate_data(data)
    if not report.ok:
        codes = ", ".join(sorted({d.code for d in report.diagnostics}))
        raise InvalidResolutionData(f"invalid resolution data {data.name!r}: {codes}", report.diagnostics)
    return data


def _down_closure(keys) -> list[tuple[int, ...]]:
    closure: set[tuple[int, ...]] = set()
    for J in keys:
        for k in range(len(J) + 1):
            closure.update(combinations(J, k))
    return sorted(closure, key=lambda J: (len(J), J))


def convert_strata(data: StratifiedResolutionData, direction: Kind) -> StratifiedResolutionData:
    """
    Moebius inversion on the subset lattice:
    E(D_J) = sum over J' ⊇ J of E(D_J'°), and back with signs.
    """
    direction = Kind(direction)
    if data.kind == direction:
        return data
    table = data.strata_map()
    converted: list[StratumRecord] = []
    for J in _down_closure(table):
        acc = EPolynomial()
        for J2, E in table.items():
            if set(J) <= set(J2):
                sign = (-1) ** (len(J2) - len(J)) if direction == Kind.OPEN else 1
                acc = acc + E * sign
        if acc or not J:
            converted.append(StratumRecord(J=J, E=acc))
    logger.debug("converted strata", extra={"source": data.kind.value, "count": len(converted)})
    return data.model_copy(update={"kind": direction, "strata": tuple(converted)})


# ---------------------------------------------------------------------------
# stringy E-function


def _term_sum(data: StratifiedResolutionData) -> TermSum:
    data = require_valid_data(data)
    if data.kind == Kind.CLOSED:
        data = convert_strata(data, Kind.OPEN)
    a = data.discrepancies()
    table = data.strata_map()
    ordered = sorted(table.items(), key=lambda item: (len(item[0]), item[0]))
    return TermSum([(E, [a[j] for j in J]) for J, E in ordered], data.d)


def _open_term(E: EPolynomial, discrepancies, N: int) -> StringyFraction:
    # prod (z^N - 1) / (z^(N(a+1)) - 1), cancelled at the multiset level first
    top = CyclotomicMultiset({m: len(discrepancies) for m in divisors(N)}) if discrepancies else CyclotomicMultiset()
    bottom = CyclotomicMultiset()
    for a in discrepancies:
        bottom = bottom * cyclotomic_factors(a + 1, N)
    common = CyclotomicMultiset({m: min(e, bottom.factors.get(m, 0)) for m, e in top.items()})
    num = E.to_ring(N) * RingElement.from_z_poly(N, (top / common).polynomial())
    return StringyFraction(N, num, bottom / common)


def _fold(fractions, N: int) -> StringyFraction:
    total = StringyFraction(N, RingElement(N))
    for f in fractions:
        total = total + f
    return total


def stringy_e(data: StratifiedResolutionData) -> StringyResult:
    terms = _term_sum(data)
    N = terms.root_index()
    fraction = _fold((_open_term(E, a, N) for E, a in terms.terms), N)
    logger.debug("stringy E-function", extra={"data": data.name, "terms": len(terms.terms), "root_index": N})
    return StringyResult(fraction, terms, data.d)


def _closed_factor(a: Fraction, N: int) -> StringyFraction:
    # (z^N - z^(N(a+1))) / (z^(N(a+1)) - 1)
    b = int((a + 1) * N)
    poly = {N: 1}
    poly[b] = poly.get(b, 0) - 1
    poly = {e: c for e, c in poly.items() if c}
    return StringyFraction(N, RingElement.from_z_poly(N, poly), cyclotomic_factors(a + 1, N))


def stringy_e_closed_form(data: StratifiedResolutionData) -> StringyResult:
    data = require_valid_data(data)
    terms = _term_sum(data)
    closed = convert_strata(data, Kind.CLOSED) if data.kind == Kind.OPEN else data
    a = closed.discrepancies()
    N = terms.root_index()
    pieces = []
    for J, E in sorted(closed.strata_map().items(), key=lambda item: (len(item[0]), item[0])):
        piece = StringyFraction.from_epolynomial(E, N)
        for j in J:
            piece = piece * _closed_factor(a[j], N)
        pieces.append(piece)
    return StringyResult(_fold(pieces, N), terms, data.d)


def stringy_euler(data: StratifiedResolutionData) -> Fraction:
    return euler_limit(_term_sum(data))


def stringy_hodge(result: StringyResult) -> HodgeTable:
    try:
        E = as_epolynomial(result.fraction)
    except NotPolynomial as err:
        raise StringyHodgeDoNotExist(
            f"stringy Hodge numbers do not exist: {err.detail}",
            denominator=err.denominator,
            residual=err.residual,
        ) from err
    entries = {(p, q): (-1) ** (p + q) * c for (p, q), c in E.items()}
    table = HodgeTable(entries, result.d)
    if table.negative_entries:
        logger.warning("negative stringy Hodge numbers", extra={"entries": table.negative_entries})
    return table


def check_duality(result: StringyResult) -> bool:
    f = result.fraction
    if poincare_dual(f, result.d) != f:
        return False
    try:
        return evaluate_at(f, 0, 0) == 1
    except (PoleError, RootIndexError):
        return False


def cone_over_fano(E0: EPolynomial, k: int, l: int, d: int) -> StringyResult:
    """
    Projective cone over a Fano base X0 embedded by L with L^k = K^(-l):
    the section D has discrepancy k/l - 1 and Y \\ D is a line bundle over X0.
    """
    if k < 1 or l < 1:
        raise InvalidInput(f"k and l must be positive, got k={k}, l={l}")
    data = StratifiedResolutionData(
        name=f"cone(k={k}, l={l})",
        d=d,
        divisors=(DivisorRecord(name="D", a=Fraction(k, l) - 1),),
        kind=Kind.OPEN,
        strata=(
            StratumRecord(J=(), E=E0 * EPolynomial.from_uv([0, 1])),
            StratumRecord(J=(0,), E=E0),
        ),
        projective=True,
    )
    return stringy_e(data)


def virasoro_check(result: StringyResult) -> VirasoroCheck:
    if result.fraction.N != 1:
        raise Unsupported(f"Virasoro identity needs integral discrepancies, root index is {result.fraction.N}")
    coefficients = series_expand_u(result.fraction, 2)
    n = result.d
    lhs = 2 * coefficients[2]
    rhs = Fraction(3 * n * n - 5 * n, 12) * result.euler
    return VirasoroCheck(lhs, rhs, lhs == rhs)


def verify_resolution_independence(data1: StratifiedResolutionData, data2: StratifiedResolutionData) -> bool:
    return stringy_e(data1).fraction == stringy_e(data2).fraction


def crepant_data(data: StratifiedResolutionData) -> bool:
    return all(a == 0 for a in data.discrepancies())


def euler_denominator_report(result: StringyResult) -> EulerDenominatorReport:
    e = result.euler
    expected = e.denominator in THREEFOLD_DENOMINATORS if result.d == 3 else None
    return EulerDenominatorReport(e, e.denominator, expected, (e * factorial(result.d)).denominator == 1)


def compare_stringy_euler(r1: StringyResult, r2: StringyResult) -> Ordering:
    return _order(r1.euler, r2.euler)


def projective_space_epolynomial(n: int) -> EPolynomial:
    return EPolynomial.from_uv([1] * (n + 1))


def quadric_epolynomial(n: int) -> EPolynomial:
    """E-polynomial of a smooth n-dimensional quadric."""
    if n % 2:
        return projective_space_epolynomial(n)
    half = n // 2
    middle = EPolynomial.from_uv([1] + [0] * (half - 1) + [1]) if half else EPolynomial.constant(2)
    return middle * projective_space_epolynomial(half)
