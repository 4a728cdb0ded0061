"""
JSON codecs for the exact values. Emission is sorted and uses "p/q" for
every rational, so parsing an emitted value and re-emitting it gives the
same bytes.
"""
import json
from fractions import Fraction

from stringy.arcspace import ArcElement, ArcFraction
from stringy.errors import InvalidInput
from stringy.exactring import (
    CyclotomicMultiset,
    EPolynomial,
    RingElement,
    StringyFraction,
    as_rational,
    format_rational,
)


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInput(f"{what} must be an integer, got {value!r}")
    return value


def rational_to_json(value: Fraction) -> str:
    return format_rational(value)


def rational_from_json(value) -> Fraction:
    try:
        return as_rational(value)
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise InvalidInput(f"not an exact rational: {value!r}") from err


def epoly_to_json(E: EPolynomial) -> list[list[int]]:
    return E.to_triples()


def epoly_from_json(value) -> EPolynomial:
    try:
        return EPolynomial.from_triples(value)
    except ValueError as err:
        raise InvalidInput(str(err)) from err


def _den_to_json(den: CyclotomicMultiset) -> list[list[int]]:
    return [[m, mult] for m, mult in den.items()]


def _den_from_json(value) -> CyclotomicMultiset:
    try:
        return CyclotomicMultiset([(_int(m, "cyclotomic index"), _int(e, "multiplicity")) for m, e in value])
    except (TypeError, ValueError) as err:
        raise InvalidInput(f"bad denominator {value!r}: {err}") from err


def fraction_to_json(f: StringyFraction) -> dict:
    return {
        "N": f.N,
        "num": [[a, b, c, coeff] for (a, b, c), coeff in sorted(f.num.items())],
        "den": _den_to_json(f.den),
    }


def fraction_from_json(obj: dict) -> StringyFraction:
    try:
        N = _int(obj["N"], "N")
        terms = {}
        for a, b, c, coeff in obj["num"]:
            key = (_int(a, "a"), _int(b, "b"), _int(c, "c"))
            terms[key] = terms.get(key, 0) + _int(coeff, "coefficient")
        den = _den_from_json(obj.get("den", []))
    except (KeyError, TypeError, ValueError) as err:
        raise InvalidInput(f"malformed stringy fraction: {err}") from err
    return StringyFraction(N, RingElement(N, terms), den)


def arc_fraction_to_json(f: ArcFraction) -> dict:
    num = []
    for (tau, theta), coeff in sorted(f.num.items()):
        num.append([tau, theta.numerator, theta.denominator, coeff])
    return {"M": f.M, "num": num, "den": _den_to_json(f.den)}


def arc_fraction_from_json(obj: dict) -> ArcFraction:
    try:
        M = _int(obj["M"], "M")
        num = ArcElement(
            {(_int(t, "tau exponent"), Fraction(_int(p, "theta numerator"), _int(q, "theta denominator"))): c
             for t, p, q, c in obj["num"]}
        )
        den = _den_from_json(obj.get("den", []))
        groups: dict = {}
        for (tau, theta), c in num.items():
            scaled = theta * M
            if scaled.denominator != 1:
                raise ValueError(f"theta^{theta} is not a power of theta^(1/{M})")
            groups.setdefault(tau, {})[int(scaled)] = _int(c, "coefficient")
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as err:
        raise InvalidInput(f"malformed arc fraction: {err}") from err
    return ArcFraction(M, groups, den)


def dumps(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))
