from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from stringy.errors import InvalidResolutionData, StringyHodgeDoNotExist, Unsupported
from stringy.exactring import CyclotomicMultiset, EPolynomial, StringyFraction, is_polynomial
from stringy.resolution import (
    Kind,
    Ordering,
    StratifiedResolutionData,
    check_duality,
    compare_stringy_euler,
    cone_over_fano,
    convert_strata,
    crepant_data,
    euler_denominator_report,
    projective_space_epolynomial,
    quadric_epolynomial,
    stringy_e,
    stringy_e_closed_form,
    stringy_euler,
    stringy_hodge,
    validate_data,
    verify_resolution_independence,
    virasoro_check,
)


def t_poly(*coeffs) -> EPolynomial:
    return EPolynomial.from_uv(coeffs)


def _data(d, divisors, strata, **extra) -> StratifiedResolutionData:
    return StratifiedResolutionData.model_validate(
        {
            "dim": d,
            "divisors": [{"name": f"D{i}", "a": a} for i, a in enumerate(divisors)],
            "strata": [{"J": J, "E": E.to_triples()} for J, E in strata],
            **extra,
        }
    )


# ---------------------------------------------------------------------------
# the A2 threefold singularity


def test_a2_stringy_e_matches_closed_expression(strata_fixture):
    """Happy path: t^2 (t^3 + t^2 + 2t + 1) / (t^2 + t + 1) with e_st = 5/3."""

    # Arrange
    data = strata_fixture("a2")
    expected = StringyFraction.from_epolynomial(t_poly(0, 0, 1, 2, 1, 1)) * StringyFraction(
        1, EPolynomial.constant(1).to_ring(1), CyclotomicMultiset({3: 1})
    )

    # Act
    result = stringy_e(data)

    # Assert
    assert result.fraction == expected
    assert result.fraction.den == CyclotomicMultiset({3: 1})
    assert result.euler == Fraction(5, 3)
    assert stringy_euler(data) == Fraction(5, 3)


def test_a2_has_no_stringy_hodge_numbers(strata_fixture):

    # Arrange
    result = stringy_e(strata_fixture("a2"))

    # Act / Assert
    with pytest.raises(StringyHodgeDoNotExist) as err:
        stringy_hodge(result)
    assert err.value.denominator == CyclotomicMultiset({3: 1})


def test_a2_closed_and_open_fixtures_agree(strata_fixture):

    # Arrange
    open_data = strata_fixture("a2")
    closed_data = strata_fixture("a2_closed")

    # Act / Assert
    assert convert_strata(open_data, Kind.CLOSED).strata_map() == closed_data.strata_map()
    assert stringy_e(closed_data).fraction == stringy_e(open_data).fraction
    assert stringy_e_closed_form(open_data).fraction == stringy_e(open_data).fraction


def test_a2_is_not_self_dual(strata_fixture):
    """Edge case: the affine singularity has no Poincare duality."""
    assert check_duality(stringy_e(strata_fixture("a2"))) is False


# ---------------------------------------------------------------------------
# quadric cones and cones over Fano varieties


@pytest.mark.parametrize(
    "d, euler, polynomial",
    [
        pytest.param(3, Fraction(6), True, id="d3"),
        pytest.param(4, Fraction(16, 3), False, id="d4"),
        pytest.param(5, Fraction(15, 2), False, id="d5"),
        pytest.param(6, Fraction(36, 5), False, id="d6"),
    ],
)
def test_quadric_cone(d, euler, polynomial):

    # Arrange
    E0 = quadric_epolynomial(d - 1)

    # Act
    result = cone_over_fano(E0, d - 1, 1, d)

    # Assert
    assert result.euler == euler
    assert is_polynomial(result.fraction) is polynomial
    assert check_duality(result)


def test_quadric_cone_d3_hodge_numbers(strata_fixture):

    # Arrange
    result = stringy_e(strata_fixture("quadric_cone_d3"))

    # Act
    table = stringy_hodge(result)

    # Assert
    assert result.fraction == StringyFraction.from_epolynomial(t_poly(1, 1) * t_poly(1, 1, 1))
    assert table[(1, 1)] == 2
    assert table[(2, 2)] == 2
    assert table[(0, 0)] == table[(3, 3)] == 1
    assert table.is_symmetric()
    assert table.degree_ok
    assert table.negative_entries == []


@pytest.mark.parametrize(
    "E0, k, l",
    [
        pytest.param(projective_space_epolynomial(2), 3, 1, id="p2-3-1"),
        pytest.param(projective_space_epolynomial(2), 3, 2, id="p2-3-2"),
        pytest.param(projective_space_epolynomial(1), 2, 3, id="p1-2-3"),
        pytest.param(projective_space_epolynomial(3), 4, 3, id="p3-4-3"),
        pytest.param(quadric_epolynomial(2), 2, 1, id="q2-2-1"),
    ],
)
def test_cone_over_fano_closed_form(E0, k, l):

    # Arrange
    d = max(p for p, _ in E0.terms) + 1
    ratio = Fraction(k, l)

    # Act
    result = cone_over_fano(E0, k, l, d)

    # Assert
    expected = StringyFraction.uv_ratio(ratio + 1, ratio) * StringyFraction.from_epolynomial(E0)
    assert result.fraction == expected
    assert result.euler == Fraction(k + l, k) * E0.evaluate(1, 1)


def test_cone_over_fano_fractional_path_has_root_index(strata_fixture):

    # Act
    result = stringy_e(strata_fixture("cone_p1_k2_l3"))

    # Assert
    assert result.fraction.N == 3
    assert result.euler == 5
    assert check_duality(result)


@pytest.mark.parametrize(
    "n, expected",
    [
        pytest.param(1, [1, 1], id="q1-conic"),
        pytest.param(2, [1, 2, 1], id="q2-p1xp1"),
        pytest.param(3, [1, 1, 1, 1], id="q3-odd"),
        pytest.param(4, [1, 1, 2, 1, 1], id="q4-even"),
    ],
)
def test_quadric_epolynomial(n, expected):
    assert quadric_epolynomial(n) == t_poly(*expected)


def test_quadric_of_dimension_zero_is_two_points():
    assert quadric_epolynomial(0) == EPolynomial.constant(2)


# ---------------------------------------------------------------------------
# invariance, duality and Virasoro


def test_resolution_independence_a1_surface(strata_fixture):
    """Happy path: the minimal and an over-blown resolution give the same function."""

    # Arrange
    minimal = strata_fixture("a1_minimal")
    blown = strata_fixture("a1_blown")

    # Act / Assert
    assert verify_resolution_independence(minimal, blown)
    assert stringy_e(minimal).fraction == StringyFraction.from_epolynomial(t_poly(0, 1, 1))


def test_crepant_data_equals_e_polynomial_of_resolution(strata_fixture):

    # Arrange
    data = strata_fixture("p112_resolution")

    # Act
    result = stringy_e(data)

    # Assert
    assert crepant_data(data)
    assert not crepant_data(strata_fixture("p112_blown"))
    assert result.fraction == StringyFraction.from_epolynomial(t_poly(1, 2, 1))


@pytest.mark.parametrize(
    "name",
    [
        pytest.param("p2", id="p2"),
        pytest.param("p2_blowup_point", id="p2-blown-up"),
        pytest.param("k3", id="k3"),
        pytest.param("quintic", id="quintic"),
        pytest.param("quadric_cone_d4", id="quadric-cone-d4"),
        pytest.param("cone_p2_k3_l2", id="cone-fractional"),
    ],
)
def test_duality_on_projective_fixtures(strata_fixture, name):
    assert check_duality(stringy_e(strata_fixture(name)))


@pytest.mark.parametrize(
    "name, dropped",
    [
        pytest.param("p2_blowup_point", (0,), id="p2-blown-up-without-exceptional-curve"),
        pytest.param("p112_blown", (1,), id="p112-without-second-divisor"),
    ],
)
def test_duality_fails_when_a_stratum_is_dropped(strata_fixture, name, dropped):
    """Edge case: losing one stratum breaks duality and leaves a closed stratum that is not self-dual."""

    # Arrange
    data = strata_fixture(name)
    broken = data.model_copy(update={"strata": tuple(r for r in data.strata if r.J != dropped)})

    # Act
    closed = convert_strata(broken, Kind.CLOSED).strata_map()

    # Assert
    assert check_duality(stringy_e(data)) is True
    assert check_duality(stringy_e(broken)) is False
    assert any(E.reversed_dual(broken.d - len(J)) != E for J, E in closed.items())


def test_closed_strata_of_projective_resolution_are_self_dual(strata_fixture):

    # Arrange
    data = strata_fixture("p112_blown")

    # Act
    closed = convert_strata(data, Kind.CLOSED).strata_map()

    # Assert
    for J, E in closed.items():
        assert E.reversed_dual(data.d - len(J)) == E
        assert E.swap() == E


@pytest.mark.parametrize(
    "name, lhs",
    [
        pytest.param("k3", Fraction(4), id="k3"),
        pytest.param("elliptic_curve", Fraction(0), id="elliptic-curve"),
        pytest.param("point", Fraction(0), id="point"),
        pytest.param("quintic", Fraction(-200), id="quintic"),
    ],
)
def test_virasoro_identity_on_calabi_yau(strata_fixture, name, lhs):

    # Act
    check = virasoro_check(stringy_e(strata_fixture(name)))

    # Assert
    assert check.lhs == lhs
    assert check.rhs == lhs
    assert check.equal


def test_virasoro_reported_unequal_off_calabi_yau(strata_fixture):
    """Edge case: P^2 has lhs 2 and rhs 1/2."""

    # Act
    check = virasoro_check(stringy_e(strata_fixture("p2")))

    # Assert
    assert (check.lhs, check.rhs, check.equal) == (Fraction(2), Fraction(1, 2), False)


def test_virasoro_needs_root_index_one(strata_fixture):
    with pytest.raises(Unsupported):
        virasoro_check(stringy_e(strata_fixture("cone_p1_k2_l3")))


def test_hodge_table_reports_negative_entries(caplog, strata_fixture):
    """Edge case: a stratum with coefficient -1 at (1, 1) gives a negative Hodge number."""

    # Arrange
    data = _data(1, [], [((), t_poly(0, -1))], projective=False)

    # Act
    with caplog.at_level("WARNING", logger="stringy.resolution"):
        table = stringy_hodge(stringy_e(data))

    # Assert
    assert table.negative_entries == [(1, 1)]
    assert "negative stringy Hodge numbers" in caplog.text


def test_quintic_hodge_numbers(strata_fixture):

    # Act
    table = stringy_hodge(stringy_e(strata_fixture("quintic")))

    # Assert
    assert table[(2, 1)] == 101
    assert table[(1, 2)] == 101
    assert table[(3, 0)] == 1
    assert table.negative_entries == []


def test_euler_denominator_report(strata_fixture):

    # Act
    a2 = euler_denominator_report(stringy_e(strata_fixture("a2")))
    d4 = euler_denominator_report(stringy_e(strata_fixture("quadric_cone_d4")))

    # Assert
    assert (a2.denominator, a2.threefold_expected, a2.factorial_integral) == (3, True, True)
    assert (d4.denominator, d4.threefold_expected, d4.factorial_integral) == (3, None, True)


def test_compare_stringy_euler(strata_fixture):

    # Arrange
    a2 = stringy_e(strata_fixture("a2"))
    p2 = stringy_e(strata_fixture("p2"))

    # Act / Assert
    assert compare_stringy_euler(a2, p2) == Ordering.LT
    assert compare_stringy_euler(p2, a2) == Ordering.GT
    assert compare_stringy_euler(p2, p2) == Ordering.EQ


# ---------------------------------------------------------------------------
# validation


@pytest.mark.parametrize(
    "divisors, strata, codes, classification",
    [
        pytest.param([0, 1], [((), t_poly(1))], [], "canonical-gorenstein", id="valid-canonical"),
        pytest.param(["1/2"], [((), t_poly(1))], [], "log-terminal", id="valid-log-terminal"),
        pytest.param([-1], [((), t_poly(1))], ["LogTerminalViolation"], "not-log-terminal", id="a-equals-minus-one"),
        pytest.param([0], [((0,), t_poly(1))], ["MissingAmbient"], "canonical-gorenstein", id="missing-ambient"),
        pytest.param([0], [((), t_poly(1)), ((3,), t_poly(1))], ["IndexOutOfRange"], "canonical-gorenstein", id="index-out-of-range"),
        pytest.param([0], [((), t_poly(1)), ((), t_poly(1))], ["DuplicateStratum"], "canonical-gorenstein", id="duplicate-stratum"),
    ],
)
def test_validate_data(divisors, strata, codes, classification):

    # Arrange
    data = _data(1, divisors, strata)

    # Act
    report = validate_data(data)

    # Assert
    assert [d.code for d in report.diagnostics] == codes
    assert report.classification == classification
    assert report.ok is (not codes)


def test_stringy_e_rejects_invalid_data():

    # Arrange
    data = _data(1, [-2], [((), t_poly(1))])

    # Act / Assert
    with pytest.raises(InvalidResolutionData) as err:
        stringy_e(data)
    assert err.value.diagnostics[0].code == "LogTerminalViolation"


@pytest.mark.parametrize(
    "payload",
    [
        pytest.param({"dim": -1}, id="negative-dim"),
        pytest.param({"dim": 1, "divisors": [{"name": "D", "a": "x"}]}, id="bad-rational"),
        pytest.param({"dim": 1, "strata": [{"J": [], "E": [[0, 0]]}]}, id="bad-epolynomial"),
        pytest.param({"dim": 1, "kind": "half-open"}, id="bad-kind"),
    ],
)
def test_strata_model_rejects_malformed(payload):
    with pytest.raises(ValidationError):
        StratifiedResolutionData.model_validate(payload)


def test_empty_divisor_data_echoes_e_polynomial():

    # Arrange
    E = EPolynomial({(0, 0): 1, (1, 0): -1, (0, 1): -1, (1, 1): 1})
    data = _data(1, [], [((), E)])

    # Act
    result = stringy_e(data)

    # Assert
    assert result.fraction == StringyFraction.from_epolynomial(E)
    assert result.euler == 0


def test_strata_round_trip_on_random_data():
    """Property: open -> closed -> open is the identity on random stratified data."""

    # Arrange
    rng = np.random.default_rng(42)

    for _ in range(100):
        r = int(rng.integers(0, 4))
        strata = [((), t_poly(*rng.integers(-3, 4, size=3).tolist()) + t_poly(0, 0, 0, 1))]
        for size in (1, 2):
            for _ in range(int(rng.integers(0, 3))):
                if r >= size:
                    J = tuple(sorted(int(x) for x in rng.choice(r, size=size, replace=False)))
                    strata.append((J, t_poly(*rng.integers(-2, 3, size=2).tolist())))
        merged: dict = {}
        for J, E in strata:
            merged[J] = merged.get(J, EPolynomial()) + E
        data = _data(2, [int(x) for x in rng.integers(0, 3, size=r)], sorted(merged.items()))

        # Act
        there = convert_strata(data, Kind.CLOSED)
        back = convert_strata(there, Kind.OPEN)

        # Assert
        expected = {J: E for J, E in data.strata_map().items() if E or not J}
        assert back.strata_map() == expected
        assert stringy_e(there).fraction == stringy_e(data).fraction
