import logging
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import BaseModel, PositiveInt, ValidationError, field_validator

from stringy import lattice
from stringy.arcspace import (
    ArcFraction,
    expand_theta,
    from_stringy,
    motivic_integral_nc,
    whole_space_volume,
)
from stringy.errors import InvalidInput, NotQGorenstein, StringyError, StringyHodgeDoNotExist
from stringy.exactring import (
    EPolynomial,
    StringyFraction,
    euler_limit,
    format_rational,
    is_polynomial,
    series_expand_u,
)
from stringy.resolution import (
    StratifiedResolutionData,
    StringyResult,
    check_duality,
    cone_over_fano,
    crepant_data,
    euler_denominator_report,
    projective_space_epolynomial,
    quadric_epolynomial,
    require_valid_data,
    stringy_e,
    stringy_e_closed_form,
    stringy_euler,
    stringy_hodge,
    validate_data,
    verify_resolution_independence,
    virasoro_check,
)
from stringy.toricfan import (
    Fan,
    box_points,
    is_complete,
    is_gorenstein,
    require_valid_fan,
    resolution_strata_from_subdivision,
    resolve_fan,
    shed_volume,
    stringy_e_toric,
    subdivision_discrepancies,
    support_function,
    triangulate,
)
from utils.codec import arc_fraction_to_json, epoly_to_json, fraction_to_json
from utils.loaders import list_fixtures, load_fan, load_strata, read_json
from utils.settings import FIXTURES_DIR, OutputFormat

logger = logging.getLogger("stringy.controller")

CHECK_NAMES = (
    "duality",
    "euler",
    "polynomial",
    "gorenstein",
    "shed",
    "virasoro",
    "arc-identity",
    "oracle",
    "crepant",
    "independence",
    "fano",
)

# seed for the triangulation-order permutations of the shed check
ORDER_SEED = 20240601


class Command(str, Enum):
    TORIC = "toric"
    RESOLUTION = "resolution"
    ARC = "arc"
    CHECK = "check"


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"
    REPORTED = "reported"


class RunConfig(BaseModel):
    command: Command
    paths: list[Path] = []
    output: OutputFormat = OutputFormat.TEXT
    box_cap: PositiveInt = 10_000_000
    checks: list[str] = list(CHECK_NAMES)
    dim: int | None = None
    fixtures_dir: Path = FIXTURES_DIR

    @field_validator("paths")
    @classmethod
    def _paths_exist(cls, value: list[Path]) -> list[Path]:
        for path in value:
            if not path.exists():
                raise ValueError(f"Input file not found at {path}")
        return value

    @field_validator("checks")
    @classmethod
    def _known_checks(cls, value: list[str]) -> list[str]:
        unknown = [name for name in value if name not in CHECK_NAMES]
        if unknown:
            raise ValueError(f"unknown checks {unknown}; choose from {list(CHECK_NAMES)}")
        return value


class ReportEntry(BaseModel):
    name: str
    status: Status
    payload: dict[str, Any] = {}


class Report(BaseModel):
    title: str
    entries: list[ReportEntry] = []

    def add(self, name: str, status: Status, **payload) -> ReportEntry:
        entry = ReportEntry(name=name, status=status, payload=payload)
        self.entries.append(entry)
        return entry

    @property
    def failed(self) -> bool:
        return any(entry.status == Status.FAIL for entry in self.entries)


def build_config(**values) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as err:
        messages = "; ".join(e["msg"] for e in err.errors(include_url=False))
        raise InvalidInput(messages) from err


# ---------------------------------------------------------------------------
# shared report entries


def _result_entries(report: Report, result: StringyResult, duality_applies: bool) -> None:
    report.add("E_st", Status.REPORTED, E_st=fraction_to_json(result.fraction))
    report.add("e_st", Status.REPORTED, e_st=format_rational(result.euler))
    try:
        table = stringy_hodge(result)
        report.add(
            "hodge",
            Status.REPORTED,
            exists=True,
            rows=table.rows(),
            negative_entries=[list(k) for k in table.negative_entries],
            degree_ok=table.degree_ok,
        )
    except StringyHodgeDoNotExist as err:
        report.add("hodge", Status.REPORTED, exists=False, reason=err.detail)
    if duality_applies:
        report.add("duality", Status.PASS if check_duality(result) else Status.FAIL)
    else:
        report.add("duality", Status.SKIPPED, reason="neither projective nor complete")


def cmd_toric(config: RunConfig) -> Report:
    """
    E_st of the toric variety of a fan, with its Gorenstein class, shed volume
    and, for complete fans, the duality check.
    """
    fan = require_valid_fan(load_fan(config.paths[0]))
    logger.info("toric", extra={"fan": fan.name, "rays": len(fan.rays), "box_cap": config.box_cap})
    sf = support_function(fan)
    report = Report(title=f"toric {fan.name}")
    report.add(
        "classification",
        Status.REPORTED,
        q_gorenstein=True,
        gorenstein=is_gorenstein(sf),
        root_index=sf.N,
    )
    result = stringy_e_toric(fan, config.box_cap)
    _result_entries(report, result, duality_applies=is_complete(fan))
    volume = shed_volume(fan)
    report.add("shed_volume", Status.PASS if result.euler == volume else Status.FAIL, volume=volume)
    return report


def cmd_resolution(config: RunConfig) -> Report:
    """
    E_st, e_st and stringy Hodge numbers from stratified resolution data.
    """
    data = require_valid_data(load_strata(config.paths[0]))
    logger.info("resolution", extra={"data": data.name, "divisors": len(data.divisors)})
    report = Report(title=f"resolution {data.name}")
    report.add("classification", Status.REPORTED, classification=validate_data(data).classification)
    result = stringy_e(data)
    _result_entries(report, result, duality_applies=data.projective)
    closed = stringy_e_closed_form(data)
    report.add("closed_form", Status.PASS if closed.fraction == result.fraction else Status.FAIL)
    denominators = euler_denominator_report(result)
    if denominators.threefold_expected is False:
        logger.warning("unexpected stringy Euler denominator", extra={"data": data.name, "denominator": denominators.denominator})
    report.add(
        "denominator",
        Status.REPORTED,
        denominator=denominators.denominator,
        threefold_expected=denominators.threefold_expected,
        factorial_integral=denominators.factorial_integral,
    )
    return report


def cmd_arc(config: RunConfig) -> Report:
    """
    Motivic integral over the arc space in closed form, compared with E_st
    after substitution.
    """
    data = load_strata(config.paths[0])
    n = config.dim if config.dim is not None else data.d
    logger.info("arc", extra={"data": data.name, "dim": n})
    integral = motivic_integral_nc(data, n)
    report = Report(title=f"arc {data.name}")
    report.add("integral", Status.REPORTED, integral=arc_fraction_to_json(integral))
    norm = integral.lognorm()
    report.add("lognorm", Status.REPORTED, value="inf" if norm.is_infinite else format_rational(norm.value))
    leading = ArcFraction.from_element(expand_theta(integral, 2))
    report.add("leading_terms", Status.REPORTED, terms=arc_fraction_to_json(leading))
    if not data.divisors:
        E = data.strata_map().get((), EPolynomial())
        volume = ArcFraction.from_element(whole_space_volume(E, n))
        report.add("whole_space_volume", Status.REPORTED, volume=arc_fraction_to_json(volume))
    identity = from_stringy(stringy_e(data), n) == integral
    report.add("arc-identity", Status.PASS if identity else Status.FAIL)
    return report


# ---------------------------------------------------------------------------
# check suite


class Corpus:
    """Fixture corpus with results computed once per check run."""

    def __init__(self, root: Path, box_cap: int):
        self.root = Path(root)
        self.box_cap = box_cap

    @cached_property
    def fans(self) -> dict[str, tuple[Fan, dict]]:
        out = {}
        for path in list_fixtures("fans", self.root):
            out[path.stem] = (require_valid_fan(load_fan(path)), read_json(path).get("expect", {}))
        return out

    @cached_property
    def strata(self) -> dict[str, tuple[StratifiedResolutionData, dict]]:
        out = {}
        for path in list_fixtures("strata", self.root):
            out[path.stem] = (load_strata(path), read_json(path).get("expect", {}))
        return out

    @cached_property
    def refinements(self) -> dict[str, tuple[Fan, Fan, dict]]:
        out = {}
        for path in list_fixtures("refinements", self.root):
            raw = read_json(path)
            fan = self.fans[raw["fan"]][0]
            subfan = require_valid_fan(Fan.model_validate({"name": path.stem, **raw["subfan"]}))
            out[path.stem] = (fan, subfan, raw.get("expect", {}))
        return out

    @cached_property
    def toric_results(self) -> dict[str, StringyResult | NotQGorenstein]:
        out = {}
        for name, (fan, _) in self.fans.items():
            try:
                out[name] = stringy_e_toric(fan, self.box_cap)
            except NotQGorenstein as err:
                out[name] = err
        return out

    def q_gorenstein_fans(self):
        for name, (fan, expect) in self.fans.items():
            result = self.toric_results[name]
            if isinstance(result, StringyResult):
                yield name, fan, result, expect

    @cached_property
    def strata_results(self) -> dict[str, StringyResult]:
        return {name: stringy_e(data) for name, (data, _) in self.strata.items()}


def _tally(name: str, cases: list[tuple[str, bool]], **extra) -> ReportEntry:
    failures = [case for case, ok in cases if not ok]
    if not cases:
        status = Status.SKIPPED
    else:
        status = Status.FAIL if failures else Status.PASS
    if failures:
        logger.warning("check failed", extra={"check": name, "failures": failures})
    return ReportEntry(name=name, status=status, payload={"cases": len(cases), "failures": failures, **extra})


def _guarded(case: str, test: Callable[[], bool]) -> tuple[str, bool]:
    try:
        return case, bool(test())
    except StringyError as err:
        logger.warning("check case raised", extra={"case": case, "error": err.detail})
        return case, False


def check_duality_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, (data, _) in corpus.strata.items():
        if data.projective:
            cases.append(_guarded(f"strata/{name}", lambda n=name: check_duality(corpus.strata_results[n])))
    for name, fan, result, _ in corpus.q_gorenstein_fans():
        if is_complete(fan):
            cases.append(_guarded(f"fans/{name}", lambda r=result: check_duality(r)))
    return _tally("duality", cases)


def check_euler_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, (data, expect) in corpus.strata.items():
        def test(n=name, d=data, e=expect):
            result = corpus.strata_results[n]
            limit = euler_limit(result.sum)
            ok = series_expand_u(result.fraction, 0)[0] == limit == stringy_euler(d)
            if "e_st" in e:
                ok = ok and limit == Fraction(e["e_st"])
            return ok
        cases.append(_guarded(f"strata/{name}", test))
    for name, _, result, _ in corpus.q_gorenstein_fans():
        cases.append(_guarded(f"fans/{name}", lambda r=result: r.euler.denominator == 1))
    return _tally("euler", cases)


def check_polynomial_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, fan, result, _ in corpus.q_gorenstein_fans():
        def test(f=fan, r=result):
            fraction = r.fraction
            pure = not fraction.den and all(a == 0 and b == 0 for (a, b, _), _ in fraction.num.items())
            if is_gorenstein(support_function(f)):
                return pure and is_polynomial(fraction)
            return pure
        cases.append(_guarded(f"fans/{name}", test))
    for name, (_, expect) in corpus.strata.items():
        if "polynomial" in expect:
            cases.append(
                _guarded(f"strata/{name}", lambda n=name, e=expect: is_polynomial(corpus.strata_results[n].fraction) == e["polynomial"])
            )
    return _tally("polynomial", cases)


def check_gorenstein_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, (fan, expect) in corpus.fans.items():
        def test(f=fan, e=expect):
            try:
                sf = support_function(f)
            except NotQGorenstein:
                return e.get("q_gorenstein", True) is False
            return e.get("q_gorenstein", True) and is_gorenstein(sf) == e.get("gorenstein", is_gorenstein(sf))
        cases.append(_guarded(f"fans/{name}", test))
    return _tally("gorenstein", cases)


def check_shed_suite(corpus: Corpus) -> ReportEntry:
    rng = np.random.default_rng(ORDER_SEED)
    cases = []
    for name, fan, result, expect in corpus.q_gorenstein_fans():
        def test(f=fan, r=result, e=expect):
            volume = shed_volume(f)
            tri = triangulate(f)
            boxed = sum(box_points(tri, c, corpus.box_cap).index for c in tri.max_cones if len(c) == f.d)
            ok = r.euler == volume == boxed and volume == e.get("volume", volume)
            if not f.is_simplicial():
                for _ in range(3):
                    order = [int(i) for i in rng.permutation(len(f.rays))]
                    ok = ok and stringy_e_toric(triangulate(f, order), corpus.box_cap).fraction == r.fraction
            return ok
        cases.append(_guarded(f"fans/{name}", test))
    return _tally("shed", cases)


def check_virasoro_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    reported = {}
    for name, (data, _) in corpus.strata.items():
        result = corpus.strata_results[name]
        if data.calabi_yau:
            cases.append(_guarded(f"strata/{name}", lambda r=result: virasoro_check(r).equal))
        elif result.fraction.N == 1 and data.projective:
            check = virasoro_check(result)
            reported[name] = {"lhs": format_rational(check.lhs), "rhs": format_rational(check.rhs)}
    return _tally("virasoro", cases, reported=reported)


def check_arc_identity_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, (data, _) in corpus.strata.items():
        cases.append(
            _guarded(
                f"strata/{name}",
                lambda d=data, n=name: motivic_integral_nc(d, d.d) == from_stringy(corpus.strata_results[n], d.d),
            )
        )
    return _tally("arc-identity", cases)


def check_oracle_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, fan, result, _ in corpus.q_gorenstein_fans():
        def test(f=fan, r=result):
            smooth = resolve_fan(f, corpus.box_cap)
            return stringy_e(resolution_strata_from_subdivision(f, smooth)).fraction == r.fraction
        cases.append(_guarded(f"fans/{name}", test))
    for name, (fan, subfan, expect) in corpus.refinements.items():
        if expect.get("smooth"):
            def test(f=fan, s=subfan):
                return stringy_e(resolution_strata_from_subdivision(f, s)).fraction == stringy_e_toric(f, corpus.box_cap).fraction
            cases.append(_guarded(f"refinements/{name}", test))
    return _tally("oracle", cases)


def check_crepant_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for name, (fan, subfan, expect) in corpus.refinements.items():
        if not expect.get("crepant"):
            continue
        def test(f=fan, s=subfan):
            if any(a != 0 for _, a in subdivision_discrepancies(f, s)):
                return False
            return stringy_e_toric(s, corpus.box_cap).fraction == stringy_e_toric(f, corpus.box_cap).fraction
        cases.append(_guarded(f"refinements/{name}", test))
    for name, (data, _) in corpus.strata.items():
        if crepant_data(data):
            def test(d=data, n=name):
                total = sum(d.strata_map().values(), EPolynomial())
                return corpus.strata_results[n].fraction == StringyFraction.from_epolynomial(total)
            cases.append(_guarded(f"strata/{name}", test))
    return _tally("crepant", cases)


def check_independence_suite(corpus: Corpus) -> ReportEntry:
    groups: dict[str, list[str]] = {}
    for name, (data, _) in corpus.strata.items():
        if data.variety:
            groups.setdefault(data.variety, []).append(name)
    cases = []
    for variety, names in sorted(groups.items()):
        first = corpus.strata[names[0]][0]
        for other in names[1:]:
            cases.append(
                _guarded(f"{variety}: {names[0]} ~ {other}", lambda a=first, b=corpus.strata[other][0]: verify_resolution_independence(a, b))
            )
        toric = corpus.toric_results.get(variety)
        if isinstance(toric, StringyResult):
            for member in names:
                cases.append(
                    _guarded(f"{variety}: {member} ~ fans/{variety}", lambda m=member, t=toric: corpus.strata_results[m].fraction == t.fraction)
                )
    return _tally("independence", cases)


# (name, E-polynomial of the Fano base, k, l)
FANO_CASES = (
    ("P2", projective_space_epolynomial(2), 3, 1),
    ("P2", projective_space_epolynomial(2), 1, 1),
    ("P2", projective_space_epolynomial(2), 3, 2),
    ("P1", projective_space_epolynomial(1), 2, 1),
    ("P1", projective_space_epolynomial(1), 2, 3),
    ("Q2", quadric_epolynomial(2), 2, 1),
    ("P3", projective_space_epolynomial(3), 4, 1),
    ("P3", projective_space_epolynomial(3), 4, 3),
)


def check_fano_suite(corpus: Corpus) -> ReportEntry:
    cases = []
    for base, E0, k, l in FANO_CASES:
        def test(E0=E0, k=k, l=l):
            d = max(p for p, _ in E0.terms) + 1
            result = cone_over_fano(E0, k, l, d)
            closed = StringyFraction.uv_ratio(Fraction(k, l) + 1, Fraction(k, l)) * StringyFraction.from_epolynomial(E0)
            euler = Fraction(k + l, k) * E0.evaluate(1, 1)
            return result.fraction == closed and result.euler == euler and check_duality(result)
        cases.append(_guarded(f"cone over {base}, k/l = {k}/{l}", test))
    return _tally("fano", cases)


CHECKS: dict[str, Callable[[Corpus], ReportEntry]] = {
    "duality": check_duality_suite,
    "euler": check_euler_suite,
    "polynomial": check_polynomial_suite,
    "gorenstein": check_gorenstein_suite,
    "shed": check_shed_suite,
    "virasoro": check_virasoro_suite,
    "arc-identity": check_arc_identity_suite,
    "oracle": check_oracle_suite,
    "crepant": check_crepant_suite,
    "independence": check_independence_suite,
    "fano": check_fano_suite,
}


def cmd_check(config: RunConfig) -> Report:
    """
    Run the named verification suites over the fixture corpus, one report
    entry per suite.
    """
    corpus = Corpus(config.fixtures_dir, config.box_cap)
    report = Report(title="check")
    for name in config.checks:
        logger.info("running check", extra={"check": name})
        report.entries.append(CHECKS[name](corpus))
    return report


def run(config: RunConfig) -> Report:
    handlers = {
        Command.TORIC: cmd_toric,
        Command.RESOLUTION: cmd_resolution,
        Command.ARC: cmd_arc,
        Command.CHECK: cmd_check,
    }
    return handlers[config.command](config)
