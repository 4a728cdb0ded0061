"""
Toric pipeline: fans, the support function of the canonical class, placing
triangulations, box points of simplicial cones and the stringy E-function
of a Q-Gorenstein toric variety.

All geometry is exact. Cones are described by sorted tuples of ray indices;
facets and face closures are found by enumerating subsets of generators
and solving for the normal in integer arithmetic.
"""
import logging
from functools import cached_property, lru_cache
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import NamedTuple, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stringy import lattice
from stringy.errors import (
    CapExceeded,
    InvalidFan,
    InvalidInput,
    NotARefinement,
    NotQGorenstein,
    NotSmooth,
    Unsupported,
)
from stringy.exactring import EPolynomial, RingElement, StringyFraction, _poly_add, _poly_mul, reduce_fraction
from stringy.resolution import (
    Diagnostic,
    DivisorRecord,
    Kind,
    Ordering,
    StratifiedResolutionData,
    StratumRecord,
    StringyResult,
    _order,
)

logger = logging.getLogger("stringy.toricfan")

DEFAULT_BOX_CAP = 10_000_000

Cone = tuple[int, ...]
LatticeVector = tuple[int, ...]


class Fan(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = ""
    d: int = Field(alias="dim", ge=0)
    rays: tuple[tuple[int, ...], ...] = ()
    max_cones: tuple[tuple[int, ...], ...] = ()

    @field_validator("max_cones", mode="before")
    @classmethod
    def _sorted_cones(cls, value):
        cones = {tuple(sorted(set(int(i) for i in cone))) for cone in value}
        return tuple(sorted(cones, key=lambda c: (len(c), c)))

    @model_validator(mode="after")
    def _ray_lengths(self):
        for ray in self.rays:
            if len(ray) != self.d:
                raise ValueError(f"ray {list(ray)} does not have {self.d} coordinates")
        return self

    def vectors(self, cone: Cone) -> tuple[LatticeVector, ...]:
        return tuple(self.rays[i] for i in cone)

    def geometry(self, cone: Cone) -> "ConeGeometry":
        return _geometry(self.vectors(cone), self.d)

    def dim_of(self, cone: Cone) -> int:
        return self.geometry(cone).rank

    def is_simplicial(self) -> bool:
        return all(len(c) == self.dim_of(c) for c in self.max_cones)

    @cached_property
    def all_cones(self) -> tuple[Cone, ...]:
        """Face closure of the maximal cones, zero cone included."""
        closure: set[Cone] = {()}
        for cone in self.max_cones:
            closure |= _faces_of(self, cone)
        return tuple(sorted(closure, key=lambda c: (len(c), c)))

    def ray_index(self, vector: Sequence[int]) -> int | None:
        try:
            return self.rays.index(tuple(vector))
        except ValueError:
            return None

    def replace(self, **changes) -> "Fan":
        # a fresh instance, so the cached face closure is recomputed
        return Fan(**{**self.model_dump(), **changes})


class ConeGeometry(NamedTuple):
    rank: int
    equalities: tuple[LatticeVector, ...]
    # (positions of generators on the facet, inward normal)
    facets: tuple[tuple[frozenset[int], LatticeVector], ...]

    def normals(self) -> list[LatticeVector]:
        return [n for _, n in self.facets]

    def contains(self, vector: Sequence) -> bool:
        return all(lattice.dot(e, vector) == 0 for e in self.equalities) and all(
            lattice.dot(n, vector) >= 0 for n in self.normals()
        )


class SupportFunction(NamedTuple):
    covectors: dict[Cone, tuple[Fraction, ...]]
    N: int


class BoxData(NamedTuple):
    cone: Cone
    points: list[tuple[LatticeVector, Fraction]]
    index: int


# ---------------------------------------------------------------------------
# cone geometry


@lru_cache(maxsize=8192)
def _geometry(vectors: tuple[LatticeVector, ...], d: int) -> ConeGeometry:
    k = lattice.rank(vectors)
    equalities = tuple(lattice.kernel(vectors, d)) if vectors else tuple(tuple(r) for r in lattice.identity(d))
    facets: dict[frozenset[int], LatticeVector] = {}
    if k >= 1:
        for subset in combinations(range(len(vectors)), k - 1):
            rows = [vectors[i] for i in subset]
            if lattice.rank(rows) != k - 1:
                continue
            normal = lattice.kernel(rows + list(equalities), d)
            if len(normal) != 1:
                continue
            n = normal[0]
            values = [lattice.dot(n, v) for v in vectors]
            if all(x <= 0 for x in values):
                n = tuple(-x for x in n)
                values = [-x for x in values]
            elif not all(x >= 0 for x in values):
                continue
            on = frozenset(i for i, x in enumerate(values) if x == 0)
            facets.setdefault(on, n)
    ordered = tuple(sorted(facets.items(), key=lambda item: sorted(item[0])))
    return ConeGeometry(k, equalities, ordered)


def _faces_of(fan: Fan, cone: Cone) -> set[Cone]:
    out = {cone}
    stack = [cone]
    while stack:
        current = stack.pop()
        for positions, _ in fan.geometry(current).facets:
            face = tuple(sorted(current[i] for i in positions))
            if face not in out:
                out.add(face)
                stack.append(face)
    return out


def _is_pointed(geo: ConeGeometry) -> bool:
    if geo.rank == 0:
        return True
    return lattice.rank(geo.normals()) == geo.rank


def _extremal_positions(geo: ConeGeometry, count: int) -> set[int]:
    out = set()
    for i in range(count):
        through = [n for positions, n in geo.facets if i in positions]
        if lattice.rank(through) == geo.rank - 1:
            out.add(i)
    return out


def _extreme_rays(inequalities: list, equalities: list, d: int) -> list[LatticeVector]:
    """Extreme rays of the pointed cone {x : A x >= 0, B x = 0}."""
    need = d - 1 - lattice.rank(equalities)
    if need < 0:
        return []
    found: set[LatticeVector] = set()
    for subset in combinations(range(len(inequalities)), need):
        rows = list(equalities) + [inequalities[i] for i in subset]
        ker = lattice.kernel(rows, d)
        if len(ker) != 1:
            continue
        x = ker[0]
        for candidate in (x, tuple(-c for c in x)):
            if all(lattice.dot(a, candidate) >= 0 for a in inequalities):
                found.add(candidate)
    return sorted(found)


def _cone_label(fan: Fan, cone: Cone) -> str:
    return str([list(r) for r in fan.vectors(cone)])


def validate_fan(fan: Fan) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []
    for i, ray in enumerate(fan.rays):
        if not any(ray):
            diagnostics.append(Diagnostic(code="NonPrimitiveRay", message="zero ray", subject=str(i)))
        elif lattice.primitive(ray) != tuple(ray):
            diagnostics.append(
                Diagnostic(code="NonPrimitiveRay", message=f"ray {list(ray)} is not primitive", subject=str(i))
            )
    seen: dict[LatticeVector, int] = {}
    for i, ray in enumerate(fan.rays):
        if ray in seen:
            diagnostics.append(
                Diagnostic(code="DuplicateRay", message=f"ray {list(ray)} repeats ray {seen[ray]}", subject=str(i))
            )
        seen.setdefault(ray, i)
    for cone in fan.max_cones:
        if any(i < 0 or i >= len(fan.rays) for i in cone):
            diagnostics.append(
                Diagnostic(code="RayIndexOutOfRange", message=f"cone {list(cone)} names an unknown ray", subject=str(list(cone)))
            )
    if diagnostics:
        return diagnostics

    for cone in fan.max_cones:
        geo = fan.geometry(cone)
        if not _is_pointed(geo):
            diagnostics.append(
                Diagnostic(code="NotPointed", message=f"cone {_cone_label(fan, cone)} contains a line", subject=str(list(cone)))
            )
            continue
        extremal = _extremal_positions(geo, len(cone))
        for pos, ray in enumerate(cone):
            if pos not in extremal:
                diagnostics.append(
                    Diagnostic(
                        code="RedundantRay",
                        message=f"ray {list(fan.rays[ray])} is not extremal in cone {list(cone)}",
                        subject=str(list(cone)),
                    )
                )
    if diagnostics:
        return diagnostics

    faces = {cone: _faces_of(fan, cone) for cone in fan.max_cones}
    for sigma, tau in combinations(fan.max_cones, 2):
        shared = tuple(sorted(set(sigma) & set(tau)))
        proper = shared in faces[sigma] and shared in faces[tau]
        if proper:
            gs, gt = fan.geometry(sigma), fan.geometry(tau)
            rays = _extreme_rays(gs.normals() + gt.normals(), list(gs.equalities + gt.equalities), fan.d)
            basis = fan.vectors(shared)
            proper = all(lattice.coordinates(basis, x) is not None for x in rays)
        if not proper:
            diagnostics.append(
                Diagnostic(
                    code="ImproperIntersection",
                    message=f"cones {list(sigma)} and {list(tau)} do not meet in a common face",
                    subject=f"{list(sigma)},{list(tau)}",
                )
            )
    return diagnostics


def require_valid_fan(fan: Fan) -> Fan:
    diagnostics = validate_fan(fan)
    if diagnostics:
        codes = ", ".join(sorted({d.code for d in diagnostics}))
        raise InvalidFan(f"invalid fan {fan.name!r}: {codes}", diagnostics)
    return fan


def is_complete(fan: Fan) -> bool:
    """Pure of full dimension with every wall shared by exactly two cells."""
    if fan.d == 0:
        return True
    if not fan.max_cones:
        return False
    tri = triangulate(fan)
    if any(len(c) != fan.d for c in tri.max_cones):
        return False
    walls: dict[Cone, int] = {}
    for cone in tri.max_cones:
        for wall in combinations(cone, fan.d - 1):
            walls[wall] = walls.get(wall, 0) + 1
    return all(count == 2 for count in walls.values())


# ---------------------------------------------------------------------------
# support function


def _solve_ones(vectors: Sequence[LatticeVector], d: int) -> tuple[Fraction, ...] | None:
    """A covector m with <m, r> = 1 for every r, or None when none exists."""
    if not vectors:
        return tuple(Fraction(0) for _ in range(d))
    S, U, V = lattice.smith_normal_form(vectors)
    c = [sum(row) for row in U]
    r = sum(1 for i in range(min(len(S), d)) if S[i][i])
    if any(c[i] for i in range(r, len(c))):
        return None
    y = [Fraction(c[i], S[i][i]) for i in range(r)] + [Fraction(0)] * (d - r)
    return tuple(sum((V[i][j] * y[j] for j in range(d)), Fraction(0)) for i in range(d))


def support_function(fan: Fan) -> SupportFunction:
    covectors: dict[Cone, tuple[Fraction, ...]] = {}
    for cone in fan.max_cones:
        m = _solve_ones(fan.vectors(cone), fan.d)
        if m is None:
            raise NotQGorenstein(f"no linear function is 1 on every ray of cone {_cone_label(fan, cone)}", cone=list(cone))
        covectors[cone] = m
    N = lcm(1, *(x.denominator for m in covectors.values() for x in m))
    logger.debug("support function", extra={"fan": fan.name, "cones": len(covectors), "root_index": N})
    return SupportFunction(covectors, N)


def is_gorenstein(sf: SupportFunction) -> bool:
    return sf.N == 1


def phi(sf: SupportFunction, fan: Fan, vector: Sequence[int]) -> Fraction:
    for cone in fan.max_cones:
        if fan.geometry(cone).contains(vector):
            return sum((a * b for a, b in zip(sf.covectors[cone], vector)), Fraction(0))
    raise InvalidInput(f"vector {list(vector)} is outside the support of the fan")


# ---------------------------------------------------------------------------
# triangulation


def _place(fan: Fan, sequence: list[int]) -> list[Cone]:
    placed: list[int] = []
    cells: list[Cone] = []
    for r in sequence:
        if not placed:
            placed, cells = [r], [(r,)]
            continue
        vectors = fan.vectors(tuple(placed))
        if lattice.rank(list(vectors) + [fan.rays[r]]) > lattice.rank(vectors):
            cells = [cell + (r,) for cell in cells]
        else:
            geo = _geometry(vectors, fan.d)
            boundary: set[Cone] = set()
            for _, normal in geo.facets:
                if lattice.dot(normal, fan.rays[r]) >= 0:
                    continue
                for cell in cells:
                    for wall in combinations(cell, len(cell) - 1):
                        if all(lattice.dot(normal, fan.rays[i]) == 0 for i in wall):
                            boundary.add(wall)
            cells = cells + [wall + (r,) for wall in sorted(boundary)]
        placed.append(r)
    return [tuple(sorted(cell)) for cell in cells]


def triangulate(fan: Fan, order: Sequence[int] | None = None) -> Fan:
    """
    Placing triangulation on the existing rays. `order` is the placing
    sequence over all rays (ascending index by default).
    """
    if fan.is_simplicial():
        return fan
    rank_of = {r: i for i, r in enumerate(order if order is not None else range(len(fan.rays)))}
    cells: set[Cone] = set()
    for cone in fan.max_cones:
        if len(cone) == fan.dim_of(cone):
            cells.add(cone)
            continue
        cells.update(_place(fan, sorted(cone, key=lambda i: rank_of[i])))
    return fan.replace(max_cones=tuple(sorted(cells, key=lambda c: (len(c), c))))


# ---------------------------------------------------------------------------
# box points


def _parallelepiped(fan: Fan, cone: Cone, cap: int) -> tuple[list[tuple[LatticeVector, tuple[Fraction, ...]]], int]:
    """
    Lattice points sum lambda_j e_j with 0 <= lambda_j < 1 for a simplicial
    cone, as (point, lambda), and the lattice index.
    """
    vectors = fan.vectors(cone)
    if not vectors:
        return [(tuple([0] * fan.d), ())], 1
    index = lattice.lattice_index(vectors)
    if index == 0:
        raise Unsupported(f"cone {_cone_label(fan, cone)} is not simplicial")
    if index > cap:
        raise CapExceeded(
            f"box of cone {_cone_label(fan, cone)} has {index} points, cap is {cap}",
            cone=list(cone),
            index=index,
            cap=cap,
        )
    logger.debug("box enumeration", extra={"cone": list(cone), "index": index, "cap": cap})
    S, U, _ = lattice.smith_normal_form(vectors)
    k = len(vectors)
    moduli = [S[i][i] for i in range(k)]
    points = []
    counters = [0] * k
    while True:
        mu = [Fraction(counters[i], moduli[i]) for i in range(k)]
        lam = [sum((mu[i] * U[i][j] for i in range(k)), Fraction(0)) for j in range(k)]
        lam = tuple(x - (x.numerator // x.denominator) for x in lam)
        point = tuple(int(sum(lam[j] * vectors[j][c] for j in range(k))) for c in range(fan.d))
        points.append((point, lam))
        pos = 0
        while pos < k:
            counters[pos] += 1
            if counters[pos] < moduli[pos]:
                break
            counters[pos] = 0
            pos += 1
        if pos == k:
            break
    return points, index


def box_points(fan: Fan, cone: Cone, cap: int = DEFAULT_BOX_CAP) -> BoxData:
    """
    Half-open box {sum lambda_j e_j : 0 < lambda_j <= 1} of a simplicial
    cone, each point with phi = sum lambda_j.
    """
    raw, index = _parallelepiped(fan, cone, cap)
    vectors = fan.vectors(cone)
    points = []
    for point, lam in raw:
        shift = [1 if x == 0 else 0 for x in lam]
        w = tuple(point[c] + sum(shift[j] * vectors[j][c] for j in range(len(vectors))) for c in range(fan.d))
        points.append((w, sum((x + s for x, s in zip(lam, shift)), Fraction(0))))
    points.sort(key=lambda item: (item[1], item[0]))
    return BoxData(cone, points, index)


# ---------------------------------------------------------------------------
# stringy E-function, E-polynomial and volumes


def stringy_e_toric(fan: Fan, cap: int = DEFAULT_BOX_CAP) -> StringyResult:
    support_function(fan)
    tri = triangulate(fan)
    boxes = [(cone, box_points(tri, cone, cap)) for cone in tri.all_cones]
    N = lcm(1, *(ph.denominator for _, box in boxes for _, ph in box.points))
    edge = {N: 1, 0: -1}
    total: dict[int, int] = {}
    for cone, box in boxes:
        k = len(cone)
        term: dict[int, int] = {}
        for _, ph in box.points:
            term = _poly_add(term, {int(N * (k - ph)): 1})
        for _ in range(fan.d - k):
            term = _poly_mul(term, edge)
        total = _poly_add(total, term)
    fraction = reduce_fraction(StringyFraction(N, RingElement.from_z_poly(N, total)))
    logger.debug("toric stringy E-function", extra={"fan": fan.name, "cones": len(boxes), "root_index": N})
    return StringyResult(fraction, None, fan.d)


def e_polynomial_toric(fan: Fan) -> EPolynomial:
    t_minus_one = EPolynomial.from_uv([-1, 1])
    total = EPolynomial()
    for cone in fan.all_cones:
        total = total + t_minus_one ** (fan.d - fan.dim_of(cone))
    return total


def shed_volume(fan: Fan) -> int:
    support_function(fan)
    tri = triangulate(fan)
    return sum(lattice.lattice_index(tri.vectors(c)) for c in tri.max_cones if len(c) == fan.d)


def compare_flip_volumes(fan1: Fan, fan2: Fan) -> Ordering:
    """
    For a genuine toric flip X --> X' the answer is GT: the shed volume,
    and with it e_st, strictly drops.
    """
    return _order(shed_volume(fan1), shed_volume(fan2))


# ---------------------------------------------------------------------------
# refinements


def _positive_functional(geo: ConeGeometry, d: int) -> tuple[int, ...]:
    return tuple(sum(n[c] for n in geo.normals()) for c in range(d))


def _weighted_volume(vectors, functional) -> Fraction:
    weight = Fraction(1)
    for v in vectors:
        weight *= lattice.dot(functional, v)
    return Fraction(lattice.lattice_index(vectors)) / weight


def _check_refinement(fan: Fan, subfan: Fan):
    if subfan.d != fan.d:
        raise NotARefinement(f"dimension {subfan.d} differs from {fan.d}")
    missing = [list(r) for r in fan.rays if subfan.ray_index(r) is None]
    if missing:
        raise NotARefinement(f"rays {missing} of the fan are missing from the refinement")
    fine = triangulate(subfan)
    owner: dict[Cone, Cone] = {}
    for cell in fine.max_cones:
        host = next((c for c in fan.max_cones if all(fan.geometry(c).contains(v) for v in fine.vectors(cell))), None)
        if host is None:
            raise NotARefinement(f"cone {_cone_label(fine, cell)} lies in no cone of the fan")
        owner[cell] = host
    coarse = triangulate(fan)
    for cone in fan.max_cones:
        geo = fan.geometry(cone)
        if geo.rank != fan.d:
            continue
        ell = _positive_functional(geo, fan.d)
        inside = sum(
            (_weighted_volume(fine.vectors(c), ell) for c, host in owner.items() if host == cone and len(c) == fan.d),
            Fraction(0),
        )
        pieces = [c for c in coarse.max_cones if len(c) == fan.d and set(c) <= set(cone)]
        expected = sum((_weighted_volume(coarse.vectors(c), ell) for c in pieces), Fraction(0))
        if inside != expected:
            raise NotARefinement(f"the refinement does not cover cone {_cone_label(fan, cone)}")


def subdivision_discrepancies(fan: Fan, subfan: Fan) -> list[tuple[LatticeVector, Fraction]]:
    _check_refinement(fan, subfan)
    sf = support_function(fan)
    out = []
    for ray in subfan.rays:
        if fan.ray_index(ray) is None:
            out.append((ray, phi(sf, fan, ray) - 1))
    return out


def resolution_strata_from_subdivision(fan: Fan, smooth_subfan: Fan) -> StratifiedResolutionData:
    for cone in smooth_subfan.max_cones:
        if lattice.lattice_index(smooth_subfan.vectors(cone)) != 1:
            raise NotSmooth(f"cone {_cone_label(smooth_subfan, cone)} is not generated by part of a lattice basis")
    discrepancies = subdivision_discrepancies(fan, smooth_subfan)
    new_index = {smooth_subfan.ray_index(ray): j for j, (ray, _) in enumerate(discrepancies)}
    t_minus_one = EPolynomial.from_uv([-1, 1])
    strata: dict[tuple[int, ...], EPolynomial] = {}
    for cone in smooth_subfan.all_cones:
        J = tuple(sorted(new_index[i] for i in cone if i in new_index))
        strata[J] = strata.get(J, EPolynomial()) + t_minus_one ** (fan.d - len(cone))
    data = StratifiedResolutionData(
        name=f"{fan.name or 'fan'} via {smooth_subfan.name or 'subdivision'}",
        d=fan.d,
        divisors=tuple(DivisorRecord(name=str(list(ray)), a=a) for ray, a in discrepancies),
        kind=Kind.OPEN,
        strata=tuple(StratumRecord(J=J, E=E) for J, E in sorted(strata.items(), key=lambda kv: (len(kv[0]), kv[0]))),
        projective=is_complete(fan),
    )
    logger.debug("strata from subdivision", extra={"fan": fan.name, "divisors": len(discrepancies), "strata": len(strata)})
    return data


def star_subdivide(fan: Fan, vector: Sequence[int]) -> Fan:
    """Stellar subdivision of a simplicial fan at a lattice vector of its support."""
    if not fan.is_simplicial():
        raise Unsupported("star subdivision needs a simplicial fan")
    v = lattice.primitive(vector)
    if fan.ray_index(v) is not None:
        return fan
    tau: Cone | None = None
    for cone in fan.max_cones:
        coords = lattice.coordinates(fan.vectors(cone), v)
        if coords is not None and all(x >= 0 for x in coords):
            tau = tuple(i for i, x in zip(cone, coords) if x > 0)
            break
    if tau is None:
        raise InvalidInput(f"vector {list(v)} is outside the support of the fan")
    new = len(fan.rays)
    cones: set[Cone] = set()
    for cone in fan.max_cones:
        if set(tau) <= set(cone):
            for i in tau:
                cones.add(tuple(sorted((set(cone) - {i}) | {new})))
        else:
            cones.add(cone)
    return fan.replace(rays=fan.rays + (v,), max_cones=tuple(sorted(cones, key=lambda c: (len(c), c))))


def resolve_fan(fan: Fan, cap: int = DEFAULT_BOX_CAP) -> Fan:
    """
    A smooth refinement by repeated star subdivision at the interior box
    point of smallest height.
    """
    current = triangulate(fan)
    while True:
        singular = [c for c in current.max_cones if lattice.lattice_index(current.vectors(c)) > 1]
        if not singular:
            break
        cone = singular[0]
        raw, _ = _parallelepiped(current, cone, cap)
        point, _ = min(((p, lam) for p, lam in raw if any(lam)), key=lambda item: (sum(item[1]), item[0]))
        current = star_subdivide(current, point)
    logger.debug("resolved fan", extra={"fan": fan.name, "rays": len(current.rays), "cones": len(current.max_cones)})
    return current.replace(name=f"{fan.name or 'fan'} resolved")
