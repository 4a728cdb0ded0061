"""
Integer and rational linear algebra on small matrices: Smith normal form
with unimodular transforms, ranks, kernels and lattice indices.
"""
from fractions import Fraction
from math import gcd, lcm, prod
from typing import Sequence

import sympy
from sympy import ZZ
from sympy.matrices.normalforms import invariant_factors as sympy_invariant_factors
from sympy.matrices.normalforms import smith_normal_decomp

Matrix = list[list[int]]


def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(a))]


def smith_normal_form(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """
    Returns (S, U, V) with U * M * V = S, S diagonal with d1 | d2 | ... and
    nonnegative diagonal, nonzero entries first, U and V unimodular.
    """
    rows = len(M)
    cols = len(M[0]) if rows else 0
    if not rows or not cols:
        return [[0] * cols for _ in range(rows)], identity(rows), identity(cols)
    S, U, V = (_as_ints(m) for m in smith_normal_decomp(sympy.Matrix([list(r) for r in M]), domain=ZZ))
    k = min(rows, cols)
    for i in range(k):
        if S[i][i] < 0:
            S[i] = [-x for x in S[i]]
            U[i] = [-x for x in U[i]]
    # zero invariants last; the diagonal keeps its divisibility order
    order = sorted(range(k), key=lambda i: S[i][i] == 0)
    perm = order + list(range(k, rows))
    S = [S[i] for i in perm]
    U = [U[i] for i in perm]
    perm = order + list(range(k, cols))
    S = [[row[j] for j in perm] for row in S]
    V = [[row[j] for j in perm] for row in V]
    return S, U, V


def _as_ints(m: sympy.Matrix) -> Matrix:
    return [[int(x) for x in m.row(i)] for i in range(m.rows)]


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    if not M or not M[0]:
        return []
    factors = sympy_invariant_factors(sympy.Matrix([list(r) for r in M]), domain=ZZ)
    return [abs(int(f)) for f in factors if f]


def lattice_index(rays: Sequence[Sequence[int]]) -> int:
    """
    Index of the lattice spanned by `rays` inside its saturation; 0 when the
    rays are linearly dependent.
    """
    if not rays:
        return 1
    factors = invariant_factors(rays)
    if len(factors) < len(rays):
        return 0
    return prod(factors)


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return sympy.Matrix([list(r) for r in rows]).rank()


def kernel(rows: Sequence[Sequence], dim: int) -> list[tuple[int, ...]]:
    """Integral basis (primitive vectors) of {x : row . x = 0 for all rows}."""
    if not rows:
        return [tuple(r) for r in identity(dim)]
    basis = sympy.Matrix([list(r) for r in rows]).nullspace()
    out = []
    for vec in basis:
        entries = [Fraction(int(sympy.numer(x)), int(sympy.denom(x))) for x in vec]
        scale = lcm(*(e.denominator for e in entries))
        ints = [int(e * scale) for e in entries]
        g = gcd(*ints)
        out.append(tuple(x // g for x in ints))
    return out


def dot(m: Sequence, x: Sequence):
    return sum(a * b for a, b in zip(m, x))


def primitive(vector: Sequence[int]) -> tuple[int, ...]:
    g = gcd(*vector)
    if g == 0:
        raise ValueError("the zero vector has no primitive generator")
    return tuple(x // g for x in vector)


def coordinates(basis: Sequence[Sequence[int]], vector: Sequence[int]) -> list[Fraction] | None:
    """
    Rational coefficients lambda with sum lambda_i basis_i = vector, for
    linearly independent basis vectors; None when vector is outside the span.
    """
    if not basis:
        return [] if not any(vector) else None
    A = sympy.Matrix([list(b) for b in basis]).T
    try:
        sol, params = A.gauss_jordan_solve(sympy.Matrix(list(vector)))
    except ValueError:
        return None
    sol = sol.xreplace({p: 0 for p in params})
    return [Fraction(int(sympy.numer(x)), int(sympy.denom(x))) for x in sol]
