"""Bott orbifold towers: matrices, ramification, invariant bases and Chern data.

Conventions
-----------
Stages are numbered ``1..n`` in the public API. ``A(i, j)`` is the entry
below the diagonal in row ``i`` and column ``j < i``. The degree-2 classes
``x_i`` (infinity sections) and ``y_i`` (zero sections) satisfy

    y_i = x_i + sum_{j<i} A(i, j) x_j,

and an invariant basis picks one of ``x_i, y_i`` per stage. Since
``x_1 == y_1`` there are ``2**(n-1)`` of them, labelled by the set of stages
``i >= 2`` that use ``y_i``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Iterator, Optional, Sequence, Union

from .exactmath import lcm

Rational = Union[int, Fraction]


class BottInputError(ValueError):
    """Malformed matrix, ramification or class data."""


# --------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class BottMatrix:
    """Lower-triangular unipotent integer matrix stored by its strictly lower rows.

    ``rows[i-1]`` holds ``A(i, 1), ..., A(i, i-1)``; ``rows[0]`` is empty.
    """

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(a) for a in r) for r in self.rows)
        for i, r in enumerate(rows):
            if len(r) != i:
                raise BottInputError(f"row {i + 1} must have {i} strictly-lower entries, got {len(r)}")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def __call__(self, i: int, j: int) -> int:
        """``A(i, j)`` for 1-based indices; 1 on the diagonal, 0 above it."""
        if j == i:
            return 1
        if j > i:
            return 0
        return self.rows[i - 1][j - 1]

    @classmethod
    def identity(cls, n: int) -> "BottMatrix":
        return cls(tuple((0,) * i for i in range(n)))

    @classmethod
    def from_square(cls, mat: Sequence[Sequence[int]]) -> "BottMatrix":
        n = len(mat)
        for i, row in enumerate(mat):
            if len(row) != n:
                raise BottInputError("matrix is not square")
            if row[i] != 1:
                raise BottInputError(f"diagonal entry ({i + 1},{i + 1}) is {row[i]}, expected 1")
            for j in range(i + 1, n):
                if row[j] != 0:
                    raise BottInputError(f"upper entry ({i + 1},{j + 1}) is {row[j]}, expected 0")
        return cls(tuple(tuple(mat[i][:i]) for i in range(n)))

    @classmethod
    def parse(cls, data: Sequence[Sequence[int]], n: Optional[int] = None) -> "BottMatrix":
        """Accept either ragged strictly-lower rows or a full square matrix."""
        data = [list(r) for r in data]
        if n is None:
            n = len(data)
        if len(data) == n and all(len(r) == n for r in data) and n > 0 and not (n == 1 and data == [[]]):
            return cls.from_square(data)
        if len(data) == n - 1 and all(len(r) == i + 1 for i, r in enumerate(data)):
            # rows 2..n only
            return cls(((),) + tuple(tuple(r) for r in data))
        return cls(tuple(tuple(r) for r in data))

    def to_square(self) -> list[list[int]]:
        return [[self(i, j) for j in range(1, self.n + 1)] for i in range(1, self.n + 1)]

    def delete_last(self) -> "BottMatrix":
        return BottMatrix(self.rows[:-1])

    def append_row(self, row: Sequence[int]) -> "BottMatrix":
        return BottMatrix(self.rows + (tuple(row),))

    def max_abs(self) -> int:
        return max((abs(a) for r in self.rows for a in r), default=0)


@dataclass(frozen=True)
class BottOrbifold:
    """A Bott tower with ramification indices ``(m0, minf)`` along the zero and infinity sections.

    Ramification may be rational (cone angles), in which case only the
    Chern-class and positivity routines are meaningful.
    """

    matrix: BottMatrix
    ram: tuple[tuple[Rational, Rational], ...]

    def __post_init__(self):
        ram = tuple((_as_rational(a), _as_rational(b)) for a, b in self.ram)
        if len(ram) != self.matrix.n:
            raise BottInputError(f"{len(ram)} ramification pairs for a height-{self.matrix.n} tower")
        for i, (a, b) in enumerate(ram):
            if a <= 0 or b <= 0:
                raise BottInputError(f"ramification at stage {i + 1} must be positive")
        object.__setattr__(self, "ram", ram)

    @property
    def n(self) -> int:
        return self.matrix.n

    @classmethod
    def smooth(cls, matrix: BottMatrix) -> "BottOrbifold":
        return cls(matrix, ((1, 1),) * matrix.n)

    def q(self, i: int) -> tuple[Fraction, Fraction]:
        """Reciprocal ramification ``(1/m0_i, 1/minf_i)``."""
        a, b = self.ram[i - 1]
        return Fraction(1) / a, Fraction(1) / b

    def stage_gcd(self, i: int) -> int:
        """``m_i = gcd(m0_i, minf_i)`` for integral ramification."""
        a, b = self.ram[i - 1]
        return math.gcd(int(a), int(b))

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for pair in self.ram for x in pair)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "A": [list(r) for r in self.matrix.rows],
            "m": [[_json_num(a), _json_num(b)] for a, b in self.ram],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BottOrbifold":
        n = int(data["n"])
        matrix = BottMatrix.parse(data.get("A", []), n)
        if matrix.n != n:
            raise BottInputError(f"matrix height {matrix.n} does not match n={n}")
        ram = data.get("m")
        if ram is None:
            ram = [[1, 1]] * n
        return cls(matrix, tuple((_parse_num(a), _parse_num(b)) for a, b in ram))


def _as_rational(x) -> Rational:
    if isinstance(x, bool):
        raise BottInputError("boolean is not a ramification index")
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else x
    if isinstance(x, int):
        return x
    raise BottInputError(f"ramification must be int or Fraction, got {type(x).__name__}")


def _parse_num(x) -> Rational:
    if isinstance(x, str):
        f = Fraction(x)
        return int(f) if f.denominator == 1 else f
    return _as_rational(x)


def _json_num(x: Rational):
    return x if isinstance(x, int) else str(x)


@dataclass(frozen=True)
class Basis:
    """Invariant basis selector: the stages ``i >= 2`` that use ``y_i`` instead of ``x_i``."""

    n: int
    ys: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ys = frozenset(self.ys)
        if 1 in ys:
            raise BottInputError("stage 1 has x_1 == y_1; it cannot be selected")
        if any(i < 1 or i > self.n for i in ys):
            raise BottInputError(f"basis stages {sorted(ys)} out of range 2..{self.n}")
        object.__setattr__(self, "ys", ys)

    @classmethod
    def all_x(cls, n: int) -> "Basis":
        return cls(n, frozenset())

    @property
    def label(self) -> str:
        return ",".join(("y" if i in self.ys else "x") + str(i) for i in range(1, self.n + 1))

    def __str__(self) -> str:
        return "{" + self.label + "}"


def invariant_bases(n: int) -> Iterator[Basis]:
    """All ``2**(n-1)`` invariant bases, all-x first, then by subset size and order."""
    return iter(_bases(n))


@lru_cache(maxsize=64)
def _bases(n: int) -> tuple[Basis, ...]:
    stages = range(2, n + 1)
    return tuple(Basis(n, frozenset(c)) for r in range(0, n) for c in itertools.combinations(stages, r))


@dataclass(frozen=True)
class ClassVector:
    """Rational degree-2 class ``sum c_i b_i`` in a tagged invariant basis."""

    coeffs: tuple[Fraction, ...]
    basis: Basis

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coeffs)
        if len(cs) != self.basis.n:
            raise BottInputError(f"{len(cs)} coefficients for a rank-{self.basis.n} basis")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def in_x(cls, coeffs: Iterable[Rational]) -> "ClassVector":
        cs = tuple(coeffs)
        return cls(cs, Basis.all_x(len(cs)))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def _check(self, other: "ClassVector"):
        if self.basis != other.basis:
            raise BottInputError(f"basis mismatch: {self.basis} vs {other.basis}")

    def __add__(self, other: "ClassVector") -> "ClassVector":
        self._check(other)
        return ClassVector(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.basis)

    def __sub__(self, other: "ClassVector") -> "ClassVector":
        self._check(other)
        return ClassVector(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.basis)

    def __neg__(self) -> "ClassVector":
        return ClassVector(tuple(-a for a in self.coeffs), self.basis)

    def scale(self, c: Rational) -> "ClassVector":
        return ClassVector(tuple(a * c for a in self.coeffs), self.basis)

    def lift(self, n: int) -> "ClassVector":
        """Pull back along the tower projection: pad with zeros (all-x basis only)."""
        if self.basis.ys:
            raise BottInputError("lift is defined on all-x coordinates")
        if n < self.n:
            raise BottInputError("cannot lift to a lower stage")
        return ClassVector.in_x(self.coeffs + (Fraction(0),) * (n - self.n))

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    def content(self) -> int:
        """gcd of the coefficients of an integral class."""
        if not self.is_integral():
            raise BottInputError("content of a non-integral class")
        return reduce(math.gcd, (int(c) for c in self.coeffs), 0)

    def primitive(self) -> "ClassVector":
        g = self.content()
        return self if g in (0, 1) else self.scale(Fraction(1, g))

    def to_json(self) -> dict:
        return {"basis": self.basis.label, "coeffs": [_frac_str(c) for c in self.coeffs]}


def _frac_str(c: Fraction) -> Union[int, str]:
    return int(c) if c.denominator == 1 else str(c)


# --------------------------------------------------------------------------
# basis changes and Chern class

def _to_all_x(c: ClassVector, A: BottMatrix) -> tuple[Fraction, ...]:
    # b_i = x_i + [i in ys] sum_{j<i} A(i,j) x_j
    out = list(c.coeffs)
    for i in c.basis.ys:
        r = c.coeffs[i - 1]
        if r:
            for j in range(1, i):
                out[j - 1] += r * A(i, j)
    return tuple(out)


def _from_all_x(cx: Sequence[Fraction], basis: Basis, A: BottMatrix) -> tuple[Fraction, ...]:
    # back substitution: r_j = c_j - sum_{i>j, i in ys} A(i,j) r_i
    n = len(cx)
    r = [Fraction(0)] * n
    for j in range(n, 0, -1):
        acc = cx[j - 1]
        for i in basis.ys:
            if i > j:
                acc -= A(i, j) * r[i - 1]
        r[j - 1] = acc
    return tuple(r)


def change_basis(c: ClassVector, target: Basis, A: BottMatrix) -> ClassVector:
    """Rewrite ``c`` in the ``target`` invariant basis using the x/y relations of ``A``."""
    if c.n != A.n or target.n != A.n:
        raise BottInputError("class, basis and matrix heights differ")
    if c.basis == target:
        return c
    return ClassVector(_from_all_x(_to_all_x(c, A), target, A), target)


def c1_orb(orb: BottOrbifold) -> ClassVector:
    """Orbifold first Chern class in the all-x basis.

    Coefficient of ``x_j`` is ``q0_j + qinf_j + sum_{i>j} A(i, j) q0_i``.
    """
    n = orb.n
    A = orb.matrix
    out = []
    for j in range(1, n + 1):
        q0, qi = orb.q(j)
        acc = q0 + qi
        for i in range(j + 1, n + 1):
            acc += A(i, j) * orb.q(i)[0]
        out.append(acc)
    return ClassVector.in_x(out)


def correction_matrix(A: BottMatrix, basis: Basis) -> list[list[Fraction]]:
    """The integers ``B(i, j)`` (``j < i``) attached to a basis.

    In the basis ``g(x)`` the Chern class has coefficients
    ``q0_j + qinf_j + sum_{i>j} B(i, j) * q_i`` with ``q_i = q0_i`` when
    stage ``i`` keeps ``x_i`` and ``q_i = qinf_i`` when it uses ``y_i``.
    Returned as an ``n x n`` table indexed ``[i-1][j-1]``.
    """
    return [[Fraction(b) for b in r] for r in _correction(A, basis)]


@lru_cache(maxsize=8192)
def _correction(A: BottMatrix, basis: Basis) -> tuple[tuple[int, ...], ...]:
    # entries are integers: back substitution with an integral unipotent matrix
    n = A.n
    B = [[Fraction(0)] * n for _ in range(n)]
    for i in range(2, n + 1):
        # x_i = b_i - sum A(i,l) x_l  (i in ys), y_i = b_i + sum A(i,l) x_l (i not in ys)
        eps = -1 if i in basis.ys else 1
        tail = [Fraction(eps * A(i, l)) if l < i else Fraction(0) for l in range(1, n + 1)]
        in_basis = _from_all_x(tail, basis, A)
        for j in range(1, i):
            B[i - 1][j - 1] = in_basis[j - 1]
    return tuple(tuple(int(b) for b in r) for r in B)


def _c1_in_basis(qs: Sequence[tuple[Fraction, Fraction]], A: BottMatrix, basis: Basis) -> tuple[Fraction, ...]:
    n = A.n
    B = _correction(A, basis)
    out = []
    for j in range(1, n + 1):
        acc = qs[j - 1][0] + qs[j - 1][1]
        for i in range(j + 1, n + 1):
            b = B[i - 1][j - 1]
            if b:
                acc += b * qs[i - 1][1 if i in basis.ys else 0]
        out.append(acc)
    return tuple(out)


def c1_orb_in_basis(orb: BottOrbifold, basis: Basis) -> ClassVector:
    """c1_orb written directly in ``basis`` through its correction matrix."""
    qs = [orb.q(i) for i in range(1, orb.n + 1)]
    return ClassVector(_c1_in_basis(qs, orb.matrix, basis), basis)


# --------------------------------------------------------------------------
# positivity

@dataclass(frozen=True)
class LogFanoReport:
    verdict: bool
    table: tuple[ClassVector, ...]

    @property
    def failing(self) -> list[ClassVector]:
        return [c for c in self.table if not all(x > 0 for x in c.coeffs)]

    def to_json(self) -> dict:
        return {
            "log_fano": self.verdict,
            "bases": [
                {**c.to_json(), "positive": all(x > 0 for x in c.coeffs)} for c in self.table
            ],
        }


def log_fano_table(orb: BottOrbifold) -> LogFanoReport:
    table = tuple(c1_orb_in_basis(orb, b) for b in invariant_bases(orb.n))
    verdict = all(x > 0 for c in table for x in c.coeffs)
    return LogFanoReport(verdict, table)


def is_log_fano(orb: BottOrbifold) -> bool:
    """True iff c1_orb is strictly positive in every invariant basis."""
    if orb.is_integral():
        # clear denominators: only signs matter, so work with L/m in integers
        L = reduce(lcm, (x for pair in orb.ram for x in pair), 1)
        qs = [(L // a, L // b) for a, b in orb.ram]
    else:
        qs = [orb.q(i) for i in range(1, orb.n + 1)]
    for b in invariant_bases(orb.n):
        if not all(x > 0 for x in _c1_in_basis(qs, orb.matrix, b)):
            return False
    return True


def positive_in_all_bases(c: ClassVector, A: BottMatrix) -> bool:
    cx = _to_all_x(c, A)
    return all(all(r > 0 for r in _from_all_x(cx, b, A)) for b in invariant_bases(A.n))


def is_ample(d: ClassVector, orb: BottOrbifold) -> bool:
    """Ampleness of a torus-invariant R-divisor class: positive coefficients in every invariant basis."""
    return positive_in_all_bases(d, orb.matrix)


def in_kahler_cone(c: ClassVector, A: BottMatrix) -> bool:
    return positive_in_all_bases(c, A)


# --------------------------------------------------------------------------
# tower operations

def restrict(orb: BottOrbifold) -> BottOrbifold:
    """Drop the top stage."""
    if orb.n < 2:
        raise BottInputError("cannot restrict a height-1 tower")
    return BottOrbifold(orb.matrix.delete_last(), orb.ram[:-1])


def c1_top_stage_correction(orb: BottOrbifold) -> ClassVector:
    """The part of c1_orb added by the top stage over the restricted tower."""
    n = orb.n
    q0, qi = orb.q(n)
    return ClassVector.in_x([orb.matrix(n, j) * q0 for j in range(1, n)] + [q0 + qi])


def fiber_inversion(orb: BottOrbifold, k: int) -> BottOrbifold:
    """Exchange the zero and infinity sections at stage ``k``.

    The new tower uses ``x'_k = y_k`` and ``y'_k = x_k``; rewriting the
    relations gives row ``k`` negated and, for rows ``i > k``,
    ``A'(i, j) = A(i, j) - A(i, k) A(k, j)`` for ``j < k``.
    """
    n = orb.n
    if not 1 <= k <= n:
        raise BottInputError(f"stage {k} out of range 1..{n}")
    A = orb.matrix
    rows = [list(r) for r in A.rows]
    rows[k - 1] = [-a for a in rows[k - 1]]
    for i in range(k + 1, n + 1):
        aik = A(i, k)
        for j in range(1, k):
            rows[i - 1][j - 1] = A(i, j) - aik * A(k, j)
    ram = list(orb.ram)
    ram[k - 1] = (ram[k - 1][1], ram[k - 1][0])
    return BottOrbifold(BottMatrix(tuple(tuple(r) for r in rows)), tuple(ram))


def intersection_number(monomial: Iterable[int], A: BottMatrix) -> int:
    """Degree of a top-degree monomial in ``x_1..x_n``, with ``x_1 x_2 ... x_n = 1``.

    Reduces by ``x_j^2 = -sum_{i<j} A(j, i) x_i x_j``, always at the largest
    repeated index, until only the square-free top monomial is left.
    """
    n = A.n
    counts = Counter(monomial)
    if sum(counts.values()) != n:
        raise BottInputError(f"monomial degree {sum(counts.values())} != {n}")
    if any(i < 1 or i > n for i in counts):
        raise BottInputError("monomial index out of range")
    start = tuple(counts.get(i, 0) for i in range(1, n + 1))
    poly: dict[tuple[int, ...], int] = {start: 1}
    top = (1,) * n
    total = 0
    while poly:
        nxt: dict[tuple[int, ...], int] = {}
        for exps, coef in poly.items():
            if exps == top:
                total += coef
                continue
            j = max(idx for idx in range(n) if exps[idx] >= 2)
            for i in range(j):
                a = A(j + 1, i + 1)
                if a:
                    e = list(exps)
                    e[j] -= 1
                    e[i] += 1
                    key = tuple(e)
                    nxt[key] = nxt.get(key, 0) - a * coef
        poly = {k: v for k, v in nxt.items() if v}
    return total


# --------------------------------------------------------------------------
# Fano index

def _integer_row_basis(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Echelon basis of the Z-span of ``rows`` (pivot in column order, positive pivots)."""
    rows = [r[:] for r in rows if any(r)]
    basis = []
    for col in range(ncols):
        piv = [r for r in rows if r[col] != 0]
        rest = [r for r in rows if r[col] == 0]
        while len(piv) > 1:
            piv.sort(key=lambda r: abs(r[col]))
            p = piv[0]
            new = [p]
            for r in piv[1:]:
                q = r[col] // p[col]
                r2 = [a - q * b for a, b in zip(r, p)]
                if r2[col] != 0:
                    new.append(r2)
                elif any(r2):
                    rest.append(r2)
            piv = new
        if piv:
            p = piv[0]
            if p[col] < 0:
                p = [-a for a in p]
            basis.append(p)
        rows = [r for r in rest if any(r)]
    return basis


def class_lattice_generators(orb: BottOrbifold) -> list[ClassVector]:
    """Generators ``y_j / m0_j`` and ``x_j / minf_j`` of the orbifold class lattice, in x coordinates."""
    n = orb.n
    A = orb.matrix
    gens = []
    for j in range(1, n + 1):
        q0, qi = orb.q(j)
        y = [Fraction(A(j, i)) * q0 if i < j else Fraction(0) for i in range(1, n + 1)]
        y[j - 1] = q0
        x = [Fraction(0)] * n
        x[j - 1] = qi
        gens += [ClassVector.in_x(y), ClassVector.in_x(x)]
    return gens


@dataclass(frozen=True)
class FanoIndex:
    index: int
    lattice_coords: tuple[int, ...]
    diagnostic: str = ""


def fano_index_report(orb: BottOrbifold) -> FanoIndex:
    if not orb.is_integral():
        raise BottInputError("Fano index needs integral ramification")
    if not is_log_fano(orb):
        raise BottInputError("Fano index is defined for log Fano orbifolds only")
    n = orb.n
    gens = class_lattice_generators(orb)
    den = reduce(lcm, (c.denominator for g in gens for c in g.coeffs), 1)
    int_rows = [[int(c * den) for c in reversed(g.coeffs)] for g in gens]
    # reversed columns: pivot on x_n first gives an upper-triangular basis
    basis = _integer_row_basis(int_rows, n)
    if len(basis) != n:
        raise AssertionError("class lattice is not full rank")
    target = [c * den for c in reversed(c1_orb(orb).coeffs)]
    coords = []
    rem = list(target)
    for row in basis:
        col = next(i for i, a in enumerate(row) if a)
        u = rem[col] / row[col]
        if u.denominator != 1:
            return FanoIndex(1, (), "c1 is not in the class lattice")
        coords.append(int(u))
        rem = [a - u * b for a, b in zip(rem, row)]
    if any(rem):
        return FanoIndex(1, (), "c1 is not in the class lattice")
    g = reduce(math.gcd, coords, 0)
    return FanoIndex(g, tuple(coords))


def fano_index(orb: BottOrbifold) -> int:
    """Largest ``I`` with ``c1_orb / I`` in the lattice spanned by ``y_j/m0_j`` and ``x_j/minf_j``."""
    return fano_index_report(orb).index
