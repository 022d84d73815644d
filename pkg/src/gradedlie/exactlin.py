"""Exact linear algebra over the rationals.

Scalars are :class:`fractions.Fraction`. Matrices are sparse and row-major.
Elimination runs on integer-scaled rows through a compiled kernel when one is
available (``BACKEND == "cython"``) and through the pure-Python kernel
otherwise. Set ``GRADEDLIE_PURE_PYTHON=1`` to force the fallback.

Working over Q instead of C loses nothing for the dimension counts computed
in this package: every linear system here has rational coefficients, and the
nullity of a rational matrix is the same over Q and over C.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from math import lcm
from typing import Optional

from gradedlie import _elim

Scalar = Fraction
Vector = tuple  # tuple[Fraction, ...]

_fast_echelon = None
if not os.environ.get("GRADEDLIE_PURE_PYTHON"):
    try:
        from gradedlie._elim_cy import echelon as _fast_echelon
    except ImportError:  # extension not built
        _fast_echelon = None

BACKEND = "cython" if _fast_echelon is not None else "python"


def to_scalar(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not exact scalars")
    return Fraction(x)


def format_scalar(x: Fraction) -> str:
    """Canonical ``p/q`` text, with ``/q`` omitted when q = 1."""
    x = to_scalar(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class SparseMatrix:
    """Immutable sparse rational matrix. Zero entries are never stored."""

    __slots__ = ("rows", "cols", "_rows")

    def __init__(self, rows: int, cols: int, entries: Mapping[tuple[int, int], object] = ()):
        self.rows = rows
        self.cols = cols
        data = [dict() for _ in range(rows)]
        for (i, j), v in dict(entries).items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols}")
            v = to_scalar(v)
            if v:
                data[i][j] = v
        self._rows = tuple(data)

    @classmethod
    def from_row_dicts(cls, row_dicts: Sequence[Mapping[int, object]], cols: int) -> "SparseMatrix":
        m = cls.__new__(cls)
        m.rows = len(row_dicts)
        m.cols = cols
        rows = []
        for r in row_dicts:
            clean = {}
            for j, v in r.items():
                if not 0 <= j < cols:
                    raise IndexError(f"column {j} outside 0..{cols - 1}")
                v = to_scalar(v)
                if v:
                    clean[j] = v
            rows.append(clean)
        m._rows = tuple(rows)
        return m

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[object]], cols: Optional[int] = None) -> "SparseMatrix":
        if cols is None:
            cols = len(dense[0]) if dense else 0
        return cls.from_row_dicts([dict(enumerate(r)) for r in dense], cols)

    @property
    def entries(self) -> dict[tuple[int, int], Fraction]:
        return {(i, j): v for i, r in enumerate(self._rows) for j, v in r.items()}

    def row(self, i: int) -> dict[int, Fraction]:
        return dict(self._rows[i])

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for i, r in enumerate(self._rows):
            for j, v in r.items():
                out[i][j] = v
        return out

    def mul_vector(self, v: Sequence[object]) -> Vector:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        v = [to_scalar(x) for x in v]
        return tuple(sum((a * v[j] for j, a in r.items()), Fraction(0)) for r in self._rows)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self._rows == other._rows

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={sum(map(len, self._rows))})"


def _integer_rows(rows: Iterable[Mapping[int, Fraction]]) -> list[dict[int, int]]:
    out = []
    for r in rows:
        if not r:
            continue
        den = lcm(*(v.denominator for v in r.values()))
        out.append({j: v.numerator * (den // v.denominator) for j, v in r.items()})
    return out


def _echelon(rows: Iterable[Mapping[int, Fraction]], ncols: int):
    int_rows = _integer_rows(rows)
    if _fast_echelon is not None:
        try:
            return _fast_echelon(int_rows, ncols)
        except OverflowError:
            pass
    return _elim.echelon(int_rows, ncols)


def rref(m: SparseMatrix) -> tuple[int, list[int], SparseMatrix]:
    """Reduced row-echelon form.

    Returns ``(rank, pivots, reduced)``; ``reduced`` has the shape of ``m``
    with its nonzero rows first.
    """
    pivots, int_rows = _echelon(m._rows, m.cols)
    reduced = []
    for p, r in zip(pivots, int_rows):
        d = r[p]
        reduced.append({j: Fraction(v, d) for j, v in r.items()})
    reduced.extend({} for _ in range(m.rows - len(reduced)))
    return len(pivots), list(pivots), SparseMatrix.from_row_dicts(reduced, m.cols)


def rank(m: SparseMatrix) -> int:
    return len(_echelon(m._rows, m.cols)[0])


def nullspace(m: SparseMatrix) -> list[Vector]:
    """Canonical kernel basis: one vector per free column, free entry 1."""
    r, pivots, red = rref(m)
    pivot_set = set(pivots)
    basis = []
    for f in range(m.cols):
        if f in pivot_set:
            continue
        v = [Fraction(0)] * m.cols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            a = red._rows[i].get(f)
            if a:
                v[p] = -a
        basis.append(tuple(v))
    return basis


def vectors_rank(vectors: Sequence[Sequence[object]]) -> int:
    if not vectors:
        return 0
    n = len(vectors[0])
    return rank(SparseMatrix.from_row_dicts([dict(enumerate(v)) for v in vectors], n))


def in_span(basis: Sequence[Sequence[object]], target: Sequence[object]) -> Optional[Vector]:
    """Coordinates ``c`` with ``sum(c[i] * basis[i]) == target``, or None.

    When ``basis`` is dependent the solution with zero weight on redundant
    (non-pivot) members is returned.
    """
    k = len(basis)
    n = len(target)
    if any(len(b) != n for b in basis):
        raise ValueError("vectors of unequal length")
    rows = []
    for j in range(n):
        r = {i: b[j] for i, b in enumerate(basis)}
        r[k] = target[j]
        rows.append(r)
    _, pivots, red = rref(SparseMatrix.from_row_dicts(rows, k + 1))
    if pivots and pivots[-1] == k:
        return None
    coords = [Fraction(0)] * k
    for i, p in enumerate(pivots):
        coords[p] = red._rows[i].get(k, Fraction(0))
    return tuple(coords)


def independent_subset(vectors: Sequence[Sequence[object]]) -> list[int]:
    """Indices of the first maximal linearly independent subsequence."""
    if not vectors:
        return []
    n = len(vectors[0])
    # vectors as columns; pivot columns of the RREF pick the greedy subset
    rows = [{i: v[j] for i, v in enumerate(vectors)} for j in range(n)]
    _, pivots, _ = rref(SparseMatrix.from_row_dicts(rows, len(vectors)))
    return pivots


def same_span(a: Sequence[Sequence[object]], b: Sequence[Sequence[object]]) -> bool:
    """Both-direction span membership check."""
    return all(in_span(b, v) is not None for v in a) and all(in_span(a, v) is not None for v in b)
