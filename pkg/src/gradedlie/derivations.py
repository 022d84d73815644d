"""Homogeneous derivations of L(λ, μ) on a truncation window.

A degree-k linear map d is stored as a :class:`GradedMapTable`: for every
family X and index n in the window, ``d(X_n) = f1 L_{n+k} + f2 Y_{n+k} + f3 M_{n+k}``.
The Leibniz rule on all window pairs gives a rational linear system whose
kernel is the derivation space; this solver is the source of truth, and the
closed forms in :func:`predicted_degree0_basis` are checked against it.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from gradedlie import exactlin
from gradedlie.algebra import (
    FAMILIES,
    Basis,
    Case,
    Element,
    Params,
    Window,
    ad,
    bracket,
    structure_constant,
)
from gradedlie.errors import DecompositionFailed, NameNotAdmissible, NotADerivation
from gradedlie.exactlin import SparseMatrix, format_scalar, to_scalar

_FAM = {f: i for i, f in enumerate(FAMILIES)}
ZERO = Fraction(0)

DEFAULT_DEGREES = range(-3, 4)


def _col(w: Window, family: str, n: int, i: int) -> int:
    return (_FAM[family] * (2 * w.radius + 1) + n + w.radius) * 3 + i


@dataclass(frozen=True)
class GradedMapTable:
    """Degree-``degree`` linear map given by its coefficients on ``window``."""

    degree: int
    window: Window
    coeffs: Mapping[tuple[str, int], tuple[Fraction, Fraction, Fraction]] = field(repr=False)

    @classmethod
    def from_vector(cls, degree: int, w: Window, vec: Sequence[object]) -> "GradedMapTable":
        if len(vec) != 9 * (2 * w.radius + 1):
            raise ValueError("vector length does not match window")
        coeffs = {}
        for f in FAMILIES:
            for n in w.indices:
                c = _col(w, f, n, 0)
                coeffs[(f, n)] = tuple(to_scalar(vec[c + i]) for i in range(3))
        return cls(degree, w, coeffs)

    @classmethod
    def from_functions(
        cls, degree: int, w: Window, funcs: Mapping[tuple[str, int], Callable[[int], object]]
    ) -> "GradedMapTable":
        """``funcs[(X, i)]`` gives the coefficient of the i-th family (0=L, 1=Y, 2=M) in d(X_n)."""
        coeffs = {}
        for f in FAMILIES:
            for n in w.indices:
                coeffs[(f, n)] = tuple(
                    to_scalar(funcs[(f, i)](n)) if (f, i) in funcs else ZERO for i in range(3)
                )
        return cls(degree, w, coeffs)

    @classmethod
    def from_map(cls, degree: int, w: Window, image: Callable[[Basis], Element]) -> "GradedMapTable":
        coeffs = {}
        for f in FAMILIES:
            for n in w.indices:
                e = image(Basis(f, n))
                target = n + degree
                if any(b.n != target for b, _ in e.items()):
                    raise ValueError(f"image of {f}{n} is not homogeneous of degree {target}")
                coeffs[(f, n)] = tuple(e.coeff(Basis(g, target)) for g in FAMILIES)
        return cls(degree, w, coeffs)

    def vector(self) -> tuple[Fraction, ...]:
        out = [ZERO] * (9 * (2 * self.window.radius + 1))
        for (f, n), trip in self.coeffs.items():
            c = _col(self.window, f, n, 0)
            out[c : c + 3] = trip
        return tuple(out)

    def image(self, b: Basis) -> Element:
        trip = self.coeffs[(b.family, b.n)]
        k = b.n + self.degree
        return Element({Basis(g, k): c for g, c in zip(FAMILIES, trip)})

    def __call__(self, x: Element) -> Element:
        out = Element()
        for b, c in x.items():
            out = out + self.image(b) * c
        return out

    def restrict(self, w: Window) -> "GradedMapTable":
        if w.radius > self.window.radius:
            raise ValueError("cannot restrict to a larger window")
        return GradedMapTable(
            self.degree, w, {(f, n): self.coeffs[(f, n)] for f in FAMILIES for n in w.indices}
        )

    def with_coeff(self, family: str, n: int, trip) -> "GradedMapTable":
        coeffs = dict(self.coeffs)
        coeffs[(family, n)] = tuple(to_scalar(x) for x in trip)
        return GradedMapTable(self.degree, self.window, coeffs)

    def __eq__(self, other):
        if not isinstance(other, GradedMapTable):
            return NotImplemented
        return (self.degree, self.window) == (other.degree, other.window) and dict(self.coeffs) == dict(
            other.coeffs
        )

    def __hash__(self):
        return hash((self.degree, self.window, self.vector()))

    def is_zero(self) -> bool:
        return not any(any(t) for t in self.coeffs.values())

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "window": self.window.radius,
            "images": {
                f"{f}{n}": self.image(Basis(f, n)).to_json() for f in FAMILIES for n in self.window.indices
            },
        }


def combine(tables: Sequence[GradedMapTable], coeffs: Sequence[object]) -> GradedMapTable:
    """Linear combination of tables sharing degree and window."""
    if not tables:
        raise ValueError("need at least one table")
    t0 = tables[0]
    vec = [ZERO] * len(t0.vector())
    for t, c in zip(tables, coeffs):
        if (t.degree, t.window) != (t0.degree, t0.window):
            raise ValueError("tables differ in degree or window")
        c = to_scalar(c)
        if c:
            for j, v in enumerate(t.vector()):
                if v:
                    vec[j] += c * v
    return GradedMapTable.from_vector(t0.degree, t0.window, vec)


def constraint_pairs(k: int, w: Window) -> Iterator[tuple[Basis, Basis]]:
    """Ordered basis pairs (X_a, Z_b) with a, b, a+b and a+b+k in the window."""
    for a in w.indices:
        for b in w.indices:
            if a + b in w and a + b + k in w:
                for fx in FAMILIES:
                    for fz in FAMILIES:
                        yield Basis(fx, a), Basis(fz, b)


def leibniz_block(p: Params, k: int, w: Window, x: Basis, z: Basis) -> list[dict[int, Fraction]]:
    """Rows (L, Y, M components) of d([x, z]) - [d(x), z] - [x, d(z)] = 0 in degree x.n+z.n+k."""
    block: list[dict[int, Fraction]] = [{}, {}, {}]

    def add(comp: str, col: int, c: Fraction):
        r = block[_FAM[comp]]
        t = r.get(col, 0) + c
        if t:
            r[col] = t
        else:
            r.pop(col, None)

    s = structure_constant(p, x, z)
    if s is not None:
        fam, c = s
        for i in range(3):
            add(FAMILIES[i], _col(w, fam, x.n + z.n, i), c)
    for i, g in enumerate(FAMILIES):
        s = structure_constant(p, Basis(g, x.n + k), z)
        if s is not None:
            add(s[0], _col(w, x.family, x.n, i), -s[1])
        s = structure_constant(p, x, Basis(g, z.n + k))
        if s is not None:
            add(s[0], _col(w, z.family, z.n, i), -s[1])
    return block


def leibniz_system(p: Params, k: int, w: Window) -> SparseMatrix:
    """Linear constraints on the 9(2N+1) unknowns of a degree-k table, one
    three-row block per constraint pair."""
    rows = []
    for x, z in constraint_pairs(k, w):
        rows.extend(leibniz_block(p, k, w, x, z))
    return SparseMatrix.from_row_dicts(rows, 9 * (2 * w.radius + 1))


def column_index(w: Window, family: str, n: int, component: int) -> int:
    """Position of the coefficient of the given component of d(family_n)."""
    return _col(w, family, n, component)


def derivation_space(p: Params, k: int, w: Window) -> list[GradedMapTable]:
    return [GradedMapTable.from_vector(k, w, v) for v in exactlin.nullspace(leibniz_system(p, k, w))]


def adjoint_table(p: Params, x: Element, w: Window) -> GradedMapTable:
    a = ad(p, x)
    if a.degree is None:
        raise ValueError("adjoint tables need a nonzero homogeneous element")
    return GradedMapTable.from_map(a.degree, w, a.image)


def inner_degree_space(p: Params, k: int, w: Window) -> list[GradedMapTable]:
    """Independent members of {ad L_k, ad Y_k, ad M_k}, in that order."""
    tables = [adjoint_table(p, Element.basis(f, k), w) for f in FAMILIES]
    keep = exactlin.independent_subset([t.vector() for t in tables])
    return [tables[i] for i in keep]


def h1_dimension(p: Params, k: int, w: Window) -> int:
    return len(derivation_space(p, k, w)) - len(inner_degree_space(p, k, w))


class OuterName(str, enum.Enum):
    D = "D"
    D_MINUS2 = "D_minus2"
    D_MINUS1 = "D_minus1"
    DBAR_MINUS1 = "Dbar_minus1"
    D_PLUS1 = "D_plus1"


_ADMISSIBLE = {
    OuterName.D: set(Case),
    OuterName.D_MINUS2: {Case.MU0_LAMBDA_MINUS2},
    OuterName.D_MINUS1: {Case.MU0_LAMBDA_MINUS1},
    OuterName.DBAR_MINUS1: {Case.MU0_LAMBDA_MINUS1},
    OuterName.D_PLUS1: {Case.MU0_LAMBDA_PLUS1},
}

# names the classification theorem lists as outer generators, per case
THEOREM_OUTER = {
    Case.GENERIC_MU: [OuterName.D],
    Case.MU0_LAMBDA_GENERIC: [OuterName.D],
    Case.MU0_LAMBDA_MINUS2: [OuterName.D, OuterName.D_MINUS2],
    Case.MU0_LAMBDA_MINUS1: [OuterName.D, OuterName.D_MINUS1, OuterName.DBAR_MINUS1],
    Case.MU0_LAMBDA_PLUS1: [OuterName.D, OuterName.D_PLUS1],
}


def admissible_outer(p: Params) -> list[OuterName]:
    return [name for name in OuterName if p.case in _ADMISSIBLE[name]]


def named_outer(p: Params, name, w: Window) -> GradedMapTable:
    name = OuterName(name)
    if p.case not in _ADMISSIBLE[name]:
        raise NameNotAdmissible(f"{name.value} is not defined for {p.case.value}")
    funcs = {
        OuterName.D: {("Y", 1): lambda n: 1, ("M", 2): lambda n: 2},
        OuterName.D_MINUS2: {("L", 2): lambda n: n**3},
        OuterName.D_MINUS1: {("L", 2): lambda n: n**2},
        OuterName.DBAR_MINUS1: {("Y", 2): lambda n: n},
        OuterName.D_PLUS1: {("Y", 2): lambda n: 1},
    }[name]
    return GradedMapTable.from_functions(0, w, funcs)


@dataclass(frozen=True)
class LeibnizViolation:
    pair: tuple[Basis, Basis]
    defect: Element


def is_derivation(p: Params, t: GradedMapTable) -> list[LeibnizViolation]:
    """Pairs on which the Leibniz rule fails, evaluated directly on elements."""
    out = []
    for x, z in constraint_pairs(t.degree, t.window):
        ex = Element({x: 1})
        ez = Element({z: 1})
        lhs = t(bracket(p, ex, ez))
        rhs = bracket(p, t(ex), ez) + bracket(p, ex, t(ez))
        if lhs != rhs:
            out.append(LeibnizViolation((x, z), lhs - rhs))
    return out


@dataclass(frozen=True)
class Decomposition:
    inner: tuple[Fraction, Fraction, Fraction]  # over ad L0, ad Y0, ad M0
    outer: dict  # OuterName -> Fraction

    def to_json(self) -> dict:
        return {
            "inner": [format_scalar(c) for c in self.inner],
            "outer": {k.value: format_scalar(v) for k, v in self.outer.items()},
        }


def _proof_combination(p: Params, t: GradedMapTable) -> tuple[Element, dict]:
    """Inner element and outer coefficients read off t by the closed-form recipe."""
    f = lambda fam, n, i: t.coeffs[(fam, n)][i]  # noqa: E731
    lam, mu = p.lam, p.mu
    a = f("L", 1, 0)
    abar = f("Y", 0, 1)
    L0, Y0, M0 = (Element.basis(g, 0) for g in FAMILIES)
    outer = {OuterName.D: abar - a * mu}
    if p.case is Case.GENERIC_MU:
        e, ebar = f("L", 0, 1), f("L", 0, 2)
        alpha = a * L0 + (-e / mu) * Y0 + (-ebar / (2 * mu)) * M0
    elif p.case is Case.MU0_LAMBDA_GENERIC:
        b, e = f("L", 1, 1), f("L", 1, 2)
        alpha = a * L0 + (2 * b / (1 + lam)) * Y0 + (e / lam) * M0
    elif p.case is Case.MU0_LAMBDA_MINUS2:
        b, c, cbar = f("L", 1, 1), f("L", 2, 2), f("L", 1, 2)
        alpha = a * L0 + (-2 * b) * Y0 + ((c - 8 * cbar) / 12) * M0
        outer[OuterName.D_MINUS2] = (c - 2 * cbar) / 6
    elif p.case is Case.MU0_LAMBDA_MINUS1:
        c, cbar, bhat = f("L", 2, 2), f("L", 1, 2), f("Y", 1, 2)
        alpha = a * L0 + ((c - 4 * cbar) / 2) * M0
        outer[OuterName.D_MINUS1] = (c - 2 * cbar) / 2
        outer[OuterName.DBAR_MINUS1] = bhat
    else:
        b, c, bbar = f("L", 1, 1), f("L", 1, 2), f("Y", 0, 2)
        alpha = a * L0 + b * Y0 + c * M0
        outer[OuterName.D_PLUS1] = bbar
    return alpha, outer


def decompose_derivation(p: Params, t: GradedMapTable) -> Decomposition:
    """Write a degree-0 derivation as inner part plus admissible outer maps.

    Coordinates come from span membership over (ad L0, ad Y0, ad M0, outer...).
    The closed-form recipe is then rebuilt and compared with t as a table.
    """
    if t.degree != 0:
        raise ValueError("decomposition is defined for degree-0 tables")
    if is_derivation(p, t):
        raise NotADerivation("table violates the Leibniz rule")
    w = t.window
    inner = [adjoint_table(p, Element.basis(g, 0), w) for g in FAMILIES]
    names = admissible_outer(p)
    outer = [named_outer(p, n, w) for n in names]
    coords = exactlin.in_span([x.vector() for x in inner + outer], t.vector())
    if coords is None:
        raise DecompositionFailed("table is not in the span of inner and outer derivations")

    alpha, proof_outer = _proof_combination(p, t)
    rebuilt = combine(
        [adjoint_table(p, alpha, w) if alpha else combine(inner, [0, 0, 0])]
        + [named_outer(p, n, w) for n in proof_outer],
        [1] + list(proof_outer.values()),
    )
    if rebuilt != t:
        raise DecompositionFailed("closed-form recipe does not reproduce the table")
    return Decomposition(tuple(coords[:3]), dict(zip(names, coords[3:])))


def _predicted_params(p: Params) -> dict[str, dict]:
    """Closed forms of the nine coefficient functions, one entry per free parameter.

    Each value maps (family, component) to a function of n, giving the table
    obtained by setting that parameter to 1 and all others to 0.
    """
    lam, mu = p.lam, p.mu
    common = {
        "a": {("L", 0): lambda n: n, ("Y", 1): lambda n: n, ("M", 2): lambda n: n},
        "abar": {("Y", 1): lambda n: 1, ("M", 2): lambda n: 2},
    }
    if p.case is Case.GENERIC_MU:
        extra = {
            "e": {
                ("L", 1): lambda n: (2 * mu - (lam + 1) * n) / (2 * mu),
                ("Y", 2): lambda n: -n / mu,
            },
            "ebar": {("L", 2): lambda n: (2 * mu - lam * n) / (2 * mu)},
        }
    elif p.case is Case.MU0_LAMBDA_MINUS2:
        extra = {
            "b": {("L", 1): lambda n: n, ("Y", 2): lambda n: Fraction(2, 1 + lam) * n},
            "c": {("L", 2): lambda n: Fraction(n**3 - n, 6)},
            "cbar": {("L", 2): lambda n: -Fraction(n**3 - 4 * n, 3)},
        }
    elif p.case is Case.MU0_LAMBDA_MINUS1:
        extra = {
            "c": {("L", 2): lambda n: Fraction(n**2 - n, 2)},
            "cbar": {("L", 2): lambda n: -(n**2 - 2 * n)},
            "bhat": {("Y", 2): lambda n: n},
        }
    elif p.case is Case.MU0_LAMBDA_PLUS1:
        extra = {
            "b": {("L", 1): lambda n: n, ("Y", 2): lambda n: n},
            "cbar": {("L", 2): lambda n: n},
            "bbar": {("Y", 2): lambda n: 1},
        }
    else:
        extra = {
            "b": {("L", 1): lambda n: n, ("Y", 2): lambda n: 2 / (1 + lam) * n},
            "cbar": {("L", 2): lambda n: n},
        }
    return {**common, **extra}


def predicted_parameter_names(p: Params) -> list[str]:
    return list(_predicted_params(p))


def predicted_degree0_basis(p: Params, w: Window) -> list[GradedMapTable]:
    return [GradedMapTable.from_functions(0, w, funcs) for funcs in _predicted_params(p).values()]


def predicted_table(p: Params, w: Window, **values) -> GradedMapTable:
    """The closed-form degree-0 table for given parameter values (missing ones are 0)."""
    names = predicted_parameter_names(p)
    unknown = set(values) - set(names)
    if unknown:
        raise ValueError(f"unknown parameters for {p.case.value}: {sorted(unknown)}")
    return combine(predicted_degree0_basis(p, w), [values.get(n, 0) for n in names])


@dataclass
class ClassificationReport:
    params: Params
    window: Window
    dim_deg0: int
    dim_inner_deg0: int
    h1_by_degree: dict[int, int]
    outer_basis_names: list[str]
    matches_theorem: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "window": self.window.radius,
            "dim_deg0": self.dim_deg0,
            "dim_inner_deg0": self.dim_inner_deg0,
            "h1_by_degree": {str(k): v for k, v in sorted(self.h1_by_degree.items())},
            "outer_basis_names": list(self.outer_basis_names),
            "matches_theorem": self.matches_theorem,
        }


def outer_basis(p: Params, w: Window) -> list[OuterName]:
    """Admissible named maps that are independent modulo the inner degree-0 space."""
    vecs = [t.vector() for t in inner_degree_space(p, 0, w)]
    chosen = []
    for name in admissible_outer(p):
        v = named_outer(p, name, w).vector()
        if exactlin.in_span(vecs, v) is None:
            vecs.append(v)
            chosen.append(name)
    return chosen


def classify(p: Params, w: Window, degrees: Optional[Sequence[int]] = None) -> ClassificationReport:
    """Compute the degree-wise derivation data and compare it with the theorem.

    ``matches_theorem`` requires: the solved degree-0 space equals the span of
    the inner maps and the closed-form tables; H^1 vanishes off degree 0; and
    the outer generators found are exactly those the theorem lists.
    """
    degrees = sorted(set(DEFAULT_DEGREES if degrees is None else degrees) | {0})
    der = {k: derivation_space(p, k, w) for k in degrees}
    inner = {k: inner_degree_space(p, k, w) for k in degrees}
    h1 = {k: len(der[k]) - len(inner[k]) for k in degrees}

    predicted = predicted_degree0_basis(p, w)
    span_ok = exactlin.same_span(
        [t.vector() for t in der[0]], [t.vector() for t in inner[0] + predicted]
    )
    names = outer_basis(p, w)
    expected = THEOREM_OUTER[p.case]
    notes = []
    if not span_ok:
        notes.append("solved degree-0 space differs from the closed-form span")
    off = {k: v for k, v in h1.items() if k != 0 and v != 0}
    if off:
        notes.append(f"nonzero H1 off degree 0: {off}")
    if names != expected:
        missing = [n.value for n in expected if n not in names]
        notes.append(f"theorem lists {[n.value for n in expected]}; inner or dependent: {missing}")
    return ClassificationReport(
        params=p,
        window=w,
        dim_deg0=len(der[0]),
        dim_inner_deg0=len(inner[0]),
        h1_by_degree=h1,
        outer_basis_names=[n.value for n in names],
        matches_theorem=span_ok and not off and names == expected,
        notes=notes,
    )
