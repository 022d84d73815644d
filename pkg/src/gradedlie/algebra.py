"""The twisted deformative Schrödinger-Virasoro algebra L(λ, μ).

Basis ``L_n, Y_n, M_n`` (n in Z) with

    [L_n, L_m] = (m - n) L_{n+m}
    [L_n, Y_m] = (m - (λ+1)n/2 + μ) Y_{n+m}
    [L_n, M_m] = (m - λn + 2μ) M_{n+m}
    [Y_n, Y_m] = (m - n) M_{n+m}
    [Y_n, M_m] = [M_n, M_m] = 0

Elements and brackets are total; a :class:`Window` only bounds verification
loops and the solvers built on top.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from gradedlie.errors import MuHalfInteger, MuNonzeroInteger, TwistedSVExcluded
from gradedlie.exactlin import format_scalar, to_scalar

FAMILIES = ("L", "Y", "M")
MIN_RADIUS = 5


class Case(str, enum.Enum):
    GENERIC_MU = "GenericMu"
    MU0_LAMBDA_MINUS2 = "MuZeroLambdaMinus2"
    MU0_LAMBDA_MINUS1 = "MuZeroLambdaMinus1"
    MU0_LAMBDA_PLUS1 = "MuZeroLambdaPlus1"
    MU0_LAMBDA_GENERIC = "MuZeroLambdaGeneric"


@dataclass(frozen=True)
class Params:
    lam: Fraction
    mu: Fraction
    case: Case

    @property
    def mu_zero(self) -> bool:
        return self.mu == 0

    def to_json(self) -> dict:
        return {"lambda": format_scalar(self.lam), "mu": format_scalar(self.mu), "case": self.case.value}

    def __str__(self):
        return f"(λ={format_scalar(self.lam)}, μ={format_scalar(self.mu)})"


def validate_params(lam, mu) -> Params:
    """Check the admissibility conditions on (λ, μ) and tag the case.

    Excluded: μ in 1/2 + Z; μ in Z other than 0; λ = μ = 0.
    """
    lam = to_scalar(lam)
    mu = to_scalar(mu)
    two_mu = 2 * mu
    if two_mu.denominator == 1 and two_mu.numerator % 2 != 0:
        raise MuHalfInteger(f"μ={format_scalar(mu)} lies in 1/2+Z")
    if mu.denominator == 1 and mu != 0:
        raise MuNonzeroInteger(f"μ={format_scalar(mu)} is a nonzero integer")
    if mu == 0 and lam == 0:
        raise TwistedSVExcluded("λ=μ=0 is the twisted Schrödinger-Virasoro algebra")
    if mu != 0:
        case = Case.GENERIC_MU
    elif lam == -2:
        case = Case.MU0_LAMBDA_MINUS2
    elif lam == -1:
        case = Case.MU0_LAMBDA_MINUS1
    elif lam == 1:
        case = Case.MU0_LAMBDA_PLUS1
    else:
        case = Case.MU0_LAMBDA_GENERIC
    return Params(lam, mu, case)


class Basis(NamedTuple):
    family: str
    n: int

    def __str__(self):
        return f"{self.family}{self.n}"


@dataclass(frozen=True)
class Window:
    radius: int

    def __post_init__(self):
        if self.radius < MIN_RADIUS:
            raise ValueError(f"window radius must be >= {MIN_RADIUS}, got {self.radius}")

    def __contains__(self, n: int) -> bool:
        return -self.radius <= n <= self.radius

    @property
    def indices(self) -> range:
        return range(-self.radius, self.radius + 1)

    def basis(self) -> list[Basis]:
        return [Basis(f, n) for f in FAMILIES for n in self.indices]


class Element:
    """Finite linear combination of basis vectors with rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Basis, object]] = None):
        clean = {}
        if terms:
            for b, c in terms.items():
                c = to_scalar(c)
                if c:
                    clean[Basis(*b)] = c
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict) -> "Element":
        e = cls.__new__(cls)
        e._terms = terms
        return e

    @classmethod
    def basis(cls, family: str, n: int, coeff=1) -> "Element":
        return cls({Basis(family, n): coeff})

    @property
    def terms(self) -> dict[Basis, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, b: Basis) -> Fraction:
        return self._terms.get(b, Fraction(0))

    def support(self) -> list[Basis]:
        return sorted(self._terms, key=lambda b: (FAMILIES.index(b.family), b.n))

    def component(self, family: str) -> "Element":
        return Element._raw({b: c for b, c in self._terms.items() if b.family == family})

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, Element):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        out = dict(self._terms)
        for b, c in other._terms.items():
            t = out.get(b, 0) + c
            if t:
                out[b] = t
            else:
                out.pop(b, None)
        return Element._raw(out)

    def __neg__(self):
        return Element._raw({b: -c for b, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self + (-other)

    def __mul__(self, s):
        s = to_scalar(s)
        if not s:
            return Element()
        return Element._raw({b: c * s for b, c in self._terms.items()})

    __rmul__ = __mul__

    def __repr__(self):
        return f"Element({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for b in self.support():
            c = self._terms[b]
            parts.append(str(b) if c == 1 else f"{format_scalar(c)}*{b}")
        return " + ".join(parts)

    def to_json(self) -> dict[str, str]:
        return {str(b): format_scalar(self._terms[b]) for b in self.support()}


def L(n: int, c=1) -> Element:
    return Element.basis("L", n, c)


def Y(n: int, c=1) -> Element:
    return Element.basis("Y", n, c)


def M(n: int, c=1) -> Element:
    return Element.basis("M", n, c)


def zero() -> Element:
    return Element()


# A structure function returns (family of [x, y], coefficient) or None when [x, y] = 0.
StructureFn = Callable[[Params, Basis, Basis], Optional[tuple[str, Fraction]]]


def structure_constant(p: Params, x: Basis, y: Basis) -> Optional[tuple[str, Fraction]]:
    """[x, y] for basis vectors; the result lies in degree x.n + y.n."""
    fx, n = x
    fy, m = y
    if fx == "L":
        if fy == "L":
            c = Fraction(m - n)
            return ("L", c) if c else None
        if fy == "Y":
            c = m - (p.lam + 1) * n / 2 + p.mu
            return ("Y", c) if c else None
        c = m - p.lam * n + 2 * p.mu
        return ("M", c) if c else None
    if fx == "Y":
        if fy == "L":
            c = -(n - (p.lam + 1) * m / 2 + p.mu)
            return ("Y", c) if c else None
        if fy == "Y":
            c = Fraction(m - n)
            return ("M", c) if c else None
        return None
    if fy == "L":
        c = -(n - p.lam * m + 2 * p.mu)
        return ("M", c) if c else None
    return None


def bracket(p: Params, x: Element, y: Element, structure: StructureFn = structure_constant) -> Element:
    out: dict[Basis, Fraction] = {}
    for bx, cx in x.items():
        for by, cy in y.items():
            r = structure(p, bx, by)
            if r is None:
                continue
            fam, c = r
            key = Basis(fam, bx.n + by.n)
            t = out.get(key, 0) + c * cx * cy
            if t:
                out[key] = t
            else:
                out.pop(key, None)
    return Element._raw(out)


def degree_of(x: Element) -> Optional[int]:
    """Common degree of a nonzero homogeneous element, else None."""
    degrees = {b.n for b, _ in x.items()}
    if len(degrees) == 1:
        return degrees.pop()
    return None


class AdjointMap:
    """The linear map y -> [x, y]."""

    def __init__(self, p: Params, x: Element):
        self.params = p
        self.element = x
        self.degree = degree_of(x)

    def __call__(self, y: Element) -> Element:
        return bracket(self.params, self.element, y)

    def image(self, b: Basis) -> Element:
        return bracket(self.params, self.element, Element({b: 1}))

    def on_window(self, w: Window) -> dict[Basis, Element]:
        return {b: self.image(b) for b in w.basis()}


def ad(p: Params, x: Element) -> AdjointMap:
    return AdjointMap(p, x)


@dataclass(frozen=True)
class JacobiViolation:
    triple: tuple[Basis, Basis, Basis]
    jacobiator: Element

    def to_json(self) -> dict:
        return {"triple": [str(b) for b in self.triple], "jacobiator": self.jacobiator.to_json()}


def jacobi_triples(w: Window) -> Iterator[tuple[Basis, Basis, Basis]]:
    """Basis triples whose degrees and all partial sums stay inside the window."""
    idx = w.indices
    for a, b, c in itertools.product(idx, repeat=3):
        if a + b in w and b + c in w and a + c in w and a + b + c in w:
            for fa, fb, fc in itertools.product(FAMILIES, repeat=3):
                yield Basis(fa, a), Basis(fb, b), Basis(fc, c)


def jacobi_check(p: Params, w: Window, structure: StructureFn = structure_constant) -> list[JacobiViolation]:
    """Every basis triple in the window whose Jacobiator is nonzero."""
    cache: dict = {}

    def sc(x, y):
        key = (x, y)
        if key not in cache:
            cache[key] = structure(p, x, y)
        return cache[key]

    def nested(x, y, z, acc):
        r = sc(x, y)
        if r is None:
            return
        r2 = sc(Basis(r[0], x.n + y.n), z)
        if r2 is None:
            return
        acc[r2[0]] = acc.get(r2[0], 0) + r[1] * r2[1]

    violations = []
    for x, y, z in jacobi_triples(w):
        acc: dict[str, Fraction] = {}
        nested(x, y, z, acc)
        nested(y, z, x, acc)
        nested(z, x, y, acc)
        if any(acc.values()):
            deg = x.n + y.n + z.n
            j = Element({Basis(f, deg): c for f, c in acc.items()})
            violations.append(JacobiViolation((x, y, z), j))
    return violations
