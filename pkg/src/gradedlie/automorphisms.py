"""Automorphisms of L(λ, μ): constructors, checks and factorization.

Maps are stored as rules on basis vectors, evaluated lazily and memoized, so
they act on the whole algebra and never lose terms at a window edge. Maps read
from image tables are only known on a finite index range; reaching past it
raises :class:`WindowOverflow`.

Every automorphism factors as

    σ = exp(ad w) ∘ flip(ε) ∘ scale(α, β) ∘ φ

with φ unipotent (identity plus L→Y, L→M, Y→M terms in the same degree).
φ is then split further according to the parameter case.
"""

from __future__ import annotations

import random
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from gradedlie import exactlin
from gradedlie.algebra import (
    FAMILIES,
    Basis,
    Case,
    Element,
    Params,
    Window,
    bracket,
    structure_constant,
)
from gradedlie.errors import (
    CaseNotAdmissible,
    DiagonalRequiresMuZero,
    FlipRequiresMuZero,
    NotAutomorphism,
    ResidualNotIdentity,
    ShapeViolation,
    UnsupportedSupport,
    WindowOverflow,
    ZeroParameter,
)
from gradedlie.exactlin import format_scalar, to_scalar

GUARD_BAND = 2


# -- tags ---------------------------------------------------------------------


@dataclass(frozen=True)
class Flip:
    eps: int


@dataclass(frozen=True)
class Scale:
    alpha: Fraction
    beta: Fraction


@dataclass(frozen=True)
class Unipotent:
    b: Fraction
    exponent: int


@dataclass(frozen=True)
class Shear:
    e: Fraction


@dataclass(frozen=True)
class Diagonal:
    t: Fraction


@dataclass(frozen=True)
class InnerExp:
    x: Element


@dataclass(frozen=True)
class Composite:
    parts: tuple


@dataclass(frozen=True)
class Table:
    radius: int


Tag = Union[Flip, Scale, Unipotent, Shear, Diagonal, InnerExp, Composite, Table]


def describe_tag(tag) -> str:
    if isinstance(tag, Flip):
        return f"flip({tag.eps})"
    if isinstance(tag, Scale):
        return f"scale({format_scalar(tag.alpha)}, {format_scalar(tag.beta)})"
    if isinstance(tag, Unipotent):
        return f"unipotent({format_scalar(tag.b)})"
    if isinstance(tag, Shear):
        return f"shear({format_scalar(tag.e)})"
    if isinstance(tag, Diagonal):
        return f"diagonal({format_scalar(tag.t)})"
    if isinstance(tag, InnerExp):
        return f"exp(ad({tag.x}))"
    if isinstance(tag, Composite):
        return " ∘ ".join(describe_tag(t) for t in tag.parts)
    if isinstance(tag, Table):
        return f"table(N={tag.radius})"
    return "map"


# -- maps ---------------------------------------------------------------------


class AutMap:
    """Linear map on L(λ, μ) given by its action on basis vectors.

    ``rule`` maps a Basis to its image. ``limit`` bounds the indices the rule
    knows about (None for maps defined by a formula on all of Z).
    """

    def __init__(
        self,
        p: Params,
        window: Window,
        rule: Callable[[Basis], Element],
        tag: Optional[Tag] = None,
        limit: Optional[int] = None,
    ):
        self.params = p
        self.window = window
        self.tag = tag
        self.limit = limit
        self._rule = rule
        self._cache: dict[Basis, Element] = {}

    def image(self, b: Basis) -> Element:
        b = Basis(*b)
        out = self._cache.get(b)
        if out is None:
            if self.limit is not None and abs(b.n) > self.limit:
                raise WindowOverflow(f"image of {b} is not known (table covers |n| <= {self.limit})")
            out = self._rule(b)
            self._cache[b] = out
        return out

    def __call__(self, x: Element) -> Element:
        out: dict[Basis, Fraction] = {}
        for b, c in x.items():
            for b2, c2 in self.image(b).items():
                t = out.get(b2, 0) + c * c2
                if t:
                    out[b2] = t
                else:
                    out.pop(b2, None)
        return Element._raw(out)

    @property
    def images(self) -> dict[Basis, Element]:
        return {b: self.image(b) for b in self.window.basis()}

    def __eq__(self, other):
        if not isinstance(other, AutMap):
            return NotImplemented
        return self.window == other.window and all(self.image(b) == other.image(b) for b in self.window.basis())

    __hash__ = None

    def __repr__(self):
        return f"AutMap({describe_tag(self.tag)}, N={self.window.radius})"

    def to_json(self, radius: Optional[int] = None) -> dict:
        """Sparse image table; defaults to the window plus the guard band."""
        if radius is None:
            radius = self.window.radius + GUARD_BAND
            if self.limit is not None:
                radius = min(radius, self.limit)
        images = {}
        for f in FAMILIES:
            for n in range(-radius, radius + 1):
                images[f"{f}{n}"] = self.image(Basis(f, n)).to_json()
        return {"params": self.params.to_json(), "window": self.window.radius, "radius": radius, "images": images}


def identity(p: Params, w: Window) -> AutMap:
    return AutMap(p, w, lambda b: Element({b: 1}), Composite(()))


def from_table(p: Params, w: Window, images: dict[Basis, Element]) -> AutMap:
    """Map known only on the listed basis vectors, which must cover the window.

    The usable range is the largest symmetric index range fully present in
    the table; anything past it raises WindowOverflow when reached.
    """
    known = {Basis(*b): e for b, e in images.items()}
    missing = [b for b in w.basis() if b not in known]
    if missing:
        raise WindowOverflow(f"table does not cover the window; first missing: {missing[0]}")
    limit = w.radius
    while all(Basis(f, n) in known for f in FAMILIES for n in (-limit - 1, limit + 1)):
        limit += 1

    def rule(b):
        try:
            return known[b]
        except KeyError:
            raise WindowOverflow(f"image of {b} is not in the table") from None

    return AutMap(p, w, rule, Table(limit), limit=limit)


def make_flip(p: Params, w: Window, eps: int) -> AutMap:
    if eps not in (1, -1):
        raise ValueError("eps must be 1 or -1")
    if eps == -1 and not p.mu_zero:
        raise FlipRequiresMuZero("the flip with eps=-1 needs mu=0")

    def rule(b):
        sign = eps if b.family in ("L", "M") else 1
        return Element({Basis(b.family, eps * b.n): sign})

    return AutMap(p, w, rule, Flip(eps))


def make_scale(p: Params, w: Window, alpha, beta) -> AutMap:
    alpha, beta = to_scalar(alpha), to_scalar(beta)
    if not alpha or not beta:
        raise ZeroParameter("alpha and beta must be nonzero")
    power = {"L": 0, "Y": 1, "M": 2}

    def rule(b):
        return Element({b: alpha**b.n * beta ** power[b.family]})

    return AutMap(p, w, rule, Scale(alpha, beta))


def make_unipotent(p: Params, w: Window, b, exponent: Optional[int] = None) -> AutMap:
    """L_n -> L_n + b n^3 M_n (λ=-2) or L_n + b n^2 M_n (λ=-1); Y and M fixed.

    ``exponent`` overrides the power of n; only meant for building broken maps.
    """
    natural = {Case.MU0_LAMBDA_MINUS2: 3, Case.MU0_LAMBDA_MINUS1: 2}
    if p.case not in natural:
        raise CaseNotAdmissible(f"unipotent maps need lambda in {{-2, -1}} and mu=0, got {p.case.value}")
    b = to_scalar(b)
    k = natural[p.case] if exponent is None else exponent

    def rule(x):
        if x.family == "L":
            return Element({x: 1, Basis("M", x.n): b * x.n**k})
        return Element({x: 1})

    return AutMap(p, w, rule, Unipotent(b, k))


def make_shear(p: Params, w: Window, e) -> AutMap:
    """Y_n -> Y_n + e n M_n (λ=-1) or Y_n + e M_n (λ=1); L and M fixed."""
    if p.case not in (Case.MU0_LAMBDA_MINUS1, Case.MU0_LAMBDA_PLUS1):
        raise CaseNotAdmissible(f"shear maps need lambda in {{-1, 1}} and mu=0, got {p.case.value}")
    e = to_scalar(e)
    linear = p.case is Case.MU0_LAMBDA_MINUS1

    def rule(x):
        if x.family == "Y":
            return Element({x: 1, Basis("M", x.n): e * x.n if linear else e})
        return Element({x: 1})

    return AutMap(p, w, rule, Shear(e))


def make_inner_exp(p: Params, w: Window, x: Element) -> AutMap:
    """exp(ad x) for x in the span of the Y and M families.

    (ad x)^3 vanishes there, so the series stops after the square term.
    """
    if any(b.family == "L" for b, _ in x.items()):
        raise UnsupportedSupport("exp(ad x) is only built for x without L terms; use make_diagonal")

    def rule(b):
        y = Element({b: 1})
        once = bracket(p, x, y)
        twice = bracket(p, x, once)
        return y + once + twice * Fraction(1, 2)

    return AutMap(p, w, rule, InnerExp(x))


def make_diagonal(p: Params, w: Window, t) -> AutMap:
    """X_n -> t^n X_n, standing in for exp(a ad L0) with t = e^a."""
    if not p.mu_zero:
        raise DiagonalRequiresMuZero("the diagonal family needs mu=0")
    t = to_scalar(t)
    if not t:
        raise ZeroParameter("t must be nonzero")
    return AutMap(p, w, lambda b: Element({b: t**b.n}), Diagonal(t))


def compose(*maps: AutMap) -> AutMap:
    """Left-to-right product: compose(a, b)(x) = a(b(x)).

    Images are computed eagerly on the window, so a missing table entry is
    reported here rather than later.
    """
    if not maps:
        raise ValueError("nothing to compose")
    first = maps[0]
    for m in maps[1:]:
        if m.params != first.params or m.window != first.window:
            raise ValueError("composed maps must share parameters and window")
    if len(maps) == 1:
        return first
    inner = maps[-1] if len(maps) == 2 else compose(*maps[1:])
    outer = maps[0]

    def rule(b):
        return outer(inner.image(b))

    parts = []
    for m in (outer, inner):
        parts.extend(m.tag.parts if isinstance(m.tag, Composite) else (m.tag,))
    limit = None
    if outer.limit is not None or inner.limit is not None:
        limit = min(x for x in (outer.limit, inner.limit) if x is not None)
    out = AutMap(first.params, first.window, rule, Composite(tuple(parts)), limit=limit)
    out.images  # eager window evaluation
    return out


# -- checks -------------------------------------------------------------------


@dataclass(frozen=True)
class HomViolation:
    pair: tuple[Basis, Basis]
    defect: Element

    def to_json(self) -> dict:
        return {"pair": [str(b) for b in self.pair], "defect": self.defect.to_json()}


@dataclass
class AutomorphismReport:
    violations: list[HomViolation]
    full_rank: bool

    @property
    def ok(self) -> bool:
        return not self.violations and self.full_rank

    def __bool__(self):
        # truthy when something is wrong, like a nonempty violation list
        return not self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "full_rank": self.full_rank,
            "violations": [v.to_json() for v in self.violations],
        }


def is_automorphism(p: Params, a: AutMap, limit: Optional[int] = None) -> AutomorphismReport:
    """Homomorphism check on window basis pairs plus invertibility on the window.

    ``limit`` stops after that many violations.
    """
    w = a.window
    violations = []
    basis = w.basis()
    for x in basis:
        ax = a.image(x)
        for y in basis:
            if x.n + y.n not in w:
                continue
            s = structure_constant(p, x, y)
            lhs = a.image(Basis(s[0], x.n + y.n)) * s[1] if s else Element()
            rhs = bracket(p, ax, a.image(y))
            if lhs != rhs:
                violations.append(HomViolation((x, y), lhs - rhs))
                if limit is not None and len(violations) >= limit:
                    return AutomorphismReport(violations, _full_rank(a))
    return AutomorphismReport(violations, _full_rank(a))


def _full_rank(a: AutMap) -> bool:
    cols: dict[Basis, int] = {}
    rows = []
    for b in a.window.basis():
        row = {}
        for b2, c in a.image(b).items():
            row[cols.setdefault(b2, len(cols))] = c
        rows.append(row)
    if len(cols) < len(rows):
        return False
    m = exactlin.SparseMatrix.from_row_dicts(rows, len(cols))
    return exactlin.rank(m) == len(rows)


@dataclass(frozen=True)
class Shape:
    eps: int
    alpha: Fraction
    beta: Fraction


def shape_check(p: Params, a: AutMap) -> Shape:
    """Read (ε, α, β) and confirm the triangular form on the whole window.

    Required form, with y_n, m_n, m'_n arbitrary in the Y and M spans:
    σ(L_n) = εα^n L_{εn} + y_n + m_n,  σ(Y_n) = α^n β Y_{εn} + m'_n,
    σ(M_n) = εα^n β^2 M_{εn}.
    """
    lead = a.image(Basis("L", 1)).component("L")
    if len(lead) != 1:
        raise ShapeViolation(f"L-part of σ(L1) is {lead}, expected a single term")
    (b, c), = lead.items()
    if b.n not in (1, -1):
        raise ShapeViolation(f"σ(L1) has L-part at index {b.n}, expected ±1")
    eps = b.n
    if eps == -1 and not p.mu_zero:
        raise ShapeViolation("eps=-1 is impossible for mu != 0")
    alpha = c / eps
    beta = a.image(Basis("Y", 0)).coeff(Basis("Y", 0))
    if not beta:
        raise ShapeViolation("σ(Y0) has no Y0 term")
    for n in a.window.indices:
        want = Element({Basis("L", eps * n): eps * alpha**n})
        if a.image(Basis("L", n)).component("L") != want:
            raise ShapeViolation(f"L-part of σ(L{n}) is not {want}")
        img = a.image(Basis("Y", n))
        want = Element({Basis("Y", eps * n): alpha**n * beta})
        if img.component("L") or img.component("Y") != want:
            raise ShapeViolation(f"σ(Y{n}) does not have Y-part {want} and no L-part")
        want = Element({Basis("M", eps * n): eps * alpha**n * beta**2})
        if a.image(Basis("M", n)) != want:
            raise ShapeViolation(f"σ(M{n}) is not {want}")
    return Shape(eps, alpha, beta)


# -- unipotent residuals ------------------------------------------------------


@dataclass(frozen=True)
class UnipotentAutSpec:
    """φ(L_n) = L_n + fbar(n) Y_n + f(n) M_n, φ(Y_n) = Y_n + g(n) M_n, φ(M_n) = M_n."""

    fbar: dict[int, Fraction]
    f: dict[int, Fraction]
    g: dict[int, Fraction]

    @classmethod
    def from_map(cls, phi: AutMap) -> "UnipotentAutSpec":
        fbar, f, g = {}, {}, {}
        for n in phi.window.indices:
            L, Yb, M = (Basis(x, n) for x in FAMILIES)
            checks = (
                (L, Element({L: 1, Yb: phi.image(L).coeff(Yb), M: phi.image(L).coeff(M)})),
                (Yb, Element({Yb: 1, M: phi.image(Yb).coeff(M)})),
                (M, Element({M: 1})),
            )
            for b, want in checks:
                if phi.image(b) != want:
                    raise ResidualNotIdentity(f"residual is not unipotent at {b}: {phi.image(b)}")
            fbar[n] = phi.image(L).coeff(Yb)
            f[n] = phi.image(L).coeff(M)
            g[n] = phi.image(Yb).coeff(M)
        return cls(fbar, f, g)

    def to_json(self) -> dict:
        return {
            name: {str(n): format_scalar(v) for n, v in sorted(getattr(self, name).items())}
            for name in ("fbar", "f", "g")
        }


@dataclass
class UnipotentFit:
    """Closed-form parameters fitted to a unipotent residual, with the verdict."""

    params: dict[str, Fraction]
    conforms: bool
    mismatches: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "params": {k: format_scalar(v) for k, v in self.params.items()},
            "conforms": self.conforms,
            "mismatches": list(self.mismatches),
        }


def _closed_forms(p: Params, spec: UnipotentAutSpec) -> tuple[dict, dict]:
    """Fitted parameters and predicted (fbar, f, g) functions for the case.

    λ=-2:  fbar = bn, g = -2bn, f = c/6(n³-n) - c̄/3(n³-4n) + b²/3 n(n-1)(n-2)
    λ=-1:  fbar = 0,  g = an,   f = c/2(n²-n) - c̄(n²-2n)
    λ=1:   fbar = bn, g = bn+ā, f = c̄n + b²/2 n(n-1)
    other: fbar = bn, g = 2b/(1+λ) n, f = c̄n + b²/(1+λ) n(n-1)
    For μ ≠ 0 the residual must be the identity.
    """
    lam = p.lam
    zero = lambda n: Fraction(0)  # noqa: E731
    if not p.mu_zero:
        return {}, {"fbar": zero, "f": zero, "g": zero}
    if p.case is Case.MU0_LAMBDA_MINUS2:
        b, c, cbar = spec.fbar[1], spec.f[2], spec.f[1]
        params = {"b": b, "c": c, "cbar": cbar}
        forms = {
            "fbar": lambda n: b * n,
            "g": lambda n: -2 * b * n,
            "f": lambda n: c / 6 * (n**3 - n) - cbar / 3 * (n**3 - 4 * n) + b * b / 3 * n * (n - 1) * (n - 2),
        }
    elif p.case is Case.MU0_LAMBDA_MINUS1:
        a, c, cbar = spec.g[1], spec.f[2], spec.f[1]
        params = {"a": a, "c": c, "cbar": cbar}
        forms = {
            "fbar": zero,
            "g": lambda n: a * n,
            "f": lambda n: c / 2 * (n * n - n) - cbar * (n * n - 2 * n),
        }
    elif p.case is Case.MU0_LAMBDA_PLUS1:
        b, abar, cbar = spec.fbar[1], spec.g[0], spec.f[1]
        params = {"b": b, "abar": abar, "cbar": cbar}
        forms = {
            "fbar": lambda n: b * n,
            "g": lambda n: b * n + abar,
            "f": lambda n: cbar * n + b * b / 2 * n * (n - 1),
        }
    else:
        b, cbar = spec.fbar[1], spec.f[1]
        params = {"b": b, "cbar": cbar}
        forms = {
            "fbar": lambda n: b * n,
            "g": lambda n: 2 * b / (1 + lam) * n,
            "f": lambda n: cbar * n + b * b / (1 + lam) * n * (n - 1),
        }
    return params, forms


def fit_unipotent(p: Params, spec: UnipotentAutSpec) -> UnipotentFit:
    """Fit the case closed forms on n in {0, 1, 2} and verify them on every window index."""
    params, forms = _closed_forms(p, spec)
    mismatches = []
    for name, fn in forms.items():
        table = getattr(spec, name)
        for n in sorted(table):
            if table[n] != fn(n):
                mismatches.append(f"{name}({n}) = {format_scalar(table[n])}, closed form gives {format_scalar(fn(n))}")
    return UnipotentFit(params, not mismatches, mismatches)


# -- factorization ------------------------------------------------------------


@dataclass
class FactorizationResult:
    epsilon: int
    alpha: Fraction
    beta: Fraction
    unipotent_b: Optional[Fraction]
    shear_e: Optional[Fraction]
    inner_witness: list[Element]
    residual_is_identity: bool
    roundtrip: bool
    unipotent_part: UnipotentAutSpec
    fit: UnipotentFit
    factors: list[AutMap] = field(repr=False)

    def recompose(self) -> AutMap:
        return compose(*self.factors)

    def to_json(self) -> dict:
        opt = lambda v: None if v is None else format_scalar(v)  # noqa: E731
        return {
            "epsilon": format_scalar(Fraction(self.epsilon)),
            "alpha": format_scalar(self.alpha),
            "beta": format_scalar(self.beta),
            "unipotent_b": opt(self.unipotent_b),
            "shear_e": opt(self.shear_e),
            "inner_witness": [x.to_json() for x in self.inner_witness],
            "residual_is_identity": self.residual_is_identity,
            "roundtrip": self.roundtrip,
            "factors": [describe_tag(f.tag) for f in self.factors],
            "unipotent_fit": self.fit.to_json(),
        }


def inner_correction(p: Params, image_of_l0: Element, eps: int) -> Element:
    """w in span{Y_i, M_j} with exp(ad w)(ε L0) equal to the given element.

    exp(ad w)(εL0) = εL0 - ε Σ y_i (i+μ) Y_i
                     - ε Σ m_j (j+2μ) M_j - (ε/2) Σ y_k y_i (i+μ)(i-k) M_{k+i},
    solved first for the y_i and then for the m_j. Indices where the weight
    vanishes (only possible for μ = 0) are skipped.
    """
    mu = p.mu
    y = {}
    for b, c in image_of_l0.component("Y").items():
        if b.n + mu:
            y[b.n] = -c / (eps * (b.n + mu))
    quad: dict[int, Fraction] = {}
    for k, yk in y.items():
        for i, yi in y.items():
            t = yk * yi * (i + mu) * (i - k)
            if t:
                quad[k + i] = quad.get(k + i, 0) - Fraction(eps, 2) * t
    target = {b.n: c for b, c in image_of_l0.component("M").items()}
    m = {}
    for j in set(target) | set(quad):
        if j + 2 * mu:
            m[j] = (quad.get(j, 0) - target.get(j, 0)) / (eps * (j + 2 * mu))
    terms = {Basis("Y", i): v for i, v in y.items()}
    terms.update({Basis("M", j): v for j, v in m.items()})
    return Element(terms)


def factor(p: Params, sigma: AutMap, check: bool = True) -> FactorizationResult:
    """Split an automorphism into inner, flip, scale and case-specific factors.

    Raises NotAutomorphism if ``check`` and sigma fails the homomorphism test,
    ShapeViolation if the triangular form fails, ResidualNotIdentity if the
    stripped residual is not the identity (which would be a bug).
    """
    w = sigma.window
    if check:
        rep = is_automorphism(p, sigma, limit=1)
        if not rep.ok:
            where = rep.violations[0].pair if rep.violations else "rank"
            raise NotAutomorphism(f"input is not an automorphism on the window (first failure: {where})")
    shape = shape_check(p, sigma)
    eps, alpha, beta = shape.eps, shape.alpha, shape.beta

    witness = inner_correction(p, sigma.image(Basis("L", 0)), eps)
    theta = make_inner_exp(p, w, witness)
    flip = make_flip(p, w, eps)
    scale = make_scale(p, w, alpha, beta)
    stripped = compose(
        make_scale(p, w, 1 / alpha, 1 / beta), make_flip(p, w, eps), make_inner_exp(p, w, -witness), sigma
    )
    if stripped.image(Basis("L", 0)) != Element({Basis("L", 0): 1}):
        raise ResidualNotIdentity(f"after the inner correction σ(L0) became {stripped.image(Basis('L', 0))}")
    spec = UnipotentAutSpec.from_map(stripped)
    fit = fit_unipotent(p, spec)
    q = fit.params
    lam = p.lam

    unip_b = shear_e = None
    tail: list[AutMap] = []
    if p.case is Case.MU0_LAMBDA_MINUS2:
        b, c, cbar = q["b"], q["c"], q["cbar"]
        u = Element({Basis("Y", 0): -2 * b, Basis("M", 0): (c - 8 * cbar - 4 * b * b) / 12})
        unip_b = (c - 2 * cbar + 2 * b * b) / 6
        tail = [make_inner_exp(p, w, u), make_unipotent(p, w, unip_b)]
    elif p.case is Case.MU0_LAMBDA_MINUS1:
        c, cbar = q["c"], q["cbar"]
        shear_e = q["a"]
        u = Element({Basis("M", 0): (c - 4 * cbar) / 2})
        unip_b = (c - 2 * cbar) / 2
        tail = [make_shear(p, w, shear_e), make_inner_exp(p, w, u), make_unipotent(p, w, unip_b)]
    elif p.case is Case.MU0_LAMBDA_PLUS1:
        b, cbar = q["b"], q["cbar"]
        shear_e = q["abar"]
        u = Element({Basis("Y", 0): b, Basis("M", 0): -(b * b - 2 * cbar) / 2})
        tail = [make_inner_exp(p, w, u), make_shear(p, w, shear_e)]
    elif p.case is Case.MU0_LAMBDA_GENERIC:
        b, cbar = q["b"], q["cbar"]
        u = Element({Basis("Y", 0): 2 * b / (lam + 1), Basis("M", 0): (cbar * (lam + 1) - b * b) / (lam * lam + lam)})
        tail = [make_inner_exp(p, w, u)]
    else:
        u = Element()

    inverse_tail = [_inverse(p, w, t) for t in reversed(tail)]
    residual = compose(*inverse_tail, stripped) if inverse_tail else stripped
    residual_ok = residual == identity(p, w)
    if not residual_ok:
        raise ResidualNotIdentity("case factors do not strip the unipotent part to the identity")
    factors = [f for f in (theta, flip, scale, *tail) if not _trivial_exp(f)]
    roundtrip = compose(*factors) == sigma
    if not roundtrip:
        raise ResidualNotIdentity("recomposed factors differ from the input")
    witnesses = [x for x in (witness, u) if x]
    return FactorizationResult(
        epsilon=eps,
        alpha=alpha,
        beta=beta,
        unipotent_b=unip_b,
        shear_e=shear_e,
        inner_witness=witnesses,
        residual_is_identity=residual_ok,
        roundtrip=roundtrip,
        unipotent_part=spec,
        fit=fit,
        factors=factors,
    )


def _trivial_exp(a: AutMap) -> bool:
    return isinstance(a.tag, InnerExp) and not a.tag.x


def _inverse(p: Params, w: Window, a: AutMap) -> AutMap:
    tag = a.tag
    if isinstance(tag, Flip):
        return make_flip(p, w, tag.eps)
    if isinstance(tag, Scale):
        return make_scale(p, w, 1 / tag.alpha, 1 / tag.beta)
    if isinstance(tag, Unipotent):
        return make_unipotent(p, w, -tag.b, tag.exponent)
    if isinstance(tag, Shear):
        return make_shear(p, w, -tag.e)
    if isinstance(tag, Diagonal):
        return make_diagonal(p, w, 1 / tag.t)
    if isinstance(tag, InnerExp):
        return make_inner_exp(p, w, -tag.x)
    raise ValueError(f"no closed-form inverse for {describe_tag(tag)}")


# -- sampling and group laws --------------------------------------------------


def random_rational(rng: random.Random) -> Fraction:
    """Numerator and denominator uniform on [-9, 9] without 0."""
    choices = [k for k in range(-9, 10) if k]
    return Fraction(rng.choice(choices), rng.choice(choices))


def sample_rng(seed: int, label: str, i: int) -> random.Random:
    """Independent stream per sample, derived from the run seed."""
    return random.Random(f"{seed}:{label}:{i}")


def random_inner_element(rng: random.Random, spread: int = 2, terms: int = 3) -> Element:
    out = {}
    for _ in range(rng.randint(1, terms)):
        out[Basis(rng.choice("YM"), rng.randint(-spread, spread))] = random_rational(rng)
    return Element(out)


def constructor_families(p: Params) -> list[str]:
    fams = ["flip", "scale", "inner_exp"]
    if p.mu_zero:
        fams.append("diagonal")
    if p.case in (Case.MU0_LAMBDA_MINUS2, Case.MU0_LAMBDA_MINUS1):
        fams.append("unipotent")
    if p.case in (Case.MU0_LAMBDA_MINUS1, Case.MU0_LAMBDA_PLUS1):
        fams.append("shear")
    return fams


def sample_constructor(p: Params, w: Window, family: str, rng: random.Random) -> AutMap:
    if family == "flip":
        return make_flip(p, w, rng.choice((1, -1)) if p.mu_zero else 1)
    if family == "scale":
        return make_scale(p, w, random_rational(rng), random_rational(rng))
    if family == "inner_exp":
        return make_inner_exp(p, w, random_inner_element(rng))
    if family == "diagonal":
        return make_diagonal(p, w, random_rational(rng))
    if family == "unipotent":
        return make_unipotent(p, w, random_rational(rng))
    if family == "shear":
        return make_shear(p, w, random_rational(rng))
    raise ValueError(f"unknown constructor family {family!r}")


@dataclass
class SampledComposite:
    """A random composite together with the parameters factor() should recover."""

    sigma: AutMap
    expected: dict


def random_composite(p: Params, w: Window, rng: random.Random) -> SampledComposite:
    """exp(ad x) ∘ flip(ε) ∘ diagonal(t) ∘ scale(α, β) ∘ unipotent(b) ∘ shear(e).

    Factors not available in the case are left out. The expected α is α·t,
    since diagonal(t) equals scale(t, 1). At λ=-1, exp(s ad Y0) coincides
    with shear(s), so the Y0 coefficient s of x contributes s/β to e.
    """
    alpha, beta = random_rational(rng), random_rational(rng)
    x = random_inner_element(rng)
    parts = [make_inner_exp(p, w, x)]
    expected: dict = {"epsilon": 1, "alpha": alpha, "beta": beta, "unipotent_b": None, "shear_e": None}
    if p.mu_zero:
        eps = rng.choice((1, -1))
        t = random_rational(rng)
        parts += [make_flip(p, w, eps), make_diagonal(p, w, t)]
        expected["epsilon"] = eps
        expected["alpha"] = alpha * t
    parts.append(make_scale(p, w, alpha, beta))
    if p.case in (Case.MU0_LAMBDA_MINUS2, Case.MU0_LAMBDA_MINUS1):
        b = random_rational(rng)
        parts.append(make_unipotent(p, w, b))
        expected["unipotent_b"] = b
    if p.case in (Case.MU0_LAMBDA_MINUS1, Case.MU0_LAMBDA_PLUS1):
        e = random_rational(rng)
        parts.append(make_shear(p, w, e))
        if p.case is Case.MU0_LAMBDA_MINUS1:
            e += x.coeff(Basis("Y", 0)) / beta
        expected["shear_e"] = e
    return SampledComposite(compose(*parts), expected)


@dataclass
class GroupLawReport:
    checked: dict[str, int]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": dict(sorted(self.checked.items())), "failures": list(self.failures)}


def verify_group_laws(p: Params, w: Window, samples: int = 20, seed: int = 0) -> GroupLawReport:
    """Check the composition laws of the constructor families on random samples.

    scale(α,β)∘scale(α',β') = scale(αα',ββ'); flip(ε)∘flip(ε') = flip(εε');
    unipotent(b)∘unipotent(b') = unipotent(b+b'); shear(e)∘shear(e') = shear(e+e').
    """
    checked: dict[str, int] = {}
    failures: list[str] = []

    def record(law, lhs, rhs, label):
        checked[law] = checked.get(law, 0) + 1
        if lhs != rhs:
            failures.append(f"{law}: {label}")

    if p.mu_zero:
        for e1 in (1, -1):
            for e2 in (1, -1):
                record("flip", compose(make_flip(p, w, e1), make_flip(p, w, e2)), make_flip(p, w, e1 * e2), f"{e1},{e2}")
    for i in range(samples):
        rng = sample_rng(seed, "laws", i)
        a1, b1, a2, b2 = (random_rational(rng) for _ in range(4))
        record(
            "scale",
            compose(make_scale(p, w, a1, b1), make_scale(p, w, a2, b2)),
            make_scale(p, w, a1 * a2, b1 * b2),
            f"({a1},{b1})·({a2},{b2})",
        )
        s, t = random_rational(rng), random_rational(rng)
        if p.case in (Case.MU0_LAMBDA_MINUS2, Case.MU0_LAMBDA_MINUS1):
            record(
                "unipotent",
                compose(make_unipotent(p, w, s), make_unipotent(p, w, t)),
                make_unipotent(p, w, s + t),
                f"{s}+{t}",
            )
        if p.case in (Case.MU0_LAMBDA_MINUS1, Case.MU0_LAMBDA_PLUS1):
            record("shear", compose(make_shear(p, w, s), make_shear(p, w, t)), make_shear(p, w, s + t), f"{s}+{t}")
    return GroupLawReport(checked, failures)


__all__ = [
    "AutMap",
    "AutomorphismReport",
    "FactorizationResult",
    "GroupLawReport",
    "UnipotentAutSpec",
    "UnipotentFit",
    "compose",
    "factor",
    "fit_unipotent",
    "from_table",
    "identity",
    "is_automorphism",
    "make_diagonal",
    "make_flip",
    "make_inner_exp",
    "make_scale",
    "make_shear",
    "make_unipotent",
    "random_composite",
    "shape_check",
    "verify_group_laws",
]
