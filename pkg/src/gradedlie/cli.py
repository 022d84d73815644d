"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 for invalid input or excluded parameters.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from gradedlie import __version__
from gradedlie import automorphisms as aut
from gradedlie.algebra import Basis, Element, Params, Window, jacobi_check, jacobi_triples, validate_params
from gradedlie.derivations import classify
from gradedlie.errors import CheckFailed, GradedLieError, InvalidInput, ParameterError
from gradedlie.exactlin import format_scalar, to_scalar

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2

DEFAULT_WINDOW = 6
DEFAULT_DEGREES = (-3, 3)
DEFAULT_GRID = [("3", "1/3"), ("-2", "0"), ("-1", "0"), ("1", "0"), ("7", "0")]

# flags whose value may start with "-"
_VALUE_FLAGS = {"--lambda", "--mu", "--degrees", "--window", "--seed", "--samples", "--jobs"}

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")
_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+(?:/\d+)?)\s*\*\s*)?([LYM])\s*(-?\d+)\s*")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not _RATIONAL.match(text):
        raise InvalidInput(f"not an exact rational: {text!r} (use p/q or an integer)")
    return Fraction(text)


def parse_element(text: str) -> Element:
    """Parse sums like ``Y0 + 2*M1 - 1/2*M-1``."""
    text = text.strip()
    if text in ("", "0"):
        return Element()
    pos = 0
    terms: dict[Basis, Fraction] = {}
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or (pos > 0 and not m.group(1)):
            raise InvalidInput(f"cannot parse element at {text[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        coeff = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        b = Basis(m.group(3), int(m.group(4)))
        terms[b] = terms.get(b, 0) + sign * coeff
        pos = m.end()
    return Element(terms)


def parse_degrees(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not m:
        raise InvalidInput(f"degree range must look like a..b, got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if lo > hi:
        raise InvalidInput(f"empty degree range {text!r}")
    return lo, hi


@dataclass(frozen=True)
class RunConfig:
    params: Params
    window_radius: int = DEFAULT_WINDOW
    degree_range: tuple[int, int] = DEFAULT_DEGREES
    seed: int = 0
    output_format: str = "json"

    def __post_init__(self):
        if self.window_radius < 5:
            raise InvalidInput(f"--window must be at least 5, got {self.window_radius}")
        lo, hi = self.degree_range
        bound = self.window_radius - 2
        if lo < -bound or hi > bound:
            raise InvalidInput(f"--degrees must lie in [{-bound}, {bound}] for window {self.window_radius}")
        if self.seed < 0:
            raise InvalidInput("--seed must be nonnegative")

    @property
    def window(self) -> Window:
        return Window(self.window_radius)

    @property
    def degrees(self) -> range:
        return range(self.degree_range[0], self.degree_range[1] + 1)


def _seed(args) -> int:
    env = os.environ.get("GRADEDLIE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidInput(f"GRADEDLIE_SEED must be an integer, got {env!r}") from None
    return args.seed


def _params(args) -> Params:
    if args.lam is None or args.mu is None:
        raise InvalidInput("--lambda and --mu are required")
    return validate_params(parse_rational(args.lam), parse_rational(args.mu))


def _config(args, params: Optional[Params] = None) -> RunConfig:
    return RunConfig(
        params=params if params is not None else _params(args),
        window_radius=args.window,
        degree_range=parse_degrees(args.degrees) if getattr(args, "degrees", None) else DEFAULT_DEGREES,
        seed=_seed(args),
        output_format=args.format,
    )


def _emit(obj, fmt: str, table: Optional[str] = None) -> None:
    if fmt == "json" or table is None:
        print(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        print(table)


def _render_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)] if rows else [len(h) for h in header]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(x).ljust(w) for x, w in zip(r, widths)))
    return "\n".join(lines)


# -- jacobi -------------------------------------------------------------------


def cmd_jacobi(args) -> int:
    cfg = _config(args)
    violations = jacobi_check(cfg.params, cfg.window)
    count = sum(1 for _ in jacobi_triples(cfg.window))
    out = {
        "params": cfg.params.to_json(),
        "window": cfg.window_radius,
        "triples_checked": count,
        "ok": not violations,
        "violations": [v.to_json() for v in violations],
    }
    lines = [f"{cfg.params} window {cfg.window_radius}: {count} triples, {len(violations)} violations"]
    lines += [f"  {', '.join(v.to_json()['triple'])}: {v.jacobiator}" for v in violations[:50]]
    _emit(out, cfg.output_format, "\n".join(lines))
    return EXIT_OK if not violations else EXIT_CHECK


# -- classify -----------------------------------------------------------------


def cmd_classify(args) -> int:
    cfg = _config(args)
    report = classify(cfg.params, cfg.window, cfg.degrees)
    out = report.to_json()
    rows = [[str(k), str(v)] for k, v in sorted(report.h1_by_degree.items())]
    table = "\n".join(
        [
            f"{cfg.params} case {cfg.params.case.value}, window {cfg.window_radius}",
            f"dim Der_0 = {report.dim_deg0}, dim inner_0 = {report.dim_inner_deg0}",
            f"outer basis: {', '.join(report.outer_basis_names) or '-'}",
            _render_table(["degree", "H1"], rows),
            f"matches theorem: {'yes' if report.matches_theorem else 'no'}",
            *[f"note: {n}" for n in report.notes],
        ]
    )
    _emit(out, cfg.output_format, table)
    return EXIT_OK if report.matches_theorem else EXIT_CHECK


# -- report -------------------------------------------------------------------


def read_grid(path: str) -> list[tuple[str, str]]:
    """Grid points from a JSON list of pairs or from lines ``lambda mu``."""
    text = Path(path).read_text()
    if path.endswith(".json"):
        data = json.loads(text)
        return [(str(a), str(b)) for a, b in data]
    grid = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InvalidInput(f"{path}:{lineno}: expected 'lambda mu'")
        grid.append((parts[0], parts[1]))
    return grid


def report_row(lam: str, mu: str, radius: int, degrees: tuple[int, int], samples: int, seed: int) -> dict:
    row = {"lambda": lam, "mu": mu}
    try:
        p = validate_params(parse_rational(lam), parse_rational(mu))
    except ParameterError as e:
        row["excluded"] = e.reason
        return row
    except InvalidInput as e:
        row["excluded"] = str(e)
        return row
    w = Window(radius)
    rep = classify(p, w, range(degrees[0], degrees[1] + 1))
    laws = aut.verify_group_laws(p, w, samples, seed)
    row.update(
        {
            "lambda": format_scalar(p.lam),
            "mu": format_scalar(p.mu),
            "case": p.case.value,
            "dim_deg0": rep.dim_deg0,
            "h1_deg0": rep.h1_by_degree[0],
            "outer_basis_names": rep.outer_basis_names,
            "matches_theorem": rep.matches_theorem,
            "group_laws": "pass" if laws.ok else "fail",
        }
    )
    return row


def _report_row_star(a):
    return report_row(*a)


def cmd_report(args) -> int:
    grid = read_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    seed = _seed(args)
    radius = args.window
    if radius < 5:
        raise InvalidInput("--window must be at least 5")
    degrees = parse_degrees(args.degrees) if args.degrees else DEFAULT_DEGREES
    if degrees[0] < -(radius - 2) or degrees[1] > radius - 2:
        raise InvalidInput(f"--degrees must lie in [{2 - radius}, {radius - 2}]")
    jobs = [(lam, mu, radius, degrees, args.samples, seed) for lam, mu in grid]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_report_row_star, jobs))
    else:
        rows = [report_row(*j) for j in jobs]

    header = ["lambda", "mu", "case", "dim Der_0", "H1(0)", "outer", "theorem", "group laws"]
    table_rows = []
    for r in rows:
        if "excluded" in r:
            table_rows.append([r["lambda"], r["mu"], r["excluded"], "", "", "", "", ""])
        else:
            table_rows.append(
                [
                    r["lambda"],
                    r["mu"],
                    r["case"],
                    r["dim_deg0"],
                    r["h1_deg0"],
                    ",".join(r["outer_basis_names"]),
                    "match" if r["matches_theorem"] else "MISMATCH",
                    r["group_laws"],
                ]
            )
    _emit(rows, args.format, _render_table(header, table_rows))
    failed = any("excluded" not in r and (not r["matches_theorem"] or r["group_laws"] != "pass") for r in rows)
    return EXIT_CHECK if failed else EXIT_OK


# -- aut ----------------------------------------------------------------------


def build_constructor(p: Params, w: Window, line: str) -> aut.AutMap:
    """One constructor per line: ``identity``, ``flip E``, ``scale A B``,
    ``unipotent B [power K]``, ``shear E``, ``diagonal T``, ``exp ELEMENT``."""
    words = line.split(None, 1)
    name = words[0].lower()
    rest = words[1].strip() if len(words) > 1 else ""
    nums = rest.split()
    if name == "identity" and not rest:
        return aut.identity(p, w)
    if name == "flip" and len(nums) == 1:
        eps = parse_rational(nums[0])
        if eps not in (1, -1):
            raise InvalidInput("flip takes 1 or -1")
        return aut.make_flip(p, w, int(eps))
    if name == "scale" and len(nums) == 2:
        return aut.make_scale(p, w, parse_rational(nums[0]), parse_rational(nums[1]))
    if name == "unipotent" and len(nums) in (1, 3) and (len(nums) == 1 or nums[1] == "power"):
        power = int(nums[2]) if len(nums) == 3 else None
        return aut.make_unipotent(p, w, parse_rational(nums[0]), power)
    if name == "shear" and len(nums) == 1:
        return aut.make_shear(p, w, parse_rational(nums[0]))
    if name == "diagonal" and len(nums) == 1:
        return aut.make_diagonal(p, w, parse_rational(nums[0]))
    if name in ("exp", "inner") and rest:
        return aut.make_inner_exp(p, w, parse_element(rest))
    raise InvalidInput(f"cannot parse constructor line {line!r}")


def parse_aut_lines(p: Params, w: Window, lines: list[str]) -> aut.AutMap:
    """Compose constructor lines; the first line is applied last."""
    maps = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            maps.append(build_constructor(p, w, line))
    if not maps:
        return aut.identity(p, w)
    return aut.compose(*maps)


def load_table(p: Params, w: Window, data: dict) -> aut.AutMap:
    if "params" in data:
        lam = to_scalar(data["params"]["lambda"])
        mu = to_scalar(data["params"]["mu"])
        if (lam, mu) != (p.lam, p.mu):
            raise InvalidInput("table parameters differ from --lambda/--mu")
    images = {}
    for key, img in data["images"].items():
        m = re.fullmatch(r"([LYM])(-?\d+)", key)
        if not m:
            raise InvalidInput(f"bad basis label {key!r}")
        terms = {}
        for k2, v in img.items():
            m2 = re.fullmatch(r"([LYM])(-?\d+)", k2)
            if not m2:
                raise InvalidInput(f"bad basis label {k2!r}")
            terms[Basis(m2.group(1), int(m2.group(2)))] = parse_rational(str(v))
        images[Basis(m.group(1), int(m.group(2)))] = Element(terms)
    return aut.from_table(p, w, images)


def _load_aut(args, cfg: RunConfig) -> aut.AutMap:
    if args.spec and args.expr:
        raise InvalidInput("give either --spec or --expr, not both")
    if args.spec:
        path = Path(args.spec)
        if not path.exists():
            raise InvalidInput(f"no such file: {path}")
        if path.suffix == ".json":
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError as e:
                raise InvalidInput(f"{path}: {e}") from None
            return load_table(cfg.params, cfg.window, data)
        return parse_aut_lines(cfg.params, cfg.window, path.read_text().splitlines())
    if args.expr:
        return parse_aut_lines(cfg.params, cfg.window, args.expr.split(";"))
    raise InvalidInput("aut needs --spec FILE or --expr 'ctor; ctor; ...'")


def cmd_aut(args) -> int:
    cfg = _config(args)
    sigma = _load_aut(args, cfg)
    p = cfg.params
    if args.action == "export":
        _emit(sigma.to_json(), "json")
        return EXIT_OK
    if args.action == "verify":
        rep = aut.is_automorphism(p, sigma)
        laws = aut.verify_group_laws(p, cfg.window, args.samples, cfg.seed)
        ok = rep.ok and laws.ok
        out = {"params": p.to_json(), "window": cfg.window_radius, "automorphism": rep.to_json(), "group_laws": laws.to_json(), "ok": ok}
        lines = [f"homomorphism on window {cfg.window_radius}: {'pass' if not rep.violations else 'FAIL'}"]
        lines.append(f"invertible on window: {'yes' if rep.full_rank else 'NO'}")
        for v in rep.violations[:20]:
            lines.append(f"  violation on [{v.pair[0]}, {v.pair[1]}]: σ([x,y]) - [σx, σy] = {v.defect}")
        if len(rep.violations) > 20:
            lines.append(f"  ... {len(rep.violations) - 20} more")
        lines.append(f"group laws: {'pass' if laws.ok else 'FAIL'} ({', '.join(f'{k} x{v}' for k, v in sorted(laws.checked.items()))})")
        lines += [f"  {f}" for f in laws.failures]
        _emit(out, cfg.output_format, "\n".join(lines))
        return EXIT_OK if ok else EXIT_CHECK
    result = aut.factor(p, sigma)
    out = {"params": p.to_json(), "window": cfg.window_radius, **result.to_json()}
    opt = lambda v: "-" if v is None else format_scalar(v)  # noqa: E731
    lines = [
        f"ε={result.epsilon} α={format_scalar(result.alpha)} β={format_scalar(result.beta)} "
        f"b={opt(result.unipotent_b)} e={opt(result.shear_e)}",
        "inner: " + ("; ".join(str(x) for x in result.inner_witness) or "-"),
        "factors: " + " ∘ ".join(aut.describe_tag(f.tag) for f in result.factors),
        f"round-trip {'OK' if result.roundtrip and result.residual_is_identity else 'FAILED'}",
    ]
    _emit(out, cfg.output_format, "\n".join(lines))
    return EXIT_OK if result.roundtrip and result.residual_is_identity else EXIT_CHECK


# -- entry point --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _common(sp, params=True):
    if params:
        sp.add_argument("--lambda", dest="lam", metavar="LAMBDA", help="λ as p/q or integer")
        sp.add_argument("--mu", metavar="MU", help="μ as p/q or integer")
    sp.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="window radius N (>= 5)")
    sp.add_argument("--seed", type=int, default=0, help="sampling seed (GRADEDLIE_SEED overrides)")
    sp.add_argument("--format", choices=("json", "table"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gradedlie", description="Exact checks on the Lie algebras L(λ, μ).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("jacobi", help="check the Jacobi identity on a window")
    _common(sp)
    sp.set_defaults(func=cmd_jacobi)

    sp = sub.add_parser("classify", help="derivation spaces, H1 by degree, theorem comparison")
    _common(sp)
    sp.add_argument("--degrees", default=None, metavar="A..B", help="degree range (default -3..3)")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("report", help="classification and group-law summary over a parameter grid")
    _common(sp, params=False)
    sp.add_argument("--grid", metavar="FILE", help="'lambda mu' per line, or a .json list of pairs")
    sp.add_argument("--degrees", default=None, metavar="A..B")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for grid rows")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("aut", help="verify, factor or export an automorphism")
    sp.add_argument("action", choices=("verify", "factor", "export"))
    _common(sp)
    sp.add_argument("--spec", metavar="FILE", help="constructor lines, or a .json image table")
    sp.add_argument("--expr", help="constructors separated by ';', e.g. 'scale 2 3; shear 5'")
    sp.add_argument("--samples", type=int, default=20)
    sp.set_defaults(func=cmd_aut)
    return parser


def _join_negative_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ParameterError as e:
        print(f"error: {e.reason}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except CheckFailed as e:
        print(f"check failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CHECK
    except GradedLieError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
