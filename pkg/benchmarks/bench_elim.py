"""Compare the compiled and pure-Python elimination kernels.

    python3 benchmarks/bench_elim.py [--repeat 5]

Inputs are the Leibniz systems the derivation solver builds, plus random
sparse integer matrices. Both kernels must return identical echelon forms.
"""

import argparse
import random
import time
from fractions import Fraction

from gradedlie import _elim
from gradedlie.algebra import Window, validate_params
from gradedlie.derivations import leibniz_system
from gradedlie.exactlin import _integer_rows

try:
    from gradedlie import _elim_cy
except ImportError:
    _elim_cy = None


def leibniz_cases():
    for (lam, mu), k, radius in [
        ((3, Fraction(1, 3)), 0, 6),
        ((-2, 0), 0, 6),
        ((-1, 0), 1, 6),
        ((7, 0), 0, 8),
        ((1, 0), -2, 8),
    ]:
        m = leibniz_system(validate_params(lam, mu), k, Window(radius))
        yield f"leibniz λ={lam} μ={mu} k={k} N={radius}", _integer_rows(m._rows), m.cols


def random_cases(seed=0):
    rng = random.Random(seed)
    # entries grow under fraction-free elimination; the last size overflows int64
    for rows, cols, density in [(400, 40, 0.05), (800, 60, 0.03), (2000, 80, 0.02), (60, 60, 0.1)]:
        data = [
            {j: rng.randint(-3, 3) or 1 for j in range(cols) if rng.random() < density}
            for _ in range(rows)
        ]
        yield f"random {rows}x{cols} density {density}", data, cols


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _elim_cy is None:
        print("compiled kernel not built; only the Python kernel will be timed")
    print(f"{'input':42} {'rows':>5} {'cols':>5} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for label, rows, cols in [*leibniz_cases(), *random_cases()]:
        t_py, ref = best_time(lambda: _elim.echelon(rows, cols), args.repeat)
        if _elim_cy is None:
            print(f"{label:42} {len(rows):5} {cols:5} {t_py * 1e3:10.2f} {'-':>10} {'-':>8}")
            continue
        try:
            t_cy, got = best_time(lambda: _elim_cy.echelon(rows, cols), args.repeat)
        except OverflowError:
            print(f"{label:42} {len(rows):5} {cols:5} {t_py * 1e3:10.2f} {'overflow':>10} {'-':>8}")
            continue
        assert got == ref, f"kernels disagree on {label}"
        print(f"{label:42} {len(rows):5} {cols:5} {t_py * 1e3:10.2f} {t_cy * 1e3:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
