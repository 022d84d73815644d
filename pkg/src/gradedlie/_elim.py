"""Pure-Python fraction-free Gauss-Jordan elimination on sparse integer rows.

This is the reference kernel. ``_elim_cy`` implements the same contract with
dense machine integers and is preferred when it imports and does not overflow.
"""

from math import gcd


def _primitive(row):
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {k: v // g for k, v in row.items()}
    return row


def _eliminate(row, pivot_row, col):
    # row <- b*row - a*pivot_row, which clears `col`; b = pivot_row[col] > 0
    a = row[col]
    b = pivot_row[col]
    g = gcd(a, b)
    a //= g
    b //= g
    if b == 1:
        out = dict(row)
    else:
        out = {k: v * b for k, v in row.items()}
    for k, v in pivot_row.items():
        t = out.get(k, 0) - a * v
        if t:
            out[k] = t
        else:
            out.pop(k, None)
    return _primitive(out)


def echelon(rows, ncols):
    """Reduce integer rows to reduced row-echelon form.

    ``rows`` is an iterable of ``{col: int}`` dicts. Returns ``(pivots, reduced)``
    where ``reduced[i]`` is a primitive integer row whose entry at
    ``pivots[i]`` is positive and whose entries at every other pivot column
    are zero. Dividing a row by its pivot entry gives the rational RREF row.
    """
    by_pivot = {}
    for src in rows:
        row = {k: v for k, v in src.items() if v}
        while row:
            lead = min(row)
            p = by_pivot.get(lead)
            if p is None:
                break
            row = _eliminate(row, p, lead)
        if not row:
            continue
        row = _primitive(row)
        lead = min(row)
        if row[lead] < 0:
            row = {k: -v for k, v in row.items()}
        by_pivot[lead] = row

    pivots = sorted(by_pivot)
    for c in reversed(pivots):
        row = by_pivot[c]
        for c2 in sorted(k for k in row if k != c and k in by_pivot):
            if c2 in row:
                row = _eliminate(row, by_pivot[c2], c2)
        by_pivot[c] = row
    return pivots, [by_pivot[c] for c in pivots]
