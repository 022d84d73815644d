# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Dense int64 Gauss-Jordan kernel with overflow detection.

Same contract as ``gradedlie._elim.echelon``. Raises ``OverflowError`` as soon
as any intermediate value leaves the int64 range; the caller then reruns the
exact object-integer kernel.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memcpy, memset

cdef extern from *:
    """
    static inline int gl_mul_ovf(long long a, long long b, long long *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static inline int gl_sub_ovf(long long a, long long b, long long *r) {
        return __builtin_sub_overflow(a, b, r);
    }
    """
    int gl_mul_ovf(long long a, long long b, long long *r) nogil
    int gl_sub_ovf(long long a, long long b, long long *r) nogil


cdef inline long long _gcd(long long a, long long b) nogil:
    cdef long long t
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        t = a % b
        a = b
        b = t
    return a


cdef int _make_primitive(long long *row, Py_ssize_t start, Py_ssize_t n) nogil:
    cdef long long g = 0
    cdef Py_ssize_t j
    for j in range(start, n):
        if row[j]:
            g = _gcd(g, row[j])
            if g == 1:
                return 0
    if g > 1:
        for j in range(start, n):
            row[j] //= g
    return 0


cdef int _eliminate(long long *row, const long long *prow, Py_ssize_t start,
                    Py_ssize_t col, Py_ssize_t n) nogil:
    # row <- b*row - a*prow; row is zero left of start, prow zero left of col.
    # Returns 1 on overflow.
    cdef long long a = row[col]
    cdef long long b = prow[col]
    cdef long long g = _gcd(a, b)
    cdef long long x, y
    cdef Py_ssize_t j
    a //= g
    b //= g
    if b != 1:
        for j in range(start, col):
            if gl_mul_ovf(row[j], b, &row[j]):
                return 1
    for j in range(col, n):
        if b != 1:
            if gl_mul_ovf(row[j], b, &x):
                return 1
        else:
            x = row[j]
        if prow[j]:
            if gl_mul_ovf(a, prow[j], &y):
                return 1
            if gl_sub_ovf(x, y, &x):
                return 1
        row[j] = x
    return 0


cdef Py_ssize_t _lead(const long long *row, Py_ssize_t start, Py_ssize_t n) nogil:
    cdef Py_ssize_t j
    for j in range(start, n):
        if row[j]:
            return j
    return n


def echelon(rows, Py_ssize_t ncols):
    """Reduced row-echelon form of integer rows; see ``_elim.echelon``."""
    cdef Py_ssize_t n = ncols
    cdef Py_ssize_t size = n if n > 0 else 1
    cdef long long *piv = <long long *> calloc(size * size, sizeof(long long))
    cdef char *has = <char *> calloc(size, sizeof(char))
    cdef long long *cur = <long long *> calloc(size, sizeof(long long))
    cdef Py_ssize_t lead, j, c, c2
    cdef long long v
    cdef bint overflow = False
    if piv == NULL or has == NULL or cur == NULL:
        free(piv)
        free(has)
        free(cur)
        raise MemoryError()
    try:
        for src in rows:
            memset(cur, 0, size * sizeof(long long))
            for k, value in src.items():
                cur[<Py_ssize_t> k] = <long long> value
            with nogil:
                lead = _lead(cur, 0, n)
                while lead < n and has[lead]:
                    if _eliminate(cur, piv + lead * n, lead, lead, n):
                        overflow = True
                        break
                    _make_primitive(cur, lead, n)
                    lead = _lead(cur, lead + 1, n)
                if not overflow and lead < n:
                    _make_primitive(cur, lead, n)
                    if cur[lead] < 0:
                        for j in range(lead, n):
                            cur[j] = -cur[j]
                    memcpy(piv + lead * n, cur, n * sizeof(long long))
                    has[lead] = 1
            if overflow:
                raise OverflowError("int64 overflow in elimination")

        with nogil:
            c = n - 1
            while c >= 0 and not overflow:
                if has[c]:
                    for c2 in range(c + 1, n):
                        if has[c2] and piv[c * n + c2]:
                            if _eliminate(piv + c * n, piv + c2 * n, c, c2, n):
                                overflow = True
                                break
                            _make_primitive(piv + c * n, c, n)
                    if not overflow:
                        _make_primitive(piv + c * n, c, n)
                c -= 1
        if overflow:
            raise OverflowError("int64 overflow in elimination")

        pivots = []
        reduced = []
        for c in range(n):
            if has[c]:
                pivots.append(c)
                out = {}
                for j in range(c, n):
                    v = piv[c * n + j]
                    if v:
                        out[j] = v
                reduced.append(out)
        return pivots, reduced
    finally:
        free(piv)
        free(has)
        free(cur)
