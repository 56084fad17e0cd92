# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: edit distance and the assignment solver."""
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY


cdef Py_ssize_t _lev(unicode a, unicode b) except -1:
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t m = len(b)
    cdef Py_ssize_t i, j, best, prev, cur
    cdef Py_ssize_t *row
    cdef Py_UCS4 ca
    if n < m:
        a, b = b, a
        n, m = m, n
    if m == 0:
        return n
    row = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    if row == NULL:
        raise MemoryError()
    for j in range(m + 1):
        row[j] = j
    for i in range(1, n + 1):
        ca = a[i - 1]
        prev = row[0]
        row[0] = i
        for j in range(1, m + 1):
            cur = row[j]
            best = cur + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            if prev + (ca != b[j - 1]) < best:
                best = prev + (ca != b[j - 1])
            row[j] = best
            prev = cur
    best = row[m]
    free(row)
    return best


def levenshtein(unicode a, unicode b):
    return _lev(a, b)


cdef double _nl(unicode a, unicode b, double tau) except -1.0:
    cdef Py_ssize_t longest = len(a) if len(a) > len(b) else len(b)
    cdef double d
    if longest == 0:
        return 0.0
    d = _lev(a, b) / (tau * longest)
    return 1.0 if d > 1.0 else d


def nl_distance(unicode a, unicode b, double tau):
    return _nl(a, b, tau)


def nl_matrix(list rows, list cols, double tau):
    return [[_nl(a, b, tau) for b in cols] for a in rows]


def hungarian(cost):
    cdef Py_ssize_t n = len(cost)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    cdef double *a
    cdef double *u
    cdef double *v
    cdef double *minv
    cdef Py_ssize_t *p
    cdef Py_ssize_t *way
    cdef char *used
    if n == 0:
        return [], [], []
    a = <double *> malloc(n * n * sizeof(double))
    u = <double *> malloc((n + 1) * sizeof(double))
    v = <double *> malloc((n + 1) * sizeof(double))
    minv = <double *> malloc((n + 1) * sizeof(double))
    p = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    way = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    used = <char *> malloc((n + 1) * sizeof(char))
    try:
        for i in range(n):
            row = cost[i]
            for j in range(n):
                a[i * n + j] = row[j]
        for j in range(n + 1):
            u[j] = 0.0
            v[j] = 0.0
            p[j] = 0
            way[j] = 0
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
        assign = [0] * n
        for j in range(1, n + 1):
            assign[p[j] - 1] = j - 1
        return assign, [u[i] for i in range(1, n + 1)], [v[j] for j in range(1, n + 1)]
    finally:
        free(a); free(u); free(v); free(minv); free(p); free(way); free(used)
