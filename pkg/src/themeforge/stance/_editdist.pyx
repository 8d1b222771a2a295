# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled fuzzy-match scoring kernel.

Drop-in replacement for `_editdist_py`; the inner DP is the hot loop when
scanning alias windows across full transcript corpora.
"""

from libc.stdlib cimport malloc, free


def indel_distance(str a, str b):
    """Minimum number of single-character insertions/deletions turning a into b."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if a == b:
        return 0
    if la == 0:
        return lb
    if lb == 0:
        return la

    cdef Py_ssize_t *previous = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *current = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    if previous == NULL or current == NULL:
        free(previous)
        free(current)
        raise MemoryError()

    cdef Py_ssize_t i, j, dist, dele, ins
    cdef Py_UCS4 ca
    cdef Py_ssize_t *swap
    try:
        for j in range(lb + 1):
            previous[j] = j
        for i in range(1, la + 1):
            current[0] = i
            ca = a[i - 1]
            for j in range(1, lb + 1):
                if ca == <Py_UCS4> b[j - 1]:
                    current[j] = previous[j - 1]
                else:
                    dele = previous[j]
                    ins = current[j - 1]
                    current[j] = 1 + (dele if dele < ins else ins)
            swap = previous
            previous = current
            current = swap
        dist = previous[lb]
    finally:
        free(previous)
        free(current)
    return dist


def indel_similarity(str a, str b):
    """Normalized indel similarity in [0, 100]; 100 means identical."""
    cdef Py_ssize_t total = len(a) + len(b)
    if total == 0:
        return 100.0
    return 100.0 * (1.0 - (<double> indel_distance(a, b)) / (<double> total))
