"""Pure-Python fallback for the fuzzy-match scoring kernel.

Same contract as the compiled `_editdist` module; used when the extension
was not built. Distances are indel (insertions/deletions only), which is
what normalized name-matching scores are built on.
"""

from __future__ import annotations


def indel_distance(a: str, b: str) -> int:
    """Minimum number of single-character insertions/deletions turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    current = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current[0] = i
        ca = a[i - 1]
        for j in range(1, len(b) + 1):
            if ca == b[j - 1]:
                current[j] = previous[j - 1]
            else:
                current[j] = 1 + min(previous[j], current[j - 1])
        previous, current = current, previous
    return previous[len(b)]


def indel_similarity(a: str, b: str) -> float:
    """Normalized indel similarity in [0, 100]; 100 means identical."""
    total = len(a) + len(b)
    if total == 0:
        return 100.0
    return 100.0 * (1.0 - indel_distance(a, b) / total)
