"""Compare the compiled fuzzy-match kernel against the pure-Python fallback.

The kernel scores alias windows across transcripts; this replays a
realistic mention scan over synthetic French-ish text and reports per-call
and end-to-end timings for both implementations.

Run: python benchmarks/benchmark_editdist.py [--docs 200] [--words 400]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from themeforge.stance import _editdist_py

try:
    from themeforge.stance import _editdist as native
except ImportError:
    native = None

VOCAB = (
    "le la les un une des et dans pour avec sur est sont qui que nous vous "
    "gouvernement président élection débat parlement loi réforme budget "
    "bardella bardela macron mélenchon melenchon ciotti attal lepen"
).split()

ALIASES = ["bardella", "macron", "mélenchon", "le pen", "ciotti"]


def make_docs(n_docs: int, words: int, seed: int = 3) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    return [
        [VOCAB[i] for i in rng.integers(0, len(VOCAB), size=words)]
        for _ in range(n_docs)
    ]


def scan(docs: list[list[str]], similarity) -> tuple[int, float]:
    hits = 0
    start = time.perf_counter()
    for tokens in docs:
        for alias in ALIASES:
            width = len(alias.split())
            for i in range(len(tokens) - width + 1):
                window = " ".join(tokens[i : i + width])
                if similarity(alias, window) >= 85.0:
                    hits += 1
    return hits, time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--words", type=int, default=400)
    args = parser.parse_args()

    docs = make_docs(args.docs, args.words)
    comparisons = sum(
        len(d) - len(a.split()) + 1 for d in docs for a in ALIASES
    )
    print(f"{args.docs} docs x {args.words} words, {comparisons} window comparisons")

    hits_py, t_py = scan(docs, _editdist_py.indel_similarity)
    print(f"pure python : {t_py:8.3f}s  ({comparisons / t_py:10.0f} cmp/s, {hits_py} hits)")

    if native is None:
        print("compiled    : not built (pip install -e . rebuilds it when cython is present)")
        return
    hits_nat, t_nat = scan(docs, native.indel_similarity)
    print(f"compiled    : {t_nat:8.3f}s  ({comparisons / t_nat:10.0f} cmp/s, {hits_nat} hits)")
    assert hits_py == hits_nat, "kernels disagree"
    print(f"speedup     : {t_py / t_nat:8.1f}x")


if __name__ == "__main__":
    main()
