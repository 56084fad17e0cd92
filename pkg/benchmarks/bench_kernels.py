"""Compare the compiled and pure-Python kernels on Levenshtein and assignment workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import random
import string
import timeit

from reviewgraph import _kernels_py as py

try:
    from reviewgraph import _kernels as cy
except ImportError:
    cy = None


def workloads(rng: random.Random):
    words = ["".join(rng.choices(string.ascii_lowercase, k=rng.randint(5, 40))) for _ in range(60)]
    costs = [[rng.random() for _ in range(60)] for _ in range(60)]
    return {
        "nl_matrix 60x60": lambda k: k.nl_matrix(words, words, 0.5),
        "levenshtein 40-char x 2000": lambda k: [k.levenshtein(words[i % 60], words[(i * 7) % 60]) for i in range(2000)],
        "hungarian 60x60": lambda k: k.hungarian(costs),
    }


def check_agreement(rng: random.Random) -> None:
    # both backends must agree before timings mean anything
    for _ in range(200):
        a = "".join(rng.choices("abc", k=rng.randint(0, 8)))
        b = "".join(rng.choices("abc", k=rng.randint(0, 8)))
        assert py.levenshtein(a, b) == cy.levenshtein(a, b), (a, b)
    for n in range(1, 8):
        c = [[rng.randint(0, 9) / 9 for _ in range(n)] for _ in range(n)]
        tp = sum(c[i][j] for i, j in enumerate(py.hungarian(c)[0]))
        tc = sum(c[i][j] for i, j in enumerate(cy.hungarian(c)[0]))
        assert abs(tp - tc) < 1e-9, (c, tp, tc)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = random.Random(7)
    if cy is None:
        print("compiled extension not built; only the pure-Python backend is available")
    else:
        check_agreement(rng)
    print(f"{'workload':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in workloads(rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1000
        if cy is None:
            print(f"{name:30s} {t_py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1000
        print(f"{name:30s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
