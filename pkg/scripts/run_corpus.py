#!/usr/bin/env python3
"""Run the golden corpus and print the per-file report.

    python scripts/run_corpus.py [DIR]            (default: corpus/)
    python scripts/run_corpus.py corpus --time    also prints total wall time
"""

import sys
import time

sys.setrecursionlimit(30000)

from cyanine.corpus import corpus_runner


def main(argv):
    args = [a for a in argv if not a.startswith("--")]
    directory = args[0] if args else "corpus"
    t0 = time.perf_counter()
    report = corpus_runner(directory)
    elapsed = time.perf_counter() - t0
    print(report.summary())
    if "--time" in argv:
        print(f"total: {elapsed:.2f}s")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
