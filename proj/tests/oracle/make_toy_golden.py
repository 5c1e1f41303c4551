#!/usr/bin/env python3
"""Exhaustive re-ranking of the toy bundle, written independently of the C++ code.

Every candidate among the first k_s of each query is scored as
alpha * sparse + (1 - alpha) * max_p <q, p>, the list is fully sorted (score descending,
earlier sparse rank first) and cut at k. Vectors are rounded to float32 and dot products
accumulate in double from left to right, the same arithmetic the C++ side performs.

    make_toy_golden.py DIR [--alpha A] [--k K] [--k-s KS] [--check GOLDEN]
"""

import argparse
import struct
import sys
from pathlib import Path


def f32(text):
    return struct.unpack("<f", struct.pack("<f", float(text)))[0]


def read_vectors(path, key_fields):
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        fields = line.split("\t")
        key = tuple(fields[:key_fields])
        out[key] = [f32(x) for x in fields[key_fields].split()]
    return out


def fmt(x):
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dir")
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--k-s", type=int, default=5)
    ap.add_argument("--check")
    args = ap.parse_args()
    root = Path(args.dir)

    passages = {}
    for (doc, pidx), vec in sorted(read_vectors(root / "passage_vectors.tsv", 2).items(), key=lambda kv: (kv[0][0], int(kv[0][1]))):
        passages.setdefault(doc, []).append(vec)
    queries = {q: v for (q,), v in read_vectors(root / "query_vectors.tsv", 1).items()}

    runs = {}
    for line in (root / "run.bm25").read_text().splitlines():
        qid, _, doc, rank, score, _tag = line.split()
        runs.setdefault(qid, []).append((float(score), int(rank), doc))

    lines = []
    for qid in sorted(runs):
        cands = sorted(runs[qid], key=lambda t: (-t[0], t[1]))[: args.k_s]
        q = queries[qid]
        scored = []
        for pos, (sparse, _rank, doc) in enumerate(cands):
            best = None
            for p in passages[doc]:
                acc = 0.0
                for a, b in zip(q, p):
                    acc += a * b
                best = acc if best is None or acc > best else best
            score = args.alpha * sparse + (1.0 - args.alpha) * best
            scored.append((score, pos, doc))
        scored.sort(key=lambda t: (-t[0], t[1]))
        for rank, (score, _pos, doc) in enumerate(scored[: args.k], start=1):
            lines.append(f"{qid} Q0 {doc} {rank} {fmt(score)} fast-forward\n")
    text = "".join(lines)

    if args.check:
        if Path(args.check).read_text() != text:
            sys.stderr.write("golden file differs from oracle output\n")
            return 1
        return 0
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
