"""High-precision reference for classifying the committed trace fixture.

Recomputes candidate scores by teacher forcing straight from the raw trace rows,
then the naive distribution, the None/Unk prior and the recalibrated output.
"""

import json
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
EPS = mp.mpf("1e-8")


def load(fixtures):
    lines = Path(fixtures, "trace.jsonl").read_text().splitlines()
    vocab = json.loads(lines[0])["vocab"]
    rows = {}
    for line in lines[1:]:
        if line.strip():
            r = json.loads(line)
            rows[(r["sample"], r["variant"], r["step"])] = [mp.mpf(repr(x)) for x in r["logits"]]
    samples = json.loads(Path(fixtures, "trace_samples.json").read_text())["samples"]
    return vocab, rows, samples


def log_softmax(v):
    m = max(v)
    lse = m + mp.log(mp.fsum(mp.exp(x - m) for x in v))
    return [x - lse for x in v]


def candidate_dist(rows, vocab, sample, variant, candidates):
    scores = []
    for cand in candidates:
        total = mp.mpf(0)
        for step, tok in enumerate(cand):
            total += log_softmax(rows[(sample, variant, step)])[vocab.index(tok)]
        scores.append(mp.exp(total))
    z = mp.fsum(scores)
    return [s / z for s in scores]


def softmax(v):
    e = [mp.exp(x) for x in v]
    z = mp.fsum(e)
    return [x / z for x in e]


def main(fixtures):
    vocab, rows, samples = load(fixtures)
    out = []
    for s in samples:
        sid, cands = s["sample"], s["candidates"]
        naive = candidate_dist(rows, vocab, sid, "real", cands)
        variants = [candidate_dist(rows, vocab, sid, v, cands) for v in ("none", "unk")]
        prior = [(a + b) / 2 for a, b in zip(*variants)]
        debiased = softmax([p / max(q, EPS) for p, q in zip(naive, prior)])
        out.append({
            "sample": sid,
            "naive": [mp.nstr(x, 20) for x in naive],
            "prior": [mp.nstr(x, 20) for x in prior],
            "debiased": [mp.nstr(x, 20) for x in debiased],
            "label": max(range(len(debiased)), key=lambda i: debiased[i]),
            "naive_label": max(range(len(naive)), key=lambda i: naive[i]),
        })
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/vdd/fixtures")
