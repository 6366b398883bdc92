"""Writes the 49-point decoding grid golden file, independently of the Rust code."""

import json
import sys
from pathlib import Path

TOP_K = [1, 2, 5, 10, 20, 50, 100, 200, 500]


def rows():
    hundredths = [5 * i for i in range(1, 21)]
    for h in hundredths:
        yield "temp", f"{h // 100}.{h % 100:02d}"
    for k in TOP_K:
        yield "top_k", str(k)
    for h in hundredths:
        yield "top_p", f"{h // 100}.{h % 100:02d}"


def main(out):
    lines = []
    for i, (group, value) in enumerate(rows()):
        # value is emitted verbatim so the two-decimal spelling is kept
        lines.append('{"index":%d,"group":%s,"value":%s}' % (i, json.dumps(group), value))
    assert len(lines) == 49
    Path(out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/grid.golden.jsonl")
