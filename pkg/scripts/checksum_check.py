#!/usr/bin/env python3
"""Verify sensor frames fed as hex lines on stdin, one verdict line each.

Deliberately avoids the package: plain arithmetic only, so it can vouch
for the real codec rather than mirror its bugs.
"""

import functools
import operator
import sys


def verdict(line: str) -> str:
    try:
        frame = bytes.fromhex(line)
    except ValueError:
        return "BAD hex"
    if len(frame) != 13:
        return f"BAD length {len(frame)}"
    if functools.reduce(operator.xor, frame[:12]) != frame[12]:
        return "BAD checksum"
    node = frame[0] * 256 + frame[1]
    channel = frame[2]
    seq = frame[3] * 256 + frame[4]
    value = frame[5] * 256 + frame[6]
    t = ((frame[7] * 256 + frame[8]) * 256 + frame[9]) * 256 + frame[10]
    battery = frame[11]
    return f"OK node={node} ch={channel} seq={seq} value={value} t={t} batt={battery}"


def main() -> int:
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        print(verdict(line))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
