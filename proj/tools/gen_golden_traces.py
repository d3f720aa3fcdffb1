#!/usr/bin/env python3
"""Emit the frozen 8-point transform access schedules (DIT and DIF).

Schedule model: lg n stages of n/2 + 1 cycles; in cycle c of a stage the
butterfly unit reads pair c (c < n/2) and writes pair c - 1 (c >= 1).
Stages alternate between the source bank and the destination bank.
Coefficient i of a slot lives in sram 2*MSB(i) + LSB(i), row (i >> 1) mod n/4.
"""
import sys
from pathlib import Path

N = 8
LG = 3
SRC_BANK, DST_BANK = 0, 1


def loc(i):
    msb = (i >> (LG - 1)) & 1
    lsb = i & 1
    return 2 * msb + lsb, (i >> 1) % (N // 4)


def pairs(mode):
    adjacent = [(2 * j, 2 * j + 1) for j in range(N // 2)]
    strided = [(j, j + N // 2) for j in range(N // 2)]
    return (adjacent, strided) if mode == "dit" else (strided, adjacent)


def schedule(mode):
    reads, writes = pairs(mode)
    lines = []
    for s in range(1, LG + 1):
        rbank, wbank = (SRC_BANK, DST_BANK) if s % 2 == 1 else (DST_BANK, SRC_BANK)
        base = (s - 1) * (N // 2 + 1)
        for c in range(N // 2 + 1):
            cyc = base + c
            busy = set()
            events = []
            if c < N // 2:
                events += [(rbank, i, "R") for i in reads[c]]
            if c >= 1:
                events += [(wbank, i, "W") for i in writes[c - 1]]
            for bank, i, kind in events:
                sram, row = loc(i)
                assert (bank, sram) not in busy, "hazard"
                busy.add((bank, sram))
                lines.append(f"{cyc} {bank} {sram} {row} {kind}")
    return lines


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for mode in ("dit", "dif"):
        (out / f"trace_{mode}8.txt").write_text("\n".join(schedule(mode)) + "\n")


if __name__ == "__main__":
    main()
