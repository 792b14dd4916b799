"""Partitioned versus single-ciphertext totals as size, leaves and block count grow.

Run: python demos/sweeps.py [--phase decrypt] [--csv-dir results/]
"""

import argparse
from pathlib import Path

import numpy as np

from blockabe.pipeline import MIB, MONOLITHIC, PARTITIONED, SweepConfig, benchmark_sweep, column, rows_to_csv

parser = argparse.ArgumentParser()
parser.add_argument("--phase", choices=("encrypt", "decrypt"), default="encrypt")
parser.add_argument("--csv-dir", type=Path)
args = parser.parse_args()

sweeps = {
    "size": SweepConfig("size", (1, 2, 4, 8, 16), phase=args.phase),
    "leaves": SweepConfig("leaves", (10, 20, 40, 80, 160), blocks=10, phase=args.phase),
    "blocks": SweepConfig("blocks", (1, 2, 5, 10, 20), message_size=4 * MIB, phase=args.phase),
}

for name, config in sweeps.items():
    rows = benchmark_sweep(config)
    part, mono = column(rows, PARTITIONED), column(rows, MONOLITHIC)
    print(f"\n{name} ({args.phase} phase, seconds)")
    print(f"{'value':>8} {'partitioned':>12} {'monolithic':>12}")
    for (value, p), (_, m) in zip(part, mono):
        print(f"{value:>8} {p:12.4f} {m:12.4f}")
    if name == "leaves":
        slopes = [np.polyfit(*zip(*col), 1)[0] * 1e3 for col in (part, mono)]
        print(f"growth per leaf: {slopes[0]:.3f} ms partitioned, {slopes[1]:.3f} ms monolithic")
    if args.csv_dir:
        args.csv_dir.mkdir(parents=True, exist_ok=True)
        (args.csv_dir / f"{name}_{args.phase}.csv").write_text(rows_to_csv(rows))
