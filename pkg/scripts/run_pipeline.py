#!/usr/bin/env python3
"""
Lock, stitch, attack and report one bench file in a single go.

    python scripts/run_pipeline.py data/benchmarks/s27.bench --key-bits 2
"""

import sys
from pathlib import Path

# Add the project root directory to sys.path to find src/
sys.path.append(str(Path(__file__).resolve().parent.parent))

from src.shift_leak_lab.cli import EXIT_OK, main

STEPS = ("lock", "stitch", "attack", "report")

if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit("usage: run_pipeline.py BENCH [shared flags...]")
    bench, flags = sys.argv[1], sys.argv[2:]
    for step in STEPS:
        status = main([step, "-i", bench, *flags])
        if status != EXIT_OK:
            sys.exit(status)
