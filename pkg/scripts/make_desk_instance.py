#!/usr/bin/env python3
"""
Write seeded desk circuits as bench files.

    python scripts/make_desk_instance.py --seeds 1 2 3 --flops 32 --out-dir data/benchmarks
"""

import argparse
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parent.parent))

from src.shift_leak_lab.core.bench import write_bench
from src.shift_leak_lab.core.generator import desk_netlist, netlist_stats
from src.shift_leak_lab.utils.logger import configure_versioned_logging, get_netlist_logger


def main() -> None:
    parser = argparse.ArgumentParser(description="Generate desk bench files")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1])
    parser.add_argument("--inputs", type=int, default=8)
    parser.add_argument("--flops", type=int, default=32)
    parser.add_argument("--core-gates", type=int, default=160)
    parser.add_argument("--out-dir", default="data/benchmarks")
    args = parser.parse_args()

    configure_versioned_logging()
    logger = get_netlist_logger()
    for seed in args.seeds:
        n = desk_netlist(seed, n_inputs=args.inputs, n_flops=args.flops, n_core_gates=args.core_gates)
        path = write_bench(Path(args.out_dir) / f"{n.name}.bench", n)
        pis, pos, flops, gates = netlist_stats(n)
        logger.info("%s: %d PIs, %d POs, %d flops, %d gates", path, pis, pos, flops, gates)


if __name__ == "__main__":
    main()
