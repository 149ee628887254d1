from pathlib import Path

import pytest

from src.shift_leak_lab.chip.layout import ScanChainLayout, stitch
from src.shift_leak_lab.core.bench import parse_bench
from src.shift_leak_lab.core.generator import desk_netlist
from src.shift_leak_lab.locking.locks import Key, LockedDesign, lock_rll

BENCH_DIR = Path(__file__).resolve().parent.parent / "data" / "benchmarks"

# Six RCs in1..in6 (flops 0..5) and one SC. out0 sees in5 only through
# AND(in5, in4, NOT in6); the in2/in3 term is killed by in6=0.
SHIFT_EXAMPLE_BENCH = """
INPUT(a)
INPUT(keyinput0)
OUTPUT(out0)
OUTPUT(out1)
in1 = DFF(a)
in2 = DFF(a)
in3 = DFF(a)
in4 = DFF(a)
in5 = DFF(a)
in6 = DFF(a)
n6 = NOT(in6)
p = AND(in5, in4, n6)
q = AND(in2, in3, in6)
out0 = OR(p, q)
g1_lk0 = AND(in1, a)
g1 = XOR(g1_lk0, keyinput0)
out1 = BUF(g1)
"""

# One PO cone fed by three SCs, one RC and three PIs.
DIP_EXAMPLE_BENCH = """
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
OUTPUT(y)
q0 = DFF(a)
g0_lk0 = AND(a, q0)
g0 = XOR(g0_lk0, keyinput0)
g1_lk1 = OR(b, g0)
g1 = XNOR(g1_lk1, keyinput1)
g2_lk2 = NAND(g1, c)
y = XOR(g2_lk2, keyinput2)
"""


@pytest.fixture
def bench_dir() -> Path:
    return BENCH_DIR


@pytest.fixture
def shift_example():
    """(locked, layout) with chain in1 in2 in3 SC0 in4 in5 in6; SC0 sits two cells before in5."""
    n = parse_bench(SHIFT_EXAMPLE_BENCH, name="shift_example")
    locked = LockedDesign.from_netlist(n, Key((1,)), scheme="rll")
    layout = ScanChainLayout.explicit([["RC0", "RC1", "RC2", "SC0", "RC3", "RC4", "RC5"]])
    return locked, layout


@pytest.fixture
def dip_example():
    n = parse_bench(DIP_EXAMPLE_BENCH, name="dip_example")
    locked = LockedDesign.from_netlist(n, Key((1, 0, 1)), scheme="rll")
    layout = ScanChainLayout.explicit([["SC0", "SC1", "RC0", "SC2"]])
    return locked, layout


@pytest.fixture
def desk_design():
    """Factory: seeded desk circuit (32 RCs) locked with K RLL key gates."""

    def make(seed: int = 1, key_bits: int = 8, n_chains: int = 1):
        locked = lock_rll(desk_netlist(seed), key_bits, seed)
        return locked, stitch(locked, n_chains, seed)

    return make
