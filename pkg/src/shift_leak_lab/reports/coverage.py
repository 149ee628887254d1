"""
Stuck-at coverage of the original design against its DFS and MSSD
instrumentations under one shared pattern budget.

Instrumented designs expose the test pins as PIs and the control blocks'
flops as scan-loadable state; key inputs stay pseudo inputs. Pattern order is
fixed: a seeded random block, SAT top-up patterns for the faults it missed,
then further random blocks. Truncating that sequence to the budget keeps
coverage monotone in the budget.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

from src.shift_leak_lab.atpg.fault_sim import Fault, FaultSimulator
from src.shift_leak_lab.atpg.stuck_at import StuckAtTestGenerator
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import DefenseVariant
from src.shift_leak_lab.core.cells import cell_net
from src.shift_leak_lab.core.netlist import Flop, Gate, GateKind, Netlist
from src.shift_leak_lab.core.simulator import PatternBlock
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.exceptions import NetlistError
from src.shift_leak_lab.utils.helpers import derive_seed
from src.shift_leak_lab.utils.logger import get_report_logger, log_execution_time

logger = get_report_logger()

TEST_PIN = "test"
SE_PIN = "se"


def instrument(locked: LockedDesign, layout: ScanChainLayout, variant: DefenseVariant) -> Netlist:
    n = locked.netlist
    variant = DefenseVariant(variant)
    tails = [cell_net(n, chain[-1]) for chain in layout.chains]
    gates: List[Gate] = []
    flops: List[Flop] = []
    outputs: List[str] = []

    def gate(out: str, kind: GateKind, *inputs: str) -> str:
        gates.append(Gate(output=out, kind=kind, inputs=tuple(inputs)))
        return out

    def flop(q: str, d: str) -> str:
        flops.append(Flop(index=len(n.flops) + len(flops), q=q, d=d))
        return q

    if variant is DefenseVariant.DFS:
        # read-blocking array driven by a sticky Test posedge detector
        prev = flop("srb_prev_q", TEST_PIN)
        sticky = flop("srb_sticky_q", "srb_sticky_d")
        gate("srb_prev_n", GateKind.NOT, prev)
        gate("srb_posedge", GateKind.AND, TEST_PIN, "srb_prev_n")
        gate("srb_sticky_d", GateKind.OR, "srb_posedge", sticky)
        gate("srb_test_n", GateKind.NOT, TEST_PIN)
        gate("srb_mask", GateKind.OR, "srb_test_n", sticky)
        for c, tail in enumerate(tails):
            outputs.append(gate(f"so{c}", GateKind.OR, "srb_mask", tail))
    else:
        gate("sd_delay", GateKind.BUF, TEST_PIN)
        gate("sd_inv", GateKind.NOT, "sd_delay")
        # posedge latch; clocked by the test edge in silicon, a pseudo input under full scan
        prev = flop("sd_seen_q", "sd_inv")
        gate("sd_nor", GateKind.NOR, "sd_inv", prev)
        outputs.append(gate("sd", GateKind.AND, "sd_nor", SE_PIN))
        shifted = flop("cg_shift_q", "sd")
        gate("cg_m0", GateKind.NOR, TEST_PIN, SE_PIN)
        gate("cg_hold", GateKind.AND, "cg_m0", shifted)
        # transparent latch; one primitive, modelled combinationally
        gate("cg_latch", GateKind.BUF, "cg_hold")
        outputs.append(gate("cg_ctrl", GateKind.OR, "cg_latch", "sd"))

    added = {g.output for g in gates} | {f.q for f in flops} | {TEST_PIN, SE_PIN}
    clash = sorted(added & set(n.drivers))
    if clash:
        raise NetlistError(f"instrumentation nets already used in {n.name}: {clash}")

    return n.replace(
        name=f"{n.name}_{variant.value}",
        inputs=tuple(n.inputs) + (TEST_PIN, SE_PIN),
        outputs=tuple(n.outputs) + tuple(outputs),
        gates=tuple(n.gates) + tuple(gates),
        flops=tuple(n.flops) + tuple(flops),
    )


@dataclass(frozen=True)
class CoverageEntry:
    design: str
    faults: int
    detected: int
    untestable: int
    patterns: int
    top_up: int

    @property
    def fault_coverage(self) -> float:
        return self.detected / self.faults if self.faults else 1.0

    @property
    def test_coverage(self) -> float:
        testable = self.faults - self.untestable
        return self.detected / testable if testable else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "design": self.design,
            "faults": self.faults,
            "detected": self.detected,
            "untestable": self.untestable,
            "patterns": self.patterns,
            "top_up_patterns": self.top_up,
            "fault_coverage": round(self.fault_coverage, 6),
            "test_coverage": round(self.test_coverage, 6),
        }


@dataclass
class CoverageReport:
    budget: int
    seed: int
    entries: Dict[str, CoverageEntry] = field(default_factory=dict)

    def coverage(self, label: str) -> float:
        return self.entries[label].fault_coverage

    def to_dict(self) -> Dict[str, Any]:
        return {
            "budget": self.budget,
            "seed": self.seed,
            "designs": {label: entry.to_dict() for label, entry in self.entries.items()},
        }


class PatternSource:
    """Shared random stream: fixed-size chunks over the union of all source names."""

    def __init__(self, names: Sequence[str], seed: int, chunk: int):
        self.names = list(names)
        self.seed = seed
        self.chunk = chunk

    def rows(self, stream: str, count: int) -> np.ndarray:
        rng = np.random.default_rng(derive_seed(self.seed, stream))
        chunks = []
        while sum(len(c) for c in chunks) < count:
            chunks.append(rng.integers(0, 2, size=(self.chunk, len(self.names)), dtype=np.uint8))
        if not chunks:
            return np.zeros((0, len(self.names)), dtype=np.uint8)
        return np.vstack(chunks)[:count]

    def project(self, n: Netlist, rows: np.ndarray) -> np.ndarray:
        columns = [self.names.index(net) for net in n.sources]
        return rows[:, columns]


def _pattern_sequence(n: Netlist, source: PatternSource, budget: int, solver: str):
    sim = FaultSimulator(n)
    first = source.project(n, source.rows("block", source.chunk))
    detected = sim.detect(PatternBlock.from_matrix(n.sources, first))
    missed: List[Fault] = [fault for fault, hit in zip(sim.faults, detected) if not hit]

    top_up_rows: List[Dict[str, int]] = []
    untestable: List[Fault] = []
    if missed:
        top_up_rows, untestable = StuckAtTestGenerator(n, solver).top_up(missed)
    top_up = np.array([[row[net] for net in n.sources] for row in top_up_rows],
                      dtype=np.uint8).reshape(len(top_up_rows), len(n.sources))

    matrix = np.vstack([first, top_up])
    if len(matrix) < budget:
        extra = source.project(n, source.rows("extra", budget - len(matrix)))
        matrix = np.vstack([matrix, extra])
    return sim, matrix[:budget], min(len(top_up_rows), max(0, budget - len(first))), untestable


@log_execution_time(logger)
def coverage_compare(original: Netlist, instrumented: Mapping[str, Netlist], budget: int, seed: int,
                     random_block: int = 256, solver: str = "glucose4") -> CoverageReport:
    if budget < 1:
        raise NetlistError(f"pattern budget must be >= 1, got {budget}")
    designs: Dict[str, Netlist] = {"original": original, **instrumented}
    names: List[str] = []
    for n in designs.values():
        names += [net for net in n.sources if net not in names]
    source = PatternSource(names, seed, random_block)

    report = CoverageReport(budget=budget, seed=seed)
    for label, n in designs.items():
        sim, matrix, top_up, untestable = _pattern_sequence(n, source, budget, solver)
        flags = sim.detect(PatternBlock.from_matrix(n.sources, matrix))
        entry = CoverageEntry(
            design=n.name,
            faults=len(sim.faults),
            detected=int(np.count_nonzero(flags)),
            untestable=len(untestable),
            patterns=len(matrix),
            top_up=top_up,
        )
        report.entries[label] = entry
        logger.info("Coverage %s: %.4f fault / %.4f test over %d patterns",
                    label, entry.fault_coverage, entry.test_coverage, entry.patterns)
    return report
