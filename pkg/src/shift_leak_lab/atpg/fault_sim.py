"""
Single stuck-at fault model and serial fault simulation.

Flop Qs and key inputs are pseudo inputs (scan-loadable); POs and flop D nets
are observation points (full scan). Each fault is simulated over its fan-out
cone only, on top of the packed good-machine values.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from src.shift_leak_lab.core.netlist import Gate, GateKind, Netlist, fanout_cone
from src.shift_leak_lab.core.simulator import PatternBlock, simulate_packed
from src.shift_leak_lab.utils.exceptions import NetlistError
from src.shift_leak_lab.utils.logger import get_atpg_logger

logger = get_atpg_logger()


@dataclass(frozen=True, order=True)
class Fault:
    net: str
    stuck_at: int

    def __post_init__(self):
        if self.stuck_at not in (0, 1):
            raise ValueError(f"stuck-at value must be 0 or 1, got {self.stuck_at}")

    def __str__(self) -> str:
        return f"{self.net}/sa{self.stuck_at}"


def observation_points(n: Netlist) -> List[str]:
    points = list(n.outputs)
    for flop in n.flops:
        if flop.d not in points:
            points.append(flop.d)
    return points


def enumerate_faults(n: Netlist) -> List[Fault]:
    return [Fault(net, value) for net in n.nets for value in (0, 1)]


def collapse_faults(n: Netlist, faults: Optional[Iterable[Fault]] = None) -> List[Fault]:
    """
    Equivalence collapsing across BUF/NOT: when a BUF/NOT input has no other
    fan-out and is not observed directly, its output faults are dropped in
    favour of the (polarity-adjusted) input faults.
    """
    faults = list(faults) if faults is not None else enumerate_faults(n)
    observed = set(observation_points(n))
    dropped = set()
    for gate in n.gates:
        if gate.kind not in (GateKind.BUF, GateKind.NOT):
            continue
        source = gate.inputs[0]
        if len(n.fanout[source]) == 1 and source not in observed:
            dropped.add(Fault(gate.output, 0))
            dropped.add(Fault(gate.output, 1))
    return [fault for fault in faults if fault not in dropped]


def as_block(n: Netlist, patterns: Union[PatternBlock, Sequence[Mapping[str, int]]]) -> PatternBlock:
    if isinstance(patterns, PatternBlock):
        return patterns
    return PatternBlock.from_rows(list(n.sources), patterns)


class FaultSimulator:
    """Serial fault simulator with cached per-net fan-out cones."""

    def __init__(self, n: Netlist, faults: Optional[Sequence[Fault]] = None):
        self.netlist = n
        self.faults = list(faults) if faults is not None else collapse_faults(n)
        self.observed = observation_points(n)
        self._cones: Dict[str, tuple] = {}

    def _cone(self, net: str):
        cache = self._cones
        if net not in cache:
            members = fanout_cone(self.netlist, net) | {net}
            gates: List[Gate] = self.netlist.gates_in(members)
            points = [p for p in self.observed if p in members]
            cache[net] = (gates, points)
        return cache[net]

    def detect(self, patterns: Union[PatternBlock, Sequence[Mapping[str, int]]],
               faults: Optional[Sequence[Fault]] = None) -> np.ndarray:
        """Boolean flag per fault: detected by at least one pattern."""
        faults = self.faults if faults is None else list(faults)
        block = as_block(self.netlist, patterns)
        flags = np.zeros(len(faults), dtype=bool)
        if block.count == 0 or not faults:
            return flags
        good = simulate_packed(self.netlist, block)
        valid = block.valid_mask
        for i, fault in enumerate(faults):
            gates, points = self._cone(fault.net)
            if not points:
                continue
            faulty = simulate_packed(self.netlist, block, stuck_at=(fault.net, fault.stuck_at),
                                     base=good, only_gates=gates)
            for point in points:
                if np.any((faulty[point] ^ good[point]) & valid):
                    flags[i] = True
                    break
        return flags

    def first_detections(self, block: PatternBlock, faults: Optional[Sequence[Fault]] = None) -> np.ndarray:
        """Index of the first detecting pattern per fault, -1 when undetected."""
        faults = self.faults if faults is None else list(faults)
        first = np.full(len(faults), -1, dtype=np.int64)
        if block.count == 0 or not faults:
            return first
        good = simulate_packed(self.netlist, block)
        valid = block.valid_mask
        for i, fault in enumerate(faults):
            gates, points = self._cone(fault.net)
            if not points:
                continue
            faulty = simulate_packed(self.netlist, block, stuck_at=(fault.net, fault.stuck_at),
                                     base=good, only_gates=gates)
            diff = np.zeros(block.width, dtype=np.uint64)
            for point in points:
                diff |= (faulty[point] ^ good[point]) & valid
            hits = np.nonzero(diff)[0]
            if hits.size:
                word = int(hits[0])
                bits = int(diff[word])
                first[i] = word * 64 + ((bits & -bits).bit_length() - 1)
        return first


def fault_coverage(n: Netlist, patterns: Union[PatternBlock, Sequence[Mapping[str, int]]],
                   faults: Optional[Sequence[Fault]] = None) -> float:
    """Fraction of collapsed single stuck-at faults detected by at least one pattern."""
    simulator = FaultSimulator(n, faults)
    if not simulator.faults:
        raise NetlistError(f"{n.name} has an empty fault list")
    block = as_block(n, patterns)
    if block.count == 0:
        return 0.0
    detected = simulator.detect(block)
    coverage = float(detected.sum()) / len(simulator.faults)
    logger.debug("Fault coverage of %s: %d/%d over %d patterns",
                 n.name, int(detected.sum()), len(simulator.faults), block.count)
    return coverage
