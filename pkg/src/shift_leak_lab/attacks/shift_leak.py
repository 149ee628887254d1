"""
Shift-and-leak: stage a leak condition through the scan chain and read one
key bit at a PO.

After the M0 key load, M1a moves only the RC sub-chains while SCs hold; M2
then shifts every chain by the scan distance d, carrying the target SC into
the leaky cell. A cell at chain position p therefore holds, at observation
time, whatever sat at p - d before the M2 shift (or a scan-in bit when
p - d < 0).
"""

import random
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from src.shift_leak_lab.atpg.leak import LeakCondition
from src.shift_leak_lab.attacks.protocol import apply_streams, m1a_streams
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import M0, M1A, M2, ChipSession
from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.utils.exceptions import DecodeError, PlanInfeasibleError
from src.shift_leak_lab.utils.logger import get_attack_logger

logger = get_attack_logger()


@dataclass(frozen=True)
class ShiftPlan:
    sc: int
    leak_cell: CellRef
    chain: int
    distance: int
    preload: Dict[CellRef, int]
    m1a_streams: List[List[int]]
    m2_streams: List[List[int]]
    pi: Dict[str, int]
    po: str
    decode: Dict[int, int]
    condition: Optional[LeakCondition] = field(default=None, compare=False, repr=False)

    def decode_bit(self, observed: int) -> int:
        if self.condition is not None:
            return self.condition.decode(observed)
        if observed not in self.decode:
            raise DecodeError(observed, self.decode)
        return self.decode[observed]

    def to_dict(self) -> Dict[str, object]:
        return {
            "sc": self.sc,
            "leak_cell": str(self.leak_cell),
            "chain": self.chain,
            "distance": self.distance,
            "preload": {str(cell): bit for cell, bit in sorted(self.preload.items())},
            "m2_streams": [list(stream) for stream in self.m2_streams],
            "pi": dict(self.pi),
            "po": self.po,
        }


def scan_distance(layout: ScanChainLayout, sc: int, lc: CellRef) -> Tuple[int, int]:
    """(chain, d) for moving SC(sc) onto lc; raises when the shift cannot get there."""
    sc_cell = CellRef.sc(sc)
    sc_chain, sc_pos = layout.position(sc_cell)
    lc_chain, lc_pos = layout.position(lc)
    if sc_chain != lc_chain:
        raise PlanInfeasibleError(f"{sc_cell} and {lc} sit on different chains", lc_chain, lc_pos)
    d = lc_pos - sc_pos
    if d <= 0:
        raise PlanInfeasibleError(f"{lc} is not downstream of {sc_cell} (d={d})", lc_chain, lc_pos)
    return lc_chain, d


def plan_shift(layout: ScanChainLayout, sc: int, lc: CellRef, cond: LeakCondition,
               known: Mapping[int, int], inputs: Sequence[str] = (),
               rng: Optional[random.Random] = None, rc_preload: bool = True) -> ShiftPlan:
    """
    Back-shift every known constraint bit of cond by d positions. Sources are
    the scan-in stream, an RC preloaded through M1a, or an SC whose known value
    must match; an unknown SC source makes the plan infeasible.
    """
    chain, d = scan_distance(layout, sc, lc)
    if cond.leak_cell != lc:
        raise PlanInfeasibleError(f"leak condition is for {cond.leak_cell}, not {lc}", chain)

    def fill() -> int:
        return rng.getrandbits(1) if rng is not None else 0

    preload: Dict[CellRef, int] = {}
    scan_in: Dict[Tuple[int, int], int] = {}
    for cell, value in sorted(cond.constrained_cells.items()):
        if cell == lc:
            continue
        c, p = layout.position(cell)
        source = p - d
        if source < 0:
            scan_in[(c, d - 1 - p)] = value
            continue
        upstream = layout.chains[c][source]
        if upstream.kind is CellKind.RC:
            if not rc_preload:
                raise PlanInfeasibleError(f"{cell} needs {upstream} preloaded, M1a load unavailable", c, source)
            if preload.get(upstream, value) != value:
                raise PlanInfeasibleError(f"conflicting preload values for {upstream}", c, source)
            preload[upstream] = value
        elif upstream.index in known:
            if known[upstream.index] != value:
                raise PlanInfeasibleError(f"{cell} needs {value}, known {upstream} holds {known[upstream.index]}",
                                          c, source)
        else:
            raise PlanInfeasibleError(f"{cell} would receive unknown {upstream}", c, source)

    m2 = [[fill() for _ in range(d)] for _ in range(layout.n_chains)]
    for (c, t), value in scan_in.items():
        m2[c][t] = value

    pis = cond.constrained_pis
    pi = {net: pis[net] if net in pis else fill() for net in inputs}

    plan = ShiftPlan(
        sc=sc,
        leak_cell=lc,
        chain=chain,
        distance=d,
        preload=preload,
        m1a_streams=m1a_streams(layout, preload, fill if rng is not None else None),
        m2_streams=m2,
        pi=pi,
        po=cond.po,
        decode=cond.decode_map,
        condition=cond,
    )
    logger.debug("Plan for SC%d via %s: d=%d, %d preloaded, %d scan-in bits",
                 sc, lc, d, len(preload), len(scan_in))
    return plan


def execute_plan(session: ChipSession, plan: ShiftPlan) -> int:
    """Boot, M0 key load, M1a preload, d M2 pulses, clockless M0 observation; PIs held at plan.pi throughout."""
    full_pi = {net: int(plan.pi.get(net, 0)) for net in session.netlist.inputs}
    session.reset(M0)
    session.step(M0, pi=full_pi)
    apply_streams(session, M1A, plan.m1a_streams, pi=full_pi)
    apply_streams(session, M2, plan.m2_streams, pi=full_pi)
    observed = session.observe(M0, full_pi)[plan.po]
    return plan.decode_bit(observed)


def observation_classes(layout: ScanChainLayout, cells: Collection[CellRef], d: int,
                        known: Mapping[int, int], leak_cell: CellRef,
                        rc_preload: bool = True) -> Tuple[Set[CellRef], Set[CellRef], Dict[CellRef, int]]:
    """
    Observation-time content of each cell after a d-pulse M2 shift:
    controllable (scan-in or preloadable RC source), unknown (unknown SC
    source) or a known constant (known SC source).
    """
    controllable: Set[CellRef] = set()
    unknown: Set[CellRef] = set()
    known_values: Dict[CellRef, int] = {}
    for cell in cells:
        if cell == leak_cell:
            continue
        c, p = layout.position(cell)
        source = p - d
        if source < 0:
            controllable.add(cell)
            continue
        upstream = layout.chains[c][source]
        if upstream.kind is CellKind.RC:
            (controllable if rc_preload else unknown).add(cell)
        elif upstream.index in known:
            known_values[cell] = int(known[upstream.index])
        else:
            unknown.add(cell)
    return controllable, unknown, known_values
