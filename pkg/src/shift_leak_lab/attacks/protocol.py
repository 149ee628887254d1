"""
Attacker-side view of the chip: the pin sequences used to query the oracle and
a scan-control check that decides, from PO answers alone, whether scan-in data
reaches the RCs. Only PO pins are ever read.
"""

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from pysat.solvers import Solver

from src.shift_leak_lab.atpg.encoding import CnfBuilder, model_value
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import M0, M1A, ChipSession, PinValues
from src.shift_leak_lab.core.cells import CellRef
from src.shift_leak_lab.core.netlist import Cone, Netlist, extract_fanin_cone
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.helpers import reverse_shift_sequence
from src.shift_leak_lab.utils.logger import get_attack_logger

logger = get_attack_logger()


@dataclass(frozen=True)
class AttackCapabilities:
    """
    What the chip was seen to allow. rc_preload is set only after two queries
    that differed in nothing but their scan-in data gave different PO values;
    staged M2 shifts are attempted only on a chip that passed the same check.
    rc_independent lists POs whose value no RC content can change under any key.
    """
    rc_preload: bool
    witness_po: Optional[str] = None
    queries: int = 0
    rc_independent: FrozenSet[str] = frozenset()

    def can_attack(self, cone: Cone) -> bool:
        return not cone.flops or self.rc_preload or cone.po in self.rc_independent


def m1a_streams(layout: ScanChainLayout, values: Mapping[CellRef, int],
                fill: Optional[Callable[[], int]] = None) -> List[List[int]]:
    """
    Per-chain scan-in streams that leave values in the RCs after
    layout.max_rcs_per_chain M1a pulses. Unlisted RCs get fill() bits, 0 by default.
    """
    length = layout.max_rcs_per_chain
    streams = []
    for c in range(layout.n_chains):
        desired = []
        for cell in layout.rc_subchain(c):
            if cell in values:
                desired.append(int(values[cell]))
            else:
                desired.append(fill() if fill is not None else 0)
        streams.append(reverse_shift_sequence(desired, length))
    return streams


def apply_streams(session: ChipSession, mode, streams: Sequence[Sequence[int]], pi: PinValues = None) -> None:
    """Clock the streams in, PIs held at pi for every pulse."""
    length = len(streams[0]) if streams else 0
    for t in range(length):
        session.step(mode, pi=pi, si=[stream[t] for stream in streams])


def query_po(session: ChipSession, layout: ScanChainLayout, po: str,
             pi: Mapping[str, int], rc_values: Mapping[CellRef, int]) -> int:
    """Power-on, M0 key load, optional M1a RC load, clockless M0 observation."""
    full_pi = {net: int(pi.get(net, 0)) for net in session.netlist.inputs}
    session.reset(M0)
    session.step(M0, pi=full_pi)
    if rc_values:
        apply_streams(session, M1A, m1a_streams(layout, rc_values), pi=full_pi)
    return session.observe(M0, full_pi)[po]


def check_scan_control(session: ChipSession, locked: LockedDesign, layout: ScanChainLayout,
                       solver: str = "glucose4", trials: int = 4, budget: int = 64) -> AttackCapabilities:
    """
    Search the PO cones with flops, in declaration order, for a PI pattern and
    two RC assignments whose outputs differ under some key still consistent
    with the answers so far, and apply both through query_po. Equal answers
    become constraints on the key. The check stops at the first pair of
    differing answers, or when budget query pairs are spent.
    """
    n = locked.netlist
    before = session.observations
    spent = 0
    independent = set()
    for po in n.outputs:
        if spent >= budget:
            break
        cone = extract_fanin_cone(n, po)
        if not cone.flops:
            continue
        confirmed, used = _check_cone(session, layout, n, cone, solver, min(trials, budget - spent))
        spent += used
        if confirmed:
            logger.info("Scan control confirmed at %s after %d query pairs", po, spent)
            return AttackCapabilities(True, po, session.observations - before, frozenset(independent))
        if not used:
            independent.add(po)

    logger.info("Scan-in data never changed a PO in %d query pairs; RCs treated as uncontrollable", spent)
    return AttackCapabilities(False, None, session.observations - before, frozenset(independent))


def _check_cone(session: ChipSession, layout: ScanChainLayout, n: Netlist, cone: Cone,
                solver_name: str, limit: int) -> Tuple[bool, int]:
    pis = [net for net in n.inputs if net in cone.pis]
    qs = [n.flops[i].q for i in sorted(cone.flops)]
    gates = n.gates_in(cone.gates)
    builder = CnfBuilder()
    x = {net: builder.var(f"x:{net}") for net in pis}
    keys = {net: builder.var(f"k:{net}") for net in sorted(cone.keys)}
    states = [{q: builder.var(f"{tag}:{q}") for q in qs} for tag in ("r", "s")]
    outs = [builder.encode_boolean(n, tag, sources={**x, **state, **keys}, gates=gates)[cone.po]
            for tag, state in zip(("r", "s"), states)]
    builder.add([builder.new_xor(outs[0], outs[1])])

    used = 0
    with Solver(name=solver_name, bootstrap_with=builder.clauses) as solver:
        while used < limit:
            if not solver.solve():
                return False, used
            model = solver.get_model()
            pi = {net: model_value(model, lit) for net, lit in x.items()}
            assignments = [{q: model_value(model, lit) for q, lit in state.items()} for state in states]
            answers = [query_po(session, layout, cone.po, pi, _rc_values(n, values)) for values in assignments]
            used += 1
            if answers[0] != answers[1]:
                return True, used

            mark = len(builder.clauses)
            replayed = []
            for tag, values in zip(("a", "b"), assignments):
                constants = {net: builder.const(v) for net, v in {**pi, **values}.items()}
                lits = builder.encode_boolean(n, f"c{used}{tag}", sources={**constants, **keys}, gates=gates)
                replayed.append(lits[cone.po])
            builder.equal(replayed[0], replayed[1])
            for clause in builder.clauses[mark:]:
                solver.add_clause(clause)
    return False, used


def _rc_values(n: Netlist, values: Mapping[str, int]) -> Dict[CellRef, int]:
    return {CellRef.rc(n.flop_by_q[q].index): value for q, value in values.items()}
