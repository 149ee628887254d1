"""
Pre-processing: a per-PO SAT attack on fan-in cones that contain secure cells.

Cone inputs are the PIs and the RCs (loaded through M1a while the SCs keep the
key); the SCs are the key inputs. Each distinguishing input pattern is applied
to the oracle chip, and the loop stops when no two keys consistent with the
observations disagree on any input, or at the iteration cap. Bits forced by the
observations are returned.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from pysat.solvers import Solver

from src.shift_leak_lab.attacks.outcome import DipLoopState
from src.shift_leak_lab.attacks.protocol import AttackCapabilities, check_scan_control, query_po
from src.shift_leak_lab.atpg.encoding import CnfBuilder, model_value
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import ChipSession
from src.shift_leak_lab.core.cells import CellRef
from src.shift_leak_lab.core.netlist import Cone, Netlist, extract_fanin_cone, key_index_of
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.exceptions import InvariantViolation
from src.shift_leak_lab.utils.logger import get_attack_logger

logger = get_attack_logger()


@dataclass
class PreprocessResult:
    bits: Dict[int, int] = field(default_factory=dict)
    queries: Dict[int, int] = field(default_factory=dict)
    states: List[DipLoopState] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    capabilities: Optional[AttackCapabilities] = None

    @property
    def unresolved(self) -> List[str]:
        return [state.po for state in self.states if not state.resolved]

    @property
    def iterations(self) -> int:
        return sum(state.iterations for state in self.states)


def iteration_cap(n_keys: int, factor: int = 4, ceiling: int = 10000) -> int:
    return min(factor * (1 << n_keys), ceiling)


def run_preprocess(session: ChipSession, locked: LockedDesign, layout: ScanChainLayout,
                   solver: str = "glucose4", factor: int = 4, ceiling: int = 10000,
                   capabilities: Optional[AttackCapabilities] = None) -> PreprocessResult:
    """Cones with flops are attacked only when capabilities, measured here if absent, confirm RC loading."""
    n = locked.netlist
    if capabilities is None:
        capabilities = check_scan_control(session, locked, layout, solver)
    result = PreprocessResult(capabilities=capabilities)

    for po in n.outputs:
        cone = extract_fanin_cone(n, po)
        key_nets = sorted(cone.keys, key=key_index_of)
        if not key_nets:
            continue
        if not capabilities.can_attack(cone):
            result.skipped.append(po)
            logger.debug("Cone %s needs RC loading, not confirmed on this chip", po)
            continue
        pending = [net for net in key_nets if key_index_of(net) not in result.bits]
        if not pending:
            continue

        state = DipLoopState(po=po, cap=iteration_cap(len(pending), factor, ceiling))
        before = session.observations
        bits = _dip_loop(session, n, layout, cone, key_nets, result.bits, state, solver)
        used = session.observations - before
        result.states.append(state)
        for index, bit in bits.items():
            result.bits[index] = bit
            result.queries[index] = used
            logger.log_recovery(index, "preprocessed", "dip-loop", used, bit)
        if not state.resolved:
            logger.warning("DIP loop on %s stopped at the %d-iteration cap", po, state.cap)

    logger.info("Pre-processing: %d bits from %d cones (%d unresolved, %d skipped)",
                len(result.bits), len(result.states), len(result.unresolved), len(result.skipped))
    return result


def preprocess(session: ChipSession, locked: LockedDesign, layout: ScanChainLayout,
               solver: str = "glucose4", factor: int = 4, ceiling: int = 10000) -> Dict[int, int]:
    """Key index → bit for every SC uniquely determined by its PO cones."""
    return run_preprocess(session, locked, layout, solver, factor, ceiling).bits


def _dip_loop(session: ChipSession, n: Netlist, layout: ScanChainLayout, cone: Cone, key_nets: List[str],
              known: Mapping[int, int], state: DipLoopState, solver_name: str) -> Dict[int, int]:
    inputs = [net for net in n.inputs if net in cone.pis] + [n.flops[i].q for i in sorted(cone.flops)]
    gates = n.gates_in(cone.gates)
    builder = CnfBuilder()
    x = {net: builder.var(f"x:{net}") for net in inputs}

    def key_copy(tag: str) -> Dict[str, int]:
        return {net: builder.const(known[key_index_of(net)]) if key_index_of(net) in known
                else builder.var(f"{tag}:{net}") for net in key_nets}

    keys_a, keys_b = key_copy("ka"), key_copy("kb")
    out_a = builder.encode_boolean(n, "a", sources={**x, **keys_a}, gates=gates)[cone.po]
    out_b = builder.encode_boolean(n, "b", sources={**x, **keys_b}, gates=gates)[cone.po]
    act = builder.fresh("act")
    builder.add([-act, builder.new_xor(out_a, out_b)])

    with Solver(name=solver_name, bootstrap_with=builder.clauses) as solver:
        while True:
            if state.iterations >= state.cap:
                break
            if not solver.solve(assumptions=[act]):
                state.resolved = True
                break
            model = solver.get_model()
            dip = {net: model_value(model, x[net]) for net in inputs}
            observed = _query(session, layout, n, cone, dip)
            state.record(dip, observed)
            logger.log_oracle_query("dip", session.observations)

            mark = len(builder.clauses)
            constants = {net: builder.const(value) for net, value in dip.items()}
            for tag, keys in (("a", keys_a), ("b", keys_b)):
                lits = builder.encode_boolean(n, f"d{state.iterations}{tag}", sources={**constants, **keys}, gates=gates)
                out = lits[cone.po]
                builder.add([out if observed else -out])
            for clause in builder.clauses[mark:]:
                solver.add_clause(clause)

        bits: Dict[int, int] = {}
        for net in key_nets:
            index = key_index_of(net)
            if index in known:
                continue
            lit = keys_a[net]
            can_one = solver.solve(assumptions=[-act, lit])
            can_zero = solver.solve(assumptions=[-act, -lit])
            # each DIP answer matches one of the two keys that produced it, so some key always survives
            if not (can_one or can_zero):
                raise InvariantViolation(f"oracle observations on {cone.po} contradict the locked netlist")
            if can_one != can_zero:
                bits[index] = int(can_one)
    return bits


def _query(session: ChipSession, layout: ScanChainLayout, n: Netlist, cone: Cone, dip: Mapping[str, int]) -> int:
    pi = {net: value for net, value in dip.items() if net in cone.pis}
    rc_values = {CellRef.rc(n.flop_by_q[net].index): value for net, value in dip.items() if net in n.flop_by_q}
    return query_po(session, layout, cone.po, pi, rc_values)
