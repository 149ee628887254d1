"""
Two-phase key recovery: DIP-loop pre-processing on PO cones, then
shift-and-leak over every chain, rightmost leaky cell first.
"""

import random
from typing import Any, Callable, Dict, List, Mapping, Optional

from src.shift_leak_lab.atpg.leak import LeakCondition, cone_cells, gen_leak_condition
from src.shift_leak_lab.attacks.outcome import AttackReport, KeyBitOutcome, RecoveryMethod, RecoveryStatus
from src.shift_leak_lab.attacks.preprocess import PreprocessResult, run_preprocess
from src.shift_leak_lab.attacks.protocol import AttackCapabilities, check_scan_control
from src.shift_leak_lab.attacks.shift_leak import (
    ShiftPlan,
    execute_plan,
    observation_classes,
    plan_shift,
    scan_distance,
)
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import ChipSession
from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.core.netlist import Cone, extract_fanin_cone
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.config import AtpgConfig, AttackConfig
from src.shift_leak_lab.utils.exceptions import DecodeError, PlanInfeasibleError
from src.shift_leak_lab.utils.helpers import phase_timer
from src.shift_leak_lab.utils.logger import get_attack_logger, get_error_logger
from src.shift_leak_lab.validation.validator import LeakConditionValidator

logger = get_attack_logger()
error_logger = get_error_logger("attack")


class ShiftAndLeakAttack:
    """Stateful driver of one attack run against one chip session."""

    def __init__(self, session: ChipSession, locked: LockedDesign, layout: ScanChainLayout,
                 attack: Optional[AttackConfig] = None, atpg: Optional[AtpgConfig] = None):
        self.session = session
        self.locked = locked
        self.netlist = locked.netlist
        self.layout = layout
        self.attack = attack or AttackConfig()
        self.atpg = atpg or AtpgConfig()
        self.capabilities: Optional[AttackCapabilities] = None
        self.rng = random.Random(self.attack.seed) if self.attack.fill == "random" else None
        self.validator = (LeakConditionValidator(self.netlist, self.attack.validation_unknown_limit)
                          if self.attack.validate_conditions else None)

        self.cones: Dict[str, Cone] = {po: extract_fanin_cone(self.netlist, po) for po in self.netlist.outputs}
        self.cells: Dict[str, List[CellRef]] = {po: cone_cells(self.netlist, cone) for po, cone in self.cones.items()}

        self.known: Dict[int, int] = {}
        self.outcomes: Dict[int, KeyBitOutcome] = {i: KeyBitOutcome(i) for i in range(locked.key_bits)}
        self.stats = {"decode_errors": 0, "rejected_conditions": 0, "infeasible_plans": 0}

    def check_scan_control(self) -> AttackCapabilities:
        """Measured once per run, on first use."""
        if self.capabilities is None:
            self.capabilities = check_scan_control(self.session, self.locked, self.layout, self.atpg.solver,
                                                   self.attack.scan_check_trials, self.attack.scan_check_budget)
        return self.capabilities

    # phase 1

    def run_preprocess(self) -> PreprocessResult:
        result = run_preprocess(self.session, self.locked, self.layout, solver=self.atpg.solver,
                                factor=self.attack.dip_iteration_factor,
                                ceiling=self.attack.dip_iteration_ceiling,
                                capabilities=self.check_scan_control())
        for index, bit in result.bits.items():
            self.known[index] = bit
            self.outcomes[index] = KeyBitOutcome(index, RecoveryStatus.PREPROCESSED, bit,
                                                 result.queries.get(index, 0), RecoveryMethod.DIP)
        return result

    # phase 2

    def run_shift_and_leak(self) -> int:
        if not self.check_scan_control().rc_preload:
            logger.info("Shift-and-leak skipped: scan control not confirmed on this chip")
            return 0
        recovered = 0
        for pass_index in range(self.attack.max_passes):
            gained = sum(self._sweep_chain(c) for c in range(self.layout.n_chains))
            recovered += gained
            logger.info("Shift-and-leak pass %d: %d new bits (%d/%d known)",
                        pass_index + 1, gained, len(self.known), self.locked.key_bits)
            if not gained or len(self.known) == self.locked.key_bits:
                break
        return recovered

    def _sweep_chain(self, c: int) -> int:
        chain = self.layout.chains[c]
        gained = 0
        for lc_pos in reversed(range(len(chain))):
            lc = chain[lc_pos]
            targets = [cell.index for cell in reversed(chain[:lc_pos])
                       if cell.kind is CellKind.SC and cell.index not in self.known]
            if not targets:
                continue
            pos = [po for po in self.netlist.outputs if lc in self.cells[po]]
            for sc in targets:
                for po in pos:
                    if self._leak(sc, lc, po):
                        gained += 1
                        break
            logger.log_attack_progress(len(self.known), self.locked.key_bits, f"{lc} on chain {c}")
        return gained

    def _leak(self, sc: int, lc: CellRef, po: str) -> bool:
        plan = self._plan(sc, lc, po)
        if plan is None:
            return False
        if self.validator is not None:
            result = self.validator.validate(self.cones[po], plan.condition)
            if not result.is_valid:
                self.stats["rejected_conditions"] += 1
                error_logger.error("Rejected leak condition for %s at %s: %s", lc, po, result.message)
                return False

        before = self.session.observations
        try:
            bit = execute_plan(self.session, plan)
        except DecodeError as e:
            self.stats["decode_errors"] += 1
            error_logger.error("Decode failure leaking SC%d via %s at %s: %s", sc, lc, po, e.message)
            return False
        queries = self.session.observations - before
        self.known[sc] = bit
        self.outcomes[sc] = KeyBitOutcome(sc, RecoveryStatus.LEAKED, bit, queries, RecoveryMethod.SHIFT_AND_LEAK)
        logger.log_recovery(sc, RecoveryStatus.LEAKED.value, RecoveryMethod.SHIFT_AND_LEAK.value, queries, bit)
        return True

    def _plan(self, sc: int, lc: CellRef, po: str) -> Optional[ShiftPlan]:
        """Plan with the per-LC condition, then with the distance-exact one."""
        try:
            _, d = scan_distance(self.layout, sc, lc)
        except PlanInfeasibleError:
            return None
        cells = self.cells[po]
        known_cells = {CellRef.sc(i): bit for i, bit in self.known.items()}
        controllable = {cell for cell in cells if cell.kind is CellKind.RC}
        unknown = {cell for cell in cells if cell.kind is CellKind.SC and cell not in known_cells}
        base = self._condition(po, lc, controllable, unknown, known_cells)
        if base is not None:
            plan = self._try_plan(sc, lc, base)
            if plan is not None:
                return plan

        controllable, unknown, known_values = observation_classes(
            self.layout, cells, d, self.known, lc, self.capabilities.rc_preload)
        refined = self._condition(po, lc, controllable, unknown, known_values)
        if refined is None:
            return None
        return self._try_plan(sc, lc, refined)

    def _condition(self, po: str, lc: CellRef, controllable, unknown,
                   known_values: Mapping[CellRef, int]) -> Optional[LeakCondition]:
        known_values = {cell: bit for cell, bit in known_values.items() if cell in self.cells[po]}
        return gen_leak_condition(
            self.netlist, self.cones[po], lc,
            controllable=controllable - set(known_values),
            unknown=unknown,
            known_values=known_values,
            solver=self.atpg.solver,
            minimize=self.atpg.minimize_constraints,
            dump_dir=self.atpg.dump_dir,
        )

    def _try_plan(self, sc: int, lc: CellRef, cond: LeakCondition) -> Optional[ShiftPlan]:
        try:
            return plan_shift(self.layout, sc, lc, cond, self.known, self.netlist.inputs,
                              self.rng, self.capabilities.rc_preload)
        except PlanInfeasibleError as e:
            self.stats["infeasible_plans"] += 1
            logger.debug("SC%d via %s infeasible at chain %s position %s: %s",
                         sc, lc, e.chain, e.position, e.message)
            return None

    def records(self) -> List[KeyBitOutcome]:
        return [self.outcomes[i] for i in range(self.locked.key_bits)]


def run_full_attack(session_factory: Callable[[], ChipSession], locked: LockedDesign, layout: ScanChainLayout,
                    attack: Optional[AttackConfig] = None, atpg: Optional[AtpgConfig] = None,
                    seeds: Optional[Dict[str, int]] = None,
                    config: Optional[Dict[str, Any]] = None) -> AttackReport:
    """Both phases against one freshly booted chip; unrecovered bits stay in the report."""
    session = session_factory()
    runner = ShiftAndLeakAttack(session, locked, layout, attack, atpg)
    durations: Dict[str, float] = {}

    logger.info("Attacking %s (%s, %s, %d chains, %d key bits)", locked.netlist.name, locked.scheme,
                session.variant.value, layout.n_chains, locked.key_bits)
    with phase_timer(durations, "preprocess"):
        pre = runner.run_preprocess()
    with phase_timer(durations, "shift_and_leak"):
        runner.run_shift_and_leak()

    report = AttackReport(
        design=locked.netlist.name,
        scheme=locked.scheme,
        defense=session.variant.value,
        n_chains=layout.n_chains,
        records=runner.records(),
        config=dict(config or {}),
        seeds=dict(seeds or {}),
        durations=durations,
        cones_processed=len(pre.states),
        cones_unresolved=len(pre.unresolved),
        dip_iterations=pre.iterations,
        scan_control=runner.check_scan_control().rc_preload,
        total_queries=session.observations,
    )
    logger.info("Recovered %d/%d key bits (%d preprocessed, %d leaked), %d oracle queries",
                report.recovered, report.key_bits, report.count(RecoveryStatus.PREPROCESSED),
                report.count(RecoveryStatus.LEAKED), report.total_queries)
    if runner.stats["decode_errors"]:
        logger.warning("%d decode failures during shift-and-leak", runner.stats["decode_errors"])
    return report
