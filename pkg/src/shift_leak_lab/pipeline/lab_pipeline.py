"""
Lab pipeline: lock → stitch → attack → report, with file artifacts.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from src.shift_leak_lab.attacks.orchestrator import run_full_attack
from src.shift_leak_lab.attacks.outcome import AttackReport
from src.shift_leak_lab.chip.layout import ScanChainLayout, read_layout, stitch, write_layout
from src.shift_leak_lab.chip.session import DefenseVariant, boot
from src.shift_leak_lab.chip.trace import SessionTrace
from src.shift_leak_lab.core.bench import read_bench, write_bench
from src.shift_leak_lab.locking.locks import Key, LockedDesign, lock, strip_key_gates
from src.shift_leak_lab.reports.coverage import coverage_compare, instrument
from src.shift_leak_lab.reports.overhead import overhead
from src.shift_leak_lab.reports.tables import combined_table, export_combined, table_row
from src.shift_leak_lab.utils.config import LabConfig, RunConfig
from src.shift_leak_lab.utils.exceptions import InvariantViolation, LabError
from src.shift_leak_lab.utils.exporter import write_yaml_report
from src.shift_leak_lab.utils.logger import get_error_logger, get_pipeline_logger, get_run_version
from src.shift_leak_lab.validation.validator import KeyAuditValidator, LayoutValidator, LockValidator

logger = get_pipeline_logger()


@dataclass
class RunStats:
    designs: int = 0
    succeeded: int = 0
    failed: int = 0
    files: List[Path] = field(default_factory=list)


class LabPipeline:
    """Runs CLI subcommands against a resolved RunConfig."""

    def __init__(self, config: LabConfig, run: RunConfig):
        self.config = config
        self.run = run
        self.out_dir = Path(run.output_dir)
        self.run_version = get_run_version()
        self.stats = RunStats()
        logger.info("Lab pipeline initialised | Version: %s | output: %s", self.run_version, self.out_dir)

    # lock

    def lock(self) -> List[LockedDesign]:
        designs = []
        for path in self.run.input_paths:
            self.stats.designs += 1
            try:
                designs.append(self._lock_one(path))
                self.stats.succeeded += 1
            except LabError as e:
                self._fail("lock", path, e)
                raise
        return designs

    def _lock_one(self, path: str) -> LockedDesign:
        original = read_bench(path)
        locked = lock(original, self.run.scheme, self.run.key_bits, self.run.seed_lock,
                      self.config.locking.sll_candidate_pool)
        stem = self.out_dir / original.name
        self._wrote(write_bench(f"{stem}.locked.bench", locked.netlist))
        self._wrote(locked.hidden_key.write(f"{stem}.key"))

        checks = LockValidator(seed=self.run.seed_lock).validate(locked, original)
        payload = locked.to_report_dict()
        payload["checks"] = {r.entity: r.message for r in checks}
        payload["config"] = self.run.to_dict()
        self._wrote(write_yaml_report(f"{stem}.lock.yaml", payload))
        failed = [r.entity for r in checks if not r.is_valid]
        if failed:
            raise InvariantViolation(f"lock checks failed for {original.name}: {failed}", {"checks": failed})
        return locked

    # stitch

    def stitch(self) -> List[ScanChainLayout]:
        layouts = []
        for path in self.run.input_paths:
            locked = self._load_locked(path)
            for n_chains in self.run.chains:
                layout = stitch(locked, n_chains, self.run.seed_stitch, self.run.policy)
                LayoutValidator().validate(layout, locked)
                self._wrote(write_layout(self.out_dir / f"{locked.netlist.name}.c{n_chains}.layout.yaml", layout))
                layouts.append(layout)
        return layouts

    # attack

    def attack(self) -> List[AttackReport]:
        reports = []
        for path in self.run.input_paths:
            self.stats.designs += 1
            locked = self._load_locked(path)
            for n_chains in self.run.chains:
                report = self._attack_one(locked, self._layout(locked, n_chains))
                reports.append(report)
            self.stats.succeeded += 1
        logger.info("Attack run completed | Version: %s | %d reports", self.run_version, len(reports))
        return reports

    def _attack_one(self, locked: LockedDesign, layout: ScanChainLayout) -> AttackReport:
        stem = self.out_dir / f"{locked.netlist.name}.{self.run.defense}.c{layout.n_chains}"
        trace = SessionTrace(f"{stem}.trace.jsonl", keep=False) if self.run.trace else None
        try:
            report = run_full_attack(
                lambda: boot(locked, layout, self.run.defense, seed=self.run.seed_attack, trace=trace),
                locked, layout,
                attack=self.config.attack,
                atpg=self.config.atpg,
                seeds=self.run.seeds(),
                config=self.run.to_dict(),
            )
        finally:
            if trace is not None:
                trace.close()
                self.stats.files.append(Path(f"{stem}.trace.jsonl"))

        self._wrote(write_yaml_report(f"{stem}.attack.yaml", report.to_dict()))
        self._wrote(write_yaml_report(f"{stem}.timings.yaml", report.timings_dict()))
        if locked.hidden_key is not None:
            KeyAuditValidator().enforce(report, locked.hidden_key)
        return report

    # report

    def report(self) -> Tuple[List[Dict[str, object]], List[Path]]:
        rows = []
        for path in self.run.input_paths:
            self.stats.designs += 1
            try:
                rows.append(self._report_one(path))
                self.stats.succeeded += 1
            except LabError as e:
                self._fail("report", path, e)
                raise
        table = combined_table(rows)
        paths = export_combined(table, self.out_dir, excel=self.config.report.export_excel)
        self.stats.files.extend(paths)
        return rows, paths

    def _report_one(self, path: str) -> Dict[str, object]:
        locked = self._load_locked(path)
        layout = self._layout(locked, self.run.chains[0])
        settings = self.config.report
        stem = self.out_dir / locked.netlist.name

        reports = {variant: overhead(locked, layout, variant) for variant in DefenseVariant}
        instrumented = {variant.value: instrument(locked, layout, variant) for variant in DefenseVariant}
        coverage = coverage_compare(strip_key_gates(locked), instrumented, self.run.budget, settings.seed,
                                    settings.random_block, self.config.atpg.solver)
        self._wrote(write_yaml_report(f"{stem}.coverage.yaml",
                                      {**coverage.to_dict(), "config": self.run.to_dict()}))

        attacks: Dict[str, AttackReport] = {}
        for variant, report in reports.items():
            self._wrote(write_yaml_report(f"{stem}.{variant.value}.overhead.yaml",
                                          {**report.to_dict(), "config": self.run.to_dict()}))
            if settings.include_attack and locked.hidden_key is not None:
                attacks[variant.value] = run_full_attack(
                    lambda: boot(locked, layout, variant, seed=self.run.seed_attack),
                    locked, layout, self.config.attack, self.config.atpg,
                    seeds=self.run.seeds(), config=self.run.to_dict(),
                )
        return table_row(reports[DefenseVariant.DFS], reports[DefenseVariant.MSSD], coverage, attacks)

    # shared

    def _load_locked(self, path: str) -> LockedDesign:
        """A locked bench (with --key-file for the chip), or a plain bench locked in-process."""
        n = read_bench(path)
        if not n.key_inputs:
            return lock(n, self.run.scheme, self.run.key_bits, self.run.seed_lock,
                        self.config.locking.sll_candidate_pool)
        key = Key.read(self.run.key_file) if self.run.key_file is not None else None
        return LockedDesign.from_netlist(n, key, scheme=self.run.scheme)

    def _layout(self, locked: LockedDesign, n_chains: int) -> ScanChainLayout:
        if self.run.layout_file is not None:
            return read_layout(self.run.layout_file)
        return stitch(locked, n_chains, self.run.seed_stitch, self.run.policy)

    def _wrote(self, path: Path) -> Path:
        self.stats.files.append(Path(path))
        return Path(path)

    def _fail(self, step: str, path: str, error: LabError) -> None:
        self.stats.failed += 1
        logger.error("%s failed for %s: %s", step, path, error.message)
        get_error_logger("pipeline_errors").error("%s failed for %s: %s", step, path, error.message,
                                                  exc_info=True)
