"""
Command-line interface for the shift-and-leak lab.
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.shift_leak_lab.pipeline.lab_pipeline import LabPipeline
from src.shift_leak_lab.utils.config import DEFENSES, POLICIES, SCHEMES, ConfigManager, LabConfig, RunConfig
from src.shift_leak_lab.utils.exceptions import ConfigurationError, InvariantViolation, LabError
from src.shift_leak_lab.utils.logger import configure_versioned_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 2


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for invariant violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="shift-leak-lab",
                               description="Shift-and-leak attack and MSSD defense lab")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", default="config/lab_config.yaml", help="Path to lab config YAML")
    common.add_argument("--logging", "-l", default="config/logging.yaml", help="Path to logging config YAML")
    common.add_argument("--input", "-i", action="append", default=[], help="Bench file (repeatable)")
    common.add_argument("--out-dir", help="Output directory")
    common.add_argument("--key-bits", type=int, help="Number of key gates")
    common.add_argument("--scheme", choices=SCHEMES, help="Locking scheme")
    common.add_argument("--chains", type=int, nargs="+", help="Scan chain count(s)")
    common.add_argument("--policy", choices=POLICIES, help="Stitch policy")
    common.add_argument("--defense", choices=DEFENSES, help="Secure-scan variant of the chip")
    common.add_argument("--seed-lock", type=int)
    common.add_argument("--seed-stitch", type=int)
    common.add_argument("--seed-attack", type=int)
    common.add_argument("--key-file", help="Planted key for a locked bench input")
    common.add_argument("--layout-file", help="Use this layout instead of stitching")
    common.add_argument("--dip-factor", type=int, help="DIP iteration cap factor per cone")
    common.add_argument("--dip-ceiling", type=int, help="Hard DIP iteration ceiling per cone")
    common.add_argument("--budget", type=int, help="Pattern budget for coverage")
    common.add_argument("--trace", action="store_true", default=None, help="Write chip session traces")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)
    sub.add_parser("lock", parents=[common], help="Insert key gates; writes locked bench and key file")
    sub.add_parser("stitch", parents=[common], help="Stitch scan chains; writes layout files")
    sub.add_parser("attack", parents=[common], help="Run shift-and-leak against a simulated chip")
    sub.add_parser("report", parents=[common], help="Overhead, coverage and combined table")
    return parser


def resolve_run_config(args: argparse.Namespace, config: LabConfig) -> RunConfig:
    """Flags override file and environment values."""

    def pick(flag, default):
        return default if flag is None else flag

    run = RunConfig(
        input_paths=list(args.input),
        key_bits=pick(args.key_bits, config.locking.key_bits),
        scheme=pick(args.scheme, config.locking.scheme),
        chains=list(pick(args.chains, config.scan.chains)),
        defense=pick(args.defense, config.chip.defense),
        seed_lock=pick(args.seed_lock, config.locking.seed),
        seed_stitch=pick(args.seed_stitch, config.scan.seed),
        seed_attack=pick(args.seed_attack, config.attack.seed),
        output_dir=pick(args.out_dir, config.output_dir),
        dip_iteration_factor=pick(args.dip_factor, config.attack.dip_iteration_factor),
        dip_iteration_ceiling=pick(args.dip_ceiling, config.attack.dip_iteration_ceiling),
        policy=pick(args.policy, config.scan.policy),
        budget=pick(args.budget, config.report.budget),
        key_file=args.key_file,
        layout_file=args.layout_file,
        trace=pick(args.trace, config.chip.trace),
    )
    if run.key_bits < 1:
        raise ConfigurationError("--key-bits must be >= 1")
    if any(c < 1 for c in run.chains):
        raise ConfigurationError("--chains values must be >= 1")
    if run.budget < 1:
        raise ConfigurationError("--budget must be >= 1")
    config.attack.seed = run.seed_attack
    config.attack.dip_iteration_factor = run.dip_iteration_factor
    config.attack.dip_iteration_ceiling = run.dip_iteration_ceiling
    return run


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_versioned_logging(args.logging)
    log = logging.getLogger("shift_leak_lab.cli")

    try:
        config = ConfigManager(args.config).load_config()
        run = resolve_run_config(args, config)
        if args.command != "report" and not run.input_paths:
            raise ConfigurationError(f"{args.command} needs at least one --input bench file")

        pipeline = LabPipeline(config, run)
        if args.command == "lock":
            pipeline.lock()
        elif args.command == "stitch":
            pipeline.stitch()
        elif args.command == "attack":
            for report in pipeline.attack():
                summary = report.summary()
                print(f"{summary['design']} {summary['defense']} chains={summary['scan_chains']}: "
                      f"{summary['recovered']}/{summary['key_bits']} recovered, "
                      f"{summary['brute_force_residual']} left for brute force")
        else:
            pipeline.report()
    except InvariantViolation as e:
        log.critical("Invariant violation: %s", e.message)
        return EXIT_INVARIANT
    except (LabError, OSError) as e:
        log.critical("%s failed: %s", args.command, getattr(e, "message", e))
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
