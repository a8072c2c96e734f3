"""
Main Application Entry Point
Command line for running experiments, reproducing result tables, checking
detailed balance and dumping chains.
"""

import argparse
import logging
import sys
from typing import List, Optional

from balance_oracle import VARIANTS, run_battery
from data_manager import DataManager
from diagnostics import print_aggregate_report
from harness import TableRow, check_experiment, run_experiment, sample_chain
from sampling_model import BudgetExceededError, ConfigError, SamplingError
from table_scenarios import TABLES, get_table_scenario, print_scenario_info, reproduce_table
from validator import ExperimentValidator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_ORACLE_VIOLATION = 3


def _print_rows(title: str, rows: List[TableRow]):
    for row in rows:
        print_aggregate_report(title, row.key, row.stats)


def run_config_command(args) -> int:
    """Run one experiment from a configuration file"""
    # Step 1: Load configuration
    print(f"\n[1/4] Loading configuration: {args.config}")
    cfg = DataManager.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.runs is not None:
        cfg.replications = args.runs
    if args.out is not None:
        cfg.output_path = args.out

    # Step 2: Validate
    print("\n[2/4] Validating configuration...")
    validator = ExperimentValidator(cfg)
    validator.validate()
    if not validator.print_validation_report():
        print("[ERROR] Configuration has validation errors. Cannot proceed.")
        return EXIT_CONFIG_ERROR

    # Step 3: Run replications
    print(f"\n[3/4] Running {cfg.replications} replications of {cfg.iterations} steps...")
    row = run_experiment(cfg, workers=args.workers)
    _print_rows(f"RESULTS: {cfg.name}", [row])

    # Step 4: Export
    if cfg.output_path:
        print("\n[4/4] Exporting results...")
        DataManager.emit_csv([row], cfg.output_path)
        print(f"[OK] Results exported to {cfg.output_path}")
    return EXIT_OK


def run_table_command(args) -> int:
    """Reproduce one result table"""
    configs = get_table_scenario(args.id, args.runs, args.seed)
    print_scenario_info(args.id, configs)
    for cfg in configs:
        check_experiment(cfg)
    rows = reproduce_table(args.id, args.runs, args.seed, args.workers)
    _print_rows(f"TABLE {args.id}", rows)
    out = args.out or f"{args.id}.csv"
    DataManager.emit_csv(rows, out)
    print(f"[OK] Table written to {out}")
    return EXIT_OK


def run_oracle_command(args) -> int:
    """Run the detailed balance battery"""
    variants = VARIANTS if args.variant == "all" else [args.variant]
    failed = False
    for variant in variants:
        report = run_battery(variant, models=args.battery, states=args.states, tries=args.tries,
                             seed=args.seed, heterogeneous=not args.identical)
        report.print_report()
        failed = failed or not report.passed
    return EXIT_ORACLE_VIOLATION if failed else EXIT_OK


def run_dump_command(args) -> int:
    """Write one chain of a configuration"""
    cfg = DataManager.load_config(args.config)
    check_experiment(cfg)
    trace = sample_chain(cfg, args.steps, seed=args.seed)
    DataManager.dump_samples(trace, args.out)
    print(f"[OK] {args.steps} samples written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Multiple Try Metropolis - experiments and reproducible tables",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py run --config scenarios/bimodal_rw.cfg        # Run one experiment
  python main.py run --config scenarios/bimodal_rw.cfg --runs 20 --out rw.csv
  python main.py table --id t2 --runs 200 --seed 0            # Reproduce a table
  python main.py table --id t6 --workers 8                    # Spread replications
  python main.py oracle --states 4 --tries 2 --variant all    # Detailed balance battery
  python main.py dump --config scenarios/smiling_face.cfg --steps 500 --out chain.txt
  python main.py templates                                    # Write a config template
        """
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Increase log verbosity (-v INFO, -vv DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment configuration")
    run.add_argument("--config", required=True, help="Path to a .cfg file")
    run.add_argument("--out", help="CSV output path (overrides output.path)")
    run.add_argument("--seed", type=int, help="Base seed (overrides run.seed)")
    run.add_argument("--runs", type=int, help="Replications (overrides run.replications)")
    run.add_argument("--workers", type=int, help="Worker processes (overrides run.workers and MTM_WORKERS)")

    table = sub.add_parser("table", help="Reproduce a result table")
    table.add_argument("--id", required=True, choices=list(TABLES), help="Table identifier")
    table.add_argument("--runs", type=int, default=200, help="Replications per row")
    table.add_argument("--seed", type=int, default=0, help="Base seed")
    table.add_argument("--out", help="CSV output path (default <id>.csv)")
    table.add_argument("--workers", type=int, help="Worker processes")

    oracle = sub.add_parser("oracle", help="Check detailed balance on finite models")
    oracle.add_argument("--states", type=int, default=4, help="States M (at most 8)")
    oracle.add_argument("--tries", type=int, default=2, help="Tries N (at most 3)")
    oracle.add_argument("--variant", default="all", choices=VARIANTS + ["all"], help="Acceptance variant")
    oracle.add_argument("--battery", type=int, default=50, help="Random models per variant")
    oracle.add_argument("--seed", type=int, default=0, help="Seed of the random models")
    oracle.add_argument("--identical", action="store_true", help="Use one proposal table for all tries")

    dump = sub.add_parser("dump", help="Write the samples of one chain")
    dump.add_argument("--config", required=True, help="Path to a .cfg file")
    dump.add_argument("--steps", type=int, required=True, help="Chain length")
    dump.add_argument("--out", required=True, help="Output text file")
    dump.add_argument("--seed", type=int, help="Seed (overrides run.seed)")

    templates = sub.add_parser("templates", help="Create a configuration template")
    templates.add_argument("--dir", default="data_templates", help="Output directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point with command line argument parsing.

    Returns:
        Exit code: 0 success, 1 sampling failure, 2 configuration error, 3 oracle violation
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")

    commands = {
        "run": run_config_command,
        "table": run_table_command,
        "oracle": run_oracle_command,
        "dump": run_dump_command,
    }
    if args.command == "templates":
        DataManager.create_template_files(args.dir)
        return EXIT_OK
    try:
        return commands[args.command](args)
    except (ConfigError, BudgetExceededError) as e:
        print(f"[ERROR] {e}")
        return EXIT_CONFIG_ERROR
    except SamplingError as e:
        logger.debug("Sampling failed", exc_info=True)
        print(f"[ERROR] Sampling failed: {e}")
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
