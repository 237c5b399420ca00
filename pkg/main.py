import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from koopman_eigenflows.analysis.oracles import run_oracle_suite
from koopman_eigenflows.analysis.pipeline import ExperimentPipeline, open_ledger
from koopman_eigenflows.exceptions import KoopmanFlowError
from koopman_eigenflows.reporting.report_writer import ReportWriter, format_summary
from koopman_eigenflows.settings import METHODS, ExperimentConfig, apply_overrides, load_experiment_config
import config

# Configure logging
logging.basicConfig(
    level=getattr(logging, str(config.KOOPFLOW_LOG_LEVEL).upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

COMMANDS = ('generate', 'train', 'build', 'evaluate', 'compare', 'oracle-check')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='koopflow',
        description="Learn Koopman eigenfunctions with a coupling-flow diffeomorphism and benchmark "
                    "the lifted linear predictor against generator-EDMD baselines."
    )
    parser.add_argument('command', choices=COMMANDS, help="pipeline step to run")
    parser.add_argument('--config', default='ex1',
                        help=f"preset name ({', '.join(sorted(config.PRESETS))}) or path to a JSON config")
    parser.add_argument('--seed', type=int, default=None, help="override the experiment seed")
    parser.add_argument('--out', default=None, help="run directory (default: $KOOPFLOW_OUTPUT_DIR/<preset>_seed<seed>)")
    parser.add_argument('--method', nargs='*', default=None, choices=METHODS,
                        help="methods to run; pass the flag with no names for an empty comparison")
    parser.add_argument('--scale', type=float, default=None,
                        help="multiply trajectory length and epochs for desk-scale runs")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the preset or JSON config and apply the command-line overrides."""
    experiment = load_experiment_config(args.config, presets=config.PRESETS)
    seed = args.seed if args.seed is not None else experiment.seed
    out = args.out or str(Path(config.KOOPFLOW_OUTPUT_DIR) / f"{experiment.name}_seed{seed}")
    return apply_overrides(experiment, seed=args.seed, output_dir=out, methods=args.method, scale=args.scale)


def cmd_generate(pipeline: ExperimentPipeline) -> bool:
    dataset = pipeline.generate()
    logger.info(f"Dataset with {dataset.n_pairs} pairs written to {pipeline.paths.dataset}")
    return True


def cmd_train(pipeline: ExperimentPipeline) -> bool:
    result = pipeline.train()
    if result.stopped_early:
        logger.info(f"Training stopped on a loss plateau after {len(result.history)} epochs")
    logger.info(f"Flow written to {pipeline.paths.flow}, loss log to {pipeline.paths.loss_log}")
    return True


def cmd_build(pipeline: ExperimentPipeline) -> bool:
    models = pipeline.build()
    for method, model in models.items():
        logger.info(f"{method}: D={model.D}, training reconstruction RMSE={model.train_rmse:.3e}")
    return True


def cmd_evaluate(pipeline: ExperimentPipeline) -> bool:
    report = pipeline.evaluate()
    print(format_summary(report))
    return report.all_ok


def cmd_compare(pipeline: ExperimentPipeline) -> bool:
    return pipeline.compare().all_ok


def cmd_oracle_check(experiment: ExperimentConfig) -> bool:
    checks = run_oracle_suite(seed=experiment.seed)
    path = ReportWriter(experiment.output_path).write_oracle_report(checks, experiment.seed)
    print("\n" + "=" * 50)
    print("ORACLE CHECKS")
    print("=" * 50)
    for check in checks:
        print(f"  {'PASS' if check.passed else 'FAIL'}  {check.name:<35} {check.value:.3e} (tol {check.tolerance:.0e})")
    logger.info(f"Oracle report written to {path}")
    return all(check.passed for check in checks)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; the exit code is 0 only if it fully succeeded."""
    args = build_parser().parse_args(argv)
    try:
        experiment = resolve_config(args)
        if args.command == 'oracle-check':
            ok = cmd_oracle_check(experiment)
        else:
            ledger = open_ledger(config.DATABASE_URL) if args.command == 'compare' else None
            pipeline = ExperimentPipeline(experiment, threads=config.KOOPFLOW_THREADS, ledger=ledger)
            handlers = {
                'generate': cmd_generate,
                'train': cmd_train,
                'build': cmd_build,
                'evaluate': cmd_evaluate,
                'compare': cmd_compare,
            }
            ok = handlers[args.command](pipeline)
    except KoopmanFlowError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return 1
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {str(e)}")
        return 1
    if not ok:
        logger.error(f"{args.command} finished with failures")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
