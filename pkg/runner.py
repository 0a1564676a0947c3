"""
Main entry point for the experiment runner.

Reproduces the solver experiments (convergence curves, phase transition,
incoherence, noise scaling, landscape suites and leave-one-out diagnostics)
as seeded Monte Carlo sweeps and writes one CSV plus a run manifest per
invocation. Experiments are loaded as extensions from the ``experiments``
package.
"""

import argparse
import asyncio
import importlib
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from dotenv import load_dotenv

from models import ExperimentOutput
from utils.config import Config, ExperimentConfig, load_experiment_config, resolve_experiment_config
from utils.errors import AcceptanceError, InvalidArgumentError
from utils.helpers import write_csv, write_manifest
from utils.trials import TrialPool

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ACCEPTANCE = 2
EXIT_FAILURE = 3


def configure_logging(config: Config) -> None:
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(output_dir / 'runner.log'),
            logging.StreamHandler()
        ]
    )


class ExperimentRunner:
    """Loads experiment extensions and runs them against resolved configs."""

    def __init__(self, config: Config):
        self.config = config
        self.experiments: Dict[str, Any] = {}
        # Discover available experiment modules from the experiments directory
        experiments_dir = Path(__file__).resolve().parent / 'experiments'
        self.available_experiments: List[str] = []
        if experiments_dir.exists() and experiments_dir.is_dir():
            for p in sorted(experiments_dir.iterdir()):
                if p.suffix == '.py' and p.stem != '__init__':
                    self.available_experiments.append(p.stem)
        logger.debug(f"Available experiments discovered: {self.available_experiments}")

    async def load_extension(self, name: str) -> None:
        module = importlib.import_module(name)
        await module.setup(self)

    async def add_experiment(self, experiment) -> None:
        if experiment.name in self.experiments:
            raise InvalidArgumentError(f"Experiment '{experiment.name}' is already registered")
        self.experiments[experiment.name] = experiment

    async def setup_hook(self) -> None:
        """Load every discovered experiment module."""
        for stem in self.available_experiments:
            ext = f'experiments.{stem}'
            try:
                await self.load_extension(ext)
                logger.debug(f'Loaded {ext}')
            except Exception as e:
                logger.error(f'Failed to load {ext}: {e}')

    def resolve(
        self,
        name: str,
        file_values: Mapping[str, Any],
        overrides: Mapping[str, Any],
    ) -> ExperimentConfig:
        """Resolve twice: once to learn the problem and scale, then with the matching defaults."""
        experiment = self._get(name)
        probe = resolve_experiment_config(name, self.config, {}, file_values, overrides)
        defaults = experiment.defaults(probe.problem, probe.full_scale)
        return resolve_experiment_config(name, self.config, defaults, file_values, overrides)

    def _get(self, name: str):
        if name not in self.experiments:
            raise InvalidArgumentError(f"Unknown experiment '{name}'; loaded: {sorted(self.experiments)}")
        return self.experiments[name]

    async def execute(self, cfg: ExperimentConfig) -> ExperimentOutput:
        """Run one experiment, write its CSV and manifest, and enforce its acceptance checks."""
        experiment = self._get(cfg.experiment)
        logger.info(
            f"Running {cfg.experiment} ({cfg.problem}) with master seed {cfg.master_seed} "
            f"on {cfg.workers} worker(s)"
        )
        start = time.perf_counter()
        output = await experiment.run(cfg, TrialPool(cfg.workers))
        write_csv(Path(cfg.output_path), output.header, output.rows)
        write_manifest(Path(cfg.output_path), cfg.model_dump(mode='json'))

        for check in output.checks:
            log = logger.info if check.passed else logger.error
            log(f"[{'PASS' if check.passed else 'FAIL'}] {check.name} {check.detail}".rstrip())
        logger.info(f"{cfg.experiment} finished in {time.perf_counter() - start:.1f}s")

        if not output.passed:
            failed = [check.name for check in output.checks if not check.passed]
            raise AcceptanceError(f"{cfg.experiment}: {len(failed)} acceptance check(s) failed: {failed}")
        return output


def build_parser(experiments: List[str]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Run seeded nonconvex estimation experiments.')
    subparsers = parser.add_subparsers(dest='experiment', required=True)
    for name in experiments:
        sub = subparsers.add_parser(name)
        sub.add_argument('--config', type=Path, default=None, help='Experiment config file (key = value).')
        sub.add_argument('--seed', dest='master_seed', type=int, default=None, help='Master seed (u64).')
        sub.add_argument('--workers', type=int, default=None, help='Worker processes for the trials.')
        sub.add_argument('--out', dest='output_path', type=str, default=None, help='Output CSV path.')
        sub.add_argument('--full-scale', dest='full_scale', action='store_true', default=None,
                         help='Use the full-scale grids and trial counts.')
        sub.add_argument('--problem', choices=['pr', 'mc', 'bd'], default=None,
                         help='Problem for convergence and leave-one-out runs.')
        sub.add_argument('--trials', type=int, default=None, help='Trials per grid point.')
        sub.add_argument('--step-rule', dest='step_rule', choices=['constant', 'log_scaled', 'theorem1'], default=None,
                         help='Phase retrieval step rule (theorem1 is an alias for log_scaled).')
    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """Main function to run one experiment; returns the process exit code."""
    config = Config()
    configure_logging(config)

    runner = ExperimentRunner(config)
    await runner.setup_hook()
    try:
        args = build_parser(sorted(runner.experiments)).parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad arguments; that code is reserved for failed acceptance checks
        return EXIT_OK if e.code == 0 else EXIT_INVALID

    overrides = {
        'master_seed': args.master_seed,
        'workers': args.workers,
        'output_path': args.output_path,
        'full_scale': args.full_scale,
        'problem': args.problem,
        'trials': args.trials,
        'step_rule': args.step_rule,
    }
    try:
        cfg = runner.resolve(args.experiment, load_experiment_config(args.config), overrides)
        await runner.execute(cfg)
    except AcceptanceError as e:
        logger.error(str(e))
        return EXIT_ACCEPTANCE
    except InvalidArgumentError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"Runner encountered an error: {e}")
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(asyncio.run(main()))
