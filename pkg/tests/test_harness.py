"""
Tests for the trial pool, config resolution and the experiment runner.
"""

import json
from pathlib import Path

import pytest

import runner
from estimators import bd_run
from experiments import solver_config
from models import BdConfig, BdState, PrConfig, RngSeed
from utils.config import Config, parse_config_text, resolve_experiment_config
from utils.ensembles import gen_blind_deconv
from utils.errors import InvalidArgumentError, NumericFailureError
from utils.helpers import format_cell, write_csv
from utils.trials import TrialOutcome, TrialPool, run_trial


def _square(value):
    return value * value


def _seeded_trial(trial, seed):
    return TrialOutcome(success=True, iterations=trial, metrics={'stream': seed.stream_index}, rows=[[trial]])


def _failing_trial(trial, seed):
    if trial == 1:
        raise NumericFailureError("diverged", iteration=3)
    return TrialOutcome(success=True)


def _diverging_bd_trial(trial, seed):
    inst = gen_blind_deconv(10, 100, seed)
    start = BdState(h=1.5 * inst.truth_h, x=inst.truth_x.copy())
    trajectory = bd_run(inst, BdConfig(eta=50.0 if trial == 0 else 0.5, max_iters=30), initial=start)
    return TrialOutcome(success=trajectory.converged, iterations=trajectory.iterations)


def _write_config(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


class TestTrialPool:
    """Test ordered, isolated trial execution."""

    @pytest.mark.asyncio
    async def test_map_preserves_order_inline(self):
        assert await TrialPool(1).map(_square, [3, 1, 2]) == [9, 1, 4]

    @pytest.mark.asyncio
    async def test_map_preserves_order_on_processes(self):
        assert await TrialPool(2).map(_square, list(range(8))) == [v * v for v in range(8)]

    @pytest.mark.asyncio
    async def test_trials_follow_seed_order(self):
        seeds = [RngSeed(master_seed=1, stream_index=i) for i in (5, 6, 7)]
        results = await TrialPool(2).run_trials(_seeded_trial, seeds)
        assert [r.trial for r in results] == [0, 1, 2]
        assert [r.seed for r in results] == [5, 6, 7]
        assert [r.rows for r in results] == [[[0]], [[1]], [[2]]]

    @pytest.mark.asyncio
    async def test_failed_trial_is_isolated(self):
        seeds = [RngSeed(master_seed=1, stream_index=i) for i in range(3)]
        results = await TrialPool(1).run_trials(_failing_trial, seeds)
        assert [r.success for r in results] == [True, False, True]
        assert results[1].error.startswith('NumericFailureError')
        assert results[0].error is None and results[2].error is None

    @pytest.mark.asyncio
    async def test_diverging_solver_is_isolated(self):
        seeds = [RngSeed(master_seed=2, stream_index=i) for i in range(2)]
        results = await TrialPool(1).run_trials(_diverging_bd_trial, seeds)
        assert not results[0].success
        assert results[0].error.startswith('NumericFailureError')
        assert results[1].error is None and results[1].iterations > 0

    def test_unexpected_errors_propagate(self):
        def broken(trial, seed):
            raise KeyError('bug')

        with pytest.raises(KeyError):
            run_trial(broken, 0, RngSeed(master_seed=0))


class TestConfig:
    """Test config file parsing and precedence."""

    def test_parse_sections_and_lists(self):
        values = parse_config_text("[sizes]\nn = 20, 100\nK = 50\n\n[solver]\neta = 0.1\n")
        assert values == {'n': ['20', '100'], 'K': ['50'], 'eta': '0.1'}

    def test_duplicate_key_across_sections(self):
        with pytest.raises(InvalidArgumentError):
            parse_config_text("[a]\neta = 0.1\n[b]\neta = 0.2\n")

    def test_malformed_text(self):
        with pytest.raises(InvalidArgumentError):
            parse_config_text("eta = 0.1\n")

    def test_precedence(self, output_dir):
        settings = Config()
        defaults = {'trials': 5, 'eta': 0.3}
        file_values = {'trials': '3'}
        cfg = resolve_experiment_config('incoherence', settings, defaults, file_values, {'trials': 7, 'eta': None})
        assert cfg.trials == 7
        assert cfg.eta == 0.3
        assert cfg.output_path == str(output_dir / 'incoherence.csv')
        cfg = resolve_experiment_config('incoherence', settings, defaults, file_values, {})
        assert cfg.trials == 3

    @pytest.mark.parametrize('name', ['theorem1', 'Theorem1', 'log_scaled'])
    def test_step_rule_alias(self, output_dir, name):
        cfg = resolve_experiment_config('convergence', Config(), {}, {'step_rule': name}, {})
        assert cfg.step_rule == 'log_scaled'
        assert solver_config(PrConfig, cfg).step_rule == 'log_scaled'
        assert PrConfig(step_rule=name).step_rule == 'log_scaled'

    def test_unknown_step_rule_rejected(self, output_dir):
        with pytest.raises(InvalidArgumentError):
            resolve_experiment_config('convergence', Config(), {}, {'step_rule': 'armijo'}, {})

    def test_invalid_values_rejected(self, output_dir):
        with pytest.raises(InvalidArgumentError):
            resolve_experiment_config('phase_transition', Config(), {}, {'p': ['1.5']}, {})

    def test_unknown_key_rejected(self, output_dir):
        with pytest.raises(InvalidArgumentError):
            resolve_experiment_config('incoherence', Config(), {}, {'etta': '0.1'}, {})


class TestCsvOutput:
    """Test cell formatting and CSV writing."""

    def test_format_cell(self):
        assert format_cell(3) == '3'
        assert format_cell(True) == '1'
        assert format_cell(0.1) == '0.10000000000000001'
        assert format_cell('pr') == 'pr'

    def test_width_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / 'out.csv', ['a', 'b'], [[1]])


class TestRunner:
    """Test the command-line runner end to end."""

    @pytest.mark.asyncio
    async def test_all_experiments_register(self, output_dir):
        instance = runner.ExperimentRunner(Config())
        await instance.setup_hook()
        assert sorted(instance.experiments) == sorted(
            ['convergence', 'phase_transition', 'incoherence', 'noise_scaling', 'landscape', 'loo']
        )

    @pytest.mark.asyncio
    async def test_successful_run_writes_csv_and_manifest(self, output_dir):
        config = _write_config(output_dir / 'small.ini', "[sizes]\nn = 30\n\n[solver]\nmax_iters = 300\n")
        out = output_dir / 'incoherence.csv'
        code = await runner.main(['incoherence', '--config', str(config), '--out', str(out), '--seed', '3'])
        assert code == runner.EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == 'iter,n,seed,incoherence_diff,incoherence_raw'
        assert len(lines) > 2
        manifest = json.loads((output_dir / 'incoherence.csv.manifest.json').read_text())
        assert manifest['config']['master_seed'] == 3
        assert manifest['config']['n'] == [30]
        assert len(manifest['content_hash']) == 64

    @pytest.mark.asyncio
    async def test_failed_acceptance_exit_code(self, output_dir):
        config = _write_config(output_dir / 'short.ini', "[run]\nn = 20\nmax_iters = 2\ntrials = 2\n")
        code = await runner.main(
            ['convergence', '--problem', 'pr', '--config', str(config), '--out', str(output_dir / 'c.csv')]
        )
        assert code == runner.EXIT_ACCEPTANCE
        # The CSV is still written for inspection
        assert (output_dir / 'c.csv').exists()

    @pytest.mark.asyncio
    async def test_missing_config_exit_code(self, output_dir):
        code = await runner.main(['incoherence', '--config', str(output_dir / 'missing.ini')])
        assert code == runner.EXIT_INVALID

    @pytest.mark.asyncio
    async def test_bad_arguments_exit_code(self, output_dir):
        assert await runner.main(['no_such_experiment']) == runner.EXIT_INVALID

    @pytest.mark.asyncio
    async def test_output_identical_across_worker_counts(self, output_dir):
        config = _write_config(output_dir / 'grid.ini', "[run]\nn = 20, 30\ntrials = 2\nmax_iters = 200\n")
        outputs = []
        for workers in ('1', '2'):
            out = output_dir / f'workers{workers}.csv'
            await runner.main(['incoherence', '--config', str(config), '--out', str(out), '--workers', workers])
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
