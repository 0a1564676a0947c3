import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from models import RngSeed  # noqa: E402
from utils.ensembles import gen_blind_deconv, gen_matrix_completion, gen_phase_retrieval  # noqa: E402


@pytest.fixture()
def seed():
    """Seed for the first stream under master seed 7."""
    return RngSeed(master_seed=7, stream_index=0)


@pytest.fixture()
def pr_instance(seed):
    """Small phase retrieval instance with m = 10n."""
    return gen_phase_retrieval(20, 200, seed)


@pytest.fixture()
def mc_instance(seed):
    """Small noiseless matrix completion instance."""
    return gen_matrix_completion(60, 2, 0.5, 0.0, seed)


@pytest.fixture()
def noisy_mc_instance(seed):
    return gen_matrix_completion(60, 2, 0.5, 1e-3, seed)


@pytest.fixture()
def bd_instance(seed):
    """Small blind deconvolution instance with m = 10K."""
    return gen_blind_deconv(10, 100, seed)


@pytest.fixture()
def output_dir(tmp_path, monkeypatch):
    """Route runner settings to a temporary directory."""
    monkeypatch.setenv('OUTPUT_DIR', str(tmp_path))
    monkeypatch.setenv('WORKERS', '1')
    monkeypatch.setenv('MASTER_SEED', '0')
    monkeypatch.setenv('FULL_SCALE', 'false')
    return tmp_path
