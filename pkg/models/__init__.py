"""
Domain models for the nonconvex estimation package.
"""

from .base import Base
from .blind_deconv import BdState, BlindDeconvInstance
from .diagnostics import LandscapeReport, LooReport, LooTrajectory
from .linalg import AlignmentSolution, EigResult, ProcrustesResult, SvdTriple
from .matrix_completion import MatrixCompletionInstance
from .phase_retrieval import PhaseRetrievalInstance
from .seed import RngSeed
from .solver_config import BdConfig, McConfig, PrConfig
from .trajectory import BdRecord, BdTrajectory, McRecord, McTrajectory, PrRecord, PrTrajectory
from .trial import AcceptanceCheck, ExperimentOutput, TrialResult

__all__ = [
    'Base', 'RngSeed',
    'PhaseRetrievalInstance', 'MatrixCompletionInstance', 'BlindDeconvInstance', 'BdState',
    'EigResult', 'SvdTriple', 'ProcrustesResult', 'AlignmentSolution',
    'PrConfig', 'McConfig', 'BdConfig',
    'PrRecord', 'PrTrajectory', 'McRecord', 'McTrajectory', 'BdRecord', 'BdTrajectory',
    'LooTrajectory', 'LooReport', 'LandscapeReport',
    'TrialResult', 'AcceptanceCheck', 'ExperimentOutput',
]
