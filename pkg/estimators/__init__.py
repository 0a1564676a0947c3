"""
Gradient-descent estimators, leave-one-out diagnostics and landscape checks.
"""

from .blind_deconvolution import (
    bd_dist,
    bd_gradients,
    bd_hessian_apply,
    bd_hessian_quadform,
    bd_incoherence,
    bd_incoherence_param,
    bd_loss,
    bd_probe,
    bd_rel_fro,
    bd_run,
    bd_spectral_init,
    bd_spectral_matrix,
)
from .landscape import alignment_convexity_check, bd_landscape_check, mc_landscape_check, pr_landscape_check
from .leave_one_out import (
    bd_loo_run,
    bd_reference_run,
    loo_proximity_report,
    mc_loo_gradient,
    mc_loo_loss,
    mc_loo_run,
    mc_reference_run,
    pr_loo_run,
    pr_reference_run,
)
from .matrix_completion import (
    mc_clean_hessian_quadform,
    mc_error_report,
    mc_gradient,
    mc_incoherence_param,
    mc_loo_bound,
    mc_loss,
    mc_run,
    mc_snr,
    mc_spectral_init,
    mc_spectrum_diagnostics,
    project_l,
    project_omega,
    project_omega_l,
    project_omega_minus_l,
)
from .phase_retrieval import (
    pr_dist,
    pr_gradient,
    pr_hessian_apply,
    pr_hessian_quadform,
    pr_incoherence,
    pr_loss,
    pr_run,
    pr_spectral_init,
    pr_spectral_matrix,
)

__all__ = [
    'pr_loss', 'pr_gradient', 'pr_hessian_apply', 'pr_hessian_quadform', 'pr_spectral_matrix',
    'pr_spectral_init', 'pr_dist', 'pr_incoherence', 'pr_run',
    'project_omega', 'project_omega_l', 'project_omega_minus_l', 'project_l',
    'mc_loss', 'mc_gradient', 'mc_clean_hessian_quadform', 'mc_spectral_init', 'mc_error_report',
    'mc_incoherence_param', 'mc_spectrum_diagnostics', 'mc_snr', 'mc_loo_bound', 'mc_run',
    'bd_loss', 'bd_gradients', 'bd_probe', 'bd_hessian_apply', 'bd_hessian_quadform', 'bd_spectral_matrix',
    'bd_spectral_init', 'bd_dist', 'bd_rel_fro', 'bd_incoherence_param', 'bd_incoherence', 'bd_run',
    'pr_reference_run', 'pr_loo_run', 'mc_reference_run', 'mc_loo_loss', 'mc_loo_gradient', 'mc_loo_run',
    'bd_reference_run', 'bd_loo_run', 'loo_proximity_report',
    'pr_landscape_check', 'mc_landscape_check', 'bd_landscape_check', 'alignment_convexity_check',
]
