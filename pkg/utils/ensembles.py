"""
Seeded generation of random problem instances and the partial DFT design.

Draw order per generator is part of the replay contract:

- phase retrieval: x* (n normals), then designs (m x n normals, row-major)
- matrix completion: Gaussian factor (n x r), mask uniforms (n x n), noise normals (n x n)
- blind deconvolution: h* (real then imaginary parts), x* (same), then designs
  (m x K real parts, then m x K imaginary parts)
"""

import logging
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from models import BlindDeconvInstance, MatrixCompletionInstance, PhaseRetrievalInstance, RngSeed
from utils.errors import InvalidArgumentError
from utils.helpers import RNG

logger = logging.getLogger(__name__)


def partial_dft(m: int, K: int) -> np.ndarray:
    """First ``K`` columns of the unitary ``m``-point DFT.

    ``B[j, k] = exp(-2πi jk / m) / sqrt(m)``, so row ``j`` of ``B`` is ``b_j^H``
    and ``B^H B = I_K``.
    """
    if m < 1 or K < 1:
        raise InvalidArgumentError(f"partial_dft needs positive dimensions, got m={m}, K={K}")
    if K > m:
        raise InvalidArgumentError(f"partial_dft needs K <= m, got m={m}, K={K}")
    # Reduce the exponent mod m before scaling so large products keep full accuracy
    exponent = np.outer(np.arange(m), np.arange(K)) % m
    return np.exp(-2j * np.pi * exponent / m) / np.sqrt(m)


def gen_phase_retrieval(n: int, m: int, seed: RngSeed) -> PhaseRetrievalInstance:
    """Gaussian designs ``a_j ~ N(0, I_n)``, ``y_j = (a_j^T x*)^2`` with ``x*`` uniform on the sphere."""
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"Phase retrieval needs n, m >= 1, got n={n}, m={m}")
    rng = RNG.generator(seed)
    truth = RNG.unit_sphere(rng, n)
    designs = rng.standard_normal((m, n))
    measurements = (designs @ truth) ** 2
    return PhaseRetrievalInstance(designs=designs, measurements=measurements, truth=truth)


def gen_matrix_completion(
    n: int,
    r: int,
    p: float,
    sigma: float,
    seed: RngSeed,
    spectrum: Optional[Sequence[float]] = None,
) -> MatrixCompletionInstance:
    """Rank-``r`` PSD ``M* = U* diag(spectrum) U*^T`` observed on a symmetric Bernoulli(p) mask.

    Noise ``E`` is always drawn and scaled by ``sigma``, so instances that
    differ only in ``sigma`` share the mask and the noise direction.
    """
    if n < 1 or not 1 <= r <= n:
        raise InvalidArgumentError(f"Matrix completion needs 1 <= r <= n, got n={n}, r={r}")
    if not 0.0 < p <= 1.0:
        raise InvalidArgumentError(f"Sampling rate must lie in (0, 1], got {p}")
    if sigma < 0.0:
        raise InvalidArgumentError(f"Noise level must be nonnegative, got {sigma}")
    spectrum = tuple(float(v) for v in (spectrum if spectrum is not None else [1.0] * r))
    if len(spectrum) != r or any(v <= 0.0 for v in spectrum):
        raise InvalidArgumentError(f"Spectrum must hold {r} positive values, got {spectrum}")

    rng = RNG.generator(seed)
    basis, _ = scipy.linalg.qr(rng.standard_normal((n, r)), mode='economic')
    factor = basis * np.sqrt(np.asarray(spectrum))
    truth = factor @ factor.T
    truth = 0.5 * (truth + truth.T)

    # Upper triangle including the diagonal, mirrored
    upper = np.triu(rng.random((n, n)) < p)
    mask = upper | upper.T
    noise_upper = np.triu(rng.standard_normal((n, n)))
    noise = sigma * (noise_upper + np.triu(noise_upper, 1).T)

    observed = np.where(mask, truth + noise, 0.0)
    logger.debug(f"Generated MC instance n={n} r={r} p={p} sigma={sigma} |Ω|={int(mask.sum())}")
    return MatrixCompletionInstance.from_arrays(
        mask=mask,
        observed=observed,
        r=r,
        p=p,
        sigma=sigma,
        noise=noise,
        truth_factor=factor,
        truth_matrix=truth,
        spectrum=spectrum,
    )


def gen_blind_deconv(K: int, m: int, seed: RngSeed) -> BlindDeconvInstance:
    """Complex Gaussian ``a_j``, partial-DFT ``b_j``, ``y_j = b_j^H h* x*^H a_j``."""
    if K < 1 or m < 1 or K > m:
        raise InvalidArgumentError(f"Blind deconvolution needs 1 <= K <= m, got K={K}, m={m}")
    rng = RNG.generator(seed)
    truth_h = RNG.unit_sphere(rng, K, complex_valued=True)
    truth_x = RNG.unit_sphere(rng, K, complex_valued=True)
    real = rng.standard_normal((m, K))
    imag = rng.standard_normal((m, K))
    a_designs = (real + 1j * imag) / np.sqrt(2.0)
    B = partial_dft(m, K)
    measurements = (B @ truth_h) * (a_designs @ truth_x.conj())
    return BlindDeconvInstance(
        a_designs=a_designs,
        b_designs=B.conj(),
        measurements=measurements,
        truth_h=truth_h,
        truth_x=truth_x,
    )
