import math

import numpy as np

from .errors import DimensionError

PSNR_CAP = 100.0


def psnr(reference, estimate, peak=1.0):
    """Peak signal-to-noise ratio in dB, capped at ``PSNR_CAP`` for zero error."""
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise DimensionError(f"shape mismatch: {reference.shape} vs {estimate.shape}")
    mse = float(np.mean((reference - estimate) ** 2))
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / mse))
