"""Total-variation reconstruction for video snapshot compressive imaging."""
from .errors import *  # noqa: F401,F403
from .metrics import psnr
from .sensing import SensingOperator
from .solvers import (FRAMEWORKS, IterationTrace, SolveConfig, reconstruct, solve_admm,
                      solve_fista, solve_gap, solve_twist)
from .tensor import devectorize, vectorize
from .tv import (VARIANTS, DenoiseConfig, DualField, TvVariant, denoise, denoise_chambolle,
                 denoise_clip, denoise_fgp, grad_h, grad_h_adjoint, grad_v, grad_v_adjoint,
                 tv_norm)

__version__ = "0.1.0"
