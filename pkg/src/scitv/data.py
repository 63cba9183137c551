"""Seeded generators for masks, synthetic scenes and simulated measurements."""
import numpy as np

from .errors import DimensionError, GenerationError, ParameterError
from .sensing import SensingOperator
from .tensor import as_cube

SCENE_KINDS = ("moving-square", "moving-gaussian")
MAX_MASK_RETRIES = 100


def generate_masks(n_x, n_y, B, seed=0, density=0.5):
    """I.i.d. Bernoulli(density) binary masks of shape ``(B, n_x, n_y)``.

    Pixels that come out masked in every frame are redrawn, in raster order
    from the same generator, until none remain.
    """
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if min(n_x, n_y, B) < 1:
        raise DimensionError(f"invalid mask dims {n_x}x{n_y}x{B}")
    rng = np.random.default_rng(seed)
    masks = (rng.random((B, n_x, n_y)) < density).astype(np.float64)
    for _ in range(MAX_MASK_RETRIES):
        dead = ~masks.any(axis=0)
        if not dead.any():
            return masks
        masks[:, dead] = (rng.random((B, int(dead.sum()))) < density).astype(np.float64)
    raise GenerationError(
        f"could not draw masks without dead pixels in {MAX_MASK_RETRIES} tries "
        f"(density={density}, B={B})"
    )


def generate_synthetic_scene(n_x, n_y, B, seed=0, kind="moving-square"):
    """Piecewise-smooth test video with values in [0, 1].

    ``moving-square`` places two flat squares on a flat background and moves
    them one pixel to the right per frame, so consecutive frames are exact
    one-pixel translates. ``moving-gaussian`` moves a Gaussian blob the same way.
    """
    if kind not in SCENE_KINDS:
        raise ParameterError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
    if min(n_x, n_y, B) < 1:
        raise DimensionError(f"invalid scene dims {n_x}x{n_y}x{B}")
    rng = np.random.default_rng(seed)
    bg = rng.uniform(0.1, 0.3)
    cube = np.full((B, n_x, n_y), bg)
    travel = B - 1
    if kind == "moving-square":
        for level, frac in ((rng.uniform(0.75, 0.95), 0.4), (rng.uniform(0.45, 0.6), 0.2)):
            side = max(1, int(round(frac * min(n_x, n_y))))
            side_x = min(side, n_x)
            side_y = min(side, max(1, n_y - travel))
            r0 = int(rng.integers(0, n_x - side_x + 1))
            c0 = int(rng.integers(0, max(1, n_y - side_y - travel + 1)))
            for k in range(B):
                c = min(c0 + k, n_y - side_y)
                cube[k, r0:r0 + side_x, c:c + side_y] = level
    else:
        amp = rng.uniform(0.5, 0.7)
        sigma = max(1.0, 0.15 * min(n_x, n_y))
        cx = rng.uniform(0.3, 0.7) * (n_x - 1)
        cy = rng.uniform(0.2, 0.4) * (n_y - 1)
        ii, jj = np.meshgrid(np.arange(n_x), np.arange(n_y), indexing="ij")
        for k in range(B):
            r2 = (ii - cx) ** 2 + (jj - cy - k) ** 2
            cube[k] = bg + amp * np.exp(-r2 / (2.0 * sigma ** 2))
    return np.clip(cube, 0.0, 1.0)


def simulate_measurement(truth, masks, noise_std=0.0, seed=0):
    """``sum_k C_k * X_k`` plus seeded i.i.d. Gaussian noise of std ``noise_std``."""
    if not noise_std >= 0:
        raise ParameterError(f"noise_std must be >= 0, got {noise_std}")
    truth = as_cube(truth, name="truth")
    op = masks if isinstance(masks, SensingOperator) else SensingOperator(masks)
    y = op.forward(truth)
    if noise_std > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_std, size=y.shape)
    return y
