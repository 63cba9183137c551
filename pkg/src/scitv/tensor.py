"""Dense 3D video cubes and their flat vectorization.

A cube is a float64 ndarray of shape ``(B, n_x, n_y)``: frame-major, then
row-major inside each frame, so element ``(i, j, k)`` lives at flat offset
``((k * n_x) + i) * n_y + j``. The block of sensing-matrix columns belonging
to frame ``k`` is therefore contiguous.
"""
import numpy as np

from .errors import DimensionError


def as_cube(x, name="cube", check_finite=True):
    """Validate ``x`` and return it as a C-contiguous float64 ``(B, n_x, n_y)`` array."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 3:
        raise DimensionError(f"{name} must be 3D (B, n_x, n_y), got shape {a.shape}")
    if min(a.shape) < 1:
        raise DimensionError(f"{name} has an empty dimension: {a.shape}")
    if check_finite and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf")
    return a


def as_frame(x, name="frame", check_finite=True):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2D (n_x, n_y), got shape {a.shape}")
    if min(a.shape) < 1:
        raise DimensionError(f"{name} has an empty dimension: {a.shape}")
    if check_finite and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf")
    return a


def cube_dims(cube):
    """Return ``(n_x, n_y, B)`` for a cube array."""
    B, n_x, n_y = cube.shape
    return n_x, n_y, B


def vectorize(cube):
    """Stack ``vec(X_1), ..., vec(X_B)`` into one flat vector (a copy)."""
    return as_cube(cube, check_finite=False).reshape(-1).copy()


def devectorize(v, n_x, n_y, B):
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size != n_x * n_y * B:
        raise DimensionError(
            f"vector of shape {v.shape} does not hold a {n_x}x{n_y}x{B} cube"
        )
    if n_x < 1 or n_y < 1 or B < 1:
        raise DimensionError(f"invalid cube dims {n_x}x{n_y}x{B}")
    return v.reshape(B, n_x, n_y).copy()
