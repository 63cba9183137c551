"""Structured sensing operator ``Phi = [D_1, ..., D_B]`` with diagonal blocks.

Because every block is diagonal, ``Phi Phi^T`` is diagonal too, and every
linear-algebra step used by the reconstruction frameworks reduces to
per-pixel arithmetic on the Gram diagonal ``sum_k C_k(i, j)**2``.
"""
import numpy as np

from .errors import DimensionError, MaskError, ParameterError, SizeError
from .tensor import as_cube

DENSE_CAP = 4096


class SensingOperator:
    """Video SCI forward model built from a ``(B, n_x, n_y)`` mask cube.

    Instances are immutable; the mask array is copied and write-protected.
    """

    def __init__(self, masks):
        try:
            masks = as_cube(masks, name="masks")
        except ValueError as exc:
            if isinstance(exc, DimensionError):
                raise
            raise MaskError(str(exc)) from None
        masks = masks.copy()
        gram = np.einsum("kij,kij->ij", masks, masks)
        dead = int(np.count_nonzero(gram <= 0))
        if dead:
            raise MaskError(f"{dead} dead pixel(s): sum_k C_k(i,j)^2 == 0")
        masks.setflags(write=False)
        gram.setflags(write=False)
        self._masks = masks
        self._gram = gram

    @property
    def masks(self):
        return self._masks

    @property
    def gram_diag(self):
        """``diag(Phi Phi^T)`` reshaped to an ``(n_x, n_y)`` frame."""
        return self._gram

    @property
    def shape(self):
        """``(B, n_x, n_y)`` of the signal cube."""
        return self._masks.shape

    @property
    def lipschitz(self):
        """Largest eigenvalue of ``Phi^T Phi`` (the max of the Gram diagonal)."""
        return float(self._gram.max())

    def _check_cube(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self._masks.shape:
            raise DimensionError(f"cube shape {x.shape} != mask shape {self._masks.shape}")
        return x

    def _check_meas(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != self._masks.shape[1:]:
            raise DimensionError(
                f"measurement shape {y.shape} != frame shape {self._masks.shape[1:]}"
            )
        return y

    def forward(self, x):
        """``Y = sum_k C_k * X_k`` (noiseless)."""
        x = self._check_cube(x)
        return np.einsum("kij,kij->ij", self._masks, x)

    def adjoint(self, y):
        """Frame ``k`` of the result is ``C_k * Y``."""
        y = self._check_meas(y)
        return self._masks * y

    def project_affine(self, theta, y):
        """Euclidean projection of ``theta`` onto ``{x : Phi x = y}``."""
        theta = self._check_cube(theta)
        y = self._check_meas(y)
        r = (y - self.forward(theta)) / self._gram
        return theta + self._masks * r

    def admm_x_update(self, b, y, rho):
        """Minimize ``0.5*||y - Phi x||^2 + 0.5*rho*||x - b||^2`` in closed form.

        Uses ``x = b + Phi^T (rho I + Phi Phi^T)^{-1} (y - Phi b)``, which is
        element-wise since ``Phi Phi^T`` is diagonal.
        """
        if not rho > 0:
            raise ParameterError(f"rho must be positive, got {rho}")
        b = self._check_cube(b)
        y = self._check_meas(y)
        r = (y - self.forward(b)) / (self._gram + rho)
        return b + self._masks * r

    def materialize_dense(self, cap=DENSE_CAP):
        """Dense ``n x nB`` matrix of the operator, for small test problems."""
        B, n_x, n_y = self._masks.shape
        n = n_x * n_y
        if n * B > cap:
            raise SizeError(f"n*B = {n * B} exceeds dense cap {cap}")
        phi = np.zeros((n, n * B))
        rows = np.arange(n)
        for k in range(B):
            phi[rows, k * n + rows] = self._masks[k].reshape(-1)
        return phi

