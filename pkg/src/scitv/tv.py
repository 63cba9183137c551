"""Finite differences, TV norms and the seven TV-denoising inner solvers.

All functions work on cubes of shape ``(B, n_x, n_y)``; a single frame is
passed as a cube with ``B == 1``. Horizontal differences run along the last
axis, vertical differences along the middle axis.

Dual fields follow the gradient shapes: ``w_h`` is ``(B, n_x, n_y - 1)`` and
``w_v`` is ``(B, n_x - 1, n_y)``. For the isotropic projections both are
zero-padded to ``(B, n_x, n_y)`` so that the two components share a pixel
grid; the padding stays zero under every update.
"""
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionError, ParameterError

NORMS = ("atv", "itv2d", "itv3d")
INNER_SOLVERS = ("clip", "cham", "fgp")
PROJECTION_RULES = ("max-one", "additive")
CLIP_MODES = ("joint", "split")

# effective prox weight of the clipping solver, relative to cfg.lam;
# calibrated against the two-pixel closed form (tests/test_tv.py)
CLIP_WEIGHT_FACTOR = 2.0


@dataclass(frozen=True)
class TvVariant:
    norm: str
    solver: str

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ConfigError(f"unknown TV norm {self.norm!r}")
        if self.solver not in INNER_SOLVERS:
            raise ConfigError(f"unknown inner solver {self.solver!r}")
        if self.solver == "clip" and self.norm != "atv":
            raise ConfigError("the clipping solver only supports ATV")

    @classmethod
    def parse(cls, tag):
        """Parse tags like ``"atv-clip"`` or ``"ITV3D-FGP"``."""
        parts = str(tag).strip().lower().split("-")
        if len(parts) != 2:
            raise ConfigError(f"bad TV variant tag {tag!r}")
        return cls(*parts)

    @property
    def tag(self):
        return f"{self.norm}-{self.solver}"

    def __str__(self):
        return self.tag


VARIANTS = tuple(
    TvVariant(n, s)
    for n, s in [
        ("atv", "clip"), ("atv", "cham"), ("atv", "fgp"),
        ("itv2d", "cham"), ("itv2d", "fgp"),
        ("itv3d", "cham"), ("itv3d", "fgp"),
    ]
)


@dataclass(frozen=True)
class DenoiseConfig:
    lam: float = 0.05
    in_iter: int = 5
    clip_alpha: float = 8.0
    cham_dt: float = 0.125
    projection_rule: str = "max-one"
    clip_mode: str = "joint"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if int(self.in_iter) != self.in_iter or self.in_iter < 1:
            raise ParameterError(f"in_iter must be a positive integer, got {self.in_iter}")
        if not self.clip_alpha > 0:
            raise ParameterError(f"clip_alpha must be > 0, got {self.clip_alpha}")
        if not 0 < self.cham_dt <= 0.25:
            raise ParameterError(f"cham_dt must lie in (0, 1/4], got {self.cham_dt}")
        if self.projection_rule not in PROJECTION_RULES:
            raise ParameterError(f"unknown projection rule {self.projection_rule!r}")
        if self.clip_mode not in CLIP_MODES:
            raise ParameterError(f"unknown clip mode {self.clip_mode!r}")

    def with_lam(self, lam):
        return replace(self, lam=lam)


@dataclass
class DualField:
    """Horizontal and vertical dual variables of a TV denoise call."""

    w_h: np.ndarray
    w_v: np.ndarray

    @classmethod
    def zeros(cls, shape):
        B, n_x, n_y = shape
        return cls(np.zeros((B, n_x, max(n_y - 1, 0))), np.zeros((B, max(n_x - 1, 0), n_y)))

    def copy(self):
        return DualField(self.w_h.copy(), self.w_v.copy())


# -- finite differences ------------------------------------------------------

def grad_h(f):
    """``f[..., i, j+1] - f[..., i, j]``, i.e. ``X D_h^T`` per frame."""
    f = np.asarray(f, dtype=np.float64)
    return f[..., :, 1:] - f[..., :, :-1]


def grad_v(f):
    """``f[..., i+1, j] - f[..., i, j]``, i.e. ``D_v X`` per frame."""
    f = np.asarray(f, dtype=np.float64)
    return f[..., 1:, :] - f[..., :-1, :]


def grad_h_adjoint(w, shape=None):
    w = np.asarray(w, dtype=np.float64)
    out_shape = w.shape[:-1] + (w.shape[-1] + 1,)
    if shape is not None and tuple(shape) != out_shape:
        raise DimensionError(f"horizontal dual of shape {w.shape} does not fit {tuple(shape)}")
    out = np.zeros(out_shape)
    out[..., :, :-1] -= w
    out[..., :, 1:] += w
    return out


def grad_v_adjoint(w, shape=None):
    w = np.asarray(w, dtype=np.float64)
    out_shape = w.shape[:-2] + (w.shape[-2] + 1, w.shape[-1])
    if shape is not None and tuple(shape) != out_shape:
        raise DimensionError(f"vertical dual of shape {w.shape} does not fit {tuple(shape)}")
    out = np.zeros(out_shape)
    out[..., :-1, :] -= w
    out[..., 1:, :] += w
    return out


def _grad_adjoint(w_h, w_v, shape):
    return grad_h_adjoint(w_h, shape) + grad_v_adjoint(w_v, shape)


def _pad_h(a):
    return np.pad(a, [(0, 0)] * (a.ndim - 1) + [(0, 1)])


def _pad_v(a):
    return np.pad(a, [(0, 0)] * (a.ndim - 2) + [(0, 1), (0, 0)])


def _pointwise_sq(x):
    """Per-pixel squared gradient magnitude, zero-padded to ``x.shape``."""
    return _pad_h(grad_h(x)) ** 2 + _pad_v(grad_v(x)) ** 2


# -- norms -------------------------------------------------------------------

def tv_norm(x, norm, aggregate="pixel"):
    """Total variation of a cube.

    ``aggregate="pixel"`` (default) is the norm whose dual ball the
    projections of the inner solvers describe, and so the regularizer they
    actually minimize: ITV2D sums the per-pixel gradient magnitude, ITV3D
    sums over pixels the magnitude taken jointly across all frames.

    ``aggregate="frame"`` gives the coarse frame-level form: ITV2D is
    ``sum_k sqrt(||D_h x_k||^2 + ||D_v x_k||^2)`` and ITV3D is the same
    square root taken over the whole cube. ATV is identical in both modes.
    """
    x = np.asarray(x, dtype=np.float64)
    if norm == "atv":
        return float(np.abs(grad_h(x)).sum() + np.abs(grad_v(x)).sum())
    if aggregate == "pixel":
        sq = _pointwise_sq(x)
        if norm == "itv2d":
            return float(np.sqrt(sq).sum())
        if norm == "itv3d":
            return float(np.sqrt(sq.sum(axis=0)).sum())
    elif aggregate == "frame":
        per_frame = (grad_h(x) ** 2).sum(axis=(-2, -1)) + (grad_v(x) ** 2).sum(axis=(-2, -1))
        if norm == "itv2d":
            return float(np.sqrt(per_frame).sum())
        if norm == "itv3d":
            return float(np.sqrt(per_frame.sum()))
    else:
        raise ConfigError(f"unknown aggregate {aggregate!r}")
    raise ConfigError(f"unknown TV norm {norm!r}")


def prox_objective(x, z, lam, norm):
    """``0.5*||x - z||^2 + lam * TV(x)``."""
    return 0.5 * float(np.sum((x - z) ** 2)) + lam * tv_norm(x, norm)


# -- dual projections ----------------------------------------------------------

def _dual_step(w_h, w_v, z_h, z_v, step, norm, rule):
    """Gradient step on the duals followed by the per-norm projection.

    ``rule="max-one"`` divides the candidate ``w + step*z`` by
    ``max(1, |w + step*z|)``; ``rule="additive"`` divides it by
    ``1 + step*|z|``, or by ``|w + step*z|`` when that is larger. The second
    term never binds when ``w`` starts feasible (Chambolle), and keeps the
    FGP iterates, whose extrapolated ``w`` may leave the ball, feasible.
    The magnitude is taken component-wise for ATV, per pixel for ITV2D, and
    per pixel across all frames for ITV3D.
    """
    cand_h = w_h + step * z_h
    cand_v = w_v + step * z_v
    if norm == "atv":
        dh, dv = np.maximum(1.0, np.abs(cand_h)), np.maximum(1.0, np.abs(cand_v))
        if rule != "max-one":
            dh = np.maximum(dh, 1.0 + step * np.abs(z_h))
            dv = np.maximum(dv, 1.0 + step * np.abs(z_v))
        return cand_h / dh, cand_v / dv

    denom = np.maximum(1.0, _group_magnitude(cand_h, cand_v, norm))
    if rule != "max-one":
        denom = np.maximum(denom, 1.0 + step * _group_magnitude(z_h, z_v, norm))
    return cand_h / denom[..., :, :-1], cand_v / denom[..., :-1, :]


def _group_magnitude(a_h, a_v, norm):
    mag2 = _pad_h(a_h) ** 2 + _pad_v(a_v) ** 2
    if norm == "itv3d":
        mag2 = np.broadcast_to(mag2.sum(axis=0), mag2.shape)
    return np.sqrt(mag2)


def project_dual(w_h, w_v, norm):
    """Project a dual pair onto the unit ball of the dual norm (max-one rule)."""
    zh, zv = np.zeros_like(w_h), np.zeros_like(w_v)
    return _dual_step(w_h, w_v, zh, zv, 0.0, norm, "max-one")


# -- denoisers -------------------------------------------------------------------

def _start_dual(shape, dual):
    if dual is None:
        return DualField.zeros(shape)
    ref = DualField.zeros(shape)
    if dual.w_h.shape != ref.w_h.shape or dual.w_v.shape != ref.w_v.shape:
        raise DimensionError("warm-start dual field does not match the cube shape")
    return dual.copy()


def denoise_clip(z, cfg, dual=None, return_dual=False):
    """ATV denoising by iterative clipping.

    Both duals take a step of ``1/clip_alpha`` along the gradient of the
    current estimate ``z - D_h^T w_h - D_v^T w_v`` and are clipped to
    ``[-2*lam, 2*lam]``; this converges to the ATV prox with weight
    ``CLIP_WEIGHT_FACTOR * lam``.

    With ``cfg.clip_mode == "split"`` each dual is instead driven by its own
    partial estimate ``z - D_h^T w_h`` (resp. ``z - D_v^T w_v``). That form
    does not converge to the ATV prox on 2D frames and is kept for parity
    experiments only.
    """
    z = np.asarray(z, dtype=np.float64)
    d = _start_dual(z.shape, dual)
    w_h, w_v = d.w_h, d.w_v
    T = 2.0 * cfg.lam
    inv_a = 1.0 / cfg.clip_alpha
    split = cfg.clip_mode == "split"
    for _ in range(cfg.in_iter):
        if split:
            theta_h = z - grad_h_adjoint(w_h)
            theta_v = z - grad_v_adjoint(w_v)
        else:
            theta_h = theta_v = z - _grad_adjoint(w_h, w_v, z.shape)
        w_h = np.clip(w_h + inv_a * grad_h(theta_h), -T, T)
        w_v = np.clip(w_v + inv_a * grad_v(theta_v), -T, T)
    out = z - _grad_adjoint(w_h, w_v, z.shape)
    if return_dual:
        return out, DualField(w_h, w_v)
    return out


def denoise_chambolle(z, norm, cfg, dual=None, return_dual=False):
    """Chambolle's dual fixed-point iteration for ``argmin 0.5||x-z||^2 + lam TV(x)``."""
    z = np.asarray(z, dtype=np.float64)
    if cfg.lam == 0:
        out = z.copy()
        return (out, _start_dual(z.shape, dual)) if return_dual else out
    d = _start_dual(z.shape, dual)
    w_h, w_v = d.w_h, d.w_v
    lam = cfg.lam
    for _ in range(cfg.in_iter):
        u = z / lam - _grad_adjoint(w_h, w_v, z.shape)
        w_h, w_v = _dual_step(w_h, w_v, grad_h(u), grad_v(u), cfg.cham_dt, norm,
                              cfg.projection_rule)
    out = z - lam * _grad_adjoint(w_h, w_v, z.shape)
    if return_dual:
        return out, DualField(w_h, w_v)
    return out


def denoise_fgp(z, norm, cfg, dual=None, return_dual=False):
    """Fast gradient projection (Nesterov-accelerated dual projected gradient)."""
    z = np.asarray(z, dtype=np.float64)
    if cfg.lam == 0:
        out = z.copy()
        return (out, _start_dual(z.shape, dual)) if return_dual else out
    d = _start_dual(z.shape, dual)
    w_h, w_v = d.w_h, d.w_v
    p_h, p_v = w_h, w_v
    lam = cfg.lam
    step = 1.0 / (8.0 * lam)
    nu = 1.0
    for _ in range(cfg.in_iter):
        theta = z - lam * _grad_adjoint(w_h, w_v, z.shape)
        q_h, q_v = _dual_step(w_h, w_v, grad_h(theta), grad_v(theta), step, norm,
                              cfg.projection_rule)
        nu_next = (1.0 + np.sqrt(1.0 + 4.0 * nu * nu)) / 2.0
        c = (nu - 1.0) / nu_next
        w_h = q_h + c * (q_h - p_h)
        w_v = q_v + c * (q_v - p_v)
        p_h, p_v, nu = q_h, q_v, nu_next
    out = z - lam * _grad_adjoint(p_h, p_v, z.shape)
    if return_dual:
        return out, DualField(p_h, p_v)
    return out


def denoise(z, variant, cfg, dual=None, return_dual=False):
    """Dispatch to the inner solver named by ``variant`` (a TvVariant or tag)."""
    if not isinstance(variant, TvVariant):
        variant = TvVariant.parse(variant)
    if variant.solver == "clip":
        return denoise_clip(z, cfg, dual=dual, return_dual=return_dual)
    if variant.solver == "cham":
        return denoise_chambolle(z, variant.norm, cfg, dual=dual, return_dual=return_dual)
    return denoise_fgp(z, variant.norm, cfg, dual=dual, return_dual=return_dual)
