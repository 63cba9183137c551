"""Outer reconstruction frameworks: FISTA, TwIST, GAP and ADMM.

Each framework alternates a data step on ``y = Phi x`` with one of the TV
denoisers from :mod:`scitv.tv`. All runs use a fixed outer iteration budget.
The TV dual variables are zeroed once before the outer loop and carried from
one denoise call to the next (``warm_start=False`` resets them every call).
"""
import csv
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError, ParameterError
from .metrics import psnr
from .sensing import SensingOperator
from .tv import DenoiseConfig, TvVariant, denoise, tv_norm

FRAMEWORKS = ("fista", "twist", "gap", "admm")

TRACE_COLUMNS = ("iteration", "fidelity", "tv_value", "psnr", "elapsed_ms")


def default_in_iter(variant):
    """Inner budget used when none is given: 2 for FGP, 5 otherwise."""
    return 2 if variant.solver == "fgp" else 5


@dataclass(frozen=True)
class SolveConfig:
    framework: str = "gap"
    tv: TvVariant = TvVariant("atv", "fgp")
    lam: float = 0.05
    rho: float = 0.01
    max_iter: int = 100
    in_iter: Optional[int] = None
    twist_xi1: float = 1e-4
    trace_psnr: bool = True
    warm_start: bool = True
    projection_rule: str = "max-one"
    clip_alpha: float = 8.0
    cham_dt: float = 0.125
    clip_mode: str = "joint"

    def __post_init__(self):
        fw = str(self.framework).lower()
        if fw not in FRAMEWORKS:
            raise ConfigError(f"unknown framework {self.framework!r}")
        object.__setattr__(self, "framework", fw)
        if not isinstance(self.tv, TvVariant):
            object.__setattr__(self, "tv", TvVariant.parse(self.tv))
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if fw == "admm" and not self.rho > 0:
            raise ConfigError(f"ADMM needs rho > 0, got {self.rho}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.in_iter is not None and (int(self.in_iter) != self.in_iter or self.in_iter < 1):
            raise ConfigError(f"in_iter must be a positive integer, got {self.in_iter}")
        if not 0 < self.twist_xi1 <= 1:
            raise ConfigError(f"twist_xi1 must lie in (0, 1], got {self.twist_xi1}")

    @property
    def inner_iterations(self):
        return self.in_iter if self.in_iter is not None else default_in_iter(self.tv)

    def denoise_config(self, lam=None):
        try:
            return DenoiseConfig(
                lam=self.lam if lam is None else lam,
                in_iter=self.inner_iterations,
                clip_alpha=self.clip_alpha,
                cham_dt=self.cham_dt,
                projection_rule=self.projection_rule,
                clip_mode=self.clip_mode,
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    fidelity: float
    tv_value: float
    psnr: float
    elapsed_ms: float


@dataclass
class IterationTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def psnr(self):
        return np.array([r.psnr for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow([
                    r.iteration, f"{r.fidelity:.12g}", f"{r.tv_value:.12g}",
                    "" if math.isnan(r.psnr) else f"{r.psnr:.6f}", f"{r.elapsed_ms:.3f}",
                ])


class _Tracker:
    """Collects trace records and guards against non-finite iterates."""

    def __init__(self, op, y, cfg, reference, callback):
        self.op, self.y, self.cfg = op, y, cfg
        self.reference = reference if cfg.trace_psnr else None
        self.callback = callback
        self.trace = IterationTrace()
        self.t0 = time.perf_counter()

    def record(self, t, estimate, data_iterate):
        if not np.all(np.isfinite(estimate)):
            raise NumericalError(f"non-finite values in iterate {t} ({self.cfg.framework})")
        elapsed = (time.perf_counter() - self.t0) * 1e3
        r = self.y - self.op.forward(estimate)
        fid = 0.5 * float(np.sum(r * r))
        tv = tv_norm(estimate, self.cfg.tv.norm)
        p = psnr(self.reference, estimate) if self.reference is not None else float("nan")
        self.trace.records.append(TraceRecord(t, fid, tv, p, elapsed))
        if self.callback is not None:
            self.callback(t, estimate, data_iterate)


def _prepare(y, op, cfg, framework, reference):
    if cfg.framework != framework:
        raise ConfigError(f"config is for {cfg.framework!r}, not {framework!r}")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != op.shape[1:]:
        raise DimensionError(f"measurement shape {y.shape} != operator frame {op.shape[1:]}")
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != op.shape:
            raise DimensionError(f"reference shape {reference.shape} != {op.shape}")
    return y, reference


class _Denoiser:
    """TV step with optional dual warm start across outer iterations."""

    def __init__(self, cfg, lam):
        self.variant = cfg.tv
        self.dcfg = cfg.denoise_config(lam)
        self.warm = cfg.warm_start
        self.dual = None

    def __call__(self, z):
        if not self.warm:
            return denoise(z, self.variant, self.dcfg)
        out, self.dual = denoise(z, self.variant, self.dcfg, dual=self.dual, return_dual=True)
        return out


def next_tau(tau):
    """FISTA momentum sequence ``(1 + sqrt(1 + 4 tau^2)) / 2``."""
    return (1.0 + math.sqrt(1.0 + 4.0 * tau * tau)) / 2.0


def solve_fista(y, op, cfg, reference=None, callback=None):
    """FISTA: gradient step of size ``1/L`` then TV prox with weight ``lam/L``.

    ``L`` is the largest Gram-diagonal entry, which is exactly the largest
    eigenvalue of ``Phi^T Phi``.
    """
    y, reference = _prepare(y, op, cfg, "fista", reference)
    tracker = _Tracker(op, y, cfg, reference, callback)
    L = op.lipschitz
    tv_step = _Denoiser(cfg, cfg.lam / L)
    theta = op.adjoint(y)
    x_prev = theta
    tau = 1.0
    for t in range(1, cfg.max_iter + 1):
        z = theta + op.adjoint(y - op.forward(theta)) / L
        x = tv_step(z)
        tau_next = next_tau(tau)
        theta = x + ((tau - 1.0) / tau_next) * (x - x_prev)
        x_prev, tau = x, tau_next
        tracker.record(t, x, z)
    return x_prev, tracker.trace


def twist_parameters(xi1, xin=1.0):
    """TwIST ``(alpha, beta)`` from the spectral bounds ``xi1 <= eig <= xin``."""
    kappa = xi1 / xin
    rho_bar = (1.0 - math.sqrt(kappa)) / (1.0 + math.sqrt(kappa))
    alpha = rho_bar ** 2 + 1.0
    beta = 2.0 * alpha / (xi1 + xin)
    return alpha, beta


def solve_twist(y, op, cfg, reference=None, callback=None):
    """Two-step IST on the operator normalized by ``L`` (unit spectral bound)."""
    y, reference = _prepare(y, op, cfg, "twist", reference)
    tracker = _Tracker(op, y, cfg, reference, callback)
    L = op.lipschitz
    tv_step = _Denoiser(cfg, cfg.lam / L)
    alpha, beta = twist_parameters(cfg.twist_xi1)
    x = op.adjoint(y)
    x_prev = x
    for t in range(1, cfg.max_iter + 1):
        z = x + op.adjoint(y - op.forward(x)) / L
        theta = tv_step(z)
        x_next = (1.0 - alpha) * x_prev + (alpha - beta) * x + beta * theta
        x_prev, x = x, x_next
        tracker.record(t, x, z)
    return x, tracker.trace


def solve_gap(y, op, cfg, reference=None, callback=None):
    """GAP: Euclidean projection onto ``{Phi x = y}`` alternated with TV denoising."""
    y, reference = _prepare(y, op, cfg, "gap", reference)
    tracker = _Tracker(op, y, cfg, reference, callback)
    tv_step = _Denoiser(cfg, cfg.lam)
    theta = op.adjoint(y)
    for t in range(1, cfg.max_iter + 1):
        x = op.project_affine(theta, y)
        theta = tv_step(x)
        tracker.record(t, theta, x)
    return theta, tracker.trace


def solve_admm(y, op, cfg, reference=None, callback=None):
    """ADMM with the element-wise x-update; approaches GAP as ``rho -> 0``."""
    y, reference = _prepare(y, op, cfg, "admm", reference)
    tracker = _Tracker(op, y, cfg, reference, callback)
    tv_step = _Denoiser(cfg, cfg.lam)
    theta = op.adjoint(y)
    u = np.zeros_like(theta)
    for t in range(1, cfg.max_iter + 1):
        x = op.admm_x_update(theta - u, y, cfg.rho)
        theta = tv_step(x + u)
        u = u + x - theta
        tracker.record(t, theta, x)
    return theta, tracker.trace


SOLVERS = {
    "fista": solve_fista,
    "twist": solve_twist,
    "gap": solve_gap,
    "admm": solve_admm,
}


def reconstruct(y, masks, cfg, reference=None, callback: Optional[Callable] = None):
    """Build the sensing operator from ``masks`` (or use a given one) and solve.

    ``callback(t, estimate, data_iterate)`` is invoked after every outer
    iteration; it must not modify its arguments.
    """
    if not isinstance(cfg, SolveConfig):
        raise ConfigError("cfg must be a SolveConfig")
    op = masks if isinstance(masks, SensingOperator) else SensingOperator(masks)
    try:
        solver = SOLVERS[cfg.framework]
    except KeyError:
        raise ConfigError(f"unknown framework {cfg.framework!r}") from None
    return solver(y, op, cfg, reference=reference, callback=callback)
