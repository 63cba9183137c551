import csv
import math

import numpy as np
import pytest

from scitv.bench import FULL_GRID
from scitv.data import generate_masks, generate_synthetic_scene, simulate_measurement
from scitv.errors import ConfigError, DimensionError, NumericalError
from scitv.metrics import psnr
from scitv.sensing import SensingOperator
from scitv.solvers import (FRAMEWORKS, TRACE_COLUMNS, SolveConfig, next_tau, reconstruct,
                           solve_gap, twist_parameters)

LAM_GRID = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2)


def small_problem(n_x=12, n_y=10, B=4, seed=3):
    truth = generate_synthetic_scene(n_x, n_y, B, seed=seed)
    masks = generate_masks(n_x, n_y, B, seed=seed)
    return simulate_measurement(truth, masks), masks, truth


@pytest.fixture(scope="module")
def scene():
    truth = generate_synthetic_scene(64, 64, 8, seed=0)
    masks = generate_masks(64, 64, 8, seed=0)
    y = simulate_measurement(truth, masks)
    return y, SensingOperator(masks), truth


# -- configuration ----------------------------------------------------------------------

def test_defaults():
    cfg = SolveConfig()
    assert (cfg.framework, cfg.tv.tag, cfg.lam, cfg.rho, cfg.max_iter) == \
        ("gap", "atv-fgp", 0.05, 0.01, 100)
    assert cfg.inner_iterations == 2
    assert SolveConfig(tv="atv-cham").inner_iterations == 5
    assert SolveConfig(tv="atv-clip", in_iter=9).inner_iterations == 9


@pytest.mark.parametrize("kw", [dict(framework="sart"), dict(lam=-0.1), dict(max_iter=0),
                                dict(in_iter=0), dict(framework="admm", rho=0),
                                dict(twist_xi1=0), dict(twist_xi1=2), dict(tv="itv2d-clip")])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        SolveConfig(**kw)


def test_bad_denoise_parameters_surface_as_config_error():
    y, masks, _ = small_problem()
    with pytest.raises(ConfigError):
        reconstruct(y, masks, SolveConfig(cham_dt=0.5, tv="atv-cham"))


def test_framework_mismatch():
    y, masks, _ = small_problem()
    with pytest.raises(ConfigError):
        solve_gap(y, SensingOperator(masks), SolveConfig(framework="fista"))


def test_shape_mismatch():
    y, masks, truth = small_problem()
    with pytest.raises(DimensionError):
        reconstruct(y[:-1], masks, SolveConfig())
    with pytest.raises(DimensionError):
        reconstruct(y, masks, SolveConfig(), reference=truth[:-1])


# -- parameter sequences ---------------------------------------------------------------

def test_tau_growth():
    tau = 1.0
    for t in range(1, 2001):
        assert tau >= (t + 1) / 2
        tau = next_tau(tau)


def test_twist_parameters():
    xi = 1e-4
    alpha, beta = twist_parameters(xi)
    rho_bar = (1 - math.sqrt(xi)) / (1 + math.sqrt(xi))
    assert alpha == pytest.approx(rho_bar ** 2 + 1, rel=1e-15)
    assert beta == pytest.approx(2 * alpha / (1 + xi), rel=1e-15)
    assert 1 < alpha < 2


# -- unit operator ------------------------------------------------------------------

@pytest.mark.parametrize("fw", FRAMEWORKS)
def test_unit_operator_exact_recovery(fw, rng):
    frame = rng.random((5, 7))
    est, trace = reconstruct(frame, np.ones((1, 5, 7)),
                             SolveConfig(framework=fw, lam=0.0, max_iter=4))
    assert np.allclose(est[0], frame, atol=1e-14)
    assert trace[0].fidelity <= 1e-28


def test_gap_lambda_zero_is_stationary():
    y, masks, _ = small_problem()
    op = SensingOperator(masks)
    est1, _ = reconstruct(y, op, SolveConfig(lam=0.0, max_iter=1))
    assert np.allclose(est1, op.project_affine(op.adjoint(y), y), atol=1e-15)
    est5, _ = reconstruct(y, op, SolveConfig(lam=0.0, max_iter=5))
    assert np.allclose(est5, est1, atol=1e-14)


# -- per-framework guarantees ----------------------------------------------------------

@pytest.mark.parametrize("tv", ["atv-clip", "itv2d-cham", "itv3d-fgp"])
def test_gap_every_iterate_feasible(tv):
    y, masks, _ = small_problem()
    op = SensingOperator(masks)
    worst = []
    reconstruct(y, op, SolveConfig(tv=tv, max_iter=30),
                callback=lambda t, est, x: worst.append(np.abs(op.forward(x) - y).max()))
    assert len(worst) == 30 and max(worst) <= 1e-10


def test_admm_small_rho_first_step_is_projection(rng):
    for _ in range(5):
        masks = (rng.random((4, 8, 8)) < 0.5).astype(float)
        masks[0][masks.sum(axis=0) == 0] = 1.0
        op = SensingOperator(masks)
        y = op.forward(rng.random((4, 8, 8)))
        seen = {}
        reconstruct(y, op, SolveConfig(framework="admm", rho=1e-8, max_iter=1),
                    callback=lambda t, est, x: seen.setdefault(t, x.copy()))
        assert np.abs(seen[1] - op.project_affine(op.adjoint(y), y)).max() <= 1e-6


def test_admm_lambda_zero_residual_decreases():
    y, masks, _ = small_problem()
    op = SensingOperator(masks)
    res = []
    reconstruct(y, op, SolveConfig(framework="admm", lam=0.0, rho=0.5, max_iter=40),
                callback=lambda t, est, x: res.append(np.linalg.norm(op.forward(est) - y)))
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert all(b < a for a, b in zip(res, res[1:]) if a > 1e-12)
    assert res[-1] < 1e-12 * res[0]


def test_admm_primal_residual_settles(scene):
    y, op, _ = scene
    res = []
    reconstruct(y, op, SolveConfig(framework="admm", max_iter=100),
                callback=lambda t, est, x: res.append(np.linalg.norm(x - est)))
    res = np.array(res)
    assert np.all(np.isfinite(res)) and res.max() < np.linalg.norm(y) * 10
    assert res[75:].mean() <= res[50:75].mean()


def test_fista_beats_normalized_backprojection(scene):
    y, op, truth = scene
    base = psnr(truth, op.adjoint(y) / op.gram_diag)
    est, _ = reconstruct(y, op, SolveConfig(framework="fista", max_iter=100))
    assert psnr(truth, est) > base


# -- traces and plumbing ------------------------------------------------------------------

@pytest.mark.parametrize("fw", FRAMEWORKS)
def test_trace_contents(fw, tmp_path):
    y, masks, truth = small_problem()
    est, trace = reconstruct(y, masks, SolveConfig(framework=fw, max_iter=12), reference=truth)
    assert len(trace) == 12
    assert [r.iteration for r in trace] == list(range(1, 13))
    stamps = [r.elapsed_ms for r in trace]
    assert all(b >= a for a, b in zip(stamps, stamps[1:]))
    assert np.all(np.isfinite(trace.psnr))
    assert trace.psnr[-1] == pytest.approx(psnr(truth, est))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == TRACE_COLUMNS and len(rows) == 13


def test_psnr_tracing_does_not_perturb():
    y, masks, truth = small_problem()
    a, ta = reconstruct(y, masks, SolveConfig(max_iter=10), reference=truth)
    b, tb = reconstruct(y, masks, SolveConfig(max_iter=10, trace_psnr=False), reference=truth)
    assert np.array_equal(a, b)
    assert np.all(np.isnan(tb.psnr))


def test_no_reference_leaves_psnr_blank(tmp_path):
    y, masks, _ = small_problem()
    _, trace = reconstruct(y, masks, SolveConfig(max_iter=3))
    trace.to_csv(tmp_path / "t.csv")
    assert list(csv.reader(open(tmp_path / "t.csv")))[1][3] == ""


@pytest.mark.parametrize("fw", FRAMEWORKS)
def test_non_finite_iterate_raises(fw):
    y, masks, _ = small_problem()
    y[2, 3] = np.nan
    with pytest.raises(NumericalError):
        reconstruct(y, masks, SolveConfig(framework=fw, max_iter=3))


def test_deterministic():
    y, masks, _ = small_problem()
    for fw in FRAMEWORKS:
        cfg = SolveConfig(framework=fw, tv="itv2d-cham", max_iter=8)
        assert np.array_equal(reconstruct(y, masks, cfg)[0], reconstruct(y, masks, cfg)[0])


def test_every_grid_cell_runs():
    y, masks, _ = small_problem(6, 5, 2)
    assert len(FULL_GRID) == 28
    for fw, v in FULL_GRID:
        est, trace = reconstruct(y, masks, SolveConfig(framework=fw, tv=v, max_iter=3))
        assert est.shape == (2, 6, 5) and np.all(np.isfinite(est)) and len(trace) == 3


def test_warm_start_changes_iterates():
    y, masks, _ = small_problem()
    a, _ = reconstruct(y, masks, SolveConfig(max_iter=10))
    b, _ = reconstruct(y, masks, SolveConfig(max_iter=10, warm_start=False))
    assert not np.array_equal(a, b)


def test_single_iteration_warm_and_cold_agree():
    # the first denoise call starts from zero duals either way
    y, masks, _ = small_problem()
    a, _ = reconstruct(y, masks, SolveConfig(max_iter=1))
    b, _ = reconstruct(y, masks, SolveConfig(max_iter=1, warm_start=False))
    assert np.array_equal(a, b)


# -- cross-framework agreement on the seeded scene -------------------------------------------

def _grid_best(scene, fw, tv, iters):
    y, op, truth = scene
    return max(reconstruct(y, op, SolveConfig(framework=fw, tv=tv, lam=lam, max_iter=iters),
                           reference=truth)[1].psnr[-1] for lam in LAM_GRID)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="measured gap 0.74 dB; see notes on cross-framework agreement")
def test_admm_close_to_gap_itv3d(scene):
    admm = _grid_best(scene, "admm", "itv3d-fgp", 100)
    gap = _grid_best(scene, "gap", "itv3d-fgp", 100)
    assert abs(admm - gap) <= 0.5


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="measured gap 0.71 dB; see notes on cross-framework agreement")
def test_twist_close_to_gap_long_run(scene):
    twist = _grid_best(scene, "twist", "atv-fgp", 500)
    gap = _grid_best(scene, "gap", "atv-fgp", 500)
    assert abs(twist - gap) <= 0.5
