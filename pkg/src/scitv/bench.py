"""Datasets and the framework x TV-variant benchmark grid."""
import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import read_key_values, write_key_values
from .data import generate_masks, generate_synthetic_scene, simulate_measurement
from .errors import ConfigError, DimensionError
from .io import load_tensor, save_tensor
from .metrics import psnr
from .sensing import SensingOperator
from .solvers import FRAMEWORKS, SolveConfig, reconstruct
from .tv import VARIANTS, TvVariant

log = logging.getLogger(__name__)

FULL_GRID = tuple((fw, v) for fw in FRAMEWORKS for v in VARIANTS)


@dataclass
class Dataset:
    """Masks, one measurement per group of ``B`` frames, and optional truth.

    ``measurements`` is ``(M, n_x, n_y)`` and ``truth`` (if present) is
    ``(M*B, n_x, n_y)``. Both are stored already divided by ``peak``.
    """

    name: str
    masks: np.ndarray
    measurements: np.ndarray
    truth: Optional[np.ndarray] = None
    peak: float = 1.0
    noise_std: float = 0.0

    def __post_init__(self):
        self.masks = np.asarray(self.masks, dtype=np.float64)
        m = np.asarray(self.measurements, dtype=np.float64)
        if m.ndim == 2:
            m = m[None]
        self.measurements = m
        B, n_x, n_y = self.masks.shape
        if m.shape[1:] != (n_x, n_y):
            raise DimensionError(f"{self.name}: measurement frames {m.shape[1:]} != masks {(n_x, n_y)}")
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=np.float64)
            if t.shape != (m.shape[0] * B, n_x, n_y):
                raise DimensionError(
                    f"{self.name}: truth shape {t.shape} does not match "
                    f"{m.shape[0]} measurement(s) of {B} frames"
                )
            self.truth = t

    @property
    def frames(self):
        return self.masks.shape[0]

    def groups(self):
        """Yield ``(measurement, truth_or_None)`` per coded snapshot."""
        B = self.frames
        for g, y in enumerate(self.measurements):
            ref = None if self.truth is None else self.truth[g * B:(g + 1) * B]
            yield y, ref


def simulate_dataset(name, n_x, n_y, B, seed=0, density=0.5, noise_std=0.0,
                     kind="moving-square"):
    truth = generate_synthetic_scene(n_x, n_y, B, seed=seed, kind=kind)
    masks = generate_masks(n_x, n_y, B, seed=seed, density=density)
    y = simulate_measurement(truth, masks, noise_std=noise_std, seed=seed)
    return Dataset(name, masks, y, truth, noise_std=noise_std)


def synthetic_suite(size=32, B=8, seed=0):
    """Four desk-scale stand-ins for a benchmark set of videos."""
    return [
        simulate_dataset("square-a", size, size, B, seed=seed, kind="moving-square"),
        simulate_dataset("square-b", size, size, B, seed=seed + 1, kind="moving-square"),
        simulate_dataset("blob-a", size, size, B, seed=seed, kind="moving-gaussian"),
        simulate_dataset("blob-b", size, size, B, seed=seed + 1, kind="moving-gaussian"),
    ]


def save_dataset(ds, directory):
    """Write ``masks.scit``, ``measurement.scit``, ``truth.scit`` and ``dataset.cfg``.

    Tensors are written in the normalized scale, so the stored peak is 1.
    """
    os.makedirs(directory, exist_ok=True)
    save_tensor(os.path.join(directory, "masks.scit"), ds.masks)
    meas = ds.measurements[0] if len(ds.measurements) == 1 else ds.measurements
    save_tensor(os.path.join(directory, "measurement.scit"), meas)
    if ds.truth is not None:
        save_tensor(os.path.join(directory, "truth.scit"), ds.truth)
    write_key_values(os.path.join(directory, "dataset.cfg"),
                     {"name": ds.name, "peak": 1.0, "noise_std": ds.noise_std})


def load_dataset(directory):
    """Read a dataset directory written by :func:`save_dataset` or by hand.

    ``masks.scit`` is required. Without ``measurement.scit`` the measurement
    is simulated from ``truth.scit`` (noise from ``noise_std`` in the cfg).
    Truth and measurements are divided by the cfg ``peak`` (default 1).
    """
    meta = {}
    cfg_path = os.path.join(directory, "dataset.cfg")
    if os.path.exists(cfg_path):
        meta = read_key_values(cfg_path)
    name = meta.get("name", os.path.basename(os.path.normpath(directory)))
    try:
        peak = float(meta.get("peak", 1.0))
        noise_std = float(meta.get("noise_std", 0.0))
        seed = int(meta.get("seed", 0))
    except ValueError as exc:
        raise ConfigError(f"{cfg_path}: {exc}") from None
    if not peak > 0:
        raise ConfigError(f"{cfg_path}: peak must be positive")
    masks = load_tensor(os.path.join(directory, "masks.scit"))
    if masks.ndim != 3:
        raise DimensionError(f"{directory}: masks must be a rank-3 tensor")
    truth = None
    t_path = os.path.join(directory, "truth.scit")
    if os.path.exists(t_path):
        truth = load_tensor(t_path) / peak
        if truth.ndim == 2:
            truth = truth[None]
    m_path = os.path.join(directory, "measurement.scit")
    if os.path.exists(m_path):
        meas = load_tensor(m_path) / peak
    elif truth is not None:
        B = masks.shape[0]
        if truth.shape[0] % B:
            raise DimensionError(f"{directory}: truth frames not a multiple of B={B}")
        op = SensingOperator(masks)
        meas = np.stack([
            simulate_measurement(truth[g:g + B], op, noise_std, seed + g // B)
            for g in range(0, truth.shape[0], B)
        ])
    else:
        raise FileNotFoundError(f"{directory}: neither measurement.scit nor truth.scit")
    return Dataset(name, masks, meas, truth, peak=peak, noise_std=noise_std)


def load_datasets(root):
    """Load ``root`` itself if it holds ``masks.scit``, else each subdirectory."""
    if os.path.exists(os.path.join(root, "masks.scit")):
        return [load_dataset(root)]
    subdirs = sorted(
        d for d in os.listdir(root)
        if os.path.exists(os.path.join(root, d, "masks.scit"))
    )
    if not subdirs:
        raise FileNotFoundError(f"no datasets (masks.scit) under {root}")
    return [load_dataset(os.path.join(root, d)) for d in subdirs]


def parse_grid(text):
    """``"full"`` or a comma list of ``framework:tv`` items (``gap:atv-clip``)."""
    if text is None or text.strip().lower() == "full":
        return list(FULL_GRID)
    cells = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        fw, sep, tv = item.partition(":")
        if not sep:
            raise ConfigError(f"grid item {item!r} is not framework:tv")
        fw = fw.strip().lower()
        if fw not in FRAMEWORKS:
            raise ConfigError(f"unknown framework {fw!r} in grid")
        cells.append((fw, TvVariant.parse(tv)))
    if not cells:
        raise ConfigError("empty grid")
    return cells


@dataclass(frozen=True)
class CellResult:
    psnr: float
    runtime_s: float
    lam: float


@dataclass
class BenchReport:
    grid: List[Tuple[str, TvVariant]]
    datasets: List[str]
    cells: Dict[Tuple[str, str, str], CellResult] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def value(self, fw, tag, dataset):
        return self.cells[(fw, tag, dataset)].psnr

    def average(self, fw, tag):
        return float(np.mean([self.value(fw, tag, d) for d in self.datasets]))

    def lam(self, fw, tag):
        return self.cells[(fw, tag, self.datasets[0])].lam

    def runtime(self, fw, tag):
        return sum(self.cells[(fw, tag, d)].runtime_s for d in self.datasets)

    def _column(self, dataset):
        if dataset == "average":
            return {(fw, v.tag): self.average(fw, v.tag) for fw, v in self.grid}
        return {(fw, v.tag): self.value(fw, v.tag, dataset) for fw, v in self.grid}

    def marks(self, dataset):
        """Best-cell flags at 0.001 dB precision for one dataset (or ``"average"``).

        ``row``: best TV variant within its framework; ``column``: best
        framework for its TV variant; ``overall``: best cell of the grid.
        """
        vals = {k: round(v, 3) for k, v in self._column(dataset).items()}
        top = max(vals.values())
        out = {}
        for (fw, tag), v in vals.items():
            row_best = max(u for (f, _), u in vals.items() if f == fw)
            col_best = max(u for (_, t), u in vals.items() if t == tag)
            out[(fw, tag)] = (v == row_best, v == col_best, v == top)
        return out

    def rows(self):
        """Long-format rows; the ``runtime_s`` column always comes last."""
        rows = []
        for dataset in self.datasets + ["average"]:
            marks = self.marks(dataset)
            for fw, v in self.grid:
                if dataset == "average":
                    p, rt = self.average(fw, v.tag), self.runtime(fw, v.tag)
                else:
                    c = self.cells[(fw, v.tag, dataset)]
                    p, rt = c.psnr, c.runtime_s
                rb, cb, ob = marks[(fw, v.tag)]
                rows.append([fw, v.tag, dataset, f"{self.lam(fw, v.tag):.6g}", f"{p:.4f}",
                             int(rb), int(cb), int(ob), f"{rt:.3f}"])
        return rows

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["framework", "tv", "dataset", "lambda", "psnr",
                        "row_best", "column_best", "overall_best", "runtime_s"])
            w.writerows(self.rows())

    def write_table(self, path):
        """Grid layout: one row per (framework, dataset), one column per TV variant."""
        tags = [v.tag for v in VARIANTS if any(v == g for _, g in self.grid)]
        fws = [fw for fw in FRAMEWORKS if any(fw == f for f, _ in self.grid)]
        have = {(fw, v.tag) for fw, v in self.grid}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["framework", "dataset"] + tags + ["row_mean"])
            for fw in fws:
                for dataset in self.datasets + ["average"]:
                    vals = {}
                    for tag in tags:
                        if (fw, tag) in have:
                            vals[tag] = (self.average(fw, tag) if dataset == "average"
                                         else self.value(fw, tag, dataset))
                    cells = [f"{vals[t]:.4f}" if t in vals else "" for t in tags]
                    w.writerow([fw, dataset] + cells + [f"{np.mean(list(vals.values())):.4f}"])


def _run_cell(ds, cfg):
    t0 = time.perf_counter()
    op = SensingOperator(ds.masks)
    scores = []
    for y, ref in ds.groups():
        est, _ = reconstruct(y, op, cfg.replace(trace_psnr=False))
        scores.append(psnr(ref, est))
    return float(np.mean(scores)), time.perf_counter() - t0


def run_benchmark(datasets, grid=None, defaults=None, workers=1, lam_grid=None):
    """Run every ``(framework, tv)`` cell on every dataset with ground truth.

    With ``lam_grid`` each cell is run for every lambda in the grid and keeps
    the one with the highest mean PSNR over datasets (ties go to the smaller
    lambda). Results are keyed by cell, so ``workers`` never changes content.
    """
    grid = list(FULL_GRID if grid is None else grid)
    defaults = defaults or SolveConfig()
    usable, warnings = [], []
    for ds in datasets:
        if ds.truth is None:
            msg = f"dataset {ds.name!r} has no ground truth; skipped"
            log.warning(msg)
            warnings.append(msg)
        else:
            usable.append(ds)
    names = [ds.name for ds in usable]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate dataset names: {names}")
    report = BenchReport(grid, names, warnings=warnings)
    if not usable:
        return report
    lams = sorted(set(lam_grid)) if lam_grid else [defaults.lam]

    jobs = {}
    for fw, v in grid:
        for lam in lams:
            cfg = defaults.replace(framework=fw, tv=v, lam=lam)
            for ds in usable:
                jobs[(fw, v.tag, lam, ds.name)] = (ds, cfg)
    keys = list(jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(keys, pool.map(lambda k: _run_cell(*jobs[k]), keys)))
    else:
        results = {k: _run_cell(*jobs[k]) for k in keys}

    for fw, v in grid:
        best_lam = max(lams, key=lambda lam: (np.mean([results[(fw, v.tag, lam, n)][0]
                                                       for n in names]), -lam))
        for n in names:
            p, rt = results[(fw, v.tag, best_lam, n)]
            report.cells[(fw, v.tag, n)] = CellResult(p, rt, best_lam)
    return report
