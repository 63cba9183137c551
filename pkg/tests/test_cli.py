import csv
import subprocess
import sys

import numpy as np
import pytest

from scitv.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from scitv.io import load_tensor, save_tensor
from scitv.metrics import psnr


@pytest.fixture
def dataset(tmp_path):
    d = tmp_path / "ds"
    assert main(["simulate", "--nx", "16", "--ny", "14", "--frames", "4", "--seed", "2",
                 "--out-dir", str(d)]) == EXIT_OK
    return d


def test_simulate_writes_dataset(dataset):
    names = sorted(p.name for p in dataset.iterdir())
    assert names == ["dataset.cfg", "masks.scit", "measurement.scit", "truth.scit"]
    assert load_tensor(dataset / "masks.scit").shape == (4, 16, 14)
    assert load_tensor(dataset / "measurement.scit").shape == (16, 14)


def test_reconstruct_with_trace_and_frames(dataset, tmp_path, capsys):
    out = tmp_path / "est.scit"
    code = main(["reconstruct", "--measurement", str(dataset / "measurement.scit"),
                 "--masks", str(dataset / "masks.scit"), "--solver", "admm", "--tv", "itv2d-cham",
                 "--max-iter", "20", "--reference", str(dataset / "truth.scit"),
                 "--trace-out", str(tmp_path / "trace.csv"), "--out", str(out),
                 "--frames-dir", str(tmp_path / "frames"), "--format", "png",
                 "--snapshot-every", "10"])
    assert code == EXIT_OK
    est = load_tensor(out)
    assert est.shape == (4, 16, 14)
    rows = list(csv.reader(open(tmp_path / "trace.csv")))
    assert len(rows) == 21
    assert float(rows[-1][3]) == pytest.approx(psnr(load_tensor(dataset / "truth.scit"), est),
                                               abs=1e-6)
    assert (tmp_path / "trace.png").stat().st_size > 0
    assert len(list((tmp_path / "frames").glob("frame_*.png"))) == 4
    assert sorted(p.name for p in (tmp_path / "frames" / "snapshots").iterdir()) == \
        ["iter_0010", "iter_0020"]
    assert "PSNR" in capsys.readouterr().out


def test_config_file_and_override(dataset, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nsolver=fista\nmax_iter=3\nlambda=0.02\nwarm_start=false\n")
    base = ["reconstruct", "--measurement", str(dataset / "measurement.scit"),
            "--masks", str(dataset / "masks.scit")]
    assert main(["--config", str(cfg)] + base + ["--out", str(tmp_path / "a.scit"),
                                                 "--trace-out", str(tmp_path / "a.csv")]) == 0
    assert len(open(tmp_path / "a.csv").readlines()) == 4
    assert main(["--config", str(cfg)] + base + ["--max-iter", "5", "--out", str(tmp_path / "b.scit"),
                                                 "--trace-out", str(tmp_path / "b.csv")]) == 0
    assert len(open(tmp_path / "b.csv").readlines()) == 6
    cfg.write_text("bogus=1\n")
    assert main(["--config", str(cfg)] + base + ["--out", str(tmp_path / "c.scit")]) == EXIT_USAGE


def test_bench_writes_reports(dataset, tmp_path):
    out = tmp_path / "reports" / "bench.csv"
    args = ["bench", "--datasets-dir", str(dataset), "--grid", "gap:atv-fgp,fista:atv-clip",
            "--max-iter", "5", "--report-out", str(out)]
    assert main(args) == EXIT_OK
    first = [r[:-1] for r in csv.reader(open(out))]
    assert len(first) == 1 + 2 * 2
    assert (tmp_path / "reports" / "bench_table.csv").exists()
    assert (tmp_path / "reports" / "bench.png").stat().st_size > 0
    assert main(args + ["--workers", "2"]) == EXIT_OK
    assert [r[:-1] for r in csv.reader(open(out))] == first


def test_bench_synthetic_default(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--synthetic-size", "8", "--grid", "gap:atv-fgp", "--max-iter", "2",
                 "--lambda-grid", "0.01,0.1", "--report-out", str(out)]) == EXIT_OK
    datasets = {r["dataset"] for r in csv.DictReader(open(out))}
    assert datasets == {"square-a", "square-b", "blob-a", "blob-b", "average"}


def test_denoise_frame_and_cube(tmp_path, rng):
    save_tensor(tmp_path / "f.scit", rng.random((6, 5)))
    assert main(["denoise", "--in", str(tmp_path / "f.scit"), "--tv", "itv2d-fgp",
                 "--lambda", "0.1", "--out", str(tmp_path / "g.scit")]) == EXIT_OK
    assert load_tensor(tmp_path / "g.scit").shape == (6, 5)
    save_tensor(tmp_path / "c.scit", rng.random((3, 6, 5)))
    assert main(["denoise", "--in", str(tmp_path / "c.scit"), "--tv", "atv-clip",
                 "--out", str(tmp_path / "d.scit")]) == EXIT_OK
    assert load_tensor(tmp_path / "d.scit").shape == (3, 6, 5)


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["reconstruct"], ["denoise", "--in", "x", "--out", "y", "--tv", "tv"],
    ["bench", "--report-out", "r.csv", "--grid", "gap:nope"],
    ["simulate", "--out-dir", "o", "--density", "0"],
])
def test_usage_errors(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_io_errors(tmp_path):
    (tmp_path / "bad.scit").write_bytes(b"garbage!")
    assert main(["denoise", "--in", str(tmp_path / "missing.scit"),
                 "--out", str(tmp_path / "o.scit")]) == EXIT_IO
    assert main(["denoise", "--in", str(tmp_path / "bad.scit"),
                 "--out", str(tmp_path / "o.scit")]) == EXIT_IO


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_failure(tmp_path):
    save_tensor(tmp_path / "m.scit", np.ones((2, 3, 3)))
    save_tensor(tmp_path / "y.scit", np.full((3, 3), 1e308))
    code = main(["reconstruct", "--measurement", str(tmp_path / "y.scit"),
                 "--masks", str(tmp_path / "m.scit"), "--solver", "fista",
                 "--out", str(tmp_path / "o.scit")])
    assert code == EXIT_NUMERIC


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "scitv", "simulate", "--nx", "4", "--ny", "4",
                           "--frames", "2", "--out-dir", str(tmp_path / "d")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "scitv", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "reconstruct" in proc.stdout
