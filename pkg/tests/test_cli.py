import csv
import json

import numpy as np
import pytest

from fracrom.cli import main
from fracrom.fem import materialize
from fracrom.problems import build_problem
from fracrom.rom import fom_solve
from fracrom.romfile import read_rom


def write_cfg(tmp_path, **kw):
    c = {
        "problem": "gp",
        "nx": 9,
        "rhs": {"mode": "white_noise", "seed": 0},
        "training": {"generator": "grid-sweep", "step": 38.0},
        "rank": 50,
        "test": {"samples": {"generator": "grid-sweep", "count": 20},
                 "alphas": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
        "output_dir": str(tmp_path / "out"),
    }
    c.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(c))
    return p


@pytest.fixture
def trained(tmp_path):
    cfgp = write_cfg(tmp_path)
    assert main(["offline", "--config", str(cfgp), "--threads", "1"]) == 0
    return cfgp, tmp_path / "out"


def test_offline_outputs(trained):
    cfgp, out = trained
    rom = read_rom(out / "rom.from")
    assert rom.orthonormality_error() <= 1e-10
    report = json.loads((out / "report.json").read_text())
    cols = sum(s["n_m"] for s in report["samples"])
    with open(out / "singular_values.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "sigma"]
    assert len(rows) - 1 == min(2 * 50 + 1, cols, rom.meta["n_dofs"])
    assert set(report["timings"]) >= {"snapshot_s", "compression_s", "total_s"}


def test_offline_rerun_byte_identical(trained, tmp_path):
    cfgp, out = trained
    first = (out / "rom.from").read_bytes()
    assert main(["offline", "--config", str(cfgp), "--threads", "1"]) == 0
    assert (out / "rom.from").read_bytes() == first


def test_online(trained, tmp_path):
    cfgp, out = trained
    dest = tmp_path / "y.f64"
    args = ["online", "--rom", str(out / "rom.from"), "--mu", "50", "--alpha", "0.5", "--out", str(dest)]
    assert main(args) == 0
    y = np.fromfile(dest, dtype="<f8")
    side = json.loads((tmp_path / "y.f64.json").read_text())
    assert side["timing"]["online_s"] > 0 and side["grid"]["nx"] == 9 and side["alpha"] == 0.5
    first = dest.read_bytes()
    assert main(args) == 0 and dest.read_bytes() == first
    p = build_problem("gp", 9)
    ref = fom_solve(p, [50.0], 0.5)
    assert np.linalg.norm(y - ref) <= 1e-4 * np.linalg.norm(ref)


def test_online_nu(trained, tmp_path):
    cfgp, out = trained
    assert main(["online", "--rom", str(out / "rom.from"), "--mu", "50", "--nu", "0.2",
                 "--out", str(tmp_path / "n.f64")]) == 0
    assert json.loads((tmp_path / "n.f64.json").read_text())["alpha"] == pytest.approx(0.6)


def test_fom_command(trained, tmp_path):
    cfgp, _ = trained
    dest = tmp_path / "f.f64"
    assert main(["fom", "--config", str(cfgp), "--mu", "80", "--alpha", "0.3", "--out", str(dest)]) == 0
    y = np.fromfile(dest, dtype="<f8")
    assert np.array_equal(y, fom_solve(build_problem("gp", 9), [80.0], 0.3))


def test_sweep_rows(trained):
    cfgp, out = trained
    assert main(["sweep", "--rom", str(out / "rom.from"), "--config", str(cfgp)]) == 0
    with open(out / "errors.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["problem", "alpha", "mu_i", "rel_l2_error", "online_time_s", "fom_time_s"]
    data, summary = rows[1:-1], rows[-1]
    assert len(data) == 180 and summary[0] == "summary"
    errs = np.array([float(r[3]) for r in data])
    assert np.all(np.isfinite(errs)) and np.all(errs >= 0)
    assert float(summary[3]) == errs.max()
    js = json.loads((out / "errors_summary.json").read_text())
    assert len(js["per_alpha"]) == 9 and js["mean_error"] == pytest.approx(errs.mean())


def test_sweep_empty_alphas(trained, tmp_path):
    _, out = trained
    cfg2 = write_cfg(tmp_path, test={"samples": [[20.0]], "alphas": []})
    assert main(["sweep", "--rom", str(out / "rom.from"), "--config", str(cfg2)]) == 0
    assert (out / "errors.csv").read_text() == "problem,alpha,mu_i,rel_l2_error,online_time_s,fom_time_s\n"


def test_sweep_mismatch(trained, tmp_path):
    _, out = trained
    cfg2 = write_cfg(tmp_path, nx=11)
    assert main(["sweep", "--rom", str(out / "rom.from"), "--config", str(cfg2)]) == 2


def test_bench(tmp_path, monkeypatch):
    cfgp = write_cfg(tmp_path, nx=17, rank=40)
    monkeypatch.setenv("FRACROM_THREADS", "1")
    assert main(["bench", "--config", str(cfgp), "--queries", "2"]) == 0
    with open(tmp_path / "out" / "timings.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["metric", "value", "unit"]
    metrics = {r[0] for r in rows[1:]}
    assert {"snapshot_build", "sketch_compression", "svd_compression", "compression_speedup",
            "online_query", "fom_query", "online_speedup", "naive_per_sample"} <= metrics


def test_exit_codes(tmp_path, monkeypatch):
    cfgp = write_cfg(tmp_path, rank=0)
    assert main(["offline", "--config", str(cfgp)]) == 2
    assert main(["offline", "--config", str(tmp_path / "missing.json")]) == 4
    bad = tmp_path / "bad.from"
    bad.write_bytes(b"garbage-garbage")
    assert main(["online", "--rom", str(bad), "--mu", "1", "--alpha", "0.5"]) == 4
    monkeypatch.setenv("FRACROM_THREADS", "zero")
    assert main(["offline", "--config", str(write_cfg(tmp_path))]) == 2


def test_numeric_failure_exit(tmp_path):
    cfgp = write_cfg(tmp_path, fom_tol=1e-16, max_iter=2)
    code = main(["fom", "--config", str(cfgp), "--mu", "50", "--alpha", "0.5",
                 "--out", str(tmp_path / "x.f64")])
    assert code == 3
