"""The ``optlab`` command line: run, audit and sweep."""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from optlab import cli
from optlab.cli import SWEEP_HEADER, TRACE_HEADER, main
from optlab.harness import BoundAudit
from optlab.optimizers.sgd import thread_cap

CFG = {
    "problem": {"kind": "quadratic", "dimension": 20, "kappa": 100, "seed": 0},
    "oracle": {"noise": "none"},
    "optimizer": {"kind": "nesterov-optimal"},
    "iterations": 1000,
    "seed": 0,
}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_trace_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, CFG), "--out", str(out)]) == 0
    rows = _rows(out / "trace.csv")
    assert tuple(rows[0]) == TRACE_HEADER
    assert len(rows) == 1 + 1001
    assert [int(r[0]) for r in rows[1:]] == list(range(1001))
    man = json.loads((out / "manifest.json").read_text())
    for k in ("config_hash", "seed", "tool_version", "outputs"):
        assert k in man
    assert man["outputs"]["trace"] == "trace.csv"


def test_run_same_seed_byte_identical(tmp_path):
    doc = dict(CFG, optimizer={"kind": "sgd"}, schedule={"kind": "constant", "alpha": 0.005},
               oracle={"noise": "isotropic-gaussian", "sigma": 1.0}, replicas=8, iterations=200, seed=5)
    cfg = _write(tmp_path, doc)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    assert main(["run", "--config", cfg, "--out", str(c), "--seed", "6"]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    assert (a / "trace.csv").read_bytes() != (c / "trace.csv").read_bytes()


def test_run_iters_override(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _write(tmp_path, CFG), "--out", str(out), "--iters", "10"]) == 0
    assert len(_rows(out / "trace.csv")) == 12


def test_trace_values_round_trip(tmp_path):
    out = tmp_path / "o"
    main(["run", "--config", _write(tmp_path, CFG), "--out", str(out), "--iters", "30"])
    rows = _rows(out / "trace.csv")[1:]
    loss = np.array([float(r[1]) for r in rows])
    assert np.all(np.isfinite(loss)) and loss[-1] < loss[0]
    for r in rows:
        for v in r[1:]:
            x = float(v)
            assert math.isnan(x) or format(x, ".17g") == v


def test_unknown_key_exit_2_with_line(tmp_path, capsys):
    doc = dict(CFG, optimizer={"kind": "nesterov-optimal", "speed": 3})
    text = json.dumps(doc, indent=2)
    path = tmp_path / "bad.json"
    path.write_text(text)
    line = next(i for i, l in enumerate(text.splitlines(), 1) if '"speed"' in l)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "x")]) == 2
    err = capsys.readouterr().err
    assert f"line {line}" in err and "speed" in err


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 2


def test_audit_lower_bounds_exit_0(capsys):
    assert main(["audit", "--suite", "lower-bounds"]) == 0
    assert "8/8 audits passed" in capsys.readouterr().out


def test_audit_spectral_reports_failure(tmp_path):
    # the region oracle flags four transient cells at n = 200
    report = tmp_path / "r.json"
    assert main(["audit", "--suite", "spectral", "--report", str(report)]) == 1
    rep = json.loads(report.read_text())
    bad = [r for r in rep if r["violations"]]
    assert [r["bound_name"] for r in bad] == ["spectral-region-oracle"]
    assert bad[0]["violations"] == 4


def test_audit_tampered_bound_exit_1(tmp_path, monkeypatch):
    from optlab.harness import suites

    tampered = {"gd": [lambda s: BoundAudit("tampered", [2.0, 0.5], [1.0, 1.0])]}
    monkeypatch.setattr(suites, "SUITES", tampered)
    report = tmp_path / "r.json"
    assert main(["audit", "--suite", "gd", "--seed", "3", "--report", str(report)]) == 1
    (rep,) = json.loads(report.read_text())
    assert rep["bound_name"] == "tampered"
    assert rep["n_checked"] == 2
    assert rep["violations"] == 1
    assert rep["max_rel_violation"] == pytest.approx(1.0)
    assert rep["seed"] == 3
    assert isinstance(rep["config_hash"], str) and len(rep["config_hash"]) == 64


def test_audit_report_keys(tmp_path, monkeypatch):
    from optlab.harness import suites

    monkeypatch.setattr(suites, "SUITES", {"gd": [lambda s: BoundAudit("fine", [0.0], [1.0])]})
    report = tmp_path / "r.json"
    assert main(["audit", "--suite", "gd", "--report", str(report)]) == 0
    (rep,) = json.loads(report.read_text())
    assert {"bound_name", "n_checked", "violations", "max_rel_violation", "seed", "config_hash"} <= set(rep)


# sweep -------------------------------------------------------------------

@pytest.fixture(scope="module")
def hb_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sw") / "grid.csv"
    assert main(["sweep", "--kind", "hb-region", "--out", str(out)]) == 0
    return _rows(out)


def test_sweep_default_grid(hb_sweep):
    assert tuple(hb_sweep[0]) == SWEEP_HEADER
    assert len(hb_sweep) - 1 == 101 * 101


def test_sweep_region_radii(hb_sweep):
    seen = set()
    for b, hl, region, radius in hb_sweep[1:]:
        b, hl, radius = float(b), float(hl), float(radius)
        seen.add(region)
        if region == "Ripples":
            assert radius == pytest.approx(math.sqrt(b), rel=1e-15)
        elif region == "Divergent":
            assert radius >= 1.0 - 1e-12
        else:
            assert radius < 1.0
    assert seen == {"Monotonic", "Oscillation", "Ripples", "Divergent"}


def test_sweep_header_round_trip(hb_sweep):
    for row in hb_sweep[1:50]:
        for v in (row[0], row[1], row[3]):
            assert format(float(v), ".17g") == v


def test_sweep_nesterov(tmp_path):
    out = tmp_path / "n.csv"
    assert main(["sweep", "--kind", "nesterov-region", "--steps", "11", "--out", str(out)]) == 0
    assert len(_rows(out)) == 122


def test_sweep_empty_grid_exit_2(tmp_path):
    assert main(["sweep", "--kind", "hb-region", "--steps", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["sweep", "--kind", "hb-region", "--bmin", "1", "--bmax", "0", "--out", str(tmp_path / "x.csv")]) == 2


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("OPTLAB_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("OPTLAB_THREADS", "4")
    assert thread_cap() == 4
    monkeypatch.setenv("OPTLAB_THREADS", "junk")
    assert thread_cap() == 1


def test_threads_do_not_change_results(tmp_path, monkeypatch):
    doc = dict(CFG, optimizer={"kind": "sgd"}, schedule={"kind": "constant", "alpha": 0.005},
               oracle={"noise": "isotropic-gaussian", "sigma": 1.0}, replicas=16, iterations=50)
    cfg = _write(tmp_path, doc)
    outs = []
    for t in ("1", "4"):
        monkeypatch.setenv("OPTLAB_THREADS", t)
        out = tmp_path / f"t{t}"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        outs.append((out / "trace.csv").read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "optlab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "optlab" in res.stdout
