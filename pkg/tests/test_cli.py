import csv
import json
import math

import numpy as np
import pytest

from ferromf.cli import ExperimentConfig, main, run
from ferromf.core import load_system
from ferromf.exact import curie_weiss_exact


def read_csv(path):
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def header(path):
    return {ln[2:].split(":", 1)[0]: ln.split(":", 1)[1].strip() for ln in open(path) if ln.startswith("# ")}


def test_verify_bound_curie_weiss(tmp_path):
    out = tmp_path / "r.json"
    code = main(["verify-bound", "--model", "curie_weiss", "--n", "16", "--beta", "0.8", "--h", "0.5", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["method"] == "exact"
    assert doc["result"]["ratio"] <= 1
    assert doc["meta"]["config"]["model"]["n"] == 16
    assert doc["meta"]["tool"].startswith("ferromf ")
    assert len(doc["meta"]["config_sha256"]) == 64


def test_verify_bound_large_curie_weiss_uses_sector(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify-bound", "--n", "1000", "--beta", "1.5", "--h", "0.3", "--out", str(out)]) == 0
    res = json.loads(out.read_text())["result"]
    m, _ = curie_weiss_exact(1000, 1.5, 0.3)
    assert res["method"] == "sector"
    assert res["residual"] == pytest.approx(abs(m - math.tanh(0.3 + 1.5 * 0.999 * m)), abs=1e-15)


def test_verify_bound_without_field_fails(tmp_path, capsys):
    code = main(["verify-bound", "--n", "6", "--beta", "0.5", "--h", "0.0", "--out", str(tmp_path / "x.json")])
    assert code == 1
    assert "violation" in capsys.readouterr().err


def test_lee_yang_csv(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["lee-yang", "--model", "random", "--n", "10", "--seed", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 10
    assert all(abs(float(r["modulus"]) - 1) < 1e-8 for r in rows)
    assert header(out)["seed"] == "3"


def test_residual_sweep_over_fields(tmp_path):
    out = tmp_path / "s.csv"
    hs = ",".join(f"{0.1 * k:.1f}" for k in range(1, 11))
    code = main(["sweep", "--model", "random", "--n", "8", "--model-seed", "5", "--grid", f"h={hs}", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 10
    rhs = [float(r["theorem_rhs"]) for r in rows]
    assert all(a > b for a, b in zip(rhs, rhs[1:]))
    assert [float(r["h"]) for r in rows] == pytest.approx([0.1 * k for k in range(1, 11)])


def test_residual_sweep_alias(tmp_path):
    cfg = ExperimentConfig("residual-sweep", {"name": "curie_weiss", "n": 6, "beta": 0.5}, {"grid": {"h": [0.2, 0.4]}}, out=str(tmp_path / "a.csv"))
    assert run(cfg) == 0
    assert len(read_csv(tmp_path / "a.csv")) == 2


def test_curie_weiss_size_sweep(tmp_path):
    out = tmp_path / "n.csv"
    assert main(["sweep", "--beta", "1.5", "--h", "0.3", "--grid", "n=8,10,12,14,16,18,20", "--out", str(out)]) == 0
    rows = read_csv(out)
    scaled = [int(r["n"]) * float(r["residual"]) for r in rows]
    # N times the bound is O(1) for these couplings, so the column must stay below it
    caps = [int(r["n"]) * float(r["theorem_rhs"]) for r in rows]
    assert all(a <= c for a, c in zip(scaled, caps))
    assert max(caps) < 2 * min(caps)
    assert all(b <= a for a, b in zip(scaled, scaled[1:]))


def test_sweep_cross_product_order(tmp_path):
    out = tmp_path / "x.csv"
    main(["sweep", "--n", "4", "--grid", "beta=0.2,0.4", "--grid", "h=0.1,0.3,0.5", "--out", str(out)])
    rows = read_csv(out)
    pairs = [(float(r["beta"]), float(r["h"])) for r in rows]
    assert pairs == [(b, h) for b in (0.2, 0.4) for h in (0.1, 0.3, 0.5)]


def test_sweep_error_rows(tmp_path):
    out = tmp_path / "e.csv"
    code = main(["sweep", "--n", "4", "--beta", "0.5", "--grid", "h=-0.5,0.3", "--out", str(out)])
    rows = read_csv(out)
    assert code == 1 and len(rows) == 2
    assert rows[0]["error"] and rows[0]["ratio"] == ""
    assert rows[1]["error"] == ""


def test_empty_grid_rejected(capsys):
    assert main(["sweep", "--n", "4", "--beta", "0.5", "--h", "0.3"]) == 2
    assert run(ExperimentConfig("sweep", {"n": 4, "beta": 0.5, "h": 0.3}, {"grid": {"h": []}})) == 2
    assert "grid" in capsys.readouterr().err


def test_sweep_deterministic_and_threaded(tmp_path, monkeypatch):
    out = tmp_path / "a.csv"
    args = ["sweep", "--n", "6", "--h", "0.4", "--grid", "beta=0.3,0.6,0.9,1.2", "--out", str(out)]

    def body():
        main(args)
        return [ln for ln in out.read_text().splitlines() if not ln.startswith("# created")]

    first, second = body(), body()
    assert first == second
    monkeypatch.setenv("FERROMF_THREADS", "4")
    threaded = body()
    assert json.loads(header(out)["config"])["threads"] == 4
    strip = lambda lines: [ln for ln in lines if not ln.startswith("#")]  # noqa: E731
    assert strip(first) == strip(threaded)


def test_config_file_with_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"model": {"name": "curie_weiss", "n": 8, "beta": 0.5, "h": 0.4}, "seed": 7}))
    out = tmp_path / "r.json"
    assert main(["verify-bound", "--config", str(conf), "--beta", "0.9", "--out", str(out)]) == 0
    meta = json.loads(out.read_text())["meta"]
    assert meta["config"]["model"]["beta"] == 0.9
    assert meta["config"]["model"]["n"] == 8
    assert meta["seed"] == 7


def test_bad_json_reports_location(tmp_path, capsys):
    conf = tmp_path / "bad.json"
    conf.write_text('{\n  "model": {"n": 4,}\n}\n')
    assert main(["verify-bound", "--config", str(conf)]) == 2
    assert f"{conf}:2:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        ExperimentConfig("frobnicate"),
        ExperimentConfig("gen", {"name": "ising3d"}),
        ExperimentConfig("gen", {"name": "curie_weiss", "n": 4, "beta": 1.0, "h": 0.1, "colour": 1}),
        ExperimentConfig("gen", {"name": "curie_weiss", "beta": 1.0, "h": 0.1}),
        ExperimentConfig("gen", {"name": "kac", "L": 5, "lam": 0.5, "beta": 1.0, "h": 0.0}),
    ],
)
def test_invalid_configs(cfg):
    assert run(cfg) == 2


def test_config_round_trip():
    cfg = ExperimentConfig("sweep", {"name": "diluted", "n": 50, "p": 0.1}, {"grid": {"beta": [0.5, 1.0]}}, "o.csv", "csv", 11, 3)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_gen_and_file_round_trip(tmp_path):
    sys_path = tmp_path / "sys.json"
    assert main(["gen", "--model", "diluted", "--n", "12", "--beta", "1.0", "--p", "0.5", "--h", "0.3", "--seed", "2", "--out", str(sys_path)]) == 0
    loaded = load_system(str(sys_path))
    assert loaded.n == 12
    out = tmp_path / "r.json"
    assert main(["verify-bound", "--model", "file", "--system", str(sys_path), "--out", str(out)]) == 0
    coo = tmp_path / "coo.json"
    main(["gen", "--model", "diluted", "--n", "12", "--beta", "1.0", "--p", "0.5", "--h", "0.3", "--seed", "2", "--coo", "--out", str(coo)])
    np.testing.assert_array_equal(load_system(str(coo)).couplings, loaded.couplings)


def test_characteristic_csv(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["characteristic", "--model", "random", "--n", "5", "--steps", "20", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 21 and float(rows[0]["t"]) == 1.0 and float(rows[-1]["t"]) == 0.0
    w = [float(r["w1"]) for r in rows]
    assert all(b >= a for a, b in zip(w, w[1:]))


def test_correlation_and_curve_tasks(tmp_path):
    out = tmp_path / "l1.csv"
    assert main(["lemma1", "--model", "random", "--n", "5", "--trials", "30", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 30
    assert main(["lemma2", "--model", "random", "--n", "5", "--steps", "50", "--format", "json", "--out", str(tmp_path / "l2.json")]) == 0
    out = tmp_path / "cd.json"
    assert main(["corederid", "--model", "random", "--n", "6", "--trials", "20", "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["max_defect"] <= 1e-10


def test_low_temp_task(tmp_path):
    out = tmp_path / "lt.json"
    assert main(["low-temp", "--n", "10", "--beta", "2.0", "--h", "0.1", "--alpha", "1.5", "--format", "json", "--out", str(out)]) == 0
    res = json.loads(out.read_text())["result"]
    assert res["holds"] is True and res["lower"] <= 1.8 + 1e-9 <= res["upper"] + 2e-9


def test_positive_state_task(tmp_path):
    out = tmp_path / "ps.csv"
    assert main(["positive-state", "--beta", "1.5", "--sizes", "100,1000", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [int(r["n"]) for r in rows] == [100, 1000]
    assert all(float(r["max_m"]) >= 0.5 for r in rows)
    # h = (|J|_1inf)^(1/4) with |J|_1inf = beta / N
    assert float(rows[0]["h"]) == pytest.approx(0.015**0.25, rel=1e-14)


def test_sample_task(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sample", "--model", "curie_weiss", "--n", "30", "--beta", "0.5", "--h", "0.3", "--sweeps", "640", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 30 and set(rows[0]) == {"site", "m_hat", "std_err"}


def test_csv_floats_round_trip(tmp_path):
    out = tmp_path / "z.csv"
    main(["lee-yang", "--model", "curie_weiss", "--n", "6", "--beta", "0.7", "--h", "0.2", "--out", str(out)])
    for r in read_csv(out):
        for key in ("re", "im", "modulus"):
            assert f"{float(r[key]):.17g}" == r[key]
