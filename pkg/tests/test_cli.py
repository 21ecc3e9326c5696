import csv
import json

import numpy as np
import pytest

from mblab.cli import main
from mblab.config import ConfigError, load_config, parse_float_list, parse_int_list
from mblab.ensemble import EnsembleStats, write_aggregates


def test_parse_lists():
    assert parse_float_list("1,2.5,9") == [1.0, 2.5, 9.0]
    assert parse_float_list("1:3:0.5") == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert parse_int_list("0:4:2") == [0, 2, 4]
    assert parse_int_list("all") == "all"


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "run.yaml"
    cfg_path.write_text("sizes: [8]\npvals: all\nwgrid: [1.0, 2.0]\nseed: 5\n")
    cfg = load_config(str(cfg_path), {"seed": 9, "sizes": None})
    assert cfg.seed == 9 and cfg.sizes == [8]
    assert len(cfg.grid()) == 9 * 2
    with pytest.raises(ConfigError):
        load_config(None, {"sizes": [7]})
    cfg_path.write_text("bogus: 1\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config(str(cfg_path))


@pytest.mark.parametrize("flags", [["--sizes", "7"], ["--wgrid", ""], ["--pvals", "20", "--sizes", "8"],
                                   ["--realizations", "0"]])
def test_invalid_grid_exit_1(tmp_path, flags, capsys):
    out = tmp_path / "run"
    assert main(["spectrum", "--out", str(out), "--sizes", "8", *flags]) == 1
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def _spectrum(out):
    return main(["spectrum", "--out", str(out), "--sizes", "6,8", "--pvals", "0,2",
                 "--wgrid", "1,8", "--realizations", "3", "--window-size", "6", "--seed", "17"])


def test_spectrum_deterministic(tmp_path):
    assert _spectrum(tmp_path / "a") == 0
    assert _spectrum(tmp_path / "b") == 0
    for name in ("records.csv", "aggregates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["master_seed"] == 17 and man["n_realizations"] == 3
    assert man["config"]["window_size"] == 6
    rows = list(csv.DictReader(open(tmp_path / "a" / "aggregates.csv")))
    assert len(rows) == 8 and all(r["n"] == "3" for r in rows)


def test_dynamics_command(tmp_path):
    out = tmp_path / "dyn"
    code = main(["dynamics", "--out", str(out), "--sizes", "6", "--pvals", "0",
                 "--wgrid", "5", "--realizations", "2"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "series.csv")))
    t0 = [r for r in rows if float(r["t"]) == 0]
    assert t0 and all(float(r["mean_S_over_SP"]) == 0 for r in t0)


def _write_stats(path, fn, sizes=(10, 12, 14), W=np.linspace(2.5, 6.5, 9), P=(0,), dO=0.01, order=None):
    stats = [EnsembleStats(L, p, float(w), 20, {"mean_S_over_SP": fn(L, p, w), "mean_r": fn(L, p, w),
                                              "mean_Smbl_over_SP": 0.5},
                           {"mean_S_over_SP": dO, "mean_r": dO, "mean_Smbl_over_SP": dO})
             for L in sizes for p in P for w in W]
    if order is not None:
        stats = [stats[k] for k in order]
    write_aggregates(path, stats)
    return len(stats)


def _linear_collapse(L, P, W, W_c=4.5, nu=0.9):
    return 0.4 - 0.01 * L ** (1 / nu) * (W - W_c)


def test_collapse_linear_fixture(tmp_path):
    agg = tmp_path / "aggregates.csv"
    _write_stats(agg, _linear_collapse)
    (tmp_path / "c.yaml").write_text("collapse:\n  observables: [EE]\n")
    out = tmp_path / "collapse"
    assert main(["collapse", "--aggregates", str(agg), "--out", str(out),
                 "--config", str(tmp_path / "c.yaml")]) == 0
    (res,) = json.loads((out / "collapse_report.json").read_text())["results"]
    assert res["Q"] < 1e-8
    assert res["W_c"] == pytest.approx(4.5, abs=1e-3)
    assert res["nu"] == pytest.approx(0.9, abs=1e-3)
    assert (out / "collapse_table.csv").exists() and (out / "manifest.json").exists()


def test_collapse_order_independent(tmp_path):
    n = _write_stats(tmp_path / "a.csv", _linear_collapse)
    perm = np.random.default_rng(0).permutation(n)
    _write_stats(tmp_path / "b.csv", _linear_collapse, order=perm)
    (tmp_path / "c.yaml").write_text("collapse:\n  observables: [EE]\n")
    for name in ("a", "b"):
        assert main(["collapse", "--aggregates", str(tmp_path / f"{name}.csv"),
                     "--out", str(tmp_path / name), "--config", str(tmp_path / "c.yaml")]) == 0
    assert (tmp_path / "a" / "collapse_report.json").read_bytes() == \
        (tmp_path / "b" / "collapse_report.json").read_bytes()


def test_collapse_no_overlap_exit_2(tmp_path):
    # sizes sampled on disjoint W windows never bracket each other
    stats = []
    for L, W in ((10, [1.0, 1.1, 1.2, 1.3]), (12, [14.0, 14.1, 14.2, 14.3])):
        stats += [EnsembleStats(L, 0, w, 5, {"mean_S_over_SP": 0.5, "mean_r": 0.5, "mean_Smbl_over_SP": 0.5},
                                {"mean_S_over_SP": 0.01, "mean_r": 0.01, "mean_Smbl_over_SP": 0.01})
                  for w in W]
    write_aggregates(tmp_path / "agg.csv", stats)
    code = main(["collapse", "--aggregates", str(tmp_path / "agg.csv"), "--out", str(tmp_path / "c")])
    assert code == 2


def test_cross_lines(tmp_path):
    agg = tmp_path / "aggregates.csv"
    _write_stats(agg, lambda L, P, W: 0.5 - 0.05 * (L - 8) * (W - 4.7), sizes=(10, 12),
                 W=np.arange(1.0, 9.0))
    assert main(["cross", "--aggregates", str(agg), "--out", str(tmp_path / "x")]) == 0
    rows = [r for r in csv.DictReader(open(tmp_path / "x" / "crossings.csv"))
            if r["mode"] == "fixed_P_vary_W" and r["observable"] == "EE"]
    assert len(rows) == 1
    assert float(rows[0]["value"]) == pytest.approx(4.7, abs=1e-6)
    assert rows[0]["L_av"] == "11"


def test_cross_none_reported(tmp_path, capsys):
    agg = tmp_path / "aggregates.csv"
    _write_stats(agg, lambda L, P, W: 0.9 - 0.05 * W + 0.01 * L, sizes=(10, 12), W=np.arange(1.0, 9.0))
    assert main(["cross", "--aggregates", str(agg), "--out", str(tmp_path / "x")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "x" / "crossings.csv")))
    w_rows = [r for r in rows if r["mode"] == "fixed_P_vary_W"]
    assert w_rows and all(r["value"] == "" and r["reason"] for r in w_rows)
    assert "no crossing" in capsys.readouterr().out


def test_phase_diagram_and_plot(tmp_path):
    agg = tmp_path / "aggregates.csv"
    _write_stats(agg, lambda L, P, W: 0.5 - 0.05 * L * (W - 3 - P / 2), sizes=(8, 10), P=(0, 2, 4),
                 W=np.arange(1.0, 9.0))
    phase = tmp_path / "phase"
    assert main(["phase-diagram", "--aggregates", str(agg), "--out", str(phase)]) == 0
    heat = list(csv.DictReader(open(phase / "heatmap.csv")))
    assert len(heat) == 3 * 8
    assert main(["plot", "--tables", str(phase)]) == 0
    svg = phase / "figures" / "phase_heatmap.svg"
    first = svg.read_bytes()
    assert (phase / "figures" / "phase_heatmap.csv").exists()
    assert main(["plot", "--tables", str(phase)]) == 0
    assert svg.read_bytes() == first


def test_plot_aggregates_byte_identical(tmp_path):
    _write_stats(tmp_path / "aggregates.csv", _linear_collapse)
    assert main(["plot", "--tables", str(tmp_path), "--out", str(tmp_path / "f1")]) == 0
    assert main(["plot", "--tables", str(tmp_path), "--out", str(tmp_path / "f2")]) == 0
    for name in ("observables_vs_W.svg", "observables_vs_PoverL.svg"):
        assert (tmp_path / "f1" / name).read_bytes() == (tmp_path / "f2" / name).read_bytes()


def test_plot_empty_table(tmp_path, capsys):
    (tmp_path / "heatmap.csv").write_text("W,P_over_L,P,mean_S_over_SP,mean_r\n")
    assert main(["plot", "--tables", str(tmp_path)]) == 1
    assert "heatmap.csv" in capsys.readouterr().err


def test_plot_missing_columns(tmp_path, capsys):
    (tmp_path / "series.csv").write_text("L,P,t\n8,0,0.0\n")
    assert main(["plot", "--tables", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "series.csv" in err and "missing" in err


def test_plot_nothing_to_draw(tmp_path):
    assert main(["plot", "--tables", str(tmp_path)]) == 1


def test_missing_aggregates_file(tmp_path):
    assert main(["cross", "--aggregates", str(tmp_path / "nope.csv")]) == 1
