import cmath
import math

import pytest

import disloc


def test_kinds():
    kinds = disloc.experiment_kinds()
    assert "forward" in kinds and "reconstruct" in kinds


def test_closed_forms():
    v = disloc.sector_integral_exact(0.0, math.pi / 2, 16.0, 2)
    assert abs(v - (-12j / 256)) < 1e-16
    assert abs(disloc.edge_integral_exact(4.0, 0.25, 0.0) - 0.07424926878627024054) < 1e-14
    t = disloc.theta_matrix(math.pi / 2)
    assert abs(t[0][1] + 1) < 1e-15 and abs(t[1][0] + 1) < 1e-15


def test_cgo_residual():
    value, residual = disloc.elastic_cgo(3.0, (0.6, 0.8), (0.0, 0.0), 1.0, 2.0, 1.0, (0.2, 0.1))
    assert max(abs(r) for r in residual) < 1e-9 * max(abs(v) for v in value) * 30


def test_jump_relations_report():
    rep = disloc.run(disloc.load_config("c11_jump_relations.json"))
    assert rep["schema"] == "report_v1"
    assert rep["pass"]
    assert rep["results"]["max_g_violation"] <= 1e-14
    assert rep["csv"]["relation_sequence"].startswith("segment,")


def test_missing_layers_pointer():
    cfg = {"kind": "forward", "h": 0.1, "outer": [[0, 0], [1, 0], [1, 1], [0, 1]],
           "measurement": {"edges": [2]}}
    with pytest.raises(disloc.ValidationError, match="/layers"):
        disloc.run(cfg)


def test_determinism():
    cfg = {"kind": "cgo_check", "seed": 4, "draws": 3, "points": 4}
    a, b = disloc.run(cfg), disloc.run(cfg)
    assert a["csv"] == b["csv"]
    assert disloc.run(cfg, seed=5)["csv"] != a["csv"]


def test_tampered_threshold_isolated():
    res = {n: ok for n, ok, _ in disloc.verify([1, 11], thresholds={"cgo.residual_rel": 1e-30})}
    assert res == {1: False, 11: True}
