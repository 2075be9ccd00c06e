"""Smoke tests for the python surface of the C++ core."""

import json
import math

import numpy as np
import pytest

import qdmae


def grid(alpha=0.5, min_quality=0.0):
    return qdmae.Archive(
        qdmae.ArchiveConfig(
            lower_bounds=np.array([-2.0, -2.0]),
            upper_bounds=np.array([2.0, 2.0]),
            resolution=[4, 4],
            learning_rate=alpha,
            min_quality=min_quality,
        )
    )


def test_archive_insert_and_metrics():
    archive = grid()
    out = archive.try_insert(np.zeros(3), 40.0, np.array([0.0, 0.0]))
    assert out.accepted
    assert out.delta == 40.0
    assert archive.threshold(out.cell_index) == 20.0
    assert archive.occupancy(out.cell_index) == 1

    rejected = archive.try_insert(np.zeros(3), 10.0, np.array([0.0, 0.0]))
    assert rejected.status == qdmae.InsertStatus.REJECTED
    assert archive.occupant_objective(out.cell_index) == 40.0

    metrics = archive.metrics()
    assert metrics.coverage == pytest.approx(1 / 16)
    assert metrics.qd_score == pytest.approx(40.0 / 16)
    assert metrics.best == 40.0


def test_formulas():
    assert qdmae.convert_learning_rate(0.01, 100**2, 200**2) == pytest.approx(0.0394, abs=1e-4)
    assert qdmae.threshold_closed_form(3, 100.0, 0.0, 0.5) == pytest.approx(87.5)
    assert qdmae.arm_optimal_coverage(100) == pytest.approx(0.8024)


def test_domain_evaluation():
    sphere = qdmae.make_domain("lp_sphere", 10)
    at_optimum = sphere.evaluate(np.full(10, 2.048))
    assert at_optimum.objective == pytest.approx(100.0)

    arm = qdmae.make_domain("arm", 10)
    straight = arm.evaluate(np.zeros(10), with_gradients=True)
    assert straight.measures[0] == pytest.approx(10.0)
    assert straight.measures[1] == pytest.approx(0.0)
    assert straight.objective == pytest.approx(100.0)
    assert straight.measure_jacobian.shape == (2, 10)


def test_heatmap_and_snapshot_export():
    archive = grid(alpha=1.0)
    archive.try_insert(np.zeros(2), 55.0, np.array([-1.9, -1.9]))
    csv = archive.heatmap_csv()
    assert "resolution,4,4" in csv
    assert csv.count("nan") == 15
    snap = json.loads(archive.snapshot_json())
    assert snap["schema"] == "qdmae-archive-v1"
    assert len(snap["cells"]) == 1


def test_tiny_experiment(tmp_path):
    config = json.loads(qdmae.default_config_json("lp_sphere", "cma_mae"))
    config.update(dimension=6, iterations=5, trials=2, emitters=2, batch=8, seed=3,
                  resolution=[8, 8])
    finals = qdmae.run_experiment(json.dumps(config), str(tmp_path / "run"))
    assert len(finals) == 2
    assert all(f["coverage"] > 0 for f in finals)
    assert (tmp_path / "run" / "metrics.csv").exists()

    repeat = qdmae.run_experiment(json.dumps(config))
    assert [f["qd_score"] for f in repeat] == [f["qd_score"] for f in finals]


def test_invalid_inputs_raise():
    archive = grid()
    with pytest.raises(Exception):
        archive.try_insert(np.zeros(3), math.nan, np.array([0.0, 0.0]))
    with pytest.raises(Exception):
        qdmae.convert_learning_rate(2.0, 10, 10)
