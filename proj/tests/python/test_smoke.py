import math
import os
import subprocess

import numpy as np
import pytest

import gam


@pytest.fixture
def toy_cloud():
    return gam.validate_cloud(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, math.sqrt(2.0)]]))


def test_validate_cloud_rejects_bad_input():
    with pytest.raises(gam.GamError):
        gam.validate_cloud(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        gam.validate_cloud(np.array([[0.0, np.nan, 0.0]]))


def test_toy_edge_gradient(toy_cloud):
    nbrs = gam.ball_query(toy_cloud, [0], radius=3.0, k=2)
    edges = gam.edge_geometry(toy_cloud, nbrs)
    assert edges.grad.shape == (1, 2)
    assert edges.grad[0, 0] == 0.0
    assert edges.grad[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert edges.dist[0, 1] == pytest.approx(2.0)


def test_search_matches_numpy_reference():
    rng = np.random.default_rng(0)
    pts = rng.random((50, 3))
    cloud = gam.validate_cloud(pts)
    centers = gam.farthest_point_sample(cloud, 5, seed=3)
    assert centers[0] == 3
    assert len(set(centers)) == 5
    nbrs = gam.knn(cloud, centers, 4)
    ids = nbrs.neighbor_ids
    for s, c in enumerate(centers):
        d = np.sum((pts - pts[c]) ** 2, axis=1)
        assert list(ids[s]) == list(np.lexsort((np.arange(50), d))[:4])
    brute = gam.ball_query(cloud, centers, 0.3, 6)
    grid = gam.ball_query(cloud, centers, 0.3, 6, grid=True)
    assert np.array_equal(brute.neighbor_ids, grid.neighbor_ids)


def test_gradient_vectors_are_unit_and_match_depth_gradients():
    rel = np.random.default_rng(1).uniform(-1, 1, size=(40, 3))
    g, defined = gam.gradient_vectors(rel, k=4)
    assert defined.all()
    assert np.allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-12)
    dzdx, dzdy, _ = gam.depth_gradients(rel, k=4)
    v = np.stack([dzdx.ravel(), dzdy.ravel(), np.ones(40)], axis=1)
    assert np.allclose(v / np.linalg.norm(v, axis=1, keepdims=True), g, atol=1e-12)


def test_forward_and_attention_range():
    rng = np.random.default_rng(2)
    cloud = gam.validate_cloud(rng.random((64, 3)), rng.standard_normal((64, 4)))
    config = gam.GamConfig()
    config.n_centers = 8
    config.k_neighbors = 6
    config.radius = 0.4
    params = gam.init_params(config, 4, 5, seed=1)
    assert params.phi_w.shape == (5, 4)
    f_out, pooled = gam.gam_forward(cloud, config, params)
    assert f_out.shape == (48, 5)
    assert pooled.shape == (8, 5)
    assert np.allclose(pooled, f_out.reshape(8, 6, 5).max(axis=1))

    nbrs = gam.ball_query(cloud, gam.farthest_point_sample(cloud, 8), 0.4, 6)
    a = gam.attention_weights(gam.edge_geometry(cloud, nbrs), params, config)
    assert a.shape == (8, 6)
    assert ((a > 0) & (a < 1)).all()


def test_lambda_is_irrelevant_without_attention():
    rng = np.random.default_rng(3)
    cloud = gam.validate_cloud(rng.random((32, 3)), rng.standard_normal((32, 2)))
    config = gam.GamConfig()
    config.n_centers = 4
    config.k_neighbors = 4
    config.radius = 0.5
    config.use_distance = False
    config.use_gradient = False
    params = gam.init_params(config, 2, 3)
    outputs = []
    for lam in (0.0, 0.5, 10.0):
        config.lambda_ = lam
        outputs.append(gam.gam_forward(cloud, config, params)[0])
    assert np.array_equal(outputs[0], outputs[1])
    assert np.array_equal(outputs[0], outputs[2])


def test_io_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    coords = rng.random((20, 3)).astype(np.float32).astype(np.float64)
    cloud = gam.validate_cloud(coords)
    gam.write_cloud(cloud, tmp_path / "c.pcf", format="pcf")
    assert np.array_equal(gam.read_cloud(tmp_path / "c.pcf").coords, coords)
    gam.write_cloud(cloud, tmp_path / "c.xyz")
    assert np.allclose(gam.read_cloud(tmp_path / "c.xyz").coords, coords, atol=1e-6)
    with pytest.raises(gam.GamError):
        gam.write_cloud(cloud, tmp_path / "c.bin", format="ply")


def test_bench_gradcheck_and_demo():
    config = gam.GamConfig()
    config.n_centers = 64
    config.k_neighbors = 8
    report = gam.bench_gradient_methods(gam.synthetic_cloud(512), config, reps=10)
    assert report["zenith_azimuth"]["median_speedup"] > 1.0
    assert len(report["normal"]["times_ms"]) == 10

    gc = gam.GamConfig()
    gc.n_centers = 2
    gc.k_neighbors = 4
    gc.radius = 10.0
    assert gam.gradcheck(gc)["max_rel_error"] < 1e-4

    shapes = gam.generate_shapes(2, 0.0, seed=1, points=32)
    assert [label for _, label in shapes[:3]] == ["sphere", "cube", "plane"]
    dc = gam.GamConfig()
    dc.n_centers = 8
    dc.k_neighbors = 8
    dc.radius = 0.4
    result = gam.train_classifier(3, 0.01, dc, epochs=1)
    assert result["kind"] == "train_report"
    assert 0.0 <= result["test_accuracy"] <= 1.0


def test_cli_tool_runs():
    tool = os.environ.get("GAM_TOOL")
    if not tool:
        pytest.skip("GAM_TOOL not set")
    done = subprocess.run([tool, "gradcheck"], capture_output=True, text=True)
    assert done.returncode == 0
    assert '"pass": true' in done.stdout
    assert subprocess.run([tool, "nope"], capture_output=True).returncode == 1
