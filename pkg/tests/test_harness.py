import numpy as np
import pytest

from diffwos import (
    AblationLevel,
    AblationReport,
    BVPSpec,
    RngStream,
    SolverConfig,
    default_ablation_scene,
    equal_time_comparison,
    rmse_sweep,
)
from diffwos.errors import ConfigError
from diffwos.harness import _decompose


def test_decomposition_identity_synthetic():
    rng = np.random.default_rng(0)
    samples = rng.normal(2.0, 0.5, size=(64, 5))
    reference = np.full(5, 1.7)
    rmse, bias, var = _decompose(samples, reference)
    assert rmse ** 2 == pytest.approx(bias ** 2 + var, rel=1e-12)
    # bias toward the true offset 0.3, variance near 0.25
    assert bias == pytest.approx(0.3, abs=0.1)
    assert var == pytest.approx(0.25, rel=0.4)


def test_report_decomposition_check_rejects_inconsistent():
    report = AblationReport(axis="eps", reference="x")
    report.levels.append(AblationLevel(0.1, 1.0, 0.5, 0.75, 10, 0.0))
    assert report.check_decomposition()
    report.levels.append(AblationLevel(0.2, 1.0, 0.9, 0.75, 10, 0.0))
    with pytest.raises(ConfigError):
        report.check_decomposition()


def test_default_ablation_scene_shape():
    scene, weights = default_ablation_scene(40)
    assert scene.n_params == 80
    assert weights.shape == (80,)
    assert np.all(weights[1::2] == 1.0) and np.all(weights[::2] == 0.0)
    assert scene.contains((0.5, 0.5))
    assert not scene.contains((0.99, 0.99))


def test_rmse_sweep_reproducible_and_consistent():
    scene, weights = default_ablation_scene(24)
    bvp = BVPSpec(sigma=0.0)
    cfg = SolverConfig(eps=1e-2)
    pts = [(0.5, 0.5), (0.45, 0.6)]
    # g restricts the ambient field x1 + x2, which a rigid translation
    # of the boundary leaves unchanged, so the true derivative is zero
    ref = np.zeros(len(pts))
    kwargs = dict(points=pts, weights=weights, n_seeds=3, walks=4)
    r1 = rmse_sweep(scene, bvp, "eps", [1e-2, 5e-2], ref, cfg,
                    RngStream(3), **kwargs)
    r2 = rmse_sweep(scene, bvp, "eps", [1e-2, 5e-2], ref, cfg,
                    RngStream(3), **kwargs)
    for a, b in zip(r1.levels, r2.levels):
        assert a.rmse == b.rmse and a.bias == b.bias and a.variance == b.variance
    assert r1.check_decomposition()


def test_rmse_sweep_unknown_axis():
    scene, weights = default_ablation_scene(16)
    with pytest.raises(ConfigError):
        rmse_sweep(scene, BVPSpec(0.0), "banana", [1], [0.0],
                   SolverConfig(eps=1e-2), RngStream(0), [(0.5, 0.5)],
                   weights=weights, n_seeds=2, walks=2)


def test_ablation_csv(tmp_path):
    report = AblationReport(axis="eps", reference="analytic")
    report.levels.append(AblationLevel(0.01, 0.5, 0.25, 0.1875, 100, 1.5))
    path = tmp_path / "ablation.csv"
    report.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("axis,level,rmse")
    assert lines[1].split(",")[0] == "eps"


def test_equal_time_zero_budget_empty():
    scene, weights = default_ablation_scene(16)
    report = equal_time_comparison(scene, BVPSpec(0.0), SolverConfig(eps=1e-2),
                                   0.0, [(0.5, 0.5)], [1.0], RngStream(0),
                                   weights=weights)
    assert report.results == []


def test_equal_time_produces_both_methods():
    scene, weights = default_ablation_scene(16)
    report = equal_time_comparison(scene, BVPSpec(0.0), SolverConfig(eps=1e-2),
                                   0.1, [(0.5, 0.5)], [1.0], RngStream(1),
                                   weights=weights, fd_h=0.05)
    methods = {r.method for r in report.results}
    assert methods == {"diff_wos", "fd"}
    for r in report.results:
        assert r.repetitions >= 1
        assert np.isfinite(r.rmse)
