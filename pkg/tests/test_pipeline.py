import dataclasses
import json
import math

import numpy as np
import pytest

from robust_pgo2d import (
    C1_SQUARED,
    C2_SQUARED,
    CHI2_99_1DOF,
    CHI2_99_2DOF,
    Grid,
    InjectionSpec,
    PoseGraph,
    SyntheticSpec,
    compute_ate,
    degnc_laf,
    generate_synthetic,
    inject_outliers,
    pgo_cost,
    precision_recall,
    solve_with_known_inliers,
)
from robust_pgo2d.pipeline import consistent_loop_closures


def bisect(cdf, target, lo=0.0, hi=100.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if cdf(mid) < target else (lo, mid)
    return 0.5 * (lo + hi)


class TestThresholds:
    def test_one_dof_quantile(self):
        q = bisect(lambda x: math.erf(math.sqrt(x / 2.0)), 0.99)
        assert CHI2_99_1DOF == pytest.approx(q, abs=1e-9)

    def test_two_dof_quantile(self):
        q = bisect(lambda x: 1.0 - math.exp(-x / 2.0), 0.99)
        assert CHI2_99_2DOF == pytest.approx(q, abs=1e-9)

    def test_defaults_square_the_quantile(self):
        assert C1_SQUARED == pytest.approx(CHI2_99_1DOF**2)
        assert C2_SQUARED == pytest.approx(CHI2_99_2DOF**2)


def rejected(graph, report):
    return set(graph.loop_indices.tolist()) - report.inlier_set


@pytest.fixture(scope="module")
def noiseless_case():
    g, gt = generate_synthetic(SyntheticSpec(Grid(10, 10), loop_closure_probability=0.3, rng_seed=1))
    noisy, injected = inject_outliers(g, InjectionSpec(0.2, rng_seed=1))
    return noisy, gt, injected, degnc_laf(noisy)


class TestPipeline:
    def test_noiseless_outlier_free(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(8, 8), loop_closure_probability=0.3))
        report = degnc_laf(g)
        assert report.inlier_set == set(g.loop_indices.tolist())
        assert compute_ate(report.estimate, gt)[0] < 1e-9
        assert report.converged

    def test_noiseless_with_outliers(self, noiseless_case):
        g, gt, injected, report = noiseless_case
        assert precision_recall(rejected(g, report), injected) == (1.0, 1.0)
        ate_pos, ate_rot = compute_ate(report.estimate, gt)
        assert ate_pos < 1e-6 and ate_rot < 1e-6
        assert report.converged
        assert report.final_cost == pytest.approx(pgo_cost(g, report.estimate, report.inlier_set), abs=1e-12)

    def test_estimate_is_anchored(self, noiseless_case):
        est = noiseless_case[3].estimate
        assert est.theta[0] == 0.0
        np.testing.assert_array_equal(est.t[0], [0.0, 0.0])
        assert np.all((est.theta > -np.pi) & (est.theta <= np.pi))

    def test_rotation_only_outlier_caught_by_angle_stage(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(8, 8), 0.01, 0.05, 0.4, rng_seed=3))
        victim = int(g.loop_indices[5])
        edges = list(g.edges)
        edges[victim] = dataclasses.replace(edges[victim], dtheta=edges[victim].dtheta + 2.0)
        bad = PoseGraph(g.num_vertices, edges)
        report = degnc_laf(bad)
        pos = int(np.flatnonzero(bad.loop_indices == victim)[0])
        assert report.ara_weights[pos] == 0.0
        assert victim not in report.inlier_set

    def test_noisy_close_to_known_inliers(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(12, 12), 0.01, 0.05, 0.2, rng_seed=4))
        noisy, injected = inject_outliers(g, InjectionSpec(0.3, rng_seed=4))
        report = degnc_laf(noisy)
        ref = solve_with_known_inliers(g)
        assert precision_recall(rejected(noisy, report), injected) == (1.0, 1.0)
        assert compute_ate(report.estimate, gt)[0] <= 2 * compute_ate(ref, gt)[0]

    def test_report_json(self, noiseless_case):
        g, _, _, report = noiseless_case
        data = json.loads(report.to_json())
        assert set(data["timings"]) == {"regularization", "ara", "ta", "refine"}
        assert len(data["estimate"]) == g.num_vertices
        assert data["inlier_edges"] == sorted(report.inlier_set)
        assert data["converged"] == {"ara": True, "ta": True}

    def test_chain_only_graph(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(3, 3), loop_closure_probability=0.0))
        report = degnc_laf(g)
        assert report.inlier_set == frozenset()
        assert compute_ate(report.estimate, gt)[0] < 1e-9


class TestReadmission:
    def test_consistent_edges_pass_gates(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(6, 6), 0.01, 0.05, 0.4, rng_seed=2))
        noisy, injected = inject_outliers(g, InjectionSpec(0.3, rng_seed=2))
        kept = consistent_loop_closures(noisy, gt.anchored(), C1_SQUARED, C2_SQUARED)
        assert kept == frozenset(g.loop_indices.tolist())
        assert not kept & injected

    def test_recovers_edge_rejected_by_skewed_rotations(self):
        # a rotation-consistent outlier passes the angle stage; without
        # re-admission this cell rejects one genuine loop closure
        g, gt = generate_synthetic(SyntheticSpec(Grid(20, 20), loop_closure_probability=0.2, rng_seed=9))
        noisy, injected = inject_outliers(g, InjectionSpec(0.4, rng_seed=1009), extent=gt.t)
        report = degnc_laf(noisy)
        assert report.readmitted
        assert precision_recall(rejected(noisy, report), injected) == (1.0, 1.0)
