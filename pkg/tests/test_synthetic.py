import numpy as np
import pytest

from robust_pgo2d import Grid, InjectionSpec, RandomWalk, SyntheticSpec, generate_synthetic, inject_outliers
from robust_pgo2d.geometry import wrap_angles
from robust_pgo2d.synthetic import NOISELESS_SIGMA, dead_reckoning, grid_trajectory


class TestLayouts:
    def test_grid_snake(self):
        gt = grid_trajectory(Grid(3, 4))
        assert len(gt) == 12
        steps = np.linalg.norm(np.diff(gt.t, axis=0), axis=1)
        np.testing.assert_allclose(steps, 1.0)
        assert gt.theta[0] == 0.0
        assert gt.theta[4] == pytest.approx(np.pi)

    def test_determinism(self):
        spec = SyntheticSpec(RandomWalk(50), 0.01, 0.05, 0.3, rng_seed=9)
        a, gta = generate_synthetic(spec)
        b, gtb = generate_synthetic(spec)
        assert a == b
        np.testing.assert_array_equal(gta.t, gtb.t)

    def test_grid_has_enough_loop_closures(self):
        g, _ = generate_synthetic(SyntheticSpec(Grid(20, 20), 0.01, 0.05, 0.2))
        assert g.num_vertices == 400
        assert g.num_loop_closures >= 40

    def test_precision_floor(self):
        spec = SyntheticSpec(Grid(2, 2))
        assert spec.kappa == spec.tau == pytest.approx(1 / NOISELESS_SIGMA**2)

    @pytest.mark.parametrize("kwargs", [dict(sigma_t=-1.0), dict(loop_closure_probability=1.5)])
    def test_bad_spec(self, kwargs):
        with pytest.raises(ValueError):
            SyntheticSpec(Grid(2, 2), **kwargs)


class TestNoise:
    def test_noise_statistics(self):
        sig_th, sig_t = 0.02, 0.1
        g, gt = generate_synthetic(SyntheticSpec(Grid(40, 40), sig_th, sig_t, 0.5, rng_seed=1))
        i, j = g.frm, g.to
        eth = wrap_angles(g.dtheta - (gt.theta[j] - gt.theta[i]))
        c, s = np.cos(gt.theta[i]), np.sin(gt.theta[i])
        d = gt.t[j] - gt.t[i]
        local = np.stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]], axis=1)
        et = g.dt - local
        assert np.std(eth) == pytest.approx(sig_th, rel=0.05)
        assert np.std(et) == pytest.approx(sig_t, rel=0.05)

    def test_dead_reckoning_noiseless(self):
        g, gt = generate_synthetic(SyntheticSpec(RandomWalk(30), rng_seed=4))
        dr = dead_reckoning(g)
        np.testing.assert_allclose(dr.t, gt.t - gt.t[0], atol=1e-9)


class TestInjection:
    @pytest.mark.parametrize("rate, true_count, expected", [(0.5, 66, 66), (0.2, 100, 25), (0.0, 50, 0)])
    def test_count(self, rate, true_count, expected):
        assert InjectionSpec(rate).count(true_count) == expected

    def test_injected_edges(self):
        g, _ = generate_synthetic(SyntheticSpec(Grid(10, 10), 0.01, 0.05, 0.3, rng_seed=2))
        noisy, injected = inject_outliers(g, InjectionSpec(0.3, rng_seed=5))
        assert len(injected) == InjectionSpec(0.3).count(g.num_loop_closures)
        assert min(injected) == g.num_edges
        assert all(noisy.is_loop[e] for e in injected)
        assert noisy.edges[: g.num_edges] == g.edges

    @pytest.mark.parametrize("rate", [0.1, 0.25, 0.4, 0.5])
    def test_rate_accounting(self, rate):
        g, _ = generate_synthetic(SyntheticSpec(Grid(12, 12), loop_closure_probability=0.3))
        _, injected = inject_outliers(g, InjectionSpec(rate))
        total = len(injected) + g.num_loop_closures
        assert abs(len(injected) - rate * total) <= 1.0

    @pytest.mark.parametrize("seed", range(100))
    def test_no_duplicate_pairs(self, seed):
        g, _ = generate_synthetic(SyntheticSpec(Grid(6, 6), loop_closure_probability=0.5, rng_seed=seed))
        noisy, _ = inject_outliers(g, InjectionSpec(0.5, rng_seed=seed))
        lc = noisy.loop_indices
        keys = {(min(a, b), max(a, b)) for a, b in zip(noisy.frm[lc], noisy.to[lc])}
        assert len(keys) == lc.size
        assert all(b - a > 1 for a, b in keys)

    def test_too_many(self):
        g, gt = generate_synthetic(SyntheticSpec(Grid(1, 4), loop_closure_probability=0.0))
        g = g.with_edges([g.edges[0].__class__(0, 3, 0.0, (3.0, 0.0), 1.0, 1.0)])
        # 6 pairs, 3 consecutive, 1 taken: room for 2 but 9 requested
        with pytest.raises(ValueError, match="only 2"):
            inject_outliers(g, InjectionSpec(0.9))

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            InjectionSpec(1.0)
