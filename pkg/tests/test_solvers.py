import numpy as np
import pytest

from conftest import monotone_affine, random_affine
from vrsplit.core import ConfigError, OracleCounter, RngStream
from vrsplit.estimators import FullBatchFrq, full_batch_constants, vfr_theory
from vrsplit.operators import AffineFiniteSum
from vrsplit.problems import co_hypomonotone_instance
from vrsplit.resolvents import l1_map, linear_map, zero_map
from vrsplit.solvers import (SolverConfig, fbs_residual, lyapunov_mu,
                             lyapunov_value, og_update, solve, vfr_update,
                             vfrbs_update)


def run_counter_probe(op, cfg, x0, T=None):
    traj = solve(op, cfg, x0, T=T)
    return traj


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            SolverConfig(method="nope", max_iters=1)
        with pytest.raises(ConfigError):
            SolverConfig(eta=-1.0, max_iters=1)
        with pytest.raises(ConfigError):
            SolverConfig(gamma=0.5, max_iters=1)
        with pytest.raises(ConfigError):
            SolverConfig()  # no budget


class TestVfr:
    def test_first_step_uses_damped_full_value(self):
        op = random_affine(5, 3, 0)
        x0 = RngStream(0).standard_normal(3)
        eta, gamma = 0.2, 0.75
        est = FullBatchFrq(op, gamma)
        est.reset(x0)
        s0 = est.value_for_batch(None, x0, x0)
        x1 = vfr_update(x0, eta, s0)
        assert np.allclose(x1, x0 - eta * (1 - gamma) * op.full(x0), atol=1e-15)

    def test_two_step_hand_iteration(self):
        # single component G x = x, gamma = 3/4, x0 = [1]
        op = AffineFiniteSum(np.eye(1)[None], np.zeros((1, 1)))
        eta, gamma = 0.3, 0.75
        est = FullBatchFrq(op, gamma)
        x0 = np.array([1.0])
        est.reset(x0)
        x1 = vfr_update(x0, eta, est.value_for_batch(None, x0, x0))
        s1 = est.value_for_batch(None, x1, x0)
        assert np.allclose(s1, x1 - 0.75 * x0, atol=1e-15)
        x2 = vfr_update(x1, eta, s1)
        assert np.allclose(x2, x1 - eta * (x1 - 0.75 * x0), atol=1e-15)

    def test_psd_quadratic_best_iterate_decreases(self):
        op = monotone_affine(8, 6, seed=1)
        cfg = SolverConfig(method="vfr", estimator="full", max_iters=1000,
                           record_every=1)
        traj = solve(op, cfg, np.ones(6))
        res = traj.column("residual")
        running_min = np.minimum.accumulate(res)
        assert np.all(np.diff(running_min) <= 0)
        assert running_min[-1] <= 1e-6 * res[0]

    def test_full_batch_runs_are_seed_independent(self):
        op = random_affine(6, 4, 2)
        x0 = np.ones(4)
        t1 = solve(op, SolverConfig(method="vfr", estimator="full",
                                    max_iters=50, seed=1), x0)
        t2 = solve(op, SolverConfig(method="vfr", estimator="full",
                                    max_iters=50, seed=99), x0)
        c1, c2 = t1.to_csv(), t2.to_csv()
        # identical apart from the seed column and config line
        strip = lambda s: [ln.rsplit(",", 1)[0] for ln in s.splitlines()
                           if not ln.startswith("#")]
        assert strip(c1) == strip(c2)

    def test_b_equals_n_reduces_to_exact_for_both_estimators(self):
        op = random_affine(5, 3, 3)
        x0 = np.ones(3)
        ref = solve(op, SolverConfig(method="vfr", estimator="full",
                                     max_iters=30, eta=0.1), x0)
        for est, pcoin in (("lsvrg", 0.4), ("saga", None)):
            t = solve(op, SolverConfig(method="vfr", estimator=est, eta=0.1,
                                       batch_size=5, snapshot_prob=pcoin,
                                       max_iters=30, seed=7), x0)
            a = ref.column("residual")
            b = t.column("residual")
            assert np.allclose(a, b[: a.size], atol=1e-10)

    def test_same_seed_bitwise_reproducible(self):
        op = random_affine(8, 3, 4)
        cfg = dict(method="vfr", estimator="lsvrg", eta=0.05, batch_size=2,
                   snapshot_prob=0.3, max_iters=60, seed=5)
        t1 = solve(op, SolverConfig(**cfg), np.ones(3))
        t2 = solve(op, SolverConfig(**cfg), np.ones(3))
        assert t1.to_csv() == t2.to_csv()

    def test_divergence_guard_flags_run(self):
        # -I is anti-monotone: the iteration must blow up and be flagged
        op = AffineFiniteSum(-np.eye(2)[None], np.zeros((1, 2)))
        cfg = SolverConfig(method="vfr", estimator="full", eta=0.9,
                           max_iters=10**4, record_every=1,
                           divergence_factor=1e6)
        traj = solve(op, cfg, np.ones(2))
        assert traj.diverged
        assert all(np.isfinite(r.residual) for r in traj.records)


class TestOracleAccounting:
    def test_lsvrg_iteration_cost(self):
        n, b, p, K = 12, 3, 0.25, 40
        op = random_affine(n, 3, 5)
        cfg = SolverConfig(method="vfr", estimator="lsvrg", eta=0.01,
                           batch_size=b, snapshot_prob=p, max_iters=K, seed=3)
        traj = solve(op, cfg, np.ones(3))
        # replay the stream to count snapshot refreshes deterministically
        rng = RngStream(3, tag=0)
        refreshes = 0
        for _ in range(K):
            rng.sample_batch(n, b)
            refreshes += rng.flip_coin(p)
        expect = (n + 3 * b * K + n * refreshes) / n
        assert traj.records[-1].epochs == pytest.approx(expect, abs=1e-12)

    def test_saga_iteration_cost(self):
        n, b, K = 10, 2, 25
        op = random_affine(n, 3, 6)
        cfg = SolverConfig(method="vfr", estimator="saga", eta=0.01,
                           batch_size=b, max_iters=K, seed=1)
        traj = solve(op, cfg, np.ones(3))
        assert traj.records[-1].epochs == pytest.approx((n + 3 * b * K) / n)

    def test_og_iteration_cost(self):
        op = random_affine(9, 3, 7)
        cfg = SolverConfig(method="og", eta=0.05, max_iters=15)
        traj = solve(op, cfg, np.ones(3))
        assert traj.records[-1].epochs == pytest.approx((9 + 14 * 9) / 9)

    def test_double_loop_epoch_cost(self):
        n, b = 12, 5  # floor(n/b) = 2 inner iterations per snapshot
        op = random_affine(n, 3, 8)
        inner = n // b
        outers = 3
        cfg = SolverConfig(method="vfr", estimator="dlsvrg", eta=0.01,
                           batch_size=b, max_iters=inner * outers, seed=0)
        traj = solve(op, cfg, np.ones(3))
        expect = (outers * (n + 3 * b * inner)) / n
        assert traj.records[-1].epochs == pytest.approx(expect)

    def test_double_loop_single_inner_with_full_batch_is_deterministic(self):
        # floor(n/b) = 1 refreshes the snapshot at every iterate; with b = n
        # the estimator is exact and the run matches the deterministic one
        n = 6
        op = random_affine(n, 2, 9)
        cfg = SolverConfig(method="vfr", estimator="dlsvrg", eta=0.05,
                           batch_size=n, max_iters=5, seed=0, record_every=1)
        t_dl = solve(op, cfg, np.ones(2))
        cfg_full = SolverConfig(method="vfr", estimator="full", eta=0.05,
                                max_iters=5, record_every=1)
        t_full = solve(op, cfg_full, np.ones(2))
        assert np.allclose(t_dl.column("residual"), t_full.column("residual"),
                           atol=1e-12)

    def test_double_loop_converges_with_minibatch(self):
        op = monotone_affine(12, 4, seed=21)
        cfg = SolverConfig(method="vfr", estimator="dlsvrg", eta=None,
                           batch_size=3, snapshot_prob=0.25, max_iters=1500,
                           seed=2)
        traj = solve(op, cfg, np.ones(4))
        assert traj.column("rel_residual")[-1] <= 1e-2

    def test_metric_evaluations_not_counted(self):
        op = random_affine(6, 2, 10)
        base = SolverConfig(method="vfr", estimator="saga", eta=0.01,
                            batch_size=2, max_iters=20, seed=0)
        sparse = SolverConfig(method="vfr", estimator="saga", eta=0.01,
                              batch_size=2, max_iters=20, seed=0,
                              record_every=1)
        e1 = solve(op, base, np.ones(2)).records[-1].epochs
        e2 = solve(op, sparse, np.ones(2)).records[-1].epochs
        assert e1 == e2


class TestVfrbs:
    def test_zero_map_reduces_to_vfr(self):
        op = random_affine(6, 3, 11)
        x0 = np.ones(3)
        kw = dict(estimator="lsvrg", eta=0.05, batch_size=2,
                  snapshot_prob=0.3, max_iters=80, seed=4, record_every=1)
        t_ne = solve(op, SolverConfig(method="vfr", **kw), x0)
        t_ni = solve(op, SolverConfig(method="vfrbs", **kw), x0, T=zero_map())
        assert np.allclose(t_ne.column("residual"), t_ni.column("residual"),
                           atol=1e-12)

    def test_half_damping_collapses_to_plain_splitting(self):
        # direct update-function check at the excluded boundary value
        T = l1_map(0.5)
        x = np.array([0.4, -1.0])
        y = x.copy()  # y = x makes the reflection term vanish at any gamma
        s = np.array([0.3, 0.1])
        eta = 0.5
        y1, x1, v1 = vfrbs_update(x, y, s, eta, 0.5, T)
        expect = T.resolve(eta / 2.0, x - eta * s)
        assert np.allclose(x1, expect, atol=1e-15)
        assert np.allclose(x1 + 0.5 * eta * v1, y1, atol=1e-15)

    def test_nonmonotone_2x2_solves_to_high_accuracy(self):
        inst = co_hypomonotone_instance(0.01)
        op = inst.to_operator()
        T = linear_map(inst.Tmat)
        cfg = SolverConfig(method="vfrbs", estimator="full", kappa=inst.kappa,
                           max_iters=10**4, lipschitz=op.lipschitz,
                           record_every=1)
        traj = solve(op, cfg, np.array([1.5, -0.7]), T=T)
        res = traj.column("residual")
        hits = np.nonzero(res <= 1e-8)[0]
        assert hits.size and hits[0] <= 10**4
        assert not traj.diverged

    def test_resolvent_identity_along_run(self):
        inst = co_hypomonotone_instance(0.05)
        op = inst.to_operator()
        T = linear_map(inst.Tmat)
        gamma, eta = 0.75, 0.4
        y = np.array([0.3, 0.9])
        x = T.resolve(gamma * eta, y)
        est = FullBatchFrq(op, gamma)
        est.reset(x)
        xm = x.copy()
        for _ in range(20):
            s = est.value_for_batch(None, x, xm)
            y, xn, v = vfrbs_update(x, y, s, eta, gamma, T)
            assert np.linalg.norm(xn + gamma * eta * v - y) <= 1e-12
            xm, x = x, xn


class TestOg:
    def test_equal_operator_values_give_gradient_step(self):
        x = np.array([1.0, 2.0])
        g = np.array([0.5, -0.5])
        out, _ = og_update(x, g, g, eta=0.1)
        assert np.allclose(out, x - 0.1 * g, atol=1e-16)

    def test_bilinear_orbit_bounded_where_forward_diverges(self):
        mats = np.array([[[0.0, 1.0], [-1.0, 0.0]]])
        op = AffineFiniteSum(mats, np.zeros((1, 2)))
        eta = 0.1
        x_og = np.array([1.0, 0.0])
        x_fwd = x_og.copy()
        g_prev = op.full(x_og)
        for _ in range(1000):
            g = op.full(x_og)
            x_og, _ = og_update(x_og, g, g_prev, eta)
            g_prev = g
            x_fwd = x_fwd - eta * op.full(x_fwd)
        assert np.linalg.norm(x_og) <= 1.1
        assert np.linalg.norm(x_fwd) >= 10.0

    def test_fixed_point_is_root(self):
        op = monotone_affine(5, 4, seed=12)
        x_star = np.linalg.solve(op.mean_mat, -op.mean_offset)
        cfg = SolverConfig(method="og", eta=None, lipschitz=None,
                           max_iters=2000, estimator="full")
        # og resolves eta from theory constants of the exact estimator
        traj = solve(op, cfg, np.ones(4))
        assert traj.column("residual")[-1] <= 1e-8
        x_check = op.full(x_star)
        assert np.linalg.norm(x_check) <= 1e-12

    def test_og_with_map_records_inclusion_residual(self):
        inst = co_hypomonotone_instance(0.05)
        op = inst.to_operator()
        T = linear_map(inst.Tmat)
        cfg = SolverConfig(method="og", eta=0.3, max_iters=500)
        traj = solve(op, cfg, np.array([1.0, 1.0]), T=T)
        assert traj.column("residual")[-1] <= 1e-6


class TestFbsResidual:
    def test_zero_map_gives_operator_value(self):
        op = random_affine(4, 3, 13)
        x = RngStream(11).standard_normal(3)
        out = fbs_residual(op, zero_map(), 0.5, x)
        assert np.allclose(out, op.full(x), atol=1e-15)
        out2 = fbs_residual(op, None, 0.5, x)
        assert np.allclose(out2, op.full(x), atol=1e-15)

    def test_zero_at_solution(self):
        inst = co_hypomonotone_instance(0.1, g=np.array([0.2, -0.4]))
        op = inst.to_operator()
        T = linear_map(inst.Tmat)
        r = fbs_residual(op, T, 0.7, inst.root())
        assert np.linalg.norm(r) <= 1e-10

    def test_dominated_by_inclusion_residual(self):
        # holds for every element of a *monotone* map
        op = random_affine(5, 2, 22)
        mat = np.array([[0.8, 0.3], [-0.3, 0.4]])  # PSD symmetric part
        T = linear_map(mat)
        rng = RngStream(12)
        for _ in range(50):
            eta = float(rng.uniform(0.05, 2.0))
            x = rng.standard_normal(2)
            v = mat @ x
            lhs = np.linalg.norm(fbs_residual(op, T, eta, x))
            rhs = np.linalg.norm(op.full(x) + v)
            assert lhs <= rhs + 1e-12


class TestLyapunov:
    def test_zero_at_root(self):
        x_star = np.array([1.0, -1.0])
        val = lyapunov_value(x_star, x_star, np.zeros(2), x_star,
                             gamma_eta=0.3, mu=0.4)
        assert val == 0.0

    def test_plain_squared_distance(self):
        x = np.array([2.0, 0.0])
        x_star = np.array([0.0, 0.0])
        val = lyapunov_value(x, x, np.ones(2), x_star, gamma_eta=0.0, mu=0.0)
        assert val == 4.0

    def test_mu_defaults(self):
        assert lyapunov_mu("vfr", 0.75) == pytest.approx(0.375)
        assert lyapunov_mu("vfrbs", 0.75) == pytest.approx(0.25 / 1.25)

    def test_descent_on_monotone_instance(self):
        op = monotone_affine(10, 6, seed=13)
        x_star = np.linalg.solve(op.mean_mat, -op.mean_offset)
        cfg = SolverConfig(method="vfr", estimator="full", max_iters=300,
                           record_every=1)
        traj = solve(op, cfg, np.ones(6), x_star=x_star, record_lyapunov=True)
        lyap = traj.column("lyapunov")
        assert np.all(np.isfinite(lyap))
        assert np.all(np.diff(lyap) <= 1e-10 * np.maximum(1.0, lyap[:-1]))


class TestTheoremBound:
    def test_vfr_bound_holds_deterministically(self):
        op = monotone_affine(12, 5, seed=14)
        theo = vfr_theory(0.75, full_batch_constants(),
                          L=np.sqrt(np.linalg.eigvalsh(op.gram_mean()).max()))
        x_star = np.linalg.solve(op.mean_mat, -op.mean_offset)
        x0 = np.ones(5)
        cfg = SolverConfig(method="vfr", estimator="full", max_iters=500,
                           record_every=1)
        traj = solve(op, cfg, x0)
        res = traj.column("residual")
        r0sq = float(np.dot(x0 - x_star, x0 - x_star))
        from vrsplit.solvers import vfr_residual_bound
        csum = np.cumsum(res ** 2)
        for K in range(res.size):
            bound = vfr_residual_bound(0.75, traj.config["eta_resolved"],
                                       theo.L, r0sq, K)
            assert csum[K] / (K + 1) <= bound * (1 + 1e-9) + 1e-12
