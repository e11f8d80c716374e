"""Tests for the interaction-screening objective, solver, and recovery."""

import math

import numpy as np
import pytest

from phasefield.circular import wrap
from phasefield.iso import (
    IsoSolution,
    NodeProblem,
    empirical_correlation,
    group_soft_threshold,
    iso_gradient,
    iso_objective,
    lambda_default,
    recover_structure,
    refit_unregularized,
    solve_node,
)
from phasefield.model import (
    GraphStructure,
    PhaseDataset,
    grid4_structure,
    random_tree_structure,
    uniform_coupling_model,
)
from phasefield.sampler import GibbsConfig, gibbs_sample, gibbs_sample_batch, sample_pair


def uniform_dataset(rng, n, p):
    return PhaseDataset(rng.uniform(-np.pi, np.pi, size=(n, p)))


def true_theta_for(problem: NodeProblem, model) -> np.ndarray:
    """Generating natural parameters laid out on a node problem's axes."""
    theta = np.zeros(problem.dim)
    for col, k in enumerate(problem.neighbors):
        edge = (min(problem.u, k), max(problem.u, k))
        if edge in model.structure.edges:
            c = model.coupling(*edge)
            theta[2 * col] = c.kappa * math.cos(c.mu)
            theta[2 * col + 1] = c.kappa * math.sin(c.mu)
    return theta


def objective_oracle(problem, theta, d):
    """Naive per-sample summation of the screening objective."""
    total = 0.0
    for row in d.values:
        expo = 0.0
        for col, k in enumerate(problem.neighbors):
            i, j = (problem.u, k) if problem.u < k else (k, problem.u)
            diff = row[j] - row[i]
            expo += theta[2 * col] * math.cos(diff) + theta[2 * col + 1] * math.sin(diff)
        total += math.exp(-expo)
    return total / d.n


class TestObjective:
    def test_zero_theta_is_one(self):
        rng = np.random.default_rng(0)
        d = uniform_dataset(rng, 100, 4)
        problem = NodeProblem(1, 4)
        assert iso_objective(problem, np.zeros(problem.dim), d) == 1.0

    def test_single_sample_single_edge(self):
        d = PhaseDataset(np.array([[0.3, 0.3]]))
        problem = NodeProblem(0, 2)
        assert iso_objective(problem, np.array([1.0, 0.0]), d) == pytest.approx(
            math.exp(-1.0), rel=1e-15
        )

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = int(rng.integers(2, 6))
            n = int(rng.integers(5, 40))
            d = uniform_dataset(rng, n, p)
            problem = NodeProblem(int(rng.integers(0, p)), p)
            theta = rng.normal(0, 0.8, size=problem.dim)
            assert iso_objective(problem, theta, d) == pytest.approx(
                objective_oracle(problem, theta, d), rel=1e-12
            )

    def test_convex_along_segments(self):
        rng = np.random.default_rng(2)
        d = uniform_dataset(rng, 60, 4)
        problem = NodeProblem(2, 4)
        for _ in range(100):
            t1 = rng.normal(0, 1, size=problem.dim)
            t2 = rng.normal(0, 1, size=problem.dim)
            t = rng.uniform()
            lhs = iso_objective(problem, t * t1 + (1 - t) * t2, d)
            rhs = t * iso_objective(problem, t1, d) + (1 - t) * iso_objective(
                problem, t2, d
            )
            assert lhs <= rhs + 1e-10


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(3)
        step = 1e-5
        worst = 0.0
        for _ in range(20):
            p = int(rng.integers(2, 7))
            d = uniform_dataset(rng, int(rng.integers(10, 60)), p)
            problem = NodeProblem(int(rng.integers(0, p)), p)
            theta = rng.normal(0, 0.5, size=problem.dim)
            grad = iso_gradient(problem, theta, d)
            for axis in range(problem.dim):
                e = np.zeros(problem.dim)
                e[axis] = step
                fd = (
                    iso_objective(problem, theta + e, d)
                    - iso_objective(problem, theta - e, d)
                ) / (2 * step)
                worst = max(worst, abs(fd - grad[axis]))
        assert worst < 1e-6

    def test_aligned_edge_component(self):
        d = PhaseDataset(np.array([[0.4, 0.4, 1.0]]))
        problem = NodeProblem(0, 3)
        grad = iso_gradient(problem, np.zeros(problem.dim), d)
        # neighbor 1 is the first candidate; its cosine component sees
        # y_1 - y_0 = 0 and exp(0) weights, giving exactly -1
        assert grad[0] == pytest.approx(-1.0, rel=1e-15)

    def test_concentration_bound_at_truth(self):
        rng = np.random.default_rng(4)
        p, n, eps = 6, 3000, 0.05
        models = [
            uniform_coupling_model(random_tree_structure(p, rng), kappa=1.0)
            for _ in range(50)
        ]
        datasets = gibbs_sample_batch(models, n, GibbsConfig(burn_in=5000, seed=5))
        bound = 4 * math.sqrt(math.log(4 * p / eps) / n)
        hits = 0
        for m, d in zip(models, datasets):
            problem = NodeProblem(0, p)
            grad = iso_gradient(problem, true_theta_for(problem, m), d)
            if np.max(np.abs(grad)) < bound:
                hits += 1
        assert hits >= 45


class TestLambdaDefault:
    def test_structure_mode_value(self):
        expected = 4 * math.sqrt(math.log(8 * 64**2 / 0.05) / 4000)
        assert lambda_default(64, 4000, 0.05, "structure") == pytest.approx(
            expected, rel=1e-15
        )

    def test_parameter_mode_value(self):
        expected = 4 * math.sqrt(math.log(8 * 32 / 0.01) / 500)
        assert lambda_default(32, 500, 0.01, "parameter") == pytest.approx(
            expected, rel=1e-15
        )

    def test_sample_size_scaling(self):
        a = lambda_default(10, 1000, 0.05, "structure")
        b = lambda_default(10, 4000, 0.05, "structure")
        assert a / b == pytest.approx(2.0, rel=1e-12)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            lambda_default(4, 0)
        with pytest.raises(ValueError):
            lambda_default(4, 10, eps=1.5)
        with pytest.raises(ValueError):
            lambda_default(4, 10, mode="other")


class TestGroupProx:
    def test_magnitude_rule_exact(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            v = rng.normal(0, 2, size=8)
            tau = rng.uniform(0, 3)
            out = group_soft_threshold(v, tau)
            for g in range(4):
                vin = v[2 * g : 2 * g + 2]
                vout = out[2 * g : 2 * g + 2]
                m = np.linalg.norm(vin)
                expected = max(m - tau, 0.0)
                assert np.linalg.norm(vout) == pytest.approx(expected, abs=1e-12)
                if expected > 0:
                    # direction preserved
                    assert np.allclose(vout / np.linalg.norm(vout), vin / m, atol=1e-12)

    def test_zero_group_stays_zero(self):
        out = group_soft_threshold(np.zeros(4), 1.0)
        assert np.array_equal(out, np.zeros(4))


class TestSolveNode:
    def test_huge_lambda_gives_zero(self):
        rng = np.random.default_rng(7)
        d = uniform_dataset(rng, 200, 4)
        sol = solve_node(NodeProblem(0, 4), d, lam=1e6)
        assert np.array_equal(sol.theta, np.zeros(6))
        assert sol.converged

    def test_pair_consistency_at_lambda_zero(self):
        d = sample_pair(1.0, 0.5, 100000, np.random.default_rng(8))
        sol = solve_node(NodeProblem(0, 2), d, lam=0.0)
        assert sol.converged
        (kappa, mu) = sol.edge_couplings()[1]
        assert abs(kappa - 1.0) < 0.05
        assert abs(wrap(mu - 0.5)) < 0.05

    def test_beats_generating_parameters(self):
        rng = np.random.default_rng(9)
        m = uniform_coupling_model(random_tree_structure(5, rng), kappa=1.0, mu=0.3)
        d = gibbs_sample(m, 10000, GibbsConfig(seed=10))
        for u in range(5):
            problem = NodeProblem(u, 5)
            sol = solve_node(problem, d, lam=0.0)
            f_hat = iso_objective(problem, sol.theta, d)
            f_star = iso_objective(problem, true_theta_for(problem, m), d)
            assert f_hat <= f_star + 1e-9

    def test_trace_non_increasing(self):
        rng = np.random.default_rng(11)
        m = uniform_coupling_model(random_tree_structure(4, rng), kappa=1.0)
        d = gibbs_sample(m, 2000, GibbsConfig(burn_in=2000, seed=12))
        for lam in [0.0, 0.05, 0.3]:
            sol = solve_node(NodeProblem(1, 4), d, lam=lam)
            trace = np.array(sol.objective_trace)
            assert np.all(np.diff(trace) <= 0.0)

    def test_unconverged_flag(self):
        rng = np.random.default_rng(13)
        d = uniform_dataset(rng, 500, 4)
        sol = solve_node(NodeProblem(0, 4), d, lam=0.01, max_iter=2)
        assert not sol.converged
        assert sol.iterations == 2

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        d = uniform_dataset(rng, 300, 3)
        s1 = solve_node(NodeProblem(0, 3), d, lam=0.02)
        s2 = solve_node(NodeProblem(0, 3), d, lam=0.02)
        assert np.array_equal(s1.theta, s2.theta)

    def test_restricted_neighbors(self):
        rng = np.random.default_rng(15)
        d = uniform_dataset(rng, 100, 5)
        problem = NodeProblem(2, 5, neighbors=(0, 4))
        assert problem.dim == 4
        sol = solve_node(problem, d, lam=0.0)
        assert sol.theta.shape == (4,)


class TestEmpiricalCorrelation:
    def test_matches_outer_product_oracle(self):
        rng = np.random.default_rng(16)
        d = uniform_dataset(rng, 50, 4)
        problem = NodeProblem(1, 4)
        diag = empirical_correlation(problem, d)
        stats = problem.stats_matrix(d)
        oracle = sum(np.outer(row, row) for row in stats) / d.n
        assert np.allclose(diag.matrix, oracle, atol=1e-12)

    def test_trace_and_bounds(self):
        rng = np.random.default_rng(17)
        d = uniform_dataset(rng, 200, 6)
        problem = NodeProblem(0, 6)
        diag = empirical_correlation(problem, d)
        assert np.trace(diag.matrix) == pytest.approx(5.0, abs=1e-10)
        assert np.all(diag.matrix >= -1.0 - 1e-12) and np.all(diag.matrix <= 1.0 + 1e-12)
        assert np.all(np.diag(diag.matrix) >= 0.0)

    def test_symmetric_psd(self):
        rng = np.random.default_rng(18)
        d = uniform_dataset(rng, 100, 5)
        diag = empirical_correlation(NodeProblem(3, 5), d)
        assert np.allclose(diag.matrix, diag.matrix.T, atol=1e-14)
        assert diag.min_eigenvalue >= -1e-10


class TestRecovery:
    def test_tree_recovery_smoke(self):
        # group-penalty shrinkage is ~2.5*lambda, so n must be large enough
        # that true couplings stay above the 0.5 declaration threshold
        rng = np.random.default_rng(19)
        models = [
            uniform_coupling_model(random_tree_structure(5, rng), kappa=1.0)
            for _ in range(5)
        ]
        datasets = gibbs_sample_batch(models, 16000, GibbsConfig(seed=20))
        hits = sum(
            recover_structure(d).structure.edges == m.structure.edges
            for m, d in zip(models, datasets)
        )
        assert hits >= 4

    def test_empty_graph_recovery(self):
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(20):
            d = uniform_dataset(rng, 4000, 6)
            result = recover_structure(d)
            hits += result.structure.n_edges == 0
        assert hits >= 19

    def test_unreliable_flag_on_iteration_cap(self):
        rng = np.random.default_rng(22)
        m = uniform_coupling_model(random_tree_structure(4, rng), kappa=1.0)
        d = gibbs_sample(m, 1000, GibbsConfig(burn_in=1000, seed=22))
        result = recover_structure(d, max_iter=1)
        assert not result.reliable

    def test_jobs_do_not_change_result(self):
        rng = np.random.default_rng(23)
        m = uniform_coupling_model(random_tree_structure(5, rng), kappa=1.0)
        d = gibbs_sample(m, 2000, GibbsConfig(burn_in=2000, seed=24))
        r1 = recover_structure(d, jobs=1)
        r2 = recover_structure(d, jobs=4)
        assert r1.structure == r2.structure
        assert np.array_equal(r1.kappa_hat, r2.kappa_hat)


class TestRefit:
    def test_recovers_cycle_parameters(self):
        g = grid4_structure(2, 2)  # 4-cycle
        m = uniform_coupling_model(g, kappa=1.0, mu=0.4)
        d = gibbs_sample(m, 10000, GibbsConfig(seed=25))
        refit, solution = refit_unregularized(d, g)
        assert solution.all_converged
        for idx in range(g.n_edges):
            assert abs(refit.kappa[idx] - 1.0) < 0.15
            assert abs(wrap(refit.mu[idx] - 0.4)) < 0.1

    def test_empty_structure(self):
        rng = np.random.default_rng(26)
        d = uniform_dataset(rng, 100, 3)
        refit, solution = refit_unregularized(d, GraphStructure(3, ()))
        assert refit.structure.n_edges == 0

    def test_endpoint_estimates_equal_on_pair(self):
        d = sample_pair(1.2, -0.6, 5000, np.random.default_rng(27))
        g = GraphStructure(2, ((0, 1),))
        refit, solution = refit_unregularized(d, g)
        thetas = [s.theta for s in solution.nodes]
        assert np.allclose(thetas[0], thetas[1], atol=1e-9)
        tc, ts = thetas[0]
        assert refit.kappa[0] == pytest.approx(math.hypot(tc, ts), abs=1e-9)


class TestErrorScaling:
    def test_error_shrinks_with_sample_size(self):
        rng = np.random.default_rng(28)
        p, trials = 5, 30
        models = [
            uniform_coupling_model(random_tree_structure(p, rng), kappa=1.0)
            for _ in range(trials)
        ]
        errors = {}
        for n in (500, 2000):
            datasets = gibbs_sample_batch(models, n, GibbsConfig(burn_in=5000, seed=29))
            lam = lambda_default(p, n, 0.05, "parameter")
            per_trial = []
            for m, d in zip(models, datasets):
                err_sq = 0.0
                for u in range(p):
                    problem = NodeProblem(u, p)
                    sol = solve_node(problem, d, lam=lam)
                    err_sq += float(
                        np.sum((sol.theta - true_theta_for(problem, m)) ** 2)
                    )
                per_trial.append(math.sqrt(err_sq))
            errors[n] = float(np.median(per_trial))
        assert errors[2000] < errors[500]
