import json
import math

import numpy as np
import pytest

from holowidths.legendre import l2_distance, order_one_test_function
from holowidths.multiindex import hyperbolic_cross
from holowidths.recovery import (BPSolution, basis_pursuit_block, block_best_s_term_l1,
                                 block_soft_threshold, operator_norm, rnsp_constants,
                                 rnsp_error_bounds, unknown_reconstruct)
from holowidths.sampling import Measurements, gaussian_sketch, unknown_sample


def sparse_problem(seed, N=200, m=60, K=3, s=5):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, N)) / math.sqrt(m)
    x = np.zeros((N, K))
    x[rng.choice(N, s, replace=False)] = rng.standard_normal((s, K))
    return A, x


def test_block_soft_threshold():
    Z = np.array([[3.0, 4.0], [0.3, 0.4], [0.0, 0.0]])
    out = block_soft_threshold(Z, 1.0)
    np.testing.assert_allclose(out, [[2.4, 3.2], [0, 0], [0, 0]])


def test_operator_norm_close_to_svd():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((30, 80))
    s = np.linalg.svd(A, compute_uv=False)[0]
    assert 0.9 * s <= operator_norm(A) <= s * (1 + 1e-12)


def test_zero_measurements():
    A = gaussian_sketch(10, hyperbolic_cross(8), 1)
    sol = basis_pursuit_block(A, Measurements(np.zeros((10, 2))))
    assert np.all(sol.blocks == 0) and sol.objective == 0 and sol.converged


def test_square_invertible():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((12, 12))
    f = rng.standard_normal((12, 2))
    sol = basis_pursuit_block(A, f, tol=1e-12, max_iter=200000)
    np.testing.assert_allclose(sol.blocks, np.linalg.solve(A, f), atol=1e-8)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        basis_pursuit_block(np.ones((3, 5)), np.ones((4, 1)))
    with pytest.raises(ValueError):
        basis_pursuit_block(np.ones((3, 5)), np.ones((3, 1)), tol=0)


def test_nonconvergence_is_reported():
    A, x = sparse_problem(0)
    sol = basis_pursuit_block(A, A @ x, max_iter=5)
    assert not sol.converged and sol.iterations == 5


def test_callback_receives_progress():
    A, x = sparse_problem(1)
    seen = []
    basis_pursuit_block(A, A @ x, callback=lambda i, r, o: seen.append((i, r, o)))
    assert seen and all(r >= 0 and o >= 0 for _, r, o in seen)


def test_exact_recovery_sparse():
    hits = 0
    for t in range(20):
        A, x = sparse_problem(100 + t)
        sol = basis_pursuit_block(A, A @ x)
        assert sol.residual_norm == pytest.approx(np.linalg.norm(A @ sol.blocks - A @ x))
        assert sol.objective == pytest.approx(np.linalg.norm(sol.blocks, axis=1).sum())
        if sol.converged:
            assert sol.residual_norm <= 1e-9 * max(1, np.linalg.norm(A @ x))
        hits += np.linalg.norm(sol.blocks - x) < 1e-6
    assert hits >= 18


def test_objective_matches_convex_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(7)
    for _ in range(8):
        N, K, m = int(rng.integers(6, 13)), int(rng.integers(1, 3)), int(rng.integers(3, 7))
        A = rng.standard_normal((m, N))
        f = rng.standard_normal((m, K))
        Z = cp.Variable((N, K))
        prob = cp.Problem(cp.Minimize(cp.sum(cp.norm(Z, 2, axis=1))), [A @ Z == f])
        prob.solve()
        sol = basis_pursuit_block(A, f, tol=1e-10, max_iter=200000)
        assert sol.objective == pytest.approx(prob.value, abs=1e-4)


def test_row_permutation_invariance():
    A, x = sparse_problem(5)
    perm = np.random.default_rng(1).permutation(A.shape[0])
    s1 = basis_pursuit_block(A, A @ x)
    s2 = basis_pursuit_block(A[perm], (A @ x)[perm])
    np.testing.assert_allclose(s1.blocks, s2.blocks, atol=1e-7)


def test_solution_persistence(tmp_path):
    S = hyperbolic_cross(6)
    sol = BPSolution(np.arange(len(S) * 2, dtype=float).reshape(-1, 2) / 3, 1e-10, 4.5, 17, True)
    sol.save(tmp_path / "sol.csv", S)
    meta = json.loads((tmp_path / "sol.json").read_text())
    assert meta == {"converged": True, "iterations": 17, "objective": 4.5, "residual_norm": 1e-10}
    back, S2 = BPSolution.load(tmp_path / "sol.csv")
    assert S2 == S and np.array_equal(back.blocks, sol.blocks) and back.iterations == 17


def test_unknown_reconstruct():
    S = hyperbolic_cross(7)
    zero = unknown_reconstruct(BPSolution(np.zeros((len(S), 1)), 0, 0, 0, True), S)
    assert np.all(zero(np.zeros((3, zero.active_dims))) == 0)
    rng = np.random.default_rng(2)
    B1, B2 = rng.normal(size=(2, len(S), 2))
    Y = rng.uniform(-1, 1, (5, S.max_dim))
    f1 = unknown_reconstruct(BPSolution(B1, 0, 0, 0, True), S)
    f2 = unknown_reconstruct(BPSolution(B2, 0, 0, 0, True), S)
    f3 = unknown_reconstruct(BPSolution(2 * B1 - B2, 0, 0, 0, True), S)
    np.testing.assert_allclose(f3(Y), 2 * f1(Y) - f2(Y), atol=1e-12)


def test_unknown_pipeline_exact_case_matches_truncation():
    # f has one coefficient inside the cross and one outside
    f = order_one_test_function([0.8, 0, 0, 0, 0, 0, 0, 0, 0, 0.3], [1.0])
    meas, A, Lam = unknown_sample(f, 64, 11, 2)
    sol = basis_pursuit_block(A, meas)
    truncation = 0.3
    assert l2_distance(sol.coefficients(Lam), f.truth_coeffs) == pytest.approx(truncation, abs=1e-6)


def test_rnsp_constants():
    c1, c2 = rnsp_constants(0.5)
    assert c1 == pytest.approx(6.0) and c2 == pytest.approx(9.0)
    assert rnsp_error_bounds(0.5, 4, 0.0) == (0.0, 0.0)
    l1, l2 = rnsp_error_bounds(0.5, 4, 2.0)
    assert l1 == pytest.approx(12.0) and l2 == pytest.approx(9.0)
    c1, c2 = rnsp_constants(1e-12)
    assert c1 == pytest.approx(2.0) and c2 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rnsp_constants(1.0)


def test_block_best_s_term():
    B = np.array([[3.0, 4.0], [1.0, 0.0], [0.0, 2.0]])
    assert block_best_s_term_l1(B, 0) == pytest.approx(8.0)
    assert block_best_s_term_l1(B, 1) == pytest.approx(3.0)
    assert block_best_s_term_l1(B, 3) == 0.0
