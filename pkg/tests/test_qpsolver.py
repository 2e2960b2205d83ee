import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidscore.qpsolver import (
    InfeasibleProblemError,
    QpProblem,
    Status,
    check_psd,
    feasible_start,
    kkt_report,
    solve,
)
from qp_oracle import enumerate_active_sets, random_qp


class TestSmallProblems:
    def test_symmetric_equality(self):
        sol = solve(QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1]))
        assert sol.status is Status.OPTIMAL
        np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-12)

    def test_active_inequality(self):
        prob = QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1], A=[[1, 0]], b=[0.2])
        sol = solve(prob)
        np.testing.assert_allclose(sol.x, [0.2, 0.8], atol=1e-12)
        # stationarity: 2x + mu*[1,0] + lam*[1,1] = 0 gives mu = 1.2
        assert sol.ineq_multipliers[0] == pytest.approx(1.2, abs=1e-10)
        assert sol.eq_multipliers[0] == pytest.approx(-1.6, abs=1e-10)
        assert sol.active == (0,)
        assert kkt_report(prob, sol).passes()

    def test_inactive_inequality(self):
        prob = QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1], A=[[1, 0]], b=[0.9])
        sol = solve(prob)
        np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-12)
        assert sol.ineq_multipliers[0] == 0.0

    def test_bounds(self):
        prob = QpProblem(H=np.eye(2), f=[-3.0, 1.0], lower=[-np.inf, 0.0], upper=[1.0, np.inf])
        sol = solve(prob)
        np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-12)
        assert sol.upper_multipliers[0] == pytest.approx(2.0)
        assert sol.lower_multipliers[1] == pytest.approx(1.0)
        assert kkt_report(prob, sol).passes()

    def test_redundant_equalities(self):
        prob = QpProblem(H=2 * np.eye(3), Aeq=[[1, 1, 0], [2, 2, 0], [0, 0, 1]], beq=[1, 2, 0.3])
        sol = solve(prob)
        np.testing.assert_allclose(sol.x, [0.5, 0.5, 0.3], atol=1e-12)
        assert kkt_report(prob, sol).passes()

    def test_zero_hessian_linear_program(self):
        prob = QpProblem(H=np.zeros((2, 2)), f=[1.0, 2.0], lower=[0, 0], upper=[1, 1], Aeq=[[1, 1]], beq=[1.5])
        sol = solve(prob)
        assert sol.ok
        np.testing.assert_allclose(sol.x, [1.0, 0.5], atol=1e-12)

    def test_unbounded(self):
        sol = solve(QpProblem(H=np.zeros((2, 2)), f=[1.0, 0.0], A=[[0, 1]], b=[3]))
        assert sol.status is Status.UNBOUNDED

    def test_singular_hessian_is_fine(self):
        # divergence-style: C singular, d'S fixed
        H = 2 * np.array([[1.0, 1.0], [1.0, 1.0]])
        prob = QpProblem(H=H, Aeq=[[1, -1]], beq=[1])
        sol = solve(prob)
        assert sol.ok
        np.testing.assert_allclose(sol.x, [0.5, -0.5], atol=1e-12)


class TestFeasibility:
    def test_start_on_equality(self):
        x = feasible_start(QpProblem(H=np.eye(2), Aeq=[[1, 1]], beq=[1]))
        assert x.sum() == pytest.approx(1.0, abs=1e-8)

    def test_inweights_hold(self):
        d = np.array([0.3, -0.2, 0.5, 0.1, 0.4])
        Aeq = np.vstack([d, np.eye(5)[[0, 3]]])
        prob = QpProblem(H=np.eye(5), Aeq=Aeq, beq=[1.0, 0.0, 0.0])
        x = feasible_start(prob)
        assert abs(x[0]) <= 1e-8 and abs(x[3]) <= 1e-8
        assert d @ x == pytest.approx(1.0, abs=1e-8)

    def test_infeasible_pair(self):
        # S1 <= 0 and S1 >= 1
        prob = QpProblem(H=np.eye(2), A=[[1, 0], [-1, 0]], b=[0, -1])
        with pytest.raises(InfeasibleProblemError):
            feasible_start(prob)
        assert solve(prob).status is Status.INFEASIBLE

    def test_infeasible_start_replaced(self):
        prob = QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1], A=[[1, 0]], b=[0.2], start=[5.0, -4.0])
        sol = solve(prob)
        np.testing.assert_allclose(sol.x, [0.2, 0.8], atol=1e-12)

    def test_feasible_start_is_used(self):
        prob = QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1], A=[[1, 0]], b=[0.2], start=[0.1, 0.9])
        np.testing.assert_allclose(feasible_start(prob), [0.1, 0.9], atol=1e-15)


class TestValidation:
    def test_rejects_negative_definite(self):
        with pytest.raises(ValueError, match="semidefinite"):
            solve(QpProblem(H=-np.eye(2)))

    def test_zero_matrix_passes_psd_check(self):
        check_psd(np.zeros((3, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            QpProblem(H=[[1.0, 2.0], [0.0, 1.0]])

    @pytest.mark.parametrize(
        "kwargs",
        [dict(f=[1.0]), dict(A=[[1, 2, 3]]), dict(A=[[1, 2]], b=[1, 2]), dict(lower=[1, 1], upper=[0, 2])],
    )
    def test_rejects_bad_dimensions(self, kwargs):
        with pytest.raises(ValueError):
            QpProblem(H=np.eye(2), **kwargs)


class TestAgainstOracle:
    @pytest.mark.parametrize("seed", range(40))
    def test_random(self, seed):
        prob = random_qp(np.random.default_rng(seed))
        ref = enumerate_active_sets(**prob)
        sol = solve(QpProblem(**prob))
        assert sol.ok
        np.testing.assert_allclose(sol.x, ref[0], atol=1e-6)
        assert sol.objective == pytest.approx(ref[1], abs=1e-6)
        assert kkt_report(QpProblem(**prob), sol).passes()


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31))
    def test_row_permutation(self, seed):
        rng = np.random.default_rng(seed)
        prob = random_qp(rng)
        base = solve(QpProblem(**prob)).x
        pi = rng.permutation(prob["A"].shape[0])
        pe = rng.permutation(prob["Aeq"].shape[0])
        perm = dict(prob, A=prob["A"][pi], b=prob["b"][pi], Aeq=prob["Aeq"][pe], beq=prob["beq"][pe])
        np.testing.assert_allclose(solve(QpProblem(**perm)).x, base, atol=1e-8)

    @pytest.mark.parametrize("seed", range(5))
    def test_beats_random_feasible_points(self, seed):
        rng = np.random.default_rng(100 + seed)
        prob = random_qp(rng, max_eq=2)
        qp = QpProblem(**prob)
        sol = solve(qp)
        Aeq = prob["Aeq"]
        P = np.eye(qp.p) - (np.linalg.pinv(Aeq) @ Aeq if Aeq.shape[0] else 0)
        hits = 0
        for k in range(20000):
            # shrinking clouds around the solution, projected onto the equalities
            x = sol.x + P @ rng.normal(scale=2.0 ** -(k % 8), size=qp.p)
            if np.all(prob["A"] @ x <= prob["b"] + 1e-8):
                hits += 1
                assert qp.objective(x) >= sol.objective - 1e-10
            if hits >= 100:
                break
        assert hits >= 100

    @pytest.mark.parametrize("seed", range(5))
    def test_closed_form_equality_qp(self, seed):
        rng = np.random.default_rng(seed)
        p, me = 6, 3
        M = rng.normal(size=(p, p))
        H = M @ M.T + np.eye(p)
        f, Aeq, beq = rng.normal(size=p), rng.normal(size=(me, p)), rng.normal(size=me)
        K = np.block([[H, Aeq.T], [Aeq, np.zeros((me, me))]])
        ref = np.linalg.solve(K, np.concatenate([-f, beq]))
        sol = solve(QpProblem(H=H, f=f, Aeq=Aeq, beq=beq))
        np.testing.assert_allclose(sol.x, ref[:p], atol=1e-9)
        np.testing.assert_allclose(sol.eq_multipliers, ref[p:], atol=1e-8)

    def test_deterministic(self):
        prob = random_qp(np.random.default_rng(77))
        a, b = solve(QpProblem(**prob)), solve(QpProblem(**prob))
        np.testing.assert_array_equal(a.x, b.x)
        assert a.iterations == b.iterations


class TestKktReport:
    def test_perturbation_raises_stationarity(self):
        prob = QpProblem(**random_qp(np.random.default_rng(5)))
        sol = solve(prob)
        base = kkt_report(prob, sol)
        moved = kkt_report(prob, type(sol)(**{**sol.__dict__, "x": sol.x + 1e-2}))
        assert moved.stationarity > base.stationarity + 1e-3

    def test_dimension_mismatch(self):
        prob = QpProblem(H=np.eye(2))
        sol = solve(prob)
        other = QpProblem(H=np.eye(3))
        with pytest.raises(ValueError):
            kkt_report(other, sol)

    def test_as_dict_keys(self):
        prob = QpProblem(H=2 * np.eye(2), Aeq=[[1, 1]], beq=[1], A=[[1, 0]], b=[0.2])
        d = kkt_report(prob, solve(prob)).as_dict()
        assert set(d) == {"primal_eq", "primal_ineq", "stationarity", "complementarity", "dual_feasibility", "active"}
        assert d["active"] == [0]


class TestIterationCap:
    def test_max_iter_flagged(self):
        prob = QpProblem(**random_qp(np.random.default_rng(3), max_ineq=6))
        full = solve(prob)
        if full.iterations < 2:
            pytest.skip("problem solved in one step")
        capped = solve(prob, max_iter=1)
        assert capped.status is Status.MAX_ITER
        assert "limit" in capped.message
