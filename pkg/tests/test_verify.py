import numpy as np
import pytest

from hankeldesign import (
    DesignProblem,
    DimensionError,
    OracleError,
    Tolerance,
    check_io_rank,
    check_is_rank,
    check_trajectory_parameterized,
    design_input_output,
    design_input_state,
    exact_rank_oracle,
    lag,
    min_samples,
    random_minimal_system,
    simulate,
)
from conftest import make_output_plant, make_state_plant


class TestRankChecks:
    def test_io_pass_on_designed_data(self):
        sysm, plant = make_output_plant(3, 1, 2, 10)
        L = lag(sysm) + 1
        traj, _ = design_input_output(DesignProblem(plant, L=L, n_known=3))
        assert check_io_rank(traj.u, traj.y, L, 3).passed

    def test_io_zero_data_fails(self):
        res = check_io_rank(np.zeros((6, 1)), np.zeros((6, 1)), 2, 2)
        assert res.rank == 0 and not res.passed

    def test_io_single_column(self):
        res = check_io_rank(np.ones((2, 1)), np.ones((2, 1)), 2, 2)
        assert res.rank <= 1 and not res.passed

    def test_io_length_mismatch(self):
        with pytest.raises(DimensionError):
            check_io_rank(np.zeros((5, 1)), np.zeros((4, 1)), 2, 2)

    def test_is_pass_on_designed_data(self):
        _, plant = make_state_plant(3, 2, 11)
        traj, _ = design_input_state(DesignProblem(plant, n_known=3))
        assert check_is_rank(traj.u, traj.x, 3).passed

    def test_is_single_sample_fails(self):
        assert not check_is_rank(np.ones((1, 1)), np.ones((1, 2)), 2).passed

    def test_is_stacking_order_irrelevant(self):
        rng = np.random.default_rng(3)
        u, x = rng.normal(size=(5, 1)), rng.normal(size=(5, 2))
        a = check_is_rank(u, x, 2).rank
        # swapping the roles permutes rows only; rank must match
        from hankeldesign import numerical_rank

        b = numerical_rank(np.vstack([u.T, x.T]))
        assert a == b


class TestParameterization:
    @pytest.fixture
    def bank(self):
        sysm, plant = make_output_plant(3, 1, 1, 20)
        L = lag(sysm) + 1
        traj, _ = design_input_output(DesignProblem(plant, L=L, n_known=3))
        return sysm, traj, L

    def test_bank_columns_are_trajectories(self, bank):
        sysm, traj, L = bank
        assert check_trajectory_parameterized(
            traj.u[:L], traj.y[:L], traj.u, traj.y
        )

    def test_fresh_trajectories_parameterized(self, bank):
        sysm, traj, L = bank
        rng = np.random.default_rng(4)
        for _ in range(20):
            fresh = simulate(sysm, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, (L, 1)))
            assert check_trajectory_parameterized(
                fresh.u, fresh.y, traj.u, traj.y, Tolerance(rel=1e-8, abs=1e-10)
            )

    def test_cross_system_windows_rejected(self, bank):
        sysm, traj, L = bank
        rng = np.random.default_rng(5)
        rejected = 0
        for k in range(50):
            other = random_minimal_system(3, 1, 1, seed=900 + k)
            fresh = simulate(other, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, (L, 1)))
            if not check_trajectory_parameterized(
                fresh.u, fresh.y, traj.u, traj.y, Tolerance(rel=1e-8, abs=1e-10)
            ):
                rejected += 1
        assert rejected >= 48


class TestMinSamples:
    def test_reference_values(self):
        assert min_samples("online-is", 2, 1, 1) == 3
        assert min_samples("pe", 2, 1, 1) == 5
        assert min_samples("online-io", 2, 1, 3) == 7
        assert min_samples("pe", 2, 1, 3) == 9
        assert min_samples("online-is", 1, 1, 1) == 2 == min_samples("pe", 1, 1, 1) - 1

    def test_savings_identity_over_grid(self):
        for n in range(1, 11):
            for m in range(1, 11):
                for L in range(1, 11):
                    assert (
                        min_samples("pe", n, m, L) - min_samples("online-io", n, m, L)
                        == m * n
                    )

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            min_samples("offline", 1, 1, 1)


class TestExactRankOracle:
    def test_identity(self):
        assert exact_rank_oracle(np.eye(4)) == 4

    def test_proportional_rows(self):
        assert exact_rank_oracle(np.array([[2, 4], [1, 2]])) == 1

    def test_rectangular_and_zero(self):
        assert exact_rank_oracle(np.zeros((3, 5))) == 0
        assert exact_rank_oracle(np.array([[1, 0, 2], [0, 1, 3]])) == 2

    def test_known_low_rank_products(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            r = int(rng.integers(1, 4))
            M = rng.integers(-3, 4, (6, r)) @ rng.integers(-3, 4, (r, 5))
            assert exact_rank_oracle(M) <= r

    def test_domain_guards(self):
        with pytest.raises(OracleError):
            exact_rank_oracle(np.zeros((17, 2)))
        with pytest.raises(OracleError):
            exact_rank_oracle(np.array([[0.5]]))
        with pytest.raises(OracleError):
            exact_rank_oracle(np.array([[10**7]]))
