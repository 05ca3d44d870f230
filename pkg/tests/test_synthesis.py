from fractions import Fraction

import numpy as np
import pytest

import delay_lqgame.synthesis
from delay_lqgame import (
    CouplingSingularityError,
    DimensionError,
    DiscretePlant,
    GainSchedule,
    GameWeights,
    Scheme,
    SingularMatrixError,
    ValidationError,
    discretize,
    synthesize_delay_free_game,
    synthesize_multi,
    synthesize_single_delayed,
    synthesize_two,
)

from conftest import random_stable_plant, random_weights
from oracles import augmented_delay_lqr, best_response_game, finite_horizon_lqr


def eye_weights(M, p, horizon, q=1.0, r=1.0):
    return GameWeights(Q=tuple(q * np.eye(M) for _ in range(p)),
                       QN=tuple(q * np.eye(M) for _ in range(p)),
                       R=tuple(r * np.eye(1) for _ in range(p)),
                       horizon=horizon)


class TestTwoController:
    def test_inert_second_controller_degenerates_to_single(self, generic_dp,
                                                           generic_config):
        w = generic_config.weights
        dp = DiscretePlant(generic_dp.Phi,
                           (generic_dp.Gamma0[0], np.zeros((2, 1))),
                           (generic_dp.Gamma1[0], np.zeros((2, 1))))
        two = synthesize_two(dp, w)
        single = synthesize_single_delayed(dp.select_controller(0),
                                           w.select_player(0))
        np.testing.assert_allclose(two.A_coef[:, 0], single.A_coef[:, 0],
                                   rtol=0, atol=1e-10)
        np.testing.assert_allclose(two.B_coef[:, 0, 0], single.B_coef[:, 0, 0],
                                   rtol=0, atol=1e-10)
        assert np.all(two.A_coef[:, 1] == 0.0)
        assert np.all(two.B_coef[:, 1] == 0.0)

    def test_zero_delays_degenerate_to_delay_free_game(self, generic_config):
        dp0 = discretize(generic_config.plant.with_delays((0.0, 0.0)))
        two = synthesize_two(dp0, generic_config.weights)
        free = synthesize_delay_free_game(dp0, generic_config.weights)
        assert np.abs(two.B_coef).max() <= 1e-10
        np.testing.assert_allclose(two.A_coef, free.A_coef, rtol=0, atol=1e-10)

    def test_scalar_two_step_hand_values(self):
        # Scalar symmetric instance Phi=1, Gamma0=4/5, Gamma1=1/5, Q=QN=R=1,
        # two steps.  Expected coefficients evaluated by hand in exact
        # rational arithmetic (see the Fraction recursion below).
        dp = DiscretePlant([[1.0]], ([[0.8]], [[0.8]]), ([[0.2]], [[0.2]]))
        w = eye_weights(1, 2, horizon=2)
        sched = synthesize_two(dp, w)

        a_exp = {1: Fraction(-20, 57), 0: Fraction(-90605, 236443)}
        b_exp = {1: Fraction(-4, 57), 0: Fraction(-18121, 236443)}

        # independent scalar evaluation, exact arithmetic
        phi, g0, g1, one = Fraction(1), Fraction(4, 5), Fraction(1, 5), Fraction(1)
        S = [[one, 0, 0], [0, 0, 0], [0, 0, 0]]  # terminal value matrix
        for k in (1, 0):
            T = [g0 * S[0][n] + S[1][n] for n in range(3)]
            E = T[0] * g0 + T[1] + one
            a1, b1, c1 = T[0] * phi / E, T[0] * g1 / E, T[0] * g1 / E
            a2 = (T[0] * g0 + T[2]) / E
            A = (a2 * a1 - a1) / (1 - a2 * a2)
            B = (a2 * b1 - b1) / (1 - a2 * a2)
            C_ = (a2 * c1 - c1) / (1 - a2 * a2)
            assert A == a_exp[k] and B == b_exp[k] and C_ == b_exp[k]
            row = [phi + g0 * A, g1 + g0 * B, g1 + g0 * C_]
            U = [A, B, C_]
            Cm = [row, [0, 0, 0], U]
            P11 = [[sum(Cm[r][i] * S[r][s] * Cm[s][j]
                        for r in range(3) for s in range(3))
                    + (one if (i, j) == (0, 0) else 0)
                    for j in range(3)] for i in range(3)]
            S = [[P11[i][j] - U[i] * E * U[j] for j in range(3)]
                 for i in range(3)]
        for k in (0, 1):
            for i in (0, 1):
                assert abs(sched.A_coef[k, i, 0, 0] - float(a_exp[k])) <= 1e-12
                for j in (0, 1):
                    assert abs(sched.B_coef[k, i, j, 0, 0]
                               - float(b_exp[k])) <= 1e-12

    def test_schedule_is_tagged_proposed(self, generic_dp, generic_config):
        sched = synthesize_two(generic_dp, generic_config.weights)
        assert sched.scheme is Scheme.PROPOSED


class TestMultiController:
    def test_p1_reduces_to_single(self):
        rng = np.random.default_rng(11)
        plant = random_stable_plant(rng, M=3, p=1)
        dp = discretize(plant)
        w = random_weights(rng, 3, p=1, horizon=20)
        multi = synthesize_multi(dp, w)
        single = synthesize_single_delayed(dp, w)
        np.testing.assert_allclose(multi.A_coef, single.A_coef, rtol=0,
                                   atol=1e-12)
        np.testing.assert_allclose(multi.B_coef, single.B_coef, rtol=0,
                                   atol=1e-12)

    def test_p2_matches_closed_form_on_preset(self, generic_dp,
                                              generic_config):
        two = synthesize_two(generic_dp, generic_config.weights)
        multi = synthesize_multi(generic_dp, generic_config.weights)
        np.testing.assert_allclose(multi.A_coef, two.A_coef, rtol=0, atol=1e-9)
        np.testing.assert_allclose(multi.B_coef, two.B_coef, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_p2_matches_closed_form_random(self, seed):
        rng = np.random.default_rng(300 + seed)
        plant = random_stable_plant(rng, M=int(rng.integers(2, 5)), p=2)
        dp = discretize(plant)
        w = random_weights(rng, plant.M, p=2, horizon=30)
        two = synthesize_two(dp, w)
        multi = synthesize_multi(dp, w)
        np.testing.assert_allclose(multi.A_coef, two.A_coef, rtol=0, atol=1e-9)
        np.testing.assert_allclose(multi.B_coef, two.B_coef, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_wide_controls_match_closed_form(self, seed):
        # N > 1 exercises every block-slicing path in the recursion.
        rng = np.random.default_rng(600 + seed)
        plant = random_stable_plant(rng, M=3, N=2, p=2)
        dp = discretize(plant)
        w = GameWeights(
            Q=tuple(np.eye(3) * rng.uniform(0.5, 2.0) for _ in range(2)),
            QN=tuple(np.eye(3) * rng.uniform(0.5, 2.0) for _ in range(2)),
            R=tuple(np.eye(2) * rng.uniform(0.5, 2.0) for _ in range(2)),
            horizon=20)
        two = synthesize_two(dp, w)
        multi = synthesize_multi(dp, w)
        np.testing.assert_allclose(multi.A_coef, two.A_coef, rtol=0, atol=1e-9)
        np.testing.assert_allclose(multi.B_coef, two.B_coef, rtol=0, atol=1e-9)

    def test_wide_controls_single_matches_oracle(self):
        rng = np.random.default_rng(21)
        plant = random_stable_plant(rng, M=4, N=3, p=1)
        dp = discretize(plant)
        w = GameWeights(Q=(np.eye(4),), QN=(2.0 * np.eye(4),),
                        R=(np.eye(3),), horizon=15)
        sched = synthesize_single_delayed(dp, w)
        gains = augmented_delay_lqr(dp.Phi, dp.Gamma0[0], dp.Gamma1[0],
                                    w.Q[0], w.R[0], w.QN[0], 15)
        for k in range(15):
            np.testing.assert_allclose(sched.gain(k, 0), gains[k], rtol=0,
                                       atol=1e-10)

    def test_p3_zero_delay_matches_best_response_oracle(self):
        rng = np.random.default_rng(12)
        plant = random_stable_plant(rng, M=2, p=3, h=0.1, zero_delays=True)
        dp = discretize(plant)
        w = GameWeights(Q=tuple((i + 1.0) * np.eye(2) for i in range(3)),
                        QN=tuple((i + 1.0) * np.eye(2) for i in range(3)),
                        R=tuple((1.0 + 0.5 * i) * np.eye(1) for i in range(3)),
                        horizon=12)
        multi = synthesize_multi(dp, w)
        oracle = best_response_game(dp.Phi, dp.Gamma0, w.Q, w.QN, w.R, 12)
        assert np.abs(multi.B_coef).max() == 0.0
        np.testing.assert_allclose(multi.A_coef, oracle, rtol=0, atol=1e-10)


class TestSingleDelayed:
    def test_zero_delay_equals_classical_lqr(self):
        rng = np.random.default_rng(13)
        plant = random_stable_plant(rng, M=3, p=1, zero_delays=True)
        dp = discretize(plant)
        w = random_weights(rng, 3, p=1, horizon=25)
        sched = synthesize_single_delayed(dp, w)
        gains = finite_horizon_lqr(dp.Phi, dp.Gamma0[0], w.Q[0], w.R[0],
                                   w.QN[0], 25)
        assert np.abs(sched.B_coef).max() <= 1e-12
        np.testing.assert_allclose(sched.A_coef[:, 0], -gains, rtol=0,
                                   atol=1e-10)

    def test_matches_augmented_regulator_oracle(self, generic_dp,
                                                generic_config):
        w1 = generic_config.weights.select_player(0)
        dp1 = generic_dp.select_controller(0)
        sched = synthesize_single_delayed(dp1, w1)
        gains = augmented_delay_lqr(dp1.Phi, dp1.Gamma0[0], dp1.Gamma1[0],
                                    w1.Q[0], w1.R[0], w1.QN[0], w1.horizon)
        for k in range(w1.horizon):
            np.testing.assert_allclose(sched.gain(k, 0), gains[k], rtol=0,
                                       atol=1e-10)

    def test_one_step_closed_form(self):
        rng = np.random.default_rng(14)
        plant = random_stable_plant(rng, M=2, p=1)
        dp = discretize(plant)
        w = random_weights(rng, 2, p=1, horizon=1)
        sched = synthesize_single_delayed(dp, w)
        G0, G1, QN = dp.Gamma0[0], dp.Gamma1[0], w.QN[0]
        lhs = w.R[0] + G0.T @ QN @ G0
        want = np.linalg.solve(lhs, np.hstack([G0.T @ QN @ dp.Phi,
                                               G0.T @ QN @ G1]))
        np.testing.assert_allclose(sched.gain(0, 0), want, rtol=0, atol=1e-12)

    def test_value_recursion_identity(self, generic_dp, generic_config):
        # S(k) = P11 - L'P22L, rebuilt from the published value history.
        w1 = generic_config.weights.select_player(0)
        dp1 = generic_dp.select_controller(0)
        sched, values = synthesize_single_delayed(dp1, w1, return_values=True)
        M, N = dp1.M, dp1.N
        C = np.zeros((M + N, M + N))
        C[:M, :M] = dp1.Phi
        C[:M, M:] = dp1.Gamma1[0]
        D = np.vstack([dp1.Gamma0[0], np.eye(N)])
        Q_aug = np.zeros((M + N, M + N))
        Q_aug[:M, :M] = w1.Q[0]
        for k in range(w1.horizon):
            S_next = values[k + 1][0]
            L = sched.gain(k, 0)
            P11 = C.T @ S_next @ C + Q_aug
            P12 = D.T @ S_next @ C
            P22 = D.T @ S_next @ D + w1.R[0]
            assert np.abs(P22 @ L - P12).max() <= 1e-10
            assert np.abs(values[k][0] - (P11 - L.T @ P22 @ L)).max() <= 1e-10

    def test_rejects_multi_controller_plant(self, generic_dp, generic_config):
        with pytest.raises(DimensionError):
            synthesize_single_delayed(generic_dp, generic_config.weights)


class TestDelayFreeGame:
    def test_single_player_degeneration_is_negated_lqr(self):
        rng = np.random.default_rng(15)
        plant = random_stable_plant(rng, M=2, p=2, zero_delays=True)
        dp = discretize(plant)
        dp = DiscretePlant(dp.Phi, (dp.Gamma0[0], np.zeros((2, 1))),
                           (dp.Gamma1[0], np.zeros((2, 1))))
        w = eye_weights(2, 2, horizon=15)
        sched = synthesize_delay_free_game(dp, w)
        gains = finite_horizon_lqr(dp.Phi, dp.Gamma0[0], w.Q[0], w.R[0],
                                   w.QN[0], 15)
        np.testing.assert_allclose(sched.A_coef[:, 0], -gains, rtol=0,
                                   atol=1e-10)

    def test_symmetric_players_share_gains(self, generic_config):
        dp0 = discretize(generic_config.plant.with_delays((0.0, 0.0)))
        sched = synthesize_delay_free_game(dp0, generic_config.weights)
        np.testing.assert_array_equal(sched.A_coef[:, 0], sched.A_coef[:, 1])

    def test_scalar_one_step_value(self):
        dp = DiscretePlant([[1.0]], ([[1.0]], [[1.0]]),
                           ([[0.0]], [[0.0]]))
        sched = synthesize_delay_free_game(dp, eye_weights(1, 2, horizon=1))
        for i in (0, 1):
            assert abs(sched.A_coef[0, i, 0, 0] - (-1.0 / 3.0)) <= 1e-12

    def test_nonzero_gamma1_rejected(self, generic_dp, generic_config):
        with pytest.raises(ValidationError, match="zero delays"):
            synthesize_delay_free_game(generic_dp, generic_config.weights)


class TestRecursionInvariants:
    @pytest.mark.parametrize("seed", range(3))
    def test_degenerations_random(self, seed):
        rng = np.random.default_rng(400 + seed)
        M = int(rng.integers(2, 5))
        plant = random_stable_plant(rng, M=M, p=2)
        w = random_weights(rng, M, p=2, horizon=20)
        # one controller zeroed out
        dp = discretize(plant)
        dpz = DiscretePlant(dp.Phi, (dp.Gamma0[0], np.zeros((M, 1))),
                            (dp.Gamma1[0], np.zeros((M, 1))))
        two = synthesize_two(dpz, w)
        single = synthesize_single_delayed(dpz.select_controller(0),
                                           w.select_player(0))
        np.testing.assert_allclose(two.A_coef[:, 0], single.A_coef[:, 0],
                                   rtol=0, atol=1e-10)
        # zero delays
        dp0 = discretize(plant.with_delays((0.0, 0.0)))
        two0 = synthesize_two(dp0, w)
        free = synthesize_delay_free_game(dp0, w)
        np.testing.assert_allclose(two0.A_coef, free.A_coef, rtol=0,
                                   atol=1e-10)

    def test_value_matrices_symmetric_psd(self, generic_dp, generic_config):
        _, values = synthesize_two(generic_dp, generic_config.weights,
                                   return_values=True)
        for step_values in values:
            for S in step_values:
                assert np.abs(S - S.T).max() <= 1e-9
                assert np.linalg.eigvalsh(S).min() >= -1e-9

    def test_recursion_identity_and_best_response(self, generic_dp,
                                                  generic_config):
        # At every step the stored gain must satisfy the stationarity
        # condition P22 L = P12 and the value identity S = P11 - L'P22L,
        # rebuilt here from scratch out of the published value history.
        w = generic_config.weights
        sched, values = synthesize_two(generic_dp, w, return_values=True)
        M, N = generic_dp.M, generic_dp.N
        dim = M + 2 * N
        D = []
        for i in range(2):
            Di = np.zeros((dim, N))
            Di[:M] = generic_dp.Gamma0[i]
            Di[M + i * N: M + (i + 1) * N] = np.eye(N)
            D.append(Di)
        for k in range(w.horizon):
            U = [sched.coefficients(k, i) for i in range(2)]
            for i in range(2):
                S_next = values[k + 1][i]
                top = np.hstack([generic_dp.Phi] + list(generic_dp.Gamma1))
                top = top + generic_dp.Gamma0[1 - i] @ U[1 - i]
                rows = [top]
                for m in range(2):
                    rows.append(U[m] if m != i else np.zeros((N, dim)))
                C = np.vstack(rows)
                Q_aug = np.zeros((dim, dim))
                Q_aug[:M, :M] = w.Q[i]
                P11 = C.T @ S_next @ C + Q_aug
                P12 = D[i].T @ S_next @ C
                P22 = D[i].T @ S_next @ D[i] + w.R[i]
                L = -U[i]
                assert np.abs(P22 @ L - P12).max() <= 1e-10
                assert np.abs(values[k][i] - (P11 - L.T @ P22 @ L)).max() <= 1e-10

    def test_coupling_singularity_is_reported_with_context(self, generic_dp,
                                                           generic_config,
                                                           monkeypatch):
        def explode(A, B):
            raise SingularMatrixError("forced", 0.0)

        monkeypatch.setattr(delay_lqgame.synthesis.lin_ops, "solve", explode)
        with pytest.raises(CouplingSingularityError) as err:
            synthesize_two(generic_dp, generic_config.weights)
        assert err.value.step == generic_config.weights.horizon - 1
        assert err.value.controller == 1


class TestGainSchedule:
    def test_gain_is_negated_coefficient_view(self, generic_dp,
                                              generic_config):
        sched = synthesize_two(generic_dp, generic_config.weights)
        k, i = 7, 1
        want = -np.hstack([sched.A_coef[k, i], sched.B_coef[k, i, 0],
                           sched.B_coef[k, i, 1]])
        np.testing.assert_array_equal(sched.gain(k, i), want)

    def test_non_finite_coefficients_rejected(self):
        A = np.zeros((2, 1, 1, 1))
        B = np.zeros((2, 1, 1, 1, 1))
        A[0] = np.inf
        with pytest.raises(ValidationError):
            GainSchedule(Scheme.PROPOSED, A, B)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            GainSchedule(Scheme.PROPOSED, np.zeros((2, 1, 1, 1)),
                         np.zeros((2, 2, 2, 1, 1)))
