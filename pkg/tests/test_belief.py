import csv

import numpy as np
import pytest

from conftest import enumerate_beliefs_brute, random_recurrent_mdp
from iomdp import (
    ExplosionGuard,
    FiniteMdp,
    ModeRequired,
    belief_update,
    build_belief_space,
    build_kernel,
    lift_cost,
    lift_reward,
    stationary_distribution,
)
from iomdp.belief import dump_kernel_csv, dump_space_csv
from iomdp.wireless import P_W, wireless_model


def distinct_action_model(rho=0.5):
    P = np.array(
        [
            [[0.7, 0.3], [0.1, 0.9]],
            [[0.2, 0.8], [0.6, 0.4]],
        ]
    )
    return FiniteMdp(
        n_states=2, n_actions=2, P=P,
        r=np.zeros((2, 2)), c=np.ones((2, 2)), B=1.0, rho=rho,
    )


class TestBeliefUpdate:
    def test_pure_state_row(self, wireless06):
        # Row 2 of the channel matrix.
        out = belief_update(np.array([0.0, 1.0]), 0, wireless06.P)
        assert np.allclose(out, [0.1, 0.9], atol=1e-15)

    def test_stationary_fixed_point(self, wireless06):
        gamma = stationary_distribution(P_W)
        out = belief_update(gamma, 1, wireless06.P)
        assert np.allclose(out, gamma, atol=1e-15)

    def test_hand_product(self, wireless06):
        # (0.1, 0.9): 0.1*0.7 + 0.9*0.1 = 0.16 and 0.1*0.3 + 0.9*0.9 = 0.84.
        out = belief_update(np.array([0.1, 0.9]), 0, wireless06.P)
        assert np.allclose(out, [0.16, 0.84], atol=1e-15)

    def test_normalized_output(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            model = random_recurrent_mdp(rng, 4, 2)
            b = rng.dirichlet(np.ones(4))
            out = belief_update(b, int(rng.integers(2)), model.P)
            assert abs(out.sum() - 1.0) <= 1e-12
            assert np.all(out >= 0)


class TestBuildBeliefSpace:
    def test_wireless_k10_has_22(self, wireless06_space):
        assert len(wireless06_space) == 22
        assert wireless06_space.action_independent

    def test_wireless_matches_brute_force(self, wireless06):
        brute = enumerate_beliefs_brute(wireless06, 10)
        assert len(brute) == 22

    def test_k0_is_pure_states_only(self, wireless06):
        space = build_belief_space(wireless06, 0)
        assert len(space) == 2
        assert np.array_equal(space.beliefs, np.eye(2))

    def test_pure_states_come_first(self):
        rng = np.random.default_rng(1)
        model = random_recurrent_mdp(rng, 3, 2)
        space = build_belief_space(model, 3)
        assert np.allclose(space.beliefs[:3], np.eye(3), atol=0)

    def test_distinct_actions_k2_bounded_and_matches_oracle(self):
        model = distinct_action_model()
        space = build_belief_space(model, 2)
        assert len(space) <= 14  # 2 + 4 + 8
        brute = enumerate_beliefs_brute(model, 2)
        assert len(space) == len(brute)

    def test_origins_recompute(self):
        model = distinct_action_model()
        space = build_belief_space(model, 3)
        for i in range(len(space)):
            vec = np.eye(2)[space.origin_state[i]]
            for a in space.origin_actions[i]:
                vec = model.P[a].T @ vec
            assert np.max(np.abs(vec - space.beliefs[i])) <= 1e-12

    def test_no_two_beliefs_within_dedup_tol(self):
        model = distinct_action_model()
        space = build_belief_space(model, 4)
        n = len(space)
        for i in range(n):
            for j in range(i + 1, n):
                gap = np.max(np.abs(space.beliefs[i] - space.beliefs[j]))
                assert gap > space.dedup_tol

    def test_fast_path_origin_grid(self, wireless06_space):
        space = wireless06_space
        for s in range(2):
            for age in range(11):
                i = space.index_by_age(s, age)
                assert space.origin_state[i] == s
                assert space.depth[i] == age
                expect = np.linalg.matrix_power(P_W.T, age) @ np.eye(2)[s]
                assert np.max(np.abs(space.beliefs[i] - expect)) <= 1e-12

    def test_explosion_guard(self):
        model = distinct_action_model()
        with pytest.raises(ExplosionGuard):
            build_belief_space(model, 10, cap=5)


class TestBuildKernel:
    def test_wireless_pure_state_row(self, wireless06, wireless06_space):
        kernel = build_kernel(wireless06_space, wireless06, "drop")
        space = wireless06_space
        row = dict(kernel.row(space.index_by_age(1, 0), 0))
        assert row[space.index_by_age(0, 0)] == pytest.approx(0.6 * 0.1, abs=1e-15)
        assert row[space.index_by_age(1, 0)] == pytest.approx(0.6 * 0.9, abs=1e-15)
        assert row[space.index_by_age(1, 1)] == pytest.approx(0.4, abs=1e-15)

    def test_rho_one_supported_on_pure_states(self):
        model = wireless_model(1.0)
        space = build_belief_space(model, 3)
        kernel = build_kernel(space, model, "drop")
        for (b, a), entries in kernel.rows.items():
            assert all(bp < 2 for bp, _ in entries)
            assert sum(p for _, p in entries) == pytest.approx(1.0, abs=1e-12)

    def test_interior_off_pure_mass_is_one_minus_rho(self):
        rng = np.random.default_rng(2)
        for rho in (0.17, 0.5, 0.83):
            model = random_recurrent_mdp(rng, 3, 2, rho=rho)
            space = build_belief_space(model, 3)
            kernel = build_kernel(space, model, "selfloop")
            for (b, a), entries in kernel.rows.items():
                if (b, a) in kernel.boundary_rows:
                    continue
                off = sum(p for bp, p in entries if bp >= 3)
                assert abs(off - (1.0 - rho)) <= 1e-12

    def test_row_masses_per_mode(self, wireless06, wireless06_space):
        space = wireless06_space
        for mode, boundary_mass in (("drop", 0.6), ("selfloop", 1.0),
                                    ("forceobs", 1.0)):
            kernel = build_kernel(space, wireless06, mode)
            for (b, a) in kernel.rows:
                mass = kernel.row_mass(b, a)
                if (b, a) in kernel.boundary_rows:
                    assert mass == pytest.approx(boundary_mass, abs=1e-12)
                else:
                    assert mass == pytest.approx(1.0, abs=1e-12)
            flagged = bool(kernel.sub_stochastic)
            assert flagged == (mode == "drop")

    def test_support_size_bound(self):
        model = distinct_action_model()
        space = build_belief_space(model, 3)
        kernel = build_kernel(space, model, "selfloop")
        for entries in kernel.rows.values():
            assert len(entries) <= model.n_states + 1

    def test_mode_required(self, wireless06, wireless06_space):
        with pytest.raises(ModeRequired):
            build_kernel(wireless06_space, wireless06, None)


class TestLiftedTables:
    def test_reward_entries(self, wireless06, wireless06_space):
        space = wireless06_space
        R = lift_reward(space, wireless06)
        assert R[space.index_by_age(1, 0), 1] == 4.0
        mixed = np.array([0.1, 0.9]) @ wireless06.r[:, 1]
        assert mixed == pytest.approx(3.7, abs=1e-15)

    def test_cost_state_independent(self, wireless06, wireless06_space):
        C = lift_cost(wireless06_space, wireless06)
        assert np.allclose(C[:, 0], 9.0, atol=1e-12)
        assert np.allclose(C[:, 1], 16.0, atol=1e-12)


class TestCsvDumps:
    def test_space_csv(self, wireless06_space, tmp_path):
        path = tmp_path / "space.csv"
        dump_space_csv(wireless06_space, str(path))
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][:3] == ["index", "origin_state", "age_or_action_seq"]
        assert len(rows) == 1 + 22
        probs = [float(x) for x in rows[1][3:]]
        assert probs == [1.0, 0.0]

    def test_kernel_csv(self, wireless06, wireless06_space, tmp_path):
        kernel = build_kernel(wireless06_space, wireless06, "drop")
        path = tmp_path / "kernel.csv"
        dump_kernel_csv(kernel, str(path))
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["from", "action", "to", "prob"]
        total = sum(float(r[3]) for r in rows[1:] if r[1] == "0" and r[0] == "0")
        assert total == pytest.approx(1.0, abs=1e-12)
