import json

import numpy as np
import pytest

from conftest import random_recurrent_mdp
from iomdp import (
    EmptyModel,
    FiniteMdp,
    NonStochasticRow,
    NotRecurrent,
    SingularSystem,
    load_model,
    save_model,
    stationary_distribution,
    validate_mdp,
)
from iomdp.wireless import P_W, wireless_model


def two_state_model(P_rows, r=None, c=None, rho=0.6, B=10.0, n_actions=2):
    P = np.stack([np.asarray(P_rows, dtype=float)] * n_actions)
    r = np.zeros((2, n_actions)) if r is None else r
    c = np.ones((2, n_actions)) if c is None else c
    return FiniteMdp(n_states=2, n_actions=n_actions, P=P, r=r, c=c, B=B, rho=rho)


class TestValidate:
    def test_wireless_is_recurrent(self):
        report = validate_mdp(wireless_model(0.6))
        assert report.recurrent
        assert report.method == "exhaustive"
        assert report.policies_checked == 4  # 2 actions ^ 2 states
        assert report.max_row_sum_error <= 1e-12

    def test_identity_chain_is_not_recurrent(self):
        with pytest.raises(NotRecurrent):
            validate_mdp(two_state_model(np.eye(2)))

    def test_row_sum_off_raises_with_position(self):
        model = two_state_model([[0.7, 0.2], [0.1, 0.9]])
        with pytest.raises(NonStochasticRow, match=r"P\[0\]\[0\]"):
            validate_mdp(model)

    def test_negative_entry_raises(self):
        model = two_state_model([[1.1, -0.1], [0.1, 0.9]])
        with pytest.raises(NonStochasticRow, match="negative"):
            validate_mdp(model)

    def test_empty_model_raises(self):
        with pytest.raises(EmptyModel):
            FiniteMdp(
                n_states=0, n_actions=1,
                P=np.zeros((1, 0, 0)), r=np.zeros((0, 1)),
                c=np.zeros((0, 1)), B=1.0, rho=0.5,
            )

    def test_verdict_stable_under_action_relabeling(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            model = random_recurrent_mdp(rng, 3, 3)
            permuted = FiniteMdp(
                n_states=3, n_actions=3,
                P=model.P[::-1].copy(), r=model.r[:, ::-1].copy(),
                c=model.c[:, ::-1].copy(), B=model.B, rho=model.rho,
            )
            assert validate_mdp(model).recurrent
            assert validate_mdp(permuted).recurrent

    def test_sampled_fallback_above_policy_cap(self):
        # 2^21 deterministic policies > 10^6 forces the sampled check.
        rng = np.random.default_rng(11)
        n = 21
        P = rng.uniform(0.05, 1.0, size=(2, n, n))
        P /= P.sum(axis=2, keepdims=True)
        model = FiniteMdp(
            n_states=n, n_actions=2, P=P,
            r=np.zeros((n, 2)), c=np.ones((n, 2)), B=1.0, rho=0.5,
        )
        report = validate_mdp(model)
        assert report.method == "sampled"
        assert report.policies_checked == 1000


class TestStationaryDistribution:
    def test_wireless_chain(self):
        # Balance by hand: 0.3 g0 = 0.1 g1 and g0 + g1 = 1.
        gamma = stationary_distribution(P_W)
        assert np.allclose(gamma, [0.25, 0.75], atol=1e-12)

    def test_fixed_point_residual(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            P = rng.uniform(0.01, 1.0, size=(4, 4))
            P /= P.sum(axis=1, keepdims=True)
            gamma = stationary_distribution(P)
            assert np.max(np.abs(gamma @ P - gamma)) <= 1e-10
            assert abs(gamma.sum() - 1.0) <= 1e-12
            assert np.all(gamma >= 0)

    def test_swap_permutation(self):
        gamma = stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(gamma, [0.5, 0.5], atol=1e-12)

    def test_absorbing_column(self):
        gamma = stationary_distribution(np.array([[1.0, 0.0], [1.0, 0.0]]))
        assert np.allclose(gamma, [1.0, 0.0], atol=1e-12)

    def test_multiple_classes_raise(self):
        with pytest.raises(SingularSystem):
            stationary_distribution(np.eye(2))

    def test_agrees_with_power_iteration(self):
        rng = np.random.default_rng(9)
        P = rng.uniform(0.05, 1.0, size=(5, 5))
        P /= P.sum(axis=1, keepdims=True)
        gamma = stationary_distribution(P)
        pi = np.full(5, 0.2)
        for _ in range(10_000):
            pi = pi @ P
        assert np.max(np.abs(gamma - pi)) < 1e-12


class TestModelIo:
    def test_round_trip(self, tmp_path):
        model = wireless_model(0.4)
        path = tmp_path / "m.json"
        save_model(model, str(path))
        loaded = load_model(str(path))
        assert loaded.n_states == model.n_states
        assert np.array_equal(loaded.P, model.P)
        assert np.array_equal(loaded.r, model.r)
        assert np.array_equal(loaded.c, model.c)
        assert loaded.B == model.B and loaded.rho == model.rho

    def test_rejects_nan(self, tmp_path):
        path = tmp_path / "bad.json"
        doc = {
            "n_states": 1, "n_actions": 1, "P": [[[1.0]]],
            "r": [[0.0]], "c": [[0.0]], "B": 1.0, "rho": 1.0,
        }
        text = json.dumps(doc).replace("1.0]]],", "NaN]]],")
        path.write_text(text)
        with pytest.raises(ValueError, match="NaN"):
            load_model(str(path))

    def test_shape_mismatch_is_positioned(self, tmp_path):
        path = tmp_path / "bad.json"
        doc = {
            "n_states": 2, "n_actions": 1,
            "P": [[[0.5, 0.5], [0.5]]],  # second row too short
            "r": [[0.0], [0.0]], "c": [[0.0], [0.0]], "B": 1.0, "rho": 1.0,
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match=r"P\[0\]\[1\]"):
            load_model(str(path))

    def test_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(ValueError, match="missing key"):
            load_model(str(path))


def test_row_sums_within_type_tolerance():
    for rho in (0.1, 0.3, 0.6, 1.0):
        model = wireless_model(rho)
        sums = model.P.sum(axis=2)
        assert np.max(np.abs(sums - 1.0)) <= 1e-12
