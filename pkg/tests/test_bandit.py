import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scenelayout.bandit import (
    ContextGrid,
    LinUcbBandit,
    build_features,
    build_features_batch,
    load_triplets_jsonl,
    reward_of_arm,
    save_triplets_jsonl,
    train_on_triplets,
)
from scenelayout.rewards import (
    RewardConfig,
    RewardCurves,
    curve_from_anchors,
    layout_reward_from_features,
)
from scenelayout.recommend import loo_reward_config


@pytest.fixture
def two_anchor_curves():
    return RewardCurves(
        luminance=curve_from_anchors([(0.1, 0.91), (0.9, 0.25)]),
        isd=curve_from_anchors([(5.0, 0.46), (40.0, 0.92)]),
    )


def random_context(rng, n_g=12, n_objects=6):
    grid = rng.random((n_g, n_g))
    objects = rng.permutation(n_g * n_g)[:n_objects]
    objects = np.stack([objects % n_g, objects // n_g], axis=1)
    return ContextGrid(grid=grid, objects=objects)


class TestBuildFeatures:
    def test_stimuli_on_objects_have_unit_sod(self, two_anchor_curves):
        rng = np.random.default_rng(0)
        context = random_context(rng)
        config = RewardConfig()
        x = build_features(context, context.objects, two_anchor_curves, config)
        np.testing.assert_allclose(x[2::3], 1.0)

    def test_six_stimuli_give_18_dims(self, two_anchor_curves):
        rng = np.random.default_rng(1)
        context = random_context(rng)
        x = build_features(context, context.objects, two_anchor_curves, RewardConfig())
        assert x.shape == (18,)

    def test_adjacent_cells_floor_the_isd_reward(self, two_anchor_curves):
        grid = np.zeros((12, 12))
        objects = np.array([[0, 0], [1, 0]])
        context = ContextGrid(grid=grid, objects=objects)
        config = RewardConfig(n_stimuli=2, degrees_per_cell=5.0)
        arm = np.array([[0, 0], [1, 0]])  # one cell apart -> 5 degrees
        x = build_features(context, arm, two_anchor_curves, config)
        assert x[1] == pytest.approx(0.0)
        assert x[4] == pytest.approx(0.0)

    def test_features_stay_in_unit_interval(self, two_anchor_curves):
        rng = np.random.default_rng(2)
        for _ in range(10):
            context = random_context(rng)
            arms = np.stack(
                [context.objects + rng.integers(-1, 2, context.objects.shape)],
            ).clip(0, 11)
            x = build_features_batch(context, arms, two_anchor_curves, RewardConfig())
            assert x.min() >= 0.0 and x.max() <= 1.0

    def test_position_outside_grid_errors(self, two_anchor_curves):
        rng = np.random.default_rng(3)
        context = random_context(rng)
        arm = context.objects.copy()
        arm[0] = (99, 0)
        with pytest.raises(ValueError):
            build_features(context, arm, two_anchor_curves, RewardConfig())

    def test_loo_config_zeroes_isd_slots(self, two_anchor_curves):
        rng = np.random.default_rng(4)
        context = random_context(rng)
        config = loo_reward_config(RewardConfig())
        x = build_features(context, context.objects, two_anchor_curves, config)
        np.testing.assert_allclose(x[1::3], 0.0)
        assert np.any(x[0::3] > 0)

    def test_feature_rewards_match_layout_reward(self, two_anchor_curves):
        rng = np.random.default_rng(5)
        config = RewardConfig()
        for _ in range(20):
            context = random_context(rng)
            arm = random_context(rng).objects  # another random distinct set
            x = build_features(context, arm, two_anchor_curves, config)
            fast = layout_reward_from_features(x, config)[0]
            slow = reward_of_arm(context, arm, two_anchor_curves, config)
            assert fast == pytest.approx(slow, abs=1e-12)


class TestPredictAndScore:
    def test_fresh_state_predicts_zero(self):
        model = LinUcbBandit(dim=18)
        rng = np.random.default_rng(0)
        assert model.predict(rng.random(18)) == 0.0

    def test_single_coordinate(self):
        model = LinUcbBandit(dim=4)
        model.theta_ = np.eye(4)[0]
        x = np.array([0.5, 0.0, 0.0, 0.0])
        assert model.predict(x) == pytest.approx(0.5)

    def test_all_ones_dot_product(self):
        model = LinUcbBandit(dim=18)
        model.theta_ = np.ones(18)
        assert model.predict(np.full(18, 1 / 18)) == pytest.approx(1.0, abs=1e-12)

    def test_ucb_unit_vector_fresh_state(self):
        model = LinUcbBandit(dim=6, lam=0.5)
        x = np.zeros(6)
        x[2] = 1.0
        assert model.ucb_score(x) == pytest.approx(0.5)

    def test_lambda_zero_is_pure_prediction(self):
        rng = np.random.default_rng(1)
        model = LinUcbBandit(dim=6, lam=0.0)
        model.theta_ = rng.random(6)
        x = rng.random(6)
        assert model.ucb_score(x) == pytest.approx(model.predict(x))

    def test_bonus_shrinks_with_observations(self):
        rng = np.random.default_rng(2)
        model = LinUcbBandit(dim=6)
        x = rng.random(6)
        bonuses = [model.exploration_bonus(x)]
        for _ in range(5):
            model.update(x, 0.3)
            bonuses.append(model.exploration_bonus(x))
        assert all(b1 < b0 for b0, b1 in zip(bonuses, bonuses[1:]))

    def test_optimism_invariant(self):
        rng = np.random.default_rng(3)
        model = LinUcbBandit(dim=6, lam=0.5)
        for _ in range(30):
            model.update(rng.random(6), rng.random())
        X = rng.random((50, 6))
        assert np.all(model.ucb_score(X) >= model.predict(X) - 1e-12)

    def test_dimension_mismatch_errors(self):
        model = LinUcbBandit(dim=6)
        with pytest.raises(ValueError):
            model.predict(np.zeros(5))


class TestUpdate:
    def test_first_unit_observation(self):
        model = LinUcbBandit(dim=4)
        e1 = np.eye(4)[0]
        model.update(e1, 1.0)
        np.testing.assert_allclose(model.A_, np.diag([2.0, 1.0, 1.0, 1.0]))
        np.testing.assert_allclose(model.theta_, [0.5, 0.0, 0.0, 0.0])

    def test_zero_reward_keeps_zero_theta(self):
        model = LinUcbBandit(dim=4)
        model.update(np.eye(4)[0], 0.0)
        np.testing.assert_allclose(model.theta_, 0.0)

    def test_repeated_observation_converges(self):
        rng = np.random.default_rng(4)
        model = LinUcbBandit(dim=6)
        x = rng.random(6)
        for _ in range(1000):
            model.update(x, 0.7)
        assert abs(model.predict(x) - 0.7) < 1e-3

    def test_nonfinite_rejected(self):
        model = LinUcbBandit(dim=2)
        with pytest.raises(ValueError):
            model.update(np.array([np.nan, 0.0]), 1.0)
        with pytest.raises(ValueError):
            model.update(np.array([0.5, 0.0]), float("inf"))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_design_matrix_stays_spd(self, seed):
        rng = np.random.default_rng(seed)
        model = LinUcbBandit(dim=5)
        for _ in range(rng.integers(1, 40)):
            model.update(rng.normal(size=5), rng.normal())
        np.testing.assert_allclose(model.A_, model.A_.T, atol=1e-12)
        assert np.linalg.eigvalsh(model.A_).min() > 0


class TestFit:
    def test_single_sample_equals_one_update(self):
        rng = np.random.default_rng(5)
        x = rng.random(6)
        batch = LinUcbBandit(dim=6).fit(x[None], np.array([0.4]))
        online = LinUcbBandit(dim=6).update(x, 0.4)
        np.testing.assert_allclose(batch.theta_, online.theta_, atol=1e-12)
        assert batch.observation_count_ == 1

    def test_batch_equals_folded_updates(self):
        rng = np.random.default_rng(6)
        X = rng.random((50, 6))
        y = rng.random(50)
        batch = LinUcbBandit(dim=6).fit(X, y)
        online = LinUcbBandit(dim=6)
        for xi, yi in zip(X, y):
            online.update(xi, yi)
        np.testing.assert_allclose(batch.theta_, online.theta_, atol=1e-9)

    def test_order_invariance(self):
        rng = np.random.default_rng(7)
        X = rng.random((100, 6))
        y = rng.random(100)
        a = LinUcbBandit(dim=6).fit(X, y)
        order = rng.permutation(100)
        b = LinUcbBandit(dim=6).fit(X[order], y[order])
        assert np.linalg.norm(a.theta_ - b.theta_) < 1e-9

    def test_empty_dataset_errors(self):
        with pytest.raises(ValueError):
            LinUcbBandit(dim=6).fit(np.zeros((0, 6)), np.zeros(0))

    def test_parameter_recovery(self):
        rng = np.random.default_rng(42)
        dim = 18
        theta_star = rng.uniform(0.0, 1.0, dim)
        X = rng.uniform(0.0, 1.0, (10_000, dim))
        y = X @ theta_star + rng.normal(0.0, 0.05, 10_000)
        model = LinUcbBandit(dim=dim).fit(X, y)
        assert np.linalg.norm(model.theta_ - theta_star) < 0.05

    def test_recovery_error_shrinks_with_samples(self):
        rng = np.random.default_rng(43)
        dim = 12
        theta_star = rng.uniform(0.0, 1.0, dim)
        errors = []
        for n in (100, 1000, 10_000):
            X = rng.uniform(0.0, 1.0, (n, dim))
            y = X @ theta_star + rng.normal(0.0, 0.05, n)
            model = LinUcbBandit(dim=dim).fit(X, y)
            errors.append(np.linalg.norm(model.theta_ - theta_star))
        assert errors[0] > errors[1] > errors[2]


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        model = LinUcbBandit(dim=6, lam=0.7)
        for _ in range(25):
            model.update(rng.random(6), rng.random())
        path = tmp_path / "state.json"
        model.save(path)
        back = LinUcbBandit.load(path)
        np.testing.assert_allclose(back.theta_, model.theta_, atol=1e-12)
        np.testing.assert_allclose(back.A_, model.A_, atol=1e-12)
        np.testing.assert_allclose(back.b_, model.b_, atol=1e-9)
        assert back.lam == model.lam
        assert back.observation_count_ == model.observation_count_

    def test_loaded_state_keeps_learning(self, tmp_path):
        rng = np.random.default_rng(9)
        model = LinUcbBandit(dim=4)
        updates = [(rng.random(4), rng.random()) for _ in range(10)]
        for x, r in updates[:5]:
            model.update(x, r)
        path = tmp_path / "state.json"
        model.save(path)
        back = LinUcbBandit.load(path)
        for x, r in updates[5:]:
            model.update(x, r)
            back.update(x, r)
        np.testing.assert_allclose(back.theta_, model.theta_, atol=1e-9)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "state.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ValueError):
            LinUcbBandit.load(path)


class TestTripletTraining:
    def test_train_and_jsonl_round_trip(self, tmp_path, two_anchor_curves):
        rng = np.random.default_rng(10)
        config = RewardConfig()
        triplets = []
        for _ in range(8):
            context = random_context(rng)
            arm = random_context(rng).objects
            triplets.append((context, arm, None))
        model = train_on_triplets(triplets, two_anchor_curves, config)
        assert model.observation_count_ == 8

        with_rewards = [
            (c, a, reward_of_arm(c, a, two_anchor_curves, config))
            for c, a, _ in triplets
        ]
        path = tmp_path / "triplets.jsonl"
        save_triplets_jsonl(path, with_rewards)
        back = load_triplets_jsonl(path)
        assert len(back) == 8
        model2 = train_on_triplets(back, two_anchor_curves, config)
        np.testing.assert_allclose(model2.theta_, model.theta_, atol=1e-5)

    def test_empty_dataset_errors(self):
        with pytest.raises(ValueError):
            train_on_triplets([])
