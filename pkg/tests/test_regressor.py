import numpy as np
import pytest

from conformal_teleop import netcore, regressor
from conformal_teleop.envs import grid
from conformal_teleop.metrics import interval_length
from conformal_teleop.rng import Xoshiro256


def _zero_qr_model(n_in=3, n_a=2):
    dims = [n_in, 6, 3 * n_a]
    weights = [np.zeros((dims[k], dims[k + 1])) for k in range(len(dims) - 1)]
    biases = [np.zeros(dims[k + 1]) for k in range(len(dims) - 1)]
    return netcore.Mlp(layer_dims=dims, n_a=n_a, weights=weights, biases=biases)


class TestLabeledTriple:
    def test_finite_required(self):
        with pytest.raises(ValueError):
            regressor.LabeledTriple(np.array([np.inf]), np.zeros(1), np.zeros(1))

    def test_holds_arrays(self):
        triple = regressor.LabeledTriple([1, 2], [0.5], [1, 0])
        assert triple.state.shape == (2,)
        assert triple.low_input.shape == (1,)
        assert triple.action.shape == (2,)


class TestQrPredict:
    def test_zero_model_zero_prediction(self):
        model = _zero_qr_model()
        pred = regressor.qr_predict(model, np.array([0.3, 0.9]), np.array([0.5]))
        assert np.array_equal(pred.a_hat, np.zeros(2))
        assert np.array_equal(pred.q_lo, np.zeros(2))
        assert np.array_equal(pred.q_hi, np.zeros(2))

    def test_round_trip_identical(self, tmp_path):
        model = netcore.initialize([3, 8, 6, 6], n_a=2, seed=4)
        netcore.save_model(model, tmp_path / "m.json")
        loaded, _ = netcore.load_model(tmp_path / "m.json")
        s, h = np.array([0.1, 0.7]), np.array([0.3])
        a = regressor.qr_predict(model, s, h)
        b = regressor.qr_predict(loaded, s, h)
        assert np.array_equal(a.a_hat, b.a_hat)
        assert np.array_equal(a.q_lo, b.q_lo)
        assert np.array_equal(a.q_hi, b.q_hi)

    def test_tunnel_spread_below_open_spread(self, grid_precision_bundle):
        model = grid_precision_bundle["model"]
        entry = grid_precision_bundle["entry"]
        env = entry.env_factory()
        calib = entry.gen_calib("standard", grid_precision_bundle["seed"])
        tunnel, open_region = [], []
        for tr in calib.trajectories:
            for t in range(len(tr)):
                cell = tr.states[t]
                if len(tunnel) >= 20 and len(open_region) >= 20:
                    break
                in_tun = grid.in_tunnel(cell)
                if (in_tun and len(tunnel) >= 20) or (not in_tun and len(open_region) >= 20):
                    continue
                pred = regressor.qr_predict(model, env.norm_state(cell), tr.inputs[t])
                spread = float(np.mean(pred.spread()))
                (tunnel if in_tun else open_region).append(spread)
        assert len(tunnel) >= 20 and len(open_region) >= 20
        assert np.mean(tunnel[:20]) < np.mean(open_region[:20])


@pytest.fixture(scope="module")
def small_dataset():
    # zero-noise constant targets: the variance heads have a floor of 0
    rng = Xoshiro256(21)
    x = np.array([[rng.uniform(-1, 1), rng.uniform(-1, 1)] for _ in range(64)])
    y = np.tile(np.array([0.3, -0.2]), (len(x), 1))
    return x, y


@pytest.fixture(scope="module")
def trained_ensemble(small_dataset):
    # lr below the default: the NLL variance floor under constant-lr SGD
    # scales with the learning rate
    cfg = netcore.TrainConfig(learning_rate=0.005, epochs=500, batch_size=8, seed=30)
    return regressor.ensemble_train(small_dataset, cfg)


class TestEnsemble:
    def test_member_count_enforced(self):
        member = netcore.initialize([2, 6, 4], n_a=2, seed=0)
        with pytest.raises(ValueError):
            regressor.EnsembleModel(members=[member] * 3)

    def test_two_heads_enforced(self):
        member = netcore.initialize([2, 6, 6], n_a=2, seed=0)  # 3 heads
        with pytest.raises(ValueError):
            regressor.EnsembleModel(members=[member] * 5)

    def test_same_seed_identical(self, small_dataset):
        cfg = netcore.TrainConfig(epochs=5, seed=9)
        e1 = regressor.ensemble_train(small_dataset, cfg)
        e2 = regressor.ensemble_train(small_dataset, cfg)
        for m1, m2 in zip(e1.members, e2.members):
            for w1, w2 in zip(m1.weights, m2.weights):
                assert np.array_equal(w1, w2)

    def test_members_distinct(self, trained_ensemble):
        members = trained_ensemble.members
        assert len(members) == 5
        for i in range(5):
            for j in range(i + 1, 5):
                diff = max(np.max(np.abs(a - b))
                           for a, b in zip(members[i].weights, members[j].weights))
                assert diff > 0.0

    def test_zero_noise_data_shrinks_member_variance(self, trained_ensemble, small_dataset):
        x, _ = small_dataset
        variances = []
        for row in x[:40]:
            for member in trained_ensemble.members:
                _, var = regressor.member_heads(member, row)
                variances.append(np.mean(var))
        assert np.mean(variances) < 1e-2

    def test_identical_members_mixture(self):
        mus = np.tile(np.array([0.5, -1.0]), (5, 1))
        variances = np.tile(np.array([0.04, 0.09]), (5, 1))
        mu, sigma = regressor.mixture_moments(mus, variances)
        assert mu == pytest.approx([0.5, -1.0])
        assert sigma == pytest.approx([0.2, 0.3])

    def test_two_member_harness_moment_matching(self):
        # mu = +-1 with zero member variance: mixture variance is exactly 1
        mus = np.array([[1.0], [-1.0]])
        variances = np.zeros((2, 1))
        mu, sigma = regressor.mixture_moments(mus, variances)
        assert mu[0] == pytest.approx(0.0)
        assert sigma[0] ** 2 == pytest.approx(1.0)

    def test_law_of_total_variance(self):
        rng = Xoshiro256(14)
        for _ in range(30):
            mus = np.array([[rng.normal(0, 2) for _ in range(3)] for _ in range(5)])
            variances = np.array([[rng.uniform(0, 1) for _ in range(3)] for _ in range(5)])
            _, sigma = regressor.mixture_moments(mus, variances)
            var = sigma ** 2
            assert np.all(var >= variances.mean(axis=0) - 1e-12)
            assert np.all(var >= mus.var(axis=0) - 1e-12)

    def test_interval_is_one_sigma_band(self, trained_ensemble):
        s, h = np.array([0.2]), np.array([0.4])
        mu, sigma = regressor.ensemble_predict(trained_ensemble, s, h)
        interval = regressor.ensemble_interval(trained_ensemble, s, h)
        assert interval.lower == pytest.approx(mu - sigma)
        assert interval.upper == pytest.approx(mu + sigma)
        assert interval_length(interval) == pytest.approx(float(np.mean(2 * sigma)))

    def test_sigma_zero_degenerate(self):
        mus = np.tile(np.array([1.5]), (5, 1))
        variances = np.zeros((5, 1))
        mu, sigma = regressor.mixture_moments(mus, variances)
        assert sigma[0] == 0.0

    def test_nll_curve_mostly_decreasing(self, small_dataset):
        x, y = small_dataset
        member = netcore.initialize(netcore.default_layer_dims(2, 2, n_heads=2), 2, seed=3)
        cfg = netcore.TrainConfig(epochs=60, seed=3)
        _, curve = netcore.train(member, (x, y), cfg, objective=regressor.GaussianNllObjective())
        drops = sum(1 for a, b in zip(curve, curve[1:]) if b <= a)
        assert drops / (len(curve) - 1) >= 0.9

    def test_save_load_round_trip(self, trained_ensemble, tmp_path):
        regressor.save_ensemble(trained_ensemble, tmp_path / "ens")
        loaded = regressor.load_ensemble(tmp_path / "ens")
        s, h = np.array([0.3]), np.array([-0.2])
        mu1, s1 = regressor.ensemble_predict(trained_ensemble, s, h)
        mu2, s2 = regressor.ensemble_predict(loaded, s, h)
        assert np.array_equal(mu1, mu2)
        assert np.array_equal(s1, s2)
