import numpy as np
import pytest
import torch
from torch.nn import functional as F

from scenelayout.decoder import (
    DualBandFuzzyNet,
    FuzzyAttentionLayer,
    FuzzyDecoder,
    ica_artifact_removal,
)
from scenelayout.fuzzy import tal_forward
from scenelayout.synth import HIGH_QUALITY, SignalSynthesizer
from scenelayout.validation import named_rng


@pytest.fixture(scope="module")
def overfit_decoder():
    """Small high-SNR training run shared by the slower behavioral tests."""
    rng = named_rng(0, "overfit")
    synth = SignalSynthesizer()
    X, y = synth.dataset(10, HIGH_QUALITY, 3.0, rng)
    decoder = FuzzyDecoder(max_passes=200, random_state=0)
    decoder.fit(X, y)
    return decoder, synth, X, y


class TestLayerAgainstReference:
    def test_matches_numpy_reference(self):
        torch.manual_seed(3)
        layer = FuzzyAttentionLayer(5, 4, dtype=torch.float64)
        x = torch.randn(3, 9, 5, dtype=torch.float64)
        with torch.no_grad():
            y, w = layer(x)
        rules = layer.rules()
        for b in range(3):
            y_ref, w_ref = tal_forward(x[b].numpy().T, rules)
            np.testing.assert_allclose(y[b].numpy().T, y_ref, atol=1e-12)
            np.testing.assert_allclose(w[b].numpy(), w_ref, atol=1e-12)

    def test_strengths_sum_to_one(self):
        torch.manual_seed(4)
        layer = FuzzyAttentionLayer(6, 5)
        x = torch.randn(2, 11, 6)
        with torch.no_grad():
            _, w = layer(x)
        np.testing.assert_allclose(w.sum(-1).numpy(), 1.0, atol=1e-6)


class TestGradients:
    def test_analytical_gradients_match_finite_differences(self):
        """Every parameter family, small double-precision model."""
        torch.manual_seed(5)
        gen = torch.Generator().manual_seed(5)
        net = DualBandFuzzyNet(
            n_channels=3, n_rules=2, sal_segments=4, hidden_units=8,
            n_classes=6, dropout=0.25, n_bands=2, generator=gen,
            dtype=torch.float64,
        )
        net.eval()  # dropout off; gradients still flow
        bands = [torch.randn(2, 3, 8, dtype=torch.float64, generator=gen)
                 for _ in range(2)]
        labels = torch.tensor([1, 4])

        def loss_value():
            return F.cross_entropy(net(bands), labels)

        loss = loss_value()
        params = dict(net.named_parameters())
        grads = torch.autograd.grad(loss, list(params.values()))
        h = 1e-6
        for (name, p), g in zip(params.items(), grads):
            fd = torch.zeros_like(p)
            flat = p.data.view(-1)
            fd_flat = fd.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                hi = loss_value().item()
                flat[i] = orig - h
                lo = loss_value().item()
                flat[i] = orig
                fd_flat[i] = (hi - lo) / (2 * h)
            denom = max(g.norm().item(), fd.norm().item(), 1e-12)
            rel = (g - fd).norm().item() / denom
            assert rel <= 1e-4, f"{name}: relative gradient error {rel}"


class TestFitValidation:
    def test_missing_class_rejected(self):
        rng = named_rng(1, "v")
        X = rng.normal(size=(10, 4, 100))
        y = np.array([0, 1, 2, 3, 4, 0, 1, 2, 3, 4])  # class 5 absent
        with pytest.raises(ValueError, match="missing classes"):
            FuzzyDecoder(max_passes=1).fit(X, y)

    def test_band_outside_nyquist_rejected(self):
        rng = named_rng(2, "v")
        X = rng.normal(size=(6, 4, 100))
        y = np.arange(6)
        with pytest.raises(ValueError):
            FuzzyDecoder(bands=((6.0, 400.0),), max_passes=1).fit(X, y)

    def test_channel_mismatch_at_predict(self):
        rng = named_rng(3, "v")
        X = rng.normal(size=(6, 4, 200))
        y = np.arange(6)
        dec = FuzzyDecoder(max_passes=1, min_passes=1).fit(X, y)
        with pytest.raises(ValueError, match="channels"):
            dec.predict(rng.normal(size=(1, 5, 200)))

    def test_unfitted_predict_rejected(self):
        with pytest.raises(RuntimeError):
            FuzzyDecoder().predict(np.zeros((1, 4, 100)))


class TestTrainingBehavior:
    def test_identical_inputs_plateau_at_ln6(self):
        rng = named_rng(4, "p")
        one = rng.normal(size=(4, 300))
        X = np.stack([one] * 36)
        y = np.tile(np.arange(6), 6)
        dec = FuzzyDecoder(max_passes=40, min_passes=20, random_state=1)
        dec.fit(X, y)
        assert dec.loss_history_[-1] == pytest.approx(np.log(6), abs=0.05)

    def test_early_losses_descend(self):
        # full-batch, dropout off: the per-pass loss is then deterministic
        rng = named_rng(5, "d")
        synth = SignalSynthesizer()
        X, y = synth.dataset(4, HIGH_QUALITY, 1.5, rng)
        dec = FuzzyDecoder(
            max_passes=10, min_passes=10, batch_size=24, dropout=0.0,
            random_state=2,
        )
        dec.fit(X, y)
        losses = dec.loss_history_[:10]
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_zeroed_head_predicts_uniform(self):
        rng = named_rng(7, "z")
        synth = SignalSynthesizer()
        X, y = synth.dataset(1, HIGH_QUALITY, 1.0, rng)
        dec = FuzzyDecoder(max_passes=1, min_passes=1).fit(X, y)
        head_out = dec.model_.head[-1]
        with torch.no_grad():
            head_out.weight.zero_()
            head_out.bias.zero_()
        proba = dec.predict_proba(X[:3])
        np.testing.assert_allclose(proba, 1.0 / 6.0, atol=1e-7)

    def test_deterministic_under_fixed_seed(self):
        rng = named_rng(6, "s")
        synth = SignalSynthesizer()
        X, y = synth.dataset(2, HIGH_QUALITY, 1.0, rng)
        a = FuzzyDecoder(max_passes=3, min_passes=1, random_state=7).fit(X, y)
        b = FuzzyDecoder(max_passes=3, min_passes=1, random_state=7).fit(X, y)
        for (ka, va), (kb, vb) in zip(
            a.model_.state_dict().items(), b.model_.state_dict().items()
        ):
            assert ka == kb
            np.testing.assert_array_equal(va.numpy(), vb.numpy())


class TestTrainedModel:
    def test_overfit_small_high_snr_set(self, overfit_decoder):
        decoder, _, X, y = overfit_decoder
        assert len(decoder.loss_history_) <= 200
        train_acc = float((decoder.predict(X) == y).mean())
        assert train_acc >= 0.95

    def test_probabilities_sum_to_one(self, overfit_decoder):
        decoder, _, X, _ = overfit_decoder
        proba = decoder.predict_proba(X[:5])
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-6)
        single = decoder.classify(X[0])
        assert single.shape == (6,)
        assert single.sum() == pytest.approx(1.0, abs=1e-6)

    def test_high_snr_trial_decodes_correctly(self, overfit_decoder):
        decoder, synth, _, _ = overfit_decoder
        rng = named_rng(42, "fresh")
        epoch = synth.trial(1, HIGH_QUALITY, 3.0, rng)  # 7.5 Hz class
        assert int(decoder.predict(epoch[None])[0]) == 1

    def test_firing_strength_shapes(self, overfit_decoder):
        decoder, synth, X, _ = overfit_decoder
        w_t = decoder.temporal_firing_strengths(X[0])
        assert w_t.shape == (X.shape[2], decoder.n_rules)
        np.testing.assert_allclose(w_t.sum(axis=1), 1.0, atol=1e-5)
        w_c = decoder.spatial_firing_strengths(X[0])
        assert w_c.shape == (12, decoder.n_rules)
        np.testing.assert_allclose(w_c.sum(axis=1), 1.0, atol=1e-5)

    def test_save_load_round_trip(self, overfit_decoder, tmp_path):
        decoder, _, X, _ = overfit_decoder
        path = tmp_path / "model.json"
        decoder.save(path)
        back = FuzzyDecoder.load(path)
        np.testing.assert_allclose(
            back.predict_proba(X[:4]), decoder.predict_proba(X[:4]), atol=1e-5
        )

    def test_corrupt_model_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "nope"}')
        with pytest.raises(ValueError):
            FuzzyDecoder.load(path)

    def test_circular_shift_tolerance(self, highsnr_split):
        """Mean-pooled classification is phase-robust: circular shifts of
        a periodic input leave the predicted class unchanged in at least
        85% of (class, shift) cases (the documented tolerance of the
        pooling approximation)."""
        decoder = highsnr_split["decoder"]
        synth = highsnr_split["synth"]
        rng = named_rng(8, "shift")
        ok = 0
        total = 0
        for cls in range(6):
            epoch = synth.trial(cls, HIGH_QUALITY, 3.0, rng)
            base = int(decoder.predict(epoch[None])[0])
            for shift in (57, 125, 250, 381, 500, 750, 1000, 1250):
                shifted = np.roll(epoch, shift, axis=1)
                total += 1
                if int(decoder.predict(shifted[None])[0]) == base:
                    ok += 1
        assert ok / total >= 0.85


def test_ica_slot_is_identity():
    x = np.random.default_rng(0).normal(size=(4, 100))
    np.testing.assert_array_equal(ica_artifact_removal(x), x)
