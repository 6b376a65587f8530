import numpy as np
import pytest

from gesturegen.corpus import DatasetRecord, WordSpan
from gesturegen.errors import EmptyDataset, InvalidConfig, LengthMismatch
from gesturegen.model import ModelConfig, init_model
from gesturegen.pose import RawPose, fit_pca
from gesturegen.text import EmbeddingTable
from gesturegen.training import (
    AdamState,
    Hyperparams,
    TrainingPair,
    adam_step,
    clip_gradients,
    compute_loss,
    compute_loss_graph,
    make_training_pairs,
    train_model,
)


class TestHyperparams:
    def test_paper_defaults(self):
        h = Hyperparams()
        assert (h.alpha, h.beta, h.lr, h.batch_size) == (0.01, 1.0, 0.0001, 64)
        assert (h.clip_lo, h.clip_hi, h.dropout, h.epochs) == (-5.0, 5.0, 0.1, 560)

    @pytest.mark.parametrize("kwargs", [{"alpha": -1}, {"lr": 0}, {"clip_lo": 5, "clip_hi": -5}])
    def test_validation(self, kwargs):
        with pytest.raises(InvalidConfig):
            Hyperparams(**kwargs)


class TestComputeLoss:
    def test_constant_equal_sequences(self):
        seq = np.tile(np.arange(10.0), (4, 1))
        out = compute_loss(seq, seq.copy(), Hyperparams())
        assert (out.mse, out.continuity, out.variance, out.total) == (0.0, 0.0, 0.0, 0.0)

    def test_hand_continuity(self):
        # m=3: zero vector, e1, e1 -> (1 + 0) / 2
        pred = np.zeros((3, 10))
        pred[1, 0] = 1.0
        pred[2, 0] = 1.0
        out = compute_loss(pred, pred.copy(), Hyperparams())
        assert abs(out.continuity - 0.5) < 1e-12

    def test_hand_variance_and_total(self):
        # m=2, dim-1 values (0, 2): population variance 1 in that dimension
        pred = np.zeros((2, 10))
        pred[1, 0] = 2.0
        h = Hyperparams(alpha=0.01, beta=1.0)
        out = compute_loss(pred, pred.copy(), h)
        assert abs(out.variance - (-0.1)) < 1e-12
        assert abs(out.continuity - 2.0) < 1e-12
        assert abs(out.total - (out.mse + 0.01 * 2.0 + (-0.1))) < 1e-12
        assert out.mse == 0.0

    def test_identity_on_random_data(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            h = Hyperparams(alpha=rng.uniform(0, 2), beta=rng.uniform(0, 2))
            pred = rng.normal(size=(6, 10))
            target = rng.normal(size=(6, 10))
            out = compute_loss(pred, target, h)
            assert abs(out.total - (out.mse + h.alpha * out.continuity + h.beta * out.variance)) < 1e-12
            assert out.mse >= 0 and out.continuity >= 0 and out.variance <= 0

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(1)
        pred = rng.normal(size=(5, 10))
        target = rng.normal(size=(5, 10))
        shift = rng.normal(size=10)
        h = Hyperparams()
        a = compute_loss(pred, target, h)
        b = compute_loss(pred + shift, target, h)
        assert abs(a.continuity - b.continuity) < 1e-12
        assert abs(a.variance - b.variance) < 1e-12
        assert abs(a.mse - b.mse) > 1e-6  # mse is not shift invariant

    def test_errors(self):
        h = Hyperparams()
        with pytest.raises(LengthMismatch):
            compute_loss(np.zeros((3, 10)), np.zeros((4, 10)), h)
        with pytest.raises(LengthMismatch):
            compute_loss(np.zeros((1, 10)), np.zeros((1, 10)), h)

    def test_graph_matches_numeric(self):
        from gesturegen.autodiff import Tensor

        rng = np.random.default_rng(2)
        pred = rng.normal(size=(7, 10))
        target = rng.normal(size=(7, 10))
        h = Hyperparams(alpha=0.3, beta=0.7)
        numeric = compute_loss(pred, target, h)
        breakdown, _ = compute_loss_graph(Tensor(pred[None]), target[None], h)
        assert abs(numeric.total - breakdown.total) < 1e-12
        assert abs(numeric.mse - breakdown.mse) < 1e-12


class TestClipAndAdam:
    def _store(self):
        model = init_model(ModelConfig(word_dim=3, hidden=2, att_dim=2, n_seed_poses=1, n_output_poses=2), 0)
        return model.store

    def test_clip_cases(self):
        store = self._store()
        p = store["dec.post.b"]
        p.grad[...] = 0.0
        p.grad[0] = 7.2
        p.grad[1] = -12.0
        p.grad[2] = 3.3
        clip_gradients(store, -5.0, 5.0)
        assert p.grad[0] == 5.0
        assert p.grad[1] == -5.0
        assert p.grad[2] == 3.3

    def test_clip_idempotent(self):
        store = self._store()
        rng = np.random.default_rng(0)
        for _, p in store.items():
            p.grad[...] = rng.normal(0, 10, p.grad.shape)
        clip_gradients(store, -5, 5)
        snapshot = {name: p.grad.copy() for name, p in store.items()}
        clip_gradients(store, -5, 5)
        assert all(np.array_equal(p.grad, snapshot[name]) for name, p in store.items())

    def test_adam_zero_gradient(self):
        store = self._store()
        state = AdamState(store)
        before = {name: p.value.copy() for name, p in store.items()}
        store.zero_grads()
        adam_step(store, state, 1e-4)
        assert state.step_count == 1
        assert all(np.array_equal(p.value, before[name]) for name, p in store.items())

    def test_adam_first_step_closed_form(self):
        store = self._store()
        state = AdamState(store)
        p = store["dec.post.b"]
        start = p.value.copy()
        p.grad[...] = 0.0
        p.grad[0] = 1.0
        p.grad[1] = -0.5
        adam_step(store, state, 1e-4)
        delta = p.value - start
        # first step: m_hat = g, v_hat = g^2, so the step is -lr * sign-ish
        assert abs(delta[0] - (-1e-4)) < 1e-9
        assert abs(delta[1] - (+1e-4)) < 1e-9

    def test_adam_leaves_gradients(self):
        store = self._store()
        state = AdamState(store)
        p = store["dec.post.b"]
        p.grad[...] = 2.0
        adam_step(store, state, 1e-3)
        assert np.all(p.grad == 2.0)


def _record(n_frames, words, fps=12.0):
    base = np.array(
        [[320, 110], [320, 190], [375, 190], [395, 255], [405, 320], [265, 190], [245, 255], [235, 320]],
        dtype=float,
    )
    rng = np.random.default_rng(0)
    frames = [RawPose.complete(base + rng.normal(0, 2.0, (8, 2))) for _ in range(n_frames)]
    return DatasetRecord(id="r0", fps=fps, frame_height=400, words=words, frames=frames)


@pytest.fixture(scope="module")
def small_pca():
    rng = np.random.default_rng(3)
    base = np.array(
        [[320, 110], [320, 190], [375, 190], [395, 255], [405, 320], [265, 190], [245, 255], [235, 320]],
        dtype=float,
    )
    poses = []
    from gesturegen.pose import normalize_pose

    for _ in range(40):
        poses.append(normalize_pose(RawPose.complete(base + rng.normal(0, 6.0, (8, 2)))))
    return fit_pca(poses)


class TestMakeTrainingPairs:
    def test_exact_window_one_pair(self, small_pca):
        rec = _record(30, [WordSpan("hello", 0.5, 1.0)])
        pairs = make_training_pairs([rec], small_pca, n=10, m=20)
        assert len(pairs) == 1
        assert pairs[0].words == ["hello"]
        assert pairs[0].target_poses.shape == (30, 10)

    def test_two_windows_with_stride_m(self, small_pca):
        rec = _record(50, [WordSpan("a", 0.0, 2.0), WordSpan("b", 2.0, 4.0)])
        pairs = make_training_pairs([rec], small_pca, n=10, m=20)
        assert len(pairs) == 2

    def test_short_record_no_pairs(self, small_pca):
        rec = _record(29, [WordSpan("a", 0.0, 2.0)])
        assert make_training_pairs([rec], small_pca, n=10, m=20) == []

    def test_no_words_dropped(self, small_pca):
        rec = _record(30, [])
        assert make_training_pairs([rec], small_pca, n=10, m=20) == []

    def test_words_follow_chunk_partition(self, small_pca):
        # 50 frames at 12 fps is 4.17 s; two words give one word per chunk,
        # so the first window trains on "early", the second on "later"
        rec = _record(50, [WordSpan("early", 0.0, 1.0), WordSpan("later", 3.0, 4.0)])
        pairs = make_training_pairs([rec], small_pca, n=10, m=20)
        assert pairs[0].words == ["early"]
        assert pairs[1].words == ["later"]

    def test_first_window_zero_seeded_like_generation(self, small_pca):
        rec = _record(50, [WordSpan("a", 0.0, 2.0), WordSpan("b", 2.0, 4.0)])
        pairs = make_training_pairs([rec], small_pca, n=10, m=20)
        assert np.array_equal(pairs[0].target_poses[:10], np.zeros((10, 10)))
        assert not np.array_equal(pairs[1].target_poses[:10], np.zeros((10, 10)))

    def test_seed_frames_are_preceding_ground_truth(self, small_pca):
        rec = _record(50, [WordSpan("a", 0.0, 2.0), WordSpan("b", 2.0, 4.0)])
        pairs = make_training_pairs([rec], small_pca, n=10, m=20)
        # the second window's seeds are the first window's last 10 targets
        assert np.array_equal(pairs[1].target_poses[:10], pairs[0].target_poses[20:])


def _toy_table(dim=6):
    rng = np.random.default_rng(4)
    vocab = ["wave", "point", "rest", "lift"]
    return EmbeddingTable(dim=dim, entries={w: rng.normal(size=dim) for w in vocab})


def _template_pairs(count, n, m, rng):
    """Pairs sampled from one smooth template so a tiny model can memorize."""
    t = np.arange(n + m) / 10.0
    template = np.zeros((n + m, 10))
    template[:, 0] = np.sin(2 * np.pi * 0.4 * t)
    template[:, 1] = 0.5 * np.cos(2 * np.pi * 0.4 * t)
    pairs = []
    for i in range(count):
        noise = rng.normal(0, 0.01, template.shape)
        pairs.append(TrainingPair(words=["wave", "point"], target_poses=template + noise))
    return pairs


class TestTrainModel:
    def test_empty_dataset(self):
        model = init_model(ModelConfig(word_dim=6, hidden=4, att_dim=4, n_seed_poses=2, n_output_poses=3), 0)
        with pytest.raises(EmptyDataset):
            train_model([], Hyperparams(epochs=1), model, _toy_table())

    def test_deterministic_history(self):
        rng = np.random.default_rng(5)
        cfg = ModelConfig(word_dim=6, hidden=5, att_dim=5, n_seed_poses=2, n_output_poses=4, dropout=0.1)
        pairs = _template_pairs(6, 2, 4, rng)
        h = Hyperparams(epochs=3, lr=1e-3, batch_size=4, seed=7)
        r1 = train_model(pairs, h, init_model(cfg, seed=1), _toy_table())
        r2 = train_model(pairs, h, init_model(cfg, seed=1), _toy_table())
        assert [b.total for b in r1.history] == [b.total for b in r2.history]
        for name, p in r1.model.store.items():
            assert np.array_equal(p.value, r2.model.store[name].value)

    def test_alpha_beta_zero_total_equals_mse(self):
        rng = np.random.default_rng(6)
        cfg = ModelConfig(word_dim=6, hidden=5, att_dim=5, n_seed_poses=2, n_output_poses=4, dropout=0.0)
        pairs = _template_pairs(5, 2, 4, rng)
        h = Hyperparams(alpha=0.0, beta=0.0, epochs=3, lr=1e-3, batch_size=8, dropout=0.0, seed=1)
        result = train_model(pairs, h, init_model(cfg, seed=2), _toy_table())
        for b in result.history:
            assert b.total == b.mse

    def test_overfit_single_template(self):
        # 10 pairs from one synthetic template, tiny model, 300 epochs:
        # the final mse must fall below 5% of the first epoch's mse.
        rng = np.random.default_rng(7)
        n, m = 3, 6
        cfg = ModelConfig(word_dim=6, hidden=16, att_dim=16, n_seed_poses=n, n_output_poses=m, dropout=0.0)
        pairs = _template_pairs(10, n, m, rng)
        h = Hyperparams(alpha=0.0, beta=0.0, epochs=300, lr=3e-3, batch_size=10, dropout=0.0, seed=3)
        result = train_model(pairs, h, init_model(cfg, seed=3), _toy_table())
        assert result.history[-1].mse < 0.05 * result.history[0].mse

    def test_epoch_callback(self):
        rng = np.random.default_rng(8)
        cfg = ModelConfig(word_dim=6, hidden=4, att_dim=4, n_seed_poses=2, n_output_poses=4, dropout=0.1)
        pairs = _template_pairs(4, 2, 4, rng)
        seen = []
        train_model(
            pairs,
            Hyperparams(epochs=2, lr=1e-3, batch_size=4, seed=0),
            init_model(cfg, seed=0),
            _toy_table(),
            on_epoch=lambda e, model, b: seen.append(e),
        )
        assert seen == [0, 1]
