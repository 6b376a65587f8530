import numpy as np
import pytest

from gesturegen.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from gesturegen.errors import CheckpointVersionError
from gesturegen.lifting import init_lift_params, lift_forward
from gesturegen.model import ModelConfig, init_model
from gesturegen.pose import NormalizedPose, fit_pca
from gesturegen.render import pose_svg, render
from gesturegen.synthesis import TimedPoseTrack


def _full_checkpoint():
    rng = np.random.default_rng(0)
    poses = [NormalizedPose.from_flat(rng.normal(size=16)) for _ in range(30)]
    pca = fit_pca(poses)
    model = init_model(ModelConfig(word_dim=6, hidden=5, att_dim=4, n_seed_poses=2, n_output_poses=3), seed=1)
    lift = init_lift_params(seed=2)
    lift.running["mean1"][...] = rng.normal(size=30)
    lift.running["var1"][...] = rng.uniform(0.5, 2.0, size=30)
    return Checkpoint(
        config={"epochs": 3, "seed": 1},
        pca=pca,
        model=model,
        lift=lift,
        embedding_ref={"path": "emb.txt", "sha256": "abc123"},
    )


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        ck = _full_checkpoint()
        path = tmp_path / "model.ggck"
        save_checkpoint(ck, path)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.pca.mean, ck.pca.mean)
        assert np.array_equal(loaded.pca.components, ck.pca.components)
        assert np.array_equal(loaded.pca.explained_variance_ratio, ck.pca.explained_variance_ratio)
        for name, p in ck.model.store.items():
            assert np.array_equal(loaded.model.store[name].value, p.value), name
        for name, p in ck.lift.store.items():
            assert np.array_equal(loaded.lift.store[name].value, p.value), name
        for key, value in ck.lift.running.items():
            assert np.array_equal(loaded.lift.running[key], value)
        assert loaded.config == ck.config
        assert loaded.embedding_ref == ck.embedding_ref

    def test_save_is_deterministic(self, tmp_path):
        ck = _full_checkpoint()
        save_checkpoint(ck, tmp_path / "a.ggck")
        save_checkpoint(ck, tmp_path / "b.ggck")
        assert (tmp_path / "a.ggck").read_bytes() == (tmp_path / "b.ggck").read_bytes()

    def test_partial_checkpoint(self, tmp_path):
        ck = Checkpoint(config={}, pca=_full_checkpoint().pca)
        save_checkpoint(ck, tmp_path / "p.ggck")
        loaded = load_checkpoint(tmp_path / "p.ggck")
        assert loaded.model is None and loaded.lift is None
        assert loaded.pca is not None

    def test_loaded_lift_behaves_identically(self, tmp_path):
        ck = _full_checkpoint()
        save_checkpoint(ck, tmp_path / "m.ggck")
        loaded = load_checkpoint(tmp_path / "m.ggck")
        x = np.random.default_rng(3).normal(size=(4, 14))
        assert np.array_equal(lift_forward(ck.lift, x), lift_forward(loaded.lift, x))


class TestVersioning:
    def test_corrupt_version_rejected(self, tmp_path):
        path = tmp_path / "m.ggck"
        save_checkpoint(_full_checkpoint(), path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99  # stomp the version field
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.ggck"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(path)


class TestRender:
    def test_files_and_manifest(self, tmp_path):
        rng = np.random.default_rng(1)
        poses = [NormalizedPose.from_flat(rng.normal(size=16)) for _ in range(5)]
        names = render(poses, tmp_path / "out")
        assert len(names) == 5
        assert (tmp_path / "out" / "manifest.json").exists()
        for name in names:
            assert (tmp_path / "out" / name).exists()

    def test_byte_deterministic(self, tmp_path):
        rng = np.random.default_rng(2)
        poses = [NormalizedPose.from_flat(rng.normal(size=16)) for _ in range(3)]
        render(poses, tmp_path / "a")
        render(poses, tmp_path / "b")
        for name in ("frame_00000.svg", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_track_requires_pca(self, tmp_path):
        from gesturegen.errors import InvalidConfig

        track = TimedPoseTrack(frames=np.zeros((2, 10)), fps=12.0)
        with pytest.raises(InvalidConfig):
            render(track, tmp_path / "x")

    def test_svg_is_wellformed(self):
        import xml.etree.ElementTree as ET

        pose = NormalizedPose.from_flat(np.random.default_rng(3).normal(size=16))
        ET.fromstring(pose_svg(pose))
