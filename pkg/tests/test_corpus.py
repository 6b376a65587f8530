import numpy as np
import pytest

from gesturegen.corpus import (
    DatasetRecord,
    WordSpan,
    corpus_vocabulary,
    curate_shots,
    load_records_jsonl,
    save_records_jsonl,
    synth_corpus,
)
from gesturegen.errors import InvalidConfig, MalformedFile
from gesturegen.pose import L_WRIST, R_WRIST, RawPose


def _passing_record(record_id="ok", n_frames=70, fps=12.0):
    """A synthetic record engineered to satisfy every curation rule."""
    rng = np.random.default_rng(0)
    base = np.array(
        [[320, 110], [320, 190], [375, 190], [395, 255], [405, 320], [265, 190], [245, 255], [235, 320]],
        dtype=float,
    )
    frames = []
    for i in range(n_frames):
        wobble = 6.0 * np.sin(2 * np.pi * 0.8 * i / fps)
        offsets = rng.normal(0, 0.5, (8, 2))
        offsets[:, 1] += wobble
        frames.append(RawPose.complete(base + offsets))
    words = [WordSpan("hello", 0.3, 0.8), WordSpan("there", 0.8, 1.3)]
    return DatasetRecord(id=record_id, fps=fps, frame_height=400, words=words, frames=frames)


class TestRecordValidation:
    def test_requires_frames(self):
        with pytest.raises(InvalidConfig):
            DatasetRecord(id="x", fps=12, frame_height=400, words=[], frames=[])

    def test_word_order(self):
        rec = _passing_record()
        with pytest.raises(InvalidConfig):
            DatasetRecord(
                id="x",
                fps=12,
                frame_height=400,
                words=[WordSpan("b", 1.0, 1.5), WordSpan("a", 0.5, 0.9)],
                frames=rec.frames,
            )


class TestCurateShots:
    def test_passing_record_kept(self):
        kept, report = curate_shots([_passing_record()])
        assert len(kept) == 1
        assert report.entries == [("ok", True, None)]

    def test_duration_rule(self):
        short = _passing_record("short", n_frames=58)  # 4.83 s < 5 s
        kept, report = curate_shots([short])
        assert kept == []
        assert report.entries[0] == ("short", False, "duration")

    def test_missing_joint_rule(self):
        rec = _passing_record("nomiss")
        frame = rec.frames[10]
        present = frame.present.copy()
        present[L_WRIST] = False
        rec.frames[10] = RawPose(frame.joints, present)
        kept, report = curate_shots([rec])
        assert kept == []
        assert report.entries[0][2] == "visibility"

    def test_size_rule(self):
        rec = _passing_record("small")
        tiny = [DatasetRecord(
            id="small",
            fps=rec.fps,
            frame_height=rec.frame_height,
            words=rec.words,
            frames=[RawPose.complete(f.joints * 0.3) for f in rec.frames],
        )]
        kept, report = curate_shots(tiny)
        assert kept == []
        assert report.entries[0][2] == "size"

    def test_still_picture_rule(self):
        rec = _passing_record("still")
        frozen = DatasetRecord(
            id="still",
            fps=rec.fps,
            frame_height=rec.frame_height,
            words=rec.words,
            frames=[rec.frames[0]] * len(rec.frames),
        )
        kept, report = curate_shots([frozen])
        assert kept == []
        assert report.entries[0][2] == "motion"

    def test_jitter_rule(self):
        rec = _passing_record("jitter")
        frames = list(rec.frames)
        jumped = frames[30].joints.copy()
        jumped += 200.0  # teleporting pose
        frames[30] = RawPose.complete(jumped)
        noisy = DatasetRecord(id="jitter", fps=rec.fps, frame_height=rec.frame_height, words=rec.words, frames=frames)
        kept, report = curate_shots([noisy])
        assert kept == []
        assert report.entries[0][2] == "jitter"

    def test_pure_filter_order_preserved(self):
        records = [_passing_record(f"r{i}") for i in range(3)]
        records.insert(1, _passing_record("bad", n_frames=30))
        kept, report = curate_shots(records)
        assert [r.id for r in kept] == ["r0", "r1", "r2"]
        assert [e[0] for e in report.entries] == ["r0", "bad", "r1", "r2"]
        assert len(report.entries) == len(records)


class TestSynthCorpus:
    def test_deterministic(self):
        a = synth_corpus(seed=1, n_sentences=4)
        b = synth_corpus(seed=1, n_sentences=4)
        for ra, rb in zip(a, b):
            assert ra.id == rb.id
            assert [w.surface for w in ra.words] == [w.surface for w in rb.words]
            assert all(np.array_equal(x.joints, y.joints) for x, y in zip(ra.frames, rb.frames))

    def test_all_records_pass_curation(self):
        records = synth_corpus(seed=2, n_sentences=40)
        kept, report = curate_shots(records)
        failures = [e for e in report.entries if not e[1]]
        assert failures == []
        assert len(kept) == 40

    def test_vocabulary_is_small(self):
        vocab = corpus_vocabulary()
        assert len(vocab) <= 50
        records = synth_corpus(seed=3, n_sentences=30)
        used = {w.surface for rec in records for w in rec.words}
        assert used <= set(vocab)

    def test_big_spreads_wider_than_small(self):
        records = synth_corpus(seed=4, n_sentences=60)

        def max_spread(rec):
            return max(np.linalg.norm(f.joints[L_WRIST] - f.joints[R_WRIST]) for f in rec.frames)

        bigs = [max_spread(r) for r in records if any(w.surface == "big" for w in r.words)]
        smalls = [max_spread(r) for r in records if any(w.surface == "small" for w in r.words)]
        assert bigs and smalls
        assert min(bigs) > max(smalls)

    def test_word_timestamps_cover_frames(self):
        for rec in synth_corpus(seed=5, n_sentences=5):
            assert rec.words[0].t_start >= 0
            assert rec.words[-1].t_end <= rec.duration + 1e-9


class TestJsonl:
    def test_round_trip(self, tmp_path):
        records = synth_corpus(seed=6, n_sentences=3)
        # punch one joint out to exercise the null path
        frame = records[0].frames[0]
        present = frame.present.copy()
        present[3] = False
        records[0].frames[0] = RawPose(frame.joints, present)
        path = tmp_path / "corpus.jsonl"
        save_records_jsonl(records, path)
        loaded = load_records_jsonl(path)
        assert len(loaded) == 3
        for a, b in zip(records, loaded):
            assert a.id == b.id and a.fps == b.fps and a.frame_height == b.frame_height
            assert [w.surface for w in a.words] == [w.surface for w in b.words]
            for fa, fb in zip(a.frames, b.frames):
                assert np.array_equal(fa.present, fb.present)
                assert np.array_equal(fa.joints[fa.present], fb.joints[fb.present])

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x"}\n')
        with pytest.raises(MalformedFile):
            load_records_jsonl(path)
        with pytest.raises(MalformedFile):
            load_records_jsonl(tmp_path / "missing.jsonl")
