import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from faceveil.errors import (DimensionMismatch, EmptyGroup,
                             InsufficientFrames, ZeroVector)
from faceveil.landmarks import FixtureLandmarkBackend
from faceveil.privacy import (EmbeddingVector, LandmarkCropEmbedding,
                              SimilarityReport, cosine_similarity,
                              embed_face, evaluate_privacy,
                              sample_frame_pairs)
from faceveil.synthface import (FacePose, identity_params, make_clip,
                                render_face, speaking_pose_track)

from conftest import register_clip


def _vec(values, backend="b"):
    return EmbeddingVector(np.asarray(values, dtype=np.float64), backend)


class TestCosineSimilarity:
    def test_hand_example(self):
        a = _vec([2.0, 1.0, 2.0])
        b = _vec([1.0, 2.0, 2.0])
        assert cosine_similarity(a, b) == pytest.approx(8.0 / 9.0, abs=1e-12)

    def test_identical_vectors(self):
        v = _vec([0.3, -1.2, 4.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_opposite_vectors(self):
        assert cosine_similarity(_vec([1.0, 2.0]), _vec([-1.0, -2.0])) \
            == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal_vectors(self):
        assert cosine_similarity(_vec([1.0, 0.0]), _vec([0.0, 5.0])) == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine_similarity(_vec([0.0, 0.0]), _vec([1.0, 1.0]))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(_vec([1.0, 2.0]), _vec([1.0, 2.0, 3.0]))

    def test_backend_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(_vec([1.0], "x"), _vec([1.0], "y"))

    @settings(max_examples=60, deadline=None)
    @given(
        a=hnp.arrays(np.float64, 5, elements=st.floats(-10, 10)),
        b=hnp.arrays(np.float64, 5, elements=st.floats(-10, 10)),
        scale=st.floats(0.01, 100.0),
    )
    def test_symmetry_scale_invariance_and_bounds(self, a, b, scale):
        if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
            return
        va, vb = _vec(a), _vec(b)
        s = cosine_similarity(va, vb)
        assert -1.0 <= s <= 1.0
        assert cosine_similarity(vb, va) == pytest.approx(s, abs=1e-12)
        assert cosine_similarity(_vec(a * scale), vb) == pytest.approx(
            s, abs=1e-9)


class TestPairSampling:
    def _clips(self, n_real=10, n_syn=8):
        rng = np.random.RandomState(0)
        from faceveil.clips import VideoClip
        real = VideoClip("real", "driving",
                         rng.randint(0, 255, (n_real, 8, 8, 3), np.uint8), 30.0)
        syn = VideoClip("syn", "synthetic",
                        rng.randint(0, 255, (n_syn, 8, 8, 3), np.uint8), 30.0)
        return real, syn

    def test_deterministic_per_seed(self):
        real, syn = self._clips()
        a = sample_frame_pairs(real, syn, 20, "real_syn", seed=5)
        b = sample_frame_pairs(real, syn, 20, "real_syn", seed=5)
        assert a == b
        c = sample_frame_pairs(real, syn, 20, "real_syn", seed=6)
        assert a != c

    def test_real_real_indices_distinct(self):
        real, _ = self._clips()
        pairs = sample_frame_pairs(real, None, 200, "real_real", seed=1)
        assert all(i != j for (_, i), (_, j) in pairs)
        assert all(cid == "real" for p in pairs for cid, _ in p)

    def test_real_syn_references_both_clips(self):
        real, syn = self._clips()
        pairs = sample_frame_pairs(real, syn, 50, "real_syn", seed=2)
        assert all(a[0] == "real" and b[0] == "syn" for a, b in pairs)
        assert all(0 <= b[1] < 8 for _, b in pairs)

    def test_sampling_roughly_uniform(self):
        real, syn = self._clips(n_real=4, n_syn=4)
        pairs = sample_frame_pairs(real, syn, 2000, "real_syn", seed=3)
        counts = np.bincount([i for (_, i), _ in pairs], minlength=4)
        assert counts.min() > 400  # expectation 500 per frame

    def test_too_few_frames_rejected(self):
        from faceveil.clips import VideoClip
        one = VideoClip("one", "driving", np.zeros((1, 8, 8, 3), np.uint8),
                        30.0)
        with pytest.raises(InsufficientFrames):
            sample_frame_pairs(one, None, 5, "real_real", seed=0)

    def test_bad_mode_and_count_rejected(self):
        real, syn = self._clips()
        with pytest.raises(ValueError):
            sample_frame_pairs(real, syn, 5, "nope", seed=0)
        with pytest.raises(ValueError):
            sample_frame_pairs(real, syn, 0, "real_syn", seed=0)


class TestSimilarityReport:
    def test_quartiles_hand_example(self):
        rep = SimilarityReport([0.1, 0.2, 0.3, 0.4], [0.5], 0.68, 0, "b")
        q = rep.quartiles("real_real")
        assert q["median"] == pytest.approx(0.25)
        assert q["q25"] == pytest.approx(0.175)
        assert q["q75"] == pytest.approx(0.325)

    def test_fraction_below_threshold(self):
        rep = SimilarityReport([0.5, 0.7, 0.6, 0.9], [0.1, 0.9], 0.68, 0, "b")
        assert rep.fraction_below_threshold("real_real") == 0.5
        assert rep.fraction_below_threshold("real_syn") == 0.5

    def test_out_of_range_values_rejected(self):
        with pytest.raises(ValueError):
            SimilarityReport([1.5], [0.0], 0.68, 0, "b")

    def test_save_json_and_csv(self, tmp_path):
        rep = SimilarityReport([0.1, 0.2], [0.3], 0.68, 4, "b")
        rep.save(tmp_path / "rep.json", tmp_path / "rep.csv")
        data = json.loads((tmp_path / "rep.json").read_text())
        assert data["threshold"] == 0.68
        assert data["groups"]["real_real"]["n_pairs"] == 2
        rows = (tmp_path / "rep.csv").read_text().strip().splitlines()
        assert rows[0] == "group,csim"
        assert len(rows) == 4


class TestEmbeddingBackend:
    def _backend_with(self, frames_landmarks):
        lb = FixtureLandmarkBackend()
        for frame, lm in frames_landmarks:
            lb.register(frame, lm)
        return LandmarkCropEmbedding(lb)

    def test_same_identity_high_similarity(self):
        a = render_face(identity_params(1), FacePose())
        b = render_face(identity_params(1), FacePose(mouth_open=0.1))
        backend = self._backend_with([a, b])
        ea = embed_face(a[0], backend)
        eb = embed_face(b[0], backend)
        assert cosine_similarity(ea, eb) > 0.9

    def test_cross_identity_low_similarity(self):
        a = render_face(identity_params(1), FacePose())
        c = render_face(identity_params(2), FacePose())
        backend = self._backend_with([a, c])
        assert cosine_similarity(embed_face(a[0], backend),
                                 embed_face(c[0], backend)) < 0.68

    def test_deterministic(self):
        a = render_face(identity_params(1), FacePose())
        backend = self._backend_with([a])
        assert np.array_equal(embed_face(a[0], backend).values,
                              embed_face(a[0], backend).values)


class TestEvaluatePrivacy:
    @pytest.fixture(scope="class")
    @staticmethod
    def report_inputs():
        poses = speaking_pose_track(6, rng_seed=4)
        real, real_track = make_clip(identity_params(1), poses, "real",
                                     size=(256, 256))
        syn, syn_track = make_clip(identity_params(9), poses, "syn",
                                   size=(256, 256))
        lb = FixtureLandmarkBackend()
        register_clip(lb, real, real_track)
        register_clip(lb, syn, syn_track)
        return real, syn, LandmarkCropEmbedding(lb)

    def test_groups_separate_and_threshold_recorded(self, report_inputs):
        real, syn, backend = report_inputs
        rep = evaluate_privacy(real, syn, backend, n_pairs=20, seed=0)
        assert rep.threshold == 0.68
        assert rep.quartiles("real_real")["median"] > 0.9
        assert rep.quartiles("real_syn")["median"] < 0.68
        assert rep.fraction_below_threshold("real_syn") == 1.0

    def test_deterministic_for_fixed_seed(self, report_inputs):
        real, syn, backend = report_inputs
        a = evaluate_privacy(real, syn, backend, n_pairs=10, seed=3)
        b = evaluate_privacy(real, syn, backend, n_pairs=10, seed=3)
        assert a.real_real == b.real_real
        assert a.real_syn == b.real_syn
        assert a.pair_manifest == b.pair_manifest
