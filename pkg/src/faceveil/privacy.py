"""Privacy evaluation: face embeddings, CSIM sampling, report assembly.

Real face recognizers plug in behind ``EmbeddingBackend``; the test
backend is a hand-crafted mean-face-subtracted appearance descriptor
plus landmark geometry, enough to separate the synthetic fixture
identities deterministically.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .clips import VideoClip
from .conditions import organ_bounding_boxes
from .errors import (DimensionMismatch, EmptyGroup, InsufficientFrames,
                     NoFaceDetected, ZeroVector)
from .landmarks import LandmarkBackend, LandmarkSet

DEFAULT_THRESHOLD = 0.68
DEFAULT_N_PAIRS = 50
_CROP_RES = 24


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    backend_name: str
    frame_ref: tuple[str, int] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(vals)):
            raise ValueError("embedding contains non-finite values")


class EmbeddingBackend:
    name = "abstract"

    def embed(self, frame: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class LandmarkCropEmbedding(EmbeddingBackend):
    """Deterministic descriptor: organ-box face crop (mean-face
    subtracted, z-scored) concatenated with landmark geometry ratios."""

    name = "landmark_crop"

    def __init__(self, landmark_backend: LandmarkBackend,
                 mean_face: np.ndarray | None = None):
        self.landmark_backend = landmark_backend
        if mean_face is None:
            from .synthface import make_template_bank
            crops = [self._crop_vector(t.image, t.landmarks)
                     for t in make_template_bank(12)]
            mean_face = np.mean(crops, axis=0)
        self.mean_face = mean_face

    @staticmethod
    def _crop_vector(frame: np.ndarray, lm: LandmarkSet) -> np.ndarray:
        boxes = organ_bounding_boxes(lm, pad_ratio=0.0)
        x0, y0, x1, y1 = boxes.union_box()
        # expand the union crop by 25% per side to include cheek context
        wpad, hpad = 0.25 * (x1 - x0), 0.25 * (y1 - y0)
        h, w = frame.shape[:2]
        x0 = int(max(x0 - wpad, 0))
        x1 = int(min(x1 + wpad, w))
        y0 = int(max(y0 - hpad, 0))
        y1 = int(min(y1 + hpad, h))
        crop = frame[y0:y1, x0:x1]
        small = cv2.resize(crop, (_CROP_RES, _CROP_RES),
                           interpolation=cv2.INTER_AREA)
        return small.astype(np.float64).ravel()

    def embed(self, frame: np.ndarray) -> np.ndarray:
        lm = self.landmark_backend.detect(frame)  # raises NoFaceDetected
        vec = self._crop_vector(frame, lm) - self.mean_face
        std = vec.std()
        if std > 0:
            vec = vec / std
        io = lm.interocular()
        geometry = np.array([
            np.linalg.norm(lm["mouth_right"] - lm["mouth_left"]) / io,
            np.linalg.norm(lm["nose_tip"] - lm["lip_top"]) / io,
            np.linalg.norm(lm["chin"] - lm["nose_tip"]) / io,
            np.linalg.norm(lm["jaw_right"] - lm["jaw_left"]) / io,
            (lm["left_brow_outer"][1] - lm["left_eye_center"][1]) / io,
            (lm["right_brow_outer"][1] - lm["right_eye_center"][1]) / io,
        ])
        geometry = (geometry - 1.0) * 8.0  # comparable scale to the crop part
        return np.concatenate([vec, geometry])


def embed_face(frame: np.ndarray, backend: EmbeddingBackend,
               frame_ref: tuple[str, int] | None = None) -> EmbeddingVector:
    if frame.size == 0:
        raise NoFaceDetected("empty frame")
    return EmbeddingVector(backend.embed(frame), backend.name, frame_ref)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.backend_name != b.backend_name:
        raise DimensionMismatch(
            f"backends differ: {a.backend_name} vs {b.backend_name}")
    if a.values.shape != b.values.shape:
        raise DimensionMismatch(
            f"dimensions differ: {a.values.shape} vs {b.values.shape}")
    na = np.linalg.norm(a.values)
    nb = np.linalg.norm(b.values)
    if na == 0 or nb == 0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    sim = float(np.dot(a.values, b.values) / (na * nb))
    return max(-1.0, min(1.0, sim))


def sample_frame_pairs(real: VideoClip, syn: VideoClip | None, n_pairs: int,
                       mode: str, seed: int) -> list[tuple[tuple[str, int], tuple[str, int]]]:
    """Seeded uniform frame pairs; real_real pairs use distinct indices."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if mode not in ("real_real", "real_syn"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    pairs = []
    if mode == "real_real":
        if real.frame_count < 2:
            raise InsufficientFrames("real_real needs at least 2 frames")
        for _ in range(n_pairs):
            i, j = rng.sample(range(real.frame_count), 2)
            pairs.append(((real.clip_id, i), (real.clip_id, j)))
    else:
        if syn is None:
            raise ValueError("real_syn mode needs a synthetic clip")
        for _ in range(n_pairs):
            i = rng.randrange(real.frame_count)
            j = rng.randrange(syn.frame_count)
            pairs.append(((real.clip_id, i), (syn.clip_id, j)))
    return pairs


def _quartiles(values) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    q25, q50, q75 = np.percentile(arr, [25, 50, 75])
    return {"q25": float(q25), "median": float(q50), "q75": float(q75)}


@dataclass(frozen=True)
class SimilarityReport:
    real_real: list
    real_syn: list
    threshold: float
    seed: int
    backend_name: str
    pair_manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        for group in (self.real_real, self.real_syn):
            for v in group:
                if not -1.0 <= v <= 1.0:
                    raise ValueError(f"CSIM {v} outside [-1, 1]")

    def quartiles(self, group: str) -> dict:
        return _quartiles(getattr(self, group))

    def fraction_below_threshold(self, group: str) -> float:
        vals = getattr(self, group)
        return sum(v < self.threshold for v in vals) / len(vals)

    def to_json(self) -> dict:
        return {
            "backend": self.backend_name,
            "threshold": self.threshold,
            "seed": self.seed,
            "groups": {
                g: {
                    "values": list(getattr(self, g)),
                    "quartiles": self.quartiles(g),
                    "fraction_below_threshold": self.fraction_below_threshold(g),
                    "n_pairs": len(getattr(self, g)),
                }
                for g in ("real_real", "real_syn")
            },
            "pair_manifest": self.pair_manifest,
        }

    def save(self, json_path: str | Path, csv_path: str | Path | None = None):
        json_path = Path(json_path)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(json.dumps(self.to_json(), indent=2))
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["group", "csim"])
                for g in ("real_real", "real_syn"):
                    for v in getattr(self, g):
                        writer.writerow([g, v])


def privacy_report(
    pairs_by_mode: dict,
    embeddings: dict,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    backend_name: str = "",
) -> SimilarityReport:
    """Assemble the CSIM report from sampled pairs and their embeddings.

    ``embeddings`` maps (clip_id, frame_index) -> EmbeddingVector.
    """
    groups = {}
    for mode in ("real_real", "real_syn"):
        pair_list = pairs_by_mode.get(mode, [])
        if not pair_list:
            raise EmptyGroup(f"no pairs for group {mode}")
        groups[mode] = [
            cosine_similarity(embeddings[a], embeddings[b])
            for a, b in pair_list
        ]
        if not backend_name:
            backend_name = embeddings[pair_list[0][0]].backend_name
    manifest = {mode: [[list(a), list(b)] for a, b in pair_list]
                for mode, pair_list in pairs_by_mode.items()}
    return SimilarityReport(groups["real_real"], groups["real_syn"],
                            threshold, seed, backend_name, manifest)


def evaluate_privacy(
    real: VideoClip,
    syn: VideoClip,
    backend: EmbeddingBackend,
    n_pairs: int = DEFAULT_N_PAIRS,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
) -> SimilarityReport:
    """Sample pairs, embed the referenced frames, and build the report."""
    if real.clip_id == syn.clip_id:
        raise ValueError(
            "real and synthetic clips share a clip_id; frame references "
            "would be ambiguous")
    pairs = {
        "real_real": sample_frame_pairs(real, None, n_pairs, "real_real", seed),
        "real_syn": sample_frame_pairs(real, syn, n_pairs, "real_syn", seed + 1),
    }
    clips = {real.clip_id: real, syn.clip_id: syn}
    embeddings = {}
    for pair_list in pairs.values():
        for ref in [r for p in pair_list for r in p]:
            if ref not in embeddings:
                clip_id, idx = ref
                embeddings[ref] = embed_face(clips[clip_id].frame(idx),
                                             backend, ref)
    return privacy_report(pairs, embeddings, threshold, seed, backend.name)
