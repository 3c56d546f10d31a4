"""Facial landmark sets and pluggable landmark backends.

The schema is a fixed 23-point layout covering jaw, brows, eyes, nose
and mouth. Backends are adapters: production systems would plug a real
detector; tests and the reference pipeline use replay backends that
serve stored landmarks keyed by frame content.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingLandmarks, NoFaceDetected, SchemaMismatch

SCHEMA_V1 = (
    "jaw_left",
    "jaw_left_mid",
    "chin",
    "jaw_right_mid",
    "jaw_right",
    "left_brow_outer",
    "left_brow_inner",
    "right_brow_inner",
    "right_brow_outer",
    "left_eye_outer",
    "left_eye_center",
    "left_eye_inner",
    "right_eye_inner",
    "right_eye_center",
    "right_eye_outer",
    "nose_bridge",
    "nose_tip",
    "nose_left",
    "nose_right",
    "mouth_left",
    "lip_top",
    "mouth_right",
    "lip_bottom",
)

SCHEMA_INDEX = {name: i for i, name in enumerate(SCHEMA_V1)}

# landmark subsets used for organ boxes and geometry measures
ORGAN_POINTS = {
    "left_eye": ("left_brow_outer", "left_brow_inner", "left_eye_outer",
                 "left_eye_center", "left_eye_inner"),
    "right_eye": ("right_brow_inner", "right_brow_outer", "right_eye_inner",
                  "right_eye_center", "right_eye_outer"),
    "nose": ("nose_bridge", "nose_tip", "nose_left", "nose_right"),
    "mouth": ("mouth_left", "lip_top", "mouth_right", "lip_bottom"),
}


@dataclass(frozen=True)
class LandmarkSet:
    points: np.ndarray  # (K, 2) float, (x, y) pixel coords
    frame_size: tuple[int, int]  # (H, W)
    schema: tuple[str, ...] = SCHEMA_V1
    confidence: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.shape != (len(self.schema), 2):
            raise SchemaMismatch(
                f"expected {len(self.schema)} points, got {pts.shape}"
            )

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.points[SCHEMA_INDEX[name]]
        except KeyError:
            raise MissingLandmarks(name) from None

    def organ(self, organ: str) -> np.ndarray:
        names = ORGAN_POINTS.get(organ)
        if names is None:
            raise MissingLandmarks(organ)
        return np.stack([self[n] for n in names])

    def interocular(self) -> float:
        return float(np.linalg.norm(self["right_eye_center"] - self["left_eye_center"]))

    def hull_box(self) -> tuple[float, float, float, float]:
        x0, y0 = self.points.min(axis=0)
        x1, y1 = self.points.max(axis=0)
        return float(x0), float(y0), float(x1), float(y1)

    def transformed(self, fn, frame_size=None) -> "LandmarkSet":
        """Apply a point map (x, y) -> (x, y) to every landmark."""
        pts = np.array([fn(p) for p in self.points], dtype=np.float64)
        return LandmarkSet(pts, frame_size or self.frame_size, self.schema,
                           self.confidence)

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "frame_size": list(self.frame_size),
            "points": self.points.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LandmarkSet":
        return cls(np.asarray(obj["points"], dtype=np.float64),
                   tuple(obj["frame_size"]))


def frame_key(frame: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(frame).tobytes()).hexdigest()


class LandmarkBackend:
    """Adapter interface; implementations must be deterministic per frame."""

    name = "abstract"
    thread_safe = True

    def detect(self, frame: np.ndarray) -> LandmarkSet:
        raise NotImplementedError


class FixtureLandmarkBackend(LandmarkBackend):
    """Replays stored landmark sets keyed by frame content.

    Also answers for horizontally mirrored copies of stored frames by
    mirroring the stored landmarks, which lets tests probe simple
    equivariances without a real detector.
    """

    name = "fixture"

    def __init__(self):
        self._store: dict[str, LandmarkSet] = {}

    def register(self, frame: np.ndarray, landmarks: LandmarkSet) -> None:
        self._store[frame_key(frame)] = landmarks

    def detect(self, frame: np.ndarray) -> LandmarkSet:
        key = frame_key(frame)
        if key in self._store:
            return self._store[key]
        mirrored = frame[:, ::-1]
        mkey = frame_key(mirrored)
        if mkey in self._store:
            lm = self._store[mkey]
            w = lm.frame_size[1]
            flipped = lm.points.copy()
            flipped[:, 0] = (w - 1) - flipped[:, 0]
            # swap left/right named points so the schema stays anatomical
            pts = flipped.copy()
            for name, idx in SCHEMA_INDEX.items():
                if name.startswith("left_"):
                    other = SCHEMA_INDEX["right_" + name[5:]]
                    pts[idx], pts[other] = flipped[other], flipped[idx]
                elif name == "jaw_left":
                    pts[idx] = flipped[SCHEMA_INDEX["jaw_right"]]
                elif name == "jaw_right":
                    pts[idx] = flipped[SCHEMA_INDEX["jaw_left"]]
                elif name == "jaw_left_mid":
                    pts[idx] = flipped[SCHEMA_INDEX["jaw_right_mid"]]
                elif name == "jaw_right_mid":
                    pts[idx] = flipped[SCHEMA_INDEX["jaw_left_mid"]]
                elif name == "nose_left":
                    pts[idx] = flipped[SCHEMA_INDEX["nose_right"]]
                elif name == "nose_right":
                    pts[idx] = flipped[SCHEMA_INDEX["nose_left"]]
            return LandmarkSet(pts, lm.frame_size, lm.schema)
        raise NoFaceDetected("frame not in fixture store")


@dataclass
class ClipLandmarks:
    """Per-frame landmark track for one clip, serializable as a sidecar."""

    clip_id: str
    per_frame: list[LandmarkSet] = field(default_factory=list)

    def __len__(self):
        return len(self.per_frame)

    def __getitem__(self, i: int) -> LandmarkSet:
        return self.per_frame[i]

    def to_json(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "frames": [lm.to_json() for lm in self.per_frame],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClipLandmarks":
        return cls(obj["clip_id"],
                   [LandmarkSet.from_json(f) for f in obj["frames"]])


class ClipTrackBackend(LandmarkBackend):
    """Serves a pre-computed landmark track, matching frames by content."""

    name = "clip_track"

    def __init__(self, clip, track: ClipLandmarks):
        if clip.frame_count != len(track):
            raise SchemaMismatch("track length != frame count")
        self._by_key = {frame_key(clip.frame(i)): track[i]
                        for i in range(clip.frame_count)}

    def detect(self, frame: np.ndarray) -> LandmarkSet:
        key = frame_key(frame)
        if key not in self._by_key:
            raise NoFaceDetected("frame not in clip track")
        return self._by_key[key]


def detect_landmarks(frame: np.ndarray, backend: LandmarkBackend) -> LandmarkSet:
    if frame.size == 0:
        raise NoFaceDetected("empty frame")
    return backend.detect(frame)
