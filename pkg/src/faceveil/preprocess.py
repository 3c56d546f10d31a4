"""Driving-video preprocessing: roll removal, square face crop, 512 resize.

The camera roll is assumed constant over a recording, so it is estimated
once from the first frame's inter-eye line and one crop window (also
from the first frame) is applied to every frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import cv2
import numpy as np

from .clips import VideoClip
from .errors import FaceOutOfFrame, MissingLandmarks
from .landmarks import ClipLandmarks, LandmarkSet

TARGET_SIZE = 512
DEFAULT_MARGIN_RATIO = 0.4


@dataclass(frozen=True)
class RollEstimate:
    angle_deg: float  # counterclockwise-positive in the displayed image
    source_frame_index: int = 0

    def __post_init__(self):
        if not (-90 < self.angle_deg <= 90):
            raise ValueError(f"roll {self.angle_deg} outside (-90, 90]")


def estimate_camera_roll(landmarks: LandmarkSet,
                         source_frame_index: int = 0) -> RollEstimate:
    """Signed angle of the inter-eye line versus the image horizontal."""
    try:
        left = landmarks["left_eye_center"]
        right = landmarks["right_eye_center"]
    except MissingLandmarks:
        raise
    if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
        raise MissingLandmarks("eye centers not finite")
    dx, dy = right[0] - left[0], right[1] - left[1]
    # y grows downward, so a visually counterclockwise tilt has dy < 0
    angle = -math.degrees(math.atan2(dy, dx))
    if angle <= -90:
        angle += 180.0
    elif angle > 90:
        angle -= 180.0
    return RollEstimate(angle, source_frame_index)


@dataclass(frozen=True)
class PreprocessTransform:
    """Frame-to-output geometry of one preprocessing run."""

    roll_deg: float
    rotation_center: tuple[float, float]
    crop_window: tuple[int, int, int]  # (x0, y0, side) in derotated coords
    out_size: int = TARGET_SIZE

    @property
    def scale(self) -> float:
        return self.out_size / self.crop_window[2]

    def rotation_matrix(self) -> np.ndarray:
        return cv2.getRotationMatrix2D(self.rotation_center, -self.roll_deg, 1.0)

    def map_point(self, p) -> np.ndarray:
        m = self.rotation_matrix()
        x, y = p
        xr = m[0, 0] * x + m[0, 1] * y + m[0, 2]
        yr = m[1, 0] * x + m[1, 1] * y + m[1, 2]
        x0, y0, side = self.crop_window
        return np.array([(xr - x0) * self.scale, (yr - y0) * self.scale])

    def map_landmarks(self, lm: LandmarkSet) -> LandmarkSet:
        return lm.transformed(self.map_point,
                              frame_size=(self.out_size, self.out_size))

    def map_track(self, track: ClipLandmarks) -> ClipLandmarks:
        return ClipLandmarks(track.clip_id,
                             [self.map_landmarks(lm) for lm in track.per_frame])

    def to_json(self) -> dict:
        return {
            "roll_deg": self.roll_deg,
            "rotation_center": list(self.rotation_center),
            "crop_window": list(self.crop_window),
            "out_size": self.out_size,
        }


@dataclass(frozen=True)
class PreprocessResult:
    clip: VideoClip
    transform: PreprocessTransform
    roll: RollEstimate


def _square_window(box, margin_ratio, frame_w, frame_h):
    x0, y0, x1, y1 = box
    side = max(x1 - x0, y1 - y0) * (1.0 + 2.0 * margin_ratio)
    side = max(int(round(side)), 1)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2

    def place(c, limit):
        start = c - side / 2
        if side <= limit:
            start = min(max(start, 0.0), limit - side)
        return int(round(start))

    return place(cx, frame_w), place(cy, frame_h), side


def preprocess_driving(
    clip: VideoClip,
    landmarks_first_frame: LandmarkSet,
    margin_ratio: float = DEFAULT_MARGIN_RATIO,
    out_size: int = TARGET_SIZE,
) -> PreprocessResult:
    """Derotate, square-crop around the face, and resize every frame.

    The crop window is derived from the derotated first-frame landmarks
    and held fixed for the whole clip. Rotation resamples bilinearly;
    the final resize uses area averaging when shrinking.
    """
    if clip.role != "driving":
        raise ValueError("preprocess_driving expects a driving-role clip")
    if margin_ratio < 0:
        raise ValueError("margin_ratio must be >= 0")

    h, w = clip.frame_size
    roll = estimate_camera_roll(landmarks_first_frame)
    center = ((w - 1) / 2, (h - 1) / 2)
    rot = cv2.getRotationMatrix2D(center, -roll.angle_deg, 1.0)

    lm_rot = landmarks_first_frame.transformed(
        lambda p: (rot[:, :2] @ np.asarray(p) + rot[:, 2])
    )
    box = lm_rot.hull_box()
    x0, y0, side = _square_window(box, margin_ratio, w, h)

    # reject crops that miss most of the face: the usable window is the
    # square intersected with the frame (everything else is zero padding)
    bx0, by0, bx1, by1 = box
    ix = max(0.0, min(bx1, x0 + side, w) - max(bx0, x0, 0))
    iy = max(0.0, min(by1, y0 + side, h) - max(by0, y0, 0))
    box_area = max((bx1 - bx0) * (by1 - by0), 1e-9)
    if ix * iy < 0.5 * box_area:
        raise FaceOutOfFrame(
            f"crop window {x0, y0, side} covers {ix * iy / box_area:.0%} of face box"
        )

    transform = PreprocessTransform(roll.angle_deg, center, (x0, y0, side),
                                    out_size)

    needs_rotation = abs(roll.angle_deg) > 1e-9
    out_frames = np.empty((clip.frame_count, out_size, out_size, 3), np.uint8)
    for i in range(clip.frame_count):
        frame = clip.frame(i)
        if needs_rotation:
            frame = cv2.warpAffine(frame, rot, (w, h), flags=cv2.INTER_LINEAR,
                                   borderMode=cv2.BORDER_CONSTANT)
        padded = np.zeros((side, side, 3), np.uint8)
        sx0, sy0 = max(x0, 0), max(y0, 0)
        sx1, sy1 = min(x0 + side, w), min(y0 + side, h)
        if sx1 > sx0 and sy1 > sy0:
            padded[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = frame[sy0:sy1, sx0:sx1]
        if side == out_size:
            out_frames[i] = padded
        else:
            interp = cv2.INTER_AREA if side > out_size else cv2.INTER_LINEAR
            out_frames[i] = cv2.resize(padded, (out_size, out_size),
                                       interpolation=interp)

    out = VideoClip(
        clip_id=clip.clip_id,
        role="driving",
        frames=out_frames,
        fps=clip.fps,
        meta={**clip.meta, "roll_deg": roll.angle_deg,
              "crop_window": [x0, y0, side]},
    )
    return PreprocessResult(out, transform, roll)
