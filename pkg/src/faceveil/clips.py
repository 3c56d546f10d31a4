"""Video clips: decoding, lossless frame archives, and sidecar metadata.

A clip is either decoded from a regular video container (via OpenCV) or
from this package's own lossless archive format: an ``.npz`` holding the
uint8 frame stack next to a ``<name>.json`` sidecar with clip metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import cv2
import numpy as np

from .errors import EmptyVideo, UnreadableFile, UnsupportedCodec

ROLES = ("driving", "synthetic", "subject_still")

ARCHIVE_SUFFIX = ".clip.npz"


@dataclass(frozen=True)
class VideoClip:
    clip_id: str
    role: str
    frames: np.ndarray  # (N, H, W, 3) uint8
    fps: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ValueError("frames must be (N, H, W, 3)")
        if self.frames.shape[0] < 1:
            raise EmptyVideo(f"clip {self.clip_id} has no frames")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_size(self) -> tuple[int, int]:
        """(H, W) of every frame."""
        return int(self.frames.shape[1]), int(self.frames.shape[2])

    def frame(self, i: int) -> np.ndarray:
        return self.frames[i]

    def with_role(self, role: str) -> "VideoClip":
        return replace(self, role=role)


def _sidecar_path(path: Path) -> Path:
    name = path.name
    if name.endswith(ARCHIVE_SUFFIX):
        name = name[: -len(ARCHIVE_SUFFIX)]
    return path.with_name(name + ".json")


def write_clip_archive(clip: VideoClip, path: str | Path) -> Path:
    """Persist a clip losslessly: npz frame stack + JSON sidecar."""
    path = Path(path)
    if not path.name.endswith(ARCHIVE_SUFFIX):
        path = path.with_name(path.name + ARCHIVE_SUFFIX)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, frames=clip.frames)
    sidecar = {
        "clip_id": clip.clip_id,
        "role": clip.role,
        "fps": clip.fps,
        "N": clip.frame_count,
        **clip.meta,
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2))
    return path


def read_clip_archive(path: str | Path) -> VideoClip:
    path = Path(path)
    if not path.exists():
        raise UnreadableFile(str(path))
    try:
        with np.load(path) as data:
            frames = data["frames"]
    except Exception as exc:  # zipfile / npz corruption
        raise UnreadableFile(f"{path}: {exc}") from exc
    sidecar = _sidecar_path(path)
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    if frames.shape[0] == 0:
        raise EmptyVideo(str(path))
    return VideoClip(
        clip_id=meta.get("clip_id", path.stem.replace(".clip", "")),
        role=meta.get("role", "driving"),
        frames=frames,
        fps=float(meta.get("fps", 30.0)),
        meta={k: v for k, v in meta.items() if k not in ("clip_id", "role", "fps", "N")},
    )


def decode_video(path: str | Path, clip_id: str | None = None) -> VideoClip:
    """Decode a video file into a driving-role clip.

    Accepts both this package's archive format and common containers.
    """
    path = Path(path)
    if not path.exists():
        raise UnreadableFile(str(path))
    if path.name.endswith(ARCHIVE_SUFFIX):
        clip = read_clip_archive(path)
        return clip if clip_id is None else replace(clip, clip_id=clip_id)

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise UnreadableFile(f"cannot open container: {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 30.0
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        # an open-able container with no decodable frames usually means
        # a codec OpenCV cannot handle, or an empty stream
        if path.stat().st_size == 0:
            raise EmptyVideo(str(path))
        raise UnsupportedCodec(f"no decodable frames in {path}")
    return VideoClip(
        clip_id=clip_id or path.stem,
        role="driving",
        frames=np.stack(frames).astype(np.uint8),
        fps=float(fps),
    )


def encode_video(clip: VideoClip, path: str | Path, fourcc: str = "MJPG") -> Path:
    """Write the clip to a standard container (lossy; for viewing only)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    h, w = clip.frame_size
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*fourcc), clip.fps, (w, h)
    )
    if not writer.isOpened():
        raise UnsupportedCodec(f"cannot open encoder {fourcc} for {path}")
    for frame in clip.frames:
        writer.write(cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    writer.release()
    return path
