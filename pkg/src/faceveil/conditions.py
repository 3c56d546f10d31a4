"""Generator conditions: landmark heatmaps, organ boxes, facial edge maps.

The edge detector is a from-scratch Canny (grayscale -> Gaussian ->
Sobel -> non-maximum suppression -> hysteresis) computed on the full
frame and then masked to the union of the organ boxes, so no artificial
edges appear at box borders.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from scipy import ndimage

from .errors import MissingLandmarks
from .landmarks import ORGAN_POINTS, LandmarkSet

DEFAULT_SIGMA_PX = 2.0
DEFAULT_CANNY_SIGMA = 1.4
DEFAULT_CANNY_LOW = 50.0
DEFAULT_CANNY_HIGH = 150.0
GENERATOR_RESOLUTION = 256

ORGAN_NAMES = ("left_eye", "right_eye", "nose", "mouth",
               "left_cheek", "right_cheek")


@dataclass(frozen=True)
class OrganBoxes:
    boxes: dict  # name -> (x0, y0, x1, y1), floats, clipped to frame
    frame_size: tuple[int, int]

    def __post_init__(self):
        for name, (x0, y0, x1, y1) in self.boxes.items():
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"degenerate box {name}: {(x0, y0, x1, y1)}")

    def union_mask(self, size=None) -> np.ndarray:
        h, w = size or self.frame_size
        sy = h / self.frame_size[0]
        sx = w / self.frame_size[1]
        mask = np.zeros((h, w), dtype=bool)
        for x0, y0, x1, y1 in self.boxes.values():
            mask[int(np.floor(y0 * sy)):int(np.ceil(y1 * sy)),
                 int(np.floor(x0 * sx)):int(np.ceil(x1 * sx))] = True
        return mask

    def union_box(self) -> tuple[float, float, float, float]:
        arr = np.array(list(self.boxes.values()))
        return (float(arr[:, 0].min()), float(arr[:, 1].min()),
                float(arr[:, 2].max()), float(arr[:, 3].max()))


def organ_bounding_boxes(landmarks: LandmarkSet, pad_ratio: float = 0.0) -> OrganBoxes:
    """Axis-aligned organ boxes from landmark hulls, padded per side.

    Cheek boxes have no dedicated landmarks; each spans vertically from
    the eye line down to the mouth top and horizontally from the jaw
    contour to the nose wing.
    """
    h, w = landmarks.frame_size

    def hull(pts):
        return (float(pts[:, 0].min()), float(pts[:, 1].min()),
                float(pts[:, 0].max()), float(pts[:, 1].max()))

    raw = {}
    for organ in ORGAN_POINTS:
        raw[organ] = hull(landmarks.organ(organ))

    mouth_top = raw["mouth"][1]
    left_eye_bottom = landmarks.organ("left_eye")[:, 1].max()
    right_eye_bottom = landmarks.organ("right_eye")[:, 1].max()
    jaw_left_x = min(landmarks["jaw_left"][0], landmarks["jaw_left_mid"][0])
    jaw_right_x = max(landmarks["jaw_right"][0], landmarks["jaw_right_mid"][0])
    raw["left_cheek"] = (jaw_left_x, float(left_eye_bottom),
                         float(landmarks["nose_left"][0]), float(mouth_top))
    raw["right_cheek"] = (float(landmarks["nose_right"][0]),
                          float(right_eye_bottom), jaw_right_x, float(mouth_top))

    boxes = {}
    for name, (x0, y0, x1, y1) in raw.items():
        if x1 < x0:
            x0, x1 = x1, x0
        if y1 < y0:
            y0, y1 = y1, y0
        px, py = pad_ratio * (x1 - x0), pad_ratio * (y1 - y0)
        x0, x1 = max(x0 - px, 0.0), min(x1 + px, float(w))
        y0, y1 = max(y0 - py, 0.0), min(y1 + py, float(h))
        if x1 - x0 < 1.0:
            x0, x1 = max(min(x0, w - 1.0), 0.0), max(min(x0, w - 1.0), 0.0) + 1.0
        if y1 - y0 < 1.0:
            y0, y1 = max(min(y0, h - 1.0), 0.0), max(min(y0, h - 1.0), 0.0) + 1.0
        boxes[name] = (x0, y0, x1, y1)
    return OrganBoxes(boxes, (h, w))


def render_heatmaps(
    landmarks: LandmarkSet,
    sigma_px: float = DEFAULT_SIGMA_PX,
    out_size: tuple[int, int] = (GENERATOR_RESOLUTION, GENERATOR_RESOLUTION),
) -> np.ndarray:
    """Per-landmark unnormalized Gaussians, peak value exactly 1.

    Landmark coordinates are rescaled to ``out_size`` and discretized to
    the nearest pixel before the kernel is centered, so the channel
    maximum is 1.0 at that pixel.
    """
    if sigma_px <= 0:
        raise ValueError("sigma_px must be positive")
    h, w = out_size
    src_h, src_w = landmarks.frame_size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    maps = np.empty((len(landmarks.points), h, w), dtype=np.float64)
    for k, (x, y) in enumerate(landmarks.points):
        cx = np.round(x * w / src_w)
        cy = np.round(y * h / src_h)
        maps[k] = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma_px ** 2))
    return maps


def _grayscale(frame: np.ndarray) -> np.ndarray:
    f = frame.astype(np.float64)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


def canny_edges(
    frame: np.ndarray,
    low_thresh: float = DEFAULT_CANNY_LOW,
    high_thresh: float = DEFAULT_CANNY_HIGH,
    smooth_sigma: float = DEFAULT_CANNY_SIGMA,
) -> np.ndarray:
    """Full-frame Canny on 8-bit intensity; returns a boolean map."""
    if not (0 < low_thresh < high_thresh):
        raise ValueError("need 0 < low_thresh < high_thresh")
    gray = _grayscale(frame) if frame.ndim == 3 else frame.astype(np.float64)
    smoothed = ndimage.gaussian_filter(gray, smooth_sigma)
    gy = ndimage.sobel(smoothed, axis=0)
    gx = ndimage.sobel(smoothed, axis=1)
    mag = np.hypot(gx, gy)

    # non-maximum suppression over 4 quantized gradient directions;
    # ties broken to one side so a clean step yields a 1-px line
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    h, w = mag.shape
    nms = np.zeros_like(mag)
    offsets = {
        0: ((0, 1), (0, -1)),     # horizontal gradient -> compare left/right
        1: ((-1, 1), (1, -1)),    # 45 deg
        2: ((-1, 0), (1, 0)),     # vertical gradient -> compare up/down
        3: ((-1, -1), (1, 1)),    # 135 deg
    }
    bins = ((angle + 22.5) // 45).astype(int) % 4
    padded = np.pad(mag, 1, mode="constant")
    for b, ((dy1, dx1), (dy2, dx2)) in offsets.items():
        sel = bins == b
        n1 = padded[1 + dy1:1 + dy1 + h, 1 + dx1:1 + dx1 + w]
        n2 = padded[1 + dy2:1 + dy2 + h, 1 + dx2:1 + dx2 + w]
        keep = sel & (mag > n1) & (mag >= n2)
        nms[keep] = mag[keep]

    # thresholds compare against raw Sobel magnitude (cv2 convention)
    strong = nms >= high_thresh
    weak = nms >= low_thresh
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(weak)
    keep_ids = np.unique(labels[strong])
    keep_ids = keep_ids[keep_ids > 0]
    return np.isin(labels, keep_ids)


def extract_edge_map(
    frame: np.ndarray,
    boxes: OrganBoxes,
    low_thresh: float = DEFAULT_CANNY_LOW,
    high_thresh: float = DEFAULT_CANNY_HIGH,
    smooth_sigma: float = DEFAULT_CANNY_SIGMA,
) -> np.ndarray:
    """Canny on the full frame, masked to the union of organ boxes."""
    edges = canny_edges(frame, low_thresh, high_thresh, smooth_sigma)
    return edges & boxes.union_mask(edges.shape)


@dataclass(frozen=True)
class ConditionMaps:
    heatmaps: np.ndarray  # (K, H, W) float in [0, 1]
    edge_map: np.ndarray  # (H, W) bool
    resolution: tuple[int, int]
    boxes: OrganBoxes
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.heatmaps.shape[1:] != tuple(self.resolution):
            raise ValueError("heatmap resolution mismatch")
        if self.edge_map.shape != tuple(self.resolution):
            raise ValueError("edge map resolution mismatch")

    def condition_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.heatmaps).tobytes())
        digest.update(np.ascontiguousarray(self.edge_map).tobytes())
        return digest.hexdigest()[:16]

    def peak_landmarks(self) -> LandmarkSet:
        """Recover discretized landmark locations from heatmap argmaxes."""
        pts = []
        for channel in self.heatmaps:
            idx = np.unravel_index(int(np.argmax(channel)), channel.shape)
            pts.append((float(idx[1]), float(idx[0])))
        return LandmarkSet(np.array(pts), self.resolution)

    def save(self, stem: str | Path) -> None:
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(stem.with_suffix(".heatmaps.npz"),
                            heatmaps=self.heatmaps.astype(np.float32))
        cv2.imwrite(str(stem.with_suffix(".edges.png")),
                    self.edge_map.astype(np.uint8) * 255,
                    [cv2.IMWRITE_PNG_BILEVEL, 1])
        sidecar = {
            "resolution": list(self.resolution),
            "boxes": {k: list(v) for k, v in self.boxes.boxes.items()},
            "boxes_frame_size": list(self.boxes.frame_size),
            "params": self.params,
            "condition_hash": self.condition_hash(),
        }
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, stem: str | Path) -> "ConditionMaps":
        stem = Path(stem)
        with np.load(stem.with_suffix(".heatmaps.npz")) as data:
            heatmaps = data["heatmaps"].astype(np.float64)
        edges = cv2.imread(str(stem.with_suffix(".edges.png")),
                           cv2.IMREAD_GRAYSCALE) > 0
        sidecar = json.loads(stem.with_suffix(".json").read_text())
        boxes = OrganBoxes({k: tuple(v) for k, v in sidecar["boxes"].items()},
                           tuple(sidecar["boxes_frame_size"]))
        return cls(heatmaps, edges, tuple(sidecar["resolution"]), boxes,
                   sidecar.get("params", {}))


def build_condition_maps(
    frame: np.ndarray,
    landmarks: LandmarkSet,
    resolution: int = GENERATOR_RESOLUTION,
    sigma_px: float = DEFAULT_SIGMA_PX,
    pad_ratio: float = 0.08,
    low_thresh: float = DEFAULT_CANNY_LOW,
    high_thresh: float = DEFAULT_CANNY_HIGH,
) -> ConditionMaps:
    """First-frame conditions at generator resolution.

    The frame is rescaled to the generator resolution first so the edge
    support invariant holds exactly in the stored map.
    """
    h, w = frame.shape[:2]
    interp = cv2.INTER_AREA if h > resolution else cv2.INTER_LINEAR
    small = cv2.resize(frame, (resolution, resolution), interpolation=interp)
    sy, sx = resolution / h, resolution / w
    lm_small = landmarks.transformed(lambda p: (p[0] * sx, p[1] * sy),
                                     frame_size=(resolution, resolution))
    boxes = organ_bounding_boxes(lm_small, pad_ratio)
    heatmaps = render_heatmaps(lm_small, sigma_px, (resolution, resolution))
    edges = extract_edge_map(small, boxes, low_thresh, high_thresh)
    return ConditionMaps(
        heatmaps, edges, (resolution, resolution), boxes,
        params={"sigma_px": sigma_px, "pad_ratio": pad_ratio,
                "canny": [low_thresh, high_thresh], "schema": "v1"},
    )
