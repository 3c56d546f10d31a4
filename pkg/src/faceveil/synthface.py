"""Procedural synthetic faces with exactly known landmarks.

Rendering is purely analytic: every frame is a deterministic function of
an identity parameter set plus per-frame animation state, and landmark
coordinates come from the same parameters, so the renderer doubles as an
exact landmark oracle. This powers the template bank of the warp-based
prompt generator and every fixture clip in the test suite; no real face
data is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .clips import VideoClip
from .landmarks import SCHEMA_V1, ClipLandmarks, LandmarkSet


@dataclass(frozen=True)
class FaceParams:
    """Identity-level appearance parameters (canonical face units)."""

    skin: tuple = (224, 182, 150)
    background: tuple = (96, 108, 122)
    face_ax: float = 0.62
    face_ay: float = 0.82
    eye_dx: float = 0.27
    eye_y: float = -0.16
    eye_rx: float = 0.105
    eye_ry: float = 0.050
    iris_r: float = 0.038
    iris: tuple = (58, 42, 34)
    brow_dy: float = -0.13
    brow_len: float = 0.17
    brow_asym: float = 0.0  # +ve lifts the right brow, drops the left
    nose_w: float = 0.10
    nose_tip_y: float = 0.14
    mouth_y: float = 0.40
    mouth_w: float = 0.30
    lip_thickness: float = 0.035
    lip: tuple = (156, 78, 76)
    droop_left: float = 0.0
    droop_right: float = 0.0
    texture_seed: int = 0
    texture_amp: float = 0.07


@dataclass(frozen=True)
class FacePose:
    """Per-frame animation state."""

    roll_deg: float = 0.0
    shift: tuple = (0.0, 0.0)  # pixels, (dx, dy)
    mouth_open: float = 0.06
    corner_dy_left: float = 0.0
    corner_dy_right: float = 0.0
    blink: float = 0.0  # 0 open .. 1 closed


def _texture_field(params: FaceParams, u, v):
    rng = np.random.RandomState(params.texture_seed)
    out = np.zeros_like(u)
    for _ in range(4):
        fx, fy = rng.uniform(4.0, 18.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        out = out + np.sin(fx * u + fy * v + phase)
    return out / 4.0


def _canonical_landmarks(p: FaceParams, pose: FacePose) -> dict[str, tuple]:
    ey_l = p.eye_y + p.brow_asym * 0.15
    ey_r = p.eye_y - p.brow_asym * 0.15
    by_l = ey_l + p.brow_dy + p.brow_asym * 0.4
    by_r = ey_r + p.brow_dy - p.brow_asym * 0.4
    cl = (-p.mouth_w / 2, p.mouth_y + p.droop_left + pose.corner_dy_left)
    cr = (p.mouth_w / 2, p.mouth_y + p.droop_right + pose.corner_dy_right)
    mid_v = 0.5 * (cl[1] + cr[1]) - 0.02
    half = pose.mouth_open / 2 + p.lip_thickness
    return {
        "jaw_left": (-p.face_ax * 0.96, 0.22),
        "jaw_left_mid": (-p.face_ax * 0.64, p.face_ay * 0.66),
        "chin": (0.0, p.face_ay * 0.97),
        "jaw_right_mid": (p.face_ax * 0.64, p.face_ay * 0.66),
        "jaw_right": (p.face_ax * 0.96, 0.22),
        "left_brow_outer": (-p.eye_dx - p.brow_len / 2, by_l),
        "left_brow_inner": (-p.eye_dx + p.brow_len / 2, by_l - p.brow_asym * 0.2),
        "right_brow_inner": (p.eye_dx - p.brow_len / 2, by_r + p.brow_asym * 0.2),
        "right_brow_outer": (p.eye_dx + p.brow_len / 2, by_r),
        "left_eye_outer": (-p.eye_dx - p.eye_rx, ey_l),
        "left_eye_center": (-p.eye_dx, ey_l),
        "left_eye_inner": (-p.eye_dx + p.eye_rx, ey_l),
        "right_eye_inner": (p.eye_dx - p.eye_rx, ey_r),
        "right_eye_center": (p.eye_dx, ey_r),
        "right_eye_outer": (p.eye_dx + p.eye_rx, ey_r),
        "nose_bridge": (0.0, p.eye_y + 0.06),
        "nose_tip": (0.0, p.nose_tip_y),
        "nose_left": (-p.nose_w / 2, p.nose_tip_y + 0.01),
        "nose_right": (p.nose_w / 2, p.nose_tip_y + 0.01),
        "mouth_left": cl,
        "lip_top": (0.5 * (cl[0] + cr[0]), mid_v - half),
        "mouth_right": cr,
        "lip_bottom": (0.5 * (cl[0] + cr[0]), mid_v + half),
    }


def render_face(
    params: FaceParams,
    pose: FacePose = FacePose(),
    size: tuple[int, int] = (256, 256),
    scale: float | None = None,
    center: tuple[float, float] | None = None,
) -> tuple[np.ndarray, LandmarkSet]:
    """Render one frame and its exact landmark set.

    ``scale`` is pixels per canonical face unit; defaults to 0.42 * min
    dimension so the whole head fits with a border. Roll is
    counterclockwise-positive in the displayed image (y axis down).
    """
    h, w = size
    if scale is None:
        scale = 0.42 * min(h, w)
    cx = (w - 1) / 2 + pose.shift[0]
    cy = (h - 1) / 2 + pose.shift[1]

    theta = np.deg2rad(pose.roll_deg)
    ct, st = np.cos(theta), np.sin(theta)

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    X, Y = np.meshgrid(xs, ys)
    dx = (X - cx) / scale
    dy = (Y - cy) / scale
    # inverse of the CCW-positive (y-down) rotation used for landmarks
    u = ct * dx - st * dy
    v = st * dx + ct * dy

    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = params.background

    p = params
    head = (u / p.face_ax) ** 2 + (v / p.face_ay) ** 2 <= 1.0
    tex = 1.0 + p.texture_amp * _texture_field(p, u, v)
    skin = np.array(p.skin, dtype=np.float64)
    img[head] = (skin[None, :] * tex[head, None]).clip(0, 255)

    lms = _canonical_landmarks(p, pose)

    # brows
    for side in ("left", "right"):
        o = np.array(lms[f"{side}_brow_outer"])
        i = np.array(lms[f"{side}_brow_inner"])
        mid = (o + i) / 2
        bl = np.linalg.norm(o - i) / 2
        duu = u - mid[0]
        dvv = v - mid[1]
        slope = (i[1] - o[1]) / (i[0] - o[0] + 1e-12)
        band = np.abs(dvv - slope * duu) <= 0.018
        mask = band & (np.abs(duu) <= bl)
        img[mask] = (70, 52, 40)

    # eyes
    ry = p.eye_ry * (1.0 - 0.8 * pose.blink)
    for side, sgn in (("left", -1), ("right", 1)):
        ec = np.array(lms[f"{side}_eye_center"])
        eye = ((u - ec[0]) / p.eye_rx) ** 2 + ((v - ec[1]) / max(ry, 1e-3)) ** 2 <= 1.0
        img[eye] = (242, 240, 236)
        iris = (u - ec[0]) ** 2 + (v - ec[1]) ** 2 <= p.iris_r ** 2
        img[eye & iris] = p.iris

    # nose: shaded wedge from bridge to nostrils
    nb = np.array(lms["nose_bridge"])
    nt = np.array(lms["nose_tip"])
    span = nt[1] - nb[1]
    frac = np.clip((v - nb[1]) / (span + 1e-12), 0.0, 1.0)
    width = 0.012 + frac * (p.nose_w / 2)
    nose = (np.abs(u) <= width) & (v >= nb[1]) & (v <= nt[1] + 0.02)
    img[nose & head] = (img[nose & head] * 0.82).clip(0, 255)

    # mouth band between the two (possibly asymmetric) corners
    cl = np.array(lms["mouth_left"])
    cr = np.array(lms["mouth_right"])
    t = (u - cl[0]) / (cr[0] - cl[0] + 1e-12)
    inside_t = (t >= 0) & (t <= 1)
    tc = np.clip(t, 0, 1)
    line = cl[1] + tc * (cr[1] - cl[1]) - 0.02 * 4 * tc * (1 - tc)
    env = np.sqrt(np.clip(4 * tc * (1 - tc), 0, 1))
    outer = (pose.mouth_open / 2 + p.lip_thickness) * env
    inner = (pose.mouth_open / 2) * env
    lip_mask = inside_t & (np.abs(v - line) <= outer)
    img[lip_mask] = p.lip
    open_mask = inside_t & (np.abs(v - line) <= inner)
    img[open_mask] = (54, 30, 30)

    # landmark pixel coordinates: forward CCW-positive (y-down) rotation
    pts = []
    for name in SCHEMA_V1:
        lu, lv = lms[name]
        px = cx + scale * (ct * lu + st * lv)
        py = cy + scale * (-st * lu + ct * lv)
        pts.append((px, py))
    landmark_set = LandmarkSet(np.array(pts), (h, w))
    return img.astype(np.uint8), landmark_set


def identity_params(identity_seed: int) -> FaceParams:
    """Deterministic identity sampled from the parameter space."""
    rng = np.random.RandomState(identity_seed)
    skins = [
        (233, 194, 164), (222, 180, 146), (198, 152, 118), (168, 122, 92),
        (140, 98, 72), (112, 78, 58), (244, 208, 180), (186, 140, 108),
    ]
    skin = skins[rng.randint(len(skins))]
    return FaceParams(
        skin=skin,
        background=tuple(int(c) for c in rng.randint(60, 150, size=3)),
        face_ax=float(rng.uniform(0.55, 0.68)),
        face_ay=float(rng.uniform(0.76, 0.88)),
        eye_dx=float(rng.uniform(0.23, 0.31)),
        eye_y=float(rng.uniform(-0.20, -0.12)),
        eye_rx=float(rng.uniform(0.09, 0.12)),
        eye_ry=float(rng.uniform(0.042, 0.058)),
        brow_asym=float(rng.uniform(-0.02, 0.02)),
        nose_w=float(rng.uniform(0.08, 0.12)),
        nose_tip_y=float(rng.uniform(0.11, 0.17)),
        mouth_w=float(rng.uniform(0.26, 0.34)),
        mouth_y=float(rng.uniform(0.36, 0.44)),
        droop_left=float(rng.uniform(-0.015, 0.015)),
        droop_right=float(rng.uniform(-0.015, 0.015)),
        lip=tuple(int(c) for c in (rng.randint(120, 180), rng.randint(50, 90),
                                   rng.randint(50, 90))),
        texture_seed=int(identity_seed),
        texture_amp=float(rng.uniform(0.05, 0.10)),
    )


@dataclass(frozen=True)
class Template:
    template_id: str
    image: np.ndarray
    landmarks: LandmarkSet
    params: FaceParams


def make_template_bank(n: int = 24, size: int = 256, seed0: int = 5000) -> list[Template]:
    """Bank of neutral synthetic faces used by the warp-based generator."""
    bank = []
    for i in range(n):
        params = identity_params(seed0 + i)
        img, lm = render_face(params, FacePose(), size=(size, size))
        bank.append(Template(f"tpl_{i:03d}", img, lm, params))
    return bank


def speaking_pose_track(
    n_frames: int,
    rng_seed: int = 0,
    roll_deg: float = 0.0,
    amplitude: float = 1.0,
    asymmetric: bool = False,
    progressive_droop: float = 0.0,
    shift_amp: float = 0.0,
) -> list[FacePose]:
    """Mouth-driven talking motion, optionally one-sided or drifting."""
    rng = np.random.RandomState(rng_seed)
    phase = rng.uniform(0, 2 * np.pi)
    rate = rng.uniform(0.5, 0.9)
    poses = []
    for i in range(n_frames):
        openness = 0.05 + amplitude * 0.05 * (1 + np.sin(rate * i + phase))
        wob = amplitude * 0.02 * np.sin(0.31 * i + phase * 0.7)
        prog = progressive_droop * i / max(n_frames - 1, 1)
        poses.append(FacePose(
            roll_deg=roll_deg,
            shift=(shift_amp * np.sin(0.17 * i), shift_amp * 0.5 * np.cos(0.13 * i)),
            mouth_open=float(openness),
            corner_dy_left=float((0.0 if asymmetric else wob) + prog),
            corner_dy_right=float(wob + prog * 0.2),
        ))
    return poses


def make_clip(
    params: FaceParams,
    poses: list[FacePose],
    clip_id: str,
    size: tuple[int, int] = (256, 256),
    fps: float = 30.0,
    role: str = "driving",
    scale: float | None = None,
) -> tuple[VideoClip, ClipLandmarks]:
    frames, track = [], []
    for pose in poses:
        img, lm = render_face(params, pose, size=size, scale=scale)
        frames.append(img)
        track.append(lm)
    clip = VideoClip(clip_id, role, np.stack(frames), fps)
    return clip, ClipLandmarks(clip_id, track)
