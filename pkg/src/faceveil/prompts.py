"""Pseudo-identity prompt generation: candidates, quality gate, enhancement.

The deterministic test backend warps a bank of synthetic neutral
template faces so their landmarks match the condition heatmaps, then
stamps the condition edges into the organ boxes. Diffusion-style
external generators plug in behind the same interface.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import cv2
import numpy as np

from .conditions import ConditionMaps, canny_edges
from .errors import BackendFailure, NoQualifyingCandidate
from .landmarks import LandmarkSet
from .motion import CorrespondenceSet, estimate_deformation, inpaint, warp, _border_anchors
from .preprocess import estimate_camera_roll
from .synthface import Template, make_template_bank

PROMPT_SIZE = 512
DEFAULT_CANDIDATES = 8
DEFAULT_QUALITY_THRESHOLD = 0.5
DEFAULT_ROLL_TOLERANCE_DEG = 5.0


@dataclass(frozen=True)
class SubjectImage:
    pixels: np.ndarray  # RGB uint8
    pseudo_id: str
    provenance: dict
    quality_score: float | None = None
    pose_mismatch: bool = False
    landmarks: LandmarkSet | None = None

    @property
    def size(self) -> tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]


class GeneratorBackend:
    """Deterministic per (conditions, seed) candidate generator."""

    name = "abstract"
    version = "0"
    thread_safe = True

    def generate(self, conditions: ConditionMaps, seed: int) -> SubjectImage:
        raise NotImplementedError


class TemplateWarpGenerator(GeneratorBackend):
    name = "template_warp"
    version = "1"

    def __init__(self, bank: list[Template] | None = None,
                 edge_darken: float = 0.55):
        self.bank = bank if bank is not None else make_template_bank()
        if len(self.bank) < 1:
            raise BackendFailure("empty template bank")
        self.edge_darken = edge_darken

    def generate(self, conditions: ConditionMaps, seed: int) -> SubjectImage:
        template = self.bank[seed % len(self.bank)]
        cond_lm = conditions.peak_landmarks()
        h, w = conditions.resolution
        th, tw = template.image.shape[:2]
        if (th, tw) != (h, w):
            raise BackendFailure(
                f"template resolution {(th, tw)} != condition resolution {(h, w)}"
            )
        tpl_pts = np.round(template.landmarks.points)
        cond_pts = cond_lm.points

        if np.array_equal(tpl_pts, cond_pts):
            out = template.image.copy()
        else:
            anchors = _border_anchors((h, w))
            corr = CorrespondenceSet(np.vstack([tpl_pts, anchors]),
                                     np.vstack([cond_pts, anchors]))
            field = estimate_deformation(corr, (h, w),
                                         subject_size=(th, tw))
            warped, occ = warp(template.image, field)
            out = inpaint(warped, occ)

        # stamp condition edges the warped template lacks, inside boxes only
        own_edges = canny_edges(out) & conditions.boxes.union_mask((h, w))
        near_own = cv2.dilate(own_edges.astype(np.uint8),
                              np.ones((3, 3), np.uint8)) > 0
        stamp = conditions.edge_map & ~near_own
        out = out.astype(np.float64)
        out[stamp] *= self.edge_darken
        out = out.clip(0, 255).astype(np.uint8)

        return SubjectImage(
            pixels=out,
            pseudo_id=f"{template.template_id}-{conditions.condition_hash()[:8]}",
            provenance={
                "backend_name": self.name,
                "backend_version": self.version,
                "seed": int(seed),
                "template_id": template.template_id,
                "condition_hash": conditions.condition_hash(),
            },
            landmarks=cond_lm,
        )


def generate_candidates(
    conditions: ConditionMaps,
    k: int,
    backend: GeneratorBackend,
    seed: int,
    roll_tolerance_deg: float = DEFAULT_ROLL_TOLERANCE_DEG,
    landmark_backend=None,
) -> list[SubjectImage]:
    """k candidates with seeds seed..seed+k-1; off-pose ones are flagged
    rather than dropped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cond_roll = estimate_camera_roll(conditions.peak_landmarks()).angle_deg
    out = []
    for j in range(k):
        try:
            cand = backend.generate(conditions, seed + j)
        except Exception as exc:
            raise BackendFailure(
                f"{backend.name} failed for seed {seed + j}: {exc}"
            ) from exc
        cand_lm = cand.landmarks
        if cand_lm is None and landmark_backend is not None:
            cand_lm = landmark_backend.detect(cand.pixels)
        if cand_lm is not None:
            cand_roll = estimate_camera_roll(cand_lm).angle_deg
            if abs(cand_roll - cond_roll) > roll_tolerance_deg:
                cand = replace(cand, pose_mismatch=True)
        out.append(cand)
    return out


class QualityBackend:
    name = "abstract"

    def score(self, pixels: np.ndarray) -> float:
        raise NotImplementedError


class HeuristicQualityScorer(QualityBackend):
    """Sharpness (Laplacian variance) times a face-plausibility term
    (skin-tone fraction inside the central ellipse). Deterministic."""

    name = "heuristic_scorer"

    def __init__(self, sharp_ref: float = 50.0, skin_ref: float = 0.45):
        self.sharp_ref = sharp_ref
        self.skin_ref = skin_ref

    def score(self, pixels: np.ndarray) -> float:
        gray = cv2.cvtColor(pixels, cv2.COLOR_RGB2GRAY)
        sharp = min(float(cv2.Laplacian(gray, cv2.CV_64F).var()) / self.sharp_ref,
                    1.0)
        h, w = gray.shape
        ys, xs = np.mgrid[0:h, 0:w]
        ellipse = (((xs - w / 2) / (0.38 * w)) ** 2
                   + ((ys - h / 2) / (0.45 * h)) ** 2) <= 1.0
        r = pixels[..., 0].astype(np.int32)
        g = pixels[..., 1].astype(np.int32)
        b = pixels[..., 2].astype(np.int32)
        skin = (r > g) & (g > b) & (r > 60)
        frac = float((skin & ellipse).sum()) / float(ellipse.sum())
        plaus = min(frac / self.skin_ref, 1.0)
        return sharp * plaus


def score_quality(image: SubjectImage, scorer: QualityBackend) -> float:
    return scorer.score(image.pixels)


def score_candidates(candidates: list[SubjectImage],
                     scorer: QualityBackend) -> list[SubjectImage]:
    return [replace(c, quality_score=score_quality(c, scorer))
            for c in candidates]


def select_prompt(candidates: list[SubjectImage], threshold: float,
                  rng_seed: int) -> SubjectImage:
    """Seeded uniform pick among on-pose candidates at/above threshold."""
    if not candidates:
        raise ValueError("no candidates")
    qualifying = [c for c in candidates
                  if c.quality_score is not None
                  and c.quality_score >= threshold
                  and not c.pose_mismatch]
    if not qualifying:
        raise NoQualifyingCandidate(
            f"0 of {len(candidates)} candidates pass threshold {threshold}"
        )
    return qualifying[random.Random(rng_seed).randrange(len(qualifying))]


class EnhancerBackend:
    name = "abstract"

    def enhance(self, pixels: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class UnsharpEnhancer(EnhancerBackend):
    """Bicubic upsample to 512 plus an unsharp mask."""

    name = "unsharp_enhancer"

    def __init__(self, out_size: int = PROMPT_SIZE, amount: float = 0.6,
                 blur_sigma: float = 1.2):
        self.out_size = out_size
        self.amount = amount
        self.blur_sigma = blur_sigma

    def enhance(self, pixels: np.ndarray) -> np.ndarray:
        h, w = pixels.shape[:2]
        if (h, w) != (self.out_size, self.out_size):
            pixels = cv2.resize(pixels, (self.out_size, self.out_size),
                                interpolation=cv2.INTER_CUBIC)
        blurred = cv2.GaussianBlur(pixels, (0, 0), self.blur_sigma)
        sharp = pixels.astype(np.float64) + self.amount * (
            pixels.astype(np.float64) - blurred.astype(np.float64))
        return sharp.clip(0, 255).astype(np.uint8)


def enhance(image: SubjectImage, enhancer: EnhancerBackend) -> SubjectImage:
    h, w = image.size
    try:
        out = enhancer.enhance(image.pixels)
    except Exception as exc:
        raise BackendFailure(f"{enhancer.name} failed: {exc}") from exc
    scale_y = out.shape[0] / h
    scale_x = out.shape[1] / w
    lm = image.landmarks
    if lm is not None:
        lm = lm.transformed(lambda p: (p[0] * scale_x, p[1] * scale_y),
                            frame_size=(out.shape[0], out.shape[1]))
    provenance = dict(image.provenance)
    provenance["enhancer"] = {"name": enhancer.name,
                              "out_size": list(out.shape[:2])}
    return replace(image, pixels=out, provenance=provenance, landmarks=lm)
