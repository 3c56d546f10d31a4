"""Manifest-driven orchestration of the de-identification pipeline.

A run is deterministic given the config: every per-case seed derives
from the run seed and the case id, and each artifact on disk is listed
in exactly one run manifest together with the seeds and backend
versions that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import cv2

from . import clips as clipio
from .conditions import build_condition_maps
from .errors import FaceveilError, NoQualifyingCandidate
from .landmarks import ClipLandmarks, FixtureLandmarkBackend
from .motion import ReferenceWarpBackend, retarget_video
from .preprocess import preprocess_driving
from .privacy import (LandmarkCropEmbedding, cosine_similarity, embed_face,
                      evaluate_privacy)
from .prompts import (TemplateWarpGenerator, UnsharpEnhancer, HeuristicQualityScorer,
                      enhance, generate_candidates, score_candidates,
                      select_prompt)
from .triage import (LinearDifferenceClassifier, TriageSample,
                     frame_difference_features, make_fold_plan,
                     run_all_schemes, run_scheme, write_metrics_csv,
                     write_metrics_json, SCHEMES)


@dataclass
class PipelineConfig:
    manifest: str = ""
    output_dir: str = "run"
    seed: int = 0
    # backends (by name; reference implementations are the default)
    landmark_backend: str = "sidecar"
    generator_backend: str = "template_warp"
    quality_backend: str = "heuristic_scorer"
    enhancer_backend: str = "unsharp_enhancer"
    vmt_backend: str = "reference_warp"
    embedding_backend: str = "landmark_crop"
    classifier_backend: str = "linear_diff"
    # parameters
    margin_ratio: float = 0.4
    heatmap_sigma_px: float = 2.0
    canny_low: float = 50.0
    canny_high: float = 150.0
    box_pad_ratio: float = 0.08
    candidates: int = 8
    quality_threshold: float = 0.5
    roll_tolerance_deg: float = 5.0
    n_pairs: int = 50
    csim_threshold: float = 0.68
    fold_seed: int = 0
    target_sensitivity: float = 0.7019
    diff_downsample: tuple = (64, 64)

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "PipelineConfig":
        obj = json.loads(Path(path).read_text())
        obj.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        known = {
            "landmark_backend": ("sidecar", "fixture"),
            "generator_backend": ("template_warp",),
            "quality_backend": ("heuristic_scorer",),
            "enhancer_backend": ("unsharp_enhancer",),
            "vmt_backend": ("reference_warp",),
            "embedding_backend": ("landmark_crop",),
            "classifier_backend": ("linear_diff",),
        }
        for attr, allowed in known.items():
            if getattr(self, attr) not in allowed:
                raise ValueError(
                    f"{attr}={getattr(self, attr)!r} is not registered "
                    f"(known: {allowed})")
        if self.margin_ratio < 0 or self.candidates < 1 or self.n_pairs < 1:
            raise ValueError("parameter out of range")


def case_seed(run_seed: int, case_id: str) -> int:
    digest = hashlib.sha256(f"{run_seed}:{case_id}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def load_manifest(path: str | Path) -> list[dict]:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict) and "cases" in obj:
        obj = obj["cases"]
    return obj


def _load_track(path: str | Path) -> ClipLandmarks:
    return ClipLandmarks.from_json(json.loads(Path(path).read_text()))


def deidentify_case(case: dict, cfg: PipelineConfig, out_dir: Path,
                    generator: TemplateWarpGenerator,
                    mean_face=None) -> dict:
    seed = case_seed(cfg.seed, case["case_id"])
    clip = clipio.decode_video(case["real_clip_path"], clip_id=case["case_id"])
    track = _load_track(case["landmarks_path"])

    pre = preprocess_driving(clip, track[0], cfg.margin_ratio)
    mapped = pre.transform.map_track(track)

    conditions = build_condition_maps(
        pre.clip.frame(0), mapped[0], sigma_px=cfg.heatmap_sigma_px,
        pad_ratio=cfg.box_pad_ratio, low_thresh=cfg.canny_low,
        high_thresh=cfg.canny_high)

    candidates = generate_candidates(conditions, cfg.candidates, generator,
                                     seed, cfg.roll_tolerance_deg)
    scored = score_candidates(candidates, HeuristicQualityScorer())
    novel, n_too_similar = _identity_screen(pre.clip.frame(0), mapped[0],
                                            scored, cfg.csim_threshold,
                                            mean_face)
    prompt = select_prompt(novel, cfg.quality_threshold, rng_seed=seed)
    prompt = enhance(prompt, UnsharpEnhancer())

    vmt = ReferenceWarpBackend(
        landmark_backend=_track_backend(pre.clip, mapped),
        subject_landmarks=prompt.landmarks)
    syn = retarget_video(prompt.pixels, pre.clip, vmt)

    clips_dir = out_dir / "clips"
    driving_path = clipio.write_clip_archive(
        pre.clip, clips_dir / f"{case['case_id']}.driving")
    syn_path = clipio.write_clip_archive(
        syn, clips_dir / f"{case['case_id']}.syn")
    real_track_path = clips_dir / f"{case['case_id']}.driving.track.json"
    real_track_path.write_text(json.dumps(mapped.to_json()))
    syn_track_path = clips_dir / f"{case['case_id']}.syn.track.json"
    syn_track_path.write_text(json.dumps(vmt.last_run.output_track.to_json()))

    prompt_dir = out_dir / "prompts"
    prompt_dir.mkdir(parents=True, exist_ok=True)
    prompt_png = prompt_dir / f"{case['case_id']}.png"
    cv2.imwrite(str(prompt_png), cv2.cvtColor(prompt.pixels, cv2.COLOR_RGB2BGR))
    (prompt_dir / f"{case['case_id']}.json").write_text(json.dumps({
        "pseudo_id": prompt.pseudo_id,
        "quality_score": prompt.quality_score,
        "provenance": prompt.provenance,
    }, indent=2))

    return {
        "case_id": case["case_id"],
        "label": case.get("label"),
        "status": "ok",
        "seed": seed,
        "pseudo_id": prompt.pseudo_id,
        "candidates_rejected_similar": n_too_similar,
        "roll_deg": pre.roll.angle_deg,
        "crop_window": list(pre.transform.crop_window),
        "occlusion_fraction_mean": (
            sum(vmt.last_run.occlusion_fraction)
            / len(vmt.last_run.occlusion_fraction)),
        "real_clip_path": str(driving_path),
        "real_track_path": str(real_track_path),
        "syn_clip_path": str(syn_path),
        "syn_track_path": str(syn_track_path),
        "prompt_path": str(prompt_png),
    }


def _identity_screen(subject_frame, subject_landmarks, candidates,
                     csim_threshold: float, mean_face=None):
    """Drop candidates whose embedding similarity to the subject reaches
    the verification threshold; returns (kept, n_dropped)."""
    backend = FixtureLandmarkBackend()
    backend.register(subject_frame, subject_landmarks)
    for cand in candidates:
        backend.register(cand.pixels, cand.landmarks)
    embedding = LandmarkCropEmbedding(backend, mean_face=mean_face)
    subject_vec = embed_face(subject_frame, embedding)
    kept, dropped = [], 0
    for cand in candidates:
        sim = cosine_similarity(embed_face(cand.pixels, embedding),
                                subject_vec)
        if sim >= csim_threshold:
            dropped += 1
        else:
            kept.append(cand)
    if not kept:
        raise NoQualifyingCandidate(
            f"all {len(candidates)} candidates resemble the subject "
            f"(CSIM >= {csim_threshold})")
    return kept, dropped


def _track_backend(clip, track: ClipLandmarks) -> FixtureLandmarkBackend:
    backend = FixtureLandmarkBackend()
    for i in range(clip.frame_count):
        backend.register(clip.frame(i), track[i])
    return backend


def cmd_deidentify(cfg: PipelineConfig) -> tuple[int, dict]:
    cases = load_manifest(cfg.manifest)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    generator = TemplateWarpGenerator()
    mean_face = LandmarkCropEmbedding(FixtureLandmarkBackend()).mean_face
    results, failures = [], []
    for case in cases:
        try:
            results.append(deidentify_case(case, cfg, out_dir, generator,
                                           mean_face))
        except (FaceveilError, OSError, KeyError, ValueError) as exc:
            failures.append({"case_id": case.get("case_id", "?"),
                             "status": "failed",
                             "error": type(exc).__name__,
                             "detail": str(exc)})
    run = {
        "command": "deidentify",
        "config": asdict(cfg),
        "backend_versions": {"generator": generator.version},
        "cases": results + failures,
        "n_ok": len(results),
        "n_failed": len(failures),
    }
    (out_dir / "run.json").write_text(json.dumps(run, indent=2))
    code = 0 if not failures else (2 if results else 1)
    return code, run


def _embedding_backend_for(cases: list[dict]):
    backend = FixtureLandmarkBackend()
    loaded = {}
    for case in cases:
        for kind in ("real", "syn"):
            clip = clipio.decode_video(case[f"{kind}_clip_path"],
                                       clip_id=f"{case['case_id']}.{kind}")
            track = _load_track(case[f"{kind}_track_path"])
            for i in range(clip.frame_count):
                backend.register(clip.frame(i), track[i])
            loaded[(case["case_id"], kind)] = clip
    return LandmarkCropEmbedding(backend), loaded


def cmd_eval_privacy(cfg: PipelineConfig) -> tuple[int, dict]:
    cases = load_manifest(cfg.manifest)
    out_dir = Path(cfg.output_dir) / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    usable = [c for c in cases if c.get("status", "ok") == "ok"
              and c.get("syn_clip_path")]
    skipped = [c.get("case_id") for c in cases if c not in usable]
    embedding, loaded = _embedding_backend_for(usable)
    pooled = {"real_real": [], "real_syn": []}
    per_case = {}
    for case in usable:
        report = evaluate_privacy(
            loaded[(case["case_id"], "real")],
            loaded[(case["case_id"], "syn")],
            embedding, n_pairs=cfg.n_pairs, threshold=cfg.csim_threshold,
            seed=case_seed(cfg.seed, case["case_id"]))
        report.save(out_dir / f"privacy_{case['case_id']}.json",
                    out_dir / f"privacy_{case['case_id']}.csv")
        per_case[case["case_id"]] = report.to_json()
        pooled["real_real"].extend(report.real_real)
        pooled["real_syn"].extend(report.real_syn)
    if not per_case:
        return 1, {"error": "no usable cases"}
    from .privacy import SimilarityReport
    pooled_report = SimilarityReport(pooled["real_real"], pooled["real_syn"],
                                     cfg.csim_threshold, cfg.seed,
                                     embedding.name)
    pooled_report.save(out_dir / "privacy_pooled.json",
                       out_dir / "privacy_pooled.csv")
    summary = {"pooled": pooled_report.to_json(), "skipped": skipped,
               "n_cases": len(per_case)}
    code = 0 if not skipped else 2
    return code, summary


def cmd_eval_triage(cfg: PipelineConfig) -> tuple[int, dict]:
    cases = load_manifest(cfg.manifest)
    out_dir = Path(cfg.output_dir) / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    usable, excluded = [], []
    for c in cases:
        if c.get("label") in ("stroke", "non_stroke") and c.get("syn_clip_path"):
            usable.append(c)
        else:
            excluded.append(c.get("case_id"))
    real, syn = {}, {}
    downsample = tuple(cfg.diff_downsample)
    for c in usable:
        real_clip = clipio.decode_video(c["real_clip_path"])
        syn_clip = clipio.decode_video(c["syn_clip_path"])
        real[c["case_id"]] = TriageSample(
            c["case_id"], c["label"],
            frame_difference_features(real_clip, downsample))
        syn[c["case_id"]] = TriageSample(
            c["case_id"], c["label"],
            frame_difference_features(syn_clip, downsample))
    plan = make_fold_plan([(cid, s.label) for cid, s in real.items()],
                          cfg.fold_seed)
    backend = LinearDifferenceClassifier()
    metrics = run_all_schemes(real, syn, plan, backend, cfg.seed,
                              cfg.target_sensitivity)
    preds = {s: run_scheme(real, syn, s, plan, backend, cfg.seed)
             for s in SCHEMES}
    write_metrics_csv(metrics, out_dir / "triage_summary.csv")
    write_metrics_json(metrics, plan, preds, out_dir / "triage_detail.json")
    summary = {"schemes": {s: m.to_json() for s, m in metrics.items()},
               "excluded": excluded}
    code = 0 if not excluded else 2
    return code, summary
