#!/usr/bin/env python3
"""Build a synthetic demo dataset of talking-face clips with landmark
sidecars and a case manifest, ready for `faceveil deidentify`.

Stroke-labeled cases get an asymmetric, progressively drooping mouth;
non-stroke cases get symmetric speech motion. Labels therefore carry a
real motion signal that the triage harness can learn.
"""

import argparse
import json
from pathlib import Path

from faceveil import clips as clipio
from faceveil.synthface import identity_params, make_clip, speaking_pose_track


def build_case(case_id: str, label: str, identity_seed: int, n_frames: int,
               size: int, out_dir: Path) -> dict:
    stroke = label == "stroke"
    poses = speaking_pose_track(
        n_frames,
        rng_seed=identity_seed,
        amplitude=0.5 if stroke else 1.0,
        asymmetric=stroke,
        progressive_droop=3.0 if stroke else 0.0,
    )
    clip, track = make_clip(identity_params(identity_seed), poses, case_id,
                            size=(size, size))
    clip_path = clipio.write_clip_archive(clip, out_dir / case_id)
    track_path = out_dir / f"{case_id}.track.json"
    track_path.write_text(json.dumps(track.to_json()))
    return {
        "case_id": case_id,
        "label": label,
        "real_clip_path": str(clip_path),
        "landmarks_path": str(track_path),
    }


def make_dataset(out_dir: Path, n_cases: int, n_frames: int, size: int,
                 seed: int) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = []
    for i in range(n_cases):
        label = "stroke" if i % 2 else "non_stroke"
        cases.append(build_case(f"case{i:03d}", label, seed + i, n_frames,
                                size, out_dir))
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"cases": cases}, indent=2))
    return manifest


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output-dir", type=Path, default=Path("demo_data"))
    ap.add_argument("--cases", type=int, default=10)
    ap.add_argument("--frames", type=int, default=16)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--seed", type=int, default=100)
    args = ap.parse_args()
    manifest = make_dataset(args.output_dir, args.cases, args.frames,
                            args.size, args.seed)
    print(manifest)


if __name__ == "__main__":
    main()
