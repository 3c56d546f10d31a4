#!/usr/bin/env python3
"""End-to-end demo: synthesize a small dataset, de-identify it, then
run the privacy and triage evaluations and print the report."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from make_demo_data import make_dataset  # noqa: E402

from faceveil.cli import main as faceveil  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work-dir", type=Path, default=Path("demo_run"))
    ap.add_argument("--cases", type=int, default=8)
    ap.add_argument("--frames", type=int, default=12)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    manifest = make_dataset(args.work_dir / "data", args.cases, args.frames,
                            size=256, seed=args.seed)
    out = args.work_dir / "run"
    steps = [
        ["deidentify", "--manifest", str(manifest),
         "--output-dir", str(out), "--seed", str(args.seed)],
        ["eval-privacy", "--manifest", str(out / "run.json"),
         "--output-dir", str(out), "--seed", str(args.seed)],
        ["eval-triage", "--manifest", str(out / "run.json"),
         "--output-dir", str(out), "--seed", str(args.seed)],
        ["report", str(out)],
    ]
    for step in steps:
        print(f"==> faceveil {' '.join(step)}")
        code = faceveil(step)
        if code != 0:
            print(f"step failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
