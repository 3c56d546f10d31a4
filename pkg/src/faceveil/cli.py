"""Command-line entry point.

Exit codes: 0 = all cases ok, 2 = partial failure, 1 = config/fatal
error. Flags override the config file; environment variables are never
consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CorruptEventLog, FaceveilError
from .pipeline import PipelineConfig, cmd_deidentify, cmd_eval_privacy, cmd_eval_triage


def _add_config_args(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--manifest", help="case manifest (overrides config)")
    sub.add_argument("--output-dir", help="run directory (overrides config)")
    sub.add_argument("--seed", type=int, help="run seed (overrides config)")


def _build_config(args) -> PipelineConfig:
    overrides = {"manifest": args.manifest, "output_dir": args.output_dir,
                 "seed": args.seed}
    if args.config:
        return PipelineConfig.load(args.config, **overrides)
    cfg = PipelineConfig(**{k: v for k, v in overrides.items()
                            if v is not None})
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="faceveil")
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("deidentify", "eval-privacy", "eval-triage"):
        _add_config_args(subs.add_parser(name))

    serve = subs.add_parser("serve-review")
    serve.add_argument("--roster", required=True, help="study roster JSON")
    serve.add_argument("--log", required=True, help="event log path")
    serve.add_argument("--port", type=int, default=8700)
    serve.add_argument("--host", default="127.0.0.1")

    report = subs.add_parser("report")
    report.add_argument("run_dir", help="run directory with run.json")

    args = parser.parse_args(argv)

    try:
        if args.command == "deidentify":
            code, summary = cmd_deidentify(_build_config(args))
        elif args.command == "eval-privacy":
            code, summary = cmd_eval_privacy(_build_config(args))
        elif args.command == "eval-triage":
            code, summary = cmd_eval_triage(_build_config(args))
        elif args.command == "serve-review":
            return _serve(args)
        elif args.command == "report":
            return _report(Path(args.run_dir))
        else:  # pragma: no cover
            parser.error("unknown command")
    except (FaceveilError, ValueError, OSError, KeyError) as exc:
        print(f"fatal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, default=str))
    return code


def _serve(args) -> int:
    import uvicorn

    from .review_service import ReviewStore, StudyRoster, create_app

    try:
        roster = StudyRoster.load(args.roster)
        store = ReviewStore(roster, args.log)
    except CorruptEventLog as exc:
        print(f"fatal: corrupt event log: {exc}", file=sys.stderr)
        return 1
    app = create_app(store)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        print(f"fatal: cannot bind {args.host}:{args.port}: {exc}",
              file=sys.stderr)
        return 1
    return 0


def _report(run_dir: Path) -> int:
    run_path = run_dir / "run.json"
    if not run_path.exists():
        print(f"fatal: {run_path} not found", file=sys.stderr)
        return 1
    run = json.loads(run_path.read_text())
    print(f"run: {run.get('command')}  ok={run.get('n_ok')} "
          f"failed={run.get('n_failed')}")
    for case in run.get("cases", []):
        line = f"  {case.get('case_id')}: {case.get('status')}"
        if case.get("status") == "ok":
            line += (f" roll={case.get('roll_deg'):.2f} "
                     f"pseudo_id={case.get('pseudo_id')}")
        else:
            line += f" ({case.get('error')}: {case.get('detail')})"
        print(line)
    reports_dir = run_dir / "reports"
    if reports_dir.exists():
        for path in sorted(reports_dir.glob("*.json")):
            print(f"  report: {path.name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
