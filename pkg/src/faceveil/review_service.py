"""HTTP backend for the two-stage human study.

State is an append-only JSON-lines event log replayed into an in-memory
projection at startup; submissions are serialized through a single
writer lock, reads take snapshots. The review UI is the only intended
client.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response

from .agreement import (JUDGMENT_SCORES, REALISM_OPTIONS, REALISM_SCORES,
                        build_agreement_report, gate_for_clinical_review)
from .errors import CorruptEventLog, UnknownRater, UnknownVideo


@dataclass(frozen=True)
class StudyRoster:
    videos: list  # [{"video_id", "syn_path"?, "real_path"?}]
    raters: list[str]
    clinicians: list[str]
    required_raters: int
    order_seed: int = 0

    @classmethod
    def from_json(cls, obj: dict) -> "StudyRoster":
        return cls(
            videos=obj["videos"],
            raters=list(obj["raters"]),
            clinicians=list(obj.get("clinicians", obj["raters"])),
            required_raters=int(obj.get("required_raters", len(obj["raters"]))),
            order_seed=int(obj.get("order_seed", 0)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "StudyRoster":
        return cls.from_json(json.loads(Path(path).read_text()))

    def video_ids(self) -> list[str]:
        return [v["video_id"] for v in self.videos]

    def video(self, video_id: str) -> dict:
        for v in self.videos:
            if v["video_id"] == video_id:
                return v
        raise UnknownVideo(video_id)


class EventLog:
    """Append-only JSONL log; the durability source of truth."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":"))
        with open(self.path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()

    def replay(self):
        if not self.path.exists():
            return
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorruptEventLog(
                        f"{self.path}:{lineno}: {exc}. Remove or repair the "
                        "trailing entries and restart."
                    ) from exc


class ReviewStore:
    """Roster + event log projection; one answer per (rater, item)."""

    def __init__(self, roster: StudyRoster, log_path: str | Path):
        self.roster = roster
        self.log = EventLog(log_path)
        self._lock = threading.Lock()
        self.ratings: dict[str, dict[str, str]] = {}
        self.judgments: dict[str, dict[str, dict]] = {}
        for event in self.log.replay():
            self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event.get("type")
        if kind == "rating":
            self.ratings.setdefault(event["video_id"], {})[
                event["rater_id"]] = event["option"]
        elif kind == "judgment":
            self.judgments.setdefault(event["pair_id"], {})[
                event["clinician_id"]] = {
                    "answer": event["answer"],
                    "placement": event.get("placement"),
            }

    def submit_rating(self, rater_id: str, video_id: str, option: str) -> dict:
        if rater_id not in self.roster.raters:
            raise UnknownRater(rater_id)
        if video_id not in self.roster.video_ids():
            raise UnknownVideo(video_id)
        if option not in REALISM_OPTIONS:
            raise ValueError(f"option must be one of {REALISM_OPTIONS}")
        event = {"type": "rating", "rater_id": rater_id, "video_id": video_id,
                 "option": option, "ts": time.time()}
        with self._lock:
            self.log.append(event)
            self._apply(event)
        return {"stored": True, "score": REALISM_SCORES[option]}

    def submit_judgment(self, clinician_id: str, pair_id: str, answer: str,
                        placement: dict | None = None) -> dict:
        if clinician_id not in self.roster.clinicians:
            raise UnknownRater(clinician_id)
        if pair_id not in self.roster.video_ids():
            raise UnknownVideo(pair_id)
        answer = answer.lower()
        if answer not in JUDGMENT_SCORES:
            raise ValueError("answer must be 'yes' or 'no'")
        event = {"type": "judgment", "clinician_id": clinician_id,
                 "pair_id": pair_id, "answer": answer,
                 "placement": placement, "ts": time.time()}
        with self._lock:
            self.log.append(event)
            self._apply(event)
        return {"stored": True, "score": JUDGMENT_SCORES[answer]}

    def gate(self) -> tuple[list[str], list[str]]:
        return gate_for_clinical_review(self.ratings, self.roster.video_ids(),
                                        self.roster.required_raters)

    def _rater_order(self, rater_id: str, items: list[str]) -> list[str]:
        digest = hashlib.sha256(
            f"{self.roster.order_seed}:{rater_id}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        order = list(items)
        rng.shuffle(order)
        return order

    def next_task(self, rater_id: str, task_kind: str) -> dict:
        if task_kind == "realism":
            if rater_id not in self.roster.raters:
                raise UnknownRater(rater_id)
            items = self._rater_order(rater_id, self.roster.video_ids())
            done_items = {vid for vid, by in self.ratings.items()
                          if rater_id in by}
            pending = [v for v in items if v not in done_items]
            if not pending:
                return {"done": True, "completed": len(done_items)}
            return {"done": False, "kind": "realism", "video_id": pending[0]}
        if task_kind == "paired":
            if rater_id not in self.roster.clinicians:
                raise UnknownRater(rater_id)
            gated, _ = self.gate()
            items = self._rater_order(rater_id, gated)
            done_items = {pid for pid, by in self.judgments.items()
                          if rater_id in by}
            pending = [v for v in items if v not in done_items]
            if not pending:
                return {"done": True, "completed": len(done_items & set(gated))}
            return {"done": False, "kind": "paired", "pair_id": pending[0],
                    "real_video": pending[0], "syn_video": pending[0]}
        raise ValueError(f"unknown task kind {task_kind!r}")

    def realism_report(self) -> dict:
        complete = {
            vid: by for vid, by in self.ratings.items()
            if len(by) >= self.roster.required_raters
        }
        tally = {vid: {opt: sum(1 for o in by.values() if o == opt)
                       for opt in REALISM_OPTIONS}
                 for vid, by in self.ratings.items()}
        if not complete:
            return {"n_items": 0, "per_video": tally}
        report = build_agreement_report(complete, REALISM_OPTIONS,
                                        REALISM_SCORES)
        return {**report.to_json(), "per_video": tally}

    def paired_report(self) -> dict:
        answers = {pid: {cid: rec["answer"] for cid, rec in by.items()}
                   for pid, by in self.judgments.items()}
        if not answers:
            return {"n_items": 0}
        counts = [len(by) for by in answers.values()]
        n = min(counts)
        scores = [JUDGMENT_SCORES[a] for by in answers.values()
                  for a in by.values()]
        import numpy as np
        mean = float(np.mean(scores))
        std = float(np.std(scores))
        out = {"mean_score": mean, "std_score": std,
               "n_items": len(answers), "n_raters": max(counts)}
        if n >= 2 and len(set(counts)) == 1:
            report = build_agreement_report(answers, ("yes", "no"),
                                            JUDGMENT_SCORES)
            out["kappa"] = report.kappa
            out["degenerate_kappa"] = report.degenerate_kappa
        else:
            out["kappa"] = None
        return out


def create_app(store: ReviewStore) -> FastAPI:
    app = FastAPI(title="faceveil review service")
    app.state.store = store

    def _error(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    @app.exception_handler(UnknownVideo)
    async def _unknown_video(request, exc):
        return _error(404, exc)

    @app.exception_handler(UnknownRater)
    async def _unknown_rater(request, exc):
        return _error(404, exc)

    @app.exception_handler(ValueError)
    async def _bad_value(request, exc):
        return _error(400, exc)

    @app.get("/api/tasks/next")
    def next_task(rater: str, kind: str = "realism"):
        return store.next_task(rater, kind)

    @app.post("/api/ratings")
    def post_rating(body: dict):
        return store.submit_rating(body["rater_id"], body["video_id"],
                                   body["option"])

    @app.post("/api/judgments")
    def post_judgment(body: dict):
        return store.submit_judgment(body["clinician_id"], body["pair_id"],
                                     body["answer"], body.get("placement"))

    @app.get("/api/reports/realism")
    def realism_report():
        return store.realism_report()

    @app.get("/api/reports/paired")
    def paired_report():
        return store.paired_report()

    @app.get("/api/gate")
    def gate():
        selected, incomplete = store.gate()
        return {"selected": selected, "incomplete": incomplete}

    @app.get("/api/videos/{video_id}/stream")
    def stream_video(video_id: str, request: Request, variant: str = "syn"):
        video = store.roster.video(video_id)
        path = video.get(f"{variant}_path") or video.get("path")
        if not path or not Path(path).exists():
            raise HTTPException(404, f"no stored file for {video_id}")
        data = Path(path).read_bytes()
        range_header = request.headers.get("range")
        headers = {"Accept-Ranges": "bytes"}
        if range_header and range_header.startswith("bytes="):
            spec = range_header[len("bytes="):].split("-")
            start = int(spec[0]) if spec[0] else 0
            end = int(spec[1]) if len(spec) > 1 and spec[1] else len(data) - 1
            end = min(end, len(data) - 1)
            if start > end:
                raise HTTPException(416, "invalid range")
            headers["Content-Range"] = f"bytes {start}-{end}/{len(data)}"
            return Response(content=data[start:end + 1], status_code=206,
                            media_type="application/octet-stream",
                            headers=headers)
        return Response(content=data, media_type="application/octet-stream",
                        headers=headers)

    return app
