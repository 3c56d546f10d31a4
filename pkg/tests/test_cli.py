import json
import sys
from pathlib import Path

import numpy as np
import pytest

from faceveil import clips as clipio
from faceveil.cli import main

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))
from make_demo_data import make_dataset  # noqa: E402


@pytest.fixture(scope="session")
def demo_manifest(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("demo_data")
    return make_dataset(data_dir, n_cases=6, n_frames=5, size=256, seed=200)


@pytest.fixture(scope="session")
def run_dir(demo_manifest, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["deidentify", "--manifest", str(demo_manifest),
                 "--output-dir", str(out), "--seed", "11"])
    assert code == 0
    return out


class TestDeidentify:
    def test_run_manifest_written(self, run_dir):
        run = json.loads((run_dir / "run.json").read_text())
        assert run["command"] == "deidentify"
        assert run["n_ok"] == 6
        assert run["n_failed"] == 0
        for case in run["cases"]:
            assert Path(case["syn_clip_path"]).exists()
            assert Path(case["prompt_path"]).exists()
            assert Path(case["real_track_path"]).exists()

    def test_rerun_is_bit_identical(self, demo_manifest, run_dir, tmp_path):
        out2 = tmp_path / "run2"
        assert main(["deidentify", "--manifest", str(demo_manifest),
                     "--output-dir", str(out2), "--seed", "11"]) == 0
        a = json.loads((run_dir / "run.json").read_text())
        b = json.loads((out2 / "run.json").read_text())
        for ca, cb in zip(a["cases"], b["cases"]):
            assert ca["seed"] == cb["seed"]
            assert ca["pseudo_id"] == cb["pseudo_id"]
            syn_a = clipio.decode_video(ca["syn_clip_path"])
            syn_b = clipio.decode_video(cb["syn_clip_path"])
            assert np.array_equal(syn_a.frames, syn_b.frames)

    def test_different_seed_changes_prompts(self, demo_manifest, run_dir,
                                            tmp_path):
        out2 = tmp_path / "run_seed"
        assert main(["deidentify", "--manifest", str(demo_manifest),
                     "--output-dir", str(out2), "--seed", "12"]) == 0
        a = json.loads((run_dir / "run.json").read_text())
        b = json.loads((out2 / "run.json").read_text())
        assert any(ca["pseudo_id"] != cb["pseudo_id"]
                   for ca, cb in zip(a["cases"], b["cases"]))

    def test_partial_failure_exits_2(self, demo_manifest, tmp_path):
        cases = json.loads(Path(demo_manifest).read_text())["cases"]
        broken = dict(cases[0], case_id="broken",
                      real_clip_path=str(tmp_path / "missing.clip.npz"))
        bad_manifest = tmp_path / "m.json"
        bad_manifest.write_text(json.dumps({"cases": [cases[0], broken]}))
        out = tmp_path / "run"
        assert main(["deidentify", "--manifest", str(bad_manifest),
                     "--output-dir", str(out), "--seed", "11"]) == 2
        run = json.loads((out / "run.json").read_text())
        assert run["n_ok"] == 1
        assert run["n_failed"] == 1
        failed = [c for c in run["cases"] if c["status"] == "failed"][0]
        assert failed["case_id"] == "broken"

    def test_all_failed_exits_1(self, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"cases": [
            {"case_id": "x", "real_clip_path": str(tmp_path / "no.clip.npz"),
             "landmarks_path": str(tmp_path / "no.json")}]}))
        assert main(["deidentify", "--manifest", str(manifest),
                     "--output-dir", str(tmp_path / "run"),
                     "--seed", "0"]) == 1

    def test_unknown_backend_in_config_exits_1(self, tmp_path,
                                               demo_manifest):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"generator_backend": "diffusion_v9"}))
        assert main(["deidentify", "--config", str(cfg),
                     "--manifest", str(demo_manifest),
                     "--output-dir", str(tmp_path / "run")]) == 1


class TestEvalPrivacy:
    def test_threshold_and_ordering(self, run_dir):
        assert main(["eval-privacy", "--manifest", str(run_dir / "run.json"),
                     "--output-dir", str(run_dir), "--seed", "11"]) == 0
        pooled = json.loads(
            (run_dir / "reports" / "privacy_pooled.json").read_text())
        assert pooled["threshold"] == 0.68
        rr = pooled["groups"]["real_real"]
        rs = pooled["groups"]["real_syn"]
        gap = rr["quartiles"]["median"] - rs["quartiles"]["median"]
        rr_iqr = rr["quartiles"]["q75"] - rr["quartiles"]["q25"]
        assert gap > rr_iqr
        assert rs["fraction_below_threshold"] > 0.9
        assert rr["fraction_below_threshold"] < 0.5

    def test_deterministic(self, run_dir, tmp_path):
        out = tmp_path / "p2"
        for _ in range(2):
            assert main(["eval-privacy",
                         "--manifest", str(run_dir / "run.json"),
                         "--output-dir", str(out), "--seed", "11"]) == 0
        a = json.loads(
            (run_dir / "reports" / "privacy_pooled.json").read_text())
        b = json.loads((out / "reports" / "privacy_pooled.json").read_text())
        assert a["groups"] == b["groups"]


class TestEvalTriage:
    def test_summary_csv_columns(self, run_dir):
        assert main(["eval-triage", "--manifest", str(run_dir / "run.json"),
                     "--output-dir", str(run_dir), "--seed", "11"]) == 0
        lines = (run_dir / "reports" / "triage_summary.csv") \
            .read_text().strip().splitlines()
        assert lines[0] == "scheme,Acc,Spec,Sens,F1,AUC,MSE"
        assert len(lines) == 5

    def test_syn_equal_real_gives_identical_schemes(self, demo_manifest,
                                                    tmp_path):
        cases = json.loads(Path(demo_manifest).read_text())["cases"]
        aliased = [dict(c, syn_clip_path=c["real_clip_path"],
                        syn_track_path=c["landmarks_path"],
                        real_track_path=c["landmarks_path"])
                   for c in cases]
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"cases": aliased}))
        out = tmp_path / "run"
        assert main(["eval-triage", "--manifest", str(manifest),
                     "--output-dir", str(out), "--seed", "3"]) == 0
        detail = json.loads(
            (out / "reports" / "triage_detail.json").read_text())
        base = detail["per_case_logits"]["real_real"]
        for scheme in ("syn_real", "real_syn", "syn_syn"):
            assert detail["per_case_logits"][scheme] == base
            assert detail["schemes"][scheme]["mse_vs_baseline"] == 0.0

    def test_fold_plan_recorded_and_deterministic(self, run_dir, tmp_path):
        out = tmp_path / "t2"
        assert main(["eval-triage", "--manifest", str(run_dir / "run.json"),
                     "--output-dir", str(out), "--seed", "11"]) == 0
        a = json.loads(
            (run_dir / "reports" / "triage_detail.json").read_text())
        b = json.loads((out / "reports" / "triage_detail.json").read_text())
        assert a["fold_plan"] == b["fold_plan"]
        assert sorted(x for f in a["fold_plan"]["folds"] for x in f) \
            == [f"case{i:03d}" for i in range(6)]


class TestReport:
    def test_prints_case_summary(self, run_dir, capsys):
        assert main(["report", str(run_dir)]) == 0
        out = capsys.readouterr().out
        assert "ok=6" in out
        assert "case000" in out
        assert "report:" in out  # privacy/triage artifacts listed

    def test_missing_run_dir_exits_1(self, tmp_path, capsys):
        assert main(["report", str(tmp_path)]) == 1
        assert "not found" in capsys.readouterr().err


class TestServeReview:
    def test_corrupt_log_exits_1(self, tmp_path, capsys):
        roster = tmp_path / "roster.json"
        roster.write_text(json.dumps({
            "videos": [{"video_id": "v1"}], "raters": ["r1", "r2"]}))
        log = tmp_path / "events.jsonl"
        log.write_text("{broken\n")
        assert main(["serve-review", "--roster", str(roster),
                     "--log", str(log)]) == 1
        assert "corrupt event log" in capsys.readouterr().err
