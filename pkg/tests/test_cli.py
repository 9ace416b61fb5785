"""CLI subcommands over a temporary workspace with recorded transcripts."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from solidql.cli import main
from solidql.config import RunConfig
from solidql.embeddings import HashedBagOfTokens
from solidql.gateway import LlmGateway, TranscriptStore
from solidql.linking import GatewayLinkingPredictor, QuestionRewriter, augment_dataset
from solidql.pipeline import run_batch
from solidql.retrieval import load_index
from solidql.schema import load_tables_json
from solidql.data import triplets_from_dataset

from conftest import FIXTURES
from support import FakeChatProvider

GENERATIONS = {
    "What are the names of all employees?": "SELECT name FROM employee",
    "How many shops are there?": "SELECT count(*) FROM shop",
    "What are the names of employees older than 40?": "SELECT name FROM employee WHERE age > 40",
    "What is the name of the shop with the most products?": "SELECT name FROM shop ORDER BY number_products DESC LIMIT 1",
    "List the names of employees hired full time.": "SELECT T1.name FROM employee AS T1 JOIN hiring AS T2 ON T1.employee_id = T2.employee_id WHERE T2.is_full_time = 'T'",
}
SKELETONS = {
    "What are the names of all employees?": "What are the _ of all _?",
    "How many shops are there?": "How many _ are there?",
    "What are the names of employees older than 40?": "What are the _ of _ older than _?",
    "What is the name of the shop with the most products?": "What is the _ of the _ with the most _?",
    "List the names of employees hired full time.": "List the _ of _ hired _.",
}
LINKINGS = {
    "What are the names of all employees?": "tables: employee | columns: employee.name",
    "How many shops are there?": "tables: shop | columns: shop.*",
    "What are the names of employees older than 40?": "tables: employee | columns: employee.age, employee.name",
    "What is the name of the shop with the most products?": "tables: shop | columns: shop.name, shop.number_products",
    "List the names of employees hired full time.": (
        "tables: employee, hiring | columns: employee.employee_id, employee.name, "
        "hiring.employee_id, hiring.is_full_time"
    ),
}


def make_provider() -> FakeChatProvider:
    return FakeChatProvider(generations=GENERATIONS, skeletons=SKELETONS, linkings=LINKINGS)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Temp tree with fixture files, a built index, and recorded transcripts."""
    root = tmp_path_factory.mktemp("cli")
    for name in ("tables.json", "shop_dataset.json", "shop_pool.json"):
        shutil.copy(FIXTURES / name, root / name)

    code = main([
        "index",
        "--dataset", str(root / "shop_pool.json"),
        "--tables", str(root / "tables.json"),
        "--output", str(root / "index.jsonl"),
    ])
    assert code == 0

    # Record every transcript the 5-question run needs, then every rewrite
    # the augmentation needs. Recording goes through the public API with a
    # deterministic scripted provider; replays are then fully hermetic.
    schemas = load_tables_json(root / "tables.json")
    dataset = json.loads((root / "shop_dataset.json").read_text())
    index = load_index(root / "index.jsonl")
    provider = make_provider()
    gateway = LlmGateway(
        mode="record", store=TranscriptStore(root / "transcripts.jsonl"), provider=provider
    )
    predictor = GatewayLinkingPredictor(gateway, "gpt-4o-mini")
    run_batch(
        dataset, schemas, predictor, index, gateway, HashedBagOfTokens(),
        RunConfig(mode="record", workers=1),
    )
    rewriter = QuestionRewriter(gateway, "gpt-4o-mini")
    augment_dataset(triplets_from_dataset(dataset, schemas), rewriter)
    return root


def run_cli(workspace, *extra, dataset="shop_dataset.json"):
    return main([
        *extra[:1],
        "--dataset", str(workspace / dataset),
        "--tables", str(workspace / "tables.json"),
        "--index", str(workspace / "index.jsonl"),
        "--transcripts", str(workspace / "transcripts.jsonl"),
        *extra[1:],
    ])


def test_cmd_index_reports_and_is_idempotent(workspace, capsys):
    first = (workspace / "index.jsonl").read_bytes()
    code = main([
        "index",
        "--dataset", str(workspace / "shop_pool.json"),
        "--tables", str(workspace / "tables.json"),
        "--output", str(workspace / "index2.jsonl"),
    ])
    assert code == 0
    assert "pool size: 5" in capsys.readouterr().out
    assert (workspace / "index2.jsonl").read_bytes() == first


def test_cmd_index_refuses_provider_mismatch(workspace, capsys):
    path = workspace / "foreign_index.jsonl"
    lines = (workspace / "index.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    header["provider_id"] = "remote:other-model"
    path.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
    code = main([
        "index",
        "--dataset", str(workspace / "shop_pool.json"),
        "--tables", str(workspace / "tables.json"),
        "--output", str(path),
    ])
    assert code == 2
    assert "provider" in capsys.readouterr().err


def test_cmd_run_replay_twice_is_byte_identical(workspace):
    outputs = []
    for name in ("run_a.jsonl", "run_b.jsonl"):
        code = run_cli(
            workspace, "run", "--mode", "replay", "--output", str(workspace / name)
        )
        assert code == 0
        outputs.append((workspace / name).read_bytes())
    assert outputs[0] == outputs[1]
    assert not (workspace / "run_a.progress.jsonl").exists()  # ledger cleaned up


def test_cmd_run_replay_miss_exits_environment(workspace, tmp_path):
    empty = tmp_path / "empty_transcripts.jsonl"
    empty.write_text("")
    code = main([
        "run",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--tables", str(workspace / "tables.json"),
        "--index", str(workspace / "index.jsonl"),
        "--transcripts", str(empty),
        "--mode", "replay",
        "--output", str(tmp_path / "out.jsonl"),
    ])
    assert code == 3


def test_cmd_run_rounds_one_makes_no_round2_requests(workspace):
    code = run_cli(
        workspace, "run", "--mode", "replay", "--rounds", "1",
        "--output", str(workspace / "run_r1.jsonl"),
    )
    assert code == 0
    results = [json.loads(line) for line in (workspace / "run_r1.jsonl").read_text().splitlines()]
    assert all(r["round2_sql"] == "" for r in results)
    assert all(r["final_sql"] == r["round1_sql"] for r in results)


def test_cmd_eval_all_gold_is_perfect(workspace, databases_root, capsys):
    code = run_cli(
        workspace, "run", "--mode", "replay", "--output", str(workspace / "run_eval.jsonl")
    )
    assert code == 0
    code = main([
        "eval",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--databases", str(databases_root),
        "--predictions", str(workspace / "run_eval.jsonl"),
        "--output", str(workspace / "report.json"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "EX  100.0" in out
    assert "EM  100.0" in out


def test_cmd_eval_detects_failures_and_exits_one(workspace, databases_root, tmp_path):
    results = [json.loads(line) for line in (workspace / "run_eval.jsonl").read_text().splitlines()]
    results[0]["final_sql"] = "SELECT age FROM employee"  # wrong column
    broken = tmp_path / "broken.jsonl"
    broken.write_text("\n".join(json.dumps(r) for r in results) + "\n")
    code = main([
        "eval",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--databases", str(databases_root),
        "--predictions", str(broken),
    ])
    assert code == 1


def test_cmd_eval_robustness_pairing(workspace, databases_root, capsys):
    code = main([
        "eval",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--databases", str(databases_root),
        "--predictions", str(workspace / "run_eval.jsonl"),
        "--robustness", str(workspace / "run_eval.jsonl"),
    ])
    assert code == 0
    assert "robustness  100.0" in capsys.readouterr().out


def test_cmd_eval_alignment_mismatch_is_fatal(workspace, databases_root, tmp_path):
    short = tmp_path / "short.jsonl"
    lines = (workspace / "run_eval.jsonl").read_text().splitlines()
    short.write_text("\n".join(lines[:2]) + "\n")
    code = main([
        "eval",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--databases", str(databases_root),
        "--predictions", str(short),
    ])
    assert code == 2


def test_cmd_build_sft_counts_and_determinism(workspace, capsys):
    for name in ("sft_a.jsonl", "sft_b.jsonl"):
        code = main([
            "build-sft",
            "--dataset", str(workspace / "shop_dataset.json"),
            "--tables", str(workspace / "tables.json"),
            "--transcripts", str(workspace / "transcripts.jsonl"),
            "--mode", "replay",
            "--output", str(workspace / name),
            "--augmented-out", str(workspace / f"aug_{name}.json"),
        ])
        assert code == 0
    out = capsys.readouterr().out
    assert "triplets in: 5  augmented: 15  sft records: 15" in out
    assert (workspace / "sft_a.jsonl").read_bytes() == (workspace / "sft_b.jsonl").read_bytes()
    augmented = json.loads((workspace / "aug_sft_a.jsonl.json").read_text())
    assert [r["origin"] for r in augmented[:3]] == ["original", "rewrite1", "rewrite2"]
    records = [json.loads(line) for line in (workspace / "sft_a.jsonl").read_text().splitlines()]
    assert all(set(r) == {"instruction", "input", "output"} for r in records)


def test_cmd_index_on_two_hundred_item_pool(workspace, tmp_path, capsys):
    import random

    from support import random_statement

    rng = random.Random(88)
    records = [
        {"question": f"synthetic question {i}", "db_id": "concert_singer",
         "query": random_statement(rng)}
        for i in range(200)
    ]
    dataset = tmp_path / "pool200.json"
    dataset.write_text(json.dumps(records))
    out = tmp_path / "index200.jsonl"
    code = main([
        "index",
        "--dataset", str(dataset),
        "--tables", str(workspace / "tables.json"),
        "--output", str(out),
    ])
    assert code == 0
    assert "pool size: 200" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert len(lines) == 201  # header plus one line per example
    assert load_index(out).dimension == 256


def test_missing_tables_file_exits_two(workspace, capsys):
    code = main([
        "build-sft",
        "--dataset", str(workspace / "shop_dataset.json"),
        "--tables", str(workspace / "nope.json"),
        "--output", str(workspace / "x.jsonl"),
        "--no-augment",
    ])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_config_file_with_flag_overrides(workspace, tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "dataset": str(workspace / "shop_dataset.json"),
        "tables": str(workspace / "tables.json"),
        "index_path": str(workspace / "index.jsonl"),
        "transcripts": str(workspace / "transcripts.jsonl"),
        "mode": "replay",
        "workers": 2,
    }))
    code = main([
        "--config", str(config_path),
        "run",
        "--output", str(tmp_path / "out.jsonl"),
    ])
    assert code == 0
    assert (tmp_path / "out.jsonl").exists()


def test_unknown_config_key_exits_two(tmp_path, capsys):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"datasets": "typo.json"}))
    code = main(["--config", str(config_path), "run"])
    assert code == 2
    assert "unknown config keys" in capsys.readouterr().err