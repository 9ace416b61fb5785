"""Benchmark dataset file I/O (JSON arrays and JSONL records)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .linking import SftRecord, Triplet
from .schema import DatabaseSchema


def load_dataset(path: str | Path) -> list[dict]:
    """Load a benchmark dataset: a JSON array of question/db_id/query items."""
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    for i, record in enumerate(records):
        for key in ("question", "db_id"):
            if key not in record:
                raise ValueError(f"dataset item {i} is missing {key!r}")
    return records


def triplets_from_dataset(
    dataset: Sequence[dict], schemas: dict[str, DatabaseSchema]
) -> list[Triplet]:
    triplets = []
    for record in dataset:
        triplets.append(
            Triplet(
                question=record["question"],
                schema=schemas[record["db_id"]],
                gold_sql=record["query"],
                origin=record.get("origin", "original"),
            )
        )
    return triplets


def write_augmented_dataset(triplets: Sequence[Triplet], path: str | Path) -> None:
    """Benchmark dataset format plus the augmentation origin field."""
    records = [
        {
            "question": t.question,
            "db_id": t.schema.db_id,
            "query": t.gold_sql,
            "origin": t.origin,
        }
        for t in triplets
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")


def write_sft_records(records: Sequence[SftRecord], path: str | Path) -> None:
    """One JSON object per line: instruction, input, output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(
                json.dumps(
                    {
                        "instruction": record.instruction,
                        "input": record.input,
                        "output": record.output,
                    }
                )
                + "\n"
            )


def read_sft_records(path: str | Path) -> list[SftRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                data = json.loads(line)
                records.append(SftRecord(data["instruction"], data["input"], data["output"]))
    return records
