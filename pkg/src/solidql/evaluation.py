"""Execution-accuracy (EX) and exact-match (EM) scoring plus robustness.

EX compares the result tables of predicted and gold SQL on the target
SQLite database: rows as a multiset, each row canonicalized by sorting
its values so column order never matters, and row order enforced only
when the gold statement has a top-level ORDER BY. EM is whole-statement
equality after canonical re-rendering (lowercase identifiers/keywords,
collapsed whitespace, no trailing semicolon).

Queries run on read-only connections with a per-query timeout; LLM
output can be pathological.
"""

from __future__ import annotations

import json
import logging
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ExecError, ExecTimeout, ParseError
from .sql.nodes import OPERATOR
from .sql.parser import parse_sql
from .sql.render import render_sql

logger = logging.getLogger(__name__)

FLOAT_DECIMALS = 6  # comparison tolerance convention


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[tuple, ...]
    ordered: bool


@dataclass(frozen=True)
class EvalRecord:
    question: str
    db_id: str
    gold_sql: str
    pred_sql: str
    ex: bool
    em: bool
    error: str | None = None
    excluded: bool = False
    flags: tuple[str, ...] = ()


def database_path(databases_root: str | Path, db_id: str) -> Path:
    return Path(databases_root) / db_id / f"{db_id}.sqlite"


# ----------------------------------------------------------------------
# execution
# ----------------------------------------------------------------------


def execute_sql(db_path: str | Path, sql: str, timeout: float = 30.0) -> ResultTable:
    """Run one statement read-only and capture its result table.

    Raises:
        ExecError: missing database, syntax or runtime failure.
        ExecTimeout: the query exceeded ``timeout`` seconds.
    """
    path = Path(db_path)
    if not path.exists():
        raise ExecError(f"database not found: {path}")
    try:
        connection = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise ExecError(f"cannot open database {path}: {exc}") from exc
    timed_out = threading.Event()

    def interrupt() -> None:
        timed_out.set()
        connection.interrupt()

    timer = threading.Timer(timeout, interrupt)
    timer.start()
    try:
        cursor = connection.execute(sql)
        rows = tuple(tuple(row) for row in cursor.fetchall())
    except sqlite3.Error as exc:
        if timed_out.is_set():
            raise ExecTimeout(f"query exceeded {timeout:.0f}s") from exc
        raise ExecError(str(exc)) from exc
    finally:
        timer.cancel()
        connection.close()
    return ResultTable(rows=rows, ordered=has_top_level_order_by(sql))


def has_top_level_order_by(sql: str) -> bool:
    """True when the statement's outermost query carries ORDER BY."""
    try:
        tree = parse_sql(sql)
    except ParseError:
        return _order_by_token_scan(sql)
    node = tree
    while node.kind == OPERATOR:  # a trailing ORDER BY parses into the last operand
        node = node.children[-1]
    return node.clause("order_by") is not None


def _order_by_token_scan(sql: str) -> bool:
    """Depth-aware scan for ORDER BY; tolerant of untokenizable input."""
    depth = 0
    previous = ""
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch == "'":
            end = sql.find("'", i + 1)
            i = n if end == -1 else end + 1
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (sql[j].isalnum() or sql[j] == "_"):
                j += 1
            word = sql[i:j].lower()
            if depth == 0:
                if previous == "order" and word == "by":
                    return True
                previous = word
            i = j
            continue
        i += 1
    return False


# ----------------------------------------------------------------------
# comparison
# ----------------------------------------------------------------------


def _canonical_value(value) -> tuple:
    if value is None:
        return (0, "")
    if isinstance(value, (int, float)):
        return (1, round(float(value), FLOAT_DECIMALS))
    if isinstance(value, bytes):
        return (3, value.hex())
    return (2, str(value))


def _canonical_row(row: tuple) -> tuple:
    return tuple(sorted(_canonical_value(v) for v in row))


def tables_match(pred: ResultTable, gold: ResultTable) -> bool:
    """Compare result tables under the gold statement's order semantics."""
    if pred.rows and gold.rows and len(pred.rows[0]) != len(gold.rows[0]):
        return False
    pred_rows = [_canonical_row(row) for row in pred.rows]
    gold_rows = [_canonical_row(row) for row in gold.rows]
    if gold.ordered:
        return pred_rows == gold_rows
    return sorted(pred_rows) == sorted(gold_rows)


def execution_match(
    pred_sql: str, gold_sql: str, db_path: str | Path, timeout: float = 30.0
) -> bool:
    """EX verdict for one pair; gold execution failures propagate.

    A failing predicted statement scores False rather than raising.
    """
    gold = execute_sql(db_path, gold_sql, timeout)
    try:
        pred = execute_sql(db_path, pred_sql, timeout)
    except ExecError:
        return False
    return tables_match(pred, gold)


def canonical_sql(sql: str) -> str:
    """Canonical whole-statement form; string-normalized when unparseable."""
    stripped = sql.strip().rstrip(";").strip()
    try:
        return render_sql(parse_sql(stripped), canonical=True)
    except ParseError:
        return " ".join(stripped.lower().split())


def exact_match(pred_sql: str, gold_sql: str) -> bool:
    return canonical_sql(pred_sql) == canonical_sql(gold_sql)


# ----------------------------------------------------------------------
# robustness
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RobustnessVerdict:
    passed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.passed


def robustness_check(final_sql_clean: str, final_sql_perturbed: str,
                     db_path: str | Path, timeout: float = 30.0) -> RobustnessVerdict:
    """True iff the clean and perturbed runs access the database identically."""
    try:
        clean = execute_sql(db_path, final_sql_clean, timeout)
    except ExecError as exc:
        return RobustnessVerdict(False, f"clean SQL failed: {exc}")
    try:
        perturbed = execute_sql(db_path, final_sql_perturbed, timeout)
    except ExecError as exc:
        return RobustnessVerdict(False, f"perturbed SQL failed: {exc}")
    if tables_match(perturbed, clean):
        return RobustnessVerdict(True)
    return RobustnessVerdict(False, "result tables differ")


# ----------------------------------------------------------------------
# aggregate evaluation
# ----------------------------------------------------------------------


@dataclass
class EvalReport:
    records: list[EvalRecord]
    ex_pct: float
    em_pct: float
    scored: int
    excluded: int
    flag_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": len(self.records),
            "scored": self.scored,
            "excluded": self.excluded,
            "ex_pct": self.ex_pct,
            "em_pct": self.em_pct,
            "flag_counts": dict(sorted(self.flag_counts.items())),
        }

    def table(self) -> str:
        lines = [
            f"{'items':>10}  {len(self.records)}",
            f"{'scored':>10}  {self.scored}",
            f"{'excluded':>10}  {self.excluded}",
            f"{'EX':>10}  {self.ex_pct:.1f}",
            f"{'EM':>10}  {self.em_pct:.1f}",
        ]
        for flag, count in sorted(self.flag_counts.items()):
            lines.append(f"{flag:>24}  {count}")
        return "\n".join(lines)


def evaluate(
    dataset: Sequence[dict],
    predictions: Sequence[str],
    databases_root: str | Path,
    *,
    flags: Sequence[Sequence[str]] | None = None,
    timeout: float = 30.0,
) -> EvalReport:
    """Score aligned (dataset, predictions); length mismatch is fatal.

    Items whose gold SQL fails to execute are excluded from the
    percentages and counted separately.
    """
    if len(dataset) != len(predictions):
        raise ValueError(f"{len(dataset)} dataset items vs {len(predictions)} predictions")
    records: list[EvalRecord] = []
    flag_counts: dict[str, int] = {}
    ex_hits = 0
    em_hits = 0
    scored = 0
    excluded = 0
    for i, (item, pred_sql) in enumerate(zip(dataset, predictions)):
        db_path = database_path(databases_root, item["db_id"])
        item_flags = tuple(flags[i]) if flags is not None else ()
        for flag in item_flags:
            flag_counts[flag] = flag_counts.get(flag, 0) + 1
        try:
            gold_table = execute_sql(db_path, item["query"], timeout)
        except ExecError as exc:
            excluded += 1
            logger.warning("excluding item %d (gold SQL failed): %s", i, exc)
            records.append(
                EvalRecord(
                    question=item["question"],
                    db_id=item["db_id"],
                    gold_sql=item["query"],
                    pred_sql=pred_sql,
                    ex=False,
                    em=False,
                    error=f"gold execution failed: {exc}",
                    excluded=True,
                    flags=item_flags,
                )
            )
            continue
        error = None
        try:
            pred_table = execute_sql(db_path, pred_sql, timeout)
            ex = tables_match(pred_table, gold_table)
        except ExecError as exc:
            ex = False
            error = str(exc)
        em = exact_match(pred_sql, item["query"])
        scored += 1
        ex_hits += ex
        em_hits += em
        records.append(
            EvalRecord(
                question=item["question"],
                db_id=item["db_id"],
                gold_sql=item["query"],
                pred_sql=pred_sql,
                ex=ex,
                em=em,
                error=error,
                flags=item_flags,
            )
        )
    ex_pct = 100.0 * ex_hits / scored if scored else 0.0
    em_pct = 100.0 * em_hits / scored if scored else 0.0
    return EvalReport(
        records=records,
        ex_pct=ex_pct,
        em_pct=em_pct,
        scored=scored,
        excluded=excluded,
        flag_counts=flag_counts,
    )


def write_report(report: EvalReport, path: str | Path) -> None:
    """JSON summary plus aligned per-item verdict lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
        for record in report.records:
            handle.write(
                json.dumps(
                    {
                        "db_id": record.db_id,
                        "em": record.em,
                        "error": record.error,
                        "ex": record.ex,
                        "excluded": record.excluded,
                        "flags": list(record.flags),
                        "question": record.question,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
