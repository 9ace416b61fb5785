"""Example retrieval over a precomputed question/SQL pool.

Round 1 ranks candidates by cosine similarity between question-skeleton
embeddings; round 2 re-ranks by edit distance between SQL skeleton
parse trees. Both are exact scans over the pool, ties broken by pool
index, so rankings are total orders and stable across runs.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .embeddings import EmbeddingProvider, cosine_similarity
from .errors import ParseError, ZeroVectorError
from .gateway import ChatRequest, LlmGateway
from .schema import SchemaSubset
from .skeleton import SqlSkeleton, tree_edit_distance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExamplePair:
    """One candidate of the retrieval pool with its precomputed views."""

    question: str
    sql: str
    q_skeleton: str
    q_embedding: tuple[float, ...]
    s_skeleton: SqlSkeleton
    pool_index: int


@dataclass
class RetrievalIndex:
    pool: list[ExamplePair]
    provider_id: str
    dimension: int
    built_at: float = field(default_factory=time.time)

    def __len__(self) -> int:
        return len(self.pool)


@dataclass
class RetrievalResult(Sequence):
    """Ranked examples plus how they were obtained."""

    pairs: list[ExamplePair]
    mode: str  # "question" or "sql"
    fallback: str | None = None

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, item):
        return self.pairs[item]

    def __iter__(self) -> Iterator[ExamplePair]:
        return iter(self.pairs)


# ----------------------------------------------------------------------
# question skeletons
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuestionSkeleton:
    text: str
    used_fallback: bool = False


_WORD_RE = re.compile(r"'[^']*'|\"[^\"]*\"|\w+|[^\w\s]")
_NUMBER_RE = re.compile(r"\d[\d.,]*$")


def _mask_vocabulary(linked: SchemaSubset) -> set[str]:
    vocab: set[str] = set(linked.tables)
    for column in linked.columns:
        _, _, name = column.partition(".")
        if name and name != "*":
            vocab.add(name)
    expanded = set(vocab)
    for word in vocab:
        expanded.add(word + "s")
        expanded.add(word + "es")
        if word.endswith("es"):
            expanded.add(word[:-2])
        if word.endswith("s"):
            expanded.add(word[:-1])
    return expanded


def rule_based_question_skeleton(question: str, linked: SchemaSubset) -> str:
    """Deterministic masker used when no gateway is available.

    Masks tokens matching linked table/column names (plus naive
    plural/singular forms) and all numeric or quoted tokens.
    """
    vocab = _mask_vocabulary(linked)
    out: list[str] = []
    for token in _WORD_RE.findall(question):
        if token.lower() in vocab or token[0] in "'\"" or _NUMBER_RE.match(token):
            if out and out[-1] == "_":
                continue  # collapse adjacent masks
            out.append("_")
        else:
            out.append(token)
    text = ""
    for token in out:
        if not text:
            text = token
        elif re.match(r"[^\w\s]", token):
            text += token
        else:
            text += " " + token
    return text


def extract_question_skeleton(
    question: str,
    linked: SchemaSubset,
    gateway: LlmGateway | None,
    model_id: str = "",
) -> QuestionSkeleton:
    """Mask domain terms and values out of a question.

    Uses the LLM gateway with the linked subset as context; any gateway
    failure falls back to the rule-based masker and tags the result.
    """
    if not question:
        return QuestionSkeleton("", used_fallback=False)
    if gateway is None:
        return QuestionSkeleton(rule_based_question_skeleton(question, linked), used_fallback=True)
    from .prompting import load_template  # local import, avoids a cycle

    linked_text = ", ".join(sorted(linked.tables | set(linked.columns))) or "(none)"
    prompt = load_template("question_skeleton_v1").substitute(
        question=question, linked=linked_text
    )
    request = ChatRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        temperature=0.0,
        max_tokens=128,
    )
    try:
        completion = gateway.complete(request)
    except Exception as exc:  # any gateway failure: fallback is mandatory
        logger.warning("skeleton gateway failed (%s); using rule-based masker", exc)
        return QuestionSkeleton(rule_based_question_skeleton(question, linked), used_fallback=True)
    text = completion.strip().splitlines()[0].strip() if completion.strip() else ""
    if not text:
        return QuestionSkeleton(rule_based_question_skeleton(question, linked), used_fallback=True)
    return QuestionSkeleton(text, used_fallback=False)


# ----------------------------------------------------------------------
# retrieval
# ----------------------------------------------------------------------


def retrieve_by_question_skeleton(
    target_skeleton: str,
    index: RetrievalIndex,
    n: int,
    embedder: EmbeddingProvider,
    *,
    exclude_question: str | None = None,
) -> RetrievalResult:
    """Top-n pool entries by cosine similarity of skeleton embeddings.

    Ties break toward the lower pool index; candidates whose similarity
    is undefined (zero-norm embedding) are skipped; the pool entry whose
    question equals ``exclude_question`` is never returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    target = embedder.embed([target_skeleton])[0]
    scored: list[tuple[float, int, ExamplePair]] = []
    for pair in index.pool:
        if exclude_question is not None and pair.question == exclude_question:
            continue
        try:
            similarity = cosine_similarity(target, pair.q_embedding)
        except ZeroVectorError:
            continue
        scored.append((-similarity, pair.pool_index, pair))
    scored.sort(key=lambda item: (item[0], item[1]))
    return RetrievalResult([pair for _, _, pair in scored[:n]], mode="question")


def retrieve_by_sql_skeleton(
    round1_sql: str,
    index: RetrievalIndex,
    n: int,
    *,
    embedder: EmbeddingProvider | None = None,
    fallback_skeleton: str | None = None,
    exclude_question: str | None = None,
) -> RetrievalResult:
    """Top-n pool entries by ascending parse-tree edit distance.

    If the round-1 SQL does not parse, falls back to question-skeleton
    retrieval (when an embedder and skeleton are supplied) and tags the
    result with ``fallback="question"``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    try:
        target = SqlSkeleton.from_sql(round1_sql)
    except ParseError:
        if embedder is None or fallback_skeleton is None:
            return RetrievalResult([], mode="sql", fallback="question")
        result = retrieve_by_question_skeleton(
            fallback_skeleton, index, n, embedder, exclude_question=exclude_question
        )
        return RetrievalResult(result.pairs, mode="question", fallback="question")
    scored: list[tuple[int, int, ExamplePair]] = []
    for pair in index.pool:
        if exclude_question is not None and pair.question == exclude_question:
            continue
        distance = tree_edit_distance(target, pair.s_skeleton)
        scored.append((distance, pair.pool_index, pair))
    scored.sort(key=lambda item: (item[0], item[1]))
    return RetrievalResult([pair for _, _, pair in scored[:n]], mode="sql")


# ----------------------------------------------------------------------
# index construction and persistence
# ----------------------------------------------------------------------


def build_index(
    pairs: Sequence[tuple[str, str]],
    embedder: EmbeddingProvider,
    *,
    gateway: LlmGateway | None = None,
    model_id: str = "",
    linked: Sequence[SchemaSubset | None] | None = None,
) -> RetrievalIndex:
    """Precompute skeletons and embeddings for a (question, sql) pool.

    ``linked`` optionally supplies the linked subset per item as masking
    context. Items whose SQL does not parse are skipped and logged.
    Rebuilding from identical inputs yields an identical index.
    """
    kept: list[tuple[str, str, str, SqlSkeleton]] = []
    skipped = 0
    for i, (question, sql) in enumerate(pairs):
        try:
            s_skeleton = SqlSkeleton.from_sql(sql)
        except ParseError as exc:
            skipped += 1
            logger.warning("skipping pool item %d (unparseable SQL): %s", i, exc)
            continue
        subset = (linked[i] if linked is not None else None) or SchemaSubset()
        q_skeleton = extract_question_skeleton(question, subset, gateway, model_id).text
        kept.append((question, sql, q_skeleton, s_skeleton))

    embeddings = embedder.embed([item[2] for item in kept]) if kept else []
    dimension = embedder.dimension or (len(embeddings[0]) if embeddings else 0)
    pool = [
        ExamplePair(
            question=question,
            sql=sql,
            q_skeleton=q_skeleton,
            q_embedding=tuple(vector),
            s_skeleton=s_skeleton,
            pool_index=index,
        )
        for index, ((question, sql, q_skeleton, s_skeleton), vector) in enumerate(
            zip(kept, embeddings)
        )
    ]
    if skipped:
        logger.info("index built with %d items, %d skipped", len(pool), skipped)
    return RetrievalIndex(pool=pool, provider_id=embedder.provider_id, dimension=dimension)


def save_index(index: RetrievalIndex, path: str | Path) -> None:
    """Write the index: one header line, then one JSON record per example."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(
            json.dumps(
                {"provider_id": index.provider_id, "dimension": index.dimension},
                sort_keys=True,
            )
            + "\n"
        )
        for pair in index.pool:
            handle.write(
                json.dumps(
                    {
                        "question": pair.question,
                        "sql": pair.sql,
                        "q_skeleton": pair.q_skeleton,
                        "q_embedding": list(pair.q_embedding),
                        "s_skeleton": pair.s_skeleton.text,
                        "pool_index": pair.pool_index,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_index(path: str | Path) -> RetrievalIndex:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        header = json.loads(handle.readline())
        pool: list[ExamplePair] = []
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            pool.append(
                ExamplePair(
                    question=record["question"],
                    sql=record["sql"],
                    q_skeleton=record["q_skeleton"],
                    q_embedding=tuple(record["q_embedding"]),
                    s_skeleton=SqlSkeleton.from_text(record["s_skeleton"]),
                    pool_index=record["pool_index"],
                )
            )
    for expected, pair in enumerate(pool):
        if pair.pool_index != expected:
            raise ValueError(f"index corrupted: pool_index {pair.pool_index} at row {expected}")
    return RetrievalIndex(pool=pool, provider_id=header["provider_id"], dimension=header["dimension"])
