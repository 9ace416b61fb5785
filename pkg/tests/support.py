"""Shared test helpers: independent oracles, generators, fake provider.

The oracles here deliberately avoid the production code paths: the tree
edit distance oracle enumerates valid tree mappings directly, and the
retrieval oracle re-ranks with its own sort. Production must agree with
them, not the other way round.
"""

from __future__ import annotations

import random
import re

from solidql.embeddings import cosine_similarity
from solidql.errors import ZeroVectorError
from solidql.gateway import ChatRequest
from solidql.sql.nodes import Node


# ----------------------------------------------------------------------
# tree edit distance oracle: minimum-cost valid mapping search
# ----------------------------------------------------------------------


def oracle_tree_distance(a: Node, b: Node) -> int:
    """Exhaustive search over valid ordered-tree mappings.

    A mapping pairs nodes one-to-one, preserving ancestorship and
    left-to-right order; its cost is one per unmapped node on either
    side plus one per label mismatch. The minimum over all valid
    mappings is the edit distance. Only usable for small trees.
    """
    labels_a, anc_a = _flatten(a)
    labels_b, anc_b = _flatten(b)
    na, nb = len(labels_a), len(labels_b)
    best = na + nb  # delete everything, insert everything

    def search(ai: int, next_b: int, cost: int, mapped: list[tuple[int, int]]) -> None:
        nonlocal best
        if cost >= best:
            return
        if ai == na:
            total = cost + (nb - len(mapped))  # remaining b nodes are insertions
            if total < best:
                best = total
            return
        # Map ai to some later b node (preorder order must be preserved).
        for bj in range(next_b, nb):
            consistent = all(
                anc_a[pa][ai] == anc_b[pb][bj] for pa, pb in mapped
            )
            if not consistent:
                continue
            relabel = 0 if labels_a[ai] == labels_b[bj] else 1
            mapped.append((ai, bj))
            search(ai + 1, bj + 1, cost + relabel, mapped)
            mapped.pop()
        # Or delete ai.
        search(ai + 1, next_b, cost + 1, mapped)

    search(0, 0, 0, [])
    return best


def _flatten(root: Node) -> tuple[list[str], list[list[bool]]]:
    labels: list[str] = []
    parents: list[int] = []

    def visit(node: Node, parent: int) -> None:
        index = len(labels)
        labels.append(node.label)
        parents.append(parent)
        for child in node.children:
            visit(child, index)

    visit(root, -1)
    n = len(labels)
    anc = [[False] * n for _ in range(n)]
    for j in range(n):
        i = parents[j]
        while i != -1:
            anc[i][j] = True
            i = parents[i]
    return labels, anc


def random_tree(rng: random.Random, max_nodes: int = 8, alphabet: str = "ABC") -> Node:
    """Random ordered tree with 1..max_nodes nodes and small label set."""
    n = rng.randint(1, max_nodes)
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    for i in range(1, n):
        children[rng.randrange(i)].append(i)
    labels = [rng.choice(alphabet) for _ in range(n)]

    def build(i: int) -> Node:
        return Node("n", labels[i], tuple(build(c) for c in children[i]))

    return build(0)


# ----------------------------------------------------------------------
# random Spider-style statement pairs
# ----------------------------------------------------------------------

_VOCAB_A = {
    "tables": ["singer", "concert", "stadium", "album"],
    "columns": ["name", "age", "capacity", "year", "country", "theme"],
    "values": ["18", "2014", "'France'", "'pop'", "100"],
}
_VOCAB_B = {
    "tables": ["employee", "shop", "hiring", "product"],
    "columns": ["title", "salary", "location", "start_from", "city", "rank"],
    "values": ["42", "1999", "'Berlin'", "'rock'", "7"],
}


def random_statement_pair(rng: random.Random) -> tuple[str, str]:
    """Two statements with identical structure, different identifiers/values."""
    plan = _StatementPlan(rng)
    return plan.render(_VOCAB_A, rng.randrange(1 << 30)), plan.render(
        _VOCAB_B, rng.randrange(1 << 30)
    )


def random_statement(rng: random.Random) -> str:
    return _StatementPlan(rng).render(_VOCAB_A, rng.randrange(1 << 30))


class _StatementPlan:
    """Structure-only plan instantiated with a concrete vocabulary."""

    def __init__(self, rng: random.Random) -> None:
        self.n_select = rng.randint(1, 2)
        self.aggregates = []
        for _ in range(self.n_select):
            agg = rng.choice([None, "count", "max", "avg"])
            if agg == "count" and rng.random() < 0.5:
                agg = "count_star"
            self.aggregates.append(agg)
        self.distinct = rng.random() < 0.2
        self.join = rng.random() < 0.3
        self.where_ops = []
        for _ in range(rng.randint(0, 2)):
            self.where_ops.append(rng.choice(["=", ">", "<", "like", "between", "in_values", "in_subquery"]))
        self.group = rng.random() < 0.3
        self.having = self.group and rng.random() < 0.5
        self.order = rng.choice([None, "asc", "desc"])
        self.order_by_count = self.order is not None and rng.random() < 0.4
        self.limit = rng.random() < 0.3

    def render(self, vocab: dict, seed: int) -> str:
        rng = random.Random(seed)
        tables = vocab["tables"]
        columns = vocab["columns"]
        values = vocab["values"]
        pick = rng.choice
        table = pick(tables)

        items = []
        for agg in self.aggregates:
            column = pick(columns)
            if agg == "count_star":
                items.append("count(*)")
            elif agg:
                items.append(f"{agg}({column})")
            else:
                items.append(column)
        sql = "SELECT "
        if self.distinct:
            sql += "DISTINCT "
        sql += ", ".join(items) + f" FROM {table}"
        if self.join:
            other = pick(tables)
            sql += f" JOIN {other} ON {table}.{pick(columns)} = {other}.{pick(columns)}"
        if self.where_ops:
            predicates = []
            for op in self.where_ops:
                column = pick(columns)
                if op == "between":
                    predicates.append(f"{column} BETWEEN {pick(values)} AND {pick(values)}")
                elif op == "in_values":
                    predicates.append(f"{column} IN ({pick(values)}, {pick(values)})")
                elif op == "in_subquery":
                    predicates.append(
                        f"{column} IN (SELECT {pick(columns)} FROM {pick(tables)} "
                        f"WHERE {pick(columns)} = {pick(values)})"
                    )
                elif op == "like":
                    predicates.append(f"{column} LIKE {pick(values)}")
                else:
                    predicates.append(f"{column} {op} {pick(values)}")
            sql += " WHERE " + " AND ".join(predicates)
        if self.group:
            sql += f" GROUP BY {pick(columns)}"
            if self.having:
                sql += f" HAVING count(*) > {rng.randint(1, 9)}"
        if self.order:
            target = "count(*)" if self.order_by_count else pick(columns)
            sql += f" ORDER BY {target} {self.order.upper()}"
        if self.limit:
            sql += f" LIMIT {rng.randint(1, 9)}"
        return sql


# ----------------------------------------------------------------------
# retrieval oracle
# ----------------------------------------------------------------------


def brute_force_question_ranking(target_vector, pool, n, exclude_question=None):
    """Independent full scan: (similarity desc, pool_index asc) ordering."""
    ranked = []
    for pair in pool:
        if exclude_question is not None and pair.question == exclude_question:
            continue
        try:
            sim = cosine_similarity(target_vector, pair.q_embedding)
        except ZeroVectorError:
            continue
        ranked.append((sim, pair.pool_index))
    ranked.sort(key=lambda t: (-t[0], t[1]))
    return [idx for _, idx in ranked[:n]]


def brute_force_sql_ranking(distances, n, excluded_indices=()):
    """Independent ranking over precomputed (pool_index, distance)."""
    ranked = [
        (distance, idx) for idx, distance in distances if idx not in excluded_indices
    ]
    ranked.sort()
    return [idx for _, idx in ranked[:n]]


# ----------------------------------------------------------------------
# deterministic chat provider
# ----------------------------------------------------------------------


class FakeChatProvider:
    """Scripted provider keyed on the prompt's embedded question.

    ``generations`` maps a question to the SQL returned for it; a list
    value is consumed round by round. ``skeletons`` and ``linkings``
    answer the masking and linking prompts; ``rewrites`` the
    augmentation prompt.
    """

    name = "fake"

    def __init__(self, generations=None, skeletons=None, linkings=None, rewrites=None):
        self.generations = dict(generations or {})
        self.skeletons = dict(skeletons or {})
        self.linkings = dict(linkings or {})
        self.rewrites = dict(rewrites or {})
        self.calls: list[str] = []
        self.prompts: list[str] = []
        self._generation_round: dict[str, int] = {}

    def __call__(self, request: ChatRequest) -> str:
        prompt = request.messages[-1][1]
        self.prompts.append(prompt)
        question = self._question_of(prompt)
        if "Rewrite the question below twice" in prompt:
            self.calls.append("rewrite")
            first, second = self.rewrites.get(
                question, (f"{question} (restructured)", f"{question} (synonyms)")
            )
            return f"1. {first}\n2. {second}"
        if "replacing every domain-specific term" in prompt:
            self.calls.append("skeleton")
            return self.skeletons.get(question, "_")
        if "list the tables and columns" in prompt:
            self.calls.append("linking")
            return self.linkings.get(question, "tables:  | columns: ")
        self.calls.append("generate")
        answer = self.generations.get(question)
        if answer is None:
            return "SELECT 1"
        if isinstance(answer, str):
            return answer
        turn = self._generation_round.get(question, 0)
        self._generation_round[question] = turn + 1
        return answer[min(turn, len(answer) - 1)]

    @staticmethod
    def _question_of(prompt: str) -> str:
        matches = re.findall(r"^Question: (.*)$", prompt, flags=re.MULTILINE)
        return matches[-1] if matches else ""
