"""Ground-truth schema subset extraction from parsed SQL.

Walks a statement and collects every base table plus every
table-qualified column it touches (SELECT, WHERE, JOIN ON, GROUP BY,
HAVING, ORDER BY), resolving aliases per (sub)query scope against the
database schema. ``SELECT *`` and bare ``COUNT(*)`` contribute the
``<table>.*`` pseudo-column of each table in scope instead of expanding
to all columns.
"""

from __future__ import annotations

from ..errors import ResolutionError
from ..schema import DatabaseSchema, SchemaSubset
from .nodes import (
    COLUMN_ALIAS,
    COLUMN_REF,
    JOIN,
    KEYWORD,
    LITERAL,
    OPERATOR,
    STAR,
    TABLE_ALIAS,
    TABLE_REF,
    Node,
    is_query_like,
    normalize_identifier,
    split_qualified,
)


def extract_schema_refs(ast: Node, schema: DatabaseSchema) -> SchemaSubset:
    """Extract the referenced tables and columns of a statement.

    Raises:
        ResolutionError: when an identifier matches no schema element and
            is not an alias in any enclosing scope.
    """
    extractor = _RefExtractor(schema)
    extractor.visit_query(ast, None)
    return SchemaSubset.build(extractor.tables, extractor.columns)


class _DerivedTable:
    """Column exports of a derived table (FROM-clause subquery)."""

    def __init__(self) -> None:
        self.exports: dict[str, set[str]] = {}
        self.inner_tables: list[str] = []

    def lookup(self, name: str) -> set[str] | None:
        if name in self.exports:
            return self.exports[name]
        return None

    def all_contributions(self) -> set[str]:
        out: set[str] = set()
        for refs in self.exports.values():
            out |= refs
        for table in self.inner_tables:
            out.add(f"{table}.*")
        return out


class _Scope:
    def __init__(self, parent: "_Scope | None") -> None:
        self.parent = parent
        self.tables: list[str] = []
        self.aliases: dict[str, str] = {}
        self.derived: dict[str, _DerivedTable] = {}
        self.select_aliases: dict[str, Node] = {}


class _RefExtractor:
    def __init__(self, schema: DatabaseSchema) -> None:
        self.schema = schema
        self.tables: set[str] = set()
        self.columns: set[str] = set()

    # ------------------------------------------------------------------

    def visit_query(self, node: Node, parent: _Scope | None) -> _Scope:
        if node.kind == OPERATOR:  # set operation
            first = self.visit_query(node.children[0], parent)
            self.visit_query(node.children[1], parent)
            return first
        scope = self.build_scope(node, parent)
        for clause in node.children:
            if clause.text == "select":
                for item in clause.children:
                    if item.kind != KEYWORD:
                        self.visit_expr(item, scope)
            elif clause.text == "from":
                for child in clause.children:
                    if child.kind == JOIN and len(child.children) == 2:
                        self.visit_expr(child.children[1], scope)
            elif clause.text in ("where", "having", "group_by", "order_by"):
                for child in clause.children:
                    self.visit_expr(child, scope)
        return scope

    def build_scope(self, node: Node, parent: _Scope | None) -> _Scope:
        scope = _Scope(parent)
        select = node.clause("select")
        if select is not None:
            for item in select.children:
                if item.kind == COLUMN_ALIAS:
                    scope.select_aliases[normalize_identifier(item.text)] = item.children[0]
        from_clause = node.clause("from")
        if from_clause is None:
            return scope
        for child in from_clause.children:
            source = child.children[0] if child.kind == JOIN else child
            self.register_source(source, scope)
        return scope

    def register_source(self, source: Node, scope: _Scope) -> None:
        alias: str | None = None
        if source.kind == TABLE_ALIAS:
            alias = normalize_identifier(source.text)
            source = source.children[0]
        if source.kind == TABLE_REF:
            name = normalize_identifier(source.text)
            if not self.schema.has_table(name):
                raise ResolutionError(f"unknown table {source.text!r} in FROM")
            self.tables.add(name)
            scope.tables.append(name)
            scope.aliases.setdefault(name, name)
            if alias:
                scope.aliases[alias] = name
            return
        if is_query_like(source):
            inner_scope = self.visit_query(source, scope.parent)
            if alias:
                scope.derived[alias] = self.derive_exports(source, inner_scope)
            return
        raise ResolutionError(f"unsupported FROM source {source.kind!r}")

    def derive_exports(self, query: Node, inner_scope: _Scope) -> _DerivedTable:
        while query.kind == OPERATOR:  # exports come from the first operand
            query = query.children[0]
        derived = _DerivedTable()
        derived.inner_tables = list(inner_scope.tables)
        select = query.clause("select")
        if select is None:
            return derived
        for item in select.children:
            if item.kind == KEYWORD:
                continue
            if item.kind == COLUMN_ALIAS:
                name = normalize_identifier(item.text)
                derived.exports[name] = self.collect_columns(item.children[0], inner_scope)
            elif item.kind == COLUMN_REF:
                _, column = split_qualified(item.text)
                name = normalize_identifier(column)
                derived.exports[name] = self.collect_columns(item, inner_scope)
            elif item.kind == STAR:
                for table in inner_scope.tables:
                    table_def = self.schema.table(table)
                    if table_def is None:
                        continue
                    for col in table_def.column_names():
                        derived.exports.setdefault(col.lower(), set()).add(
                            f"{table}.{col.lower()}"
                        )
        return derived

    # ------------------------------------------------------------------

    def visit_expr(self, node: Node, scope: _Scope) -> None:
        for ref in self.collect_columns(node, scope):
            self.columns.add(ref)

    def collect_columns(self, node: Node, scope: _Scope) -> set[str]:
        """Resolve every column contribution inside an expression."""
        out: set[str] = set()
        self._collect(node, scope, out)
        return out

    def _collect(self, node: Node, scope: _Scope, out: set[str]) -> None:
        kind = node.kind
        if kind == COLUMN_REF:
            out |= self.resolve_column(node.text, scope)
            return
        if kind == STAR:
            for table in scope.tables:
                out.add(f"{table}.*")
            for derived in scope.derived.values():
                out |= derived.all_contributions()
            return
        if kind == LITERAL or kind == KEYWORD or kind == TABLE_REF:
            return
        if is_query_like(node):
            self.visit_query(node, scope)
            return
        for child in node.children:
            self._collect(child, scope, out)

    def resolve_column(self, raw: str, scope: _Scope) -> set[str]:
        qualifier, column = split_qualified(raw)
        name = normalize_identifier(column)
        if qualifier is not None:
            return self.resolve_qualified(normalize_identifier(qualifier), name, raw, scope)
        return self.resolve_bare(name, raw, scope)

    def resolve_qualified(self, qualifier: str, name: str, raw: str, scope: _Scope) -> set[str]:
        current: _Scope | None = scope
        while current is not None:
            if qualifier in current.aliases:
                table = current.aliases[qualifier]
                if name == "*":
                    return {f"{table}.*"}
                if not self.schema.has_column(f"{table}.{name}"):
                    raise ResolutionError(f"column {raw!r} not in table {table!r}")
                return {f"{table}.{name}"}
            if qualifier in current.derived:
                derived = current.derived[qualifier]
                if name == "*":
                    return derived.all_contributions()
                refs = derived.lookup(name)
                if refs is None:
                    raise ResolutionError(f"column {raw!r} not exported by derived table")
                return refs
            current = current.parent
        raise ResolutionError(f"unknown qualifier in column {raw!r}")

    def resolve_bare(self, name: str, raw: str, scope: _Scope) -> set[str]:
        current: _Scope | None = scope
        while current is not None:
            for table in current.tables:
                if self.schema.has_column(f"{table}.{name}"):
                    return {f"{table}.{name}"}
            for derived in current.derived.values():
                refs = derived.lookup(name)
                if refs is not None:
                    return refs
            if name in current.select_aliases:
                return self.collect_columns(current.select_aliases[name], current)
            current = current.parent
        raise ResolutionError(f"unknown column {raw!r}")
