"""Pattern-based natural-language-to-query interpretation.

The pipeline is deliberately shallow and fully deterministic:

1. normalize: tokenize, lowercase, suffix-strip stem, flag stopwords.
2. match_terms: bind each content token to schema nodes by exact stem
   equality, and to categorical cell values through the value
   dictionary. A token hitting several nodes produces several candidate
   bindings — that ambiguity is exactly what yields multiple ranked
   interpretations for the user to disambiguate.
3. interpret: for every consistent combination of bindings, connect the
   involved tables with a minimal join tree, assemble a query tree
   (value bindings become equality filters, an attribute after a
   grouping marker becomes the group key, aggregate keywords pick the
   aggregate function), then score and rank.

The score blends coverage and join cost:

    score = match_weight * (bound content tokens / content tokens)
          + join_weight * 1 / (1 + join edges)

with weights from the NL config (0.7 / 0.3 by default). Ties break on
the canonical query serialization, so identical inputs always produce
the identical ranked list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from dataplore.catalog import Catalog
from dataplore.errors import InvalidAst, NoInterpretation, NoPathBetweenTables
from dataplore.nl_text import NlConfig, Token, TokenStream, default_config, normalize
from dataplore.query import Aggregate, AttrRef, Comparison, QueryAst, validate_ast
from dataplore.schema import AttributeNode, SchemaGraph, TableNode

__all__ = ["normalize", "match_terms", "interpret", "Binding", "Interpretation"]


@dataclass(frozen=True)
class Binding:
    """One token resolved against the schema graph."""

    token_index: int
    token: Token
    kind: str  # "table" | "attribute" | "value"
    table: str
    column: Optional[str] = None
    value: Optional[str] = None

    @property
    def node_key(self) -> str:
        if self.kind == "table":
            return self.table
        if self.kind == "attribute":
            return f"{self.table}.{self.column}"
        return f"{self.table}.{self.column}={self.value}"


@dataclass(frozen=True)
class Interpretation:
    ast: QueryAst
    score: float
    bindings: tuple[Binding, ...]
    unmatched: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "ast": self.ast.to_json(),
            "score": self.score,
            "bindings": [
                {"token": b.token.surface, "node": b.node_key, "kind": b.kind}
                for b in self.bindings
            ],
            "unmatched": list(self.unmatched),
        }


def match_terms(stream: TokenStream, graph: SchemaGraph) -> list[tuple[int, Token, list[Binding]]]:
    """Candidate bindings per content token, in token order.

    Tokens without any hit are simply absent from the result; fully
    unmatched questions therefore yield an empty list, never an error.
    """
    matched = []
    for index, token in enumerate(stream.tokens):
        if token.is_stopword:
            continue
        candidates: list[Binding] = []
        for node in graph.lookup_stem(token.stem):
            if isinstance(node, TableNode):
                candidates.append(Binding(index, token, "table", node.table))
            elif isinstance(node, AttributeNode):
                candidates.append(Binding(index, token, "attribute", node.table, node.column))
        for target in graph.lookup_value_stem(token.stem):
            candidates.append(
                Binding(index, token, "value", target.table, target.column, target.value)
            )
        if candidates:
            matched.append((index, token, candidates))
    return matched


def _assemble(
    combo: tuple[Binding, ...],
    stream: TokenStream,
    graph: SchemaGraph,
    catalog: Catalog,
    config: NlConfig,
) -> Optional[QueryAst]:
    """Build a query tree from one binding combination; None when inconsistent."""
    table_bindings = [b for b in combo if b.kind == "table"]
    source = table_bindings[0].table if table_bindings else combo[0].table

    involved = [source]
    for binding in combo:
        if binding.table not in involved:
            involved.append(binding.table)
    try:
        joins = tuple(graph.connect_tables(involved))
    except NoPathBetweenTables:
        return None

    filters = tuple(
        Comparison(AttrRef(b.table, b.column), "=", b.value)
        for b in combo
        if b.kind == "value"
    )

    attr_bindings = [b for b in combo if b.kind == "attribute"]
    group_markers = [
        i
        for i, token in enumerate(stream.tokens)
        if token.normalized in config.group_markers or token.stem in config.group_markers
    ]
    group_attr: Optional[Binding] = None
    if group_markers:
        last_marker = group_markers[-1]
        after = [b for b in attr_bindings if b.token_index > last_marker]
        if after:
            group_attr = after[0]

    agg_tokens = [
        (i, config.aggregate_keywords[key])
        for i, token in enumerate(stream.tokens)
        for key in (token.normalized, token.stem)
        if key in config.aggregate_keywords
    ]
    # normalized and stem can both hit the keyword table; keep one per token
    seen_positions = set()
    aggregate_fns = []
    for position, fn in agg_tokens:
        if position not in seen_positions:
            seen_positions.add(position)
            aggregate_fns.append((position, fn))

    def numeric(binding: Binding) -> bool:
        return (
            binding.column is not None
            and catalog.table(binding.table).column(binding.column).kind == "numeric"
        )

    aggregates: list[Aggregate] = []
    agg_targets: set[int] = set()
    for position, fn in aggregate_fns:
        if fn == "count":
            aggregates.append(Aggregate("count"))
            continue
        following = [b for b in attr_bindings if b.token_index > position and numeric(b)
                     and b is not group_attr]
        anywhere = [b for b in attr_bindings if numeric(b) and b is not group_attr]
        target = following[0] if following else (anywhere[0] if anywhere else None)
        if target is None:
            return None  # sum/avg/min/max with nothing numeric to aggregate
        aggregates.append(Aggregate(fn, AttrRef(target.table, target.column)))
        agg_targets.add(target.token_index)

    if group_attr is not None and not aggregates:
        aggregates.append(Aggregate("count"))

    if group_attr is not None:
        attr = AttrRef(group_attr.table, group_attr.column)
        ast = QueryAst(
            source=source,
            joins=joins,
            filters=filters,
            group_by=attr,
            aggregates=tuple(aggregates),
            projection=(attr,),
            order_by=((attr, "asc"),),
        )
    else:
        bare = [
            b
            for b in attr_bindings
            if b.token_index not in agg_targets
        ]
        if aggregates:
            projection: object = ()
        elif bare:
            identifier = catalog.table(source).identifier
            attrs = [AttrRef(source, identifier)]
            for binding in bare:
                ref = AttrRef(binding.table, binding.column)
                if ref not in attrs:
                    attrs.append(ref)
            projection = tuple(attrs)
        else:
            projection = "*"
        ast = QueryAst(
            source=source,
            joins=joins,
            filters=filters,
            aggregates=tuple(aggregates),
            projection=projection,
        )

    try:
        validate_ast(ast, catalog)
    except InvalidAst:
        return None
    return ast


def interpret(
    question: str,
    graph: SchemaGraph,
    catalog: Catalog,
    n: int = 3,
    config: Optional[NlConfig] = None,
) -> list[Interpretation]:
    """Top-n distinct query interpretations of the question, best first."""
    if n < 1:
        raise ValueError("n must be >= 1")
    config = config or default_config()
    stream = normalize(question, config)
    matched = match_terms(stream, graph)
    if not matched:
        raise NoInterpretation(f"no token of {question!r} matches the schema vocabulary")

    content_total = len(stream.content_tokens())
    matched_indexes = {index for index, _, _ in matched}
    unmatched = tuple(
        token.surface
        for index, token in enumerate(stream.tokens)
        if not token.is_stopword and index not in matched_indexes
    )

    ranked: dict[str, Interpretation] = {}
    combos = itertools.islice(
        itertools.product(*[candidates for _, _, candidates in matched]),
        config.max_combinations,
    )
    for combo in combos:
        ast = _assemble(combo, stream, graph, catalog, config)
        if ast is None:
            continue
        coverage = len(combo) / content_total if content_total else 0.0
        score = config.match_weight * coverage + config.join_weight / (1 + len(ast.joins))
        key = ast.canonical()
        existing = ranked.get(key)
        if existing is None or score > existing.score:
            ranked[key] = Interpretation(
                ast=ast, score=score, bindings=combo, unmatched=unmatched
            )

    if not ranked:
        raise NoInterpretation(f"no consistent interpretation for {question!r}")
    ordered = sorted(ranked.items(), key=lambda item: (-item[1].score, item[0]))
    return [interpretation for _, interpretation in ordered[:n]]
