"""The three query grammars and plan compilation.

Grammar (EBNF):

    query    := or_expr
    or_expr  := and_expr {OR and_expr}
    and_expr := unary {AND unary}
    unary    := [NOT] atom
    atom     := '(' query ')' | '"' phrase '"' | 'cat:'CategoryId | token

Mode classification is a total function over strings, checked in this order:

- boolean: the string contains parentheses, double quotes, or a standalone
  case-sensitive AND/OR/NOT keyword (lowercase "and" stays natural language)
- category: a single `cat:`-prefixed id, or a single bare dotted id
- acronym: the whole string equals a known tool name after normalization
- natural: everything else

One query maps to exactly one mode. Multi-concept natural queries are
disjunctive: recognized concepts and residual words all widen the candidate
set, and ranking does the precision work.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ToolseekError
from .ranking import dedupe_terms
from .terminology import (ConceptMatch, TerminologyGraph, UnknownCategory,
                          descendants, resolve_spans_tokens)
from .textnorm import normalize_phrase, normalize_tokens

MAX_QUERY_LENGTH = 1024
MAX_DEPTH = 32

MODE_NATURAL = "natural"
MODE_BOOLEAN = "boolean"
MODE_CATEGORY = "category"
MODE_ACRONYM = "acronym"

_KEYWORDS = ("AND", "OR", "NOT")
_DOTTED_ID_RE = re.compile(r"^[A-Za-z][\w-]*(\.[A-Za-z0-9][\w-]*)+$")


class QuerySyntaxError(ToolseekError):
    code = "query_syntax"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class PureNegation(ToolseekError):
    code = "pure_negation"


class DepthExceeded(ToolseekError):
    code = "depth_exceeded"


class EmptyPlan(ToolseekError):
    code = "empty_plan"


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class TermNode:
    token: str


@dataclass(frozen=True)
class PhraseNode:
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class AndNode:
    children: tuple


@dataclass(frozen=True)
class OrNode:
    children: tuple


@dataclass(frozen=True)
class NotNode:
    child: object


@dataclass(frozen=True)
class CategoryNode:
    category_id: str


@dataclass(frozen=True)
class AcronymNode:
    text: str


QueryAst = object


def serialize_ast(node: QueryAst) -> str:
    """Render an AST back to query syntax; re-parsing yields an equal AST."""
    if isinstance(node, TermNode):
        return node.token
    if isinstance(node, PhraseNode):
        return '"' + " ".join(node.tokens) + '"'
    if isinstance(node, CategoryNode):
        return "cat:" + node.category_id
    if isinstance(node, AcronymNode):
        return node.text
    if isinstance(node, NotNode):
        return "NOT " + serialize_ast(node.child)
    if isinstance(node, AndNode):
        return "(" + " AND ".join(serialize_ast(c) for c in node.children) + ")"
    if isinstance(node, OrNode):
        return "(" + " OR ".join(serialize_ast(c) for c in node.children) + ")"
    raise TypeError(f"not an AST node: {node!r}")


def ast_depth(node: QueryAst) -> int:
    if isinstance(node, (AndNode, OrNode)):
        return 1 + max((ast_depth(c) for c in node.children), default=0)
    if isinstance(node, NotNode):
        return 1 + ast_depth(node.child)
    return 1


def has_positive_atom(node: QueryAst) -> bool:
    if isinstance(node, NotNode):
        return False
    if isinstance(node, (AndNode, OrNode)):
        return any(has_positive_atom(c) for c in node.children)
    return True


# -- lexer -------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # word | phrase | lparen | rparen | end
    value: str
    position: int


def _lex(query: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    length = len(query)
    while i < length:
        ch = query[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            tokens.append(_Token("lparen", "(", i))
            i += 1
            continue
        if ch == ")":
            tokens.append(_Token("rparen", ")", i))
            i += 1
            continue
        if ch == '"':
            end = query.find('"', i + 1)
            if end == -1:
                raise QuerySyntaxError("unterminated quote", i)
            tokens.append(_Token("phrase", query[i + 1:end], i))
            i = end + 1
            continue
        start = i
        while i < length and not query[i].isspace() and query[i] not in '()"':
            i += 1
        tokens.append(_Token("word", query[start:i], start))
    tokens.append(_Token("end", "", length))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0
        self._depth = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _advance(self) -> _Token:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def parse(self) -> QueryAst:
        node = self.parse_or()
        trailing = self._peek()
        if trailing.kind != "end":
            raise QuerySyntaxError(f"unexpected {trailing.value!r}", trailing.position)
        return node

    def parse_or(self) -> QueryAst:
        children = [self.parse_and()]
        while self._peek().kind == "word" and self._peek().value == "OR":
            self._advance()
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else OrNode(tuple(children))

    def parse_and(self) -> QueryAst:
        children = [self.parse_unary()]
        while self._peek().kind == "word" and self._peek().value == "AND":
            self._advance()
            children.append(self.parse_unary())
        return children[0] if len(children) == 1 else AndNode(tuple(children))

    def parse_unary(self) -> QueryAst:
        token = self._peek()
        if token.kind == "word" and token.value == "NOT":
            self._advance()
            return NotNode(self.parse_atom())
        return self.parse_atom()

    def parse_atom(self) -> QueryAst:
        token = self._advance()
        if token.kind == "lparen":
            # Guard while parsing: unbounded nesting would blow the Python
            # stack long before a post-parse depth check could run.
            self._depth += 1
            if self._depth > MAX_DEPTH:
                raise DepthExceeded(f"query nests deeper than {MAX_DEPTH}")
            node = self.parse_or()
            self._depth -= 1
            closing = self._advance()
            if closing.kind != "rparen":
                raise QuerySyntaxError("expected ')'", closing.position)
            return node
        if token.kind == "phrase":
            tokens = tuple(normalize_tokens(token.value))
            if not tokens:
                raise QuerySyntaxError("empty phrase", token.position)
            return PhraseNode(tokens)
        if token.kind == "word":
            if token.value in _KEYWORDS:
                raise QuerySyntaxError(f"dangling operator {token.value}",
                                       token.position)
            if token.value.startswith("cat:"):
                category_id = token.value[len("cat:"):]
                if not category_id:
                    raise QuerySyntaxError("empty category id", token.position)
                return CategoryNode(category_id)
            tokens = tuple(normalize_tokens(token.value))
            if not tokens:
                raise QuerySyntaxError(f"term {token.value!r} normalizes to nothing",
                                       token.position)
            if len(tokens) == 1:
                return TermNode(tokens[0])
            # A hyphenated/punctuated word is an adjacency requirement.
            return PhraseNode(tokens)
        if token.kind == "end":
            raise QuerySyntaxError("expected a term", token.position)
        raise QuerySyntaxError(f"unexpected {token.value!r}", token.position)


def classify_mode(query: str, tool_names: Optional[Iterable[str]] = None) -> str:
    """Total classifier; every string maps to exactly one mode."""
    stripped = query.strip()
    if any(ch in stripped for ch in '()"'):
        return MODE_BOOLEAN
    words = stripped.split()
    if any(word in _KEYWORDS for word in words):
        return MODE_BOOLEAN
    if len(words) == 1:
        word = words[0]
        if word.startswith("cat:") and len(word) > len("cat:"):
            return MODE_CATEGORY
        if _DOTTED_ID_RE.match(word):
            return MODE_CATEGORY
    if tool_names is not None and normalize_phrase(stripped) in set(tool_names):
        return MODE_ACRONYM
    return MODE_NATURAL


def parse_query(query: str,
                tool_names: Optional[Iterable[str]] = None) -> tuple[QueryAst, str]:
    """Parse a query string into (AST, mode).

    Documented error cases, all positioned at the character offset where the
    problem is detected (end-of-input errors point one past the last char):

    - dangling operator:  "alignment AND"  -> position 13
    - unbalanced parens:  "(sam OR bam"    -> position 11
    - unbalanced quote:   '"read qc'       -> position 0
    """
    if len(query) > MAX_QUERY_LENGTH:
        raise QuerySyntaxError(
            f"query longer than {MAX_QUERY_LENGTH} characters", MAX_QUERY_LENGTH)
    mode = classify_mode(query, tool_names)
    stripped = query.strip()

    if mode == MODE_CATEGORY:
        word = stripped
        if word.startswith("cat:"):
            word = word[len("cat:"):]
        return CategoryNode(word), mode

    if mode == MODE_ACRONYM:
        return AcronymNode(stripped), mode

    if mode == MODE_BOOLEAN:
        ast = _Parser(_lex(query)).parse()
        if ast_depth(ast) > MAX_DEPTH:
            raise DepthExceeded(f"query nests deeper than {MAX_DEPTH}")
        if not has_positive_atom(ast):
            raise PureNegation("a query cannot be purely negative")
        return ast, mode

    tokens = normalize_tokens(stripped)
    if len(tokens) == 1:
        return TermNode(tokens[0]), MODE_NATURAL
    return OrNode(tuple(TermNode(t) for t in tokens)), MODE_NATURAL


# -- plans ---------------------------------------------------------------------

@dataclass(frozen=True)
class FilterSet:
    category: Optional[str] = None
    operating_systems: frozenset[str] = frozenset()
    programming_languages: frozenset[str] = frozenset()
    interfaces: frozenset[str] = frozenset()
    technologies: frozenset[str] = frozenset()
    # category filter expanded through the subsumption hierarchy at compile time
    category_expansion: frozenset[str] = frozenset()

    def is_empty(self) -> bool:
        return not (self.category or self.operating_systems
                    or self.programming_languages or self.interfaces
                    or self.technologies)


@dataclass(frozen=True)
class QueryPlan:
    mode: str
    ast: QueryAst
    concept_matches: tuple[ConceptMatch, ...]
    expanded_categories: frozenset[str]
    residual_terms: tuple[str, ...]
    filters: FilterSet
    include_obsolete: bool = False
    # categories queried explicitly (category mode or cat: atoms), expanded
    explicit_expansion: frozenset[str] = frozenset()
    # per matched concept id: its linked categories, expanded
    concept_expansions: dict[str, frozenset[str]] = field(default_factory=dict)
    # per cat: atom: its expansion (used by boolean set algebra)
    category_expansions: dict[str, frozenset[str]] = field(default_factory=dict)
    # terms feeding BM25: residual terms then concept surface tokens
    scoring_terms: tuple[str, ...] = ()
    acronym_key: Optional[str] = None


def _walk_atoms(node: QueryAst):
    if isinstance(node, (TermNode, PhraseNode, CategoryNode, AcronymNode)):
        yield node
    elif isinstance(node, NotNode):
        yield from _walk_atoms(node.child)
    elif isinstance(node, (AndNode, OrNode)):
        for child in node.children:
            yield from _walk_atoms(child)


def _expand(category_id: str, graph: TerminologyGraph) -> frozenset[str]:
    return frozenset(descendants(category_id, graph))


def compile_plan(ast: QueryAst, mode: str, filters: Optional[FilterSet],
                 graph: TerminologyGraph, *,
                 include_obsolete: bool = False) -> QueryPlan:
    """Recognize concepts, expand categories through subsumption, split residuals."""
    filters = filters or FilterSet()
    if filters.category is not None:
        filters = FilterSet(
            category=filters.category,
            operating_systems=filters.operating_systems,
            programming_languages=filters.programming_languages,
            interfaces=filters.interfaces,
            technologies=filters.technologies,
            category_expansion=_expand(filters.category, graph),
        )

    concept_matches: list[ConceptMatch] = []
    residual_terms: list[str] = []
    explicit: set[str] = set()
    concept_expansions: dict[str, frozenset[str]] = {}
    category_expansions: dict[str, frozenset[str]] = {}
    acronym_key: Optional[str] = None

    def absorb_concepts(tokens: list[str]) -> None:
        matches = resolve_spans_tokens(tokens, graph)
        concept_matches.extend(matches)
        covered: set[int] = set()
        for match in matches:
            covered.update(range(*match.span))
            for concept_id in match.concept_ids:
                linked = graph.linked_categories(concept_id)
                expansion: set[str] = set()
                for category_id in linked:
                    expansion |= _expand(category_id, graph)
                concept_expansions[concept_id] = frozenset(expansion)
        residual_terms.extend(t for i, t in enumerate(tokens) if i not in covered)

    if mode == MODE_NATURAL:
        tokens = [n.token for n in _walk_atoms(ast) if isinstance(n, TermNode)]
        absorb_concepts(tokens)
    elif mode == MODE_CATEGORY:
        assert isinstance(ast, CategoryNode)
        explicit |= _expand(ast.category_id, graph)
        category_expansions[ast.category_id] = frozenset(explicit)
    elif mode == MODE_ACRONYM:
        assert isinstance(ast, AcronymNode)
        acronym_key = normalize_phrase(ast.text)
    elif mode == MODE_BOOLEAN:
        for atom in _walk_atoms(ast):
            if isinstance(atom, CategoryNode):
                expansion = _expand(atom.category_id, graph)
                category_expansions[atom.category_id] = expansion
                explicit |= expansion
            elif isinstance(atom, TermNode):
                absorb_concepts([atom.token])
            elif isinstance(atom, PhraseNode):
                absorb_concepts(list(atom.tokens))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    concept_categories: set[str] = set()
    for expansion in concept_expansions.values():
        concept_categories |= expansion
    expanded = frozenset(explicit | concept_categories)

    scoring_terms: list[str] = list(residual_terms)
    for match in concept_matches:
        scoring_terms.extend(match.matched_surface.split())

    plan = QueryPlan(
        mode=mode,
        ast=ast,
        concept_matches=tuple(concept_matches),
        expanded_categories=expanded,
        residual_terms=tuple(residual_terms),
        filters=filters,
        include_obsolete=include_obsolete,
        explicit_expansion=frozenset(explicit),
        concept_expansions=concept_expansions,
        category_expansions=category_expansions,
        scoring_terms=tuple(dedupe_terms(scoring_terms)),
        acronym_key=acronym_key,
    )

    if (not plan.scoring_terms and not plan.concept_matches
            and not plan.expanded_categories and plan.acronym_key is None
            and plan.filters.is_empty()):
        raise EmptyPlan("query has no terms, concepts, categories or filters")
    return plan
