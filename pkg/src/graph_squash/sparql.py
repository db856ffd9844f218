"""A small SPARQL SELECT subset: BGPs composed with UNION and OPTIONAL.

Parsing produces an immutable algebra tree (``BGP``, ``Join``, ``UnionPattern``,
``OptionalPattern``) wrapped in a ``Query``. Evaluation works on interned ids
of a frozen :class:`~graph_squash.rdf.Graph` and returns solutions sorted by
their projected terms.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Union

from .rdf import IRI, RDF_TYPE, Graph, Kind, Literal, Term, XSD_STRING

XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"
XSD_DECIMAL = "http://www.w3.org/2001/XMLSchema#decimal"


class QueryError(Exception):
    pass


class QuerySyntaxError(QueryError):
    def __init__(self, position: int, message: str):
        super().__init__(f"at offset {position}: {message}")
        self.position = position
        self.message = message


class UnsupportedFeature(QueryError):
    def __init__(self, feature: str):
        super().__init__(f"unsupported SPARQL feature: {feature}")
        self.feature = feature


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __str__(self):
        return "?" + self.name


Node = Union[Term, Variable]


@dataclass(frozen=True)
class TriplePattern:
    subject: Node
    predicate: Node
    object: Node

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> list[Variable]:
        return [n for n in self if isinstance(n, Variable)]


@dataclass(frozen=True)
class BGP:
    patterns: tuple


@dataclass(frozen=True)
class Join:
    left: object
    right: object


@dataclass(frozen=True)
class UnionPattern:
    left: object
    right: object


@dataclass(frozen=True)
class OptionalPattern:
    """Left outer join of ``required`` with ``optional``."""
    required: object
    optional: object


Pattern = Union[BGP, Join, UnionPattern, OptionalPattern]


@dataclass(frozen=True)
class Query:
    projection: Optional[tuple]   # None means SELECT *
    distinct: bool
    body: Pattern
    prefixes: tuple = ()          # ((prefix, namespace), ...)

    @property
    def variables(self) -> tuple:
        if self.projection is not None:
            return self.projection
        return tuple(body_variables(self.body))


Solution = dict  # variable name -> Term


def iter_patterns(node) -> Iterable[TriplePattern]:
    if isinstance(node, BGP):
        yield from node.patterns
    elif isinstance(node, (Join, UnionPattern)):
        yield from iter_patterns(node.left)
        yield from iter_patterns(node.right)
    elif isinstance(node, OptionalPattern):
        yield from iter_patterns(node.required)
        yield from iter_patterns(node.optional)
    else:
        raise TypeError(f"not an algebra node: {node!r}")


def body_variables(node) -> list[Variable]:
    seen = {}
    for tp in iter_patterns(node):
        for v in tp.variables():
            seen.setdefault(v, None)
    return list(seen)


# --- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<var>[?$][A-Za-z0-9_]+)
  | (?P<string>"(?:[^"\\\n\r]|\\.)*")
  | (?P<langtag>@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z][\w\-.]*)?:(?:[\w\-]+(?:[\w\-.]*[\w\-])?)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}.;,*()])
  | (?P<path>[/|^+!])
""", re.VERBOSE)

_UNSUPPORTED = {
    "FILTER", "LIMIT", "OFFSET", "ORDER", "GROUP", "HAVING", "BIND", "VALUES",
    "MINUS", "SERVICE", "GRAPH", "FROM", "ASK", "CONSTRUCT", "DESCRIBE", "BASE",
    "REDUCED", "EXISTS", "NOT", "AS", "INSERT", "DELETE", "LOAD", "CLEAR",
}
_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
                   '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QuerySyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "path":
            raise UnsupportedFeature("property path")
        if kind != "ws":
            toks.append(_Tok(kind, m.group(0), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            e = body[i + 1]
            if e in ("u", "U"):
                width = 4 if e == "u" else 8
                out.append(chr(int(body[i + 2:i + 2 + width], 16)))
                i += 2 + width
                continue
            out.append(_STRING_ESCAPES.get(e, e))
            i += 2
            continue
        out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str) -> QuerySyntaxError:
        return QuerySyntaxError(self.tok.pos, message)

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def keyword(self) -> Optional[str]:
        if self.tok.kind == "word":
            return self.tok.text.upper()
        return None

    def expect_punct(self, ch: str):
        if self.tok.kind != "punct" or self.tok.text != ch:
            raise self.error(f"expected {ch!r}, found {self.tok.text or 'end of query'!r}")
        self.advance()

    def at_punct(self, ch: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == ch

    def check_unsupported(self):
        kw = self.keyword()
        if kw in _UNSUPPORTED:
            raise UnsupportedFeature(kw)

    # query := prologue SELECT DISTINCT? (vars | *) WHERE? group
    def query(self) -> Query:
        while self.keyword() == "PREFIX":
            self.advance()
            tok = self.advance()
            if tok.kind != "pname" or not tok.text.endswith(":"):
                raise QuerySyntaxError(tok.pos, "expected prefix name ending in ':'")
            iri = self.advance()
            if iri.kind != "iri":
                raise QuerySyntaxError(iri.pos, "expected namespace IRI")
            self.prefixes[tok.text[:-1]] = iri.text[1:-1]
        self.check_unsupported()
        if self.keyword() != "SELECT":
            raise self.error("expected SELECT")
        self.advance()
        distinct = False
        if self.keyword() == "DISTINCT":
            distinct = True
            self.advance()
        self.check_unsupported()
        projection: Optional[list] = []
        if self.at_punct("*"):
            self.advance()
            projection = None
        else:
            while self.tok.kind == "var":
                projection.append(Variable(self.advance().text[1:]))
            if self.at_punct("("):
                raise UnsupportedFeature("projection expression")
            if not projection:
                raise self.error("expected projection variables or '*'")
        self.check_unsupported()
        if self.keyword() == "WHERE":
            self.advance()
        body = self.group()
        self.check_unsupported()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after query body")

        present = set(body_variables(body))
        if projection is not None:
            for v in projection:
                if v not in present:
                    raise QuerySyntaxError(0, f"projected variable ?{v.name} not in query body")
            projection = tuple(dict.fromkeys(projection))
        return Query(projection, distinct, body, tuple(sorted(self.prefixes.items())))

    # group := '{' element* '}' where element := triples | group (UNION group)* | OPTIONAL group
    def group(self):
        start = self.tok.pos
        self.expect_punct("{")
        acc = None
        while not self.at_punct("}"):
            self.check_unsupported()
            kw = self.keyword()
            if self.tok.kind == "eof":
                raise self.error("unterminated group")
            if kw == "OPTIONAL":
                self.advance()
                opt = self.group()
                if acc is None:
                    raise self.error("OPTIONAL needs a preceding pattern")
                acc = OptionalPattern(acc, opt)
            elif self.at_punct("{"):
                elem = self.group()
                while self.keyword() == "UNION":
                    self.advance()
                    elem = UnionPattern(elem, self.group())
                acc = elem if acc is None else Join(acc, elem)
            elif kw == "UNION":
                raise self.error("UNION must follow a group")
            else:
                block = BGP(tuple(self.triples_block()))
                acc = block if acc is None else Join(acc, block)
                continue
            if self.at_punct("."):
                self.advance()
        self.advance()
        if acc is None:
            raise QuerySyntaxError(start, "empty group pattern")
        return acc

    def triples_block(self) -> list[TriplePattern]:
        out = []
        while True:
            subj = self.node("subject")
            self.property_list(subj, out)
            if not self.at_punct("."):
                break
            self.advance()
            if not self._starts_term():
                break
        return out

    def _starts_term(self) -> bool:
        t = self.tok
        if t.kind in ("iri", "var", "pname", "string", "number"):
            return True
        return False

    def property_list(self, subj, out):
        while True:
            pred = self.node("predicate")
            while True:
                obj = self.node("object")
                out.append(TriplePattern(subj, pred, obj))
                if not self.at_punct(","):
                    break
                self.advance()
            if not self.at_punct(";"):
                return
            while self.at_punct(";"):
                self.advance()
            if not (self._starts_term() or self.tok.text == "a"):
                return

    def node(self, position: str) -> Node:
        tok = self.tok
        if tok.kind == "var":
            self.advance()
            return Variable(tok.text[1:])
        if tok.kind == "iri":
            self.advance()
            value = tok.text[1:-1]
            if not value:
                raise QuerySyntaxError(tok.pos, "empty IRI")
            return IRI(value)
        if tok.kind == "pname":
            self.advance()
            prefix, _, local = tok.text.partition(":")
            if prefix not in self.prefixes:
                raise QuerySyntaxError(tok.pos, f"undeclared prefix {prefix!r}")
            return IRI(self.prefixes[prefix] + local)
        if tok.kind == "word" and tok.text == "a" and position == "predicate":
            self.advance()
            return IRI(RDF_TYPE)
        if tok.kind in ("string", "number"):
            if position != "object":
                raise QuerySyntaxError(tok.pos, f"literal in {position} position")
            self.advance()
            if tok.kind == "number":
                dt = XSD_DECIMAL if "." in tok.text else XSD_INTEGER
                return Literal(tok.text, datatype=dt)
            value = _unescape(tok.text[1:-1])
            if self.tok.kind == "langtag":
                return Literal(value, lang=self.advance().text[1:])
            if self.tok.kind == "dtype":
                self.advance()
                dt = self.node("object")
                if not isinstance(dt, Term) or not dt.is_iri:
                    raise self.error("datatype must be an IRI")
                return Literal(value, datatype=dt.value)
            return Literal(value)
        if tok.kind == "punct" and tok.text == "(":
            raise UnsupportedFeature("collection")
        if tok.kind == "word" and tok.text.upper() in _UNSUPPORTED:
            raise UnsupportedFeature(tok.text.upper())
        if tok.kind == "word" and tok.text.startswith("_"):
            raise UnsupportedFeature("blank node in query")
        raise self.error(f"expected {position}, found {tok.text or 'end of query'!r}")


def parse_query(text: str) -> Query:
    return _Parser(text).query()


def read_query(path) -> Query:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh.read())


# --- serialization -------------------------------------------------------------

def _node_text(node: Node) -> str:
    return str(node) if isinstance(node, Variable) else node.n3()


def _group_text(node, indent: str) -> str:
    inner = indent + "  "
    if isinstance(node, BGP):
        lines = [f"{inner}{_node_text(tp.subject)} {_node_text(tp.predicate)} "
                 f"{_node_text(tp.object)} ." for tp in node.patterns]
        return "{\n" + "\n".join(lines) + "\n" + indent + "}"
    if isinstance(node, Join):
        return ("{\n" + inner + _group_text(node.left, inner) + "\n"
                + inner + _group_text(node.right, inner) + "\n" + indent + "}")
    if isinstance(node, UnionPattern):
        return ("{\n" + inner + _group_text(node.left, inner) + "\n" + inner + "UNION "
                + _group_text(node.right, inner) + "\n" + indent + "}")
    if isinstance(node, OptionalPattern):
        return ("{\n" + inner + _group_text(node.required, inner) + "\n" + inner + "OPTIONAL "
                + _group_text(node.optional, inner) + "\n" + indent + "}")
    raise TypeError(node)


def serialize_query(q: Query) -> str:
    head = "".join(f"PREFIX {p}: <{ns}>\n" for p, ns in q.prefixes)
    proj = "*" if q.projection is None else " ".join(str(v) for v in q.projection)
    distinct = "DISTINCT " if q.distinct else ""
    return f"{head}SELECT {distinct}{proj} WHERE {_group_text(q.body, '')}\n"


# --- extraction and rewriting ------------------------------------------------

def extract_predicates(q: Union[Query, Pattern]) -> set:
    body = q.body if isinstance(q, Query) else q
    return {tp.predicate for tp in iter_patterns(body) if isinstance(tp.predicate, Term)}


def extract_objects(q: Union[Query, Pattern]) -> set:
    body = q.body if isinstance(q, Query) else q
    return {tp.object for tp in iter_patterns(body) if isinstance(tp.object, Term)}


def _key(iri) -> str:
    return iri.value if isinstance(iri, Term) else iri


def _substitute(node, mapping: Mapping[str, str]):
    if isinstance(node, BGP):
        pats = []
        for tp in node.patterns:
            p = tp.predicate
            if isinstance(p, Term) and p.value in mapping:
                tp = replace(tp, predicate=IRI(mapping[p.value]))
            pats.append(tp)
        return BGP(tuple(pats))
    if isinstance(node, OptionalPattern):
        return OptionalPattern(_substitute(node.required, mapping),
                               _substitute(node.optional, mapping))
    return type(node)(_substitute(node.left, mapping), _substitute(node.right, mapping))


def _union_branches(node) -> list:
    if isinstance(node, UnionPattern):
        return _union_branches(node.left) + _union_branches(node.right)
    return [node]


def simplify(node):
    """Drop duplicate patterns inside BGPs and duplicate branches of UNION chains."""
    if isinstance(node, BGP):
        return BGP(tuple(dict.fromkeys(node.patterns)))
    if isinstance(node, Join):
        return Join(simplify(node.left), simplify(node.right))
    if isinstance(node, OptionalPattern):
        return OptionalPattern(simplify(node.required), simplify(node.optional))
    if isinstance(node, UnionPattern):
        left, right = simplify(node.left), simplify(node.right)
        branches = _union_branches(left) + _union_branches(right)
        unique = list(dict.fromkeys(branches))
        if len(unique) == len(branches):
            return UnionPattern(left, right)
        acc = unique[0]
        for b in unique[1:]:
            acc = UnionPattern(acc, b)
        return acc
    raise TypeError(node)


def rewrite(q: Query, substitution: Mapping) -> Query:
    """Replace constant predicates by their images, then simplify to a fixpoint."""
    mapping = {_key(k): _key(v) for k, v in substitution.items()}
    body = _substitute(q.body, mapping) if mapping else q.body
    while True:
        nxt = simplify(body)
        if nxt == body:
            break
        body = nxt
    return replace(q, body=body)


# --- evaluation ------------------------------------------------------------------

def _compatible(a: dict, b: dict) -> bool:
    if len(a) > len(b):
        a, b = b, a
    for k, v in a.items():
        w = b.get(k)
        if w is not None and w != v:
            return False
    return True


def _join(left: list, right: list) -> list:
    if not left or not right:
        return []
    lcertain = set.intersection(*(set(m) for m in left))
    rcertain = set.intersection(*(set(m) for m in right))
    keys = sorted(lcertain & rcertain)
    buckets = defaultdict(list)
    for r in right:
        buckets[tuple(r[k] for k in keys)].append(r)
    out = []
    for l in left:
        for r in buckets.get(tuple(l[k] for k in keys), ()):
            if _compatible(l, r):
                merged = dict(l)
                merged.update(r)
                out.append(merged)
    return out


def _left_join(left: list, right: list) -> list:
    if not right:
        return [dict(m) for m in left]
    out = []
    for l in left:
        matched = False
        for r in right:
            if _compatible(l, r):
                merged = dict(l)
                merged.update(r)
                out.append(merged)
                matched = True
        if not matched:
            out.append(dict(l))
    return out


class _Evaluator:
    def __init__(self, graph: Graph):
        self.graph = graph

    def resolve(self, node) -> Union[int, str, None]:
        """Variable name, term id, or None for a constant absent from the graph."""
        if isinstance(node, Variable):
            return node.name
        return self.graph.id_of(node)

    def bgp(self, node: BGP) -> list:
        patterns = []
        for tp in node.patterns:
            resolved = [self.resolve(n) for n in tp]
            if any(r is None for r in resolved):
                return []
            patterns.append(resolved)
        results = [{}]
        bound: set = set()
        remaining = list(patterns)
        while remaining and results:
            remaining.sort(key=lambda pat: self._cost(pat, bound))
            pat = remaining.pop(0)
            results = self._extend(results, pat)
            bound.update(x for x in pat if isinstance(x, str))
        return results

    def _cost(self, pat, bound) -> tuple:
        free = sum(1 for x in pat if isinstance(x, str) and x not in bound)
        consts = [None if isinstance(x, str) else x for x in pat]
        return (free, self.graph.count_ids(*consts))

    def _extend(self, results: list, pat) -> list:
        out = []
        match = self.graph.match_ids
        for mu in results:
            ids = []
            for x in pat:
                if isinstance(x, str):
                    ids.append(mu.get(x))
                else:
                    ids.append(x)
            for row in match(*ids):
                new = mu
                ok = True
                for x, val in zip(pat, row):
                    if isinstance(x, str):
                        cur = new.get(x)
                        if cur is None:
                            if new is mu:
                                new = dict(mu)
                            new[x] = val
                        elif cur != val:
                            ok = False
                            break
                if ok:
                    out.append(new if new is not mu else dict(mu))
        return out

    def eval(self, node) -> list:
        if isinstance(node, BGP):
            return self.bgp(node)
        if isinstance(node, UnionPattern):
            return self.eval(node.left) + self.eval(node.right)
        if isinstance(node, Join):
            return _join(self.eval(node.left), self.eval(node.right))
        if isinstance(node, OptionalPattern):
            return _left_join(self.eval(node.required), self.eval(node.optional))
        raise TypeError(node)


def solution_key(sol: Mapping, variables: Iterable) -> tuple:
    """Sort key placing unbound before bound, bound values in term order."""
    key = []
    for v in variables:
        name = v.name if isinstance(v, Variable) else v
        t = sol.get(name)
        key.append((0,) if t is None else (1, t))
    return tuple(key)


def evaluate(graph: Graph, q: Query) -> list:
    """Evaluate ``q`` over ``graph``: bag semantics unless ``q.distinct``."""
    mappings = _Evaluator(graph).eval(q.body)
    names = [v.name for v in q.variables]
    terms = graph.terms
    out = []
    for mu in mappings:
        out.append({n: terms[mu[n]] for n in names if n in mu})
    if q.distinct:
        out = distinct(out)
    out.sort(key=lambda s: solution_key(s, names))
    return out


def freeze_solution(sol: Mapping) -> frozenset:
    return frozenset(sol.items())


def distinct(solutions: Iterable[Mapping]) -> list:
    seen = set()
    out = []
    for s in solutions:
        k = freeze_solution(s)
        if k not in seen:
            seen.add(k)
            out.append(dict(s))
    return out


def answer_set(solutions: Iterable[Mapping]) -> frozenset:
    return frozenset(freeze_solution(s) for s in solutions)


# --- result formats ----------------------------------------------------------

def solutions_to_tsv(solutions: list, variables) -> str:
    names = [v.name if isinstance(v, Variable) else v for v in variables]
    lines = ["\t".join("?" + n for n in names)]
    for s in solutions:
        lines.append("\t".join(s[n].n3() if n in s else "" for n in names))
    return "\n".join(lines) + "\n"


def _term_json(t: Term) -> dict:
    if t.kind == Kind.IRI:
        return {"type": "uri", "value": t.value}
    if t.kind == Kind.BLANK:
        return {"type": "bnode", "value": t.value}
    d = {"type": "literal", "value": t.value}
    if t.lang:
        d["xml:lang"] = t.lang
    elif t.datatype and t.datatype != XSD_STRING:
        d["datatype"] = t.datatype
    return d


def solutions_to_json(solutions: list, variables) -> str:
    """SPARQL 1.1 query results JSON."""
    names = [v.name if isinstance(v, Variable) else v for v in variables]
    doc = {
        "head": {"vars": names},
        "results": {"bindings": [{n: _term_json(s[n]) for n in names if n in s}
                                 for s in solutions]},
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
