"""RDF terms, triples, and a frozen, indexed in-memory triple store.

Terms are interned at freeze time in canonical sort order, so integer ids
compare the same way the terms themselves do. Everything that needs a
deterministic order (serialization, match results, query answers) sorts
by those ids.
"""

from __future__ import annotations

import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO, Iterable, Iterator, Optional, Union

XSD_STRING = "http://www.w3.org/2001/XMLSchema#string"
RDF_LANGSTRING = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_SUBCLASSOF = "http://www.w3.org/2000/01/rdf-schema#subClassOf"


class Kind(IntEnum):
    IRI = 0
    BLANK = 1
    LITERAL = 2


class RDFError(Exception):
    pass


class TermError(RDFError, ValueError):
    pass


class NTriplesSyntaxError(RDFError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class LiteralRejected(NTriplesSyntaxError):
    pass


class LiteralPresent(RDFError):
    """A summarization input contains literals and the keep-literals policy is off."""


_BAD_IRI_CHARS = re.compile(r'[\s<>"{}|^`\\]')


@dataclass(frozen=True, order=True)
class Term:
    kind: Kind
    value: str
    datatype: str = ""
    lang: str = ""

    def __post_init__(self):
        if self.kind == Kind.IRI:
            if not self.value or _BAD_IRI_CHARS.search(self.value):
                raise TermError(f"invalid IRI {self.value!r}")
        elif self.kind == Kind.BLANK:
            if not self.value:
                raise TermError("empty blank node label")

    @property
    def is_iri(self) -> bool:
        return self.kind == Kind.IRI

    @property
    def is_literal(self) -> bool:
        return self.kind == Kind.LITERAL

    def n3(self) -> str:
        if self.kind == Kind.IRI:
            return f"<{self.value}>"
        if self.kind == Kind.BLANK:
            return f"_:{self.value}"
        text = '"' + _escape_literal(self.value) + '"'
        if self.lang:
            return f"{text}@{self.lang}"
        if self.datatype and self.datatype != XSD_STRING:
            return f"{text}^^<{self.datatype}>"
        return text

    def __str__(self) -> str:
        return self.n3()

    def __repr__(self) -> str:
        return self.n3()


def IRI(value: str) -> Term:
    return Term(Kind.IRI, value)


def BNode(label: str) -> Term:
    return Term(Kind.BLANK, label)


def Literal(value: str, datatype: str = "", lang: str = "") -> Term:
    if lang:
        return Term(Kind.LITERAL, value, RDF_LANGSTRING, lang.lower())
    return Term(Kind.LITERAL, value, datatype or XSD_STRING)


@dataclass(frozen=True, order=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if self.subject.kind == Kind.LITERAL:
            raise TermError("literal in subject position")
        if self.predicate.kind != Kind.IRI:
            raise TermError("predicate must be an IRI")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


POSITIONS = ("subject", "predicate", "object")


class Graph:
    """Frozen set of triples with subject, predicate, (predicate, object) and object indexes."""

    def __init__(self, triples: Iterable[Triple] = ()):
        unique = set(triples)
        terms = set()
        for t in unique:
            terms.add(t.subject)
            terms.add(t.predicate)
            terms.add(t.object)
        self._terms: tuple[Term, ...] = tuple(sorted(terms))
        self._ids: dict[Term, int] = {t: i for i, t in enumerate(self._terms)}
        ids = self._ids
        self._spo = sorted((ids[t.subject], ids[t.predicate], ids[t.object]) for t in unique)
        self._set = frozenset(self._spo)

        by_s = defaultdict(list)
        by_p = defaultdict(list)
        by_po = defaultdict(list)
        by_o = defaultdict(list)
        for row in self._spo:
            s, p, o = row
            by_s[s].append(row)
            by_p[p].append(row)
            by_po[(p, o)].append(row)
            by_o[o].append(row)
        # rows were appended in spo order, so every bucket is already sorted
        self._by_s = dict(by_s)
        self._by_p = dict(by_p)
        self._by_po = dict(by_po)
        self._by_o = dict(by_o)
        self._has_literals = any(t.kind == Kind.LITERAL for t in self._terms)

    @classmethod
    def from_ids(cls, terms: tuple, rows: Iterable[tuple[int, int, int]]) -> "Graph":
        return cls(Triple(terms[s], terms[p], terms[o]) for s, p, o in rows)

    # --- term interning -------------------------------------------------

    @property
    def terms(self) -> tuple[Term, ...]:
        return self._terms

    def id_of(self, term: Term) -> Optional[int]:
        return self._ids.get(term)

    def term(self, term_id: int) -> Term:
        return self._terms[term_id]

    @property
    def has_literals(self) -> bool:
        return self._has_literals

    # --- set protocol ---------------------------------------------------

    def __len__(self) -> int:
        return len(self._spo)

    def __iter__(self) -> Iterator[Triple]:
        terms = self._terms
        for s, p, o in self._spo:
            yield Triple(terms[s], terms[p], terms[o])

    def __contains__(self, triple: Triple) -> bool:
        ids = self._ids
        try:
            key = (ids[triple.subject], ids[triple.predicate], ids[triple.object])
        except KeyError:
            return False
        return key in self._set

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._terms == other._terms and self._spo == other._spo

    def __hash__(self):
        return hash((self._terms, len(self._spo)))

    def __repr__(self) -> str:
        return f"<Graph {len(self)} triples, {len(self._terms)} terms>"

    def triple_set(self) -> frozenset[Triple]:
        return frozenset(self)

    def union(self, other: Iterable[Triple]) -> "Graph":
        return Graph(list(self) + list(other))

    # --- access paths ---------------------------------------------------

    def rows(self) -> list[tuple[int, int, int]]:
        return self._spo

    def match_ids(self, s: Optional[int] = None, p: Optional[int] = None,
                  o: Optional[int] = None) -> list[tuple[int, int, int]]:
        """Id-level pattern match; ``None`` is a wildcard."""
        if s is not None:
            rows = self._by_s.get(s, ())
            if p is None and o is None:
                return list(rows)
            return [r for r in rows if (p is None or r[1] == p) and (o is None or r[2] == o)]
        if p is not None:
            if o is not None:
                return list(self._by_po.get((p, o), ()))
            return list(self._by_p.get(p, ()))
        if o is not None:
            return list(self._by_o.get(o, ()))
        return list(self._spo)

    def count_ids(self, s: Optional[int] = None, p: Optional[int] = None,
                  o: Optional[int] = None) -> int:
        if s is not None:
            if p is None and o is None:
                return len(self._by_s.get(s, ()))
            return len(self.match_ids(s, p, o))
        if p is not None:
            if o is not None:
                return len(self._by_po.get((p, o), ()))
            return len(self._by_p.get(p, ()))
        if o is not None:
            return len(self._by_o.get(o, ()))
        return len(self._spo)

    def match(self, subject: Optional[Term] = None, predicate: Optional[Term] = None,
              obj: Optional[Term] = None) -> list[Triple]:
        ids = []
        for term in (subject, predicate, obj):
            if term is None:
                ids.append(None)
                continue
            tid = self._ids.get(term)
            if tid is None:
                return []
            ids.append(tid)
        terms = self._terms
        return [Triple(terms[s], terms[p], terms[o]) for s, p, o in self.match_ids(*ids)]

    def project(self, position: str) -> set[Term]:
        index = {"subject": self._by_s, "predicate": self._by_p, "object": self._by_o}[position]
        return {self._terms[i] for i in index}

    def predicates(self) -> set[Term]:
        return self.project("predicate")

    def out_degree(self, term_id: int) -> int:
        return len(self._by_s.get(term_id, ()))


class GraphBuilder:
    """Single-writer accumulator; ``freeze`` produces the immutable Graph."""

    def __init__(self):
        self._triples: set[Triple] = set()

    def add(self, triple: Triple) -> None:
        self._triples.add(triple)

    def update(self, triples: Iterable[Triple]) -> None:
        self._triples.update(triples)

    def __len__(self):
        return len(self._triples)

    def freeze(self) -> Graph:
        return Graph(self._triples)


def strip_literals(graph: Graph) -> Graph:
    if not graph.has_literals:
        return graph
    return Graph(t for t in graph if not t.object.is_literal)


def require_no_literals(graph: Graph, keep_literals: bool = False) -> None:
    if graph.has_literals and not keep_literals:
        raise LiteralPresent(
            "graph contains literals; strip them or enable keep-literals")


# --- N-Triples ----------------------------------------------------------

_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_ESCAPE_OUT = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r"}
_PN_LABEL = re.compile(r"[A-Za-z0-9_À-￿](?:[A-Za-z0-9_\-.·À-￿]*[A-Za-z0-9_\-·À-￿])?")
_LANGTAG = re.compile(r"[a-zA-Z]+(?:-[a-zA-Z0-9]+)*")


def _escape_literal(text: str) -> str:
    return "".join(_ESCAPE_OUT.get(c, c) for c in text)


class _LineParser:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str, cls=NTriplesSyntaxError):
        return cls(self.lineno, self.pos + 1, message)

    def skip_ws(self):
        text = self.text
        while self.pos < len(text) and text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _unicode_escape(self) -> str:
        # called with pos on 'u' or 'U'
        width = 4 if self.text[self.pos] == "u" else 8
        digits = self.text[self.pos + 1:self.pos + 1 + width]
        if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
            raise self.error("bad unicode escape")
        self.pos += 1 + width
        return chr(int(digits, 16))

    def iri(self) -> str:
        assert self.text[self.pos] == "<"
        self.pos += 1
        out = []
        text = self.text
        while True:
            if self.pos >= len(text):
                raise self.error("unterminated IRI")
            c = text[self.pos]
            if c == ">":
                self.pos += 1
                break
            if c == "\\":
                self.pos += 1
                if self.peek() not in ("u", "U"):
                    raise self.error("only \\u and \\U escapes are allowed in IRIs")
                out.append(self._unicode_escape())
                continue
            if c in ' <"{}|^`' or ord(c) <= 0x20:
                raise self.error(f"illegal character {c!r} in IRI")
            out.append(c)
            self.pos += 1
        value = "".join(out)
        if not value:
            raise self.error("empty IRI")
        return value

    def bnode(self) -> str:
        if not self.text.startswith("_:", self.pos):
            raise self.error("expected blank node")
        self.pos += 2
        m = _PN_LABEL.match(self.text, self.pos)
        if not m:
            raise self.error("bad blank node label")
        self.pos = m.end()
        return m.group(0)

    def literal(self) -> Term:
        self.pos += 1
        out = []
        text = self.text
        while True:
            if self.pos >= len(text):
                raise self.error("unterminated literal")
            c = text[self.pos]
            if c == '"':
                self.pos += 1
                break
            if c == "\\":
                self.pos += 1
                e = self.peek()
                if e in ("u", "U"):
                    out.append(self._unicode_escape())
                    continue
                if e not in _ECHAR:
                    raise self.error(f"bad escape \\{e}")
                out.append(_ECHAR[e])
                self.pos += 1
                continue
            if c in "\n\r":
                raise self.error("newline in literal")
            out.append(c)
            self.pos += 1
        value = "".join(out)
        if self.peek() == "@":
            self.pos += 1
            m = _LANGTAG.match(text, self.pos)
            if not m:
                raise self.error("bad language tag")
            self.pos = m.end()
            return Literal(value, lang=m.group(0))
        if text.startswith("^^", self.pos):
            self.pos += 2
            if self.peek() != "<":
                raise self.error("expected datatype IRI")
            return Literal(value, datatype=self.iri())
        return Literal(value)

    def term(self, position: str, reject_literals: bool) -> Term:
        self.skip_ws()
        c = self.peek()
        start = self.pos
        if c == "<":
            return IRI(self.iri())
        if c == "_":
            if position == "predicate":
                raise self.error("blank node in predicate position")
            return BNode(self.bnode())
        if c == '"':
            if position != "object":
                raise self.error(f"literal in {position} position")
            if reject_literals:
                raise self.error("literal rejected by policy", LiteralRejected)
            term = self.literal()
            return term
        if not c:
            raise self.error(f"missing {position}")
        self.pos = start
        raise self.error(f"unexpected {c!r} at {position}")

    def triple(self, reject_literals: bool) -> Optional[Triple]:
        self.skip_ws()
        if self.peek() in ("", "#"):
            return None
        s = self.term("subject", reject_literals)
        p = self.term("predicate", reject_literals)
        o = self.term("object", reject_literals)
        self.skip_ws()
        if self.peek() != ".":
            raise self.error("expected '.'")
        self.pos += 1
        self.skip_ws()
        if self.peek() not in ("", "#"):
            raise self.error("trailing content after '.'")
        return Triple(s, p, o)


def iter_ntriples(lines: Iterable[str], reject_literals: bool = False) -> Iterator[Triple]:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        parser = _LineParser(line, lineno)
        try:
            triple = parser.triple(reject_literals)
        except TermError as exc:
            raise NTriplesSyntaxError(lineno, parser.pos + 1, str(exc)) from None
        if triple is not None:
            yield triple


def parse_ntriples(source: Union[bytes, str, IO], reject_literals: bool = False) -> Graph:
    """Parse N-Triples from bytes, text, or a (binary or text) stream."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return Graph(iter_ntriples(io.StringIO(text, newline=""), reject_literals))


def load_ntriples(path, reject_literals: bool = False) -> Graph:
    with open(path, "rb") as fh:
        return parse_ntriples(fh, reject_literals=reject_literals)


def serialize_ntriples(graph: Graph) -> bytes:
    return "".join(t.n3() + "\n" for t in graph).encode("utf-8")


def write_ntriples(graph: Graph, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_ntriples(graph))
