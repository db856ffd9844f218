import io
import random

import pytest
from hypothesis import given, settings, strategies as st

from graph_squash.rdf import (RDF_TYPE, BNode, Graph, GraphBuilder, IRI, Literal, LiteralPresent,
                              LiteralRejected, NTriplesSyntaxError, TermError, Triple, parse_ntriples,
                              require_no_literals, serialize_ntriples, strip_literals)

from conftest import EX, ex


def test_single_line():
    g = parse_ntriples(b"<urn:a> <urn:p> <urn:b> .\n")
    assert len(g) == 1
    assert Triple(IRI("urn:a"), IRI("urn:p"), IRI("urn:b")) in g


def test_duplicate_lines_collapse():
    g = parse_ntriples("<urn:a> <urn:p> <urn:b> .\n<urn:a> <urn:p> <urn:b> .\n")
    assert len(g) == 1


def test_reject_literals():
    with pytest.raises(LiteralRejected):
        parse_ntriples('<urn:a> <urn:p> "x" .', reject_literals=True)
    assert len(parse_ntriples('<urn:a> <urn:p> "x" .')) == 1


def test_syntax_error_position():
    with pytest.raises(NTriplesSyntaxError) as err:
        parse_ntriples("<urn:a> <urn:p> <urn:b> .\n<urn:a> <urn:p> .\n")
    assert err.value.line == 2
    assert err.value.column > 1


@pytest.mark.parametrize("line", [
    "<urn:a> <urn:p> <urn:b>",              # missing dot
    '"x" <urn:p> <urn:b> .',                # literal subject
    "<urn:a> _:b <urn:b> .",                # blank predicate
    "<urn:a> <urn:p> <urn:b> . extra",
    "<urn a> <urn:p> <urn:b> .",
])
def test_malformed(line):
    with pytest.raises(NTriplesSyntaxError):
        parse_ntriples(line)


def test_literal_forms_and_escapes():
    text = ('<urn:a> <urn:p> "tab\\there"@EN .\n'
            '<urn:a> <urn:p> "5"^^<http://www.w3.org/2001/XMLSchema#integer> .\n'
            '<urn:a> <urn:p> "caf\\u00E9" .\n'
            '_:b1 <urn:p> <urn:\\u0041> .\r\n'
            '# comment\n\n')
    g = parse_ntriples(text)
    objs = {t.object for t in g}
    assert Literal("tab\there", lang="en") in objs
    assert Literal("5", "http://www.w3.org/2001/XMLSchema#integer") in objs
    assert Literal("café") in objs
    assert Triple(BNode("b1"), IRI("urn:p"), IRI("urn:A")) in g


def test_term_validation():
    with pytest.raises(TermError):
        IRI("has space")
    with pytest.raises(TermError):
        IRI("")
    with pytest.raises(TermError):
        Triple(Literal("x"), IRI("urn:p"), IRI("urn:o"))
    with pytest.raises(TermError):
        Triple(IRI("urn:s"), BNode("b"), IRI("urn:o"))


def test_match_examples(desk):
    assert len(desk.match()) == 7
    assert len(desk.match(ex("Gertrud"))) == 1
    assert desk.match(ex("Gertrud"), ex("birthPlace"), ex("France")) == []
    assert len(desk.match(None, None, ex("Germany"))) == 4


def test_project_examples(desk):
    preds = {t.value.rsplit("/", 1)[-1].rsplit("#", 1)[-1] for t in desk.project("predicate")}
    assert preds == {"birthPlace", "nationality", "country", "deathPlace", "type", "subClassOf"}
    assert Graph().project("subject") == set()
    g = Graph([Triple(ex("a"), ex("p"), ex("b")), Triple(ex("a"), ex("q"), ex("c"))])
    assert g.project("subject") == {ex("a")}


def test_serialize_small_cases():
    assert serialize_ntriples(Graph()) == b""
    out = serialize_ntriples(Graph([Triple(ex("a"), ex("p"), ex("b"))]))
    assert out.count(b"\n") == 1 and out.endswith(b" .\n")


def test_serialize_is_sorted_and_stable(desk):
    a = serialize_ntriples(desk)
    b = serialize_ntriples(parse_ntriples(a))
    assert a == b
    lines = a.decode().splitlines()
    assert len(lines) == 7


def test_builder_freeze():
    b = GraphBuilder()
    b.add(Triple(ex("a"), ex("p"), ex("b")))
    b.update([Triple(ex("a"), ex("p"), ex("b")), Triple(ex("b"), ex("p"), ex("c"))])
    g = b.freeze()
    assert len(g) == 2


def test_literal_policy():
    g = parse_ntriples('<urn:a> <urn:p> "x" .\n<urn:a> <urn:p> <urn:b> .\n')
    with pytest.raises(LiteralPresent):
        require_no_literals(g)
    require_no_literals(g, keep_literals=True)
    assert len(strip_literals(g)) == 1


# --- properties -------------------------------------------------------------------

names = st.sampled_from(["a", "b", "c", "d", "e", "f"])
terms_st = st.one_of(
    names.map(lambda n: IRI(EX + n)),
    names.map(BNode),
    st.text(alphabet=st.characters(codec="utf-8", exclude_categories=("Cs",)), max_size=6).map(Literal),
    st.tuples(st.text(max_size=4), st.sampled_from(["en", "de-at"])).map(lambda t: Literal(t[0], lang=t[1])),
)
triples_st = st.builds(
    Triple,
    st.one_of(names.map(lambda n: IRI(EX + n)), names.map(BNode)),
    names.map(lambda n: IRI(EX + "p" + n)),
    terms_st,
)


@settings(max_examples=200, deadline=None)
@given(st.lists(triples_st, max_size=30))
def test_round_trip(triples):
    g = Graph(triples)
    again = parse_ntriples(io.BytesIO(serialize_ntriples(g)))
    assert again == g
    assert parse_ntriples(serialize_ntriples(again)) == again


@settings(max_examples=100, deadline=None)
@given(st.lists(triples_st, max_size=30))
def test_interning_is_bijective(triples):
    g = Graph(triples)
    ids = [g.id_of(t) for t in g.terms]
    assert ids == list(range(len(g.terms)))
    assert all(g.term(i) == t for i, t in enumerate(g.terms))
    assert list(g.terms) == sorted(g.terms)


def test_index_matches_scan():
    rnd = random.Random(5)
    for size in (0, 50, 500, 5000):
        ents = [IRI(f"{EX}e{i}") for i in range(max(2, size // 10))]
        preds = [IRI(f"{EX}p{i}") for i in range(7)]
        g = Graph(Triple(rnd.choice(ents), rnd.choice(preds), rnd.choice(ents)) for _ in range(size))
        everything = list(g)
        for _ in range(250):
            pattern = [rnd.choice(ents + [None]) if rnd.random() < 0.5 else None,
                       rnd.choice(preds) if rnd.random() < 0.5 else None,
                       rnd.choice(ents) if rnd.random() < 0.5 else None]
            naive = [t for t in everything
                     if all(x is None or x == y for x, y in zip(pattern, t))]
            assert g.match(*pattern) == naive


def test_type_constant():
    assert RDF_TYPE.endswith("#type")
