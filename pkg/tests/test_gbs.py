import pytest

from graph_squash.embedding import planted_similarity_sets
from graph_squash.gbs import (SUPER_NODE_PREFIX, expand_solutions, gbs_answer, gbs_rewrite, gbs_summarize,
                              mutual_clusters, parse_membership_tsv, super_node_id)
from graph_squash.reasoner import transitive_closure
from graph_squash.rdf import RDF_TYPE, Graph, IRI, LiteralPresent, Literal, Triple, serialize_ntriples
from graph_squash.sparql import BGP, TriplePattern, Variable, answer_set, evaluate, extract_predicates, parse_query

from conftest import DESK_CLUSTER, EX, Q_DESK, ex


def _desk_sets(q):
    preds = [p.value for p in extract_predicates(q)]
    return planted_similarity_sets([DESK_CLUSTER], preds, preds)


def test_desk_summary_with_singletons(desk):
    s = gbs_summarize(desk, keep_singletons=True)
    assert len(s.graph) == 7
    assert s.inferred_triples == 8
    assert len(s.membership) == 1
    (sn, members), = s.membership.items()
    assert members == (ex("Gertrud"), ex("Lena"))
    assert sn.value.startswith(SUPER_NODE_PREFIX)
    assert Triple(sn, ex("birthPlace"), ex("Germany")) in s.graph
    assert Triple(ex("Germany"), IRI(RDF_TYPE), ex("Country")) in s.graph


def test_desk_summary_without_singletons(desk):
    s = gbs_summarize(desk)
    assert len(s.graph) == 1
    assert s.dropped_singletons == 6  # 8 inferred triples, 2 of them grouped


def test_no_groups_keeps_inferred_graph():
    g = Graph([Triple(ex("a"), ex("p"), ex("b")), Triple(ex("c"), ex("p"), ex("d"))])
    s = gbs_summarize(g, keep_singletons=True)
    assert s.graph == g and not s.membership


def test_super_node_ids_are_stable():
    a = super_node_id([ex("x"), ex("y")])
    assert a == super_node_id([ex("y"), ex("x")])
    assert a != super_node_id([ex("x"), ex("z")])


def test_membership_round_trip(desk):
    s = gbs_summarize(desk, keep_singletons=True)
    assert parse_membership_tsv(s.membership_tsv()) == dict(s.membership)


def test_summary_is_deterministic(desk):
    a, b = gbs_summarize(desk, keep_singletons=True), gbs_summarize(desk, keep_singletons=True)
    assert serialize_ntriples(a.graph) == serialize_ntriples(b.graph)
    assert a.membership_tsv() == b.membership_tsv()


def test_literals_rejected_by_default():
    g = Graph([Triple(ex("a"), ex("p"), Literal("x"))])
    with pytest.raises(LiteralPresent):
        gbs_summarize(g)
    assert len(gbs_summarize(g, keep_literals=True, keep_singletons=True).graph) == 1


def test_rewrite_to_lexicographic_minimum():
    q = parse_query(Q_DESK)
    q2, sets = gbs_rewrite(q, sets=_desk_sets(q))
    assert q2.body == BGP((TriplePattern(Variable("p"), ex("birthPlace"), ex("Germany")),))
    assert set(sets) == set(DESK_CLUSTER)


def test_rewrite_leaves_dissimilar_and_single_queries():
    q = parse_query("SELECT * WHERE { ?s <urn:a> ?o . ?s <urn:b> ?o2 }")
    sets = planted_similarity_sets([("urn:a",), ("urn:b",)], ["urn:a", "urn:b"], ["urn:a", "urn:b"])
    assert gbs_rewrite(q, sets=sets)[0] == q
    single = parse_query("SELECT * WHERE { ?s <urn:a> ?o }")
    assert gbs_rewrite(single, sets=planted_similarity_sets([("urn:a", "urn:b")], ["urn:a"], ["urn:b"]))[0] == single


def test_mutual_clusters_need_both_directions():
    sets = planted_similarity_sets([("a", "b", "c")], ["a", "b", "c"], ["a", "b", "c"])
    assert mutual_clusters(["a", "b", "c"], sets) == [("a", "b", "c")]
    one_way = dict(sets)
    one_way["b"] = planted_similarity_sets([("b",)], ["b"], [])["b"]
    assert mutual_clusters(["a", "b", "c"], one_way) == [("a", "c"), ("b",)]


def test_desk_answers_lose_anna_and_markus(desk):
    q = parse_query(Q_DESK)
    s = gbs_summarize(desk, keep_singletons=True)
    q2, _ = gbs_rewrite(q, sets=_desk_sets(q))
    got = gbs_answer(s, q2)
    assert {x["p"] for x in got} == {ex("Gertrud"), ex("Lena")}
    direct = answer_set(evaluate(desk, q))
    assert len(direct) == 4 and answer_set(got) < direct


def test_query_matching_nothing(desk):
    s = gbs_summarize(desk, keep_singletons=True)
    assert gbs_answer(s, parse_query("SELECT * WHERE { ?s <urn:none> ?o }")) == []


def test_expansion_is_cross_product():
    sn1, sn2 = IRI("urn:sn:1"), IRI("urn:sn:2")
    membership = {sn1: (ex("a"), ex("b")), sn2: (ex("c"), ex("d"), ex("e"))}
    out = expand_solutions([{"x": sn1, "y": sn2, "z": ex("k")}], membership)
    assert len(out) == 6 and all(o["z"] == ex("k") for o in out)


def test_join_destroying_groups_lose_answers():
    g = Graph([Triple(ex("a"), ex("p"), ex("o1")), Triple(ex("b"), ex("p"), ex("o1")),
               Triple(ex("a"), ex("q"), ex("o2"))])
    q = parse_query(f"SELECT ?x WHERE {{ ?x <{EX}p> <{EX}o1> . ?x <{EX}q> <{EX}o2> }}")
    s = gbs_summarize(g, rules=None)
    got = answer_set(gbs_answer(s, q))
    direct = answer_set(evaluate(g, q))
    assert len(direct) == 1 and got < direct


def test_single_pattern_soundness_over_inferred_graph(desk):
    closed = transitive_closure(desk)
    s = gbs_summarize(desk, keep_singletons=True)
    for p in desk.predicates():
        q = parse_query(f"SELECT * WHERE {{ ?s <{p.value}> ?o }}")
        assert answer_set(gbs_answer(s, q)) <= answer_set(evaluate(closed, q))
