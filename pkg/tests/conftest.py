import pytest

from graph_squash.rdf import IRI, Graph, Triple, parse_ntriples

EX = "http://example.org/"

DESK_NT = """\
<http://example.org/Gertrud> <http://example.org/birthPlace> <http://example.org/Germany> .
<http://example.org/Lena> <http://example.org/birthPlace> <http://example.org/Germany> .
<http://example.org/Markus> <http://example.org/nationality> <http://example.org/Germany> .
<http://example.org/Anna> <http://example.org/country> <http://example.org/Germany> .
<http://example.org/Markus> <http://example.org/deathPlace> <http://example.org/France> .
<http://example.org/Germany> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/EuropeanCountry> .
<http://example.org/EuropeanCountry> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://example.org/Country> .
"""

Q_DESK = """\
PREFIX : <http://example.org/>
SELECT ?p WHERE {
  { ?p :country :Germany } UNION { ?p :nationality :Germany } UNION { ?p :birthPlace :Germany }
}
"""

DESK_CLUSTER = (EX + "birthPlace", EX + "country", EX + "nationality")


def ex(name):
    return IRI(EX + name)


@pytest.fixture
def desk():
    return parse_ntriples(DESK_NT)


@pytest.fixture
def q_desk():
    return Q_DESK


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: slow end-to-end acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
