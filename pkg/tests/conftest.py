import os

import pytest
from hypothesis import HealthCheck, settings

from kgrec.graph import KnowledgeGraph, Triple

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def T(s, p, o, literal=False):
    return Triple(s, p, o, literal)


@pytest.fixture
def tiny_kg():
    return KnowledgeGraph.from_triples([
        T("1984", "has_author", "George_Orwell"),
        T("Animal_Farm", "has_author", "George_Orwell"),
        T("1984", "has_genre", "Dystopian_Fiction"),
        T("Fahrenheit_451", "has_genre", "Dystopian_Fiction"),
        T("1984", "has_year", "1949", True),
    ])


def two_cluster_triples(size=6, attrs=4):
    """Two disjoint groups of texts, each text linked to all of its group's attributes."""
    out = []
    for c in "AB":
        for i in range(size):
            for j in range(attrs):
                out.append(T(f"{c}_text{i}", "has_theme", f"{c}_theme{j}"))
    return out


@pytest.fixture
def two_cluster_kg():
    return KnowledgeGraph.from_triples(two_cluster_triples())


@pytest.fixture
def star_kg():
    """Centre linked to one 'heavy' and one 'light' leaf."""
    return KnowledgeGraph.from_triples([T("c", "heavy", "h"), T("c", "light", "l")])


# criterion number -> "PASS ..." / "FAIL ..." line, filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])
