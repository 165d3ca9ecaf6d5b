import pytest

from zeroone.models import OrderedGraph, sample_graph
from zeroone.rng import make_rng
from zeroone.suite import function_suite, graph_suite


@pytest.fixture(scope="session")
def graph_sentences():
    return graph_suite()


@pytest.fixture(scope="session")
def function_sentences():
    return function_suite()


@pytest.fixture(scope="session")
def fixture_graphs():
    """Fifty seeded hosts on 3, 5 or 7 vertices."""
    sizes = (3, 5, 7)
    return [sample_graph(sizes[k % 3], 0.5, make_rng(2024, "fixture", k)) for k in range(50)]


@pytest.fixture
def k3():
    return OrderedGraph.complete(3)


def pytest_terminal_summary(terminalreporter):
    from _support import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, title, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} [{k:2d}] {title}: {detail}")
