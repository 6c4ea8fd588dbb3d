import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pcnoma.factor_graph import FactorGraph, pdma_2x3, pdma_3x6, scma_4x6

settings.register_profile("pkg", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")

GRAPHS = {"scma4x6": scma_4x6, "pdma2x3": pdma_2x3, "pdma3x6": pdma_3x6}
LAMBDAS = (0.25, 1.0, 4.0)


@pytest.fixture(params=sorted(GRAPHS))
def builtin_graph(request) -> FactorGraph:
    return GRAPHS[request.param]()


def random_graph(draw, st, max_f=4, max_v=5):
    """Hypothesis helper: a binary matrix with no empty row or column."""
    F = draw(st.integers(1, max_f))
    V = draw(st.integers(1, max_v))
    flat = draw(st.lists(st.integers(0, 1), min_size=F * V, max_size=F * V))
    m = np.array(flat).reshape(F, V)
    m[np.arange(F), np.arange(F) % V] = 1
    m[np.arange(V) % F, np.arange(V)] = 1
    return FactorGraph(m)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def report(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {name}" + (f": {detail}" if detail else "")
        results[name] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for name in sorted(results, key=lambda s: (int(s.rstrip("abc")), s)):
            terminalreporter.write_line(results[name])
