import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from edurf.forest import ForestParams  # noqa: E402
from edurf.pipeline import train_model  # noqa: E402
from edurf.synthetic import generate_corpus  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(40, seed=3)


@pytest.fixture(scope="session")
def small_model(small_corpus):
    model, _ = train_model(small_corpus, ForestParams(n_trees=15, seed=5))
    return model


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion; the lines are repeated in the terminal summary."""
    def emit(name, ok, detail=""):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        line = f"{status}  {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
