import sys
from importlib import resources
from pathlib import Path

import pytest

from policylens.synthetic import make_policy_corpus


@pytest.fixture(scope="session")
def fixture_dir():
    return Path(str(resources.files("policylens").joinpath("data/fixtures")))


@pytest.fixture(scope="session")
def planted_corpus():
    """400 keyword-planted documents and their planted label sets."""
    return make_policy_corpus(n_docs=400, seed=0)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("]", 1)[1].split(".", 1)[0])):
            terminalreporter.write_line(line)
