import sys

import pytest

import otparse
from otparse import Parser


@pytest.fixture(scope="session")
def syllable():
    return otparse.load_example()


@pytest.fixture(scope="session")
def grammar(syllable):
    return syllable[0]


@pytest.fixture(scope="session")
def system(syllable):
    return syllable[1]


@pytest.fixture(scope="session")
def ranking(syllable):
    return syllable[2]


@pytest.fixture(scope="session")
def parser(syllable):
    return Parser(*syllable)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
