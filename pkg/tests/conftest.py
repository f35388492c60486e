import importlib.resources as resources

import pytest

from trajhedge.fileformat import parse_payoff, parse_process, parse_tree


def corpus_text(name: str) -> str:
    return (resources.files("trajhedge") / "corpus_data" / name).read_text()


@pytest.fixture
def tree_6_2():
    return parse_tree(corpus_text("example-6-2.txt"))


@pytest.fixture
def payoff_6_2_f(tree_6_2):
    return parse_payoff(corpus_text("payoff-6-2-f.txt"), tree_6_2)


@pytest.fixture
def process_6_2_b(tree_6_2):
    return parse_process(corpus_text("process-6-2-b.txt"), tree_6_2)


@pytest.fixture
def tree_remark():
    return parse_tree(corpus_text("example-6-2-remark.txt"))


@pytest.fixture
def tree_incomplete():
    return parse_tree(corpus_text("example-6-2-incomplete.txt"))


@pytest.fixture
def tree_lfail():
    return parse_tree(corpus_text("example-l-failure.txt"))


@pytest.fixture
def payoff_lfail_f1(tree_lfail):
    return parse_payoff(corpus_text("payoff-l-failure-f1.txt"), tree_lfail)


@pytest.fixture
def process_lfail(tree_lfail):
    return parse_process(corpus_text("process-l-failure.txt"), tree_lfail)
