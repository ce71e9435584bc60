import json

import pytest

from surprisuite import load_suite, parse_suite
from surprisuite.data import suite_path, template_path
from suite_docs import make_gap_suite_doc, make_order_suite_doc


@pytest.fixture(scope="session")
def center_embedding_suite():
    return load_suite(suite_path("center_embedding"))


@pytest.fixture(scope="session")
def filler_gap_suite():
    return load_suite(suite_path("filler_gap"))


@pytest.fixture(scope="session")
def discharge_suite():
    return load_suite(suite_path("discharge"))


@pytest.fixture(scope="session")
def island_template_path():
    return template_path("island_adjunct_cnp")


@pytest.fixture()
def gap_unit_suite():
    return parse_suite(json.dumps(make_gap_suite_doc()))


@pytest.fixture()
def order_unit_suite():
    return parse_suite(json.dumps(make_order_suite_doc()))
