from __future__ import annotations

import pytest

import acceptance_report
from dataplore.catalog import profile_catalog
from dataplore.dataset import load_fixture


def pytest_terminal_summary(terminalreporter):
    if acceptance_report.RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in acceptance_report.RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def dataset():
    return load_fixture()


@pytest.fixture(scope="session")
def catalog(dataset):
    return dataset.catalog


@pytest.fixture(scope="session")
def graph(dataset):
    return dataset.graph


@pytest.fixture(scope="session")
def profiles(catalog):
    return profile_catalog(catalog)
