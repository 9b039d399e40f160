from importlib import resources

import pytest

from dsrkit import DEFAULT_PARTITION_SPEC, load_default_baseline, parse_dsr_document

DATA = resources.files("dsrkit.data")


def data_path(name):
    return str(DATA.joinpath(name))


@pytest.fixture(scope="session")
def clean_dsr():
    return parse_dsr_document(DATA.joinpath("takeoff_clean.dsr.json").read_bytes())


@pytest.fixture(scope="session")
def defective_dsr():
    return parse_dsr_document(DATA.joinpath("takeoff_defective.dsr.json").read_bytes())


@pytest.fixture(scope="session")
def baseline():
    return load_default_baseline()


@pytest.fixture(scope="session")
def default_spec():
    return DEFAULT_PARTITION_SPEC
