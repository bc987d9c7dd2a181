"""Shared fixtures."""

import os

import pandas as pd
import pytest

from greedy_predict.services.design_matrix import standardize, suffstats_from
from tests.factories import random_design


@pytest.fixture
def raw():
    return random_design(0)


@pytest.fixture
def design(raw):
    return standardize(raw)


@pytest.fixture
def stats(design):
    return suffstats_from(design)


@pytest.fixture
def write_csv(tmp_path):
    """Write a DataFrame (or raw text) to a CSV file under tmp_path."""

    def _write(content, name: str = "data.csv") -> str:
        path = os.path.join(tmp_path, name)
        if isinstance(content, pd.DataFrame):
            content.to_csv(path, index=False, float_format="%.17g")
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(content)
        return path

    return _write
