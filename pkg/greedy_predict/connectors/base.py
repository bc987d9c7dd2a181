"""Contract for file-backed numeric tables."""

import os
from abc import ABC, abstractmethod

import pandas as pd


class TableConnector(ABC):
    """A numeric table bound to one file path.

    Subclasses read the file into float64 columns and write frames back in a
    form ``read_table`` recovers exactly.
    """

    connector_type: str

    def __init__(self, path: str):
        self.path = path

    def exists(self) -> bool:
        return os.path.isfile(self.path)

    @abstractmethod
    def read_table(self) -> pd.DataFrame:
        ...

    @abstractmethod
    def write_table(self, frame: pd.DataFrame) -> None:
        ...
