"""CSV connector: comma-separated, header row, UTF-8, '.' decimals."""

import re
from typing import Optional

import numpy as np
import pandas as pd

from greedy_predict.connectors.base import TableConnector
from greedy_predict.core.exceptions import MalformedInputError
from greedy_predict.models.design import RawDesign

_LINE = re.compile(r"line (\d+)")

FLOAT_FORMAT = "%.17g"


class CSVConnector(TableConnector):
    """Local CSV file connector."""

    connector_type = "csv"

    def read_table(self) -> pd.DataFrame:
        """Read the whole file as float64 columns.

        Raises:
            MalformedInputError: the file is missing, ragged, empty or has a
                non-numeric cell; ``line`` is the 1-based file line.
        """
        if not self.exists():
            raise MalformedInputError(f"cannot open {self.path}")
        try:
            frame = pd.read_csv(self.path, sep=",", encoding="utf-8", dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise MalformedInputError("file is empty, a header row is required", line=1)
        except pd.errors.ParserError as e:
            match = _LINE.search(str(e))
            raise MalformedInputError(str(e).strip(), line=int(match.group(1)) if match else None)
        except UnicodeDecodeError as e:
            raise MalformedInputError(f"not UTF-8: {e}")
        if frame.empty:
            raise MalformedInputError("no data rows after the header", line=2)
        return _to_numeric(frame)

    def write_table(self, frame: pd.DataFrame) -> None:
        frame.to_csv(self.path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _to_numeric(frame: pd.DataFrame) -> pd.DataFrame:
    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = (int(i[0]) for i in np.nonzero(bad))
        # header is line 1
        raise MalformedInputError(
            f"column '{frame.columns[col]}' has non-numeric value '{frame.iat[row, col]}'",
            line=row + 2,
        )
    return numeric.astype(np.float64)


def read_design(path: str, target: Optional[str] = None) -> RawDesign:
    """Load a CSV file as a RawDesign; the target defaults to the last column."""
    frame = CSVConnector(path).read_table()
    if frame.shape[1] < 2:
        raise MalformedInputError("need at least one regressor column and a target column", line=1)
    target = frame.columns[-1] if target is None else target
    if target not in frame.columns:
        raise MalformedInputError(f"target column '{target}' not in header", line=1)
    features = [c for c in frame.columns if c != target]
    return RawDesign(frame[features].to_numpy(), frame[target].to_numpy(), tuple(str(c) for c in features))


def write_frame(frame: pd.DataFrame, path: str) -> None:
    """Write a DataFrame as CSV with round-trip float formatting."""
    CSVConnector(path).write_table(frame)
