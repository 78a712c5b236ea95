from pathlib import Path
from typing import Any, List, Union

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid
from sensipy.io.format import CSVFormat, JSONFormat, Table

SAMPLE_COLUMN = "value"


def read(path: Union[Path, str]) -> Any:
    """Reads a table (.csv) or a JSON document (.json).
    Args:
        path: path to a file
    Returns:
        a Table or the decoded JSON value
    Raises:
        ValidationError: unsupported extension
        OSError: the file cannot be opened
    """
    if isinstance(path, str):
        path = Path(path)
    reader = ReaderFactory.create(path)
    return reader(path)


class ReaderFactory(object):
    @staticmethod
    def create(path: Union[Path, str]):
        """Returns a function for reading a file at `path`.
        Args:
            path: path to a file to be read
        Returns:
            reader: python function for reading the file at `path`
        Raises:
            ValidationError
        >>> ReaderFactory.create("samples.csv") is CSVFormat.read
        True
        """
        if isinstance(path, str):
            path = Path(path)

        ext = path.suffix.lower()
        if ext == ".csv":
            reader = CSVFormat.read
        elif ext == ".json":
            reader = JSONFormat.read
        else:
            raise ValidationError(f"unsupported file extension {ext!r}; use .csv or .json")
        return reader


def read_samples(path: Union[Path, str], column: str = SAMPLE_COLUMN) -> np.ndarray:
    """Reads scalar samples from the `column` column of a CSV file,
    or from its only column when there is no such header.
    Raises:
        ValidationError: missing column, empty table or non-numeric values
    """
    table = read(path)
    if not isinstance(table, Table):
        raise ValidationError(f"{path} is not a table")
    if column not in table.header and len(table.header) == 1:
        column = table.header[0]
    if not table.rows:
        raise ValidationError(f"{path} has no samples")
    try:
        values = table.column(column)
    except ValidationError:
        raise
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: column {column!r} is not numeric") from None
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{path}: samples must be finite")
    return values


def read_fields(path: Union[Path, str], grid: Grid) -> List[Field]:
    """Reads fields written by `write_fields`, one field per row."""
    table = read(path)
    nodes = [h for h in table.header if h.startswith("node_")]
    if len(nodes) != grid.size:
        raise ValidationError(f"{path} has {len(nodes)} nodes, grid has {grid.size}")
    index = [table.header.index(h) for h in nodes]
    return [Field(grid, [float(row[i]) for i in index]) for row in table.rows]


if __name__ == "__main__":
    import doctest
    doctest.testmod()
