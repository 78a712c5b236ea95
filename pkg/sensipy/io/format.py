import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Sequence, Union

import numpy as np

from sensipy.exceptions import ValidationError


@dataclass
class Table:
    """Rows of values under a fixed header.
    >>> table = Table.from_records([{"k": 1, "sigma": 0.5}])
    >>> table.header, table.rows
    (['k', 'sigma'], [[1, 0.5]])
    >>> table.column("sigma").tolist()
    [0.5]
    """
    header: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.header = [str(h) for h in self.header]
        for i, row in enumerate(self.rows):
            if len(row) != len(self.header):
                raise ValidationError(
                    f"row {i} has {len(row)} values, header has {len(self.header)}")

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "Table":
        """Table of dicts sharing their keys; the first record fixes the order."""
        if not records:
            raise ValidationError("a table needs at least one record")
        header = list(records[0])
        return cls(header, [[r[h] for h in header] for r in records])

    def column(self, name: str) -> np.ndarray:
        if name not in self.header:
            raise ValidationError(
                f"no column {name!r}; columns are {', '.join(self.header)}")
        index = self.header.index(name)
        return np.array([float(row[index]) for row in self.rows])


class Format(object):
    """Base class for handling a file format,
    e.g., reading and writing
    """
    def __init__(self):
        pass

    @staticmethod
    def read(path: Union[Path, str]) -> Any:
        raise NotImplementedError()

    @staticmethod
    def write(path: Union[Path, str], data: Any) -> None:
        raise NotImplementedError()


def format_value(value: Any) -> str:
    """Text of a table cell; floats use their shortest round-trip text.
    >>> format_value(0.1), format_value(3), format_value(None), format_value(True)
    ('0.1', '3', '', 'true')
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_value(text: str) -> Any:
    """Inverse of `format_value` for numbers; other text is kept.
    >>> parse_value("3"), parse_value("0.5"), parse_value(""), parse_value("avar")
    (3, 0.5, None, 'avar')
    """
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class CSVFormat(Format):
    """Comma-separated tables with a header row.
    """
    @staticmethod
    def read(path: Union[Path, str]) -> Table:
        """Reads a table.
        Raises:
            ValidationError: empty file or ragged rows
        """
        with open(path, newline="") as stream:
            lines = [row for row in csv.reader(stream) if row]
        if not lines:
            raise ValidationError(f"{path} is empty")
        return Table(lines[0], [[parse_value(v) for v in row] for row in lines[1:]])

    @staticmethod
    def write(path: Union[Path, str], table: Table) -> None:
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow([format_value(v) for v in row])


def to_json(value: Any) -> Any:
    """Converts numpy scalars and arrays to plain Python; non-finite floats
    become the strings "inf", "-inf" and "nan".
    >>> to_json({"a": np.float64(np.inf), "b": np.arange(2)})
    {'a': 'inf', 'b': [0, 1]}
    """
    if isinstance(value, dict):
        return {str(k): to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_json(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


class JSONFormat(Format):
    """JSON documents with sorted keys, so equal data give equal bytes.
    """
    @staticmethod
    def read(path: Union[Path, str]) -> Any:
        with open(path) as stream:
            return json.load(stream)

    @staticmethod
    def write(path: Union[Path, str], data: Any) -> None:
        with open(path, "w") as stream:
            json.dump(to_json(data), stream, sort_keys=True, indent=2, allow_nan=False)
            stream.write("\n")


if __name__ == "__main__":
    import doctest
    doctest.testmod()
