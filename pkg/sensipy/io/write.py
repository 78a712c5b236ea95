import logging
from pathlib import Path
from typing import Any, List, Sequence, Union

from sensipy.exceptions import ValidationError
from sensipy.grf.kl import KLBasis
from sensipy.grid import Field
from sensipy.io.format import CSVFormat, JSONFormat, Table

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SAMPLES_FILE = "samples.csv"
CONFIG_FILE = "config.json"


def write(path: Union[Path, str], data: Any) -> None:
    """Writes a table (.csv) or a JSON document (.json).
    Args:
        path: path to a file
        data: a Table for .csv, JSON-convertible data for .json
    Returns:
        None
    """
    if isinstance(path, str):
        path = Path(path)

    writer = WriterFactory.create(path)
    writer(path, data)


class WriterFactory(object):
    @staticmethod
    def create(path: Union[Path, str]):
        """Returns a function for writing a file to `path`.
        Args:
            path: path to a file to be written
        Returns:
            writer: python function for writing data at `path`
        Raises:
            ValidationError
        >>> WriterFactory.create("report.json") is JSONFormat.write
        True
        """
        if isinstance(path, str):
            path = Path(path)

        ext = path.suffix.lower()
        if ext == ".csv":
            def table_writer(path: Union[Path, str], data: Any) -> None:
                if not isinstance(data, Table):
                    data = Table.from_records(data)
                CSVFormat.write(path, data)
            writer = table_writer
        elif ext == ".json":
            writer = JSONFormat.write
        else:
            raise ValidationError(f"unsupported file extension {ext!r}; use .csv or .json")
        return writer


def write_table(path: Union[Path, str], records: Sequence[dict]) -> None:
    write(path, Table.from_records(records))


def write_fields(path: Union[Path, str], fields: List[Field]) -> None:
    """One row per field: sample index, then node_0, node_1, ... in C order."""
    if not fields:
        raise ValidationError("no fields to write")
    size = fields[0].grid.size
    header = ["sample"] + [f"node_{i}" for i in range(size)]
    write(path, Table(header, [[k] + f.values.tolist() for k, f in enumerate(fields)]))


def write_kl(path: Union[Path, str], basis: KLBasis) -> None:
    """Columns k, eigenvalue, sigma, tail_sum, sup_norm; k counts from 1
    and tail_sum is the mass dropped by truncation after k terms."""
    sups = basis.sup_norms()
    rows = [[k + 1, float(basis.eigenvalues[k]), float(basis.sigmas[k]),
             basis.tail_sum(k + 1), float(sups[k])] for k in range(basis.rank)]
    write(path, Table(["k", "eigenvalue", "sigma", "tail_sum", "sup_norm"], rows))


def write_config(directory: Union[Path, str], config: dict) -> Path:
    """Echoes the resolved configuration into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_FILE
    write(path, config)
    return path


def write_report(directory: Union[Path, str], report) -> Path:
    """Writes report.json and, if the report has rows, samples.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / REPORT_FILE
    write(path, report.to_dict())
    if report.rows:
        write(directory / SAMPLES_FILE, Table.from_records(report.rows))
    logger.info("report written to %s", path)
    return path


if __name__ == "__main__":
    import doctest
    doctest.testmod()
