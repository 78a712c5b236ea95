from sensipy.io.format import Format, CSVFormat, JSONFormat, Table
from sensipy.io.read import read, read_samples, read_fields, ReaderFactory
from sensipy.io.write import (write, write_table, write_fields, write_kl, write_config,
                              write_report, WriterFactory)
