#
# Atomic file output: JSON documents, CSV tables and plan matrices
#
import contextlib
import csv
import io
import json
import os
import tempfile
from pathlib import Path


def write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename.

    Readers see either the previous file or the complete new one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        Path(tmp).replace(path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            Path(tmp).unlink()
        raise


def write_json(path, document):
    write_text(path, json.dumps(document, indent=2) + "\n")


def read_json(path):
    with Path(path).open(encoding="utf-8") as handle:
        return json.load(handle)


def csv_text(rows, fieldnames):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(value) for key, value in row.items()})
    return buffer.getvalue()


def write_csv(path, rows, fieldnames):
    """Write dictionaries as CSV rows under a fixed header; floats use ``repr``."""
    write_text(path, csv_text(rows, fieldnames))


def write_matrix_csv(path, matrix):
    """Write a matrix with one CSV line per row and no header."""
    lines = (",".join(repr(float(x)) for x in row) for row in matrix)
    write_text(path, "\n".join(lines) + "\n")


def read_csv(path):
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _cell(value):
    if isinstance(value, float):
        return repr(float(value))
    return value
