"""Tab-separated tables and run manifests.

Dialect: tab separator, ``\\n`` line endings, header row, no quoting, floats
written with 17 significant digits so every value round-trips exactly.
"""

import json
import math
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import TsvFormatError

__version__ = "0.1.0"


def format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    s = str(v)
    if "\t" in s or "\n" in s:
        raise TsvFormatError(f"cell {s!r} contains a tab or newline")
    return s


def write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(format_cell(h) for h in header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise TsvFormatError(f"row has {len(row)} cells, header has {len(header)}")
            fh.write("\t".join(format_cell(v) for v in row) + "\n")


def read_tsv(path):
    """Return ``(header, rows)`` with every cell as a string."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise TsvFormatError(f"{path}: {exc.strerror or exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0]:
        raise TsvFormatError(f"{path}: missing header row")
    header = lines[0].rstrip("\r").split("\t")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split("\t")
        if len(cells) != len(header):
            raise TsvFormatError(
                f"{path}: line {i} has {len(cells)} cells, header has {len(header)}"
            )
        rows.append(cells)
    return header, rows


def read_numeric_tsv(path):
    """Return ``(header, matrix)``; every cell must parse as a float."""
    header, rows = read_tsv(path)
    out = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise TsvFormatError(
                    f"{path}: line {i + 2}, column {header[j]!r}: non-numeric cell {cell!r}"
                ) from None
    return header, out


def write_phenotypes(path, genotype, phenotypes, trait_names=None):
    """Genotype in the first column, then one column per trait."""
    k = phenotypes.shape[1]
    names = trait_names or [f"Y{j + 1}" for j in range(k)]
    rows = np.column_stack([genotype, phenotypes])
    write_tsv(path, ["genotype"] + list(names), rows.tolist())


def read_phenotypes(path):
    header, mat = read_numeric_tsv(path)
    if len(header) < 2 or header[0] != "genotype":
        raise TsvFormatError(f"{path}: first column must be 'genotype'")
    return mat[:, 0], mat[:, 1:], header[1:]


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    seed: int = None
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    version: str = __version__
    started: float = field(default_factory=time.time)
    wall_seconds: float = None

    def finish(self):
        self.wall_seconds = time.time() - self.started

    def to_json(self):
        d = dict(self.__dict__)
        d["python"] = platform.python_version()
        d["numpy"] = np.__version__
        return json.dumps(d, indent=2, sort_keys=True, default=_jsonable) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (tuple, set)):
        return list(v)
    return str(v)
