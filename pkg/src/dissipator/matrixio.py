"""Dense matrix files: CSV (one row per line) and MatrixMarket array format.

The format is chosen by extension. Values are written with 17 significant
digits so that a write/read cycle reproduces every float exactly.
"""

import csv
import os

import numpy as np
import scipy.io

from .exceptions import InvalidInput

FORMATS = (".csv", ".mtx")


class MatrixFormatError(InvalidInput):
    def __init__(self, path, message, line=None, column=None):
        where = f"{path}"
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.column = path, line, column


def _ext(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in FORMATS:
        raise InvalidInput(f"{path}: unsupported extension {ext!r}, expected one of {FORMATS}")
    return ext


def read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise MatrixFormatError(path, f"cannot parse {cell.strip()!r} as a number",
                                            lineno, col) from None
            if rows and len(vals) != len(rows[0][1]):
                raise MatrixFormatError(path, f"row has {len(vals)} entries, expected "
                                        f"{len(rows[0][1])}", lineno)
            rows.append((lineno, vals))
    if not rows:
        raise MatrixFormatError(path, "no data rows")
    M = np.array([v for _, v in rows], dtype=float)
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise MatrixFormatError(path, "non-finite entry", rows[bad[0]][0], int(bad[1]) + 1)
    return M


def write_csv(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([f"{v:.17g}" for v in row])


def read_mtx(path):
    try:
        M = scipy.io.mmread(path)
    except (ValueError, OSError, IndexError) as exc:
        raise MatrixFormatError(path, f"invalid MatrixMarket file ({exc})") from None
    if hasattr(M, "toarray"):
        M = M.toarray()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or not np.all(np.isfinite(M)):
        raise MatrixFormatError(path, "expected a finite two-dimensional real array")
    return M


def write_mtx(path, M):
    scipy.io.mmwrite(path, np.atleast_2d(np.asarray(M, dtype=float)), precision=17)


def read_matrix(path):
    if not os.path.exists(path):
        raise InvalidInput(f"{path}: no such file")
    return read_csv(path) if _ext(path) == ".csv" else read_mtx(path)


def write_matrix(path, M):
    if _ext(path) == ".csv":
        write_csv(path, M)
    else:
        write_mtx(path, M)
