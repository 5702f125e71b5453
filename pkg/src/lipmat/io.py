"""CSV and JSON readers/writers shared by the command-line tools.

CSV files have a header row, comma delimiters and '.' decimals; floats are
written with 17 significant digits so that a round trip is exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import SCHEMA_VERSION
from .geometry import Domain
from .lipschitz import LipschitzMatrix, SampleSet

FLOAT_FMT = "%.17g"


class InputError(ValueError):
    """Malformed input file; the message carries the file name and line."""


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return FLOAT_FMT % float(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path, expect: Optional[str] = None) -> Tuple[List[str], np.ndarray]:
    """Header and float matrix of a CSV file.

    Parameters
    ----------
    expect : {"samples", "gradients", "points"}, optional
        Validate the header against ``x_1..x_m, f`` / ``x_1..x_m, g_1..g_m`` /
        ``x_1..x_m``.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}:1: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric field") from None
            if not all(np.isfinite(vals)):
                raise InputError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    if expect is not None:
        _check_header(path, header, expect)
    return header, data


def _check_header(path, header, expect):
    if expect == "samples":
        m = len(header) - 1
        want = [f"x_{i + 1}" for i in range(m)] + ["f"]
    elif expect == "gradients":
        if len(header) % 2:
            raise InputError(f"{path}:1: gradient files need x_1..x_m, g_1..g_m columns")
        m = len(header) // 2
        want = [f"x_{i + 1}" for i in range(m)] + [f"g_{i + 1}" for i in range(m)]
    elif expect == "points":
        m = len(header)
        want = [f"x_{i + 1}" for i in range(m)]
    else:
        raise ValueError(expect)
    if m < 1 or header != want:
        raise InputError(f"{path}:1: header must be {','.join(want) if m >= 1 else 'x_1,...'}, found {','.join(header)}")


def read_samples(samples_path=None, gradients_path=None) -> SampleSet:
    X = y = GP = G = None
    m = None
    if samples_path is not None:
        _, data = read_table(samples_path, "samples")
        X, y = data[:, :-1], data[:, -1]
        m = X.shape[1]
    if gradients_path is not None:
        header, data = read_table(gradients_path, "gradients")
        k = len(header) // 2
        if m is not None and k != m:
            raise InputError(f"{gradients_path}:1: dimension {k} differs from samples dimension {m}")
        m = k
        GP, G = data[:, :k], data[:, k:]
    if m is None:
        raise InputError("no sample or gradient file given")
    try:
        return SampleSet(X, y, GP, G, dim=m)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def write_samples(path, s: SampleSet):
    header = [f"x_{i + 1}" for i in range(s.dim)] + ["f"]
    write_csv(path, header, np.column_stack([s.points, s.values]))


def write_gradients(path, s: SampleSet):
    header = [f"x_{i + 1}" for i in range(s.dim)] + [f"g_{i + 1}" for i in range(s.dim)]
    write_csv(path, header, np.column_stack([s.grad_points, s.grads]))


def read_points(path) -> np.ndarray:
    return read_table(path, "points")[1]


def write_json(path, obj: dict):
    obj = dict(obj)
    obj.setdefault("schema_version", SCHEMA_VERSION)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None


def read_metric(path) -> LipschitzMatrix:
    try:
        return LipschitzMatrix.from_dict(read_json(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: invalid metric ({exc})") from None


def read_domain(path) -> Domain:
    try:
        return Domain.from_dict(read_json(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: invalid domain ({exc})") from None
