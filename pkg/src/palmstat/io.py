"""CSV serialization for patterns, covariance matrices, reports, and tables.

All writers emit ``#``-prefixed provenance comment lines before the data;
all readers tolerate CRLF line endings, blank lines, and ``#`` comments.
Floating-point values are written with 17 significant digits so round trips
reproduce binary doubles exactly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .estimators import Bandwidth, CovarianceEstimate
from .gof import TestReport
from .models import MarkedPointPattern

REPORT_FIELDS = ("test", "stat", "dof", "crit", "pvalue", "reject",
                 "cond", "wb_ok", "npoints", "seed")


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def config_digest(config) -> str:
    """Short stable digest of a dataclass config, for provenance headers."""
    if dataclasses.is_dataclass(config):
        config = dataclasses.asdict(config)
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _provenance_lines(seed=None, extra: dict | None = None) -> list[str]:
    from . import __version__
    lines = [f"# version: palmstat {__version__}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {_fmt(value)}")
    return lines


def _data_lines(path) -> list[str]:
    raw = Path(path).read_text()
    lines = []
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


def _meta(path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line.startswith("#") and ":" in line:
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
    return meta


def write_pattern_csv(path, pattern: MarkedPointPattern, seed=None,
                      extra: dict | None = None) -> None:
    """Write a pattern as ``x,y,theta`` rows, one point per row."""
    lines = _provenance_lines(seed, extra)
    lines.append("x,y,theta")
    for (x, y), theta in zip(pattern.points, pattern.marks):
        lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(theta)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_pattern_csv(path) -> MarkedPointPattern:
    lines = _data_lines(path)
    if not lines or lines[0].replace(" ", "") != "x,y,theta":
        raise ValueError(f"{path}: expected an 'x,y,theta' header")
    rows = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
    if rows:
        data = np.asarray(rows, dtype=float)
        if data.shape[1] != 3:
            raise ValueError(f"{path}: expected three columns per row")
        return MarkedPointPattern(data[:, :2], data[:, 2])
    return MarkedPointPattern(np.empty((0, 2)), np.empty(0))


def write_matrix_csv(path, estimate: CovarianceEstimate, seed=None) -> None:
    """Write a covariance estimate row-major with its provenance header."""
    extra = {"estimator": estimate.estimator}
    if estimate.bandwidth is not None:
        bw = estimate.bandwidth
        extra.update(c=bw.c, b_k=bw.b_k, a_k=bw.a_k, wb_ok=bw.wb_ok)
    lines = _provenance_lines(seed, extra)
    for row in estimate.matrix:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> CovarianceEstimate:
    meta = _meta(path)
    rows = [[float(v) for v in line.split(",")] for line in _data_lines(path)]
    matrix = np.asarray(rows, dtype=float)
    bandwidth = None
    if "c" in meta:
        bandwidth = Bandwidth(c=float(meta["c"]), b_k=float(meta["b_k"]),
                              a_k=float(meta["a_k"]), wb_ok=meta["wb_ok"] == "1")
    return CovarianceEstimate(matrix, meta.get("estimator", "unknown"),
                              bandwidth=bandwidth)


def report_record(report: TestReport) -> str:
    """One-line CSV record of a test report."""
    values = (report.test, report.statistic, report.dof, report.critical_value,
              report.p_value, report.reject, report.condition, report.wb_ok,
              report.n_points, report.seed)
    return ",".join(_fmt(v) for v in values)


def write_report_csv(path, reports, seed=None, extra: dict | None = None) -> None:
    if isinstance(reports, TestReport):
        reports = [reports]
    lines = _provenance_lines(seed, extra)
    lines.append(",".join(REPORT_FIELDS))
    lines.extend(report_record(r) for r in reports)
    Path(path).write_text("\n".join(lines) + "\n")


def write_rows_csv(path, fieldnames, rows, seed=None, extra: dict | None = None) -> None:
    """Generic table writer: provenance header, column header, dict rows."""
    lines = _provenance_lines(seed, extra)
    lines.append(",".join(fieldnames))
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name in fieldnames))
    Path(path).write_text("\n".join(lines) + "\n")


def read_rows_csv(path) -> tuple[dict, list[dict]]:
    """Read a table written by :func:`write_rows_csv`; values stay strings."""
    lines = _data_lines(path)
    if not lines:
        raise ValueError(f"{path}: no table data")
    names = [n.strip() for n in lines[0].split(",")]
    rows = []
    for line in lines[1:]:
        values = [v.strip() for v in line.split(",")]
        if len(values) != len(names):
            raise ValueError(f"{path}: ragged row {line!r}")
        rows.append(dict(zip(names, values)))
    return _meta(path), rows
