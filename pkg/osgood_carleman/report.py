"""Verification reports: checks, JSON output and CSV plot data."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__

_LOGGER = logging.getLogger(__name__)

KIND_IDENTITY = "identity"
KIND_BOUND = "bound"
KIND_FIT = "fit"
KIND_DECAY = "decay"
KINDS = (KIND_IDENTITY, KIND_BOUND, KIND_FIT, KIND_DECAY)

CHECK_COLUMNS = ("name", "kind", "value", "threshold", "status")


@dataclass(frozen=True)
class Check:
    name: str
    kind: str
    value: float
    threshold: float
    status: bool

    @classmethod
    def upper(cls, name: str, kind: str, value: float, threshold: float) -> Check:
        """Passes when ``value <= threshold``; NaN fails."""
        value = float(value)
        return cls(name, kind, value, float(threshold), bool(value <= threshold))

    @classmethod
    def lower(cls, name: str, kind: str, value: float, threshold: float) -> Check:
        """Passes when ``value >= threshold``; NaN fails."""
        value = float(value)
        return cls(name, kind, value, float(threshold), bool(value >= threshold))

    @classmethod
    def flag(cls, name: str, kind: str, status: bool) -> Check:
        return cls(name, kind, 1.0 if status else 0.0, 1.0, bool(status))

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "kind": self.kind, "value": self.value, "threshold": self.threshold, "status": self.status}


@dataclass
class VerificationReport:
    suite: str
    checks: list[Check] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)
    data: dict[str, Any] = field(default_factory=dict)
    plot_table: tuple[Sequence[str], list[dict[str, Any]]] | None = None

    @property
    def passed(self) -> bool:
        return all(check.status for check in self.checks)

    def add(self, check: Check) -> Check:
        if check.kind not in KINDS:
            raise ValueError(f"unknown check kind {check.kind!r}")
        self.checks.append(check)
        _LOGGER.debug("%s: %s %s (value %.6g, threshold %.6g)", self.suite, check.name, check.status, check.value, check.threshold)
        return check

    def extend(self, checks: Iterable[Check]) -> None:
        for check in checks:
            self.add(check)

    def failed(self) -> list[Check]:
        return [check for check in self.checks if not check.status]

    def as_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [check.as_dict() for check in self.checks],
            "provenance": self.provenance,
            "data": self.data,
        }


def provenance(seed: int, grid: dict[str, Any] | None = None) -> dict[str, Any]:
    return {"seed": int(seed), "grid": grid or {}, "version": __version__}


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        if hasattr(value, "_asdict"):
            return jsonable(value._asdict())
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else str(number)
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def dumps(report: VerificationReport) -> str:
    """Deterministic JSON text; keys sorted, no timestamps."""
    return json.dumps(jsonable(report.as_dict()), sort_keys=True, indent=2) + "\n"


def write_report(report: VerificationReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report), encoding="utf-8")
    _LOGGER.info("wrote %s report to %s", report.suite, path)
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return "" if value is None else str(value)


def emit_plot_data(
    source: VerificationReport | Sequence[dict[str, Any]],
    path: str | Path,
    columns: Sequence[str] | None = None,
) -> Path:
    """CSV with a header row.

    A report writes its plot table when it has one (the carleman suite keeps
    one row per gamma and member), otherwise its checks. A list of row dicts,
    such as the counterexample grid, is written as is.
    """
    if isinstance(source, VerificationReport):
        if source.plot_table is not None:
            header, rows = source.plot_table
        else:
            header, rows = CHECK_COLUMNS, [check.as_dict() for check in source.checks]
    else:
        rows = list(source)
        header = columns or (tuple(rows[0].keys()) if rows else ())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in header])
    _LOGGER.info("wrote %d plot rows to %s", len(rows), path)
    return path
