"""Check-row reports with deterministic CSV/JSON emission.

CSV values use '.' decimals and 17 significant digits so reruns with the same
seed are byte-identical across platforms.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

CSV_HEADER = ("check", "instance", "value", "bound", "violation", "pass")


def fmt17(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)):
        return str(x)
    return format(float(x), ".17g")


@dataclass(frozen=True)
class CheckRow:
    check: str
    instance: str
    value: float
    bound: float
    violation: float
    passed: bool

    def as_csv(self) -> tuple:
        return (self.check, self.instance, fmt17(self.value), fmt17(self.bound),
                fmt17(self.violation), "true" if self.passed else "false")


def row(check: str, instance, value: float, bound: float, violation: float,
        passed: bool) -> CheckRow:
    return CheckRow(check=check, instance=str(instance), value=float(value),
                    bound=float(bound), violation=float(violation), passed=bool(passed))


@dataclass
class Report:
    """Per-suite report: rows plus config echo and tool version."""

    name: str
    rows: list = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    version: str = ""

    def add(self, *args) -> None:
        if len(args) == 1 and isinstance(args[0], CheckRow):
            self.rows.append(args[0])
        else:
            self.rows.append(row(*args))

    def extend_tuples(self, tuples) -> None:
        for t in tuples:
            self.add(row(*t))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def summary(self) -> dict:
        n_pass = sum(1 for r in self.rows if r.passed)
        worst = max((r.violation for r in self.rows), default=0.0)
        return {
            "suite": self.name,
            "checks": len(self.rows),
            "passed": n_pass,
            "failed": len(self.rows) - n_pass,
            "max_violation": worst,
        }

    def summary_line(self) -> str:
        s = self.summary()
        verdict = "PASS" if self.passed else "FAIL"
        return (f"[{self.name}] {verdict}: {s['passed']}/{s['checks']} checks passed, "
                f"max violation {s['max_violation']:.3e}")


def write_csv(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in report.rows:
            writer.writerow(r.as_csv())
    return path


def write_json(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "suite": report.name,
        "version": report.version,
        "config": report.config_echo,
        "summary": report.summary(),
        "rows": [
            {
                "check": r.check,
                "instance": r.instance,
                "value": r.value,
                "bound": r.bound,
                "violation": r.violation,
                "pass": r.passed,
            }
            for r in report.rows
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
