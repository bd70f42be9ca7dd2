"""Verdict reports in text and JSON form."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .assertions import FAIL, INDETERMINATE, PASS, Verdict

SCHEMA = "qassert.report/1"


def _num(x):
    # JSON has no infinities; keep them readable and reversible
    if x is None or math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


def _unnum(x):
    return float(x) if isinstance(x, str) else x


@dataclass(frozen=True)
class VerdictRecord:
    """Plain-data view of a Verdict, as stored in reports."""

    index: int
    line: int | None
    kind: str
    registers: list[str]
    expected: int | None
    status: str
    p_value: float
    statistic: float | None
    dof: int | None
    shots: int
    seed: int
    flags: list[str]
    histogram: dict[str, int] | None = None
    table: dict | None = None
    deviations: list[int] = field(default_factory=list)
    note: str = ""

    @classmethod
    def from_verdict(cls, index: int, v: Verdict) -> "VerdictRecord":
        table = None
        if v.table is not None:
            table = {"rows": list(v.table.rows), "cols": list(v.table.cols),
                     "counts": [list(r) for r in v.table.counts]}
        hist = {str(k): c for k, c in v.histogram.items()} if v.histogram is not None else None
        return cls(index, v.assertion.line, v.assertion.kind, list(v.assertion.labels), v.assertion.expected,
                   v.status, v.p_value, v.statistic, v.dof, v.shots, v.seed, v.flags, hist, table,
                   list(v.deviations), v.note)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_value"] = _num(d["p_value"])
        d["statistic"] = _num(d["statistic"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerdictRecord":
        d = dict(d)
        d["p_value"] = _unnum(d["p_value"])
        d["statistic"] = _unnum(d["statistic"])
        return cls(**d)

    def text_line(self) -> str:
        loc = f"line {self.line}" if self.line is not None else f"#{self.index}"
        what = " ".join([self.kind, *self.registers] + ([str(self.expected)] if self.expected is not None else []))
        stat = "-" if self.statistic is None else f"{self.statistic:.4g}"
        dof = "-" if self.dof is None else str(self.dof)
        flags = f" [{', '.join(self.flags)}]" if self.flags else ""
        return f"{loc}: {what}  chi2={stat} dof={dof} p={self.p_value:.4g}  {self.status}{flags}"


def overall_status(statuses) -> str:
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INDETERMINATE in statuses:
        return INDETERMINATE
    return PASS


@dataclass(frozen=True)
class Report:
    target: str
    bug: str | None
    shots: int | None
    seed: int
    alpha: float
    verdicts: tuple[VerdictRecord, ...]
    histograms: dict[str, dict[str, int]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @classmethod
    def build(cls, target: str, verdicts, bug=None, shots=None, seed=0, alpha=0.05, histograms=None,
              warnings=()) -> "Report":
        records = tuple(VerdictRecord.from_verdict(i, v) for i, v in enumerate(verdicts))
        hists = {name: {str(k): c for k, c in h.items()} for name, h in (histograms or {}).items()}
        return cls(target, bug, shots, seed, alpha, records, hists, tuple(warnings))

    @property
    def status(self) -> str:
        return overall_status(v.status for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "target": self.target,
            "bug": self.bug,
            "shots": self.shots,
            "seed": self.seed,
            "alpha": self.alpha,
            "status": self.status,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "histograms": self.histograms,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["target"], d["bug"], d["shots"], d["seed"], d["alpha"],
                   tuple(VerdictRecord.from_dict(v) for v in d["verdicts"]), d["histograms"],
                   tuple(d.get("warnings", ())))

    def to_text(self) -> str:
        head = f"{self.target}" + (f" (bug: {self.bug})" if self.bug else "")
        shots = self.shots if self.shots is not None else "default"
        out = [f"{head}  shots={shots} seed={self.seed} alpha={self.alpha}"]
        out += [v.text_line() for v in self.verdicts]
        for name, hist in self.histograms.items():
            cells = ", ".join(f"{k}:{c}" for k, c in hist.items())
            out.append(f"histogram {name}: {{{cells}}}")
        for v in self.verdicts:
            if v.note and v.status != PASS:
                out.append(f"note (#{v.index}): {v.note}")
        out += [f"warning: {w}" for w in self.warnings]
        out.append(f"overall: {self.status}")
        return "\n".join(out) + "\n"


def render(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "text":
        return report.to_text()
    raise ValueError(f"unknown format {fmt!r}")
