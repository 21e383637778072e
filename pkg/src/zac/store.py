"""File-backed persistence: canonical model/report JSON, CSV export, run log."""

from __future__ import annotations

import csv
import io
import json
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

from .metrics import (
    CHARACTERISTICS, PRODUCT_LINE, TRADITIONAL, MetricsReport, MetricValue, label,
)
from .model import TABLES, CodeModel

MODEL_SCHEMA = "zac-model/1"
REPORT_SCHEMA = "zac-report/1"
REPORT_TABLE = "metrics"


class StoreError(Exception):
    pass


class SchemaVersionError(StoreError):
    pass


class IntegrityError(StoreError):
    pass


@contextmanager
def _open_out(path, newline=None):
    if str(path) == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline=newline)
    except OSError as exc:
        raise StoreError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise StoreError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise StoreError(f"{path} is not valid JSON: {exc}") from exc


def dumps_canonical(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# -- models ------------------------------------------------------------------

def model_to_doc(model: CodeModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "tables": {name: [asdict(row) for row in getattr(model, name)] for name in TABLES},
    }


def model_from_doc(doc, source="<document>") -> CodeModel:
    if not isinstance(doc, dict):
        raise StoreError(f"{source}: model document must be a JSON object")
    found = doc.get("schema")
    if found != MODEL_SCHEMA:
        raise SchemaVersionError(
            f"{source}: unsupported model schema {found!r}, expected {MODEL_SCHEMA!r}")
    tables = doc.get("tables") or {}
    model = CodeModel()
    for name, row_type in TABLES.items():
        names = [f.name for f in fields(row_type)]
        try:
            rows = [row_type(**{k: r[k] for k in names}) for r in tables.get(name, [])]
        except (KeyError, TypeError) as exc:
            raise StoreError(f"{source}: malformed row in table {name!r}: {exc}") from exc
        setattr(model, name, rows)
    problems = model.integrity_errors()
    if problems:
        raise IntegrityError(f"{source}: " + "; ".join(problems))
    return model


def save_model(model: CodeModel, path) -> None:
    with _open_out(path) as fh:
        fh.write(dumps_canonical(model_to_doc(model)))


def load_model(path) -> CodeModel:
    return model_from_doc(_read_json(path), str(path))


# -- reports -----------------------------------------------------------------

def _value_to_doc(v: MetricValue) -> dict:
    return {
        "name": v.name,
        "sum": v.aggregate_sum,
        "max": v.aggregate_max,
        "mean": v.aggregate_mean,
        "per_entity": {str(k): n for k, n in v.per_entity.items()},
    }


def _value_from_doc(d) -> MetricValue:
    return MetricValue(d["name"], {int(k): n for k, n in (d.get("per_entity") or {}).items()},
                       d["sum"], d.get("max"), d.get("mean"))


def report_to_doc(report: MetricsReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "model_path": report.model_path,
        "plan_name": report.plan_name,
        "characteristics": dict(report.characteristics),
        "traditional": {k: _value_to_doc(v) for k, v in report.traditional.items()},
        "product_line": {k: _value_to_doc(v) for k, v in report.product_line.items()},
    }


def report_from_doc(doc, source="<document>") -> MetricsReport:
    if not isinstance(doc, dict) or doc.get("schema") != REPORT_SCHEMA:
        found = doc.get("schema") if isinstance(doc, dict) else None
        raise SchemaVersionError(
            f"{source}: unsupported report schema {found!r}, expected {REPORT_SCHEMA!r}")
    try:
        return MetricsReport(
            characteristics={k: doc["characteristics"][k] for k in CHARACTERISTICS
                             if k in doc.get("characteristics", {})},
            traditional={k: _value_from_doc(doc["traditional"][k]) for k in TRADITIONAL
                         if k in doc.get("traditional", {})},
            product_line={k: _value_from_doc(doc["product_line"][k]) for k in PRODUCT_LINE
                          if k in doc.get("product_line", {})},
            model_path=doc.get("model_path", ""),
            plan_name=doc.get("plan_name", ""),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise StoreError(f"{source}: malformed report: {exc}") from exc


def save_report(report: MetricsReport, path) -> None:
    with _open_out(path) as fh:
        fh.write(dumps_canonical(report_to_doc(report)))


def load_report(path) -> MetricsReport:
    return report_from_doc(_read_json(path), str(path))


# -- CSV ---------------------------------------------------------------------

def table_names() -> list[str]:
    return [*TABLES, REPORT_TABLE]


def _rows(obj, table_name):
    if isinstance(obj, MetricsReport):
        if table_name != REPORT_TABLE:
            raise StoreError(f"unknown report table {table_name!r}; valid: {REPORT_TABLE}")
        header = ["family", "name", "label", "value", "max", "mean"]
        rows = [["characteristic", k, label(k), v, "", ""]
                for k, v in obj.characteristics.items()]
        for family, group in (("traditional", obj.traditional),
                              ("product_line", obj.product_line)):
            for v in group.values():
                rows.append([family, v.name, v.name, v.aggregate_sum,
                             "" if v.aggregate_max is None else v.aggregate_max,
                             "" if v.aggregate_mean is None else repr(v.aggregate_mean)])
        return header, rows
    if table_name not in TABLES:
        raise StoreError(f"unknown table {table_name!r}; valid: {', '.join(TABLES)}")
    header = [f.name for f in fields(TABLES[table_name])]
    rows = [["" if (x := getattr(r, h)) is None else x for h in header]
            for r in getattr(obj, table_name)]
    return header, rows


def export_csv(obj: CodeModel | MetricsReport, table_name: str, path) -> None:
    """Write one table as RFC 4180 CSV (CRLF line endings, header row)."""
    header, rows = _rows(obj, table_name)
    with _open_out(path, newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def csv_text(obj, table_name: str) -> str:
    header, rows = _rows(obj, table_name)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# -- run log -----------------------------------------------------------------

@dataclass(frozen=True)
class MetricsRun:
    run_id: int
    timestamp: str
    model_path: str
    plan_name: str
    report: MetricsReport


def utc_now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def list_runs(store_path) -> list[MetricsRun]:
    path = Path(store_path)
    if not path.exists():
        return []
    runs = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise StoreError(f"cannot read {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            runs.append(MetricsRun(int(d["run_id"]), d["timestamp"], d["model_path"],
                                   d["plan_name"], report_from_doc(d["report"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, StoreError) as exc:
            raise StoreError(f"{path}:{lineno}: corrupt run record ({exc})") from exc
    return sorted(runs, key=lambda r: r.run_id)


def record_run(store_path, report: MetricsReport, timestamp: str | None = None) -> int:
    """Append a run to the JSON-lines log and return its id."""
    runs = list_runs(store_path)
    run_id = 1 + max((r.run_id for r in runs), default=0)
    record = {
        "run_id": run_id,
        "timestamp": timestamp or utc_now(),
        "model_path": report.model_path,
        "plan_name": report.plan_name,
        "report": report_to_doc(report),
    }
    try:
        with open(store_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise StoreError(f"cannot write {store_path}: {exc.strerror}") from exc
    return run_id
