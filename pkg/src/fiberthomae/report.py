"""Serialization of check reports: a JSON list plus a CSV summary."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

SUMMARY_FIELDS = ("name", "instance", "status", "worst_ratio", "wall_time", "reason")


def reports_to_json(reports, drop_timings: bool = False) -> list:
    out = []
    for r in reports:
        d = r.to_json()
        if drop_timings:
            d.pop("wall_time", None)
        out.append(d)
    return out


def worst_ratio(report) -> float | None:
    """Largest residual / tolerance (``inf`` for a non-zero residual
    against tolerance 0); ``None`` when there is nothing to compare."""
    vals = []
    for k, t in report.tolerances.items():
        r = report.residuals.get(k)
        if r is None:
            continue
        if t > 0:
            vals.append(r / t)
        else:
            vals.append(0.0 if r <= 0 else float("inf"))
    return max(vals) if vals else None


def summary_rows(reports) -> list:
    rows = []
    for r in reports:
        w = worst_ratio(r)
        rows.append({
            "name": r.name,
            "instance": r.instance,
            "status": r.status,
            "worst_ratio": "" if w is None else f"{w:.6e}",
            "wall_time": f"{r.wall_time:.3f}",
            "reason": r.reason,
        })
    return rows


def summary_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(summary_rows(reports))
    return buf.getvalue()


def write_reports(reports, path) -> tuple[Path, Path]:
    """Write ``path`` (JSON) and the CSV summary next to it."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(reports_to_json(reports), indent=2) + "\n")
    c = p.with_suffix(".csv")
    c.write_text(summary_csv(reports))
    return p, c


def exit_code(reports) -> int:
    """3 if any check hit a numerical failure, else 1 if any failed, else 0."""
    codes = [r.provenance.get("exit_code", 3) for r in reports if r.status == "error"]
    if codes:
        return max(codes)
    return 1 if any(r.status == "fail" for r in reports) else 0
