"""Metric report JSON and fixed-width table rendering."""
from __future__ import annotations

import json

# (table header, report key)
COLUMNS = (
    ("R1@0.5", "R1@0.5"),
    ("R1@0.7", "R1@0.7"),
    ("mAP@0.5", "mAP@0.5"),
    ("mAP@0.75", "mAP@0.75"),
    ("Avg.", "mAP@Avg"),
    ("HD mAP", "HD mAP"),
    ("HIT@1", "HIT@1"),
)
REPORT_KEYS = tuple(k for _, k in COLUMNS) + ("accuracy", "WUPS@0.9")
WIDTH = 9


def make_report(retrieval: dict, qa: dict | None = None, n_queries: int = 0) -> dict:
    """Full report with every metric key present; unavailable metrics are ``None``."""
    report = {k: None for k in REPORT_KEYS}
    report.update({k: float(v) for k, v in retrieval.items() if k in report})
    if qa:
        report.update({k: float(v) for k, v in qa.items() if k in report})
    report["n_queries"] = n_queries
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _cell(value) -> str:
    text = "-" if value is None else f"{100.0 * value:.2f}"
    return text.rjust(WIDTH)


def report_render(report: dict, label: str | None = None, label_width: int = 0) -> str:
    """Two-line table (header and values) with metrics as percentages."""
    head = "".join(h.rjust(WIDTH) for h, _ in COLUMNS)
    row = "".join(_cell(report.get(k)) for _, k in COLUMNS)
    if label is not None or label_width:
        width = max(label_width, len(label or ""))
        head = "".ljust(width) + head
        row = (label or "").ljust(width) + row
    return head + "\n" + row + "\n"


def parse_report_table(text: str) -> dict:
    """Inverse of :func:`report_render` for the numeric columns (fractions, 4 decimals)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2:
        raise ValueError("expected a header line and a value line")
    cells = lines[1][-WIDTH * len(COLUMNS):]
    out = {}
    for i, (_, key) in enumerate(COLUMNS):
        cell = cells[i * WIDTH:(i + 1) * WIDTH].strip()
        out[key] = None if cell == "-" else round(float(cell) / 100.0, 4)
    return out


def render_ablation(rows: list[tuple[str, dict]]) -> str:
    """Stacked table with one labelled row per variant."""
    width = max(len(label) for label, _ in rows) + 2
    lines = [report_render(rows[0][1], "", width).splitlines()[0]]
    for label, report in rows:
        lines.append(report_render(report, label, width).splitlines()[1])
    return "\n".join(lines) + "\n"
