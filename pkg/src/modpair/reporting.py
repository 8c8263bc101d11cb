"""Report serialization: one CSV per table plus a JSON summary.

CSV content is a pure function of (config, seed) — floats are written with
repr precision, similarities at the wire's six decimal places, and nothing
time- or host-dependent goes in. summary.json additionally carries the
"runtime" block, which is the one part allowed to differ between reruns.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import SchemaError
from .experiments import ExperimentReport

# Fixed column orders so rerenders are stable even if row dicts gain keys.
TABLE_COLUMNS = {
    "crossmatrix": ["trained_on", "tested_on", "macro_f1"],
    "modpair": [
        "instance",
        "local_macro_f1",
        "ensemble_macro_f1",
        "selected",
        "pool",
        "p_at_1",
        "p_at_3",
        "p_at_1_fullpool",
        "p_at_3_fullpool",
    ],
    "pairing": ["instance", "rank", "peer", "similarity", "selected", "pool"],
    "messages": ["metric", "count", "expected"],
    "noise": [
        "seed",
        "mode",
        "level",
        "instance",
        "flips",
        "clean_local_macro_f1",
        "noisy_local_macro_f1",
        "local_degradation",
        "clean_ensemble_macro_f1",
        "noisy_ensemble_macro_f1",
        "ensemble_degradation",
    ],
    "budget": [
        "seed",
        "instance",
        "mode",
        "n_requested",
        "n_used",
        "clipped",
        "macro_f1",
        "error",
    ],
    "budget_baseline": ["seed", "instance", "train_pool", "macro_f1"],
    "models": ["instance", "trainer", "train_size", "vocabulary_size", "final_loss", "size_bytes"],
}

_COLUMN_FORMATS = {"similarity": "{:.6f}"}


def format_cell(column: str, value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        fmt = _COLUMN_FORMATS.get(column)
        return fmt.format(value) if fmt else repr(value)
    return str(value)


def write_table(rows: list[dict], name: str, out_dir: Path) -> Path:
    columns = TABLE_COLUMNS.get(name) or sorted({k for r in rows for k in r})
    path = out_dir / f"{name}.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(c, row.get(c)) for c in columns])
    return path


def write_report(
    report: ExperimentReport, out_dir: str | Path, figures: bool = True
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in report.tables.items():
        written.append(write_table(rows, name, out))
    summary = {
        "experiment": report.name,
        "seed": report.seed,
        "config": report.config,
        **report.summary,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(summary_path)
    if figures:
        from . import figures as fig_mod

        written.extend(fig_mod.render_tables(report.tables, out))
    return written


def read_table(path: str | Path) -> list[dict]:
    """Read a report CSV back into row dicts, recovering numeric types."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such report table: {path}")
    rows = []
    with path.open(encoding="utf-8", newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                if value == "":
                    row[key] = None
                elif value in ("true", "false"):
                    row[key] = value == "true"
                else:
                    try:
                        row[key] = int(value)
                    except ValueError:
                        try:
                            row[key] = float(value)
                        except ValueError:
                            row[key] = value
            rows.append(row)
    return rows
