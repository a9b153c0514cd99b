"""Report rows and their JSON / CSV / text-table renderings.

Rows are plain dicts keyed by column name.  JSON keeps full precision so a
saved report can be re-rendered; CSV and tables print GB/s-style values to
three decimals and percentages to one.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from .emulator import EmulationCounters
from .geometry import BlockingConfig
from .model import PerfEstimate

ESTIMATE_COLUMNS = [
    "bsize", "par_vec", "par_time", "dim", "estimated_gbps", "gflops", "gcells",
    "th_mem", "run_time", "passes", "f_max_mhz", "dsp_pct", "bram_bits_pct",
    "used_bw_pct", "calibration", "measured_gbps", "model_accuracy", "warnings",
]
EMULATE_COLUMNS = [
    "bsize", "par_vec", "par_time", "dim", "iter", "passes", "ext_reads", "ext_writes",
    "t_read", "t_write", "redundant_updates", "oob_updates", "forwarded_cells",
    "unaligned_block_starts", "dry_run", "verified", "seed", "warnings",
]
COLUMNS = {"model": ESTIMATE_COLUMNS, "tune": ESTIMATE_COLUMNS, "project": ESTIMATE_COLUMNS,
           "emulate": EMULATE_COLUMNS}

HEADERS = {
    "estimated_gbps": "Estimated Performance (GB/s)",
    "gflops": "GFLOP/s", "gcells": "GCell/s", "th_mem": "th_mem (GB/s)",
    "run_time": "run_time (s)", "f_max_mhz": "f_max (MHz)", "dsp_pct": "DSP %",
    "bram_bits_pct": "BRAM bits %", "used_bw_pct": "Used BW %",
    "measured_gbps": "Measured (GB/s)", "model_accuracy": "Model Accuracy %",
}

_THREE = {"estimated_gbps", "gflops", "gcells", "th_mem", "measured_gbps"}
_PCT = {"dsp_pct", "bram_bits_pct", "used_bw_pct", "model_accuracy"}


class ReportError(ValueError):
    pass


def dim_label(dims: Sequence[int]) -> str:
    return str(dims[0]) if len(set(dims)) == 1 else "x".join(str(d) for d in dims)


def estimate_row(config: BlockingConfig, dims, est: PerfEstimate, **extra) -> dict:
    row = {
        "bsize": config.bsize_x, "par_vec": config.par_vec, "par_time": config.par_time,
        "dim": dim_label(dims), "estimated_gbps": est.eff_gbps, "gflops": est.gflops,
        "gcells": est.gcells, "th_mem": est.th_mem, "run_time": est.run_time,
        "passes": est.passes, "f_max_mhz": est.f_max / 1e6,
        "calibration": est.calibrated,
    }
    row.update(extra)
    return {c: row.get(c) for c in ESTIMATE_COLUMNS}


def emulate_row(config: BlockingConfig, dims, iterations, counters: EmulationCounters,
                t_read: int, t_write: int, **extra) -> dict:
    row = {"bsize": config.bsize_x, "par_vec": config.par_vec, "par_time": config.par_time,
           "dim": dim_label(dims), "iter": iterations, "t_read": t_read, "t_write": t_write,
           **counters.to_dict()}
    row.update(extra)
    return {c: row.get(c) for c in EMULATE_COLUMNS}


def _fmt(col, val) -> str:
    if val is None:
        return ""
    if isinstance(val, bool):
        return "true" if val else "false"
    if col in _THREE:
        return f"{val:.3f}"
    if col in _PCT:
        return f"{val:.1f}"
    if col == "run_time":
        return f"{val:.5f}"
    if col in ("f_max_mhz", "calibration"):
        return f"{val:.2f}"
    if isinstance(val, (list, tuple)):
        return "; ".join(str(v) for v in val)
    return str(val)


def emit_report(results: list[dict], fmt: str = "table", kind: str = "model",
                experiment: dict | None = None) -> str:
    """Render result rows; identical inputs give identical text."""
    if not results:
        raise ReportError("nothing to report")
    if kind not in COLUMNS:
        raise ReportError(f"unknown report kind {kind!r}")
    cols = COLUMNS[kind]
    if fmt == "json":
        doc = {"kind": kind, "experiment": experiment, "results": results}
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in results:
            w.writerow([_fmt(c, r.get(c)) for c in cols])
        return buf.getvalue()
    if fmt == "table":
        shown = [c for c in cols if any(r.get(c) not in (None, [], "") for r in results)]
        head = [HEADERS.get(c, c) for c in shown]
        body = [[_fmt(c, r.get(c)) for c in shown] for r in results]
        widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(head)]
        line = "+".join("-" * (w + 2) for w in widths)
        out = [" | ".join(h.rjust(w) for h, w in zip(head, widths)), line]
        out += [" | ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
        return "\n".join(out) + "\n"
    raise ReportError(f"unsupported format {fmt!r} (json, csv, table)")


def load_report(text: str) -> tuple[str, dict | None, list[dict]]:
    doc = json.loads(text)
    if not isinstance(doc, dict) or "results" not in doc or "kind" not in doc:
        raise ReportError("not a saved JSON report")
    return doc["kind"], doc.get("experiment"), doc["results"]
