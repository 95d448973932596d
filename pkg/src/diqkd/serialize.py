"""Bit-stable CSV/JSON emission for campaign tables, histograms, family
sweeps and envelope points.

Numbers are serialized with 12 significant digits; undefined values become
an empty CSV field / JSON null, never a NaN literal.  Row and key orders are
fixed, so identical inputs yield byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .campaign import CampaignSummary, Histogram, RankSummary

TABLE1_COLUMNS = (
    "rank", "n_total", "n_entangled", "n_bell_nonlocal", "n_pos_osca", "n_pos_ca",
    "avg_r_osca", "avg_r_ca", "poisson_lo_ca", "poisson_hi_ca",
)
HIST_COLUMNS = ("bin_lower", "bin_upper", "count", "normalized")
FAMILY_COLUMNS = ("negativity", "keyrate_closed_form", "keyrate_pipeline", "abs_diff")
FAMILY_RANK2_COLUMNS = (
    "negativity", "p1", "alpha", "a", "a_prime", "constraint_residual",
    "keyrate_closed_form", "keyrate_pipeline", "abs_diff",
)
ENVELOPE_COLUMNS = ("rank", "negativity", "r_state", "r_pure_bound", "r_werner_bound", "inside")
RAW_SAMPLE_COLUMNS = (
    "rank", "sample_index", "negativity", "log_negativity", "chsh", "qber",
    "osca_raw", "ca_raw", "positive_osca", "positive_ca",
)


def fmt_number(x) -> str:
    """12-significant-digit text form; empty string for undefined."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    xf = float(x)
    if math.isnan(xf):
        return ""
    return f"{xf:.12g}"


def json_ready(x):
    """Round floats to 12 significant digits, map NaN to null, recurse containers."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float):
        return None if math.isnan(x) else float(f"{x:.12g}")
    if isinstance(x, dict):
        return {str(k): json_ready(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_ready(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return json_ready(x.item())
    return x


def rows_to_csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_number(row.get(c)) for c in columns])
    return buf.getvalue()


def write_records(path: Path, columns, rows, fmt: str) -> Path:
    """Write one record set as CSV or JSON; returns the path actually written."""
    path = Path(path)
    rows = [row if isinstance(row, dict) else dict(zip(columns, row)) for row in rows]
    if fmt == "csv":
        out = path.with_suffix(".csv")
        out.write_text(rows_to_csv_text(columns, rows), encoding="utf-8")
    elif fmt == "json":
        out = path.with_suffix(".json")
        payload = [{c: json_ready(r.get(c)) for c in columns} for r in rows]
        out.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return out


def parse_records(path: Path) -> list[dict]:
    """Round-trip reader for files produced by write_records."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            parsed = {}
            for k, v in row.items():
                if v == "":
                    parsed[k] = None
                elif v in ("true", "false"):
                    parsed[k] = v == "true"
                else:
                    try:
                        fv = float(v)
                        parsed[k] = int(fv) if fv.is_integer() and "." not in v and "e" not in v else fv
                    except ValueError:
                        parsed[k] = v
            out.append(parsed)
    return out


def table1_rows(summary: CampaignSummary) -> list[dict]:
    rows = []
    for rs in summary.ranks:
        rows.append({
            "rank": rs.rank,
            "n_total": rs.n_total,
            "n_entangled": rs.n_entangled,
            "n_bell_nonlocal": rs.n_bell_nonlocal,
            "n_pos_osca": rs.n_positive_osca,
            "n_pos_ca": rs.n_positive_ca,
            "avg_r_osca": rs.avg_r_osca,
            "avg_r_ca": rs.avg_r_ca,
            "poisson_lo_ca": rs.ca_poisson_95[0],
            "poisson_hi_ca": rs.ca_poisson_95[1],
        })
    return rows


def hist_rows(hist: Histogram) -> list[dict]:
    rows = []
    for i, count in enumerate(hist.counts):
        rows.append({
            "bin_lower": hist.edges[i],
            "bin_upper": hist.edges[i + 1],
            "count": count,
            "normalized": count / hist.n_total,
        })
    return rows


def summary_payload(summary: CampaignSummary) -> dict:
    """JSON summary with config echo; deliberately excludes timing so files
    from identical configs are byte-identical."""
    cfg = summary.config
    return json_ready({
        "config": {
            "samples_per_rank": cfg.samples_per_rank,
            "seed": cfg.seed,
            "ranks": list(cfg.ranks),
            "bins_ln": cfg.bins_ln,
            "bins_bell": cfg.bins_bell,
            "attack_modes": list(cfg.attack_modes),
            "security_counting_rule": cfg.security_counting_rule,
            "ln_thresholds": list(cfg.ln_thresholds),
            "chsh_thresholds": list(cfg.chsh_thresholds),
        },
        "ranks": [
            {
                "rank": rs.rank,
                "n_total": rs.n_total,
                "n_entangled": rs.n_entangled,
                "n_bell_nonlocal": rs.n_bell_nonlocal,
                "n_positive_osca": rs.n_positive_osca,
                "n_positive_ca": rs.n_positive_ca,
                "avg_r_osca": rs.avg_r_osca,
                "avg_r_ca": rs.avg_r_ca,
                "ca_poisson_95": list(rs.ca_poisson_95),
                "ln_ge_counts": {str(k): v for k, v in rs.ln_ge_counts.items()},
                "chsh_ge_counts": {str(k): v for k, v in rs.chsh_ge_counts.items()},
                "ln_histogram": hist_rows(rs.ln_histogram),
                "bell_histogram": hist_rows(rs.bell_histogram),
            }
            for rs in summary.ranks
        ],
    })


def write_campaign_outputs(summary: CampaignSummary, out_dir: Path, fmt: str) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_records(out_dir / "table1", TABLE1_COLUMNS, table1_rows(summary), fmt)]
    for rs in summary.ranks:
        written.append(write_records(out_dir / f"ln_hist_r{rs.rank}", HIST_COLUMNS,
                                     hist_rows(rs.ln_histogram), fmt))
        written.append(write_records(out_dir / f"bell_hist_r{rs.rank}", HIST_COLUMNS,
                                     hist_rows(rs.bell_histogram), fmt))
    spath = out_dir / "summary.json"
    spath.write_text(json.dumps(summary_payload(summary), indent=1) + "\n", encoding="utf-8")
    written.append(spath)
    return written
