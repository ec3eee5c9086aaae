"""
report_io.py - CSV reports
--------------------------
Every CSV starts with '# scenario_digest: <sha256>' (plus optional '# key: value'
comment lines) followed by a header row. Files are written to a temporary file in
the target directory and moved into place with os.replace.

compare_reports lines up the rate columns of several reports against a simulator
baseline.
"""
import logging
import os
import tempfile
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.errors import ConfigError, DigestMismatch

logger = logging.getLogger(__name__)

DIGEST_KEY = "scenario_digest"
RATE_COLUMNS = ("analytic_indep", "analytic_uniform", "sim_sinr_pfs", "sim_rate_pfs",
                "sim_opportunistic", "gaussian", "ian", "naive")
DEFAULT_BASELINE = "sim_sinr_pfs"


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_report(df: pd.DataFrame, path: str, digest: str, meta: Optional[Dict[str, str]] = None):
    lines = [f"# {DIGEST_KEY}: {digest}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    body = df.to_csv(index=False, lineterminator="\n")
    atomic_write_text(path, "\n".join(lines) + "\n" + body)
    logger.info("Wrote %s (%d rows)", path, len(df))


def read_report(path: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """(table, comment metadata); the metadata always holds the scenario digest"""
    if not os.path.isfile(path):
        raise ConfigError(f"no such report '{path}'", key="report")
    meta: Dict[str, str] = {}
    skip = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            skip += 1
    if DIGEST_KEY not in meta:
        raise ConfigError(f"'{path}' has no '# {DIGEST_KEY}:' line", key="report")
    return pd.read_csv(path, skiprows=skip), meta


def rate_columns(df: pd.DataFrame, meta: Dict[str, str]) -> pd.DataFrame:
    """Per-terminal rate columns of a report; simulator aggregates become sim_<scheduler>"""
    if "terminal" not in df.columns:
        raise ConfigError("report has no 'terminal' column", key="report")
    if "mean_rate_bps" in df.columns:
        name = f"sim_{meta.get('scheduler', 'sinr_pfs')}"
        return df[["terminal", "mean_rate_bps"]].rename(columns={"mean_rate_bps": name})
    present = [c for c in RATE_COLUMNS if c in df.columns]
    return df[["terminal"] + present]


def check_digests(metas: Sequence[Dict[str, str]], paths: Sequence[str]) -> str:
    digests = {m[DIGEST_KEY] for m in metas}
    if len(digests) != 1:
        detail = ", ".join(f"{p}={m[DIGEST_KEY][:12]}" for p, m in zip(paths, metas))
        raise DigestMismatch(f"reports come from different scenarios ({detail})")
    return digests.pop()


def compare_reports(paths: Sequence[str], baseline: str = DEFAULT_BASELINE) -> Tuple[pd.DataFrame, pd.DataFrame, str]:
    """
    (per-terminal comparison, summary, digest). Relative error of every rate column
    against the baseline column: (model - baseline) / baseline.
    """
    if not paths:
        raise ConfigError("need at least one report", key="reports")
    loaded = [read_report(p) for p in paths]
    digest = check_digests([m for _, m in loaded], paths)

    merged: Optional[pd.DataFrame] = None
    for k, (df, meta) in enumerate(loaded):
        rates = rate_columns(df, meta)
        if merged is None:
            merged = rates
            continue
        # repeated columns from later reports are kept as <column>_<report index>
        rates = rates.rename(columns={c: f"{c}_{k}" for c in rates.columns
                                      if c != "terminal" and c in merged.columns})
        merged = merged.merge(rates, on="terminal", how="outer")
    merged = merged.sort_values("terminal").reset_index(drop=True)

    if baseline not in merged.columns:
        raise ConfigError(f"baseline column '{baseline}' is in none of the reports", key="baseline")
    models = [c for c in merged.columns if c not in ("terminal", baseline)]
    base = merged[baseline].to_numpy(dtype=float)
    rows: List[Dict] = []
    for col in models:
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = (merged[col].to_numpy(dtype=float) - base) / base
        merged[f"rel_err_{col}"] = rel
        rows.append({"model": col, "baseline": baseline,
                     "mean_abs_rel_err": float(np.nanmean(np.abs(rel))) if np.any(np.isfinite(rel)) else np.nan,
                     "max_abs_rel_err": float(np.nanmax(np.abs(rel))) if np.any(np.isfinite(rel)) else np.nan})
    summary = pd.DataFrame(rows, columns=["model", "baseline", "mean_abs_rel_err", "max_abs_rel_err"])
    return merged, summary, digest


__all__ = [
    "atomic_write_text", "write_report", "read_report", "rate_columns", "check_digests", "compare_reports",
]
