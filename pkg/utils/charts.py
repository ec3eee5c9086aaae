"""
charts.py - SVG line charts of report columns and density curves
"""
import logging
import os
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)


def line_chart(path: str, x: Sequence[float], series: Dict[str, Sequence[float]], xlabel: str, ylabel: str,
               title: Optional[str] = None, logx: bool = False, steps: Optional[Dict[str, bool]] = None):
    """One line per series; steps marks series drawn as histograms"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        for label, y in series.items():
            if steps and steps.get(label):
                ax.step(x[:len(y)], y, where="post", label=label)
            else:
                ax.plot(x[:len(y)], y, marker="o" if len(y) <= 40 else None, markersize=3, label=label)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    logger.info("Wrote chart %s", path)


def rate_chart(path: str, report, columns: Sequence[str], title: Optional[str] = None):
    """Rates in Mbit/s against the terminal index, one line per report column"""
    series = {c: report[c].to_numpy() / 1e6 for c in columns if c in report.columns}
    line_chart(path, report["terminal"].to_numpy(), series, "terminal", "rate [Mbit/s]", title)


def density_chart(path: str, curves, title: Optional[str] = None):
    """Scheduled-SINR densities against SINR in dB"""
    x = curves["sinr_db"].to_numpy()
    columns = [c for c in curves.columns if c not in ("sinr", "sinr_db")]
    series = {c: curves[c].to_numpy() for c in columns}
    line_chart(path, x, series, "SINR [dB]", "density (per linear SINR)", title,
               steps={c: c.startswith("sim") for c in columns})


__all__ = ["line_chart", "rate_chart", "density_chart"]
