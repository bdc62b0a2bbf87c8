#!/usr/bin/env python3
"""Render the experiment CSVs from an output directory into PNGs.

Usage: python3 scripts/plot_report.py [out_dir]

Produces, next to the CSVs:
  probe.png      per-hour AUC of each strategy's final checkpoint
  hour_dist.png  hourly mood-tag impression shares
  telemetry.png  running training loss per strategy
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_probe(out: Path) -> None:
    df = pd.read_csv(out / "probe.csv", na_values=["NA"])
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for strategy, grp in df.groupby("strategy"):
        ax.plot(grp["eval_hour"], grp["auc"], marker="o", label=strategy)
    ax.set_xlabel("evaluation hour of day")
    ax.set_ylabel("AUC")
    ax.set_title("Per-hour AUC of the final checkpoint")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "probe.png", dpi=120)


def plot_hour_dist(out: Path) -> None:
    df = pd.read_csv(out / "hour_dist.csv")
    moods = df[df["facet"] == "mood"]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for tag, grp in moods.groupby("tag"):
        ax.plot(grp["hour"], grp["percent"], marker=".", label=tag)
    ax.set_xlabel("hour of day")
    ax.set_ylabel("share of impressions (%)")
    ax.set_title("Hourly mood-tag impression shares")
    ax.legend(ncol=2, fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "hour_dist.png", dpi=120)


def plot_telemetry(out: Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    any_found = False
    for path in sorted(out.glob("telemetry-*.csv")):
        df = pd.read_csv(path)
        if df.empty:
            continue
        any_found = True
        ax.plot(df["step"], df["running_loss"], label=df["strategy"].iloc[0])
    if not any_found:
        return
    ax.set_xlabel("training step")
    ax.set_ylabel("running loss")
    ax.set_title("Streaming training loss")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "telemetry.png", dpi=120)


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out")
    if not out.is_dir():
        print(f"not a directory: {out}", file=sys.stderr)
        return 2
    plot_probe(out)
    plot_hour_dist(out)
    plot_telemetry(out)
    print(f"wrote plots to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
