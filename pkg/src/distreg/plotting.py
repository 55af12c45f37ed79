"""Log-log plots of rate tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_rate_table(table, path, title: str | None = None) -> None:
    """Replicate errors, per-n medians, fitted line and theory reference."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    pts = [(r["n"], r["error"]) for r in table.rows
           if np.isfinite(r["error"]) and r["error"] > 0]
    if pts:
        n, e = np.array(pts).T
        ax.scatter(n, e, s=10, alpha=0.35, color="tab:blue", label="replicates")
    med = {n: m for n, m in table.medians().items() if np.isfinite(m) and m > 0}
    if med:
        ns = np.array(list(med), dtype=float)
        ms = np.array(list(med.values()))
        ax.plot(ns, ms, "o", color="tab:red", label="median")
        slope, _ = table.slope_fit
        if np.isfinite(slope):
            c = np.exp(np.mean(np.log(ms) - slope * np.log(ns)))
            ax.plot(ns, c * ns ** slope, "-", color="tab:red", label=f"fit {slope:.2f}")
        th = table.theory_exponent
        if np.isfinite(th):
            c = np.exp(np.mean(np.log(ms) + th * np.log(ns)))
            ax.plot(ns, c * ns ** -th, "--", color="gray", label=f"theory {-th:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
