"""Figure rendering for scan output: the four headline fidelity curves as a
function of the tilt parameter, written next to the CSV.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

CURVES = [
    ("F_prot", "tab:red", "sequential protocol"),
    ("F_overlap", "tab:blue", "plain overlap"),
    ("F_triv_ub", "gold", "common-intermediate bound"),
    ("F_bisep_1", "tab:green", "best biseparable (1|rest)"),
]


def render_scan_figure(rows: Iterable[dict], path: Path) -> Path:
    """Render the scan rows to a PNG and return the path."""
    rows = sorted(rows, key=lambda r: r["lambda"])
    lam = [r["lambda"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for key, color, label in CURVES:
        ax.plot(lam, [r[key] for r in rows], color=color, label=label, lw=1.6)
    ax.set_xlabel(r"tilt parameter $\lambda$")
    ax.set_ylabel("fidelity")
    ax.set_xlim(min(lam), max(lam))
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.25, lw=0.5)
    ax.legend(loc="lower right", fontsize=9)
    fig.tight_layout()
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path
