"""Optional report figures.

Matplotlib is imported only when a figure is drawn, so the numerical
modules and the CSV outputs never depend on it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
COLUMN_WIDTH_IN = 6.0


def size(scale: float = 1.0, ratio: float = GOLDEN) -> tuple[float, float]:
    """Figure size in inches: ``scale`` of a column, height by ``ratio``."""
    w = COLUMN_WIDTH_IN * scale
    return (w, w * ratio)


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("figures need matplotlib; install the 'plots' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def new(scale: float = 1.0, nrows: int = 1, ncols: int = 1):
    plt = _pyplot()
    return plt.subplots(nrows=nrows, ncols=ncols, figsize=size(scale))


def save(fig, path: str | Path) -> Path:
    """Write ``path`` (png unless a suffix is given) and close the figure."""
    path = Path(path)
    if not path.suffix:
        path = path.with_suffix(".png")
    fig.savefig(path, bbox_inches="tight", dpi=150)
    _pyplot().close(fig)
    return path


def plot_suite(rows: list[dict], path) -> Path:
    """Horizontal bars of the max ratio per check, coloured by verdict."""
    colours = {"pass": "tab:green", "fail": "tab:red", "inconclusive": "tab:orange",
               "error": "tab:gray"}
    fig, ax = new(1.0)
    fig.set_size_inches(size(1.0, ratio=max(0.3, 0.12 * len(rows))))
    ys = np.arange(len(rows))
    vals = [r["max"] if isinstance(r.get("max"), (int, float)) else 0.0 for r in rows]
    ax.barh(ys, vals, color=[colours.get(r["verdict"], "k") for r in rows])
    ax.set_yticks(ys, [r["id"] for r in rows], fontsize=6)
    ax.set_xscale("symlog", linthresh=1.0)
    ax.set_xlabel("max ratio")
    ax.invert_yaxis()
    return save(fig, path)


def plot_diagnostics(diag, path) -> Path:
    """Picard increment norms and contraction ratios against the iteration."""
    fig, (a0, a1) = new(1.0, ncols=2)
    it = np.arange(1, len(diag.diff_norms) + 1)
    a0.semilogy(it, np.maximum(diag.diff_norms, 1e-300), "o-")
    a0.set_xlabel("iteration")
    a0.set_ylabel("increment norm")
    a1.plot(np.arange(2, len(diag.ratios) + 2), diag.ratios, "s-")
    a1.set_xlabel("iteration")
    a1.set_ylabel("contraction ratio")
    return save(fig, path)


def plot_block_norms(labels: list[str], values: np.ndarray, path) -> Path:
    fig, ax = new(0.8)
    ax.semilogy(np.arange(len(values)), np.maximum(values, 1e-300), ".")
    ax.set_xlabel("block (registry order)")
    ax.set_ylabel("block norm")
    return save(fig, path)
