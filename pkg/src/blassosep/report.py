"""Vector-graphics rendering of a separation run.

Left column: the mixture. Middle column: one panel per separated channel.
Right column: Frank-Wolfe spike trains as stems, when available. Output is
SVG and byte-identical for identical inputs.
"""

from __future__ import annotations

import matplotlib
from matplotlib.figure import Figure

__all__ = ["render_figure"]

_RC = {"svg.hashsalt": "blassosep", "svg.fonttype": "path", "font.size": 8}


def render_figure(path, b, x, spikes=None, labels=None):
    """Write the figure to ``path``.

    ``b`` is a GridSignal, ``x`` a MultiChannelSignal and ``spikes`` either
    ``None`` or one SparseMeasure per channel.
    """
    n = x.n
    labels = labels or [f"channel {i}" for i in range(n)]
    omega = b.grid.nodes
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(10.0, 1.8 * max(n, 2)))
        ncols = 3 if spikes is not None else 2
        gs = fig.add_gridspec(n, ncols)
        ax = fig.add_subplot(gs[:, 0])
        ax.plot(omega, b.values, color="black", lw=0.8)
        ax.set_title("mixture b")
        ax.set_xlabel("omega")
        for i in range(n):
            ax = fig.add_subplot(gs[i, 1])
            ax.plot(omega, x.values[i], color=f"C{i}", lw=0.8)
            ax.set_title(f"x{i + 1} ({labels[i]})")
            ax.set_xlim(omega[0], omega[-1])
            if spikes is not None:
                ax = fig.add_subplot(gs[i, 2])
                m = spikes[i]
                ax.axhline(0.0, color="grey", lw=0.5)
                if len(m):
                    ax.vlines(m.positions, 0.0, m.amplitudes, color=f"C{i}", lw=1.0)
                    ax.plot(m.positions, m.amplitudes, "o", color=f"C{i}", ms=3)
                ax.set_xlim(omega[0], omega[-1])
                ax.set_title(f"spikes {i + 1} (Frank-Wolfe)")
        if spikes is None:
            fig.text(0.99, 0.01, "no Frank-Wolfe spikes in this run", ha="right", va="bottom",
                     fontsize=7, color="grey")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
