"""Static figures written next to the CSV exports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# line styles follow the published figures: fig1 packet dotted, Z=1 dashed,
# Z(x) solid; fig2 packet solid, Ehrenfest dashed
STYLES = {
    "fig1": {"wp": ":", "ea_z1": "--", "ea_z": "-", "bare": "-."},
    "fig2": {"wp": "-", "bare": "--", "ea_z1": ":", "ea_z": "-."},
}
LABELS = {
    "wp": r"wave packet $\langle x\rangle$, $\langle p\rangle$",
    "ea_z1": r"$V_{\rm eff}$, $Z_{\rm eff}=1$",
    "ea_z": r"$V_{\rm eff}$, $Z_{\rm eff}(x)$",
    "bare": r"Ehrenfest in $V_{\rm dp}$",
}


def publication_style(width=6.0, height=None):
    """Figure with journal-like fonts; height defaults to width times the golden ratio."""
    golden = (5**0.5 - 1.0) / 2.0
    height = height or width * golden
    plt.rcParams.update({
        "font.size": 11,
        "axes.labelsize": 12,
        "legend.fontsize": 9,
        "lines.linewidth": 1.4,
        "savefig.dpi": 150,
    })
    return plt.subplots(figsize=(width, height))


def phase_space_figure(art, path) -> dict:
    """x-v diagram of the packet mean and every classical curve, over the comparison window."""
    styles = STYLES.get(art.config.name, STYLES["fig1"])
    t0, t1 = art.summary["window_start"], art.summary["window_end"]
    fig, ax = publication_style()
    s = art.series
    m = (s.times >= t0) & (s.times <= t1)
    ax.plot(s.x_mean[m], s.v_mean[m], styles["wp"], color="k", label=LABELS["wp"])
    for mode, tr in art.trajectories.items():
        mm = (tr.times >= t0) & (tr.times <= t1)
        ax.plot(tr.x[mm], tr.v[mm], styles[mode], label=LABELS[mode])
    lam = art.summary["lambda"]
    ax.set_title(f"Phase space trajectories, $\\lambda$ = {lam}" if lam != "none" else "Phase space trajectories")
    ax.set_xlabel("$x$")
    ax.set_ylabel(r"$v=\dot x$")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return {"file": path.name, "rows": None, "columns": None, "kind": "figure"}


def effective_potential_figure(table, pot, path) -> dict:
    """V_eff against the bare potential, with Z_eff on a twin axis."""
    import numpy as np

    x = np.linspace(table.x_lo, table.x_hi, 400)
    fig, ax = publication_style()
    ax.plot(x, table._veff_interp(x), "-", label=r"$V_{\rm eff}$")
    ax.plot(x, pot.value(x), "--", label=r"$V_{\rm dp}$")
    ax.set_xlabel("$x$")
    ax.set_ylabel("energy")
    ax2 = ax.twinx()
    ax2.plot(x, table._zeff_interp(x), ":", color="C3", label=r"$Z_{\rm eff}$")
    ax2.set_ylabel(r"$Z_{\rm eff}$")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, loc="upper center", frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return {"file": path.name, "rows": None, "columns": None, "kind": "figure"}
