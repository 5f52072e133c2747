"""Figure rendering for the CLI report path.

Each report mode gets one PNG next to its CSV.  Figures are derived from the
same row dictionaries that feed the CSV writer; nothing is ever read back
from a figure.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "tmsv": {"color": "tab:blue"},
    "tps": {"color": "tab:red"},
    "tpa": {"color": "tab:green"},
}
_DASHES = ["-", "--", "-.", ":"]


def _curve_label(scheme, n_photons):
    return scheme if scheme == "tmsv" else f"{scheme} N={n_photons}"


def rate_figure(rows, path, title):
    """Semilog rate-vs-attenuation curves per (scheme, N), bound overlaid."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    curves = {}
    for row in rows:
        curves.setdefault((row["scheme"], row["N"]), []).append(row)
    for (scheme, n_photons), pts in sorted(curves.items()):
        pts = sorted(pts, key=lambda r: r["attenuation_db"])
        att = [p["attenuation_db"] for p in pts]
        rate = [max(p["rate"], 0.0) for p in pts]
        style = dict(_STYLE.get(scheme, {}))
        style["linestyle"] = _DASHES[n_photons % len(_DASHES)]
        ax.plot(att, rate, label=_curve_label(scheme, n_photons), **style)
    bound = sorted({(r["attenuation_db"], r["rb"]) for r in rows})
    if bound:
        ax.plot(*zip(*bound), color="black", linestyle=":", label="repeaterless bound")
    ax.set_yscale("log")
    ax.set_xlabel("attenuation [dB]")
    ax.set_ylabel("key rate [bits/pulse]")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def histogram_figure(rows, path, title):
    """Transmissivity densities, one staircase per sigma_I2 value."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    groups = {}
    for row in rows:
        groups.setdefault(row["sigma_I2"], []).append(row)
    for sigma, pts in sorted(groups.items()):
        pts = sorted(pts, key=lambda r: r["bin_lo"])
        edges = [p["bin_lo"] for p in pts] + [pts[-1]["bin_hi"]]
        density = [p["density"] for p in pts]
        ax.stairs(density, edges, label=f"sigma_I2={sigma:g}")
    ax.set_xlabel("transmissivity")
    ax.set_ylabel("probability density")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
