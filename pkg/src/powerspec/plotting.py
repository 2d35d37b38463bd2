"""Figures written to files next to the CSV/JSON reports (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .volterra import SigmaSolution, sigma_min  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_sigma(sol: SigmaSolution, path) -> None:
    """Solution trace and its running average, with the minimum marked."""
    u = sol.grid
    m = sigma_min(sol)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(u, sol.values, lw=1.2, label=r"$\sigma(u)$")
    ax.plot(u, sol.running_average(), lw=1.0, ls="--", label=r"$\frac{1}{u}\int_0^u \sigma$")
    ax.plot([m["argmin"]], [m["value"]], "o", ms=4, color="k")
    ax.annotate(f"min {m['value']:.6f} at {m['argmin']:.4f}", (m["argmin"], m["value"]), textcoords="offset points", xytext=(8, 10), fontsize=8)
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel("u")
    ax.set_title(f"chi = {sol.chi.describe()}, step = {sol.step:g}", fontsize=9)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_endpoint(rows: list[dict], target: float, path, label: str = "") -> None:
    """Normalized logarithmic mean against log10 x, with the limiting value as a reference line."""
    import math

    xs = [math.log10(r["x"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(xs, [r["ratio"] for r in rows], "o-", lw=1.2, label=label or "ratio")
    ax.axhline(target, color="C3", lw=0.8, ls="--", label=f"{target:.7f}")
    ax.set_xlabel(r"$\log_{10} x$")
    ax.set_ylabel("normalized mean")
    ax.legend(fontsize=8)
    _save(fig, path)
