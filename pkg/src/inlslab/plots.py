"""Report plots: focusing scale, upper-bound integral, critical-norm growth.

Each plot is written twice: a CSV with the plotted columns (diff-friendly,
replottable) and a rendered PNG next to it.  Blow-up plots appear only when
the analysis produced a t_star.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .analysis import SeriesData, upper_integral_curve  # noqa: E402
from .params import PhysParams  # noqa: E402

__all__ = ["render_run_plots"]


def _write_csv(path, header, cols) -> None:
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in zip(*cols):
            f.write(",".join(repr(float(x)) for x in row) + "\n")


def render_run_plots(out_dir, series: SeriesData, p: PhysParams,
                     report: dict | None = None) -> list[str]:
    from pathlib import Path

    out = Path(out_dir) / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written = []

    lam_sq = series.lam ** 2
    _write_csv(out / "lambda_sq.csv", ["t", "lambda_sq"], [series.t, lam_sq])
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(series.t, lam_sq, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\lambda_u(t)^2$")
    ax.set_title("focusing scale")
    fig.tight_layout()
    fig.savefig(out / "lambda_sq.png", dpi=120)
    plt.close(fig)
    written += ["lambda_sq.csv", "lambda_sq.png"]

    t_star = None
    if report and report.get("blowup"):
        t_star = report["blowup"]["t_star"]
    if t_star is None or not np.isfinite(t_star) or t_star <= series.t[-1]:
        return written

    dt, g = upper_integral_curve(series, t_star)
    pos = g > 0
    _write_csv(out / "upper_integral.csv", ["t_star_minus_t", "g"], [dt, g])
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.loglog(dt[pos], g[pos], lw=1.0)
    slope = report["blowup"].get("upper_slope")
    if slope is not None and np.isfinite(slope):
        ax.set_title(f"upper-bound integral, fitted slope {slope:.3f}")
    else:
        ax.set_title("upper-bound integral")
    ax.set_xlabel(r"$T^* - t$")
    ax.set_ylabel(r"$g(t)=\int_t (T^*-\tau)\,\|\nabla u\|^2 d\tau$")
    ax.invert_xaxis()
    fig.tight_layout()
    fig.savefig(out / "upper_integral.png", dpi=120)
    plt.close(fig)
    written += ["upper_integral.csv", "upper_integral.png"]

    grown = series.lsigmac > 0
    x = np.abs(np.log(dt[grown]))
    ok = x > 1e-6
    xs = np.log(x[ok])
    ys = series.lsigmac[grown][ok]
    _write_csv(out / "lsigmac_growth.csv", ["loglog_t_star_minus_t", "lsigmac"], [xs, ys])
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.semilogy(xs, ys, lw=1.0)
    ax.set_xlabel(r"$\log|\log(T^*-t)|$")
    ax.set_ylabel(r"$\|u\|_{L^{\sigma_c}}$")
    ax.set_title("critical-norm growth")
    fig.tight_layout()
    fig.savefig(out / "lsigmac_growth.png", dpi=120)
    plt.close(fig)
    written += ["lsigmac_growth.csv", "lsigmac_growth.png"]
    return written
