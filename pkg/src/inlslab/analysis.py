"""Post-processing of run series: T* estimation, rate fits, and witnesses.

Conventions shared by every check:
  - T* comes from the near-linearity of lambda_u(t)^2 in t close to the
    singular time; fit windows are the last 1, 2, 3 half-decades of
    lambda shrinkage, the reported T* is the one-decade (k=2) fit, and
    the uncertainty is the spread of the three roots.  The relative
    uncertainty is that spread over the extrapolation span
    T* - (start of the one-decade window).
  - "tail" means the last two decades of T* - t; the upper-integral
    density precondition counts samples in the last single decade.
All fits are deterministic given a series, and one-sided: measured runs
get witnesses and slopes, hard assertions live on synthetic data only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import ObservableRecord, rho_seminorm
from .grid import RadialField, make_grid, grad_norm_sq
from .params import PhysParams, ResampleOutOfRange

__all__ = ["InsufficientTail", "NoBlowup", "NoGrowth", "InsufficientSnapshots",
           "SeriesData", "BlowupReport", "estimate_tstar", "check_lower_rate",
           "fit_log_lower", "check_upper_integral", "check_liminf",
           "renormalize_v", "proposition_quantities", "PropositionQuantities",
           "build_report", "upper_integral_curve"]

BLOWUP_STOPS = ("BlowupThreshold", "StepUnderflow")
DEFAULT_LADDER = (1.0, 2.0, 4.0, 8.0, 16.0)


class InsufficientTail(ValueError):
    """Too few samples in the fit window for a meaningful estimate."""


class NoBlowup(ValueError):
    """Series did not stop on a blow-up detector."""


class NoGrowth(ValueError):
    """The critical Lebesgue norm never exceeded its initial value."""


class InsufficientSnapshots(ValueError):
    """Not enough stored fields to evaluate snapshot-based quantities."""


@dataclass
class SeriesData:
    """Columns of a run series needed by the fits (arrays share one length)."""

    t: np.ndarray
    grad_sq: np.ndarray
    lam: np.ndarray
    lsigmac: np.ndarray
    hsc: np.ndarray
    stop_reason: str

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        n = self.t.size
        for name in ("grad_sq", "lam", "lsigmac", "hsc"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size != n:
                raise ValueError(f"column {name} has {arr.size} entries, expected {n}")
            setattr(self, name, arr)
        if n >= 2 and np.any(np.diff(self.t) <= 0):
            raise ValueError("series timestamps must be strictly increasing")

    @classmethod
    def from_records(cls, records: list[ObservableRecord], stop_reason: str) -> "SeriesData":
        return cls(
            t=np.array([r.t for r in records]),
            grad_sq=np.array([r.grad_sq for r in records]),
            lam=np.array([r.lam for r in records]),
            lsigmac=np.array([r.lsigmac for r in records]),
            hsc=np.array([r.hsc for r in records]),
            stop_reason=stop_reason,
        )

    @classmethod
    def from_csv(cls, path, stop_reason: str) -> "SeriesData":
        with open(path) as f:
            cols = f.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        idx = {c: i for i, c in enumerate(cols)}
        return cls(
            t=data[:, idx["t"]], grad_sq=data[:, idx["grad_sq"]],
            lam=data[:, idx["lambda"]], lsigmac=data[:, idx["lsigmac"]],
            hsc=data[:, idx["hsc"]], stop_reason=stop_reason,
        )


# ----------------------------------------------------------------------
# T* estimation
# ----------------------------------------------------------------------

def _tstar_fits(series: SeriesData) -> dict:
    if series.stop_reason not in BLOWUP_STOPS:
        raise NoBlowup(f"stop reason {series.stop_reason} is not a blow-up detector")
    ok = np.isfinite(series.lam) & (series.lam > 0.0)
    t = series.t[ok]
    lam = series.lam[ok]
    if t.size < 3:
        raise InsufficientTail("fewer than 3 finite focusing-scale samples")
    g0 = series.grad_sq[0]
    ntail = int(np.sum(series.grad_sq >= 100.0 * g0)) if g0 > 0 else 0
    if ntail < 20:
        raise InsufficientTail(
            f"only {ntail} samples with grad_sq >= 100x its initial value (need 20)")
    lam_min = lam.min()
    fits = {}
    for k in (1, 2, 3):
        win = lam <= lam_min * 10.0 ** (k / 2.0)
        if int(win.sum()) < 3:
            continue
        a, b = np.polyfit(t[win], lam[win] ** 2, 1)
        if a >= 0.0:
            continue
        fits[k] = {"t_star": -b / a, "t_begin": float(t[win].min()),
                   "n": int(win.sum())}
    if 2 not in fits:
        raise InsufficientTail("one-decade window fit unavailable")
    t_star = fits[2]["t_star"]
    if t_star <= t[-1]:
        raise InsufficientTail(
            f"extrapolated t_star={t_star} does not lie beyond the series end {t[-1]}")
    roots = [f["t_star"] for f in fits.values()]
    unc = max(roots) - min(roots)
    span = t_star - fits[2]["t_begin"]
    return {"t_star": t_star, "uncertainty": unc,
            "rel_uncertainty": unc / span if span > 0 else math.inf,
            "windows": fits}


def estimate_tstar(series: SeriesData) -> tuple[float, float]:
    f = _tstar_fits(series)
    return f["t_star"], f["uncertainty"]


def _tail_mask(series: SeriesData, t_star: float, decades: float = 2.0) -> np.ndarray:
    dt = t_star - series.t
    if np.any(dt <= 0):
        raise InsufficientTail("t_star does not exceed every sample time")
    return dt <= dt[-1] * 10.0 ** decades


def check_lower_rate(series: SeriesData, t_star: float, p: PhysParams) -> float:
    tail = _tail_mask(series, t_star)
    if int(tail.sum()) < 2:
        raise InsufficientTail("fewer than 2 samples in the last two decades")
    dt = t_star - series.t[tail]
    return float(np.min(np.sqrt(series.grad_sq[tail]) * dt ** ((1.0 - p.s_c) / 2.0)))


def fit_log_lower(series: SeriesData, t_star: float, p: PhysParams) -> float:
    return _log_lower_fit(series, t_star)["gamma_fit"]


def _log_lower_fit(series: SeriesData, t_star: float) -> dict:
    tail = _tail_mask(series, t_star)
    grown = series.lsigmac > series.lsigmac[0]
    sel = tail & grown
    if not np.any(grown):
        raise NoGrowth("critical Lebesgue norm never exceeded its initial value")
    dt = t_star - series.t[sel]
    x = np.abs(np.log(dt))
    keep = x > 1e-6
    if int(keep.sum()) < 3:
        raise InsufficientTail("fewer than 3 usable samples for the log-log fit")
    lx = np.log(x[keep])
    ly = np.log(series.lsigmac[sel][keep])
    gamma, c0 = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (gamma * lx + c0)) ** 2)))
    ls_tail = series.lsigmac[tail]
    hs_tail = series.hsc[tail]
    return {
        "gamma_fit": float(gamma),
        "fit_residual": resid,
        "lsigmac_increasing": bool(ls_tail[-1] > ls_tail[0]),
        "hsc_increasing": bool(np.all(np.isfinite(hs_tail)) and hs_tail[-1] > hs_tail[0]),
    }


def upper_integral_curve(series: SeriesData, t_star: float) -> tuple[np.ndarray, np.ndarray]:
    """(t_star - t, g(t)) with g(t) = int_t^{t_stop} (t_star - tau) grad_sq dtau."""
    dt = t_star - series.t
    f = dt * series.grad_sq
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(series.t)
    g = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return dt, g


def check_upper_integral(series: SeriesData, t_star: float, p: PhysParams) -> float:
    return _upper_fit(series, t_star)["upper_slope"]


def _upper_fit(series: SeriesData, t_star: float) -> dict:
    dt, g = upper_integral_curve(series, t_star)
    if np.any(dt <= 0):
        raise InsufficientTail("t_star does not exceed every sample time")
    last_decade = int(np.sum(dt <= dt[-1] * 10.0))
    if last_decade < 100:
        raise InsufficientTail(
            f"only {last_decade} samples in the last decade of t_star - t (need 100)")
    sel = (dt <= dt[-1] * 100.0) & (g > 0.0)
    if int(sel.sum()) < 3:
        raise InsufficientTail("fewer than 3 positive-integral samples in the tail")
    slope, _ = np.polyfit(np.log(dt[sel]), np.log(g[sel]), 1)
    trunc = 0.5 * dt[-1] ** 2 * series.grad_sq[-1]
    gref = g[sel][0]
    return {"upper_slope": float(slope),
            "truncation_estimate": float(trunc),
            "truncation_over_g": float(trunc / gref) if gref > 0 else math.inf}


def check_liminf(series: SeriesData, t_star: float, p: PhysParams) -> float:
    tail = _tail_mask(series, t_star)
    if int(tail.sum()) < 2:
        raise InsufficientTail("fewer than 2 samples in the last two decades")
    dt = t_star - series.t[tail]
    return float(np.min(dt ** (1.0 / (1.0 + p.beta)) * np.sqrt(series.grad_sq[tail])))


# ----------------------------------------------------------------------
# renormalization and snapshot-based quantities
# ----------------------------------------------------------------------

def renormalize_v(u_t: RadialField, p: PhysParams) -> RadialField:
    """v(x) = lam^{(2-b)/(2 sigma)} u(lam x) with lam = |grad u|^{-1/(1-s_c)}.

    Realized exactly by relabeling the grid (same sample values, dilated
    radii) instead of interpolating, so |grad v| = 1 and the critical
    Lebesgue norm is preserved to rounding.
    """
    G = grad_norm_sq(u_t)
    if not (G > 0.0) or not math.isfinite(G):
        raise ResampleOutOfRange(f"gradient norm squared {G} admits no focusing scale")
    lam = G ** (-1.0 / (2.0 * (1.0 - p.s_c)))
    g = u_t.grid
    gv = make_grid(g.rmax / lam, g.n, g.N)
    return RadialField(grid=gv, values=lam ** p.scaling_power * u_t.values)


@dataclass
class PropositionQuantities:
    dispersive: list          # (tau0, ratio) pairs
    concentration: list       # (tau0, {D: value}) pairs
    rho_scaled: list          # (tau0, {A: value or nan}) pairs


def proposition_quantities(series: SeriesData, snapshots, p: PhysParams,
                           ladder=DEFAULT_LADDER) -> PropositionQuantities:
    """Dispersive ratios, initial-mass concentration, and rho at sqrt-time scales.

    snapshots: list of (t, RadialField) including the initial field first.
    """
    if len(snapshots) < 2:
        raise InsufficientSnapshots(f"need at least 2 snapshots, got {len(snapshots)}")
    t0s = [(t, u) for t, u in snapshots if t > 0.0]
    if not t0s:
        raise InsufficientSnapshots("no snapshot at positive time")
    u0 = snapshots[0][1]
    g0 = u0.grid
    absu0_sq = np.abs(u0.values) ** 2
    disp, conc, rho_sc = [], [], []
    for tau0, u in t0s:
        m = series.t <= tau0 + 1e-30
        ts = series.t[m]
        if ts.size >= 2:
            f = (tau0 - ts) * series.grad_sq[m]
            ratio = float(np.trapezoid(f, ts)) / tau0 ** (1.0 + p.s_c)
        else:
            ratio = math.nan
        disp.append((tau0, ratio))
        G = grad_norm_sq(u)
        if G > 0.0:
            lam = G ** (-1.0 / (2.0 * (1.0 - p.s_c)))
            row = {}
            for D in ladder:
                sel = g0.r <= D * lam
                row[D] = lam ** (-2.0 * p.s_c) * float(np.sum(g0.w[sel] * absu0_sq[sel]))
        else:
            row = {D: math.nan for D in ladder}
        conc.append((tau0, row))
        rrow = {}
        for A in ladder:
            R = A * math.sqrt(tau0)
            if 0.0 < R <= u.grid.rmax / 2.0:
                rrow[A] = rho_seminorm(u, p, R)
            else:
                rrow[A] = math.nan
        rho_sc.append((tau0, rrow))
    return PropositionQuantities(dispersive=disp, concentration=conc, rho_scaled=rho_sc)


# ----------------------------------------------------------------------
# assembled report
# ----------------------------------------------------------------------

@dataclass
class BlowupReport:
    t_star: float
    t_star_uncertainty: float
    t_star_rel_uncertainty: float
    window_fits: dict
    rate_lower_const: float
    gamma_fit: float
    gamma_fit_residual: float
    lsigmac_increasing: bool
    hsc_increasing: bool
    lsigmac_growth_factor: float
    upper_slope: float
    upper_threshold: float
    truncation_over_g: float
    liminf_witness: float
    notes: dict

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "t_star", "t_star_uncertainty", "t_star_rel_uncertainty",
            "rate_lower_const", "gamma_fit", "gamma_fit_residual",
            "lsigmac_increasing", "hsc_increasing", "lsigmac_growth_factor",
            "upper_slope", "upper_threshold", "truncation_over_g",
            "liminf_witness")}
        out["window_fits"] = {str(k): v for k, v in self.window_fits.items()}
        out["notes"] = self.notes
        return out


def build_report(series: SeriesData, p: PhysParams) -> BlowupReport:
    """Run every fit, collecting per-check failures as notes instead of raising.

    estimate_tstar must succeed (NoBlowup/InsufficientTail propagate); the
    remaining witnesses degrade to NaN with a note.
    """
    fits = _tstar_fits(series)
    t_star = fits["t_star"]
    notes: dict = {}

    def attempt(name, fn, default=math.nan):
        try:
            return fn()
        except (InsufficientTail, NoGrowth) as e:
            notes[name] = f"{type(e).__name__}: {e}"
            return default

    rate = attempt("rate_lower_const", lambda: check_lower_rate(series, t_star, p))
    lower = attempt("gamma_fit", lambda: _log_lower_fit(series, t_star),
                    default={"gamma_fit": math.nan, "fit_residual": math.nan,
                             "lsigmac_increasing": False, "hsc_increasing": False})
    upper = attempt("upper_slope", lambda: _upper_fit(series, t_star),
                    default={"upper_slope": math.nan, "truncation_estimate": math.nan,
                             "truncation_over_g": math.nan})
    liminf = attempt("liminf_witness", lambda: check_liminf(series, t_star, p))
    return BlowupReport(
        t_star=t_star,
        t_star_uncertainty=fits["uncertainty"],
        t_star_rel_uncertainty=fits["rel_uncertainty"],
        window_fits=fits["windows"],
        rate_lower_const=rate,
        gamma_fit=lower["gamma_fit"],
        gamma_fit_residual=lower["fit_residual"],
        lsigmac_increasing=lower["lsigmac_increasing"],
        hsc_increasing=lower["hsc_increasing"],
        lsigmac_growth_factor=float(series.lsigmac[-1] / series.lsigmac[0])
        if series.lsigmac[0] > 0 else math.inf,
        upper_slope=upper["upper_slope"],
        upper_threshold=2.0 * p.beta / (1.0 + p.beta),
        truncation_over_g=upper["truncation_over_g"],
        liminf_witness=liminf,
        notes=notes,
    )
