"""Conserved quantities, localized virial quantities, and semi-norm diagnostics.

The smooth cutoff phi is built by prescribing its second derivative: the
constraint d2phi <= 1 is linear in phi'' so it holds by construction.
Concretely phi'' = 1 on [0,2], a C2 pair of cubics q on [2,4] with an
interior knot, and 0 beyond 4, with

    q(2)=1, q'(2)=0, q(4)=q'(4)=0,
    int_2^4 q = -2          (makes phi'(4) = 0).

Beyond 4 the profile is a positive constant, not zero: with phi'' <= 1,
phi(2)=2, phi'(2)=2 and phi'(4)=0 force

    phi(4) = 8 - int_2^4 (4-s)(1-phi'') ds >= 8 - 2*int(1-phi'') = 0,

with equality only if the curvature deficit 1-phi'' concentrates as a
point mass at s=2.  A flat-to-zero outer value is therefore unreachable
for any integrable curvature profile; the construction flattens to the
plateau instead.  Every derivative vanishes on the plateau, which is all
the virial identities consume; only the raw zR value sees the constant,
weighting far-field mass that is negligible for the focusing runs this
instrument is aimed at.  The constant c_phi in |phi'|^2 <= c_phi*phi is
measured on a dense mesh rather than assumed.

Virial quantities use the radial reduction of the Hessian contraction
(sum_jk d_j u d_k conj(u) d2_jk Phi = |d_r u|^2 Phi'' for radial data).
The |d_r u|^2 phi'' term is accumulated on cell faces with the same
staggered differences as grad_norm_sq, so for fields supported in the
inner quadratic region zR_second collapses to the exact discrete virial
identity 4 G - 2(N sigma + b) P / (sigma+1) with no stencil mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    RadialField, RadialGrid, SpectralCache, grad_norm_sq, hsc_norm_sq,
    integrate, lebesgue_norm, radial_derivative, weighted_potential,
)
from .params import PhysParams

__all__ = [
    "CutoffConstructionFailure", "CutoffOutOfDomain", "EmptyScaleSet",
    "DegenerateRho", "CutoffPhi", "CheckReport", "ObservableRecord",
    "DiagnosticsSuite", "mass", "energy", "variance", "annulus_mass",
    "build_cutoff", "virial_z", "rho_seminorm", "ball_mass_scaled",
    "radial_gn_quotient", "virial_estimate_check", "series_to_csv",
    "SERIES_BASE_COLUMNS",
]


class CutoffConstructionFailure(RuntimeError):
    """Cutoff verification failed even after the knot search."""


class CutoffOutOfDomain(ValueError):
    """Virial cutoff support 4R exceeds the grid radius."""


class EmptyScaleSet(ValueError):
    """No admissible annulus scale R' <= rmax/2 at or above the requested R."""


class DegenerateRho(ValueError):
    """rho(u, R) vanished; the quotient denominator is meaningless."""


# ----------------------------------------------------------------------
# basic functionals
# ----------------------------------------------------------------------

def mass(u: RadialField) -> float:
    return integrate(np.abs(u.values) ** 2, u.grid)


def energy(u: RadialField, p: PhysParams) -> float:
    return 0.5 * grad_norm_sq(u) - weighted_potential(u, p) / (2.0 * p.sigma + 2.0)


def variance(u: RadialField) -> float:
    return integrate(u.grid.r ** 2 * np.abs(u.values) ** 2, u.grid)


def annulus_mass(u: RadialField, rlo: float, rhi: float) -> float:
    """Mass on the half-open annulus rlo <= r < rhi (node mask)."""
    g = u.grid
    m = (g.r >= rlo) & (g.r < rhi)
    return float(np.sum(g.w[m] * np.abs(u.values[m]) ** 2))


# ----------------------------------------------------------------------
# smooth cutoff
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffPhi:
    """Piecewise-polynomial radial cutoff: quadratic core, quintic transition,
    constant plateau beyond rho=4 (see the module docstring for why the
    plateau cannot be zero)."""

    N: int
    knot: float
    a2: float
    a3: float
    b2: float
    b3: float
    plateau: float
    c_phi: float
    max_d2: float

    def d2(self, rho: np.ndarray) -> np.ndarray:
        """phi'' (the prescribed profile q)."""
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        out[rho < 2.0] = 1.0
        m1 = (rho >= 2.0) & (rho < self.knot)
        t = rho[m1] - 2.0
        out[m1] = 1.0 + self.a2 * t ** 2 + self.a3 * t ** 3
        m2 = (rho >= self.knot) & (rho < 4.0)
        t = rho[m2] - 4.0
        out[m2] = self.b2 * t ** 2 + self.b3 * t ** 3
        return out

    def d1(self, rho: np.ndarray) -> np.ndarray:
        """phi'."""
        rho = np.asarray(rho, dtype=float)
        out = np.where(rho < 2.0, rho, 0.0)
        m1 = (rho >= 2.0) & (rho < self.knot)
        t = rho[m1] - 2.0
        out[m1] = 2.0 + t + self.a2 * t ** 3 / 3.0 + self.a3 * t ** 4 / 4.0
        m2 = (rho >= self.knot) & (rho < 4.0)
        t = rho[m2] - 4.0
        out[m2] = self.b2 * t ** 3 / 3.0 + self.b3 * t ** 4 / 4.0
        return out

    def value(self, rho: np.ndarray) -> np.ndarray:
        """phi."""
        rho = np.asarray(rho, dtype=float)
        out = np.where(rho < 2.0, 0.5 * rho ** 2, self.plateau)
        m1 = (rho >= 2.0) & (rho < self.knot)
        t = rho[m1] - 2.0
        out[m1] = (2.0 + 2.0 * t + 0.5 * t ** 2
                   + self.a2 * t ** 4 / 12.0 + self.a3 * t ** 5 / 20.0)
        m2 = (rho >= self.knot) & (rho < 4.0)
        t = rho[m2] - 4.0
        out[m2] = self.plateau + self.b2 * t ** 4 / 12.0 + self.b3 * t ** 5 / 20.0
        return out

    def d3(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        m1 = (rho >= 2.0) & (rho < self.knot)
        t = rho[m1] - 2.0
        out[m1] = 2.0 * self.a2 * t + 3.0 * self.a3 * t ** 2
        m2 = (rho >= self.knot) & (rho < 4.0)
        t = rho[m2] - 4.0
        out[m2] = 2.0 * self.b2 * t + 3.0 * self.b3 * t ** 2
        return out

    def d4(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        m1 = (rho >= 2.0) & (rho < self.knot)
        out[m1] = 2.0 * self.a2 + 6.0 * self.a3 * (rho[m1] - 2.0)
        m2 = (rho >= self.knot) & (rho < 4.0)
        out[m2] = 2.0 * self.b2 + 6.0 * self.b3 * (rho[m2] - 4.0)
        return out

    def laplacian(self, rho: np.ndarray) -> np.ndarray:
        """N-dimensional Laplacian phi'' + (N-1) phi'/rho; equals N on the core."""
        rho = np.asarray(rho, dtype=float)
        out = np.full_like(rho, float(self.N))
        m = rho >= 2.0
        out[m] = self.d2(rho[m]) + (self.N - 1) * self.d1(rho[m]) / rho[m]
        return out

    def bilaplacian(self, rho: np.ndarray) -> np.ndarray:
        """Delta^2 phi; identically 0 on the quadratic core and beyond 4."""
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        m = (rho >= 2.0) & (rho < 4.0)
        r = rho[m]
        nn = (self.N - 1) * (self.N - 3)
        out[m] = (self.d4(r) + 2.0 * (self.N - 1) * self.d3(r) / r
                  + nn * self.d2(r) / r ** 2 - nn * self.d1(r) / r ** 3)
        return out


def _solve_transition(knot: float) -> tuple[float, float, float, float]:
    # unknowns (a2, a3, b2, b3) in bases (rho-2)^i on [2,knot], (rho-4)^i on [knot,4];
    # int q = -2 doubles as phi' continuity at the knot given the closed forms
    al = knot - 2.0
    be = knot - 4.0
    A = np.array([
        [al ** 2, al ** 3, -be ** 2, -be ** 3],                       # q join
        [2 * al, 3 * al ** 2, -2 * be, -3 * be ** 2],                 # q' join
        [2.0, 6 * al, -2.0, -6 * be],                                 # q'' join
        [al ** 3 / 3, al ** 4 / 4, -be ** 3 / 3, -be ** 4 / 4],       # int q = -2
    ])
    rhs = np.array([-1.0, 0.0, 0.0, -2.0 - al])
    return tuple(np.linalg.solve(A, rhs))


def _transition_plateau(knot: float, a2: float, a3: float, b2: float, b3: float) -> float:
    # phi continuity at the knot fixes the outer constant
    al = knot - 2.0
    be = knot - 4.0
    left = 2.0 + 2.0 * al + 0.5 * al ** 2 + a2 * al ** 4 / 12.0 + a3 * al ** 5 / 20.0
    right_bump = b2 * be ** 4 / 12.0 + b3 * be ** 5 / 20.0
    return left - right_bump


def _verify_cutoff(phi: CutoffPhi, mesh_n: int = 100_000):
    rho = np.linspace(0.0, 4.5, mesh_n)
    v = phi.value(rho)
    d1 = phi.d1(rho)
    d2 = phi.d2(rho)
    if phi.plateau <= 0.0:
        return None, f"plateau {phi.plateau:.3e} not positive"
    if v.min() < -1e-12:
        return None, f"phi < 0 at rho={rho[v.argmin()]:.6f} ({v.min():.3e})"
    if d1.min() < -1e-9:
        return None, f"phi' < 0 at rho={rho[d1.argmin()]:.6f} ({d1.min():.3e})"
    if d2.max() > 1.0 + 1e-9:
        return None, f"phi'' > 1 at rho={rho[d2.argmax()]:.6f} ({d2.max():.12f})"
    # gradient-control constant, measured where phi is meaningfully positive
    supp = v > 1e-14
    c_phi = float(np.max(d1[supp] ** 2 / v[supp]))
    if not np.isfinite(c_phi):
        return None, "c_phi not finite"
    return (c_phi, float(d2.max())), ""


def build_cutoff(N: int = 3, knot: float = 3.0) -> CutoffPhi:
    """Construct and verify the virial cutoff; searches the knot on failure."""
    if int(N) != N or N < 3:
        raise CutoffConstructionFailure(f"dimension N={N} must be an integer >= 3")
    last_reason = ""
    for m in [knot] + list(np.linspace(2.2, 3.8, 33)):
        if not 2.0 < m < 4.0:
            continue
        a2, a3, b2, b3 = _solve_transition(float(m))
        plateau = _transition_plateau(float(m), a2, a3, b2, b3)
        cand = CutoffPhi(N=int(N), knot=float(m), a2=a2, a3=a3, b2=b2, b3=b3,
                         plateau=plateau, c_phi=0.0, max_d2=0.0)
        ok, reason = _verify_cutoff(cand)
        if ok is not None:
            return CutoffPhi(N=int(N), knot=float(m), a2=a2, a3=a3, b2=b2, b3=b3,
                             plateau=plateau, c_phi=ok[0], max_d2=ok[1])
        last_reason = f"knot={m:.3f}: {reason}"
    raise CutoffConstructionFailure(last_reason)


# ----------------------------------------------------------------------
# virial quantities
# ----------------------------------------------------------------------

def virial_z(u: RadialField, p: PhysParams, R: float,
             phi: CutoffPhi) -> tuple[float, float, float]:
    """(zR, zR', zR'') for the rescaled cutoff Phi_R(x) = R^2 phi(|x|/R)."""
    g = u.grid
    if R <= 0:
        raise CutoffOutOfDomain(f"R={R} must be positive")
    if 4.0 * R > g.rmax:
        raise CutoffOutOfDomain(f"cutoff support 4R={4 * R} exceeds rmax={g.rmax}")
    rho = g.r / R
    absu2 = np.abs(u.values) ** 2
    zR = R ** 2 * integrate(phi.value(rho) * absu2, g)

    du = radial_derivative(u)
    zR_prime = 2.0 * R * integrate(phi.d1(rho) * np.imag(du * np.conj(u.values)), g)

    # Hessian term on faces, matching the staggered Dirichlet form exactly
    dface2 = np.abs(u.values[1:] - u.values[:-1]) ** 2 / g.h ** 2
    hess = float(np.sum(g.wface * phi.d2(g.faces[1:-1] / R) * dface2))
    hess += g.bface * float(phi.d2(np.array([g.rmax / R]))[0]) * abs(u.values[-1]) ** 2

    pot_dens = g.r ** (-p.b) * np.abs(u.values) ** (2.0 * p.sigma + 2.0)
    zR_second = (
        4.0 * hess
        - integrate(absu2 * phi.bilaplacian(rho), g) / R ** 2
        - (2.0 * p.sigma / (p.sigma + 1.0)) * integrate(pot_dens * phi.laplacian(rho), g)
        - (2.0 * p.b / (p.sigma + 1.0)) * R * integrate(pot_dens / g.r * phi.d1(rho), g)
    )
    return float(zR), float(zR_prime), float(zR_second)


# ----------------------------------------------------------------------
# Morrey-Campanato semi-norm and the radial inequality witnesses
# ----------------------------------------------------------------------

def rho_seminorm(u: RadialField, p: PhysParams, R: float) -> float:
    """sup over the quarter-dyadic ladder R' = R 2^{k/4} <= rmax/2 of
    (R')^{-2 s_c} * mass on the annulus R' <= r < 2R'."""
    g = u.grid
    if R <= 0 or not np.isfinite(R):
        raise EmptyScaleSet(f"R={R} must be positive and finite")
    if R > g.rmax / 2.0:
        raise EmptyScaleSet(f"R={R} exceeds rmax/2={g.rmax / 2}")
    best = 0.0
    k = 0
    while True:
        rp = R * 2.0 ** (k / 4.0)
        if rp > g.rmax / 2.0:
            break
        best = max(best, rp ** (-2.0 * p.s_c) * annulus_mass(u, rp, 2.0 * rp))
        k += 1
    return best


def ball_mass_scaled(u: RadialField, p: PhysParams, R: float) -> float:
    """R^{-2 s_c} * mass on the ball r <= R."""
    g = u.grid
    m = g.r <= R
    return float(R ** (-2.0 * p.s_c) * np.sum(g.w[m] * np.abs(u.values[m]) ** 2))


def radial_gn_quotient(u: RadialField, p: PhysParams, R: float, eta: float) -> float:
    """Empirical constant witness for the radial annulus inequality:
    [tail potential - eta * tail gradient]_+ R^{2(1-s_c)} / (rho^(2+sigma)/(2-sigma) + rho^(sigma+1))."""
    rho = rho_seminorm(u, p, R)
    if rho <= 1e-300:
        raise DegenerateRho(f"rho(u, R={R}) = {rho}")
    g = u.grid
    tail_pot = weighted_potential(u, p, region=(R, g.rmax))
    du = radial_derivative(u)
    m = g.r >= R
    tail_grad = float(np.sum(g.w[m] * np.abs(du[m]) ** 2))
    num = max(tail_pot - eta * tail_grad, 0.0) * R ** (2.0 * (1.0 - p.s_c))
    den = rho ** ((2.0 + p.sigma) / (2.0 - p.sigma)) + rho ** (p.sigma + 1.0)
    return float(num / den)


# ----------------------------------------------------------------------
# check reports
# ----------------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    detail: str = ""


def virial_estimate_check(u: RadialField, p: PhysParams, R: float,
                          phi: CutoffPhi, E0: float) -> CheckReport:
    """Witness constant for the localized virial estimate:
    [2 sigma s_c G + zR''/2 - 4(sigma s_c + 1) E0]_+ over the annulus/tail core.

    The half on zR'' matches the normalization in which the estimate is an
    exact identity (LHS = 0) for fields supported in the quadratic core.
    """
    _, _, z2 = virial_z(u, p, R, phi)
    G = grad_norm_sq(u)
    lhs = 2.0 * p.sigma * p.s_c * G + 0.5 * z2 - 4.0 * (p.sigma * p.s_c + 1.0) * E0
    scale = max(G, abs(E0), 1.0)
    if abs(lhs) <= 1e-10 * scale:
        lhs = 0.0
    rhs = annulus_mass(u, 2.0 * R, 4.0 * R) / R ** 2 + weighted_potential(
        u, p, region=(R, u.grid.rmax))
    if rhs == 0.0:
        pos = max(lhs, 0.0)
        return CheckReport(
            name="virial_estimate", lhs=lhs, rhs=0.0,
            ratio=0.0 if pos == 0.0 else math.inf,
            passed=pos == 0.0,
            detail="vacuous (RHS core empty)" if pos == 0.0 else "LHS > 0 with empty RHS core",
        )
    ratio = max(lhs, 0.0) / rhs
    return CheckReport(name="virial_estimate", lhs=lhs, rhs=rhs, ratio=ratio,
                       passed=np.isfinite(ratio), detail="witness constant")


# ----------------------------------------------------------------------
# the per-time-slice observable record
# ----------------------------------------------------------------------

SERIES_BASE_COLUMNS = ["t", "mass", "energy", "grad_sq", "lsigmac", "hsc",
                       "variance", "lambda", "zR", "zR_prime", "zR_second"]


@dataclass
class ObservableRecord:
    t: float
    mass: float
    energy: float
    grad_sq: float
    lsigmac: float
    hsc: float
    variance: float
    lam: float
    zR: float
    zR_prime: float
    zR_second: float
    rho_at_scales: dict[float, float]
    boundary_mass_frac: float

    def row(self) -> list[float]:
        return ([self.t, self.mass, self.energy, self.grad_sq, self.lsigmac,
                 self.hsc, self.variance, self.lam, self.zR, self.zR_prime,
                 self.zR_second]
                + [self.rho_at_scales[k] for k in sorted(self.rho_at_scales)]
                + [self.boundary_mass_frac])


def series_columns(rho_scales) -> list[str]:
    return (SERIES_BASE_COLUMNS
            + [f"rho_R{s:g}" for s in sorted(rho_scales)]
            + ["boundary_mass_frac"])


def series_to_csv(records: list[ObservableRecord], path) -> None:
    if not records:
        raise ValueError("empty series")
    cols = series_columns(records[0].rho_at_scales.keys())
    with open(path, "w") as f:
        f.write(",".join(cols) + "\n")
        for rec in records:
            f.write(",".join(repr(float(x)) for x in rec.row()) + "\n")


class DiagnosticsSuite:
    """Bundles grid-dependent caches and per-slice observation settings."""

    def __init__(self, p: PhysParams, g: RadialGrid, cache: SpectralCache | None,
                 cutoff: CutoffPhi | None = None, R_virial: float | None = None,
                 rho_scales=(1.0, 2.0, 4.0)):
        self.p = p
        self.grid = g
        self.cache = cache
        self.cutoff = cutoff if cutoff is not None else build_cutoff(g.N)
        self.R_virial = float(R_virial) if R_virial is not None else g.rmax / 8.0
        if 4.0 * self.R_virial > g.rmax:
            raise CutoffOutOfDomain(
                f"R_virial={self.R_virial} needs 4R <= rmax={g.rmax}")
        for s in rho_scales:
            if s > g.rmax / 2.0:
                raise EmptyScaleSet(f"rho scale {s} exceeds rmax/2={g.rmax / 2}")
        self.rho_scales = tuple(float(s) for s in rho_scales)
        self._outer = g.r >= 0.9 * g.rmax

    def observe(self, t: float, u: RadialField) -> ObservableRecord:
        g = self.grid
        m = mass(u)
        G = grad_norm_sq(u)
        pot = weighted_potential(u, self.p)
        E = 0.5 * G - pot / (2.0 * self.p.sigma + 2.0)
        lsig = lebesgue_norm(u, self.p.sigma_c)
        hs = math.sqrt(hsc_norm_sq(u, self.p.s_c, self.cache)) if self.cache else math.nan
        var = variance(u)
        lam = G ** (-1.0 / (2.0 * (1.0 - self.p.s_c))) if G > 0 else math.inf
        zR, z1, z2 = virial_z(u, self.p, self.R_virial, self.cutoff)
        rho_map = {s: rho_seminorm(u, self.p, s) for s in self.rho_scales}
        outer = float(np.sum(g.w[self._outer] * np.abs(u.values[self._outer]) ** 2))
        bmf = outer / m if m > 0 else 0.0
        return ObservableRecord(
            t=float(t), mass=m, energy=E, grad_sq=G, lsigmac=lsig, hsc=hs,
            variance=var, lam=lam, zR=zR, zR_prime=z1, zR_second=z2,
            rho_at_scales=rho_map, boundary_mass_frac=bmf,
        )
