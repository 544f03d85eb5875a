"""Physical parameters and scaling structure of the intercritical INLS.

The equation i u_t + Lap(u) + |x|^{-b} |u|^{2 sigma} u = 0 in R^N carries a
two-parameter family of derived exponents.  Everything downstream hangs off

    s_c     = N/2 - (2-b)/(2 sigma)        critical Sobolev index
    sigma_c = 2 N sigma / (2-b)            critical Lebesgue exponent
    beta    = (2-sigma) / (sigma(N-1)+b)   rate exponent of the upper bound

The intercritical window (2-b)/N < sigma < (2-b)/(N-2) with 0 < b < min(N/2, 2)
is exactly the set where 0 < s_c < 1, sigma_c > 2, 0 < beta < 1 and sigma < 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class WindowViolation(ValueError):
    """Parameters fall outside the intercritical window; message cites the bound."""


class ResampleOutOfRange(ValueError):
    """A dilation pushed a non-negligible mass fraction off the grid."""


@dataclass(frozen=True)
class PhysParams:
    """Equation parameters plus the derived exponents, validated at construction."""

    N: int
    b: float
    sigma: float
    s_c: float
    sigma_c: float
    beta: float

    @property
    def scaling_power(self) -> float:
        # amplitude exponent of the symmetry u -> lam^p u(lam x, lam^2 t)
        return (2.0 - self.b) / (2.0 * self.sigma)


def derive_exponents(N: int, b: float, sigma: float) -> PhysParams:
    """Validate the intercritical window and compute s_c, sigma_c, beta.

    Raises WindowViolation with the violated bound spelled out in the message.
    """
    if not isinstance(N, (int, np.integer)) or N < 3:
        raise WindowViolation(f"dimension N={N} must be an integer >= 3")
    N = int(N)
    bmax = min(N / 2.0, 2.0)
    if not 0.0 < b < bmax:
        raise WindowViolation(
            f"b={b} outside (0, min(N/2, 2)) = (0, {bmax}) for N={N}"
        )
    lo = (2.0 - b) / N
    hi = (2.0 - b) / (N - 2)
    if not lo < sigma < hi:
        raise WindowViolation(
            f"sigma={sigma} outside the intercritical window "
            f"((2-b)/N, (2-b)/(N-2)) = ({lo}, {hi}) for N={N}, b={b}"
        )
    s_c = N / 2.0 - (2.0 - b) / (2.0 * sigma)
    sigma_c = 2.0 * N * sigma / (2.0 - b)
    beta = (2.0 - sigma) / (sigma * (N - 1) + b)
    return PhysParams(N=N, b=b, sigma=sigma, s_c=s_c, sigma_c=sigma_c, beta=beta)


def scaling_transform(u, lam: float, p: PhysParams, mass_tol: float = 1e-8):
    """Apply u -> lam^{(2-b)/(2 sigma)} u(lam x) on the field's own grid.

    Resampling is cubic-spline interpolation of the radial profile (even
    extension through r=0); points lam*r beyond rmax read as zero.  If the
    relative mass of u beyond rmax/lam exceeds mass_tol the transform would
    silently truncate, so ResampleOutOfRange is raised instead.
    """
    from .grid import RadialField  # local import: grid depends on params for errors

    if not np.isfinite(lam) or lam <= 0:
        raise ResampleOutOfRange(f"dilation factor lam={lam} must be positive and finite")
    g = u.grid
    if lam < 1.0:
        # u is sampled only on [0, rmax]; u(lam r) needs r up to rmax/lam
        mass = np.sum(g.w * np.abs(u.values) ** 2)
        lost = np.sum(g.w[g.r > g.rmax * lam] * np.abs(u.values[g.r > g.rmax * lam]) ** 2)
        if mass > 0 and lost / mass > mass_tol:
            raise ResampleOutOfRange(
                f"lam={lam} maps {lost / mass:.3e} of the mass off the grid "
                f"(threshold {mass_tol:.1e})"
            )
    vals = _resample(g, u.values, lam)
    return RadialField(grid=g, values=lam ** p.scaling_power * vals)


def _resample(g, values: np.ndarray, lam: float) -> np.ndarray:
    """Evaluate the radial profile at lam*r by cubic spline, zero beyond rmax."""
    from scipy.interpolate import CubicSpline

    # even extension through the origin so evaluation below r_0 = h/2 is sound
    nref = min(4, g.n)
    xs = np.concatenate([-g.r[:nref][::-1], g.r])
    target = lam * g.r
    inside = target <= g.rmax
    out = np.zeros_like(values)
    for part, comp in ((np.real, 1.0), (np.imag, 1j)):
        ys = np.concatenate([part(values[:nref])[::-1], part(values)])
        spl = CubicSpline(xs, ys)
        out[inside] = out[inside] + comp * spl(target[inside])
    return out
