"""Cell-centered radial grids, quadrature, and discrete radial operators.

Nodes sit at r_j = (j+1/2) h, h = rmax/n, so the |x|^{-b} weight is never
evaluated at r = 0 for any admissible b.  Quadrature weights

    w_j = omega_{N-1} r_j^{N-1} h,   omega_{N-1} = 2 pi^{N/2} / Gamma(N/2)

give the midpoint rule for integrals over R^N restricted to the ball.

The Laplacian is the conservative flux form of r^{1-N} d/dr (r^{N-1} d/dr):
fluxes live on cell faces f_j = j h, the inner face carries zero flux
(radial regularity) and the outer face a Dirichlet value u(rmax) = 0 at
half-cell distance.  This matrix is self-adjoint and negative definite in
the weighted inner product <u,v>_w = sum w_j u_j conj(v_j), and

    <-L u, u>_w = sum_faces omega f^{N-1} h |(u_j - u_{j-1})/h|^2 + boundary

exactly (summation by parts).  grad_norm_sq returns that face-staggered
Dirichlet form, so the kinetic energy, the spectral H^1 norm and the
integration-by-parts identity agree to rounding rather than to O(h^2);
radial_derivative keeps the node-centered stencil for use in integrands.

Fractional norms come from the dense eigendecomposition of -L symmetrized
by W^{1/2}: |u|_{Hs}^2 = sum_k lambda_k^s |c_k|^2 with c = Q^T W^{1/2} u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BadGridSpec", "LengthMismatch", "GridMismatch", "TooLargeForSpectral",
    "BadRegion", "RadialGrid", "RadialField", "SpectralCache", "make_grid",
    "integrate", "lebesgue_norm", "radial_derivative", "apply_laplacian",
    "grad_norm_sq", "build_spectral_cache", "hsc_norm_sq", "weighted_potential",
]

SPECTRAL_MAX_N = 4096


class BadGridSpec(ValueError):
    """Nonpositive extent, tiny node count, or unsupported dimension."""


class LengthMismatch(ValueError):
    """Array length does not match the grid it is paired with."""


class GridMismatch(ValueError):
    """Two objects built on different grids were combined."""


class TooLargeForSpectral(ValueError):
    """Dense eigendecomposition is capped at n <= 4096 nodes."""


class BadRegion(ValueError):
    """Region bounds must satisfy 0 <= rlo < rhi <= rmax."""


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centered radial grid with cached flux-form Laplacian diagonals."""

    rmax: float
    n: int
    N: int
    h: float
    r: np.ndarray          # nodes (j+1/2) h
    w: np.ndarray          # midpoint weights omega r^{N-1} h
    faces: np.ndarray      # face radii j h, length n+1
    wface: np.ndarray      # omega f^{N-1} h on interior faces, length n-1
    bface: float           # Dirichlet boundary coefficient 2 omega f_n^{N-1} / h
    lap_main: np.ndarray   # tridiagonal Laplacian: main diagonal
    lap_upper: np.ndarray  # superdiagonal (couples j to j+1)
    lap_lower: np.ndarray  # subdiagonal (couples j to j-1)

    def __eq__(self, other):
        return (
            isinstance(other, RadialGrid)
            and self.rmax == other.rmax
            and self.n == other.n
            and self.N == other.N
        )

    def __hash__(self):
        return hash((self.rmax, self.n, self.N))


@dataclass
class RadialField:
    """Complex radial profile sampled on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise LengthMismatch(
                f"field has {vals.shape} values for a grid of n={self.grid.n}"
            )
        self.values = vals

    def copy(self) -> "RadialField":
        return RadialField(grid=self.grid, values=self.values.copy())


def make_grid(rmax: float, n: int, N: int = 3) -> RadialGrid:
    """Build the cell-centered grid and precompute the flux-form Laplacian."""
    if not np.isfinite(rmax) or rmax <= 0:
        raise BadGridSpec(f"rmax={rmax} must be positive and finite")
    if int(n) != n or n < 4:
        raise BadGridSpec(f"n={n} is too small for the derivative stencils (need n >= 4)")
    if int(N) != N or N < 3:
        raise BadGridSpec(f"dimension N={N} must be an integer >= 3")
    n, N = int(n), int(N)
    h = rmax / n
    r = (np.arange(n) + 0.5) * h
    omega = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    w = omega * r ** (N - 1) * h
    faces = np.arange(n + 1) * h

    # flux through interior face j: f_j^{N-1} (u_j - u_{j-1}) / h; face 0 carries none
    coup = faces[1:-1] ** (N - 1) / h                  # length n-1
    vol = r ** (N - 1) * h
    main = np.zeros(n)
    main[:-1] -= coup
    main[1:] -= coup
    main[-1] -= 2.0 * faces[-1] ** (N - 1) / h         # Dirichlet at half-cell distance
    lap_main = main / vol
    lap_upper = coup / vol[:-1]
    lap_lower = coup / vol[1:]
    wface = omega * faces[1:-1] ** (N - 1) * h
    bface = 2.0 * omega * faces[-1] ** (N - 1) / h
    return RadialGrid(
        rmax=float(rmax), n=n, N=N, h=h, r=r, w=w, faces=faces,
        wface=wface, bface=bface,
        lap_main=lap_main, lap_upper=lap_upper, lap_lower=lap_lower,
    )


def _check(u: RadialField, g: RadialGrid | None = None) -> None:
    if g is not None and u.grid != g:
        raise GridMismatch("field grid differs from the expected grid")
    if u.values.shape != (u.grid.n,):
        raise LengthMismatch("field length does not match its grid")


def integrate(values: np.ndarray, g: RadialGrid) -> float:
    """Midpoint quadrature sum w_j f_j over the ball."""
    values = np.asarray(values)
    if values.shape != (g.n,):
        raise LengthMismatch(f"got {values.shape} values for n={g.n}")
    return float(np.sum(g.w * values))


def lebesgue_norm(u: RadialField, q: float) -> float:
    """||u||_{L^q} by midpoint quadrature."""
    return integrate(np.abs(u.values) ** q, u.grid) ** (1.0 / q)


def radial_derivative(u: RadialField) -> np.ndarray:
    """Node-centered second-order d/dr: central interior, one-sided at both ends.

    No even reflection is assumed at r=0; the first node uses the same
    one-sided stencil as the last so the operator is profile-agnostic.
    """
    v = u.values
    h = u.grid.h
    if u.grid.n < 3:
        raise BadGridSpec("derivative stencil needs at least 3 nodes")
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return d


def apply_laplacian(u: RadialField) -> np.ndarray:
    """Flux-form radial Laplacian; zero flux at r=0, Dirichlet u(rmax)=0."""
    g = u.grid
    v = u.values
    out = g.lap_main * v
    out[:-1] += g.lap_upper * v[1:]
    out[1:] += g.lap_lower * v[:-1]
    return out


def grad_norm_sq(u: RadialField) -> float:
    """Dirichlet form <-L u, u>_w: face-staggered |du/dr|^2 plus boundary term."""
    g = u.grid
    v = u.values
    d2 = np.abs(v[1:] - v[:-1]) ** 2
    return float(np.sum(g.wface * d2) / g.h ** 2 + g.bface * np.abs(v[-1]) ** 2)


def weighted_potential(u: RadialField, p, region: tuple[float, float] | None = None) -> float:
    """integrate(r^{-b} |u|^{2 sigma + 2}) over the region (full ball if None)."""
    g = u.grid
    dens = g.r ** (-p.b) * np.abs(u.values) ** (2.0 * p.sigma + 2.0)
    if region is None:
        return float(np.sum(g.w * dens))
    rlo, rhi = region
    if not (0.0 <= rlo < rhi <= g.rmax):
        raise BadRegion(f"region ({rlo}, {rhi}) must satisfy 0 <= rlo < rhi <= rmax={g.rmax}")
    mask = (g.r >= rlo) & (g.r < rhi)
    return float(np.sum(g.w[mask] * dens[mask]))


# ----------------------------------------------------------------------
# spectral cache: dense eigendecomposition of -L in the weighted metric
# ----------------------------------------------------------------------

@dataclass
class SpectralCache:
    """Eigenpairs of -L, W-orthonormal: columns of modes are W^{1/2}-rotated."""

    grid: RadialGrid
    eigenvalues: np.ndarray   # ascending, >= 0
    modes: np.ndarray         # orthonormal eigenvectors of the symmetrized matrix
    sqrt_w: np.ndarray

    def coefficients(self, u: RadialField) -> np.ndarray:
        _check(u, self.grid)
        v = self.sqrt_w * u.values
        if np.iscomplexobj(v):
            # stacked real gemm; a complex matvec would promote the whole
            # modes matrix to complex128 on every call
            parts = self.modes.T @ np.column_stack((v.real, v.imag))
            return parts[:, 0] + 1j * parts[:, 1]
        return self.modes.T @ v


def build_spectral_cache(g: RadialGrid) -> SpectralCache:
    """Symmetrize -L by W^{1/2} (.) W^{-1/2} and take the full eigensystem."""
    if g.n > SPECTRAL_MAX_N:
        raise TooLargeForSpectral(f"n={g.n} exceeds the dense-eigensolve cap {SPECTRAL_MAX_N}")
    # B_{j,j+1} = -f_{j+1}^{N-1} / (h^2 (r_j r_{j+1})^{(N-1)/2}) is symmetric by inspection
    from scipy.linalg import eigh_tridiagonal

    off = -g.lap_upper * np.sqrt(g.w[:-1] / g.w[1:])
    lam, Q = eigh_tridiagonal(-g.lap_main, off)
    lam = np.clip(lam, 0.0, None)  # clip rounding-level negatives; -L is PD
    return SpectralCache(grid=g, eigenvalues=lam, modes=Q, sqrt_w=np.sqrt(g.w))


def hsc_norm_sq(u: RadialField, s: float, cache: SpectralCache) -> float:
    """Squared homogeneous Sobolev norm sum lambda_k^s |c_k|^2, s in [0, 1]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    if cache.grid != u.grid:
        raise GridMismatch("spectral cache was built on a different grid")
    c2 = np.abs(cache.coefficients(u)) ** 2
    if s == 0.0:
        return float(np.sum(c2))
    return float(np.sum(cache.eigenvalues ** s * c2))
