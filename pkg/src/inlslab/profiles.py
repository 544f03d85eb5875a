"""Initial data constructors on a radial grid."""

from __future__ import annotations

import numpy as np

from .grid import RadialField, RadialGrid

__all__ = ["gaussian_profile", "ring_profile", "random_family", "profile_from_spec"]


def gaussian_profile(g: RadialGrid, amplitude: float, width: float) -> RadialField:
    if not (width > 0.0):
        raise ValueError(f"width must be positive, got {width}")
    vals = amplitude * np.exp(-((g.r / width) ** 2))
    return RadialField(grid=g, values=vals.astype(complex))


def ring_profile(g: RadialGrid, amplitude: float, width: float, center: float) -> RadialField:
    if not (width > 0.0):
        raise ValueError(f"width must be positive, got {width}")
    if center < 0.0:
        raise ValueError(f"center must be nonnegative, got {center}")
    vals = amplitude * np.exp(-(((g.r - center) / width) ** 2))
    return RadialField(grid=g, values=vals.astype(complex))


def random_family(g: RadialGrid, count: int, seed: int = 0) -> list[RadialField]:
    """count superpositions of 1..5 Gaussian bumps with randomized placement.

    amplitudes ~ U(0.1, 10), widths ~ U(0.25, 4), centers ~ U(0, 8); the
    first bump of each profile is centered at the origin so every member
    keeps a genuine radial core.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        ncomp = int(rng.integers(1, 6))
        vals = np.zeros(g.n)
        for k in range(ncomp):
            amp = rng.uniform(0.1, 10.0)
            width = rng.uniform(0.25, 4.0)
            center = 0.0 if k == 0 else rng.uniform(0.0, 8.0)
            vals = vals + amp * np.exp(-(((g.r - center) / width) ** 2))
        out.append(RadialField(grid=g, values=vals.astype(complex)))
    return out


def profile_from_spec(g: RadialGrid, spec: dict) -> RadialField:
    """Build a field from a config mapping like {"kind": "gaussian", ...}."""
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        return gaussian_profile(g, float(spec.get("amplitude", 0.5)),
                                float(spec.get("width", 1.0)))
    if kind == "ring":
        return ring_profile(g, float(spec.get("amplitude", 0.5)),
                            float(spec.get("width", 1.0)),
                            float(spec.get("center", 4.0)))
    if kind == "file":
        from .fieldio import read_field_csv
        u = read_field_csv(spec["path"])
        if u.grid != g:
            raise ValueError(
                f"profile file grid (rmax={u.grid.rmax}, n={u.grid.n}) does not "
                f"match the run grid (rmax={g.rmax}, n={g.n})")
        return u
    raise ValueError(f"unknown profile kind {kind!r}")
