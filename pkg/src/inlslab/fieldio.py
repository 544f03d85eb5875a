"""Field serialization: CSV with columns r, re, im.

repr() floats round-trip exactly, so write -> read is bit-faithful.
"""

from __future__ import annotations

import numpy as np

from .grid import RadialField, RadialGrid, make_grid

__all__ = ["write_field_csv", "read_field_csv"]


def write_field_csv(u: RadialField, path) -> None:
    with open(path, "w") as f:
        f.write("r,re,im\n")
        for r, v in zip(u.grid.r, u.values):
            f.write(f"{r!r},{v.real!r},{v.imag!r}\n")


def read_field_csv(path, g: RadialGrid | None = None, N: int = 3) -> RadialField:
    """Load a field written by write_field_csv.

    With g the nodes must match that grid; without it the grid is
    reconstructed from the radii (cell-centered: h = 2 r_0) using N.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"expected 3 columns (r, re, im), got {data.shape[1]}")
    r = data[:, 0]
    if g is None:
        n = r.size
        h = 2.0 * r[0]
        g = make_grid(n * h, n, N)
    if r.size != g.n or not np.allclose(r, g.r, rtol=0.0, atol=1e-9 * g.h):
        raise ValueError("radii in file do not match the target grid nodes")
    return RadialField(grid=g, values=data[:, 1] + 1j * data[:, 2])
