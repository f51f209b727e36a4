"""Vectorial back-focal-plane field of a dipole emitter.

The field of a dipole at object position ``x_o`` (along x) is
``exp(-i k1 x x_o) G(r, phi) . mu`` on the pupil disk and zero outside. Only the
two transverse components are stored; the axial row of ``G`` vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DipoleOrientation, OpticalConfig, PupilGrid, pupil_grid


@dataclass(frozen=True, eq=False)
class PupilField:
    """Two-component complex field sampled on a :class:`PupilGrid`."""

    ex: np.ndarray
    ey: np.ndarray
    grid: PupilGrid = field(repr=False)

    def __add__(self, other: "PupilField") -> "PupilField":
        return PupilField(self.ex + other.ex, self.ey + other.ey, self.grid)

    def __mul__(self, scalar) -> "PupilField":
        return PupilField(scalar * self.ex, scalar * self.ey, self.grid)

    __rmul__ = __mul__

    def power(self) -> float:
        """Discrete L2 norm squared, sum |E|^2 dA."""
        g = self.grid
        return float((np.sum(np.abs(self.ex) ** 2) + np.sum(np.abs(self.ey) ** 2)) * g.cell_area)

    def components(self) -> np.ndarray:
        return np.stack([self.ex, self.ey])


def dipole_unit_vector(orientation: DipoleOrientation) -> np.ndarray:
    return orientation.unit_vector()


def _green_xy(x, y):
    """Transverse Green's tensor entries from Cartesian pupil coordinates.

    Returns ``(gxx, gxy, gyy, gxz, gyz)``; ``gyx == gxy``. Written with
    ``1 - cos^2 + cos^2 s = 1 - x^2/(1+s)`` so the expressions are regular at
    the axis and exactly even/odd under coordinate sign flips.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    if np.any(r2 >= 1.0):
        raise ValueError("Green's tensor requires r < 1")
    s = np.sqrt(1.0 - r2)
    apod = 1.0 / np.sqrt(s)
    inv = 1.0 / (1.0 + s)
    gxx = (1.0 - x * x * inv) * apod
    gyy = (1.0 - y * y * inv) * apod
    gxy = -(x * y * inv) * apod
    gxz = -x * apod
    gyz = -y * apod
    return gxx, gxy, gyy, gxz, gyz


def green_tensor(r, phi) -> np.ndarray:
    """Green's tensor G(r, phi) with unit prefactor, shape ``(..., 3, 3)``.

    Raises ``ValueError`` for ``r >= 1``.
    """
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(r >= 1.0) or np.any(r < 0.0):
        raise ValueError("Green's tensor requires 0 <= r < 1")
    c, sn = np.cos(phi), np.sin(phi)
    s = np.sqrt(1.0 - r * r)
    apod = (1.0 - r * r) ** -0.25
    shape = np.broadcast(r, phi).shape
    g = np.zeros(shape + (3, 3))
    g[..., 0, 0] = (sn**2 + c**2 * s) * apod
    g[..., 0, 1] = np.sin(2 * phi) * (s - 1.0) / 2.0 * apod
    g[..., 0, 2] = -r * c * apod
    g[..., 1, 0] = g[..., 0, 1]
    g[..., 1, 1] = (c**2 + sn**2 * s) * apod
    g[..., 1, 2] = -r * sn * apod
    return g


def _transverse_field(grid: PupilGrid, mu: np.ndarray):
    x = np.where(grid.mask, grid.x, 0.0)
    y = np.where(grid.mask, grid.y, 0.0)
    gxx, gxy, gyy, gxz, gyz = _green_xy(x, y)
    ex = gxx * mu[0] + gxy * mu[1] + gxz * mu[2]
    ey = gxy * mu[0] + gyy * mu[1] + gyz * mu[2]
    return np.where(grid.mask, ex, 0.0), np.where(grid.mask, ey, 0.0)


def bfp_field(cfg: OpticalConfig, orientation: DipoleOrientation, x_offset: float) -> PupilField:
    """Pupil field of a dipole displaced by ``x_offset`` nm along x."""
    grid = pupil_grid(cfg)
    ex, ey = _transverse_field(grid, orientation.unit_vector())
    phase = np.exp(-1j * cfg.wavenumber * x_offset * grid.x)
    return PupilField(phase * ex, phase * ey, grid)


def bfp_field_l_derivative(
    cfg: OpticalConfig, orientation: DipoleOrientation, separation: float, sign: int
) -> PupilField:
    """Derivative with respect to separation of the field at ``sign * l/2``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    f = bfp_field(cfg, orientation, sign * separation / 2.0)
    factor = -1j * sign * cfg.wavenumber * f.grid.x / 2.0
    return PupilField(factor * f.ex, factor * f.ey, f.grid)


def origin_split_angle(fld: PupilField) -> float:
    """Azimuth assigned to the on-axis sample in the radial/azimuthal split.

    The vortex plate is singular on the axis; the axial sample is routed
    entirely into the radial channel along its own polarization direction.
    """
    c = fld.grid.center
    ex, ey = fld.ex[c, c], fld.ey[c, c]
    a = abs(ex) ** 2 - abs(ey) ** 2
    b = 2.0 * (ex.conjugate() * ey).real
    if a == 0.0 and b == 0.0:
        return 0.0
    return 0.5 * math.atan2(b, a)


def jones_vortex(x, y, origin_angle: float = 0.0):
    """Vortex half-wave-plate Jones entries ``(cos phi, sin phi)`` per sample.

    The plate matrix is ``[[c, s], [s, -c]]``.
    """
    r = np.hypot(x, y)
    on_axis = r == 0.0
    safe = np.where(on_axis, 1.0, r)
    c = np.where(on_axis, math.cos(origin_angle), x / safe)
    s = np.where(on_axis, math.sin(origin_angle), y / safe)
    return c, s


def radial_azimuthal_split(fld: PupilField, origin_angle: float | None = None):
    """Split a pupil field into radially and azimuthally polarized scalars.

    Applies the vortex plate then a polarizing beam splitter: the x output
    carries the originally radial light, the y output the azimuthal light.
    ``origin_angle`` fixes the axial sample's treatment; by default it is
    taken from ``fld`` itself (pass it explicitly when splitting a derivative
    field so both use the same plate).
    """
    if origin_angle is None:
        origin_angle = origin_split_angle(fld)
    g = fld.grid
    c, s = jones_vortex(g.x, g.y, origin_angle)
    e_rad = c * fld.ex + s * fld.ey
    e_azi = s * fld.ex - c * fld.ey
    return e_rad, e_azi


def collection_efficiency_ratio(cfg: OpticalConfig, method: str = "polar", nodes: int = 256) -> float:
    """Collection ratio of an axial to a transverse dipole (``zeta``).

    Ratio of r^2-weighted (dr dphi) pupil integrals of the z and x columns of
    the Green's tensor. ``method="polar"`` uses Gauss-Legendre in r with the
    azimuth integrated in closed form; ``method="grid"`` uses the masked
    midpoint rule on the pupil grid.
    """
    R = cfg.pupil_radius
    if method == "polar":
        t, w = np.polynomial.legendre.leggauss(nodes)
        r = 0.5 * R * (t + 1.0)
        w = 0.5 * R * w
        s = np.sqrt(1.0 - r * r)
        # azimuthal averages of cos^4, sin^4, sin^2 cos^2 are 3/8, 3/8, 1/8
        num = 2 * math.pi * r**2 / s
        den = 2 * math.pi * ((3 / 8) * (1 + s * s) + (1 / 4) * s + (1 / 8) * (s - 1) ** 2) / s
        return float(np.sum(w * r**2 * num) / np.sum(w * r**2 * den))
    if method == "grid":
        grid = pupil_grid(cfg)
        x = np.where(grid.mask, grid.x, 0.0)
        y = np.where(grid.mask, grid.y, 0.0)
        gxx, gxy, _, gxz, gyz = _green_xy(x, y)
        # r^2 dr dphi == r dx dy
        wgt = np.where(grid.mask, grid.r, 0.0)
        num = np.sum(wgt * (gxz**2 + gyz**2))
        den = np.sum(wgt * (gxx**2 + gxy**2))
        return float(num / den)
    raise ValueError(f"unknown method {method!r}")
