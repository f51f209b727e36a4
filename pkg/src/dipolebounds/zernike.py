"""Zernike modes on the pupil disk and projection of pupil fields onto them.

Modes are ordered by radial order ``n`` then ``m`` ascending. On the sampled
grid they are orthonormalized (Gram-Schmidt in that order, via a sign-fixed
QR factorization) with respect to the discrete inner product
``<f, g> = sum conj(f) g dA``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .config import OpticalConfig, PupilGrid, _build_grid, pupil_grid
from .field import PupilField


def _check_index(n: int, m: int):
    if n < 0 or abs(m) > n or (n - abs(m)) % 2:
        raise ValueError(f"invalid Zernike index (n={n}, m={m})")


def zernike_indices(n_max: int) -> list[tuple[int, int]]:
    return [(n, m) for n in range(n_max + 1) for m in range(-n, n + 1, 2)]


def zernike_radial(n: int, m: int, u):
    """Radial polynomial R_n^m(u), zero for u > 1."""
    _check_index(n, m)
    m = abs(m)
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for k in range((n - m) // 2 + 1):
        coef = (-1) ** k * factorial(n - k) / (
            factorial(k) * factorial((n + m) // 2 - k) * factorial((n - m) // 2 - k)
        )
        out = out + coef * u ** (n - 2 * k)
    out = np.where(u <= 1.0, out, 0.0)
    return out if out.ndim else float(out)


def zernike_eval(n: int, m: int, r, phi, pupil_radius: float):
    """Z_n^m at pupil radius ``r`` (unitless, support ``r <= pupil_radius``)."""
    u = np.asarray(r, dtype=float) / pupil_radius
    radial = zernike_radial(n, m, u)
    ang = np.cos(m * np.asarray(phi)) if m >= 0 else np.sin(-m * np.asarray(phi))
    return radial * ang


@dataclass(frozen=True, eq=False)
class ZernikeBasis:
    """Discretely orthonormalized Zernike modes on one pupil grid.

    ``modes`` has shape ``(B, n_support)`` and holds mode values on the
    in-support samples only (row-major order of ``grid.mask``).
    """

    n_max: int
    indices: tuple
    grid: PupilGrid = field(repr=False)
    modes: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.indices)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Inner products of each mode with a scalar field on the grid."""
        v = values[self.grid.mask]
        return (self.modes @ v) * self.grid.cell_area

    def synthesize(self, coefficients: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.mask.shape, dtype=complex)
        out[self.grid.mask] = coefficients @ self.modes
        return out

    def gram(self) -> np.ndarray:
        return self.modes @ self.modes.T * self.grid.cell_area


@lru_cache(maxsize=8)
def _basis(side, radius, fill, n_max) -> ZernikeBasis:
    cfg_grid = _build_grid(side, radius, fill)
    idx = zernike_indices(n_max)
    m = cfg_grid.mask
    r = cfg_grid.r[m]
    phi = np.arctan2(cfg_grid.y[m], cfg_grid.x[m])
    raw = np.stack([zernike_eval(n, mm, r, phi, radius) for n, mm in idx], axis=1)
    q, rr = np.linalg.qr(raw * np.sqrt(cfg_grid.cell_area))
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    modes = (q * signs).T / np.sqrt(cfg_grid.cell_area)
    modes.setflags(write=False)
    return ZernikeBasis(n_max, tuple(idx), cfg_grid, modes)


def zernike_basis(cfg: OpticalConfig, n_max: int | None = None) -> ZernikeBasis:
    if n_max is None:
        n_max = cfg.zernike_order
    g = pupil_grid(cfg)
    if len(zernike_indices(n_max)) > int(g.mask.sum()):
        raise ValueError("more Zernike modes than pupil samples")
    return _basis(cfg.pupil_grid_side, cfg.pupil_radius, cfg.support_fill, n_max)


@dataclass(frozen=True, eq=False)
class ModalState:
    """Coefficients of a one-photon state: x-polarization block then y block.

    ``norm`` is the Euclidean norm the coefficients had before normalization
    (equal to 1 for unnormalized projections that were left as is).
    """

    coefficients: np.ndarray
    norm: float = 1.0

    def __len__(self):
        return len(self.coefficients)

    def normalized(self) -> "ModalState":
        nrm = float(np.linalg.norm(self.coefficients))
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        return ModalState(self.coefficients / nrm, nrm)


def project_field(fld: PupilField, basis: ZernikeBasis) -> ModalState:
    """Project both polarization components of ``fld`` onto ``basis``.

    The result is not normalized; ``ModalState.norm`` is its Euclidean norm.
    """
    if fld.grid is not basis.grid and fld.grid.side != basis.grid.side:
        raise ValueError("field and basis live on different grids")
    c = np.concatenate([basis.project(fld.ex), basis.project(fld.ey)])
    return ModalState(c, float(np.linalg.norm(c)))


def normalized_state_and_derivative(c: np.ndarray, dc: np.ndarray):
    """Normalize ``c`` and carry its derivative ``dc`` through the normalization.

    Returns ``(psi, dpsi)`` with ``psi = c/|c|`` and ``dpsi`` its exact
    derivative, so that ``Re <psi|dpsi> = 0``.
    """
    nrm = np.linalg.norm(c)
    psi = c / nrm
    dpsi = dc / nrm - psi * np.real(np.vdot(psi, dc)) / nrm
    return psi, dpsi
