"""Optical configuration, dipole orientation and the sampled pupil grid."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class OpticalConfig:
    """Microscope and discretization settings.

    Lengths are in nm. ``pupil_grid_side`` is the number of back-focal-plane
    samples per side; the pupil disk covers ``support_fill`` of the grid area.
    """

    numerical_aperture: float = 1.45
    immersion_index: float = 1.518
    vacuum_wavelength: float = 670.0
    magnification: float = 100.0
    pupil_grid_side: int = 2049
    support_fill: float = 0.60
    image_pixel_object_nm: float = 5.0
    image_fov_nm: float = 4000.0
    zernike_order: int = 8

    def __post_init__(self):
        if not self.numerical_aperture > 0:
            raise ValueError("numerical_aperture must be positive")
        if not self.numerical_aperture < self.immersion_index:
            raise ValueError("numerical_aperture must be below immersion_index")
        if self.pupil_grid_side < 3 or self.pupil_grid_side % 2 == 0:
            raise ValueError("pupil_grid_side must be an odd integer >= 3")
        if not 0.0 < self.support_fill < 1.0:
            raise ValueError("support_fill must lie in (0, 1)")
        if not self.vacuum_wavelength > 0:
            raise ValueError("vacuum_wavelength must be positive")
        if not self.image_pixel_object_nm > 0 or not self.image_fov_nm > 0:
            raise ValueError("image sampling must be positive")
        if self.zernike_order < 0:
            raise ValueError("zernike_order must be nonnegative")

    @property
    def wavenumber(self) -> float:
        """Wavenumber in the immersion medium, rad/nm."""
        return 2.0 * math.pi * self.immersion_index / self.vacuum_wavelength

    @property
    def pupil_radius(self) -> float:
        """Unitless pupil radius NA/n1."""
        return self.numerical_aperture / self.immersion_index

    @property
    def image_side(self) -> int:
        """Odd number of image pixels per side covering the field of view."""
        half = int(round(0.5 * self.image_fov_nm / self.image_pixel_object_nm))
        return 2 * max(half, 1) + 1

    def replace(self, **changes) -> "OpticalConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


#: Full-resolution defaults (2049-sample pupil grid).
FULL = OpticalConfig()
#: Same optics on a coarser pupil grid for desk-scale runs.
DESK = OpticalConfig(pupil_grid_side=513)

PROFILES = {"full": FULL, "desk": DESK}


@dataclass(frozen=True)
class DipoleOrientation:
    """Polar (theta) and azimuthal (phi) dipole angles in radians.

    ``phi`` is meaningless for a dipole along the optical axis and is set to
    zero there.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("orientation angles must be finite")
        if self.theta == 0.0 and self.phi != 0.0:
            object.__setattr__(self, "phi", 0.0)

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )


X_DIPOLE = DipoleOrientation(math.pi / 2, 0.0)
Y_DIPOLE = DipoleOrientation(math.pi / 2, math.pi / 2)
Z_DIPOLE = DipoleOrientation(0.0)


@dataclass(frozen=True, eq=False)
class PupilGrid:
    """Square back-focal-plane sampling centred on the optical axis.

    Coordinates are the unitless pupil coordinates ``x = r cos(phi)``,
    ``y = r sin(phi)``; arrays are indexed ``[iy, ix]``.
    """

    side: int
    spacing: float
    radius: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing

    @property
    def center(self) -> int:
        return self.side // 2

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.side) - self.center) * self.spacing


@lru_cache(maxsize=16)
def _build_grid(side: int, radius: float, fill: float) -> PupilGrid:
    spacing = radius * math.sqrt(math.pi / fill) / side
    axis = (np.arange(side) - side // 2) * spacing
    y, x = np.meshgrid(axis, axis, indexing="ij")
    r = np.hypot(x, y)
    mask = r <= radius
    for a in (x, y, r, mask):
        a.setflags(write=False)
    return PupilGrid(side, spacing, radius, x, y, r, mask)


def pupil_grid(cfg: OpticalConfig) -> PupilGrid:
    """Return the (cached, read-only) pupil grid for ``cfg``."""
    return _build_grid(cfg.pupil_grid_side, cfg.pupil_radius, cfg.support_fill)


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into OpticalConfig keyword overrides.

    Blank lines and ``#`` comments are ignored. A ``profile`` key selects the
    base profile and is returned unchanged.
    """
    fields = {f.name: f.type for f in dataclasses.fields(OpticalConfig)}
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "profile":
                out[key] = value
            elif key in fields:
                out[key] = int(value) if fields[key] in ("int", int) else float(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def make_config(profile: str = "desk", **overrides) -> OpticalConfig:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return PROFILES[profile].replace(**overrides)
