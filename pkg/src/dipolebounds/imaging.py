"""Detector-plane probability densities for direct imaging and the III variants.

The tube lens is a scaled Fourier transform evaluated as a separable matrix
DFT directly onto the requested image grid (object-projected pixel pitch and
field of view from the config), so the pitch does not depend on FFT padding.

Modalities and their channels:

=============  ================================================
``direct``     ``direct``
``iii``        ``iii_out1``, ``iii_out2``
``polarized``  ``r_iii_out1``, ``r_iii_out2``, ``phi_iii_out1``, ``phi_iii_out2``
=============  ================================================

The four polarized channels share one normalization; the radial-only and
azimuthal-only measurements are subsets of it (discarded light still counts as
collected).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import DipoleOrientation, OpticalConfig, pupil_grid
from .field import (
    PupilField,
    bfp_field,
    bfp_field_l_derivative,
    collection_efficiency_ratio,
    origin_split_angle,
    radial_azimuthal_split,
)
from .quantum import ISOTROPIC_ORIENTATIONS, isotropic_weights

CHANNELS = {
    "direct": ("direct",),
    "iii": ("iii_out1", "iii_out2"),
    "polarized": ("r_iii_out1", "r_iii_out2", "phi_iii_out1", "phi_iii_out2"),
}

_BATCH = 8


@dataclass(frozen=True, eq=False)
class DetectorImage:
    density: np.ndarray
    pixel_pitch_object_nm: float
    channel_label: str

    @property
    def pixel_area(self) -> float:
        return self.pixel_pitch_object_nm**2

    def total(self) -> float:
        return float(self.density.sum() * self.pixel_area)


@dataclass(frozen=True, eq=False)
class ImagePair:
    image: DetectorImage
    dimage_dl: np.ndarray

    @property
    def label(self) -> str:
        return self.image.channel_label

    @property
    def density(self) -> np.ndarray:
        return self.image.density


# -- tube lens --------------------------------------------------------------


@lru_cache(maxsize=8)
def _kernel(wavenumber, pupil_axis_key, pixel, side):
    spacing, n = pupil_axis_key
    pupil_axis = (np.arange(n) - n // 2) * spacing
    image_axis = (np.arange(side) - side // 2) * pixel
    k = np.exp(1j * wavenumber * np.outer(image_axis, pupil_axis))
    k.setflags(write=False)
    return k


def _support_slice(cfg: OpticalConfig) -> slice:
    g = pupil_grid(cfg)
    rows = np.nonzero(g.mask.any(axis=1))[0]
    return slice(rows[0], rows[-1] + 1)


def tube_lens_image(fields, cfg: OpticalConfig, pixel: float | None = None, side: int | None = None):
    """Image-plane field(s) of pupil field(s) in object-projected coordinates.

    ``fields`` is a :class:`PupilField` (returns shape ``(2, side, side)``) or
    an array of scalar pupil fields with trailing shape ``(N, N)``. The
    kernel is ``exp(i k1 (x x' + y y'))`` with ``x'`` in object-space nm, and
    the sum is weighted by the pupil cell area.
    """
    if isinstance(fields, PupilField):
        fields = fields.components()
    fields = np.asarray(fields)
    g = pupil_grid(cfg)
    if fields.shape[-2:] != (g.side, g.side):
        raise ValueError("fields are not on the configured pupil grid")
    pixel = cfg.image_pixel_object_nm if pixel is None else pixel
    side = cfg.image_side if side is None else side
    if side > 16385:
        raise ValueError("image grid too large")
    kern = _kernel(cfg.wavenumber, (g.spacing, g.side), pixel, side)
    sl = _support_slice(cfg)
    kern = kern[:, sl]
    lead = fields.shape[:-2]
    flat = fields.reshape((-1, g.side, g.side))[:, sl, sl]
    out = np.empty((flat.shape[0], side, side), dtype=complex)
    for i in range(0, flat.shape[0], _BATCH):
        chunk = flat[i : i + _BATCH]
        out[i : i + _BATCH] = kern @ (chunk @ kern.T)
    return (out * g.cell_area).reshape(lead + (side, side))


# -- interferometer ---------------------------------------------------------


def flip_xy(a):
    """Full inversion (x, y) -> (-x, -y) on the centred grid."""
    return a[..., ::-1, ::-1]


def flip_x(a):
    return a[..., :, ::-1]


def flip_y(a):
    return a[..., ::-1, :]


def iii_fields(a):
    """Output-port pupil fields of the image inversion interferometer.

    Acts on the trailing two (y, x) axes of ``a``; vector components in
    leading axes are transformed independently.
    """
    out1 = 0.5 * (flip_xy(a) - a)
    out2 = 0.5j * (flip_x(a) + flip_y(a))
    return out1, out2


# -- densities --------------------------------------------------------------


def _sources(cfg, orientation, separation):
    """Stacked fields for the sources at +l/2, -l/2 and their l-derivatives."""
    e = [bfp_field(cfg, orientation, s * separation / 2.0) for s in (1, -1)]
    de = [bfp_field_l_derivative(cfg, orientation, separation, s) for s in (1, -1)]
    return e, de


def _channel_pupil_fields(cfg, orientation, separation, modality):
    """Map channel label -> (fields, dfields), each ``(2 sources, comps, N, N)``."""
    e, de = _sources(cfg, orientation, separation)
    vec = np.stack([f.components() for f in e])
    dvec = np.stack([f.components() for f in de])
    if modality == "direct":
        return {"direct": (vec, dvec)}
    if modality == "iii":
        o1, o2 = iii_fields(vec)
        d1, d2 = iii_fields(dvec)
        return {"iii_out1": (o1, d1), "iii_out2": (o2, d2)}
    if modality == "polarized":
        angle = origin_split_angle(e[0])
        split = [radial_azimuthal_split(f, angle) for f in e]
        dsplit = [radial_azimuthal_split(f, angle) for f in de]
        out = {}
        for k, name in enumerate(("r_iii", "phi_iii")):
            s = np.stack([p[k] for p in split])[:, None]
            ds = np.stack([p[k] for p in dsplit])[:, None]
            o1, o2 = iii_fields(s)
            d1, d2 = iii_fields(ds)
            out[f"{name}_out1"] = (o1, d1)
            out[f"{name}_out2"] = (o2, d2)
        return out
    raise ValueError(f"unknown modality {modality!r}")


def _normalize(raw, draw, cfg, labels):
    """Jointly normalize a channel set over the detector field of view."""
    area = cfg.image_pixel_object_nm**2
    z = sum(raw[k].sum() for k in labels) * area
    dz = sum(draw[k].sum() for k in labels) * area
    pairs = []
    for k in labels:
        dens = raw[k] / z
        ddens = draw[k] / z - raw[k] * dz / z**2
        pairs.append(ImagePair(DetectorImage(dens, cfg.image_pixel_object_nm, k), ddens))
    return pairs


def modality_images(
    cfg: OpticalConfig, orientation: DipoleOrientation, separation: float, modality: str
) -> list[ImagePair]:
    """Normalized channel densities and their l-derivatives for one orientation."""
    chan = _channel_pupil_fields(cfg, orientation, separation, modality)
    labels = list(chan)
    stacked = np.stack([chan[k][0] for k in labels] + [chan[k][1] for k in labels])
    img = tube_lens_image(stacked, cfg)
    n = len(labels)
    raw, draw = {}, {}
    for i, k in enumerate(labels):
        a, da = img[i], img[n + i]
        # incoherent sum over the two sources and the polarization components
        raw[k] = 0.5 * np.sum(np.abs(a) ** 2, axis=(0, 1))
        draw[k] = np.sum(np.real(np.conj(a) * da), axis=(0, 1))
    return _normalize(raw, draw, cfg, labels)


def direct_image(cfg, orientation, separation) -> ImagePair:
    return modality_images(cfg, orientation, separation, "direct")[0]


def iii_outputs(cfg, orientation, separation) -> list[ImagePair]:
    return modality_images(cfg, orientation, separation, "iii")


def polarized_iii_images(cfg, orientation, separation) -> list[ImagePair]:
    return modality_images(cfg, orientation, separation, "polarized")


def isotropic_images(cfg: OpticalConfig, separation: float, modality: str, zeta: float | None = None):
    """Weighted (1, 1, zeta) mixture of the x, y and z dipole images."""
    if zeta is None:
        zeta = collection_efficiency_ratio(cfg)
    w = isotropic_weights(zeta)
    acc = None
    for wi, o in zip(w, ISOTROPIC_ORIENTATIONS):
        pairs = modality_images(cfg, o, separation, modality)
        if acc is None:
            acc = [[wi * p.density, wi * p.dimage_dl, p.label] for p in pairs]
        else:
            for a, p in zip(acc, pairs):
                a[0] = a[0] + wi * p.density
                a[1] = a[1] + wi * p.dimage_dl
    return [ImagePair(DetectorImage(d, cfg.image_pixel_object_nm, k), dd) for d, dd, k in acc]


def source_images(cfg: OpticalConfig, source, separation: float, modality: str) -> list[ImagePair]:
    """Channel images for a fixed orientation or ``"isotropic"``."""
    if isinstance(source, DipoleOrientation):
        return modality_images(cfg, source, separation, modality)
    if source == "isotropic":
        return isotropic_images(cfg, separation, modality)
    raise ValueError(f"unknown source {source!r}")


def channel_powers(pairs) -> dict:
    return {p.label: p.image.total() for p in pairs}


# -- export -----------------------------------------------------------------


def write_pfm(path, image) -> None:
    """Write a single-channel little-endian PFM (rows stored bottom to top)."""
    a = np.asarray(image, dtype="<f4")
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.ascontiguousarray(a[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        kind = fh.readline().strip()
        if kind != b"Pf":
            raise ValueError("only single-channel PFM is supported")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(w * h * 4), dtype=dtype)
    return data.reshape(h, w)[::-1].astype(np.float32)


def write_csv_matrix(path, image) -> None:
    np.savetxt(path, np.asarray(image), delimiter=",", fmt="%.12g")


def image_filename(modality: str, channel: str, source, separation: float, ext: str) -> str:
    if isinstance(source, DipoleOrientation):
        tag = f"theta{source.theta:.6f}_phi{source.phi:.6f}"
    else:
        tag = str(source)
    return f"{modality}_{channel}_{tag}_l{separation:.4f}nm.{ext}"
