"""Classical Fisher information of detector images and the associated CRB."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import OpticalConfig
from .imaging import ImagePair, source_images

EPS_FLOOR = 1e-12

#: measurement -> (image modality, channels contributing)
MODALITIES = {
    "direct": ("direct", ("direct",)),
    "iii": ("iii", ("iii_out1", "iii_out2")),
    "r_iii": ("polarized", ("r_iii_out1", "r_iii_out2")),
    "phi_iii": ("polarized", ("phi_iii_out1", "phi_iii_out2")),
    "rphi_iii": ("polarized", ("r_iii_out1", "r_iii_out2", "phi_iii_out1", "phi_iii_out2")),
}


@dataclass(frozen=True)
class FisherBreakdown:
    modality: str
    per_channel: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.per_channel.values()))


def fisher_information(pair: ImagePair, eps: float = EPS_FLOOR, reference: float | None = None) -> float:
    """Per-photon FI (nm^-2) of one channel: sum (dI/dl)^2 / I over pixels.

    Pixels with ``I < eps * reference`` are skipped, ``reference`` defaulting
    to the channel maximum.
    """
    dens = pair.density
    if np.any(dens < 0):
        raise ValueError("density must be nonnegative")
    ref = dens.max() if reference is None else reference
    keep = dens >= eps * ref
    keep &= dens > 0
    fi = np.sum(pair.dimage_dl[keep] ** 2 / dens[keep]) * pair.image.pixel_area
    return float(fi)


def channel_fisher(pairs, eps: float = EPS_FLOOR) -> dict:
    """FI per channel with the intensity floor set by the brightest channel."""
    ref = max(float(p.density.max()) for p in pairs)
    return {p.label: fisher_information(p, eps, ref) for p in pairs}


def fisher_for_modalities(cfg: OpticalConfig, source, separation: float, modalities) -> dict:
    """FisherBreakdown per measurement, simulating each image modality once."""
    needed = {}
    for m in modalities:
        if m not in MODALITIES:
            raise ValueError(f"unknown modality {m!r}")
        needed.setdefault(MODALITIES[m][0], None)
    per_channel = {}
    for img_mod in needed:
        per_channel.update(channel_fisher(source_images(cfg, source, separation, img_mod)))
    return {m: FisherBreakdown(m, {c: per_channel[c] for c in MODALITIES[m][1]}) for m in modalities}


def modality_fisher(cfg: OpticalConfig, source, separation: float, modality: str) -> FisherBreakdown:
    return fisher_for_modalities(cfg, source, separation, [modality])[modality]


def crb(fi: float) -> float:
    """Variance bound 1/FI; infinite when the FI vanishes."""
    if fi < 0:
        raise ValueError("Fisher information cannot be negative")
    return np.inf if fi == 0 else 1.0 / fi
